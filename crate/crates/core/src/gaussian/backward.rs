//! Backward sampling through forward-filtered Gaussian beliefs.

use nalgebra::{Cholesky, Const, SMatrix, SVector};
use rand::Rng;

use crate::error::{MttError, Result};
use crate::gaussian::ut::GaussianBelief;
use crate::linalg::{mvn_log_density_chol, mvn_sample, robust_cholesky, symmetrize};

type Conditional<const D: usize> = (SVector<f64, D>, Cholesky<f64, Const<D>>);

/// `p(x_t | x_{t+1}, y_{1:t}) ∝ f(x_{t+1} | x_t) N(x_t; m, P)`.
fn backward_kernel<const D: usize>(
    b: &GaussianBelief<D>,
    f: &SMatrix<f64, D, D>,
    q: &SMatrix<f64, D, D>,
    next: &SVector<f64, D>,
) -> Result<Conditional<D>> {
    let fp = f * b.cov;
    let pred = symmetrize(&(fp * f.transpose() + q));
    let pc = robust_cholesky(&pred)?;
    let jt = pc.solve(&fp);
    let mean = b.mean + jt.transpose() * (next - f * b.mean);
    let cov = symmetrize(&(b.cov - jt.transpose() * fp));
    Ok((mean, robust_cholesky(&cov)?))
}

fn step_distribution<const D: usize>(
    filtered: &[GaussianBelief<D>],
    i: usize,
    f: &SMatrix<f64, D, D>,
    q: &SMatrix<f64, D, D>,
    next: Option<&SVector<f64, D>>,
) -> Result<Conditional<D>> {
    match next {
        Some(x) => backward_kernel(&filtered[i], f, q, x),
        None => Ok((filtered[i].mean, robust_cholesky(&filtered[i].cov)?)),
    }
}

/// Draws a path from the Gaussian smoothing distribution implied by
/// `filtered`, optionally conditioning on a known state `after` the last
/// scan. Returns the path and its exact log proposal density.
pub fn gaussian_backward_sample<const D: usize, R: Rng + ?Sized>(
    filtered: &[GaussianBelief<D>],
    f: &SMatrix<f64, D, D>,
    q: &SMatrix<f64, D, D>,
    after: Option<&SVector<f64, D>>,
    rng: &mut R,
) -> Result<(Vec<SVector<f64, D>>, f64)> {
    let len = filtered.len();
    if len == 0 {
        return Err(MttError::Validation("backward sampling needs at least one belief".into()));
    }
    let mut path = vec![SVector::<f64, D>::zeros(); len];
    let mut log_q = 0.0;
    for i in (0..len).rev() {
        let next = if i + 1 < len { Some(path[i + 1]) } else { after.copied() };
        let (mean, chol) = step_distribution(filtered, i, f, q, next.as_ref())?;
        let x = mvn_sample(&mean, &chol, rng);
        log_q += mvn_log_density_chol(&(x - mean), &chol);
        path[i] = x;
    }
    Ok((path, log_q))
}

/// Log density of `path` under [`gaussian_backward_sample`].
pub fn gaussian_backward_log_density<const D: usize>(
    filtered: &[GaussianBelief<D>],
    f: &SMatrix<f64, D, D>,
    q: &SMatrix<f64, D, D>,
    after: Option<&SVector<f64, D>>,
    path: &[SVector<f64, D>],
) -> Result<f64> {
    let len = filtered.len();
    if path.len() != len || len == 0 {
        return Err(MttError::Validation(format!(
            "path has {} states but {} beliefs were supplied",
            path.len(),
            len
        )));
    }
    let mut log_q = 0.0;
    for i in (0..len).rev() {
        let next = if i + 1 < len { Some(&path[i + 1]) } else { after };
        let (mean, chol) = step_distribution(filtered, i, f, q, next)?;
        log_q += mvn_log_density_chol(&(path[i] - mean), &chol);
    }
    Ok(log_q)
}
