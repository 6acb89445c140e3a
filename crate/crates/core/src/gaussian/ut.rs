use nalgebra::{SMatrix, SVector};

use crate::error::{MttError, Result};
use crate::linalg::{robust_cholesky, symmetrize};

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianBelief<const D: usize> {
    pub mean: SVector<f64, D>,
    pub cov: SMatrix<f64, D, D>,
}

impl<const D: usize> GaussianBelief<D> {
    pub fn new(mean: SVector<f64, D>, cov: SMatrix<f64, D, D>) -> Self {
        GaussianBelief { mean, cov: symmetrize(&cov) }
    }
}

/// `2d + 1` weighted points matching a belief's first two moments.
#[derive(Clone, Debug)]
pub struct SigmaPointSet<const D: usize> {
    pub points: Vec<SVector<f64, D>>,
    pub w_mean: Vec<f64>,
    pub w_cov: Vec<f64>,
    pub c: f64,
}

/// Default scaling `c = d + κ` with `κ = 3 − d`.
pub const DEFAULT_UT_SCALE: f64 = 3.0;

pub fn sigma_points<const D: usize>(belief: &GaussianBelief<D>, c: f64) -> Result<SigmaPointSet<D>> {
    if !(c > 0.0) {
        return Err(MttError::InvalidParams(format!("unscented scaling must be positive, got {c}")));
    }
    let chol = robust_cholesky(&(belief.cov * c))?;
    let l = chol.l();
    let kappa = c - D as f64;
    let mut points = Vec::with_capacity(2 * D + 1);
    points.push(belief.mean);
    for i in 0..D {
        points.push(belief.mean + l.column(i));
    }
    for i in 0..D {
        points.push(belief.mean - l.column(i));
    }
    let mut w = vec![1.0 / (2.0 * c); 2 * D + 1];
    w[0] = kappa / c;
    Ok(SigmaPointSet { points, w_cov: w.clone(), w_mean: w, c })
}

/// Propagates a belief through `g` with the unscented transform.
pub fn unscented_transform<const D: usize, const M: usize>(
    belief: &GaussianBelief<D>,
    g: impl Fn(&SVector<f64, D>) -> SVector<f64, M>,
    c: f64,
) -> Result<GaussianBelief<M>> {
    let sp = sigma_points(belief, c)?;
    let ys: Vec<SVector<f64, M>> = sp.points.iter().map(&g).collect();
    let mean = ys.iter().zip(&sp.w_mean).fold(SVector::<f64, M>::zeros(), |acc, (y, w)| acc + y * *w);
    let cov = ys.iter().zip(&sp.w_cov).fold(SMatrix::<f64, M, M>::zeros(), |acc, (y, w)| {
        let d = y - mean;
        acc + d * d.transpose() * *w
    });
    Ok(GaussianBelief::new(mean, cov))
}
