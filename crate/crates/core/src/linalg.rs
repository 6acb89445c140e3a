//! Small dense helpers shared by the filters and samplers.

use nalgebra::{Cholesky, Const, DMatrix, SMatrix, SVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{MttError, Result};

pub type StateVec = SVector<f64, 4>;
pub type StateMat = SMatrix<f64, 4, 4>;
pub type ObsVec = SVector<f64, 2>;
pub type ObsMat = SMatrix<f64, 2, 2>;

const LN_2PI: f64 = 1.837_877_066_409_345_3;
const JITTERS: [f64; 7] = [1e-12, 1e-11, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6];
const EIG_FLOOR: f64 = 1e-10;

pub fn symmetrize<const D: usize>(m: &SMatrix<f64, D, D>) -> SMatrix<f64, D, D> {
    (m + m.transpose()) * 0.5
}

/// Cholesky factor of a covariance. Falls back to diagonal jitter and then
/// to eigenvalue clamping before giving up.
pub fn robust_cholesky<const D: usize>(m: &SMatrix<f64, D, D>) -> Result<Cholesky<f64, Const<D>>> {
    let s = symmetrize(m);
    if s.iter().any(|v| !v.is_finite()) {
        return Err(MttError::Numerical("non-finite covariance".into()));
    }
    if let Some(c) = Cholesky::new(s) {
        return Ok(c);
    }
    for j in JITTERS {
        let mut t = s;
        for i in 0..D {
            t[(i, i)] += j;
        }
        if let Some(c) = Cholesky::new(t) {
            return Ok(c);
        }
    }
    let clamped = clamp_eigen(&s);
    Cholesky::new(clamped).ok_or_else(|| {
        let diag: Vec<f64> = (0..D).map(|i| s[(i, i)]).collect();
        MttError::Numerical(format!("covariance not positive definite after clamping; diagonal {diag:?}"))
    })
}

/// Symmetrized copy with eigenvalues floored at 1e-10.
pub fn clamp_eigen<const D: usize>(m: &SMatrix<f64, D, D>) -> SMatrix<f64, D, D> {
    let dm = DMatrix::from_iterator(D, D, symmetrize(m).iter().copied());
    let eig = dm.symmetric_eigen();
    let vals = eig.eigenvalues.map(|v| v.max(EIG_FLOOR));
    let rebuilt = &eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose();
    SMatrix::<f64, D, D>::from_iterator(rebuilt.iter().copied())
}

pub fn log_det_from_chol<const D: usize>(c: &Cholesky<f64, Const<D>>) -> f64 {
    let l = c.l_dirty();
    (0..D).map(|i| l[(i, i)].ln()).sum::<f64>() * 2.0
}

/// log N(r; 0, LL^T) for a residual `r`.
pub fn mvn_log_density_chol<const D: usize>(r: &SVector<f64, D>, c: &Cholesky<f64, Const<D>>) -> f64 {
    let z = c
        .l_dirty()
        .solve_lower_triangular(r)
        .expect("cholesky factor has a positive diagonal");
    -0.5 * (D as f64 * LN_2PI + log_det_from_chol(c) + z.norm_squared())
}

pub fn mahalanobis2<const D: usize>(r: &SVector<f64, D>, c: &Cholesky<f64, Const<D>>) -> f64 {
    c.l_dirty()
        .solve_lower_triangular(r)
        .expect("cholesky factor has a positive diagonal")
        .norm_squared()
}

pub fn mvn_sample<const D: usize, R: Rng + ?Sized>(
    mean: &SVector<f64, D>,
    c: &Cholesky<f64, Const<D>>,
    rng: &mut R,
) -> SVector<f64, D> {
    let z = SVector::<f64, D>::from_fn(|_, _| rng.sample(StandardNormal));
    mean + c.l_dirty().lower_triangle() * z
}

/// Wraps an angle to (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut w = (a + std::f64::consts::PI).rem_euclid(two_pi) - std::f64::consts::PI;
    if w <= -std::f64::consts::PI {
        w += two_pi;
    }
    w
}

/// ln(x) with the convention that a zero count times ln(0) vanishes.
pub fn xlogy(count: f64, y: f64) -> f64 {
    if count == 0.0 {
        0.0
    } else {
        count * y.ln()
    }
}

pub fn ln_factorial(k: usize) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

/// log(sum(exp(v))) with max subtraction.
pub fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    if m == f64::INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}
