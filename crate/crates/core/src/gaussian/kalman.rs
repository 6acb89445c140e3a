//! Exact Kalman filter, RTS smoother and marginal likelihood for linear-Gaussian HMMs.

use nalgebra::{SMatrix, SVector};

use crate::error::Result;
use crate::gaussian::ut::GaussianBelief;
use crate::linalg::{mvn_log_density_chol, robust_cholesky, symmetrize, ObsVec};
use crate::model::{cv_matrices, HmmParams, LinearObsModel};

/// `x_1 ~ N(m0, P0)`, `x_{t+1} = F x_t + N(0, Q)`, `y_t = H x_t + N(0, R)`.
#[derive(Clone, Debug)]
pub struct LinearGaussianModel<const D: usize, const M: usize> {
    pub f: SMatrix<f64, D, D>,
    pub q: SMatrix<f64, D, D>,
    pub h: SMatrix<f64, M, D>,
    pub r: SMatrix<f64, M, M>,
    pub m0: SVector<f64, D>,
    pub p0: SMatrix<f64, D, D>,
}

impl LinearGaussianModel<4, 2> {
    /// The CV target model with a linear position sensor.
    pub fn from_cv(params: &HmmParams, obs: &LinearObsModel) -> Self {
        let (f, q) = cv_matrices(params);
        LinearGaussianModel {
            f,
            q,
            h: obs.g,
            r: obs.sigma_v,
            m0: SVector::<f64, 4>::new(params.mu_bx, 0.0, params.mu_by, 0.0),
            p0: SMatrix::<f64, 4, 4>::from_diagonal(&SVector::<f64, 4>::new(
                params.sigma_bpx2,
                params.sigma_bvx2,
                params.sigma_bpy2,
                params.sigma_bvy2,
            )),
        }
    }
}

#[derive(Clone, Debug)]
pub struct KalmanOutput<const D: usize> {
    pub predicted: Vec<GaussianBelief<D>>,
    pub filtered: Vec<GaussianBelief<D>>,
    pub log_lik: f64,
}

pub fn kalman_filter<const D: usize, const M: usize>(
    model: &LinearGaussianModel<D, M>,
    obs: &[Option<SVector<f64, M>>],
) -> Result<KalmanOutput<D>> {
    let mut predicted = Vec::with_capacity(obs.len());
    let mut filtered: Vec<GaussianBelief<D>> = Vec::with_capacity(obs.len());
    let mut log_lik = 0.0;
    for (i, y) in obs.iter().enumerate() {
        let pred = match filtered.last() {
            None => GaussianBelief::new(model.m0, model.p0),
            Some(b) => GaussianBelief::new(model.f * b.mean, model.f * b.cov * model.f.transpose() + model.q),
        };
        let post = match y {
            None => pred.clone(),
            Some(y) => {
                let s = model.h * pred.cov * model.h.transpose() + model.r;
                let sc = robust_cholesky(&s)?;
                let nu = y - model.h * pred.mean;
                log_lik += mvn_log_density_chol(&nu, &sc);
                let gain = sc.solve(&(model.h * pred.cov)).transpose();
                GaussianBelief::new(pred.mean + gain * nu, pred.cov - gain * s * gain.transpose())
            }
        };
        debug_assert_eq!(i, predicted.len());
        predicted.push(pred);
        filtered.push(post);
    }
    Ok(KalmanOutput { predicted, filtered, log_lik })
}

/// Rauch–Tung–Striebel smoothed marginals.
pub fn rts_smoother<const D: usize, const M: usize>(
    model: &LinearGaussianModel<D, M>,
    out: &KalmanOutput<D>,
) -> Result<Vec<GaussianBelief<D>>> {
    let len = out.filtered.len();
    let mut sm = out.filtered.clone();
    for i in (0..len.saturating_sub(1)).rev() {
        let b = &out.filtered[i];
        let pred = &out.predicted[i + 1];
        let pc = robust_cholesky(&pred.cov)?;
        let jt = pc.solve(&(model.f * b.cov));
        let j = jt.transpose();
        let mean = b.mean + j * (sm[i + 1].mean - pred.mean);
        let cov = b.cov + j * (sm[i + 1].cov - pred.cov) * jt;
        sm[i] = GaussianBelief::new(mean, symmetrize(&cov));
    }
    Ok(sm)
}

/// `log p(y_{1:T})` by the prediction-error decomposition; missed scans add 0.
pub fn kalman_log_marginal<const D: usize, const M: usize>(
    model: &LinearGaussianModel<D, M>,
    obs: &[Option<SVector<f64, M>>],
) -> Result<f64> {
    Ok(kalman_filter(model, obs)?.log_lik)
}

/// Convenience wrapper for the CV target model.
pub fn cv_log_marginal(params: &HmmParams, obs_model: &LinearObsModel, obs: &[Option<ObsVec>]) -> Result<f64> {
    kalman_log_marginal(&LinearGaussianModel::from_cv(params, obs_model), obs)
}
