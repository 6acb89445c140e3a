use nalgebra::{Cholesky, Const, Matrix4x2};

use crate::error::Result;
use crate::gaussian::ut::{sigma_points, GaussianBelief};
use crate::linalg::{mahalanobis2, mvn_log_density_chol, robust_cholesky, ObsVec};
use crate::model::{SensorKind, TrackingModel};

pub type StateBelief = GaussianBelief<4>;

/// Predicted observation statistics of a state belief.
#[derive(Clone, Debug)]
pub struct ObsPrediction {
    pub yhat: ObsVec,
    pub s_chol: Cholesky<f64, Const<2>>,
    pub cross: Matrix4x2<f64>,
}

impl ObsPrediction {
    /// `log N(y; yhat, S)` with the sensor's residual convention.
    pub fn log_density(&self, model: &TrackingModel, y: &ObsVec) -> f64 {
        mvn_log_density_chol(&model.residual(y, &self.yhat), &self.s_chol)
    }

    pub fn mahalanobis2(&self, model: &TrackingModel, y: &ObsVec) -> f64 {
        mahalanobis2(&model.residual(y, &self.yhat), &self.s_chol)
    }
}

#[derive(Clone, Debug)]
pub struct UkfStep {
    pub predicted: StateBelief,
    pub filtered: StateBelief,
    /// Gaussian-approximate `log p(y_t | y_{1:t-1})`; 0 at a missed scan.
    pub log_lik: f64,
}

pub fn predict(model: &TrackingModel, b: &StateBelief) -> StateBelief {
    StateBelief::new(model.f * b.mean, model.f * b.cov * model.f.transpose() + model.q)
}

/// One step back in time through `F⁻¹`, inflating by `Q`. Used only to score
/// candidate observations preceding a track.
pub fn predict_backward(model: &TrackingModel, b: &StateBelief) -> StateBelief {
    StateBelief::new(model.f_inv * b.mean, model.f_inv * (b.cov + model.q) * model.f_inv.transpose())
}

pub fn predict_obs(model: &TrackingModel, b: &StateBelief) -> Result<ObsPrediction> {
    match model.sensor() {
        SensorKind::Linear => {
            let g = &model.g;
            let s = g * b.cov * g.transpose() + model.r;
            Ok(ObsPrediction { yhat: g * b.mean, s_chol: robust_cholesky(&s)?, cross: b.cov * g.transpose() })
        }
        SensorKind::BearingRange => {
            let sp = sigma_points(b, model.ut_scale)?;
            let ys: Vec<ObsVec> = sp.points.iter().map(|x| model.h(x)).collect();
            // Mean taken relative to the central point so bearings near ±π average correctly.
            let y0 = ys[0];
            let mut yhat = y0;
            for (y, w) in ys.iter().zip(&sp.w_mean) {
                yhat += model.residual(y, &y0) * *w;
            }
            let mut s = model.r;
            let mut cross = Matrix4x2::zeros();
            for ((x, y), w) in sp.points.iter().zip(&ys).zip(&sp.w_cov) {
                let dy = model.residual(y, &yhat);
                s += dy * dy.transpose() * *w;
                cross += (x - b.mean) * dy.transpose() * *w;
            }
            Ok(ObsPrediction { yhat, s_chol: robust_cholesky(&s)?, cross })
        }
    }
}

/// Measurement update given precomputed observation statistics; returns the
/// posterior belief and `log N(y; yhat, S)`.
pub fn update(model: &TrackingModel, pred: &StateBelief, op: &ObsPrediction, y: &ObsVec) -> (StateBelief, f64) {
    let nu = model.residual(y, &op.yhat);
    // K = C S⁻¹, so Kᵀ = S⁻¹ Cᵀ.
    let gain = op.s_chol.solve(&op.cross.transpose()).transpose();
    let s = op.s_chol.l() * op.s_chol.l().transpose();
    let mean = pred.mean + gain * nu;
    let cov = pred.cov - gain * s * gain.transpose();
    (StateBelief::new(mean, cov), mvn_log_density_chol(&nu, &op.s_chol))
}

/// Forward UKF over a track's observation sequence (`None` = missed scan).
/// `init` is the predicted belief at the first scan.
pub fn ukf_track_filter(model: &TrackingModel, obs: &[Option<ObsVec>], init: &StateBelief) -> Result<Vec<UkfStep>> {
    let mut out: Vec<UkfStep> = Vec::with_capacity(obs.len());
    for (i, y) in obs.iter().enumerate() {
        let predicted = if i == 0 { init.clone() } else { predict(model, &out[i - 1].filtered) };
        let (filtered, log_lik) = match y {
            None => (predicted.clone(), 0.0),
            Some(y) => {
                let op = predict_obs(model, &predicted)?;
                update(model, &predicted, &op, y)
            }
        };
        out.push(UkfStep { predicted, filtered, log_lik });
    }
    Ok(out)
}
