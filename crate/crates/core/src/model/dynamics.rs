use nalgebra::{Cholesky, Const, Matrix2, Matrix2x4, Matrix4};
use rand::Rng;

use crate::error::Result;
use crate::linalg::{
    mvn_log_density_chol, mvn_sample, robust_cholesky, wrap_angle, ObsMat, ObsVec, StateMat, StateVec,
};
use crate::model::params::{HmmParams, SensorKind};

/// Precomputed single-target model: CV dynamics, Gaussian birth prior and the sensor.
#[derive(Clone, Debug)]
pub struct TrackingModel {
    pub params: HmmParams,
    pub f: StateMat,
    pub f_inv: StateMat,
    pub q: StateMat,
    pub q_chol: Cholesky<f64, Const<4>>,
    pub prior_mean: StateVec,
    pub prior_cov: StateMat,
    pub prior_chol: Cholesky<f64, Const<4>>,
    pub r: ObsMat,
    pub r_chol: Cholesky<f64, Const<2>>,
    pub g: Matrix2x4<f64>,
    /// Unscented-transform scaling `c = d + κ`.
    pub ut_scale: f64,
}

/// Position-selecting linear observation model `y = G x + v`.
#[derive(Clone, Debug)]
pub struct LinearObsModel {
    pub g: Matrix2x4<f64>,
    pub sigma_v: ObsMat,
}

impl LinearObsModel {
    pub fn from_params(p: &HmmParams) -> Self {
        LinearObsModel { g: position_selector(), sigma_v: Matrix2::new(p.sigma_r2, 0.0, 0.0, p.sigma_b2) }
    }
}

pub fn position_selector() -> Matrix2x4<f64> {
    Matrix2x4::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0)
}

/// `F` and `Q` of the nearly-constant-velocity model for one time step.
pub fn cv_matrices(p: &HmmParams) -> (StateMat, StateMat) {
    let d = p.delta;
    let mut f = Matrix4::identity();
    f[(0, 1)] = d;
    f[(2, 3)] = d;
    let s = [d * d * d / 3.0, d * d / 2.0, d];
    let mut q = Matrix4::zeros();
    for (off, var) in [(0usize, p.sigma_x2), (2usize, p.sigma_y2)] {
        q[(off, off)] = var * s[0];
        q[(off, off + 1)] = var * s[1];
        q[(off + 1, off)] = var * s[1];
        q[(off + 1, off + 1)] = var * s[2];
    }
    (f, q)
}

impl TrackingModel {
    pub fn new(params: &HmmParams) -> Result<Self> {
        params.validate()?;
        let (f, q) = cv_matrices(params);
        let mut f_inv = f;
        f_inv[(0, 1)] = -params.delta;
        f_inv[(2, 3)] = -params.delta;
        let prior_mean = StateVec::new(params.mu_bx, 0.0, params.mu_by, 0.0);
        let prior_cov = Matrix4::from_diagonal(&StateVec::new(
            params.sigma_bpx2,
            params.sigma_bvx2,
            params.sigma_bpy2,
            params.sigma_bvy2,
        ));
        let r = Matrix2::new(params.sigma_r2, 0.0, 0.0, params.sigma_b2);
        Ok(TrackingModel {
            params: *params,
            f,
            f_inv,
            q,
            q_chol: robust_cholesky(&q)?,
            prior_mean,
            prior_cov,
            prior_chol: robust_cholesky(&prior_cov)?,
            r,
            r_chol: robust_cholesky(&r)?,
            g: position_selector(),
            ut_scale: crate::gaussian::DEFAULT_UT_SCALE,
        })
    }

    pub fn with_ut_scale(mut self, c: f64) -> Self {
        self.ut_scale = c;
        self
    }

    pub fn sensor(&self) -> SensorKind {
        self.params.sensor
    }

    /// Noise-free observation of a state.
    pub fn h(&self, x: &StateVec) -> ObsVec {
        match self.params.sensor {
            SensorKind::Linear => ObsVec::new(x[0], x[2]),
            SensorKind::BearingRange => ObsVec::new(x[0].hypot(x[2]), x[2].atan2(x[0])),
        }
    }

    /// `y - yhat`, with the bearing component wrapped.
    pub fn residual(&self, y: &ObsVec, yhat: &ObsVec) -> ObsVec {
        let mut r = y - yhat;
        if self.params.sensor == SensorKind::BearingRange {
            r[1] = wrap_angle(r[1]);
        }
        r
    }

    pub fn log_g(&self, y: &ObsVec, x: &StateVec) -> f64 {
        mvn_log_density_chol(&self.residual(y, &self.h(x)), &self.r_chol)
    }

    pub fn log_f(&self, next: &StateVec, prev: &StateVec) -> f64 {
        mvn_log_density_chol(&(next - self.f * prev), &self.q_chol)
    }

    pub fn log_mu(&self, x: &StateVec) -> f64 {
        mvn_log_density_chol(&(x - self.prior_mean), &self.prior_chol)
    }

    pub fn sample_mu<R: Rng + ?Sized>(&self, rng: &mut R) -> StateVec {
        mvn_sample(&self.prior_mean, &self.prior_chol, rng)
    }

    pub fn sample_f<R: Rng + ?Sized>(&self, prev: &StateVec, rng: &mut R) -> StateVec {
        mvn_sample(&(self.f * prev), &self.q_chol, rng)
    }

    pub fn sample_g<R: Rng + ?Sized>(&self, x: &StateVec, rng: &mut R) -> ObsVec {
        let mut y = mvn_sample(&self.h(x), &self.r_chol, rng);
        if self.params.sensor == SensorKind::BearingRange {
            y[1] = wrap_angle(y[1]);
        }
        y
    }
}
