use serde::{Deserialize, Serialize};

use crate::error::{MttError, Result};

/// Observation model attached to the single-target HMM.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SensorKind {
    /// `y = (S_x, S_y) + v`, noise `diag(sigma_r2, sigma_b2)`.
    Linear,
    /// `y = (range, bearing) + v`, noise `diag(sigma_r2, sigma_b2)`.
    #[default]
    BearingRange,
}

/// Parameters ψ of the nearly-constant-velocity target HMM.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HmmParams {
    pub sigma_x2: f64,
    pub sigma_y2: f64,
    pub sigma_r2: f64,
    pub sigma_b2: f64,
    pub mu_bx: f64,
    pub mu_by: f64,
    pub sigma_bpx2: f64,
    pub sigma_bpy2: f64,
    pub sigma_bvx2: f64,
    pub sigma_bvy2: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub sensor: SensorKind,
}

fn default_delta() -> f64 {
    1.0
}

impl HmmParams {
    pub fn validate(&self) -> Result<()> {
        let vars = [
            ("sigma_x2", self.sigma_x2),
            ("sigma_y2", self.sigma_y2),
            ("sigma_r2", self.sigma_r2),
            ("sigma_b2", self.sigma_b2),
            ("sigma_bpx2", self.sigma_bpx2),
            ("sigma_bpy2", self.sigma_bpy2),
            ("sigma_bvx2", self.sigma_bvx2),
            ("sigma_bvy2", self.sigma_bvy2),
            ("delta", self.delta),
        ];
        for (name, v) in vars {
            if !(v > 0.0 && v.is_finite()) {
                return Err(MttError::InvalidParams(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !self.mu_bx.is_finite() || !self.mu_by.is_finite() {
            return Err(MttError::InvalidParams("birth mean must be finite".into()));
        }
        Ok(())
    }
}

/// Axis-aligned observation window; clutter is uniform on it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObsWindow {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
}

impl ObsWindow {
    pub fn volume(&self) -> f64 {
        (self.hi[0] - self.lo[0]) * (self.hi[1] - self.lo[1])
    }

    pub fn contains(&self, y: &[f64; 2]) -> bool {
        (0..2).all(|i| y[i] >= self.lo[i] && y[i] <= self.hi[i])
    }
}

/// Full parameter vector θ = (ψ, p_s, p_d, λ_b, λ_f) plus the observation window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub hmm: HmmParams,
    pub p_s: f64,
    pub p_d: f64,
    pub lambda_b: f64,
    pub lambda_f: f64,
    pub window: ObsWindow,
}

impl ModelParams {
    pub fn obs_volume(&self) -> f64 {
        self.window.volume()
    }

    pub fn validate(&self) -> Result<()> {
        self.hmm.validate()?;
        if !(0.0..=1.0).contains(&self.p_s) {
            return Err(MttError::InvalidParams(format!("p_s must lie in [0, 1], got {}", self.p_s)));
        }
        if !(0.0..=1.0).contains(&self.p_d) {
            return Err(MttError::InvalidParams(format!("p_d must lie in [0, 1], got {}", self.p_d)));
        }
        if !(self.lambda_b >= 0.0 && self.lambda_b.is_finite()) {
            return Err(MttError::InvalidParams(format!("lambda_b must be >= 0, got {}", self.lambda_b)));
        }
        if !(self.lambda_f >= 0.0 && self.lambda_f.is_finite()) {
            return Err(MttError::InvalidParams(format!("lambda_f must be >= 0, got {}", self.lambda_f)));
        }
        let v = self.obs_volume();
        if !(v > 0.0 && v.is_finite()) {
            return Err(MttError::InvalidParams(format!("observation window volume must be positive, got {v}")));
        }
        Ok(())
    }

    /// The 12 learned components in a fixed order:
    /// p_s, p_d, λ_b, λ_f, μ_bx, μ_by, σ_bp², σ_bv², σ_x², σ_y², σ_r², σ_b².
    /// Birth variances are reported per x-axis (they are tied when learned jointly).
    pub fn theta_vector(&self) -> [f64; 12] {
        let h = &self.hmm;
        [
            self.p_s,
            self.p_d,
            self.lambda_b,
            self.lambda_f,
            h.mu_bx,
            h.mu_by,
            h.sigma_bpx2,
            h.sigma_bvx2,
            h.sigma_x2,
            h.sigma_y2,
            h.sigma_r2,
            h.sigma_b2,
        ]
    }

    pub fn from_theta(theta: &[f64; 12], delta: f64, sensor: SensorKind, window: ObsWindow) -> Self {
        ModelParams {
            hmm: HmmParams {
                sigma_x2: theta[8],
                sigma_y2: theta[9],
                sigma_r2: theta[10],
                sigma_b2: theta[11],
                mu_bx: theta[4],
                mu_by: theta[5],
                sigma_bpx2: theta[6],
                sigma_bpy2: theta[6],
                sigma_bvx2: theta[7],
                sigma_bvy2: theta[7],
                delta,
                sensor,
            },
            p_s: theta[0],
            p_d: theta[1],
            lambda_b: theta[2],
            lambda_f: theta[3],
            window,
        }
    }
}

pub const THETA_NAMES: [&str; 12] = [
    "p_s",
    "p_d",
    "lambda_b",
    "lambda_f",
    "mu_bx",
    "mu_by",
    "sigma_bp2",
    "sigma_bv2",
    "sigma_x2",
    "sigma_y2",
    "sigma_r2",
    "sigma_b2",
];
