//! Run configuration, read from a TOML file with the sections `model`,
//! `priors`, `moves`, `smc` and `run`. Every key is optional; missing keys
//! take the defaults below, unknown keys are rejected.
//!
//! ```toml
//! [model]
//! sensor = "bearing_range"
//! p_s = 0.95
//! window_lo = [0.0, -3.141592653589793]
//! window_hi = [380.0, 3.141592653589793]
//!
//! [moves]
//! n1 = 60
//!
//! [run]
//! sweeps = 2000
//! theta_init = [0.6, 0.6, 1, 8, 50, 60, 50, 25, 1, 1.5, 16, 0.02]
//! ```

use std::f64::consts::PI;

use mtt_core::learn::{PriorHyperparams, SweepConfig};
use mtt_core::model::{HmmParams, ModelParams, ObsWindow, SensorKind};
use mtt_core::moves::MoveConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

/// Generative model at fixed parameters. Defaults are the bearing-range
/// benchmark: a sensor at the origin, targets born around (80, 100).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub sensor: SensorKind,
    /// Sampling interval.
    pub delta: f64,
    pub p_s: f64,
    pub p_d: f64,
    pub lambda_b: f64,
    pub lambda_f: f64,
    pub mu_bx: f64,
    pub mu_by: f64,
    pub sigma_bpx2: f64,
    pub sigma_bpy2: f64,
    pub sigma_bvx2: f64,
    pub sigma_bvy2: f64,
    pub sigma_x2: f64,
    pub sigma_y2: f64,
    pub sigma_r2: f64,
    pub sigma_b2: f64,
    /// Lower corner of the observation window, in observation coordinates.
    pub window_lo: [f64; 2],
    pub window_hi: [f64; 2],
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            sensor: SensorKind::BearingRange,
            delta: 1.0,
            p_s: 0.95,
            p_d: 0.9,
            lambda_b: 0.4,
            lambda_f: 3.0,
            mu_bx: 80.0,
            mu_by: 100.0,
            sigma_bpx2: 64.0,
            sigma_bpy2: 64.0,
            sigma_bvx2: 9.0,
            sigma_bvy2: 9.0,
            sigma_x2: 0.3,
            sigma_y2: 0.7,
            sigma_r2: 2.0,
            sigma_b2: 2.5e-3,
            window_lo: [0.0, -PI],
            window_hi: [380.0, PI],
        }
    }
}

impl ModelSection {
    pub fn params(&self) -> ModelParams {
        ModelParams {
            hmm: HmmParams {
                sigma_x2: self.sigma_x2,
                sigma_y2: self.sigma_y2,
                sigma_r2: self.sigma_r2,
                sigma_b2: self.sigma_b2,
                mu_bx: self.mu_bx,
                mu_by: self.mu_by,
                sigma_bpx2: self.sigma_bpx2,
                sigma_bpy2: self.sigma_bpy2,
                sigma_bvx2: self.sigma_bvx2,
                sigma_bvy2: self.sigma_bvy2,
                delta: self.delta,
                sensor: self.sensor,
            },
            p_s: self.p_s,
            p_d: self.p_d,
            lambda_b: self.lambda_b,
            lambda_f: self.lambda_f,
            window: self.window(),
        }
    }

    pub fn window(&self) -> ObsWindow {
        ObsWindow { lo: self.window_lo, hi: self.window_hi }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MovesSection {
    /// Probability that a proposed track is detected somewhere in the next block.
    pub p_m: f64,
    /// Mahalanobis gate for candidate observations.
    pub gate_radius: f64,
    /// Half-width of the state-resampling window.
    pub tau: usize,
    /// Birth, death, extension, reduction, state, measurement.
    pub move_probs: [f64; 6],
    /// Association moves per sweep.
    pub n1: usize,
    /// State refreshes per sweep.
    pub n2: usize,
    /// Parameter updates per sweep when learning.
    pub n3: usize,
}

impl Default for MovesSection {
    fn default() -> Self {
        let m = MoveConfig::default();
        MovesSection { p_m: m.p_m, gate_radius: m.gate_radius, tau: m.tau, move_probs: m.move_probs, n1: 50, n2: 1, n3: 1 }
    }
}

impl MovesSection {
    pub fn move_config(&self) -> MoveConfig {
        MoveConfig { p_m: self.p_m, gate_radius: self.gate_radius, tau: self.tau, move_probs: self.move_probs }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmcSection {
    /// Particles per target in the particle Gibbs refresh.
    pub particles: usize,
}

impl Default for SmcSection {
    fn default() -> Self {
        SmcSection { particles: mtt_core::pgibbs::DEFAULT_PARTICLES }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    /// Scans simulated by `simulate`.
    pub n_scans: usize,
    pub seed: u64,
    /// Recorded sweeps per chain.
    pub sweeps: usize,
    pub burn_in: usize,
    pub chains: usize,
    /// Keep one association sample every `thin` sweeps after burn-in.
    pub thin: usize,
    /// Unrecorded sweeps at the initial parameters before learning starts.
    pub init_sweeps: usize,
    /// Initial parameter vector for `learn`, in the order of the θ CSV
    /// columns; the model section is used when absent.
    pub theta_init: Option<[f64; 12]>,
    pub ospa_c: f64,
    pub ospa_p: f64,
    pub hist_bins: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            n_scans: 50,
            seed: 0,
            sweeps: 1000,
            burn_in: 200,
            chains: 1,
            thin: 10,
            init_sweeps: 500,
            theta_init: None,
            ospa_c: 10.0,
            ospa_p: 1.0,
            hist_bins: 30,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub model: ModelSection,
    pub priors: PriorHyperparams,
    pub moves: MovesSection,
    pub smc: SmcSection,
    pub run: RunSection,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }

    /// SHA-256 of the resolved configuration, flags included.
    pub fn hash(&self) -> String {
        format!("{:x}", Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn sweep_config(&self, learn: bool) -> SweepConfig {
        SweepConfig {
            n1: self.moves.n1,
            n2: self.moves.n2,
            n3: if learn { self.moves.n3 } else { 0 },
            particles: self.smc.particles,
        }
    }

    /// Parameters a `learn` chain starts from.
    pub fn initial_params(&self) -> ModelParams {
        match &self.run.theta_init {
            Some(theta) => ModelParams::from_theta(theta, self.model.delta, self.model.sensor, self.model.window()),
            None => self.model.params(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let core = |e: mtt_core::MttError| CliError::Config(e.to_string());
        self.model.params().validate().map_err(core)?;
        self.initial_params().validate().map_err(core)?;
        self.priors.validate().map_err(core)?;
        self.moves.move_config().validate().map_err(core)?;
        let r = &self.run;
        let checks = [
            (self.smc.particles >= 1, "smc.particles must be at least 1"),
            (r.n_scans >= 1, "run.n_scans must be at least 1"),
            (r.sweeps >= 1, "run.sweeps must be at least 1"),
            (r.burn_in < r.sweeps, "run.burn_in must be smaller than run.sweeps"),
            (r.chains >= 1, "run.chains must be at least 1"),
            (r.thin >= 1, "run.thin must be at least 1"),
            (r.hist_bins >= 1, "run.hist_bins must be at least 1"),
            (r.ospa_c > 0.0 && r.ospa_c.is_finite(), "run.ospa_c must be positive"),
            (r.ospa_p >= 1.0 && r.ospa_p.is_finite(), "run.ospa_p must be at least 1"),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(CliError::Config((*msg).into())),
            None => Ok(()),
        }
    }
}
