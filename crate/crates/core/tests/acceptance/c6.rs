//! Joint tracking and parameter learning on a simulated bearing-range scene:
//! posterior intervals must cover the parameters estimated from the true
//! association and states.

use mtt_core::learn::{param_sweep, theta_given_truth, PriorHyperparams, SweepConfig};
use mtt_core::model::{simulate, ModelParams, ObsWindow, SensorKind, THETA_NAMES};
use mtt_core::moves::{ChainState, MoveConfig, MoveStats};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::common::quantile;
use crate::Outcome;

pub const N_SCANS: usize = 50;
pub const SWEEPS: usize = 20_000;
pub const BURN_IN: usize = 5_000;
pub const MIN_COVERED: usize = 10;
/// Sweeps at fixed `θ⁽⁰⁾` that initialise the association before learning.
pub const INIT_SWEEPS: usize = 500;

pub const THETA_TRUE: [f64; 12] = [0.95, 0.9, 0.4, 3.0, 80.0, 100.0, 64.0, 9.0, 0.3, 0.7, 2.0, 2.5e-3];
pub const THETA_INIT: [f64; 12] = [0.6, 0.6, 1.0, 8.0, 50.0, 60.0, 50.0, 25.0, 1.0, 1.5, 16.0, 0.02];

fn window() -> ObsWindow {
    ObsWindow { lo: [0.0, -std::f64::consts::PI], hi: [380.0, std::f64::consts::PI] }
}

pub fn run() -> Outcome {
    let (sweeps, burn_in) = (SWEEPS, BURN_IN);
    let truth_params = ModelParams::from_theta(&THETA_TRUE, 1.0, SensorKind::BearingRange, window());
    let sc = simulate(&truth_params, N_SCANS, 6).unwrap().2;
    let truth = sc.truth.as_ref().unwrap();
    let target = theta_given_truth(&sc, &truth.tracks, &truth_params).unwrap();

    let mut params = ModelParams::from_theta(&THETA_INIT, 1.0, SensorKind::BearingRange, window());
    let hyper = PriorHyperparams::default();
    let move_cfg = MoveConfig::default();
    let sweep = SweepConfig { n1: 60, n2: 1, n3: 1, particles: 15 };
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut state = ChainState::empty(&sc);
    let mut stats = MoveStats::default();
    let init = SweepConfig { n3: 0, ..sweep.clone() };
    for _ in 0..INIT_SWEEPS {
        param_sweep(&mut state, &mut params, &sc, &hyper, &move_cfg, &init, &mut rng, &mut stats).unwrap();
    }
    let mut draws: Vec<[f64; 12]> = Vec::with_capacity(sweeps);
    for _ in 0..sweeps {
        if let Err(e) = param_sweep(&mut state, &mut params, &sc, &hyper, &move_cfg, &sweep, &mut rng, &mut stats) {
            return Outcome::new(false, format!("sweep failed: {e}"));
        }
        draws.push(params.theta_vector());
    }
    let kept = &draws[burn_in..];
    let mut covered = 0;
    let mut missed = Vec::new();
    for k in 0..12 {
        let v: Vec<f64> = kept.iter().map(|d| d[k]).collect();
        let (lo, hi) = (quantile(&v, 0.025), quantile(&v, 0.975));
        if (lo..=hi).contains(&target[k]) {
            covered += 1;
        } else {
            missed.push(format!("{} {:.4} outside [{lo:.4}, {hi:.4}]", THETA_NAMES[k], target[k]));
        }
    }
    Outcome::new(
        covered >= MIN_COVERED,
        format!(
            "{covered}/12 central 95% intervals cover the truth-based estimate (min {MIN_COVERED}); {INIT_SWEEPS} initial sweeps at fixed parameters, {sweeps} learning sweeps, burn-in {burn_in}, acceptance {:.4}{}",
            stats.acceptance_rate(),
            if missed.is_empty() { String::new() } else { format!("; missed: {}", missed.join("; ")) }
        ),
    )
}
