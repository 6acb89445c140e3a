//! Tracking from all-clutter on the simulated linear-Gaussian benchmark. The
//! same chain serves the acceptance-rate check.

use std::sync::OnceLock;

use mtt_core::learn::{mcmc_mtt_sweep, SweepConfig};
use mtt_core::metrics::{chain_summary, ChainSummary, TraceEntry};
use mtt_core::model::simulate;
use mtt_core::moves::{ChainState, MoveConfig, MoveContext, MoveStats};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::common::linear_benchmark;
use crate::Outcome;

pub const N_SCANS: usize = 50;
pub const SWEEPS: usize = 2000;
pub const REL_TOL: f64 = 0.02;
pub const ASSIGNED_MIN: f64 = 0.9;
pub const ACCEPT_LO: f64 = 0.005;
pub const ACCEPT_HI: f64 = 0.10;

pub struct ChainRun {
    pub truth_log_joint: f64,
    /// First sweep (1-based) within tolerance of the truth density.
    pub reached: Option<usize>,
    pub final_log_joint: f64,
    pub assigned: f64,
    pub summary: ChainSummary,
}

fn simulate_chain() -> ChainRun {
    let p = linear_benchmark();
    let sc = simulate(&p, N_SCANS, 5).unwrap().2;
    let truth = sc.truth.as_ref().unwrap();
    let cfg = MoveConfig::default();
    let ctx = MoveContext::new(&sc, &p, &cfg).unwrap();
    let truth_log_joint = ChainState::from_tracks(&sc, truth.tracks.clone()).unwrap().log_joint(&ctx);
    let sweep = SweepConfig::default();
    let sweep = SweepConfig { n3: 0, ..sweep };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut state = ChainState::empty(&sc);
    let mut trace = Vec::with_capacity(SWEEPS);
    let mut reached = None;
    for i in 1..=SWEEPS {
        let mut stats = MoveStats::default();
        mcmc_mtt_sweep(&mut state, &ctx, &sweep, &mut rng, &mut stats).unwrap();
        let lj = state.log_joint(&ctx);
        if reached.is_none() && (lj - truth_log_joint).abs() <= REL_TOL * truth_log_joint.abs() {
            reached = Some(i);
        }
        trace.push(TraceEntry { sweep: i, log_joint: lj, num_tracks: state.num_tracks(), theta: None, moves: stats });
    }
    let target_obs: Vec<(usize, usize)> = truth
        .tracks
        .iter()
        .flat_map(|tr| tr.obs.iter().enumerate().filter(|(_, &o)| o > 0).map(move |(i, &o)| (tr.birth + i, o)))
        .collect();
    let hit = target_obs.iter().filter(|&&(t, o)| state.owner(t, o).is_some()).count();
    ChainRun {
        truth_log_joint,
        reached,
        final_log_joint: trace.last().unwrap().log_joint,
        assigned: hit as f64 / target_obs.len() as f64,
        summary: chain_summary(&trace, 0, 20).unwrap(),
    }
}

pub fn chain() -> &'static ChainRun {
    static RUN: OnceLock<ChainRun> = OnceLock::new();
    RUN.get_or_init(simulate_chain)
}

pub fn run() -> Outcome {
    let c = chain();
    let pass = c.reached.is_some() && c.assigned >= ASSIGNED_MIN;
    Outcome::new(
        pass,
        format!(
            "truth log density {:.1}, reached within {REL_TOL} at sweep {} of {SWEEPS}, final {:.1}; assigned target observations {:.3} (min {ASSIGNED_MIN})",
            c.truth_log_joint,
            c.reached.map_or("never".into(), |s| s.to_string()),
            c.final_log_joint,
            c.assigned
        ),
    )
}

pub fn run_acceptance() -> Outcome {
    let rate = chain().summary.overall_acceptance;
    Outcome::new(
        (ACCEPT_LO..=ACCEPT_HI).contains(&rate),
        format!("association-move acceptance rate {:.4} (band [{ACCEPT_LO}, {ACCEPT_HI}])", rate),
    )
}
