//! Independent sampler chains. Chain `c` draws from stream `c` of a ChaCha8
//! generator keyed by the master seed, so its output does not depend on how
//! many workers run the chains or in which order they finish.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use mtt_core::io::TrackSetRecord;
use mtt_core::learn::param_sweep;
use mtt_core::metrics::TraceEntry;
use mtt_core::model::Scene;
use mtt_core::moves::{ChainState, MoveContext, MoveStats};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::Result;

/// Association sample kept after burn-in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub sweep: usize,
    pub log_joint: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<[f64; 12]>,
    #[serde(flatten)]
    pub set: TrackSetRecord,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainOutput {
    pub trace: Vec<TraceEntry>,
    pub samples: Vec<Sample>,
}

pub fn chain_rng(seed: u64, chain: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain as u64);
    rng
}

/// Runs one chain from the all-clutter association. With `learn`, `θ` starts
/// from the configured initial value, is held fixed for `init_sweeps`
/// unrecorded sweeps and is then updated every sweep; otherwise it stays at
/// the model section throughout.
pub fn run_chain(cfg: &Config, scene: &Scene, chain: usize, learn: bool) -> Result<ChainOutput> {
    let mut rng = chain_rng(cfg.run.seed, chain);
    let mut params = if learn { cfg.initial_params() } else { cfg.model.params() };
    let move_cfg = cfg.moves.move_config();
    let sweep = cfg.sweep_config(learn);
    let mut state = ChainState::empty(scene);
    if learn {
        let init = cfg.sweep_config(false);
        let mut discarded = MoveStats::default();
        for _ in 0..cfg.run.init_sweeps {
            param_sweep(&mut state, &mut params, scene, &cfg.priors, &move_cfg, &init, &mut rng, &mut discarded)?;
        }
    }
    let mut trace = Vec::with_capacity(cfg.run.sweeps);
    let mut samples = Vec::new();
    for s in 0..cfg.run.sweeps {
        let mut moves = MoveStats::default();
        param_sweep(&mut state, &mut params, scene, &cfg.priors, &move_cfg, &sweep, &mut rng, &mut moves)?;
        let ctx = MoveContext::new(scene, &params, &move_cfg)?;
        let log_joint = state.log_joint(&ctx);
        let theta = learn.then(|| params.theta_vector());
        if s >= cfg.run.burn_in && (s - cfg.run.burn_in).is_multiple_of(cfg.run.thin) {
            let set = TrackSetRecord::from(&state.to_track_set(scene)?);
            samples.push(Sample { sweep: s, log_joint, theta, set });
        }
        trace.push(TraceEntry { sweep: s, log_joint, num_tracks: state.num_tracks(), theta, moves });
    }
    Ok(ChainOutput { trace, samples })
}

/// Runs `cfg.run.chains` chains on up to `workers` threads; results are
/// returned in chain order.
pub fn run_chains(cfg: &Config, scene: &Scene, learn: bool, workers: usize) -> Result<Vec<ChainOutput>> {
    let k = cfg.run.chains;
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<ChainOutput>>>> = Mutex::new((0..k).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers.clamp(1, k) {
            s.spawn(|| loop {
                let c = next.fetch_add(1, Ordering::Relaxed);
                if c >= k {
                    break;
                }
                let out = run_chain(cfg, scene, c, learn);
                slots.lock().unwrap()[c] = Some(out);
            });
        }
    });
    slots.into_inner().unwrap().into_iter().map(|o| o.expect("every chain ran")).collect()
}
