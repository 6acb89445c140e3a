//! Reversibility of every association move.

use mtt_core::model::simulate;
use mtt_core::moves::{dispatch_move, evaluate_move, propose_move, ChainState, MoveConfig, MoveContext, MoveKind, MoveStats};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::common::linear_benchmark;
use crate::Outcome;

pub const PER_KIND: usize = 10_000;
pub const RATIO_TOL: f64 = 1e-9;
const MAX_ATTEMPTS: usize = 400_000;

pub fn run() -> Outcome {
    let p = linear_benchmark();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let scenes: Vec<_> = (0..4).map(|s| simulate(&p, 15, 40 + s).unwrap().2).collect();
    let cfg = MoveConfig::default();
    // Truth states plus states visited by a chain from all-clutter.
    let mut pool = Vec::new();
    for sc in &scenes {
        let ctx = MoveContext::new(sc, &p, &cfg).unwrap();
        pool.push((sc, ChainState::from_tracks(sc, sc.truth.as_ref().unwrap().tracks.clone()).unwrap()));
        let mut st = ChainState::empty(sc);
        let mut stats = MoveStats::default();
        for i in 1..=2000 {
            dispatch_move(&mut st, &ctx, &mut rng, &mut stats);
            if i % 200 == 0 {
                pool.push((sc, st.clone()));
            }
        }
    }
    let ctxs: Vec<_> = scenes.iter().map(|sc| MoveContext::new(sc, &p, &cfg).unwrap()).collect();
    let ctx_of = |sc: &mtt_core::model::Scene| &ctxs[scenes.iter().position(|s| std::ptr::eq(s, sc)).unwrap()];

    let mut checked = [0usize; 6];
    let mut worst_ratio: f64 = 0.0;
    let mut failures = Vec::new();
    for kind in MoveKind::ALL {
        let mut attempts = 0;
        while checked[kind.index()] < PER_KIND && attempts < MAX_ATTEMPTS {
            let (sc, state) = &pool[attempts % pool.len()];
            attempts += 1;
            let ctx = ctx_of(sc);
            let Some(fwd) = propose_move(kind, state, ctx, &mut rng).unwrap() else { continue };
            if !fwd.log_ratio.is_finite() {
                continue;
            }
            let back = match evaluate_move(&fwd.new_state, ctx, fwd.reverse.clone(), None) {
                Ok(b) => b,
                Err(e) => {
                    failures.push(format!("{}: reverse failed: {e}", kind.name()));
                    continue;
                }
            };
            if back.new_state != *state || back.reverse != fwd.desc {
                failures.push(format!("{}: reverse reconstruction differs", kind.name()));
            }
            let s = (fwd.log_ratio + back.log_ratio).abs();
            worst_ratio = worst_ratio.max(s);
            if s >= RATIO_TOL {
                failures.push(format!("{}: log r + log r_rev = {s:e}", kind.name()));
            }
            checked[kind.index()] += 1;
        }
    }
    let short: Vec<_> = MoveKind::ALL.iter().filter(|k| checked[k.index()] < PER_KIND).map(|k| k.name()).collect();
    let pass = failures.is_empty() && short.is_empty();
    let mut detail = format!(
        "checked {checked:?} proposals per kind (need {PER_KIND}); max |log r + log r_rev| = {worst_ratio:.2e} (tol {RATIO_TOL:e})"
    );
    if !failures.is_empty() {
        detail += &format!("; {} failures, first: {}", failures.len(), failures[0]);
    }
    if !short.is_empty() {
        detail += &format!("; too few finite proposals for {short:?}");
    }
    Outcome::new(pass, detail)
}
