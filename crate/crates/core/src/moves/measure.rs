//! Reassignment of the observation of one target at one scan.
//!
//! For the chosen track `a` detected with `o` (or missed) at `t`: `C` is the
//! clutter at `t`, `D` the other tracks detected at `t` and `U` the other
//! tracks alive but missed at `t`. `o'` is the observation `a` takes, drawn
//! from `C` or from the observations of `D` (its owner `b` then loses it), and
//! `c ∈ U` is the track that receives `o` when `a` gives it away.
//!
//! | sub | `a` | needs | effect |
//! |-----|-----|-------|--------|
//! | 1 | detected | `D` | `a ← o'` from `b`, `b` missed, `o` clutter |
//! | 2 | detected | `C` | `a ← o'` from clutter, `o` clutter |
//! | 3 | detected | `D` | `a` and `b` swap |
//! | 4 | detected | `D`, `U` | `a ← o'` from `b`, `b` missed, `c ← o` |
//! | 5 | detected | `C`, `U` | `a ← o'` from clutter, `c ← o` |
//! | 6 | detected | | `a` missed, `o` clutter |
//! | 7 | detected | `U` | `a` missed, `c ← o` |
//! | 8 | missed | `C` | `a ← o'` from clutter |
//! | 9 | missed | `D` | `a ← o'` from `b`, `b` missed |
//!
//! Reverse pairs: 1 and 5, 6 and 8, 7 and 9; 2, 3 and 4 are their own
//! reverse. The states of `a` in its window around `t` are redrawn first,
//! ignoring its observation at `t`, and `o'` is weighted by the likelihood
//! under the new state.

use rand::Rng;

use crate::error::Result;
use crate::linalg::{log_sum_exp, StateVec};
use crate::model::Track;
use crate::moves::grouping::pick_log;
use crate::moves::state::{ChainState, MoveContext};
use crate::moves::window::{set_window_states, window_filter, window_range, window_states};

#[derive(Clone, Debug, PartialEq)]
pub struct MeasureDesc {
    pub t: usize,
    pub sub: u8,
    pub a: usize,
    /// Observation taken by `a`, 0 when none.
    pub o_new: usize,
    /// Track receiving the old observation of `a`.
    pub give_to: Option<usize>,
    /// New states of `a` over its window.
    pub window: Vec<StateVec>,
}

struct Local {
    o: usize,
    clutter: Vec<usize>,
    /// Observations held by the other detected tracks.
    detected: Vec<usize>,
    missed: Vec<usize>,
}

fn local(state: &ChainState, t: usize, a: usize) -> Local {
    let mut l = Local { o: state.tracks()[a].obs_at(t), clutter: state.clutter_at(t), detected: vec![], missed: vec![] };
    for k in state.alive_at(t) {
        if k == a {
            continue;
        }
        match state.tracks()[k].obs_at(t) {
            0 => l.missed.push(k),
            o => l.detected.push(o),
        }
    }
    l
}

fn applicable(l: &Local) -> Vec<u8> {
    let (c, d, u) = (!l.clutter.is_empty(), !l.detected.is_empty(), !l.missed.is_empty());
    let mut v = Vec::new();
    if l.o > 0 {
        if d {
            v.push(1);
        }
        if c {
            v.push(2);
        }
        if d {
            v.push(3);
        }
        if d && u {
            v.push(4);
        }
        if c && u {
            v.push(5);
        }
        v.push(6);
        if u {
            v.push(7);
        }
    } else {
        if c {
            v.push(8);
        }
        if d {
            v.push(9);
        }
    }
    v
}

enum Source {
    None,
    Clutter,
    Detected,
}

fn source(sub: u8) -> Source {
    match sub {
        2 | 5 | 8 => Source::Clutter,
        1 | 3 | 4 | 9 => Source::Detected,
        _ => Source::None,
    }
}

fn gives(sub: u8) -> bool {
    matches!(sub, 4 | 5 | 7)
}

fn obs_log_weights(ctx: &MoveContext, t: usize, x: &StateVec, cands: &[usize]) -> Vec<f64> {
    cands.iter().map(|&o| ctx.model.log_g(ctx.scene.y(t, o), x)).collect()
}

fn receiver_log_weights(state: &ChainState, ctx: &MoveContext, t: usize, o: usize, cands: &[usize]) -> Vec<f64> {
    let y = ctx.scene.y(t, o);
    cands.iter().map(|&k| ctx.model.log_g(y, state.tracks()[k].state_at(t))).collect()
}

fn check(state: &ChainState, d: &MeasureDesc) -> Option<Local> {
    if d.t == 0 || d.t > state.n() || d.a >= state.num_tracks() || !state.tracks()[d.a].alive_at(d.t) {
        return None;
    }
    let l = local(state, d.t, d.a);
    if !applicable(&l).contains(&d.sub) {
        return None;
    }
    let ok_new = match source(d.sub) {
        Source::None => d.o_new == 0,
        Source::Clutter => l.clutter.contains(&d.o_new),
        Source::Detected => l.detected.contains(&d.o_new),
    };
    let ok_give = match d.give_to {
        Some(c) => gives(d.sub) && l.missed.contains(&c),
        None => !gives(d.sub),
    };
    (ok_new && ok_give).then_some(l)
}

pub fn sample_measure<R: Rng + ?Sized>(
    state: &ChainState,
    ctx: &MoveContext,
    rng: &mut R,
) -> Result<Option<(MeasureDesc, f64)>> {
    let n = ctx.n();
    let t = rng.random_range(1..=n);
    let alive = state.alive_at(t);
    if alive.is_empty() {
        return Ok(None);
    }
    let a = alive[rng.random_range(0..alive.len())];
    let l = local(state, t, a);
    let subs = applicable(&l);
    if subs.is_empty() {
        return Ok(None);
    }
    let sub = subs[rng.random_range(0..subs.len())];
    let tr = &state.tracks()[a];
    let range = window_range(tr, t, ctx.cfg.tau);
    let (window, lw) = window_filter(&ctx.model, ctx.scene, tr, range, Some(t))?.sample(&ctx.model, rng)?;
    let mut lq = -(n as f64).ln() - (alive.len() as f64).ln() - (subs.len() as f64).ln() + lw;
    let cands = match source(sub) {
        Source::None => None,
        Source::Clutter => Some(&l.clutter),
        Source::Detected => Some(&l.detected),
    };
    let o_new = match cands {
        None => 0,
        Some(c) => {
            let w = obs_log_weights(ctx, t, &window[t - range.0], c);
            let i = pick_log(&w, rng);
            lq += w[i] - log_sum_exp(&w);
            c[i]
        }
    };
    let give_to = if gives(sub) {
        let w = receiver_log_weights(state, ctx, t, l.o, &l.missed);
        let i = pick_log(&w, rng);
        lq += w[i] - log_sum_exp(&w);
        Some(l.missed[i])
    } else {
        None
    };
    Ok(Some((MeasureDesc { t, sub, a, o_new, give_to, window }, lq)))
}

pub fn log_q_measure(state: &ChainState, ctx: &MoveContext, d: &MeasureDesc) -> Result<f64> {
    let Some(l) = check(state, d) else {
        return Ok(f64::NEG_INFINITY);
    };
    let tr = &state.tracks()[d.a];
    let range = window_range(tr, d.t, ctx.cfg.tau);
    if d.window.len() != range.1 + 1 - range.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let lw = window_filter(&ctx.model, ctx.scene, tr, range, Some(d.t))?.log_density(&ctx.model, &d.window)?;
    let alive = state.alive_at(d.t).len();
    let mut lq = -(ctx.n() as f64).ln() - (alive as f64).ln() - (applicable(&l).len() as f64).ln() + lw;
    let cands = match source(d.sub) {
        Source::None => None,
        Source::Clutter => Some(&l.clutter),
        Source::Detected => Some(&l.detected),
    };
    if let Some(c) = cands {
        let w = obs_log_weights(ctx, d.t, &d.window[d.t - range.0], c);
        let i = c.iter().position(|&o| o == d.o_new).expect("checked membership");
        lq += w[i] - log_sum_exp(&w);
    }
    if let Some(g) = d.give_to {
        let w = receiver_log_weights(state, ctx, d.t, l.o, &l.missed);
        let i = l.missed.iter().position(|&k| k == g).expect("checked membership");
        lq += w[i] - log_sum_exp(&w);
    }
    Ok(lq)
}

/// Removed track indices and the new tracks, ordered `a`, then `b`, then `c`.
pub fn apply_measure(state: &ChainState, ctx: &MoveContext, d: &MeasureDesc) -> Option<(Vec<usize>, Vec<Track>)> {
    let l = check(state, d)?;
    let t = d.t;
    let mut a = state.tracks()[d.a].clone();
    let (lo, _) = window_range(&a, t, ctx.cfg.tau);
    set_window_states(&mut a, lo, &d.window);
    a.obs[t - a.birth] = d.o_new;
    let mut removed = vec![d.a];
    let mut added = vec![a];
    if matches!(source(d.sub), Source::Detected) {
        let b = state.owner(t, d.o_new).expect("detected observation has an owner");
        let mut tb = state.tracks()[b].clone();
        tb.obs[t - tb.birth] = if d.sub == 3 { l.o } else { 0 };
        removed.push(b);
        added.push(tb);
    }
    if let Some(c) = d.give_to {
        let mut tc = state.tracks()[c].clone();
        tc.obs[t - tc.birth] = l.o;
        removed.push(c);
        added.push(tc);
    }
    Some((removed, added))
}

/// The move that undoes `d`, given the positions `pos` of the new tracks.
pub fn reverse_measure(old: &ChainState, ctx: &MoveContext, d: &MeasureDesc, pos: &[usize]) -> MeasureDesc {
    let o = old.tracks()[d.a].obs_at(d.t);
    let (sub, o_new, give_to) = match d.sub {
        1 => (5, o, Some(pos[1])),
        5 => (1, o, None),
        2 => (2, o, None),
        3 => (3, o, None),
        4 => (4, o, Some(pos[1])),
        6 => (8, o, None),
        8 => (6, 0, None),
        7 => (9, o, None),
        9 => (7, 0, Some(pos[1])),
        s => unreachable!("unknown measurement sub-move {s}"),
    };
    let tr = &old.tracks()[d.a];
    let window = window_states(tr, window_range(tr, d.t, ctx.cfg.tau));
    MeasureDesc { t: d.t, sub, a: pos[0], o_new, give_to, window }
}
