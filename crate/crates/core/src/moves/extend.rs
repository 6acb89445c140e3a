//! Extension of a track forwards or backwards in time, and its reverse,
//! truncation of a track's head or tail.

use rand::{Rng, RngCore};

use crate::error::Result;
use crate::gaussian::{predict, predict_backward, predict_obs, update, StateBelief};
use crate::linalg::{log_sum_exp, ObsVec, StateMat, StateVec};
use crate::model::Track;
use crate::moves::grouping::pick_log;
use crate::moves::state::{ChainState, MoveContext};
use crate::moves::window::SegmentFilter;

#[derive(Clone, Debug, PartialEq)]
pub struct ExtendDesc {
    pub index: usize,
    pub forward: bool,
    /// Observation indices of the new scans in time order.
    pub obs: Vec<usize>,
    /// States of the new scans in time order.
    pub states: Vec<StateVec>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReduceDesc {
    pub index: usize,
    /// Tail cut keeps `t_b..cut-1`; head cut keeps `cut+1..t_d-1`.
    pub tail: bool,
    pub cut: usize,
}

fn directions(tr: &Track, n: usize) -> Vec<bool> {
    let mut d = Vec::with_capacity(2);
    if tr.death() <= n {
        d.push(true);
    }
    if tr.birth >= 2 {
        d.push(false);
    }
    d
}

fn max_len(tr: &Track, n: usize, forward: bool) -> usize {
    if forward {
        n + 1 - tr.death()
    } else {
        tr.birth - 1
    }
}

/// Truncated geometric law on `1..=l_max` driven by the survival probability.
fn length_log_p(ctx: &MoveContext, len: usize, l_max: usize) -> f64 {
    if len == 0 || len > l_max {
        return f64::NEG_INFINITY;
    }
    let mut v = if len > 1 { (len - 1) as f64 * ctx.lp.p_s } else { 0.0 };
    if len < l_max {
        v += ctx.lp.q_s;
    }
    v
}

/// Walks the new scans away from the track, choosing an observation or a
/// miss at each. With `target` the walk scores the given choices instead.
/// Returns the choices in walk order and their log probability.
fn walk(
    state: &ChainState,
    ctx: &MoveContext,
    tr: &Track,
    forward: bool,
    len: usize,
    target: Option<&[usize]>,
    mut rng: Option<&mut dyn RngCore>,
) -> Result<(Vec<usize>, f64)> {
    let model = &ctx.model;
    let gate2 = ctx.cfg.gate_radius * ctx.cfg.gate_radius;
    let (start, step): (StateBelief, fn(&crate::model::TrackingModel, &StateBelief) -> StateBelief) = if forward {
        (StateBelief::new(*tr.states.last().unwrap(), StateMat::zeros()), predict)
    } else {
        (StateBelief::new(tr.states[0], StateMat::zeros()), predict_backward)
    };
    let mut belief = step(model, &start);
    let mut chosen = Vec::with_capacity(len);
    let mut log_p = 0.0;
    for j in 0..len {
        let s = if forward { tr.death() + j } else { tr.birth - 1 - j };
        let clutter = state.clutter_at(s);
        let mut cands: Vec<(usize, f64)> = Vec::new();
        let op = if clutter.is_empty() { None } else { Some(predict_obs(model, &belief)?) };
        if let Some(op) = &op {
            for o in clutter {
                let y = ctx.scene.y(s, o);
                if op.mahalanobis2(model, y) <= gate2 {
                    cands.push((o, op.log_density(model, y)));
                }
            }
        }
        let lz = log_sum_exp(&cands.iter().map(|c| c.1).collect::<Vec<_>>());
        let o = match target {
            Some(tg) => {
                let o = tg[j];
                if o == 0 {
                    if !cands.is_empty() {
                        log_p += ctx.lp.q_d;
                    }
                } else {
                    match cands.iter().find(|c| c.0 == o) {
                        Some(c) => log_p += ctx.lp.p_d + c.1 - lz,
                        None => return Ok((chosen, f64::NEG_INFINITY)),
                    }
                }
                o
            }
            None => {
                let r = rng.as_deref_mut().expect("sampling needs an rng");
                if cands.is_empty() {
                    0
                } else if r.random::<f64>() < ctx.params.p_d {
                    let i = pick_log(&cands.iter().map(|c| c.1).collect::<Vec<_>>(), r);
                    log_p += ctx.lp.p_d + cands[i].1 - lz;
                    cands[i].0
                } else {
                    log_p += ctx.lp.q_d;
                    0
                }
            }
        };
        chosen.push(o);
        if o > 0 {
            let op = op.as_ref().expect("a detection implies a prediction");
            belief = update(model, &belief, op, ctx.scene.y(s, o)).0;
        }
        if j + 1 < len {
            belief = step(model, &belief);
        }
    }
    Ok((chosen, log_p))
}

fn segment_filter(ctx: &MoveContext, tr: &Track, forward: bool, obs: &[usize]) -> Result<SegmentFilter> {
    let first = if forward { tr.death() } else { tr.birth - obs.len() };
    let ys: Vec<Option<ObsVec>> =
        obs.iter().enumerate().map(|(i, &o)| (o > 0).then(|| *ctx.scene.y(first + i, o))).collect();
    if forward {
        SegmentFilter::new(&ctx.model, tr.states.last(), &ys, None)
    } else {
        SegmentFilter::new(&ctx.model, None, &ys, Some(tr.states[0]))
    }
}

pub fn sample_extend<R: Rng>(state: &ChainState, ctx: &MoveContext, rng: &mut R) -> Result<Option<(ExtendDesc, f64)>> {
    let k = state.num_tracks();
    if k == 0 {
        return Ok(None);
    }
    let index = rng.random_range(0..k);
    let tr = &state.tracks()[index];
    let dirs = directions(tr, ctx.n());
    if dirs.is_empty() {
        return Ok(None);
    }
    let forward = dirs[rng.random_range(0..dirs.len())];
    let l_max = max_len(tr, ctx.n(), forward);
    let mut len = 1;
    while len < l_max && rng.random::<f64>() < ctx.params.p_s {
        len += 1;
    }
    let (mut obs, lp_obs) = walk(state, ctx, tr, forward, len, None, Some(rng as &mut dyn RngCore))?;
    if !forward {
        obs.reverse();
    }
    let (states, lq_x) = segment_filter(ctx, tr, forward, &obs)?.sample(&ctx.model, rng)?;
    let lq = -(k as f64).ln() - (dirs.len() as f64).ln() + length_log_p(ctx, len, l_max) + lp_obs + lq_x;
    Ok(Some((ExtendDesc { index, forward, obs, states }, lq)))
}

pub fn log_q_extend(state: &ChainState, ctx: &MoveContext, d: &ExtendDesc) -> Result<f64> {
    let k = state.num_tracks();
    if d.index >= k || d.obs.len() != d.states.len() {
        return Ok(f64::NEG_INFINITY);
    }
    let tr = &state.tracks()[d.index];
    let dirs = directions(tr, ctx.n());
    if !dirs.contains(&d.forward) {
        return Ok(f64::NEG_INFINITY);
    }
    let len = d.obs.len();
    let lp_len = length_log_p(ctx, len, max_len(tr, ctx.n(), d.forward));
    if lp_len == f64::NEG_INFINITY {
        return Ok(lp_len);
    }
    let mut walk_order = d.obs.clone();
    if !d.forward {
        walk_order.reverse();
    }
    let (_, lp_obs) = walk(state, ctx, tr, d.forward, len, Some(&walk_order), None)?;
    if lp_obs == f64::NEG_INFINITY {
        return Ok(lp_obs);
    }
    let lq_x = segment_filter(ctx, tr, d.forward, &d.obs)?.log_density(&ctx.model, &d.states)?;
    Ok(-(k as f64).ln() - (dirs.len() as f64).ln() + lp_len + lp_obs + lq_x)
}

pub fn apply_extend(state: &ChainState, d: &ExtendDesc) -> Track {
    let tr = &state.tracks()[d.index];
    if d.forward {
        let mut out = tr.clone();
        out.obs.extend_from_slice(&d.obs);
        out.states.extend_from_slice(&d.states);
        out
    } else {
        let mut obs = d.obs.clone();
        obs.extend_from_slice(&tr.obs);
        let mut states = d.states.clone();
        states.extend_from_slice(&tr.states);
        Track::new(tr.birth - d.obs.len(), states, obs)
    }
}

pub fn sample_reduce<R: Rng + ?Sized>(state: &ChainState, rng: &mut R) -> Option<(ReduceDesc, f64)> {
    let k = state.num_tracks();
    if k == 0 {
        return None;
    }
    let index = rng.random_range(0..k);
    let tail = rng.random::<bool>();
    let tr = &state.tracks()[index];
    let l = tr.len();
    if l < 2 {
        return None;
    }
    let cut = if tail { rng.random_range(tr.birth + 1..tr.death()) } else { rng.random_range(tr.birth..tr.death() - 1) };
    let d = ReduceDesc { index, tail, cut };
    let lq = log_q_reduce(state, &d);
    Some((d, lq))
}

pub fn log_q_reduce(state: &ChainState, d: &ReduceDesc) -> f64 {
    let k = state.num_tracks();
    if d.index >= k {
        return f64::NEG_INFINITY;
    }
    let tr = &state.tracks()[d.index];
    let l = tr.len();
    let legal = if d.tail { d.cut > tr.birth && d.cut < tr.death() } else { d.cut >= tr.birth && d.cut + 2 <= tr.death() };
    if l < 2 || !legal {
        return f64::NEG_INFINITY;
    }
    -(k as f64).ln() - std::f64::consts::LN_2 - ((l - 1) as f64).ln()
}

/// The shortened track and the removed scans' observations and states.
pub fn apply_reduce(state: &ChainState, d: &ReduceDesc) -> (Track, Vec<usize>, Vec<StateVec>) {
    let tr = &state.tracks()[d.index];
    if d.tail {
        let keep = d.cut - tr.birth;
        (
            Track::new(tr.birth, tr.states[..keep].to_vec(), tr.obs[..keep].to_vec()),
            tr.obs[keep..].to_vec(),
            tr.states[keep..].to_vec(),
        )
    } else {
        let drop = d.cut + 1 - tr.birth;
        (
            Track::new(d.cut + 1, tr.states[drop..].to_vec(), tr.obs[drop..].to_vec()),
            tr.obs[..drop].to_vec(),
            tr.states[..drop].to_vec(),
        )
    }
}
