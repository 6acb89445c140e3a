//! Rewiring of the links between the targets alive at `t` and at `t+1`.
//!
//! Notation for the chosen track `a` alive at `t`: `b` is another track alive
//! at both `t` and `t+1`, `c` another track whose last scan is `t`, and `e` a
//! track born at `t+1`. Every new track is written `(h, s)`: the scans `≤ t` of
//! `h` followed by the scans `> t` of `s`, either part possibly absent.
//!
//! | sub | needs | new tracks |
//! |-----|-------|------------|
//! | 1 | `a` continues, `b` | `(a,b) (b,∅) (∅,a)` |
//! | 2 | `a` continues, `b` | `(a,b) (b,a)` |
//! | 3 | `a` continues, `b`, `c` | `(a,b) (b,∅) (c,a)` |
//! | 4 | `a` continues, `e` | `(a,e) (∅,a)` |
//! | 5 | `a` continues, `e`, `c` | `(a,e) (c,a)` |
//! | 6 | `a` continues | `(a,∅) (∅,a)` |
//! | 7 | `a` ends at `t`, `e` | `(a,e)` |
//! | 8 | `a` ends at `t`, `b` | `(a,b) (b,∅)` |
//!
//! Sub-moves 1 and 5 reverse each other, as do 6 and 7; the rest are their own
//! reverse. States of each new track inside its window around `t` are redrawn.

use rand::Rng;

use crate::error::Result;
use crate::linalg::StateVec;
use crate::model::Track;
use crate::moves::state::{ChainState, MoveContext};
use crate::moves::window::{set_window_states, window_filter, window_range, window_states};

#[derive(Clone, Debug, PartialEq)]
pub struct SwitchDesc {
    pub t: usize,
    pub sub: u8,
    pub a: usize,
    /// `b` or `e`, depending on the sub-move.
    pub partner: Option<usize>,
    pub c: Option<usize>,
    /// Window states of each new track, in table order.
    pub windows: Vec<Vec<StateVec>>,
}

/// Candidate sets around the link `t → t+1` for track `a`.
struct Local {
    continues: bool,
    b: Vec<usize>,
    c: Vec<usize>,
    e: Vec<usize>,
}

fn local(state: &ChainState, t: usize, a: usize) -> Local {
    let mut l = Local { continues: state.tracks()[a].alive_at(t + 1), b: vec![], c: vec![], e: vec![] };
    for (k, tr) in state.tracks().iter().enumerate() {
        if tr.birth == t + 1 {
            l.e.push(k);
        } else if k != a && tr.alive_at(t) {
            if tr.alive_at(t + 1) {
                l.b.push(k);
            } else {
                l.c.push(k);
            }
        }
    }
    l
}

fn applicable(l: &Local) -> Vec<u8> {
    let (b, c, e) = (!l.b.is_empty(), !l.c.is_empty(), !l.e.is_empty());
    let mut v = Vec::new();
    if l.continues {
        if b {
            v.extend([1, 2]);
        }
        if b && c {
            v.push(3);
        }
        if e {
            v.push(4);
        }
        if e && c {
            v.push(5);
        }
        v.push(6);
    } else {
        if e {
            v.push(7);
        }
        if b {
            v.push(8);
        }
    }
    v
}

type Pair = (Option<usize>, Option<usize>);

fn pairs(sub: u8, a: usize, p: Option<usize>, c: Option<usize>) -> Option<Vec<Pair>> {
    let a = Some(a);
    Some(match sub {
        1 => vec![(a, Some(p?)), (Some(p?), None), (None, a)],
        2 => vec![(a, Some(p?)), (Some(p?), a)],
        3 => vec![(a, Some(p?)), (Some(p?), None), (Some(c?), a)],
        4 => vec![(a, Some(p?)), (None, a)],
        5 => vec![(a, Some(p?)), (Some(c?), a)],
        6 => vec![(a, None), (None, a)],
        7 => vec![(a, Some(p?))],
        8 => vec![(a, Some(p?)), (Some(p?), None)],
        _ => return None,
    })
}

fn needs(sub: u8) -> (bool, bool) {
    match sub {
        1 | 2 | 4 | 7 | 8 => (true, false),
        3 | 5 => (true, true),
        _ => (false, false),
    }
}

fn join(state: &ChainState, t: usize, (h, s): Pair) -> Track {
    let mut obs = Vec::new();
    let mut states = Vec::new();
    let mut birth = t + 1;
    if let Some(h) = h {
        let tr = &state.tracks()[h];
        let k = t + 1 - tr.birth;
        birth = tr.birth;
        obs.extend_from_slice(&tr.obs[..k]);
        states.extend_from_slice(&tr.states[..k]);
    }
    if let Some(s) = s {
        let tr = &state.tracks()[s];
        let k = t + 1 - tr.birth;
        obs.extend_from_slice(&tr.obs[k..]);
        states.extend_from_slice(&tr.states[k..]);
    }
    Track::new(birth, states, obs)
}

/// Involved tracks, and the joined tracks before window resampling; `None`
/// when the description does not fit the state.
fn structure(state: &ChainState, d: &SwitchDesc) -> Option<(Vec<usize>, Vec<Pair>, Local)> {
    let n = state.n();
    if n < 2 || d.t == 0 || d.t >= n || d.a >= state.num_tracks() || !state.tracks()[d.a].alive_at(d.t) {
        return None;
    }
    let l = local(state, d.t, d.a);
    if !applicable(&l).contains(&d.sub) {
        return None;
    }
    let (np, nc) = needs(d.sub);
    if np != d.partner.is_some() || nc != d.c.is_some() {
        return None;
    }
    if let Some(p) = d.partner {
        let set = if matches!(d.sub, 4 | 5 | 7) { &l.e } else { &l.b };
        if !set.contains(&p) {
            return None;
        }
    }
    if let Some(c) = d.c {
        if !l.c.contains(&c) {
            return None;
        }
    }
    let mut removed = vec![d.a];
    removed.extend(d.partner);
    removed.extend(d.c);
    Some((removed, pairs(d.sub, d.a, d.partner, d.c)?, l))
}

fn choice_log_p(state: &ChainState, d: &SwitchDesc, l: &Local) -> f64 {
    let n = state.n();
    let k_x = state.alive_at(d.t).len();
    let mut v = -((n - 1) as f64).ln() - (k_x as f64).ln() - (applicable(l).len() as f64).ln();
    if d.partner.is_some() {
        let m = if matches!(d.sub, 4 | 5 | 7) { l.e.len() } else { l.b.len() };
        v -= (m as f64).ln();
    }
    if d.c.is_some() {
        v -= (l.c.len() as f64).ln();
    }
    v
}

pub fn sample_switch<R: Rng + ?Sized>(
    state: &ChainState,
    ctx: &MoveContext,
    rng: &mut R,
) -> Result<Option<(SwitchDesc, f64)>> {
    let n = ctx.n();
    if n < 2 {
        return Ok(None);
    }
    let t = rng.random_range(1..n);
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
    let (np, nc) = needs(sub);
    let partner = np.then(|| {
        let set = if matches!(sub, 4 | 5 | 7) { &l.e } else { &l.b };
        set[rng.random_range(0..set.len())]
    });
    let c = nc.then(|| l.c[rng.random_range(0..l.c.len())]);
    let mut d = SwitchDesc { t, sub, a, partner, c, windows: Vec::new() };
    let mut lq = choice_log_p(state, &d, &l);
    for pair in pairs(sub, a, partner, c).expect("partners drawn for the sub-move") {
        let tr = join(state, t, pair);
        let range = window_range(&tr, t, ctx.cfg.tau);
        let (w, lw) = window_filter(&ctx.model, ctx.scene, &tr, range, None)?.sample(&ctx.model, rng)?;
        lq += lw;
        d.windows.push(w);
    }
    Ok(Some((d, lq)))
}

pub fn log_q_switch(state: &ChainState, ctx: &MoveContext, d: &SwitchDesc) -> Result<f64> {
    let Some((_, prs, l)) = structure(state, d) else {
        return Ok(f64::NEG_INFINITY);
    };
    if prs.len() != d.windows.len() {
        return Ok(f64::NEG_INFINITY);
    }
    let mut lq = choice_log_p(state, d, &l);
    for (pair, w) in prs.into_iter().zip(&d.windows) {
        let tr = join(state, d.t, pair);
        let (lo, hi) = window_range(&tr, d.t, ctx.cfg.tau);
        if w.len() != hi + 1 - lo {
            return Ok(f64::NEG_INFINITY);
        }
        lq += window_filter(&ctx.model, ctx.scene, &tr, (lo, hi), None)?.log_density(&ctx.model, w)?;
    }
    Ok(lq)
}

/// Removed track indices and the new tracks, in table order.
pub fn apply_switch(state: &ChainState, ctx: &MoveContext, d: &SwitchDesc) -> Option<(Vec<usize>, Vec<Track>)> {
    let (removed, prs, _) = structure(state, d)?;
    let added = prs
        .into_iter()
        .zip(&d.windows)
        .map(|(pair, w)| {
            let mut tr = join(state, d.t, pair);
            let (lo, _) = window_range(&tr, d.t, ctx.cfg.tau);
            set_window_states(&mut tr, lo, w);
            tr
        })
        .collect();
    Some((removed, added))
}

/// The move that undoes `d`, given the positions `pos` of the new tracks.
pub fn reverse_switch(old: &ChainState, ctx: &MoveContext, d: &SwitchDesc, pos: &[usize]) -> SwitchDesc {
    let (sub, a, partner, c) = match d.sub {
        1 => (5, pos[0], Some(pos[2]), Some(pos[1])),
        5 => (1, pos[0], Some(pos[1]), None),
        2 => (2, pos[0], Some(pos[1]), None),
        3 => (3, pos[0], Some(pos[2]), Some(pos[1])),
        4 => (4, pos[0], Some(pos[1]), None),
        6 => (7, pos[0], Some(pos[1]), None),
        7 => (6, pos[0], None, None),
        8 => (8, pos[1], Some(pos[0]), None),
        s => unreachable!("unknown state sub-move {s}"),
    };
    // Each reverse track is the old track that supplied its head, or its tail
    // when it has none.
    let fwd = pairs(d.sub, d.a, d.partner, d.c).expect("valid forward move");
    let back_pos = pairs(sub, a, partner, c).expect("valid reverse move");
    let origin = |p: usize| fwd[pos.iter().position(|&q| q == p).expect("new track")];
    let windows = back_pos
        .iter()
        .map(|&(h, s)| {
            let k = match h {
                Some(h) => origin(h).0.expect("reverse head comes from an old head"),
                None => origin(s.expect("non-empty pair")).1.expect("reverse tail comes from an old tail"),
            };
            let tr = &old.tracks()[k];
            window_states(tr, window_range(tr, d.t, ctx.cfg.tau))
        })
        .collect();
    SwitchDesc { t: d.t, sub, a, partner, c, windows }
}
