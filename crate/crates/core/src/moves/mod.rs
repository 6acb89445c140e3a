//! Reversible moves over data associations and target states.
//!
//! A move is described by a [`MoveDesc`], which fully determines the proposed
//! state. Each description can be sampled, scored under the proposal and
//! mapped to the description of its reverse move, so the acceptance ratio is
//! `Δ log p(z, x, y) + log q(reverse) − log q(forward)`.

mod birth;
mod extend;
mod grouping;
mod measure;
mod state;
mod switch;
mod window;

use rand::Rng;

pub use birth::{log_q_birth, log_q_death, sample_birth};
pub use extend::{ExtendDesc, ReduceDesc};
pub use grouping::{compute_tm, group_measurements, group_measurements_log_prob};
pub use measure::MeasureDesc;
pub use state::{ChainState, MoveConfig, MoveContext};
pub use switch::SwitchDesc;
pub use window::{window_filter, window_range, SegmentFilter};

use crate::error::{MttError, Result};
use crate::model::Track;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MoveKind {
    Birth,
    Death,
    Extension,
    Reduction,
    State,
    Measurement,
}

impl MoveKind {
    pub const ALL: [MoveKind; 6] = [
        MoveKind::Birth,
        MoveKind::Death,
        MoveKind::Extension,
        MoveKind::Reduction,
        MoveKind::State,
        MoveKind::Measurement,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            MoveKind::Birth => "birth",
            MoveKind::Death => "death",
            MoveKind::Extension => "extension",
            MoveKind::Reduction => "reduction",
            MoveKind::State => "state",
            MoveKind::Measurement => "measurement",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum MoveDesc {
    Birth { track: Track },
    Death { index: usize },
    Extend(ExtendDesc),
    Reduce(ReduceDesc),
    Switch(SwitchDesc),
    Measure(MeasureDesc),
}

impl MoveDesc {
    pub fn kind(&self) -> MoveKind {
        match self {
            MoveDesc::Birth { .. } => MoveKind::Birth,
            MoveDesc::Death { .. } => MoveKind::Death,
            MoveDesc::Extend(_) => MoveKind::Extension,
            MoveDesc::Reduce(_) => MoveKind::Reduction,
            MoveDesc::Switch(_) => MoveKind::State,
            MoveDesc::Measure(_) => MoveKind::Measurement,
        }
    }

    pub fn sub_move(&self) -> Option<u8> {
        match self {
            MoveDesc::Switch(d) => Some(d.sub),
            MoveDesc::Measure(d) => Some(d.sub),
            _ => None,
        }
    }
}

/// A scored proposal.
#[derive(Clone, Debug)]
pub struct MoveProposal {
    pub desc: MoveDesc,
    pub reverse: MoveDesc,
    pub new_state: ChainState,
    pub log_q_forward: f64,
    pub log_q_reverse: f64,
    pub log_target_delta: f64,
    /// `log r`; `−∞` means automatic rejection.
    pub log_ratio: f64,
}

impl MoveProposal {
    pub fn kind(&self) -> MoveKind {
        self.desc.kind()
    }

    pub fn sub_move(&self) -> Option<u8> {
        self.desc.sub_move()
    }
}

/// Log proposal probability of `desc` from `state`.
pub fn log_q(state: &ChainState, ctx: &MoveContext, desc: &MoveDesc) -> Result<f64> {
    match desc {
        MoveDesc::Birth { track } => log_q_birth(state, ctx, track),
        MoveDesc::Death { index } => Ok(log_q_death(state, *index)),
        MoveDesc::Extend(d) => extend::log_q_extend(state, ctx, d),
        MoveDesc::Reduce(d) => Ok(extend::log_q_reduce(state, d)),
        MoveDesc::Switch(d) => switch::log_q_switch(state, ctx, d),
        MoveDesc::Measure(d) => measure::log_q_measure(state, ctx, d),
    }
}

/// Draws a description of a move of the given kind with its log proposal
/// probability; `None` when no such move exists from `state`.
pub fn sample_desc<R: Rng>(
    kind: MoveKind,
    state: &ChainState,
    ctx: &MoveContext,
    rng: &mut R,
) -> Result<Option<(MoveDesc, f64)>> {
    Ok(match kind {
        MoveKind::Birth => {
            let (track, lq) = sample_birth(state, ctx, rng)?;
            Some((MoveDesc::Birth { track }, lq))
        }
        MoveKind::Death => {
            let k = state.num_tracks();
            (k > 0).then(|| {
                let index = rng.random_range(0..k);
                (MoveDesc::Death { index }, log_q_death(state, index))
            })
        }
        MoveKind::Extension => extend::sample_extend(state, ctx, rng)?.map(|(d, lq)| (MoveDesc::Extend(d), lq)),
        MoveKind::Reduction => extend::sample_reduce(state, rng).map(|(d, lq)| (MoveDesc::Reduce(d), lq)),
        MoveKind::State => switch::sample_switch(state, ctx, rng)?.map(|(d, lq)| (MoveDesc::Switch(d), lq)),
        MoveKind::Measurement => measure::sample_measure(state, ctx, rng)?.map(|(d, lq)| (MoveDesc::Measure(d), lq)),
    })
}

fn invalid(desc: &MoveDesc) -> MttError {
    MttError::Validation(format!("{} move does not apply to this state", desc.kind().name()))
}

/// Applies `desc`, returning the new state and the reverse description.
pub fn apply_desc(state: &ChainState, ctx: &MoveContext, desc: &MoveDesc) -> Result<(ChainState, MoveDesc)> {
    let (removed, added): (Vec<usize>, Vec<Track>) = match desc {
        MoveDesc::Birth { track } => {
            if track.is_empty() || track.birth == 0 || track.death() > ctx.n() + 1 {
                return Err(invalid(desc));
            }
            for (i, &o) in track.obs.iter().enumerate() {
                if o > 0 && (o > ctx.scene.k_y(track.birth + i) || state.owner(track.birth + i, o).is_some()) {
                    return Err(invalid(desc));
                }
            }
            (vec![], vec![track.clone()])
        }
        MoveDesc::Death { index } if *index < state.num_tracks() => (vec![*index], vec![]),
        MoveDesc::Extend(d) if d.index < state.num_tracks() => (vec![d.index], vec![extend::apply_extend(state, d)]),
        MoveDesc::Reduce(d) if extend::log_q_reduce(state, d) > f64::NEG_INFINITY => {
            (vec![d.index], vec![extend::apply_reduce(state, d).0])
        }
        MoveDesc::Switch(d) => switch::apply_switch(state, ctx, d).ok_or_else(|| invalid(desc))?,
        MoveDesc::Measure(d) => measure::apply_measure(state, ctx, d).ok_or_else(|| invalid(desc))?,
        _ => return Err(invalid(desc)),
    };
    let (new_state, pos) = state.apply(&removed, added);
    let reverse = match desc {
        MoveDesc::Birth { .. } => MoveDesc::Death { index: pos[0] },
        MoveDesc::Death { index } => MoveDesc::Birth { track: state.tracks()[*index].clone() },
        MoveDesc::Extend(d) => {
            let old = &state.tracks()[d.index];
            let cut = if d.forward { old.death() } else { old.birth - 1 };
            MoveDesc::Reduce(ReduceDesc { index: pos[0], tail: d.forward, cut })
        }
        MoveDesc::Reduce(d) => {
            let (_, obs, states) = extend::apply_reduce(state, d);
            MoveDesc::Extend(ExtendDesc { index: pos[0], forward: d.tail, obs, states })
        }
        MoveDesc::Switch(d) => MoveDesc::Switch(switch::reverse_switch(state, ctx, d, &pos)),
        MoveDesc::Measure(d) => MoveDesc::Measure(measure::reverse_measure(state, ctx, d, &pos)),
    };
    Ok((new_state, reverse))
}

/// Birth-count and clutter-count part of the change of `log p(z, x, y)`.
fn target_delta(ctx: &MoveContext, old: &ChainState, new: &ChainState) -> f64 {
    let dk = new.num_tracks() as i64 - old.num_tracks() as i64;
    let dnf = old.total_detections() as i64 - new.total_detections() as i64;
    let mut v = 0.0;
    if dk != 0 {
        v += dk as f64 * ctx.lp.lambda_b;
    }
    if dnf != 0 {
        v += dnf as f64 * ctx.lp.clutter;
    }
    v
}

/// Scores `desc` from `state`. `log_q_forward` may be passed when already
/// known from sampling.
pub fn evaluate_move(
    state: &ChainState,
    ctx: &MoveContext,
    desc: MoveDesc,
    log_q_forward: Option<f64>,
) -> Result<MoveProposal> {
    let log_q_forward = match log_q_forward {
        Some(v) => v,
        None => log_q(state, ctx, &desc)?,
    };
    let (new_state, reverse) = apply_desc(state, ctx, &desc)?;
    let log_q_reverse = log_q(&new_state, ctx, &reverse)?;
    let (removed_terms, added_terms) = changed_terms(ctx, state, &new_state);
    let log_target_delta = added_terms - removed_terms + target_delta(ctx, state, &new_state);
    let log_ratio = if log_q_forward == f64::NEG_INFINITY || log_q_reverse == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else {
        let r = log_target_delta + log_q_reverse - log_q_forward;
        if r.is_nan() {
            f64::NEG_INFINITY
        } else {
            r
        }
    };
    Ok(MoveProposal { desc, reverse, new_state, log_q_forward, log_q_reverse, log_target_delta, log_ratio })
}

/// Sums of per-track terms over tracks present in only one of the states.
fn changed_terms(ctx: &MoveContext, old: &ChainState, new: &ChainState) -> (f64, f64) {
    let (a, b) = (old.tracks(), new.tracks());
    let (mut i, mut j) = (0, 0);
    let (mut rem, mut add) = (0.0, 0.0);
    while i < a.len() || j < b.len() {
        if i < a.len() && j < b.len() && a[i] == b[j] {
            i += 1;
            j += 1;
            continue;
        }
        let take_old = j >= b.len()
            || (i < a.len() && crate::model::canonical_cmp(&a[i], &b[j]) != std::cmp::Ordering::Greater);
        if take_old {
            rem += ctx.track_term(&a[i]);
            i += 1;
        } else {
            add += ctx.track_term(&b[j]);
            j += 1;
        }
    }
    (rem, add)
}

/// Samples and scores a move of the given kind.
pub fn propose_move<R: Rng>(
    kind: MoveKind,
    state: &ChainState,
    ctx: &MoveContext,
    rng: &mut R,
) -> Result<Option<MoveProposal>> {
    match sample_desc(kind, state, ctx, rng)? {
        None => Ok(None),
        Some((desc, lq)) => evaluate_move(state, ctx, desc, Some(lq)).map(Some),
    }
}

/// Proposal and acceptance counts per move kind.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MoveStats {
    pub proposed: [u64; 6],
    pub accepted: [u64; 6],
}

impl MoveStats {
    pub fn record(&mut self, kind: MoveKind, accepted: bool) {
        self.proposed[kind.index()] += 1;
        if accepted {
            self.accepted[kind.index()] += 1;
        }
    }

    pub fn merge(&mut self, other: &MoveStats) {
        for i in 0..6 {
            self.proposed[i] += other.proposed[i];
            self.accepted[i] += other.accepted[i];
        }
    }

    pub fn total_proposed(&self) -> u64 {
        self.proposed.iter().sum()
    }

    pub fn total_accepted(&self) -> u64 {
        self.accepted.iter().sum()
    }

    pub fn acceptance_rate(&self) -> f64 {
        let p = self.total_proposed();
        if p == 0 {
            0.0
        } else {
            self.total_accepted() as f64 / p as f64
        }
    }
}

pub fn choose_kind<R: Rng + ?Sized>(probs: &[f64; 6], rng: &mut R) -> MoveKind {
    let u: f64 = rng.random::<f64>() * probs.iter().sum::<f64>();
    let mut acc = 0.0;
    for (k, p) in MoveKind::ALL.iter().zip(probs) {
        acc += p;
        if u < acc {
            return *k;
        }
    }
    *MoveKind::ALL.iter().zip(probs).rev().find(|(_, p)| **p > 0.0).map(|(k, _)| k).unwrap_or(&MoveKind::Birth)
}

/// One Metropolis–Hastings step with a randomly chosen move. Proposals that
/// cannot be formed or fail numerically count as rejections.
pub fn dispatch_move<R: Rng>(state: &mut ChainState, ctx: &MoveContext, rng: &mut R, stats: &mut MoveStats) -> bool {
    let kind = choose_kind(&ctx.cfg.move_probs, rng);
    let accepted = match propose_move(kind, state, ctx, rng) {
        Ok(Some(p)) if rng.random::<f64>().ln() < p.log_ratio => {
            *state = p.new_state;
            true
        }
        _ => false,
    };
    stats.record(kind, accepted);
    accepted
}
