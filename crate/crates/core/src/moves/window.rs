//! Gaussian proposals for a contiguous run of a track's states, conditioned
//! on the neighbouring states and the observations inside the run.

use rand::Rng;

use crate::error::Result;
use crate::gaussian::{gaussian_backward_log_density, gaussian_backward_sample, ukf_track_filter, StateBelief};
use crate::linalg::{ObsVec, StateVec};
use crate::model::{Scene, Track, TrackingModel};

#[derive(Clone, Debug)]
pub struct SegmentFilter {
    filtered: Vec<StateBelief>,
    after: Option<StateVec>,
}

impl SegmentFilter {
    /// Filters `obs` starting from `N(F before, Q)`, or from the birth prior
    /// when there is no preceding state.
    pub fn new(
        model: &TrackingModel,
        before: Option<&StateVec>,
        obs: &[Option<ObsVec>],
        after: Option<StateVec>,
    ) -> Result<Self> {
        let init = match before {
            Some(x) => StateBelief::new(model.f * x, model.q),
            None => StateBelief::new(model.prior_mean, model.prior_cov),
        };
        let filtered = ukf_track_filter(model, obs, &init)?.into_iter().map(|s| s.filtered).collect();
        Ok(SegmentFilter { filtered, after })
    }

    pub fn sample<R: Rng + ?Sized>(&self, model: &TrackingModel, rng: &mut R) -> Result<(Vec<StateVec>, f64)> {
        gaussian_backward_sample(&self.filtered, &model.f, &model.q, self.after.as_ref(), rng)
    }

    pub fn log_density(&self, model: &TrackingModel, path: &[StateVec]) -> Result<f64> {
        gaussian_backward_log_density(&self.filtered, &model.f, &model.q, self.after.as_ref(), path)
    }
}

/// Scans `[max(t_b, t−τ+1), min(t_d−1, t+τ)]` of a track around `t`.
pub fn window_range(tr: &Track, t: usize, tau: usize) -> (usize, usize) {
    let lo = tr.birth.max((t + 1).saturating_sub(tau));
    let hi = tr.last_scan().min(t + tau);
    (lo, hi)
}

/// Proposal for the states of `tr` on scans `lo..=hi`, ignoring the
/// observation at `skip` if given.
pub fn window_filter(
    model: &TrackingModel,
    scene: &Scene,
    tr: &Track,
    (lo, hi): (usize, usize),
    skip: Option<usize>,
) -> Result<SegmentFilter> {
    let before = (lo > tr.birth).then(|| *tr.state_at(lo - 1));
    let after = (hi < tr.last_scan()).then(|| *tr.state_at(hi + 1));
    let obs: Vec<Option<ObsVec>> = (lo..=hi)
        .map(|s| {
            let o = tr.obs_at(s);
            (o > 0 && Some(s) != skip).then(|| *scene.y(s, o))
        })
        .collect();
    SegmentFilter::new(model, before.as_ref(), &obs, after)
}

pub fn window_states(tr: &Track, (lo, hi): (usize, usize)) -> Vec<StateVec> {
    tr.states[lo - tr.birth..=hi - tr.birth].to_vec()
}

pub fn set_window_states(tr: &mut Track, lo: usize, states: &[StateVec]) {
    let off = lo - tr.birth;
    tr.states[off..off + states.len()].copy_from_slice(states);
}
