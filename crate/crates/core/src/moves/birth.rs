use rand::Rng;

use crate::error::Result;
use crate::linalg::ObsVec;
use crate::model::Track;
use crate::moves::grouping::{group_measurements, group_measurements_log_prob};
use crate::moves::state::{ChainState, MoveContext};
use crate::moves::window::SegmentFilter;

fn observed(ctx: &MoveContext, t_b: usize, obs: &[usize]) -> Vec<Option<ObsVec>> {
    obs.iter().enumerate().map(|(i, &o)| (o > 0).then(|| *ctx.scene.y(t_b + i, o))).collect()
}

/// New track from clutter: birth scan uniform, observations by grouping,
/// states from the UKF smoother.
pub fn sample_birth<R: Rng + ?Sized>(state: &ChainState, ctx: &MoveContext, rng: &mut R) -> Result<(Track, f64)> {
    let n = ctx.n();
    let t_b = rng.random_range(1..=n);
    let (obs, lq_z) = group_measurements(state, ctx, t_b, rng)?;
    let filt = SegmentFilter::new(&ctx.model, None, &observed(ctx, t_b, &obs), None)?;
    let (states, lq_x) = filt.sample(&ctx.model, rng)?;
    Ok((Track::new(t_b, states, obs), -(n as f64).ln() + lq_z + lq_x))
}

pub fn log_q_birth(state: &ChainState, ctx: &MoveContext, tr: &Track) -> Result<f64> {
    let lq_z = group_measurements_log_prob(state, ctx, tr.birth, &tr.obs)?;
    if lq_z == f64::NEG_INFINITY {
        return Ok(lq_z);
    }
    let filt = SegmentFilter::new(&ctx.model, None, &observed(ctx, tr.birth, &tr.obs), None)?;
    Ok(-(ctx.n() as f64).ln() + lq_z + filt.log_density(&ctx.model, &tr.states)?)
}

pub fn log_q_death(state: &ChainState, index: usize) -> f64 {
    let k = state.num_tracks();
    if index < k {
        -(k as f64).ln()
    } else {
        f64::NEG_INFINITY
    }
}
