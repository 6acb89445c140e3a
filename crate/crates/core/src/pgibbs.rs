//! Particle Gibbs refresh of every target's state trajectory given the
//! association.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::linalg::{ObsVec, StateVec};
use crate::model::{Scene, Track, TrackingModel};
use crate::moves::ChainState;
use crate::smc::{backward_simulate, conditional_particle_filter, Bootstrap};

/// Particles per target.
pub const DEFAULT_PARTICLES: usize = 15;

/// New trajectory for one track: conditional particle filter on its own
/// observations, retaining the current path, then backward simulation.
pub fn refresh_track<R: Rng + ?Sized>(
    model: &TrackingModel,
    scene: &Scene,
    tr: &Track,
    n_particles: usize,
    rng: &mut R,
) -> Result<Vec<StateVec>> {
    let obs: Vec<Option<ObsVec>> =
        tr.obs.iter().enumerate().map(|(i, &o)| (o > 0).then(|| *scene.y(tr.birth + i, o))).collect();
    let ps = conditional_particle_filter(model, &obs, n_particles.max(1), &tr.states, &Bootstrap, rng)?;
    Ok(backward_simulate(&ps, model, rng)?.1)
}

/// Refreshes all tracks. Each track draws from its own stream of a generator
/// seeded once per call, so results do not depend on processing order.
pub fn refresh_states<R: Rng + ?Sized>(
    state: &ChainState,
    scene: &Scene,
    model: &TrackingModel,
    n_particles: usize,
    rng: &mut R,
) -> Result<ChainState> {
    let base: u64 = rng.random();
    let paths = state
        .tracks()
        .iter()
        .enumerate()
        .map(|(k, tr)| {
            let mut r = ChaCha8Rng::seed_from_u64(base);
            r.set_stream(k as u64);
            refresh_track(model, scene, tr, n_particles, &mut r)
        })
        .collect::<Result<Vec<_>>>()?;
    state.with_states(paths)
}
