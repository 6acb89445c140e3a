use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::Result;
use crate::linalg::ObsVec;
use crate::model::dynamics::TrackingModel;
use crate::model::params::ModelParams;
use crate::model::tracks::{decompose, recompose, state_order, Association, FlatStates, Scene, Track, TrackSet};

pub(crate) fn poisson<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> usize {
    if lambda <= 0.0 {
        return 0;
    }
    Poisson::new(lambda).expect("positive rate").sample(rng) as usize
}

/// Draws `(z, x, y)` from the generative model; the scene carries the truth.
pub fn simulate(params: &ModelParams, n: usize, seed: u64) -> Result<(Association, FlatStates, Scene)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    simulate_with_rng(params, n, &mut rng)
}

pub fn simulate_with_rng<R: Rng + ?Sized>(
    params: &ModelParams,
    n: usize,
    rng: &mut R,
) -> Result<(Association, FlatStates, Scene)> {
    params.validate()?;
    if n == 0 {
        return Err(crate::error::MttError::InvalidParams("scan count must be at least 1".into()));
    }
    let model = TrackingModel::new(&params.hmm)?;
    let w = params.window;
    let mut tracks: Vec<Track> = Vec::new();
    let mut slots: Vec<usize> = Vec::new();
    let mut obs_all = Vec::with_capacity(n);
    for t in 1..=n {
        let mut next = Vec::new();
        for &k in &slots {
            if rng.random::<f64>() < params.p_s {
                let x = model.sample_f(tracks[k].states.last().unwrap(), rng);
                tracks[k].states.push(x);
                next.push(k);
            }
        }
        let k_b = poisson(params.lambda_b, rng);
        let mut born: Vec<_> = (0..k_b).map(|_| model.sample_mu(rng)).collect();
        born.sort_by(state_order);
        for x in born {
            next.push(tracks.len());
            tracks.push(Track::new(t, vec![x], Vec::new()));
        }
        let detected: Vec<bool> = next.iter().map(|_| rng.random::<f64>() < params.p_d).collect();
        let k_d = detected.iter().filter(|&&d| d).count();
        let k_f = poisson(params.lambda_f, rng);
        let k_y = k_d + k_f;
        let mut positions: Vec<usize> = (0..k_y).collect();
        positions.shuffle(rng);
        let mut ys = vec![ObsVec::zeros(); k_y];
        let mut pos = positions.iter();
        for (j, &k) in next.iter().enumerate() {
            if detected[j] {
                let p = *pos.next().unwrap();
                ys[p] = model.sample_g(tracks[k].states.last().unwrap(), rng);
                tracks[k].obs.push(p + 1);
            } else {
                tracks[k].obs.push(0);
            }
        }
        for &p in pos {
            ys[p] = ObsVec::new(
                w.lo[0] + rng.random::<f64>() * (w.hi[0] - w.lo[0]),
                w.lo[1] + rng.random::<f64>() * (w.hi[1] - w.lo[1]),
            );
        }
        obs_all.push(ys);
        slots = next;
    }
    let mut scene = Scene::new(obs_all);
    let truth = TrackSet::from_tracks(&scene, tracks)?;
    let (assoc, states) = recompose(&truth, &scene)?;
    debug_assert_eq!(decompose(&assoc, &states, &scene)?, truth);
    scene.truth = Some(truth);
    Ok((assoc, states, scene))
}
