//! Invariance of the particle Gibbs kernel: the chain of conditional particle
//! filter plus backward simulation draws must match the Kalman smoother.

use mtt_core::gaussian::{kalman_filter, rts_smoother, LinearGaussianModel};
use mtt_core::linalg::{ObsVec, StateVec};
use mtt_core::model::{LinearObsModel, Scene, Track, TrackingModel};
use mtt_core::pgibbs::refresh_track;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::common::{batch_se, ks_normal, linear_benchmark, mean};
use crate::Outcome;

pub const ITERS: usize = 10_000;
pub const PARTICLES: usize = 50;
pub const SE_TOL: f64 = 3.0;
/// Family-wise level of the KS tests over all 20 marginals.
pub const KS_LEVEL: f64 = 0.01;
/// Draws kept for the KS tests, one every `THIN` iterations.
pub const THIN: usize = 10;

pub fn run() -> Outcome {
    let p = linear_benchmark();
    let model = TrackingModel::new(&p.hmm).unwrap();
    let ys = [
        Some(ObsVec::new(78.0, 103.0)),
        Some(ObsVec::new(80.5, 101.0)),
        None,
        Some(ObsVec::new(84.0, 97.5)),
        Some(ObsVec::new(85.0, 96.0)),
    ];
    let scene = Scene::new(ys.iter().map(|y| y.iter().copied().collect()).collect());
    let obs_idx = ys.iter().map(|y| usize::from(y.is_some())).collect();
    let lg = LinearGaussianModel::from_cv(&p.hmm, &LinearObsModel::from_params(&p.hmm));
    let smooth = rts_smoother(&lg, &kalman_filter(&lg, &ys).unwrap()).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut tr = Track::new(1, smooth.iter().map(|b| b.mean).collect::<Vec<StateVec>>(), obs_idx);
    let mut draws = vec![vec![Vec::new(); 4]; ys.len()];
    for _ in 0..ITERS {
        tr.states = refresh_track(&model, &scene, &tr, PARTICLES, &mut rng).unwrap();
        for (t, x) in tr.states.iter().enumerate() {
            for d in 0..4 {
                draws[t][d].push(x[d]);
            }
        }
    }

    let tests = (ys.len() * 4) as f64;
    let mut worst_z: f64 = 0.0;
    let mut min_p: f64 = 1.0;
    for (t, b) in smooth.iter().enumerate() {
        for d in 0..4 {
            let v = &draws[t][d];
            let z = (mean(v) - b.mean[d]).abs() / batch_se(v, 50);
            worst_z = worst_z.max(z);
            let thinned: Vec<f64> = v.iter().step_by(THIN).copied().collect();
            min_p = min_p.min(ks_normal(&thinned, b.mean[d], b.cov[(d, d)].sqrt()).1);
        }
    }
    let ks_ok = min_p > KS_LEVEL / tests;
    Outcome::new(
        worst_z < SE_TOL && ks_ok,
        format!(
            "max |mean - smoother| = {worst_z:.2} SE (tol {SE_TOL}); min KS p = {min_p:.4} (Bonferroni threshold {:.5})",
            KS_LEVEL / tests
        ),
    )
}
