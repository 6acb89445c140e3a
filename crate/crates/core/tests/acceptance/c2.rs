//! Unbiasedness of the particle-filter likelihood estimate.

use mtt_core::gaussian::{kalman_log_marginal, LinearGaussianModel};
use mtt_core::smc::{particle_filter, Bootstrap, StateSpaceModel};
use nalgebra::{Matrix1, Vector1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::common::{mean, variance};
use crate::Outcome;

pub const T: usize = 10;
pub const PARTICLES: usize = 100;
pub const RUNS: usize = 1000;
pub const REL_TOL: f64 = 0.02;

/// `x_1 ~ N(0, 1)`, `x_{t+1} = 0.9 x_t + N(0, 1)`, `y_t = x_t + N(0, 1)`.
struct Ar1;

const A: f64 = 0.9;

fn ln_norm(r: f64, var: f64) -> f64 {
    -0.5 * ((2.0 * std::f64::consts::PI * var).ln() + r * r / var)
}

impl StateSpaceModel for Ar1 {
    type State = f64;
    type Obs = f64;
    fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        rng.sample(StandardNormal)
    }
    fn sample_transition<R: Rng + ?Sized>(&self, prev: &f64, rng: &mut R) -> f64 {
        A * prev + rng.sample::<f64, _>(StandardNormal)
    }
    fn log_initial(&self, x: &f64) -> f64 {
        ln_norm(*x, 1.0)
    }
    fn log_transition(&self, next: &f64, prev: &f64) -> f64 {
        ln_norm(next - A * prev, 1.0)
    }
    fn log_likelihood(&self, y: &f64, x: &f64) -> f64 {
        ln_norm(y - x, 1.0)
    }
}

pub fn run() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut x: f64 = rng.sample(StandardNormal);
    let mut ys = Vec::with_capacity(T);
    for _ in 0..T {
        ys.push(Some(x + rng.sample::<f64, _>(StandardNormal)));
        x = A * x + rng.sample::<f64, _>(StandardNormal);
    }
    let lg = LinearGaussianModel::<1, 1> {
        f: Matrix1::new(A),
        q: Matrix1::new(1.0),
        h: Matrix1::new(1.0),
        r: Matrix1::new(1.0),
        m0: Vector1::new(0.0),
        p0: Matrix1::new(1.0),
    };
    let obs: Vec<Option<Vector1<f64>>> = ys.iter().map(|y| y.map(Vector1::new)).collect();
    let exact = kalman_log_marginal(&lg, &obs).unwrap();
    let ratios: Vec<f64> = (0..RUNS)
        .map(|_| (particle_filter(&Ar1, &ys, PARTICLES, &Bootstrap, &mut rng).unwrap().log_lik - exact).exp())
        .collect();
    let m = mean(&ratios);
    let se = (variance(&ratios) / RUNS as f64).sqrt();
    let rel = (m - 1.0).abs();
    Outcome::new(rel < REL_TOL, format!("mean Z_hat / Z = {m:.4} (SE {se:.4}), relative error {rel:.4} (tol {REL_TOL})"))
}
