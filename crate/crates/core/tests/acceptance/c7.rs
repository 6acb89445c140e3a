//! Moments of the conjugate parameter samplers against closed forms computed
//! here from the sufficient statistics.

use mtt_core::learn::{sample_assoc_params, sample_hmm_params, AssocStats, HmmStats, PriorHyperparams};
use nalgebra::Matrix2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::common::linear_benchmark;
use crate::Outcome;

pub const DRAWS: usize = 100_000;
pub const SE_TOL: f64 = 3.0;

fn beta_moments(a: f64, b: f64) -> (f64, f64) {
    (a / (a + b), a * b / ((a + b).powi(2) * (a + b + 1.0)))
}

fn gamma_moments(shape: f64, scale: f64) -> (f64, f64) {
    (shape * scale, shape * scale * scale)
}

fn inv_gamma_moments(a: f64, b: f64) -> (f64, f64) {
    (b / (a - 1.0), b * b / ((a - 1.0).powi(2) * (a - 2.0)))
}

/// `tr(Σ⁻¹ S)` with `Σ = [[Δ³/3, Δ²/2], [Δ²/2, Δ]]`, via the explicit inverse.
fn trace_term(s: &Matrix2<f64>, d: f64) -> f64 {
    let det = d.powi(4) / 12.0;
    (d * s[(0, 0)] - d * d / 2.0 * (s[(0, 1)] + s[(1, 0)]) + d.powi(3) / 3.0 * s[(1, 1)]) / det
}

/// Largest standardised deviation of the sample mean and variance.
fn deviations(v: &[f64], mean: f64, var: f64) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let c2 = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    let c4 = v.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
    ((m - mean).abs() / (var / n).sqrt(), (c2 - var).abs() / ((c4 - c2 * c2) / n).sqrt())
}

pub fn run() -> Outcome {
    let hyper = PriorHyperparams::default();
    let (a0, b0) = (hyper.var_alpha0, hyper.var_beta0);
    let assoc = AssocStats { n: 50, survivals: 300, deaths: 20, detections: 280, misses: 30, births: 25, clutter: 150 };
    let hmm = HmmStats {
        tracks: 25,
        transitions: 300,
        sigma_hat: [Matrix2::new(40.0, 55.0, 55.0, 150.0), Matrix2::new(95.0, 130.0, 130.0, 700.0)],
        init_pos_sum: [2000.0, 2500.0],
        init_pos_sq: [161_200.0, 251_300.0],
        init_vel_sq: [230.0, 210.0],
        detections: 280,
        sigma_v: Matrix2::new(1100.0, 20.0, 20.0, 1150.0),
    };
    let current = linear_benchmark().hmm;

    let k = hmm.tracks as f64;
    let rate_scale = 1.0 / (1.0 / hyper.rate_beta0 + assoc.n as f64);
    let pos_beta: f64 = (0..2)
        .map(|a| {
            let xbar = hmm.init_pos_sum[a] / k;
            let b1 = hmm.init_pos_sq[a] - k * xbar * xbar;
            let b2 = hyper.n0 * k / (hyper.n0 + k) * (hyper.mu0 - xbar).powi(2);
            b1 + b2
        })
        .sum();
    let bp = (a0 + k, b0 + 0.5 * pos_beta);
    let bv = (a0 + k, b0 + 0.5 * (hmm.init_vel_sq[0] + hmm.init_vel_sq[1]));
    let ebp = bp.1 / (bp.0 - 1.0);
    let mu_mean = |a: usize| (hyper.n0 * hyper.mu0 + hmm.init_pos_sum[a]) / (hyper.n0 + k);
    let kd = hmm.detections as f64;
    let ks = hmm.transitions as f64;
    let expected: [(&str, (f64, f64)); 12] = [
        ("p_s", beta_moments(1.0 + assoc.survivals as f64, 1.0 + assoc.deaths as f64)),
        ("p_d", beta_moments(1.0 + assoc.detections as f64, 1.0 + assoc.misses as f64)),
        ("lambda_b", gamma_moments(hyper.rate_alpha0 + assoc.births as f64, rate_scale)),
        ("lambda_f", gamma_moments(hyper.rate_alpha0 + assoc.clutter as f64, rate_scale)),
        ("mu_bx", (mu_mean(0), ebp / (hyper.n0 + k))),
        ("mu_by", (mu_mean(1), ebp / (hyper.n0 + k))),
        ("sigma_bp2", inv_gamma_moments(bp.0, bp.1)),
        ("sigma_bv2", inv_gamma_moments(bv.0, bv.1)),
        ("sigma_x2", inv_gamma_moments(a0 + ks, b0 + 0.5 * trace_term(&hmm.sigma_hat[0], 1.0))),
        ("sigma_y2", inv_gamma_moments(a0 + ks, b0 + 0.5 * trace_term(&hmm.sigma_hat[1], 1.0))),
        ("sigma_r2", inv_gamma_moments(a0 + 0.5 * kd, b0 + 0.5 * hmm.sigma_v[(0, 0)])),
        ("sigma_b2", inv_gamma_moments(a0 + 0.5 * kd, b0 + 0.5 * hmm.sigma_v[(1, 1)])),
    ];

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut samples = vec![Vec::with_capacity(DRAWS); 12];
    let mut tied = true;
    for _ in 0..DRAWS {
        let (ps, pd, lb, lf) = sample_assoc_params(&assoc, &hyper, &mut rng);
        let h = sample_hmm_params(&hmm, &current, &hyper, &mut rng);
        tied &= h.sigma_bpx2 == h.sigma_bpy2 && h.sigma_bvx2 == h.sigma_bvy2;
        let v = [ps, pd, lb, lf, h.mu_bx, h.mu_by, h.sigma_bpx2, h.sigma_bvx2, h.sigma_x2, h.sigma_y2, h.sigma_r2, h.sigma_b2];
        for (s, x) in samples.iter_mut().zip(v) {
            s.push(x);
        }
    }
    let mut worst = (0.0, "");
    for ((name, (m, v)), s) in expected.iter().zip(&samples) {
        let (dm, dv) = deviations(s, *m, *v);
        if dm.max(dv) > worst.0 {
            worst = (dm.max(dv), name);
        }
    }
    Outcome::new(
        worst.0 < SE_TOL && tied,
        format!(
            "max deviation of mean or variance over 12 components = {:.2} SE at {} (tol {SE_TOL}); tied birth variances {}",
            worst.0,
            worst.1,
            if tied { "equal" } else { "differ" }
        ),
    )
}
