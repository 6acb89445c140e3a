//! Conjugate Gibbs updates of the static parameters and the outer sampler
//! loops.
//!
//! Gamma laws are parametrised by shape and scale; inverse-gamma laws by shape
//! and scale of the reciprocal gamma, so `IG(α, β)` has mean `β / (α − 1)`.

use nalgebra::{Matrix2, Vector2};
use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{MttError, Result};
use crate::model::{Association, HmmParams, ModelParams, Scene, Track, TrackingModel};
use crate::moves::{dispatch_move, ChainState, MoveConfig, MoveContext, MoveStats};
use crate::pgibbs::refresh_states;

/// Prior hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PriorHyperparams {
    /// Gamma shape for `λ_b`, `λ_f`.
    pub rate_alpha0: f64,
    /// Gamma scale for `λ_b`, `λ_f`.
    pub rate_beta0: f64,
    /// Inverse-gamma shape for every variance.
    pub var_alpha0: f64,
    /// Inverse-gamma scale for every variance.
    pub var_beta0: f64,
    /// Pseudo-count of the birth-mean prior.
    pub n0: f64,
    /// Prior mean of the birth position.
    pub mu0: f64,
    /// Share the birth position variance between x and y, and likewise the
    /// birth velocity variance.
    pub tied_birth: bool,
}

impl Default for PriorHyperparams {
    fn default() -> Self {
        PriorHyperparams {
            rate_alpha0: 0.01,
            rate_beta0: 100.0,
            var_alpha0: 0.01,
            var_beta0: 0.01,
            n0: 0.01,
            mu0: 0.0,
            tied_birth: true,
        }
    }
}

impl PriorHyperparams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("rate_alpha0", self.rate_alpha0),
            ("rate_beta0", self.rate_beta0),
            ("var_alpha0", self.var_alpha0),
            ("var_beta0", self.var_beta0),
            ("n0", self.n0),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(MttError::InvalidParams(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !self.mu0.is_finite() {
            return Err(MttError::InvalidParams("mu0 must be finite".into()));
        }
        Ok(())
    }
}

/// Counts that drive the association-parameter posteriors.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AssocStats {
    pub n: usize,
    /// `Σ k_s`.
    pub survivals: usize,
    /// `Σ_{t≥2} (k_x[t−1] − k_s[t])`.
    pub deaths: usize,
    /// `Σ k_d`.
    pub detections: usize,
    /// `Σ (k_x − k_d)`.
    pub misses: usize,
    pub births: usize,
    pub clutter: usize,
}

impl AssocStats {
    pub fn from_association(assoc: &Association) -> Self {
        let mut s = AssocStats { n: assoc.n(), ..Default::default() };
        for t in 1..=assoc.n() {
            let sc = assoc.scan(t);
            s.survivals += sc.k_s();
            if t >= 2 {
                s.deaths += assoc.k_x(t - 1) - sc.k_s();
            }
            s.detections += sc.k_d();
            s.misses += sc.k_x() - sc.k_d();
            s.births += sc.k_b;
            s.clutter += sc.k_f;
        }
        s
    }

    pub fn from_tracks(scene: &Scene, tracks: &[Track]) -> Self {
        let n = scene.n();
        let mut s = AssocStats { n, ..Default::default() };
        for tr in tracks {
            s.births += 1;
            s.survivals += tr.len() - 1;
            if tr.death() <= n {
                s.deaths += 1;
            }
            s.detections += tr.detections();
            s.misses += tr.len() - tr.detections();
        }
        s.clutter = scene.total_obs() - s.detections;
        s
    }
}

/// Sufficient statistics of the state and measurement parameters.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct HmmStats {
    pub tracks: usize,
    pub transitions: usize,
    /// Outer-product sums of the transition residuals projected on each axis.
    pub sigma_hat: [Matrix2<f64>; 2],
    /// Per-axis sums of the initial positions and velocities and their squares.
    pub init_pos_sum: [f64; 2],
    pub init_pos_sq: [f64; 2],
    pub init_vel_sq: [f64; 2],
    pub detections: usize,
    /// Outer-product sum of the observation residuals.
    pub sigma_v: Matrix2<f64>,
}

impl HmmStats {
    /// Statistics of `tracks`, with residuals taken under the dynamics and
    /// sensor of `model`.
    pub fn compute(model: &TrackingModel, scene: &Scene, tracks: &[Track]) -> Self {
        let mut s = HmmStats { tracks: tracks.len(), ..Default::default() };
        for tr in tracks {
            let x1 = &tr.states[0];
            for (axis, off) in [0usize, 2].into_iter().enumerate() {
                s.init_pos_sum[axis] += x1[off];
                s.init_pos_sq[axis] += x1[off] * x1[off];
                s.init_vel_sq[axis] += x1[off + 1] * x1[off + 1];
            }
            for w in tr.states.windows(2) {
                let r = w[1] - model.f * w[0];
                for (axis, off) in [0usize, 2].into_iter().enumerate() {
                    let v = Vector2::new(r[off], r[off + 1]);
                    s.sigma_hat[axis] += v * v.transpose();
                }
                s.transitions += 1;
            }
            for (i, &o) in tr.obs.iter().enumerate() {
                if o > 0 {
                    let x = &tr.states[i];
                    let r = model.residual(scene.y(tr.birth + i, o), &model.h(x));
                    s.sigma_v += r * r.transpose();
                    s.detections += 1;
                }
            }
        }
        s
    }

    /// `tr(Σ⁻¹ Σ̂)` per axis, with `Σ` the unit-variance noise block for step `delta`.
    pub fn trace_terms(&self, delta: f64) -> [f64; 2] {
        let d = delta;
        let sigma = Matrix2::new(d * d * d / 3.0, d * d / 2.0, d * d / 2.0, d);
        let inv = sigma.try_inverse().expect("noise block is invertible for delta > 0");
        [(inv * self.sigma_hat[0]).trace(), (inv * self.sigma_hat[1]).trace()]
    }

    /// `Σ (x₁ − x̄₁)²` per axis.
    pub fn init_pos_scatter(&self) -> [f64; 2] {
        let k = self.tracks as f64;
        if self.tracks == 0 {
            return [0.0; 2];
        }
        [0, 1].map(|a| (self.init_pos_sq[a] - self.init_pos_sum[a] * self.init_pos_sum[a] / k).max(0.0))
    }
}

/// Gamma draw with the given shape and scale, kept strictly positive.
pub fn sample_gamma<R: Rng + ?Sized>(shape: f64, scale: f64, rng: &mut R) -> f64 {
    Gamma::new(shape, scale).expect("positive gamma parameters").sample(rng).max(f64::MIN_POSITIVE)
}

/// Inverse-gamma draw with shape `alpha` and scale `beta`.
pub fn sample_inv_gamma<R: Rng + ?Sized>(alpha: f64, beta: f64, rng: &mut R) -> f64 {
    1.0 / sample_gamma(alpha, 1.0 / beta, rng)
}

fn sample_beta<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    Beta::new(a, b).expect("positive beta parameters").sample(rng)
}

/// Posterior parameters of the association-parameter laws:
/// `p_s ~ Beta(·)`, `p_d ~ Beta(·)`, `λ_b, λ_f ~ Gamma(shape, scale)`.
pub fn assoc_posteriors(stats: &AssocStats, hyper: &PriorHyperparams) -> [(f64, f64); 4] {
    let scale = 1.0 / (1.0 / hyper.rate_beta0 + stats.n as f64);
    [
        (1.0 + stats.survivals as f64, 1.0 + stats.deaths as f64),
        (1.0 + stats.detections as f64, 1.0 + stats.misses as f64),
        (hyper.rate_alpha0 + stats.births as f64, scale),
        (hyper.rate_alpha0 + stats.clutter as f64, scale),
    ]
}

/// Draws `(p_s, p_d, λ_b, λ_f)` from their conditional posterior.
pub fn sample_assoc_params<R: Rng + ?Sized>(
    stats: &AssocStats,
    hyper: &PriorHyperparams,
    rng: &mut R,
) -> (f64, f64, f64, f64) {
    let [ps, pd, lb, lf] = assoc_posteriors(stats, hyper);
    (
        sample_beta(ps.0, ps.1, rng),
        sample_beta(pd.0, pd.1, rng),
        sample_gamma(lb.0, lb.1, rng),
        sample_gamma(lf.0, lf.1, rng),
    )
}

/// Inverse-gamma posteriors of the HMM variances, each as `(shape, scale)`, in
/// the order `σ_x², σ_y², σ_bpx², σ_bpy², σ_bvx², σ_bvy², σ_r², σ_b²`. With tied
/// birth variances the x and y entries coincide.
pub fn hmm_variance_posteriors(stats: &HmmStats, hyper: &PriorHyperparams, delta: f64) -> [(f64, f64); 8] {
    let (a0, b0) = (hyper.var_alpha0, hyper.var_beta0);
    let k = stats.tracks as f64;
    let tr = stats.trace_terms(delta);
    let scatter = stats.init_pos_scatter();
    let pos_term = |axis: usize| {
        let beta2 = if stats.tracks == 0 {
            0.0
        } else {
            let mean = stats.init_pos_sum[axis] / k;
            hyper.n0 * k / (hyper.n0 + k) * (hyper.mu0 - mean).powi(2)
        };
        scatter[axis] + beta2
    };
    let ks = stats.transitions as f64;
    let kd = stats.detections as f64;
    let (bpx, bpy, bvx, bvy) = if hyper.tied_birth {
        let p = (a0 + k, b0 + 0.5 * (pos_term(0) + pos_term(1)));
        let v = (a0 + k, b0 + 0.5 * (stats.init_vel_sq[0] + stats.init_vel_sq[1]));
        (p, p, v, v)
    } else {
        (
            (a0 + 0.5 * k, b0 + 0.5 * pos_term(0)),
            (a0 + 0.5 * k, b0 + 0.5 * pos_term(1)),
            (a0 + 0.5 * k, b0 + 0.5 * stats.init_vel_sq[0]),
            (a0 + 0.5 * k, b0 + 0.5 * stats.init_vel_sq[1]),
        )
    };
    [
        (a0 + ks, b0 + 0.5 * tr[0]),
        (a0 + ks, b0 + 0.5 * tr[1]),
        bpx,
        bpy,
        bvx,
        bvy,
        (a0 + 0.5 * kd, b0 + 0.5 * stats.sigma_v[(0, 0)]),
        (a0 + 0.5 * kd, b0 + 0.5 * stats.sigma_v[(1, 1)]),
    ]
}

/// Mean and variance factor of the birth-mean posterior on one axis:
/// `μ_b | σ² ~ N(mean, σ² · factor)`.
pub fn birth_mean_posterior(stats: &HmmStats, hyper: &PriorHyperparams, axis: usize) -> (f64, f64) {
    let k = stats.tracks as f64;
    ((hyper.n0 * hyper.mu0 + stats.init_pos_sum[axis]) / (hyper.n0 + k), 1.0 / (hyper.n0 + k))
}

/// Draws the HMM parameters from their conditional posterior. The step and
/// sensor of `current` are kept.
pub fn sample_hmm_params<R: Rng + ?Sized>(
    stats: &HmmStats,
    current: &HmmParams,
    hyper: &PriorHyperparams,
    rng: &mut R,
) -> HmmParams {
    let post = hmm_variance_posteriors(stats, hyper, current.delta);
    let mut draw = |i: usize| sample_inv_gamma(post[i].0, post[i].1, rng);
    let sigma_x2 = draw(0);
    let sigma_y2 = draw(1);
    let sigma_bpx2 = draw(2);
    let sigma_bpy2 = if hyper.tied_birth { sigma_bpx2 } else { draw(3) };
    let sigma_bvx2 = draw(4);
    let sigma_bvy2 = if hyper.tied_birth { sigma_bvx2 } else { draw(5) };
    let sigma_r2 = draw(6);
    let sigma_b2 = draw(7);
    let mut mean = |axis: usize, var: f64| {
        let (m, f) = birth_mean_posterior(stats, hyper, axis);
        Normal::new(m, (var * f).sqrt()).expect("finite normal parameters").sample(rng)
    };
    let mu_bx = mean(0, sigma_bpx2);
    let mu_by = mean(1, sigma_bpy2);
    HmmParams {
        sigma_x2,
        sigma_y2,
        sigma_r2,
        sigma_b2,
        mu_bx,
        mu_by,
        sigma_bpx2,
        sigma_bpy2,
        sigma_bvx2,
        sigma_bvy2,
        delta: current.delta,
        sensor: current.sensor,
    }
}

/// Draws a full `θ` given the tracks.
pub fn sample_theta<R: Rng + ?Sized>(
    state: &ChainState,
    scene: &Scene,
    params: &ModelParams,
    hyper: &PriorHyperparams,
    rng: &mut R,
) -> Result<ModelParams> {
    let model = TrackingModel::new(&params.hmm)?;
    let a = AssocStats::from_tracks(scene, state.tracks());
    let h = HmmStats::compute(&model, scene, state.tracks());
    let (p_s, p_d, lambda_b, lambda_f) = sample_assoc_params(&a, hyper, rng);
    let hmm = sample_hmm_params(&h, &params.hmm, hyper, rng);
    Ok(ModelParams { hmm, p_s, p_d, lambda_b, lambda_f, window: params.window })
}

/// Maximum-likelihood `θ` given a complete association and its states: the
/// association rates maximise `p(z)` and the HMM parameters maximise
/// `p(x, y | z)`. Returned in the order of [`crate::model::THETA_NAMES`], with
/// birth variances pooled over both axes.
pub fn theta_given_truth(scene: &Scene, tracks: &[Track], params: &ModelParams) -> Result<[f64; 12]> {
    let model = TrackingModel::new(&params.hmm)?;
    let a = AssocStats::from_tracks(scene, tracks);
    let h = HmmStats::compute(&model, scene, tracks);
    let ratio = |num: usize, den: usize| if den == 0 { f64::NAN } else { num as f64 / den as f64 };
    let n = a.n as f64;
    let k = h.tracks as f64;
    let tr = h.trace_terms(params.hmm.delta);
    let scatter = h.init_pos_scatter();
    Ok([
        ratio(a.survivals, a.survivals + a.deaths),
        ratio(a.detections, a.detections + a.misses),
        a.births as f64 / n,
        a.clutter as f64 / n,
        h.init_pos_sum[0] / k,
        h.init_pos_sum[1] / k,
        (scatter[0] + scatter[1]) / (2.0 * k),
        (h.init_vel_sq[0] + h.init_vel_sq[1]) / (2.0 * k),
        tr[0] / (2.0 * h.transitions as f64),
        tr[1] / (2.0 * h.transitions as f64),
        h.sigma_v[(0, 0)] / h.detections as f64,
        h.sigma_v[(1, 1)] / h.detections as f64,
    ])
}

/// Loop sizes of one sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    /// Association moves per sweep.
    pub n1: usize,
    /// State refreshes per sweep.
    pub n2: usize,
    /// Parameter updates per sweep.
    pub n3: usize,
    /// Particles per target in the state refresh.
    pub particles: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig { n1: 50, n2: 1, n3: 1, particles: crate::pgibbs::DEFAULT_PARTICLES }
    }
}

/// `n1` association moves followed by `n2` state refreshes, at fixed `θ`.
pub fn mcmc_mtt_sweep<R: Rng>(
    state: &mut ChainState,
    ctx: &MoveContext,
    sweep: &SweepConfig,
    rng: &mut R,
    stats: &mut MoveStats,
) -> Result<()> {
    for _ in 0..sweep.n1 {
        dispatch_move(state, ctx, rng, stats);
    }
    for _ in 0..sweep.n2 {
        *state = refresh_states(state, ctx.scene, &ctx.model, sweep.particles, rng)?;
    }
    Ok(())
}

/// One sweep of the joint sampler over associations, states and `θ`.
#[allow(clippy::too_many_arguments)]
pub fn param_sweep<R: Rng>(
    state: &mut ChainState,
    params: &mut ModelParams,
    scene: &Scene,
    hyper: &PriorHyperparams,
    move_cfg: &MoveConfig,
    sweep: &SweepConfig,
    rng: &mut R,
    stats: &mut MoveStats,
) -> Result<()> {
    if sweep.n1 + sweep.n2 > 0 {
        let ctx = MoveContext::new(scene, params, move_cfg)?;
        mcmc_mtt_sweep(state, &ctx, sweep, rng, stats)?;
    }
    for _ in 0..sweep.n3 {
        *params = sample_theta(state, scene, params, hyper, rng)?;
    }
    Ok(())
}
