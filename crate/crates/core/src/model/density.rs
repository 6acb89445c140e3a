//! Joint density `log p_θ(z, x, y)` in both descriptions.

use std::cmp::Ordering;

use crate::error::Result;
use crate::linalg::{ln_factorial, xlogy};
use crate::model::dynamics::TrackingModel;
use crate::model::params::ModelParams;
use crate::model::tracks::{state_order, Association, FlatStates, Scene, Track};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JointLogDensity {
    pub log_pz: f64,
    pub log_px_given_z: f64,
    pub log_py_given_xz: f64,
}

impl JointLogDensity {
    pub fn total(&self) -> f64 {
        self.log_pz + self.log_px_given_z + self.log_py_given_xz
    }
}

fn ln_poisson(k: usize, lambda: f64) -> f64 {
    -lambda + xlogy(k as f64, lambda) - ln_factorial(k)
}

/// Evaluates the three factors of the joint density on the flat description.
/// New-borns that violate the ordering rule give `log_px_given_z = -inf`.
pub fn log_joint_density(
    params: &ModelParams,
    assoc: &Association,
    states: &FlatStates,
    scene: &Scene,
) -> Result<JointLogDensity> {
    params.validate()?;
    assoc.validate(scene)?;
    let model = TrackingModel::new(&params.hmm)?;
    let mut log_pz = 0.0;
    let mut log_px = 0.0;
    let mut log_py = 0.0;
    let ln_vol = params.obs_volume().ln();
    for t in 1..=assoc.n() {
        let s = assoc.scan(t);
        let (k_s, k_x, k_d, k_y) = (s.k_s(), s.k_x(), s.k_d(), s.k_y());
        let k_prev = assoc.k_x(t - 1);
        log_pz += xlogy(k_s as f64, params.p_s) + xlogy((k_prev - k_s) as f64, 1.0 - params.p_s);
        log_pz += ln_poisson(s.k_b, params.lambda_b) + ln_poisson(s.k_f, params.lambda_f);
        log_pz += xlogy(k_d as f64, params.p_d) + xlogy((k_x - k_d) as f64, 1.0 - params.p_d);
        log_pz += ln_factorial(s.k_f) - ln_factorial(k_y);

        let xs = &states[t - 1];
        if xs.len() != k_x {
            return Err(crate::error::MttError::InvalidAssociation {
                t,
                what: format!("{} states but k_x = {k_x}", xs.len()),
            });
        }
        let ancestors = s.i_s();
        for (j, &a) in ancestors.iter().enumerate() {
            log_px += model.log_f(&xs[j], &states[t - 2][a - 1]);
        }
        let born = &xs[k_s..];
        if born.windows(2).any(|w| state_order(&w[0], &w[1]) != Ordering::Less) {
            log_px = f64::NEG_INFINITY;
        }
        log_px += ln_factorial(s.k_b);
        for x in born {
            log_px += model.log_mu(x);
        }
        log_py -= s.k_f as f64 * ln_vol;
        for (j, &o) in s.i_d.iter().enumerate() {
            if o > 0 {
                log_py += model.log_g(scene.y(t, o), &xs[j]);
            }
        }
    }
    Ok(JointLogDensity { log_pz, log_px_given_z: log_px, log_py_given_xz: log_py })
}

/// Logs of the scalar parameters, cached for repeated evaluation of track terms.
#[derive(Clone, Copy, Debug)]
pub struct LogParams {
    pub p_s: f64,
    pub q_s: f64,
    pub p_d: f64,
    pub q_d: f64,
    pub lambda_b: f64,
    /// `ln(λ_f / |Y|)`.
    pub clutter: f64,
}

impl LogParams {
    pub fn new(p: &ModelParams) -> Self {
        LogParams {
            p_s: p.p_s.ln(),
            q_s: (1.0 - p.p_s).ln(),
            p_d: p.p_d.ln(),
            q_d: (1.0 - p.p_d).ln(),
            lambda_b: p.lambda_b.ln(),
            clutter: p.lambda_f.ln() - p.obs_volume().ln(),
        }
    }
}

fn count_times(k: usize, ln_p: f64) -> f64 {
    if k == 0 {
        0.0
    } else {
        k as f64 * ln_p
    }
}

/// The factor of the joint density owned by one target.
pub fn track_log_term(model: &TrackingModel, lp: &LogParams, n: usize, scene: &Scene, tr: &Track) -> f64 {
    let l = tr.len();
    let d = tr.detections();
    let mut v = count_times(l - 1, lp.p_s) + count_times(d, lp.p_d) + count_times(l - d, lp.q_d);
    if tr.death() <= n {
        v += lp.q_s;
    }
    v += model.log_mu(&tr.states[0]);
    for w in tr.states.windows(2) {
        v += model.log_f(&w[1], &w[0]);
    }
    for (i, &o) in tr.obs.iter().enumerate() {
        if o > 0 {
            v += model.log_g(scene.y(tr.birth + i, o), &tr.states[i]);
        }
    }
    v
}

/// Terms that depend only on the scene and the rates.
pub fn scene_constant(params: &ModelParams, scene: &Scene) -> f64 {
    (1..=scene.n())
        .map(|t| -params.lambda_b - params.lambda_f - ln_factorial(scene.k_y(t)))
        .sum()
}

/// `log p_θ(z, x, y)` from the per-target description; tracks must cover
/// disjoint observations.
pub fn log_joint_tracks(
    params: &ModelParams,
    model: &TrackingModel,
    scene: &Scene,
    tracks: &[Track],
) -> f64 {
    let lp = LogParams::new(params);
    let k = tracks.len();
    let det: usize = tracks.iter().map(Track::detections).sum();
    let n_f = scene.total_obs() - det;
    let mut v = scene_constant(params, scene);
    v += count_times(k, lp.lambda_b) + count_times(n_f, lp.clutter);
    v + tracks.iter().map(|tr| track_log_term(model, &lp, scene.n(), scene, tr)).sum::<f64>()
}
