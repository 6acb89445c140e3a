//! Stationarity of the full sampler against an exhaustive enumeration of the
//! association posterior on a two-scan scene.

use std::collections::HashMap;

use mtt_core::gaussian::cv_log_marginal;
use mtt_core::learn::{mcmc_mtt_sweep, SweepConfig};
use mtt_core::linalg::{ln_factorial, ObsVec};
use mtt_core::model::{HmmParams, LinearObsModel, ModelParams, ObsWindow, Scene, SensorKind};
use mtt_core::moves::{ChainState, MoveConfig, MoveContext, MoveStats};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::Outcome;

pub const SWEEPS: usize = 200_000;
pub const TV_TOL: f64 = 0.05;
/// Undetected tracks beyond this count are left out of the enumeration.
const MAX_UNDETECTED: usize = 6;

/// A track up to relabelling: birth scan and observation indices.
pub type Piece = (usize, Vec<usize>);
/// An association up to relabelling, pieces sorted.
pub type Structure = Vec<Piece>;

pub fn params() -> ModelParams {
    ModelParams {
        hmm: HmmParams {
            sigma_x2: 0.49,
            sigma_y2: 2.25,
            sigma_r2: 4.0,
            sigma_b2: 4.0,
            mu_bx: 80.0,
            mu_by: 100.0,
            sigma_bpx2: 49.0,
            sigma_bpy2: 49.0,
            sigma_bvx2: 9.0,
            sigma_bvy2: 9.0,
            delta: 1.0,
            sensor: SensorKind::Linear,
        },
        p_s: 0.8,
        p_d: 0.85,
        lambda_b: 0.6,
        lambda_f: 0.5,
        window: ObsWindow { lo: [40.0, 60.0], hi: [120.0, 140.0] },
    }
}

pub fn scene() -> Scene {
    Scene::new(vec![
        vec![ObsVec::new(76.0, 97.0), ObsVec::new(84.0, 104.0)],
        vec![ObsVec::new(79.0, 103.0), ObsVec::new(86.0, 99.0)],
    ])
}

fn all_pieces(scene: &Scene) -> Vec<Piece> {
    let n = scene.n();
    let mut out = Vec::new();
    for tb in 1..=n {
        for len in 1..=n + 1 - tb {
            let mut seqs: Vec<Vec<usize>> = vec![vec![]];
            for s in tb..tb + len {
                seqs = seqs
                    .into_iter()
                    .flat_map(|q| {
                        (0..=scene.k_y(s)).map(move |o| {
                            let mut q = q.clone();
                            q.push(o);
                            q
                        })
                    })
                    .collect();
            }
            out.extend(seqs.into_iter().map(|q| (tb, q)));
        }
    }
    out
}

/// Unnormalised log posterior of a structure with the states integrated out
/// by the Kalman filter. Terms common to all structures are dropped.
fn log_weight(p: &ModelParams, scene: &Scene, s: &Structure) -> f64 {
    let n = scene.n();
    let obs_model = LinearObsModel::from_params(&p.hmm);
    let dets: usize = s.iter().map(|(_, o)| o.iter().filter(|&&x| x > 0).count()).sum();
    let n_f = scene.total_obs() - dets;
    let mut v = s.len() as f64 * p.lambda_b.ln() + n_f as f64 * (p.lambda_f / p.obs_volume()).ln();
    for (tb, obs) in s {
        let l = obs.len();
        let d = obs.iter().filter(|&&x| x > 0).count();
        v += (l - 1) as f64 * p.p_s.ln();
        if tb + l <= n {
            v += (1.0 - p.p_s).ln();
        }
        v += d as f64 * p.p_d.ln() + (l - d) as f64 * (1.0 - p.p_d).ln();
        let ys: Vec<Option<ObsVec>> =
            obs.iter().enumerate().map(|(i, &o)| (o > 0).then(|| *scene.y(tb + i, o))).collect();
        v += cv_log_marginal(&p.hmm, &obs_model, &ys).unwrap();
    }
    let mut i = 0;
    while i < s.len() {
        let j = (i..s.len()).find(|&j| s[j] != s[i]).unwrap_or(s.len());
        v -= ln_factorial(j - i);
        i = j;
    }
    v
}

/// Exact posterior over structures with at most `MAX_UNDETECTED` undetected
/// tracks.
pub fn enumerate(p: &ModelParams, scene: &Scene) -> HashMap<Structure, f64> {
    let pieces = all_pieces(scene);
    let (detected, undetected): (Vec<Piece>, Vec<Piece>) =
        pieces.into_iter().partition(|(_, o)| o.iter().any(|&x| x > 0));
    let mut det_sets: Vec<Vec<Piece>> = Vec::new();
    fn rec(i: usize, cur: &mut Vec<Piece>, cands: &[Piece], out: &mut Vec<Vec<Piece>>) {
        if i == cands.len() {
            out.push(cur.clone());
            return;
        }
        rec(i + 1, cur, cands, out);
        let (tb, o) = &cands[i];
        let clash = cur.iter().any(|(tb2, o2)| {
            o.iter().enumerate().any(|(k, &x)| x > 0 && tb + k >= *tb2 && tb + k < tb2 + o2.len() && o2[tb + k - tb2] == x)
        });
        if !clash {
            cur.push(cands[i].clone());
            rec(i + 1, cur, cands, out);
            cur.pop();
        }
    }
    rec(0, &mut Vec::new(), &detected, &mut det_sets);
    let mut und_sets: Vec<Vec<Piece>> = vec![vec![]];
    for _ in 0..MAX_UNDETECTED {
        let last: Vec<Vec<Piece>> = und_sets.iter().filter(|s| s.len() == und_sets.last().unwrap().len()).cloned().collect();
        for s in last {
            let start = s.last().map(|x| undetected.iter().position(|u| u == x).unwrap()).unwrap_or(0);
            for u in &undetected[start..] {
                let mut t = s.clone();
                t.push(u.clone());
                und_sets.push(t);
            }
        }
    }
    let mut logw = HashMap::new();
    for d in &det_sets {
        for u in &und_sets {
            let mut s: Structure = d.iter().chain(u.iter()).cloned().collect();
            s.sort();
            let w = log_weight(p, scene, &s);
            logw.insert(s, w);
        }
    }
    let m = logw.values().copied().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = logw.values().map(|w| (w - m).exp()).sum();
    logw.into_iter().map(|(s, w)| (s, (w - m).exp() / z)).collect()
}

pub fn structure_of(state: &ChainState) -> Structure {
    let mut s: Structure = state.tracks().iter().map(|t| (t.birth, t.obs.clone())).collect();
    s.sort();
    s
}

pub fn total_variation(post: &HashMap<Structure, f64>, counts: &HashMap<Structure, usize>, total: usize) -> f64 {
    let mut tv = 0.0;
    for (s, p) in post {
        let e = counts.get(s).copied().unwrap_or(0) as f64 / total as f64;
        tv += (p - e).abs();
    }
    for (s, c) in counts {
        if !post.contains_key(s) {
            tv += *c as f64 / total as f64;
        }
    }
    0.5 * tv
}

pub fn run() -> Outcome {
    let p = params();
    let sc = scene();
    let post = enumerate(&p, &sc);
    let cfg = MoveConfig { gate_radius: 1e3, ..MoveConfig::default() };
    let ctx = MoveContext::new(&sc, &p, &cfg).unwrap();
    let sweep = SweepConfig { n1: 10, n2: 1, n3: 0, particles: 15 };
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut state = ChainState::empty(&sc);
    let mut stats = MoveStats::default();
    let mut counts: HashMap<Structure, usize> = HashMap::new();
    for _ in 0..SWEEPS {
        mcmc_mtt_sweep(&mut state, &ctx, &sweep, &mut rng, &mut stats).unwrap();
        *counts.entry(structure_of(&state)).or_default() += 1;
    }
    let tv = total_variation(&post, &counts, SWEEPS);
    let top = post.values().copied().fold(0.0, f64::max);
    Outcome::new(
        tv < TV_TOL,
        format!(
            "TV = {tv:.4} (tol {TV_TOL}) over {} enumerated structures, top mass {top:.3}, {SWEEPS} sweeps",
            post.len()
        ),
    )
}
