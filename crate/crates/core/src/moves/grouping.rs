//! Block-wise assignment of clutter observations to a new-born track.
//!
//! Starting from the birth scan, the scans are processed in blocks of `t_m`
//! scans. With probability `p_m` one candidate observation in the block is
//! attached to the track (the first uniformly among the clutter of the
//! block, later ones in proportion to the UKF predictive density inside the
//! gate); otherwise the whole block is skipped. A latent death time drawn
//! from the survival prior stops the recursion; when no candidate exists a
//! death time inside the block is drawn instead. The evaluator sums over the
//! latent death time and every choice sequence that yields the same track.

use std::collections::HashMap;

use rand::Rng;

use crate::error::{MttError, Result};
use crate::gaussian::{predict, predict_obs, update, ObsPrediction, StateBelief};
use crate::linalg::log_sum_exp;
use crate::moves::state::{ChainState, MoveContext};

/// Smallest `t ≥ 1` with `(1 − p_d)^t < 1 − p_m`.
pub fn compute_tm(p_d: f64, p_m: f64) -> Result<usize> {
    if !(p_d > 0.0 && p_d <= 1.0) {
        return Err(MttError::InvalidParams(format!("p_d must lie in (0, 1] for a finite block length, got {p_d}")));
    }
    if !(p_m > 0.0 && p_m < 1.0) {
        return Err(MttError::InvalidParams(format!("p_m must lie in (0, 1), got {p_m}")));
    }
    let mut t = 1;
    while (1.0 - p_d).powi(t as i32) >= 1.0 - p_m {
        t += 1;
    }
    Ok(t)
}

#[derive(Clone, Copy, Debug)]
struct Candidate {
    scan: usize,
    obs: usize,
    log_p: f64,
}

/// Beliefs anchored at the prior (index 0) or at each successive detection.
struct Grouper<'a, 'b> {
    state: &'a ChainState,
    ctx: &'a MoveContext<'b>,
    t_b: usize,
    anchors: Vec<(usize, usize, StateBelief)>,
    preds: HashMap<(usize, usize), (StateBelief, ObsPrediction)>,
    cands: HashMap<(usize, usize, usize), Vec<Candidate>>,
}

impl<'a, 'b> Grouper<'a, 'b> {
    fn new(state: &'a ChainState, ctx: &'a MoveContext<'b>, t_b: usize) -> Self {
        let prior = StateBelief::new(ctx.model.prior_mean, ctx.model.prior_cov);
        Grouper { state, ctx, t_b, anchors: vec![(t_b, 0, prior)], preds: HashMap::new(), cands: HashMap::new() }
    }

    fn predicted(&mut self, anchor: usize, scan: usize) -> Result<(StateBelief, ObsPrediction)> {
        if let Some(p) = self.preds.get(&(anchor, scan)) {
            return Ok(p.clone());
        }
        // The prior anchor is a prediction for the birth scan; detection
        // anchors are filtered beliefs at earlier scans.
        let (t0, _, b0) = &self.anchors[anchor];
        let mut b = b0.clone();
        for _ in *t0..scan {
            b = predict(&self.ctx.model, &b);
        }
        let op = predict_obs(&self.ctx.model, &b)?;
        self.preds.insert((anchor, scan), (b.clone(), op.clone()));
        Ok((b, op))
    }

    fn candidates(&mut self, anchor: usize, lo: usize, hi: usize) -> Result<Vec<Candidate>> {
        if let Some(c) = self.cands.get(&(anchor, lo, hi)) {
            return Ok(c.clone());
        }
        let mut out = Vec::new();
        if anchor == 0 {
            for s in lo..=hi {
                out.extend(self.state.clutter_at(s).into_iter().map(|o| Candidate { scan: s, obs: o, log_p: 0.0 }));
            }
            let lz = -(out.len() as f64).ln();
            out.iter_mut().for_each(|c| c.log_p = lz);
        } else {
            let gate2 = self.ctx.cfg.gate_radius * self.ctx.cfg.gate_radius;
            for s in lo..=hi {
                let clutter = self.state.clutter_at(s);
                if clutter.is_empty() {
                    continue;
                }
                let (_, op) = self.predicted(anchor, s)?;
                for o in clutter {
                    let y = self.ctx.scene.y(s, o);
                    if op.mahalanobis2(&self.ctx.model, y) <= gate2 {
                        out.push(Candidate { scan: s, obs: o, log_p: op.log_density(&self.ctx.model, y) });
                    }
                }
            }
            let lz = log_sum_exp(&out.iter().map(|c| c.log_p).collect::<Vec<_>>());
            out.iter_mut().for_each(|c| c.log_p -= lz);
        }
        self.cands.insert((anchor, lo, hi), out.clone());
        Ok(out)
    }

    /// Anchor after attaching observation `o` at `scan` to the belief `anchor`.
    fn detect(&mut self, anchor: usize, scan: usize, o: usize) -> Result<usize> {
        if self.anchors.get(anchor + 1).is_some_and(|a| a.0 == scan && a.1 == o) {
            return Ok(anchor + 1);
        }
        let (pred, op) = self.predicted(anchor, scan)?;
        let (post, _) = update(&self.ctx.model, &pred, &op, self.ctx.scene.y(scan, o));
        self.anchors.truncate(anchor + 1);
        self.anchors.push((scan, o, post));
        Ok(anchor + 1)
    }

    fn ln_p_s(&self) -> f64 {
        self.ctx.lp.p_s
    }

    fn initial_death_log_p(&self, t_d: usize) -> f64 {
        let n = self.ctx.n();
        let l = t_d - self.t_b;
        let l_max = n + 1 - self.t_b;
        let mut v = if l > 1 { (l - 1) as f64 * self.ln_p_s() } else { 0.0 };
        if l < l_max {
            v += self.ctx.lp.q_s;
        }
        v
    }

    fn termination_range(&self, t_p: usize) -> (usize, usize) {
        ((t_p + 1).max(self.t_b + 1), t_p + self.ctx.t_m + 1)
    }

    fn termination_log_p(&self, t_p: usize, t_d: usize) -> f64 {
        let (lo, hi) = self.termination_range(t_p);
        if t_d < lo || t_d > hi {
            return f64::NEG_INFINITY;
        }
        let rate = self.ctx.params.p_s * (1.0 - self.ctx.params.p_d);
        if rate == 0.0 {
            return if t_d == lo { 0.0 } else { f64::NEG_INFINITY };
        }
        let lr = rate.ln();
        let logs: Vec<f64> = (lo..=hi).map(|j| (j - lo) as f64 * lr).collect();
        (t_d - lo) as f64 * lr - log_sum_exp(&logs)
    }
}

/// Draws a new-born track's observation vector starting at `t_b` and returns
/// it together with its log proposal probability.
pub fn group_measurements<R: Rng + ?Sized>(
    state: &ChainState,
    ctx: &MoveContext,
    t_b: usize,
    rng: &mut R,
) -> Result<(Vec<usize>, f64)> {
    let n = ctx.n();
    if t_b < 1 || t_b > n {
        return Err(MttError::Validation(format!("birth scan {t_b} outside 1..{n}")));
    }
    let mut g = Grouper::new(state, ctx, t_b);
    let p_s = ctx.params.p_s;
    let l_max = n + 1 - t_b;
    let mut l = 1;
    while l < l_max && rng.random::<f64>() < p_s {
        l += 1;
    }
    let mut t_d = t_b + l;
    let mut t_p = t_b - 1;
    let mut anchor = 0;
    let mut dets: Vec<(usize, usize)> = Vec::new();
    loop {
        let hi = (t_p + ctx.t_m).min(t_d - 1);
        if hi < t_p + 1 {
            break;
        }
        if rng.random::<f64>() < ctx.cfg.p_m {
            let cands = g.candidates(anchor, t_p + 1, hi)?;
            if cands.is_empty() {
                if t_d > t_p + ctx.t_m {
                    let (lo, hi) = g.termination_range(t_p);
                    let logs: Vec<f64> = (lo..=hi).map(|j| g.termination_log_p(t_p, j)).collect();
                    t_d = lo + pick_log(&logs, rng);
                }
                break;
            }
            let c = cands[pick_log(&cands.iter().map(|c| c.log_p).collect::<Vec<_>>(), rng)];
            anchor = g.detect(anchor, c.scan, c.obs)?;
            dets.push((c.scan, c.obs));
            t_p = c.scan;
        } else {
            if t_d <= t_p + ctx.t_m + 1 {
                break;
            }
            t_p += ctx.t_m;
        }
    }
    let mut obs = vec![0; t_d - t_b];
    for (s, o) in dets {
        obs[s - t_b] = o;
    }
    let lq = eval_with(&mut g, &obs)?;
    Ok((obs, lq))
}

/// Log probability that [`group_measurements`] returns `obs` for birth scan `t_b`.
pub fn group_measurements_log_prob(state: &ChainState, ctx: &MoveContext, t_b: usize, obs: &[usize]) -> Result<f64> {
    let n = ctx.n();
    if t_b < 1 || t_b > n || obs.is_empty() || t_b + obs.len() > n + 1 {
        return Ok(f64::NEG_INFINITY);
    }
    for (i, &o) in obs.iter().enumerate() {
        if o > 0 && state.owner(t_b + i, o).is_some() {
            return Ok(f64::NEG_INFINITY);
        }
    }
    let mut g = Grouper::new(state, ctx, t_b);
    eval_with(&mut g, obs)
}

fn eval_with(g: &mut Grouper, obs: &[usize]) -> Result<f64> {
    let t_b = g.t_b;
    let dets: Vec<(usize, usize)> =
        obs.iter().enumerate().filter(|(_, &o)| o > 0).map(|(i, &o)| (t_b + i, o)).collect();
    let t_final = t_b + obs.len();
    let n = g.ctx.n();
    let mut terms = Vec::new();
    for t_d in t_final..=n + 1 {
        let p0 = g.initial_death_log_p(t_d);
        if p0 == f64::NEG_INFINITY {
            continue;
        }
        let e = eval_rec(g, &dets, t_final, t_b - 1, 0, t_d)?;
        terms.push(p0 + e);
    }
    Ok(log_sum_exp(&terms))
}

fn eval_rec(g: &mut Grouper, dets: &[(usize, usize)], t_final: usize, t_p: usize, ptr: usize, t_d: usize) -> Result<f64> {
    let t_m = g.ctx.t_m;
    let ln_pm = g.ctx.cfg.p_m.ln();
    let ln_skip = (1.0 - g.ctx.cfg.p_m).ln();
    let hi = (t_p + t_m).min(t_d - 1);
    let ends_here = |td: usize| if t_final == td { 0.0 } else { f64::NEG_INFINITY };
    if hi < t_p + 1 {
        return Ok(if ptr == dets.len() { ends_here(t_d) } else { f64::NEG_INFINITY });
    }
    if ptr < dets.len() {
        let (s, o) = dets[ptr];
        if s <= hi {
            let cands = g.candidates(ptr, t_p + 1, hi)?;
            let Some(c) = cands.iter().find(|c| c.scan == s && c.obs == o) else {
                return Ok(f64::NEG_INFINITY);
            };
            let lp = c.log_p;
            let next = g.detect(ptr, s, o)?;
            return Ok(ln_pm + lp + eval_rec(g, dets, t_final, s, next, t_d)?);
        }
        if t_d <= t_p + t_m + 1 {
            return Ok(f64::NEG_INFINITY);
        }
        return Ok(ln_skip + eval_rec(g, dets, t_final, t_p + t_m, ptr, t_d)?);
    }
    let mut terms = Vec::with_capacity(2);
    if t_d <= t_p + t_m + 1 {
        terms.push(ln_skip + ends_here(t_d));
    } else {
        terms.push(ln_skip + eval_rec(g, dets, t_final, t_p + t_m, ptr, t_d)?);
    }
    if g.candidates(ptr, t_p + 1, hi)?.is_empty() {
        if t_d <= t_p + t_m {
            terms.push(ln_pm + ends_here(t_d));
        } else {
            terms.push(ln_pm + g.termination_log_p(t_p, t_final));
        }
    }
    Ok(log_sum_exp(&terms))
}

/// Index drawn with probabilities proportional to `exp(logs)`.
pub(crate) fn pick_log<R: Rng + ?Sized>(logs: &[f64], rng: &mut R) -> usize {
    let lz = log_sum_exp(logs);
    let u = rng.random::<f64>();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, l) in logs.iter().enumerate() {
        let p = (l - lz).exp();
        if p > 0.0 {
            last = i;
        }
        acc += p;
        if u < acc {
            return i;
        }
    }
    last
}
