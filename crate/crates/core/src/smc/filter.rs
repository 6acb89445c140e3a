use rand::Rng;

use crate::error::{MttError, Result};
use crate::linalg::log_sum_exp;
use crate::smc::{ParticleSystem, Proposal, StateSpaceModel};

/// i.i.d. categorical draws from normalized weights.
pub fn multinomial_resample<R: Rng + ?Sized>(weights: &[f64], n: usize, rng: &mut R) -> Result<Vec<usize>> {
    if weights.is_empty() {
        return Err(MttError::Validation("cannot resample from an empty weight vector".into()));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(MttError::Validation("weights must be finite and non-negative".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(MttError::Validation(format!("weights sum to {total}, not 1")));
    }
    let mut cdf = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in weights {
        acc += w;
        cdf.push(acc);
    }
    let last = weights.iter().rposition(|&w| w > 0.0).unwrap_or(weights.len() - 1);
    Ok((0..n)
        .map(|_| {
            let u = rng.random::<f64>() * acc;
            cdf.partition_point(|&c| c <= u).min(last)
        })
        .collect())
}

/// Normalized weights from log weights, plus the log of their mean.
fn normalize(log_w: &[f64], t: usize) -> Result<(Vec<f64>, f64)> {
    let lse = log_sum_exp(log_w);
    if !lse.is_finite() {
        return Err(MttError::Degeneracy(t));
    }
    let w = log_w.iter().map(|l| (l - lse).exp()).collect();
    Ok((w, lse - (log_w.len() as f64).ln()))
}

fn incremental_weight<M: StateSpaceModel, P: Proposal<M>>(
    model: &M,
    proposal: &P,
    t: usize,
    y: Option<&M::Obs>,
    x: &M::State,
    prev: Option<&M::State>,
) -> f64 {
    let mut lw = y.map_or(0.0, |y| model.log_likelihood(y, x));
    if !proposal.is_bootstrap() {
        lw += match prev {
            None => model.log_initial(x),
            Some(p) => model.log_transition(x, p),
        };
        lw -= proposal.log_density(model, t, x, prev);
    }
    lw
}

fn run<M: StateSpaceModel, P: Proposal<M>, R: Rng + ?Sized>(
    model: &M,
    obs: &[Option<M::Obs>],
    n: usize,
    retained: Option<&[M::State]>,
    proposal: &P,
    rng: &mut R,
) -> Result<ParticleSystem<M::State>> {
    if n == 0 {
        return Err(MttError::Validation("particle count must be positive".into()));
    }
    if obs.is_empty() {
        return Err(MttError::Validation("observation sequence is empty".into()));
    }
    let len = obs.len();
    let mut ps = ParticleSystem {
        particles: Vec::with_capacity(len),
        weights: Vec::with_capacity(len),
        ancestors: Vec::with_capacity(len),
        log_lik: 0.0,
    };
    for t in 0..len {
        let y = obs[t].as_ref();
        let ancestors: Vec<usize> = if t == 0 {
            (0..n).collect()
        } else {
            let mut a = multinomial_resample(&ps.weights[t - 1], n, rng)?;
            if retained.is_some() {
                a[0] = 0;
            }
            a
        };
        let mut xs = Vec::with_capacity(n);
        let mut lw = Vec::with_capacity(n);
        for (k, &a) in ancestors.iter().enumerate() {
            let prev = if t == 0 { None } else { Some(&ps.particles[t - 1][a]) };
            let x = match retained {
                Some(path) if k == 0 => path[t].clone(),
                _ => proposal.sample(model, t, prev, rng),
            };
            lw.push(incremental_weight(model, proposal, t, y, &x, prev));
            xs.push(x);
        }
        let (w, inc) = normalize(&lw, t)?;
        ps.log_lik += inc;
        ps.particles.push(xs);
        ps.weights.push(w);
        ps.ancestors.push(ancestors);
    }
    Ok(ps)
}

/// Sequential importance resampling with multinomial resampling at every step.
pub fn particle_filter<M: StateSpaceModel, P: Proposal<M>, R: Rng + ?Sized>(
    model: &M,
    obs: &[Option<M::Obs>],
    n: usize,
    proposal: &P,
    rng: &mut R,
) -> Result<ParticleSystem<M::State>> {
    run(model, obs, n, None, proposal, rng)
}

/// Particle filter with particle 0 pinned to `retained` and its ancestor fixed to 0.
pub fn conditional_particle_filter<M: StateSpaceModel, P: Proposal<M>, R: Rng + ?Sized>(
    model: &M,
    obs: &[Option<M::Obs>],
    n: usize,
    retained: &[M::State],
    proposal: &P,
    rng: &mut R,
) -> Result<ParticleSystem<M::State>> {
    if retained.len() != obs.len() {
        return Err(MttError::Validation(format!(
            "retained path has {} states but there are {} observations",
            retained.len(),
            obs.len()
        )));
    }
    run(model, obs, n, Some(retained), proposal, rng)
}

/// Draws one trajectory by backward simulation through the particle system.
pub fn backward_simulate<M: StateSpaceModel, R: Rng + ?Sized>(
    ps: &ParticleSystem<M::State>,
    model: &M,
    rng: &mut R,
) -> Result<(Vec<usize>, Vec<M::State>)> {
    let len = ps.len();
    if len == 0 {
        return Err(MttError::Validation("particle system is empty".into()));
    }
    let mut idx = vec![0usize; len];
    idx[len - 1] = multinomial_resample(&ps.weights[len - 1], 1, rng)?[0];
    for t in (0..len - 1).rev() {
        let next = &ps.particles[t + 1][idx[t + 1]];
        let lw: Vec<f64> = ps.particles[t]
            .iter()
            .zip(&ps.weights[t])
            .map(|(x, &w)| if w > 0.0 { w.ln() + model.log_transition(next, x) } else { f64::NEG_INFINITY })
            .collect();
        let (w, _) = normalize(&lw, t)?;
        idx[t] = multinomial_resample(&w, 1, rng)?[0];
    }
    let path = idx.iter().enumerate().map(|(t, &k)| ps.particles[t][k].clone()).collect();
    Ok((idx, path))
}
