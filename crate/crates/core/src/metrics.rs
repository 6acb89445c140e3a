//! OSPA distance between point sets and summaries of sampler traces.

use serde::{Deserialize, Serialize};

use crate::error::{MttError, Result};
use crate::moves::MoveStats;

/// OSPA distance and its localisation and cardinality components, with
/// `total^p = loc^p + card^p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ospa {
    pub total: f64,
    pub loc: f64,
    pub card: f64,
}

/// Minimum-cost assignment of every row to a distinct column of a
/// `rows × cols` cost matrix (`rows ≤ cols`), by the Hungarian method with
/// potentials. Returns the column of each row.
pub fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let m = cost.len();
    if m == 0 {
        return Vec::new();
    }
    let n = cost[0].len();
    assert!(m <= n, "more rows than columns");
    let inf = f64::INFINITY;
    let mut u = vec![0.0; m + 1];
    let mut v = vec![0.0; n + 1];
    // p[j]: row matched to column j (1-based, 0 = none).
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=m {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![0; m];
    for j in 1..=n {
        if p[j] > 0 {
            out[p[j] - 1] = j - 1;
        }
    }
    out
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// OSPA distance of order `p` with cutoff `c` between two point sets.
pub fn ospa<P: AsRef<[f64]>>(a: &[P], b: &[P], c: f64, p: f64) -> Result<Ospa> {
    if !(c > 0.0) || !(p >= 1.0) {
        return Err(MttError::InvalidParams(format!("OSPA needs c > 0 and p >= 1, got c = {c}, p = {p}")));
    }
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let (m, n) = (small.len(), large.len());
    if n == 0 {
        return Ok(Ospa { total: 0.0, loc: 0.0, card: 0.0 });
    }
    let cost: Vec<Vec<f64>> = small
        .iter()
        .map(|x| large.iter().map(|y| euclid(x.as_ref(), y.as_ref()).min(c).powf(p)).collect())
        .collect();
    let assign = min_cost_assignment(&cost);
    let loc_sum: f64 = assign.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
    let card_sum = c.powf(p) * (n - m) as f64;
    let nf = n as f64;
    Ok(Ospa {
        total: ((loc_sum + card_sum) / nf).powf(1.0 / p),
        loc: (loc_sum / nf).powf(1.0 / p),
        card: (card_sum / nf).powf(1.0 / p),
    })
}

/// One recorded sweep of a chain.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceEntry {
    pub sweep: usize,
    pub log_joint: f64,
    pub num_tracks: usize,
    /// Parameters at this sweep, when learned.
    pub theta: Option<[f64; 12]>,
    /// Move counts of this sweep alone.
    pub moves: MoveStats,
}

/// Equal-width histogram.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub mean: f64,
    pub variance: f64,
}

impl Histogram {
    /// `bins` equal-width bins spanning the data; a constant sample gets one
    /// zero-width bin.
    pub fn new(values: &[f64], bins: usize) -> Result<Self> {
        if values.is_empty() || bins == 0 {
            return Err(MttError::Validation("histogram needs values and at least one bin".into()));
        }
        let nv = values.len() as f64;
        let mean = values.iter().sum::<f64>() / nv;
        let variance = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / nv;
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if lo == hi {
            return Ok(Histogram { edges: vec![lo, hi], counts: vec![values.len() as u64], mean, variance: 0.0 });
        }
        let w = (hi - lo) / bins as f64;
        let edges = (0..=bins).map(|i| if i == bins { hi } else { lo + w * i as f64 }).collect();
        let mut counts = vec![0u64; bins];
        for v in values {
            let i = (((v - lo) / w) as usize).min(bins - 1);
            counts[i] += 1;
        }
        Ok(Histogram { edges, counts, mean, variance })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainSummary {
    /// Log densities after burn-in.
    pub log_joint: Vec<f64>,
    /// Acceptance rate per move kind after burn-in; `NaN` when never proposed.
    pub acceptance: [f64; 6],
    pub overall_acceptance: f64,
    /// Histograms of each parameter component after burn-in, when learned.
    pub theta_histograms: Vec<Histogram>,
    /// Index into the trace of the highest-density sample.
    pub map_index: usize,
}

pub fn chain_summary(trace: &[TraceEntry], burn_in: usize, bins: usize) -> Result<ChainSummary> {
    if burn_in >= trace.len() {
        return Err(MttError::Validation(format!("burn-in {burn_in} leaves nothing of a trace of {}", trace.len())));
    }
    let kept = &trace[burn_in..];
    let mut moves = MoveStats::default();
    for e in kept {
        moves.merge(&e.moves);
    }
    let acceptance =
        std::array::from_fn(|i| if moves.proposed[i] == 0 { f64::NAN } else { moves.accepted[i] as f64 / moves.proposed[i] as f64 });
    let mut map_index = burn_in;
    for (i, e) in kept.iter().enumerate() {
        if e.log_joint > trace[map_index].log_joint {
            map_index = burn_in + i;
        }
    }
    let theta_histograms = if kept.iter().all(|e| e.theta.is_some()) {
        (0..12)
            .map(|k| Histogram::new(&kept.iter().map(|e| e.theta.unwrap()[k]).collect::<Vec<_>>(), bins))
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    Ok(ChainSummary {
        log_joint: kept.iter().map(|e| e.log_joint).collect(),
        acceptance,
        overall_acceptance: moves.acceptance_rate(),
        theta_histograms,
        map_index,
    })
}
