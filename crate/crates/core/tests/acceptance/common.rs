use mtt_core::model::{HmmParams, ModelParams, ObsWindow, SensorKind};
use statrs::distribution::{ContinuousCDF, Normal};

/// Linear-Gaussian benchmark: `p_s = 0.95, p_d = 0.9, λ_b = 0.5, λ_f = 3`,
/// `μ_b = (80, 0, 100, 0)`, `Σ_b = diag(49, 9, 49, 9)`, `σ_x = 0.7`,
/// `σ_y = 1.5`, `Σ_v = diag(4, 4)`.
pub fn linear_benchmark() -> ModelParams {
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
        p_s: 0.95,
        p_d: 0.9,
        lambda_b: 0.5,
        lambda_f: 3.0,
        window: ObsWindow { lo: [-150.0, -150.0], hi: [350.0, 350.0] },
    }
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64
}

/// Standard error of the mean of a correlated series from `batches` batch means.
pub fn batch_se(v: &[f64], batches: usize) -> f64 {
    let b = v.len() / batches;
    let means: Vec<f64> = (0..batches).map(|i| mean(&v[i * b..(i + 1) * b])).collect();
    (variance(&means) / batches as f64).sqrt()
}

/// Empirical quantile by linear interpolation, `q` in `[0, 1]`.
pub fn quantile(v: &[f64], q: f64) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let h = q * (s.len() - 1) as f64;
    let (i, f) = (h.floor() as usize, h - h.floor());
    if i + 1 < s.len() {
        s[i] + f * (s[i + 1] - s[i])
    } else {
        s[i]
    }
}

/// One-sample Kolmogorov–Smirnov test against `N(mu, sd²)`: returns the
/// statistic and its asymptotic p-value.
pub fn ks_normal(v: &[f64], mu: f64, sd: f64) -> (f64, f64) {
    let dist = Normal::new(mu, sd).unwrap();
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in s.iter().enumerate() {
        let f = dist.cdf(*x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    let lam = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    let mut p = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        p += 2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * lam * lam).exp();
    }
    (d, p.clamp(0.0, 1.0))
}
