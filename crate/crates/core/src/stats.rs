//! Goodness-of-fit statistics and Monte Carlo standard errors used by the
//! validation battery and the statistical test suites.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Two-sample Kolmogorov–Smirnov statistic. Sorts copies of the inputs.
pub fn ks_two_sample(x: &[f64], y: &[f64]) -> f64 {
    let mut a = x.to_vec();
    let mut b = y.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// One-sample Kolmogorov–Smirnov statistic against a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(x: &[f64], cdf: F) -> f64 {
    let mut a = x.to_vec();
    a.sort_by(f64::total_cmp);
    let n = a.len() as f64;
    a.iter().enumerate().fold(0.0, |d: f64, (i, &v)| {
        let f = cdf(v);
        d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
    })
}

/// Asymptotic Kolmogorov survival function `P(K > lambda)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=200 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if (k as i64) % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// p-value for a KS statistic `d` with effective sample size `n_eff`
/// (`n` for one-sample, `n m / (n + m)` for two-sample).
pub fn ks_p_value(d: f64, n_eff: f64) -> f64 {
    let s = n_eff.sqrt();
    kolmogorov_sf((s + 0.12 + 0.11 / s) * d)
}

pub fn ks_two_sample_p(x: &[f64], y: &[f64]) -> (f64, f64) {
    let d = ks_two_sample(x, y);
    let n_eff = (x.len() * y.len()) as f64 / (x.len() + y.len()) as f64;
    (d, ks_p_value(d, n_eff))
}

/// Pearson chi-square goodness of fit of observed counts against expected
/// probabilities. Cells with expected count below `min_expected` are pooled.
/// Returns `(statistic, degrees of freedom, p-value)`.
pub fn chi_square_gof(counts: &[u64], probs: &[f64], min_expected: f64) -> (f64, usize, f64) {
    assert_eq!(counts.len(), probs.len());
    let total: u64 = counts.iter().sum();
    let n = total as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut obs_acc, mut exp_acc) = (0.0, 0.0);
    for (&c, &p) in counts.iter().zip(probs) {
        obs_acc += c as f64;
        exp_acc += p * n;
        if exp_acc >= min_expected {
            cells.push((obs_acc, exp_acc));
            obs_acc = 0.0;
            exp_acc = 0.0;
        }
    }
    if exp_acc > 0.0 || obs_acc > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += obs_acc;
                last.1 += exp_acc;
            }
            None => cells.push((obs_acc, exp_acc)),
        }
    }
    let stat: f64 = cells.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let df = cells.len().saturating_sub(1);
    let p = if df == 0 { 1.0 } else { ChiSquared::new(df as f64).map(|d| d.sf(stat)).unwrap_or(0.0) };
    (stat, df, p)
}

/// Sample mean and variance (divisor `n - 1`).
pub fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Estimate with its Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl Estimate {
    /// Distance from `target` measured in standard errors.
    pub fn z(&self, target: f64) -> f64 {
        (self.value - target) / self.se
    }

    pub fn within(&self, target: f64, n_se: f64) -> bool {
        (self.value - target).abs() <= n_se * self.se
    }
}

/// Mean of i.i.d. draws.
pub fn mean_estimate(x: &[f64]) -> Estimate {
    let (m, v) = mean_var(x);
    Estimate { value: m, se: (v / x.len() as f64).sqrt() }
}

/// Variance of i.i.d. draws, standard error from the fourth central moment.
pub fn variance_estimate(x: &[f64]) -> Estimate {
    let n = x.len() as f64;
    let (m, v) = mean_var(x);
    let m4 = x.iter().map(|a| (a - m).powi(4)).sum::<f64>() / n;
    Estimate { value: v, se: ((m4 - v * v) / n).max(0.0).sqrt() }
}

/// Pearson correlation of paired i.i.d. draws with a nonparametric
/// (influence-function) standard error.
pub fn correlation_estimate(x: &[f64], y: &[f64]) -> Estimate {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let (mx, vx) = mean_var(x);
    let (my, vy) = mean_var(y);
    let (sx, sy) = (vx.sqrt(), vy.sqrt());
    let r = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / ((n - 1.0) * sx * sy);
    let infl: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let (za, zb) = ((a - mx) / sx, (b - my) / sy);
            za * zb - 0.5 * r * (za * za + zb * zb)
        })
        .collect();
    let (_, vi) = mean_var(&infl);
    Estimate { value: r, se: (vi / n).sqrt() }
}

/// Mean of an autocorrelated trace with a batch-means standard error.
pub fn batch_means_estimate(x: &[f64], batches: usize) -> Estimate {
    let len = x.len() / batches;
    assert!(len >= 1, "trace too short for {batches} batches");
    let means: Vec<f64> = (0..batches).map(|b| x[b * len..(b + 1) * len].iter().sum::<f64>() / len as f64).collect();
    let (m, v) = mean_var(&means);
    Estimate { value: m, se: (v / batches as f64).sqrt() }
}
