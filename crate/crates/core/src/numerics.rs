//! Log-space helpers shared by the transition series, the discrete full
//! conditionals and the quadrature-based checks.

use rand::Rng;

pub use statrs::function::gamma::ln_gamma;

/// `ln(n!)`
#[inline]
pub fn ln_factorial(n: u64) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

/// `ln C(n, k)`
#[inline]
pub fn ln_choose(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n);
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

#[inline]
pub fn ln_beta_fn(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Log density of Beta(a, b) at `x` in (0, 1).
#[inline]
pub fn beta_ln_pdf(x: f64, a: f64, b: f64) -> f64 {
    (a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p() - ln_beta_fn(a, b)
}

/// Log probability of `k` successes in `n` Bernoulli(p) trials, with the
/// degenerate endpoints p = 0 and p = 1 handled exactly.
pub fn binomial_ln_pmf(k: u64, n: u64, p: f64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    if p <= 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if p >= 1.0 {
        return if k == n { 0.0 } else { f64::NEG_INFINITY };
    }
    ln_choose(n, k) + k as f64 * p.ln() + (n - k) as f64 * (-p).ln_1p()
}

/// `ln(1 - exp(-x))` for `x > 0`, accurate at both ends.
#[inline]
pub fn ln_one_minus_exp_neg(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x < std::f64::consts::LN_2 {
        (-(-x).exp_m1()).ln()
    } else {
        (-(-x).exp()).ln_1p()
    }
}

pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Normalizes unnormalized log masses into probabilities. Returns `None` when
/// no entry has finite mass.
pub fn normalize_log_weights(log_weights: &[f64]) -> Option<Vec<f64>> {
    let max = log_weights.iter().copied().filter(|v| !v.is_nan()).fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return None;
    }
    let mut probs: Vec<f64> = log_weights.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    Some(probs)
}

/// Inverse-CDF draw of an index from unnormalized log masses. Returns `None`
/// when every mass is zero (or NaN).
pub fn sample_log_weights<R: Rng + ?Sized>(log_weights: &[f64], rng: &mut R) -> Option<usize> {
    let max = log_weights.iter().copied().filter(|v| !v.is_nan()).fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return None;
    }
    let total: f64 = log_weights.iter().map(|v| (v - max).exp()).sum();
    let target = rng.random::<f64>() * total;
    let mut cum = 0.0;
    let mut last_positive = 0;
    for (i, v) in log_weights.iter().enumerate() {
        let w = (v - max).exp();
        if w > 0.0 {
            last_positive = i;
        }
        cum += w;
        if target < cum {
            return Some(i);
        }
    }
    Some(last_positive)
}

/// Maps a draw to the open unit interval. Beta draws with extreme shapes can
/// round to exactly 0 or 1.
#[inline]
pub fn clamp_open_unit(x: f64) -> f64 {
    const UPPER: f64 = 1.0 - f64::EPSILON / 2.0;
    x.clamp(f64::MIN_POSITIVE, UPPER)
}

/// Fixed-order Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1);
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            // Chebyshev initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Composite rule: `panels` equal subintervals of [lo, hi].
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, lo: f64, hi: f64, panels: usize) -> f64 {
        let h = (hi - lo) / panels as f64;
        let mut total = 0.0;
        for p in 0..panels {
            let a = lo + p as f64 * h;
            let mid = a + 0.5 * h;
            let half = 0.5 * h;
            let mut s = 0.0;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                s += w * f(mid + half * x);
            }
            total += s * half;
        }
        total
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gauss_legendre_is_exact_on_polynomials() {
        let gl = GaussLegendre::new(10);
        let v = gl.integrate(|x| x.powi(19) + 3.0 * x * x, -1.0, 2.0, 1);
        let exact = (2f64.powi(20) - 1.0) / 20.0 + (8.0 + 1.0);
        assert!((v - exact).abs() < 1e-9 * exact.abs());
    }

    #[test]
    fn log_sum_exp_handles_large_values() {
        let v = log_sum_exp(&[1000.0, 1000.0]);
        assert!((v - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY]), f64::NEG_INFINITY);
    }

    #[test]
    fn binomial_endpoints() {
        assert_eq!(binomial_ln_pmf(0, 5, 0.0), 0.0);
        assert_eq!(binomial_ln_pmf(5, 5, 1.0), 0.0);
        assert_eq!(binomial_ln_pmf(1, 5, 0.0), f64::NEG_INFINITY);
        let p = binomial_ln_pmf(2, 4, 0.5).exp();
        assert!((p - 6.0 / 16.0).abs() < 1e-14);
    }

    #[test]
    fn ln_one_minus_exp_neg_matches_direct() {
        for &x in &[1e-8f64, 0.1, 0.69, 0.7, 3.0, 40.0] {
            let direct = if x < 1e-4 {
                x.ln() - x / 2.0 + x * x / 24.0
            } else if x > 30.0 {
                -(-x).exp()
            } else {
                (1.0 - (-x).exp()).ln()
            };
            assert!((ln_one_minus_exp_neg(x) - direct).abs() < 1e-10 * direct.abs());
        }
    }

    #[test]
    fn sampling_skips_zero_mass() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let i = sample_log_weights(&[f64::NEG_INFINITY, 0.0, f64::NEG_INFINITY], &mut rng);
            assert_eq!(i, Some(1));
        }
        assert_eq!(sample_log_weights(&[f64::NEG_INFINITY; 3], &mut rng), None);
    }
}
