//! One-dimensional Wright–Fisher diffusion: invariant law, the
//! Negative-Binomial / Beta–Binomial mixture transition (density and exact
//! sampling by composition), and an Euler–Maruyama reference simulator.
//!
//! The process is parametrized by `(a, b, c)`: Beta(a, b) invariant law and
//! time-scale rate `c`, with SDE
//!
//! ```text
//! dv = c (a - (a + b) v) / (a + b - 1) dt + sqrt(2c / (a + b - 1) v (1 - v)) dB
//! ```
//!
//! `c = (a + b - 1) / 2` gives the unscaled diffusion
//! `dv = ½[a(1 - v) - b v] dt + sqrt(v (1 - v)) dB`.

use rand::Rng;
use rand_distr::{Beta, Binomial, Distribution, Gamma, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};
use crate::numerics::{beta_ln_pdf, binomial_ln_pmf, clamp_open_unit, ln_factorial, ln_gamma, ln_one_minus_exp_neg};
use crate::slice::GeometricSlice;

/// Diffusion parameters of a single stick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WFParams {
    a: f64,
    b: f64,
    c: f64,
}

impl WFParams {
    /// Requires `a, b, c > 0` and `a + b > 1` (0 and 1 are then entrance
    /// boundaries and the mixture representation of the transition holds).
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        for (name, v) in [("a", a), ("b", b), ("c", c)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(format!("WF parameter {name} = {v} must be positive and finite")));
            }
        }
        if a + b <= 1.0 {
            return Err(Error::param(format!("WF parameters need a + b > 1, got a = {a}, b = {b}")));
        }
        Ok(Self { a, b, c })
    }

    /// The unscaled parametrization, `c = (a + b - 1) / 2`.
    pub fn standard(a: f64, b: f64) -> Result<Self> {
        Self::new(a, b, (a + b - 1.0) / 2.0)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// Drift coefficient of the SDE at `v`.
    pub fn drift(&self, v: f64) -> f64 {
        self.c * (self.a - (self.a + self.b) * v) / (self.a + self.b - 1.0)
    }

    /// Squared diffusion coefficient of the SDE at `v`.
    pub fn diffusion_sq(&self, v: f64) -> f64 {
        2.0 * self.c / (self.a + self.b - 1.0) * v * (1.0 - v)
    }
}

/// Latent triple slicing one transition density: series index `d`, binomial
/// count `k <= d`, and slice variable `o` in `(0, g(d))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionAug {
    pub o: f64,
    pub k: u64,
    pub d: u64,
}

impl TransitionAug {
    pub fn is_valid(&self, g: &GeometricSlice) -> bool {
        self.k <= self.d && self.o > 0.0 && self.o < g.value(self.d)
    }
}

/// Truncation control for the transition series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesOptions {
    /// Maximum neglected Negative-Binomial tail mass.
    pub tol: f64,
    /// Largest admissible truncation index.
    pub cap: usize,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        Self { tol: 1e-10, cap: 100_000 }
    }
}

impl SeriesOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

/// Beta(a, b) invariant density at `v`.
pub fn invariant_density(v: f64, p: &WFParams) -> Result<f64> {
    if !(v > 0.0 && v < 1.0) {
        return Err(Error::Domain { name: "v", value: v, domain: "(0, 1)" });
    }
    Ok(beta_ln_pdf(v, p.a, p.b).exp())
}

/// `ln r_t(m)`: Negative-Binomial log weight with size `a + b` and
/// success parameter `exp(-c t)`.
pub fn ln_nb_weight(m: u64, t: f64, p: &WFParams) -> f64 {
    let r = p.a + p.b;
    let ct = p.c * t;
    ln_gamma(r + m as f64) - ln_gamma(r) - ln_factorial(m) - m as f64 * ct + r * ln_one_minus_exp_neg(ct)
}

/// `r_t(m)`; panics unless `t > 0`.
pub fn nb_weight(m: u64, t: f64, p: &WFParams) -> f64 {
    assert!(t > 0.0, "nb_weight needs t > 0, got {t}");
    ln_nb_weight(m, t, p).exp()
}

/// Negative-Binomial weights `r_t(0..=M)` truncated at the smallest `M` whose
/// neglected tail (from the regularized incomplete beta function) is below the
/// tolerance.
#[derive(Debug, Clone)]
pub struct NbSeries {
    weights: Vec<f64>,
    tail: f64,
}

impl NbSeries {
    pub fn truncated(t: f64, p: &WFParams, opts: SeriesOptions) -> Result<Self> {
        if !(t > 0.0) {
            return Err(Error::Domain { name: "t", value: t, domain: "(0, inf)" });
        }
        if !(opts.tol > 0.0 && opts.tol < 1.0) {
            return Err(Error::Domain { name: "tol", value: opts.tol, domain: "(0, 1)" });
        }
        let r = p.a + p.b;
        let q = (-p.c * t).exp();
        // Survival function of the Negative Binomial: P(m > M) = I_q(M + 1, a + b).
        let tail_after = |m: usize| beta_reg(m as f64 + 1.0, r, q);
        let overflow = || Error::SeriesOverflow { cap: opts.cap, t, tol: opts.tol };
        let mut last = 0usize;
        if tail_after(0) >= opts.tol {
            let mut hi = 1usize;
            while tail_after(hi) >= opts.tol {
                if hi >= opts.cap {
                    return Err(overflow());
                }
                last = hi;
                hi = (hi * 2).min(opts.cap);
            }
            let mut lo = last;
            while hi - lo > 1 {
                let mid = lo + (hi - lo) / 2;
                if tail_after(mid) < opts.tol {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            last = hi;
        }
        let weights = (0..=last as u64).map(|m| ln_nb_weight(m, t, p).exp()).collect();
        Ok(Self { weights, tail: tail_after(last) })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Truncation index `M`.
    pub fn last_index(&self) -> usize {
        self.weights.len() - 1
    }

    /// Neglected mass `sum_{m > M} r_t(m)`.
    pub fn tail(&self) -> f64 {
        self.tail
    }
}

/// `D(v1 | m, v0) = sum_k Beta(v1 | a + k, b + m - k) Bin(k | m, v0)`.
pub fn transition_mixture_component(v1: f64, m: u64, v0: f64, p: &WFParams) -> Result<f64> {
    if !(v1 > 0.0 && v1 < 1.0) {
        return Err(Error::Domain { name: "v1", value: v1, domain: "(0, 1)" });
    }
    if !(0.0..=1.0).contains(&v0) {
        return Err(Error::Domain { name: "v0", value: v0, domain: "[0, 1]" });
    }
    let terms: Vec<f64> =
        (0..=m).map(|k| binomial_ln_pmf(k, m, v0) + beta_ln_pdf(v1, p.a + k as f64, p.b + (m - k) as f64)).collect();
    Ok(crate::numerics::log_sum_exp(&terms).exp())
}

/// Transition density `p_t(. | v0)` evaluated through a truncated series, with
/// the log-gamma tables shared across evaluation points.
#[derive(Debug, Clone)]
pub struct TransitionKernel {
    params: WFParams,
    v0: f64,
    series: NbSeries,
    ln_weights: Vec<f64>,
    ln_gamma_a: Vec<f64>,
    ln_gamma_b: Vec<f64>,
    ln_gamma_ab: Vec<f64>,
    ln_fact: Vec<f64>,
}

impl TransitionKernel {
    pub fn new(v0: f64, t: f64, p: &WFParams, opts: SeriesOptions) -> Result<Self> {
        if !(0.0..=1.0).contains(&v0) {
            return Err(Error::Domain { name: "v0", value: v0, domain: "[0, 1]" });
        }
        let series = NbSeries::truncated(t, p, opts)?;
        let top = series.last_index();
        let ln_weights = series.weights().iter().map(|w| w.ln()).collect();
        let range = |f: &dyn Fn(f64) -> f64| (0..=top).map(|i| f(i as f64)).collect::<Vec<_>>();
        Ok(Self {
            params: *p,
            v0,
            ln_gamma_a: range(&|i| ln_gamma(p.a + i)),
            ln_gamma_b: range(&|i| ln_gamma(p.b + i)),
            ln_gamma_ab: range(&|i| ln_gamma(p.a + p.b + i)),
            ln_fact: range(&|i| ln_gamma(i + 1.0)),
            ln_weights,
            series,
        })
    }

    pub fn series(&self) -> &NbSeries {
        &self.series
    }

    /// Density at `v1`; zero outside (0, 1).
    pub fn density(&self, v1: f64) -> f64 {
        if !(v1 > 0.0 && v1 < 1.0) {
            return 0.0;
        }
        let (a, b) = (self.params.a, self.params.b);
        let (ln_v1, ln_w1) = (v1.ln(), (-v1).ln_1p());
        let (ln_v0, ln_w0) = (self.v0.ln(), (-self.v0).ln_1p());
        let mut total = 0.0;
        for (m, &lr) in self.ln_weights.iter().enumerate() {
            if lr < -745.0 {
                continue;
            }
            let (k_lo, k_hi) = if self.v0 <= 0.0 {
                (0, 0)
            } else if self.v0 >= 1.0 {
                (m, m)
            } else {
                (0, m)
            };
            let base = lr + self.ln_fact[m] + self.ln_gamma_ab[m];
            for k in k_lo..=k_hi {
                let j = m - k;
                let mut e = base - self.ln_fact[k] - self.ln_fact[j] - self.ln_gamma_a[k] - self.ln_gamma_b[j]
                    + (a + k as f64 - 1.0) * ln_v1
                    + (b + j as f64 - 1.0) * ln_w1;
                if k > 0 {
                    e += k as f64 * ln_v0;
                }
                if j > 0 {
                    e += j as f64 * ln_w0;
                }
                total += e.exp();
            }
        }
        total
    }
}

/// Transition density `p_t(v1 | v0) = sum_m r_t(m) D(v1 | m, v0)` truncated
/// where the Negative-Binomial tail drops below `opts.tol`. Since every summand
/// is positive, the truncated value never exceeds the full series.
pub fn transition_density(v1: f64, v0: f64, t: f64, p: &WFParams, opts: SeriesOptions) -> Result<f64> {
    Ok(TransitionKernel::new(v0, t, p, opts)?.density(v1))
}

/// NB mean above which the count is drawn as a Gamma–Poisson mixture rather
/// than by walking the CDF.
const NB_WALK_MEAN_LIMIT: f64 = 1e5;

/// Draws `m ~ r_t(.)` by inverse CDF.
pub fn sample_nb_index<R: Rng + ?Sized>(t: f64, p: &WFParams, rng: &mut R) -> u64 {
    let r = p.a + p.b;
    let ct = p.c * t;
    let q = (-ct).exp();
    let odds = q / -(-ct).exp_m1();
    let mean = r * odds;
    if mean > NB_WALK_MEAN_LIMIT {
        let lambda = Gamma::new(r, odds).expect("valid gamma").sample(rng);
        return Poisson::new(lambda).map(|d| d.sample(rng) as u64).unwrap_or(lambda as u64);
    }
    let u: f64 = rng.random();
    let limit = (mean + 60.0 * (mean / (1.0 - q)).sqrt() + 1000.0) as u64;
    let ln_q = -ct;
    let mut lw = r * ln_one_minus_exp_neg(ct);
    let mut cum = lw.exp();
    let mut m = 0u64;
    while cum <= u && m < limit {
        let mf = m as f64;
        lw += (r + mf).ln() - (mf + 1.0).ln() + ln_q;
        m += 1;
        cum += lw.exp();
    }
    m
}

/// One exact transition by composition, returning `(v1, m, k)`:
/// `m ~ r_t`, `k ~ Bin(m, v0)`, `v1 ~ Beta(a + k, b + m - k)`.
pub fn sample_transition_with_latents<R: Rng + ?Sized>(v0: f64, t: f64, p: &WFParams, rng: &mut R) -> (f64, u64, u64) {
    assert!((0.0..=1.0).contains(&v0), "v0 = {v0} outside [0, 1]");
    assert!(t > 0.0, "transition time must be positive, got {t}");
    let m = sample_nb_index(t, p, rng);
    let k = if m == 0 { 0 } else { Binomial::new(m, v0).expect("valid binomial").sample(rng) };
    let v1 = Beta::new(p.a + k as f64, p.b + (m - k) as f64).expect("valid beta").sample(rng);
    (clamp_open_unit(v1), m, k)
}

/// Exact draw from the transition law started at `v0` after time `t`.
pub fn sample_transition<R: Rng + ?Sized>(v0: f64, t: f64, p: &WFParams, rng: &mut R) -> f64 {
    sample_transition_with_latents(v0, t, p, rng).0
}

/// Draw from the Beta(a, b) invariant law.
pub fn sample_invariant<R: Rng + ?Sized>(p: &WFParams, rng: &mut R) -> f64 {
    clamp_open_unit(Beta::new(p.a, p.b).expect("valid beta").sample(rng))
}

/// `c (a + b) / (a + b - 1)`: the exponential rate of the SDE conditional
/// mean toward `a / (a + b)`.
pub fn mean_reversion_rate(p: &WFParams) -> f64 {
    p.c * (p.a + p.b) / (p.a + p.b - 1.0)
}

/// Conditional-mean contraction of the mixture transition over time `t`:
/// `E[v_t | v_0] - a/(a+b) = rho(t) (v_0 - a/(a+b))` with
/// `rho(t) = E[m / (a + b + m)]`, `m ~ r_t`. For small `t`,
/// `rho(t) = 1 - mean_reversion_rate(p) t + O(t^2)`. The truncated series
/// underestimates `rho` by less than `opts.tol`.
pub fn mixture_mean_contraction(t: f64, p: &WFParams, opts: SeriesOptions) -> Result<f64> {
    let series = NbSeries::truncated(t, p, opts)?;
    let r = p.a + p.b;
    Ok(series.weights().iter().enumerate().map(|(m, w)| w * m as f64 / (r + m as f64)).sum::<f64>())
}

/// Clamp applied after each Euler step; biases the oracle only.
pub const EULER_CLAMP: f64 = 1e-12;

/// Euler–Maruyama path on `[0, horizon]` with values at every step (including
/// the start). The step is shortened so that it divides the horizon.
pub fn euler_path<R: Rng + ?Sized>(v0: f64, horizon: f64, step: f64, p: &WFParams, rng: &mut R) -> Vec<f64> {
    euler_run(v0, horizon, step, p, Some(rng), true)
}

/// Deterministic (noise-free) Euler path: the linear ODE toward `a / (a + b)`.
pub fn euler_drift_path(v0: f64, horizon: f64, step: f64, p: &WFParams) -> Vec<f64> {
    euler_run::<rand_chacha::ChaCha8Rng>(v0, horizon, step, p, None, true)
}

/// Endpoint of an Euler–Maruyama path without storing it.
pub fn euler_endpoint<R: Rng + ?Sized>(v0: f64, horizon: f64, step: f64, p: &WFParams, rng: &mut R) -> f64 {
    *euler_run(v0, horizon, step, p, Some(rng), false).last().expect("nonempty path")
}

fn euler_run<R: Rng + ?Sized>(
    v0: f64,
    horizon: f64,
    step: f64,
    p: &WFParams,
    mut rng: Option<&mut R>,
    keep: bool,
) -> Vec<f64> {
    assert!(horizon > 0.0 && step > 0.0);
    let n = ((horizon / step).round() as usize).max(1);
    let h = horizon / n as f64;
    let sqrt_h = h.sqrt();
    let mut v = v0.clamp(EULER_CLAMP, 1.0 - EULER_CLAMP);
    let mut path = Vec::with_capacity(if keep { n + 1 } else { 1 });
    if keep {
        path.push(v);
    }
    for _ in 0..n {
        let mut next = v + p.drift(v) * h;
        if let Some(rng) = rng.as_deref_mut() {
            let z: f64 = StandardNormal.sample(rng);
            next += p.diffusion_sq(v).max(0.0).sqrt() * sqrt_h * z;
        }
        v = next.clamp(EULER_CLAMP, 1.0 - EULER_CLAMP);
        if keep {
            path.push(v);
        }
    }
    if !keep {
        path.push(v);
    }
    path
}
