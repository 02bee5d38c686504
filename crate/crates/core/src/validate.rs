//! Self-validation battery: analytic identities of the stick diffusions and
//! the diffusive Dirichlet process checked by quadrature and Monte Carlo.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use serde::Serialize;

use crate::error::Result;
use crate::measure::{self, evolve, measure_eval, sample_marginal, sticks_to_weights, weights_to_sticks, StickConfig};
use crate::numerics::GaussLegendre;
use crate::stats::{self, correlation_estimate, mean_estimate, variance_estimate, Estimate};
use crate::wf::{self, NbSeries, SeriesOptions, TransitionKernel, WFParams};

/// Deficit tolerance of the sampled random measures used by the battery.
pub const MC_TRUNC_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    /// Worst-case statistic over the sub-checks (meaning given by `kind`).
    pub statistic: f64,
    pub threshold: f64,
    pub kind: &'static str,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct ValidateOptions {
    pub seed: u64,
    pub quick: bool,
    /// Monte Carlo tolerance in standard errors.
    pub n_se: f64,
    /// Lower bound on accepted KS p-values.
    pub min_p: f64,
    /// Absolute tolerance of the quadrature checks.
    pub quad_tol: f64,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self { seed: 20240601, quick: false, n_se: 3.0, min_p: 1e-3, quad_tol: 1e-6 }
    }
}

/// `n` exact transitions over `t` started from the invariant law, paired with
/// `n` direct invariant draws.
pub fn stationarity_samples<R: Rng + ?Sized>(p: &WFParams, t: f64, n: usize, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
    let beta = Beta::new(p.a(), p.b()).expect("valid beta");
    let moved = (0..n).map(|_| wf::sample_transition(beta.sample(rng), t, p, rng)).collect();
    let direct = (0..n).map(|_| beta.sample(rng)).collect();
    (moved, direct)
}

/// Integral of `p_t(. | v0)` over (0, 1) by Gauss–Legendre quadrature.
pub fn transition_mass(v0: f64, t: f64, p: &WFParams) -> Result<f64> {
    let kernel = TransitionKernel::new(v0, t, p, SeriesOptions::with_tol(1e-12))?;
    Ok(GaussLegendre::new(20).integrate(|v| kernel.density(v), 0.0, 1.0, 50))
}

/// `n` stationary draws of `P(A)` for a Dirichlet measure with concentration
/// `theta`, uniform atoms and `A = [0, g_a)`.
pub fn dp_set_mass_draws<R: Rng + ?Sized>(theta: f64, g_a: f64, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    let sc = StickConfig::dirichlet(theta, theta / 2.0)?;
    (0..n)
        .map(|_| {
            let st = sample_marginal(&sc, |r: &mut R| r.random::<f64>(), MC_TRUNC_TOL, rng)?;
            Ok(measure_eval(&st, 0, |x| *x < g_a).value)
        })
        .collect()
}

/// Monte Carlo correlation of `P_0(A)` and `P_s(A)` over `n_paths`
/// independent paths of the diffusive Dirichlet process, `A = [0, 1/2)`,
/// for increasing lags `lags` (the first may be 0).
pub fn acf_mc<R: Rng + ?Sized>(theta: f64, c: f64, lags: &[f64], n_paths: usize, rng: &mut R) -> Result<Vec<Estimate>> {
    let sc = StickConfig::dirichlet(theta, c)?;
    let mut values = vec![Vec::with_capacity(n_paths); lags.len() + 1];
    for _ in 0..n_paths {
        let mut st = sample_marginal(&sc, |r: &mut R| r.random::<f64>(), MC_TRUNC_TOL, rng)?;
        values[0].push(measure_eval(&st, 0, |x| *x < 0.5).value);
        let mut now = 0.0;
        for (i, &s) in lags.iter().enumerate() {
            if s > now {
                st = evolve(&st, &sc, s - now, |r: &mut R| r.random::<f64>(), MC_TRUNC_TOL, rng)?;
                now = s;
            }
            let idx = st.n_times() - 1;
            values[i + 1].push(measure_eval(&st, idx, |x| *x < 0.5).value);
        }
    }
    Ok(values[1..]
        .iter()
        .map(|v| if v == &values[0] { Estimate { value: 1.0, se: 0.0 } } else { correlation_estimate(&values[0], v) })
        .collect())
}

fn result(name: &str, pass: bool, statistic: f64, threshold: f64, kind: &'static str, detail: String) -> CheckResult {
    CheckResult { name: name.into(), pass, statistic, threshold, kind, detail }
}

fn check_stationarity(o: &ValidateOptions, rng: &mut ChaCha8Rng) -> CheckResult {
    let p = WFParams::new(1.0, 4.0, 2.0).expect("valid");
    let n = if o.quick { 20_000 } else { 100_000 };
    let mut worst = 1.0f64;
    let mut parts = Vec::new();
    for t in [0.1, 1.0] {
        let (x, y) = stationarity_samples(&p, t, n, rng);
        let (d, pv) = stats::ks_two_sample_p(&x, &y);
        worst = worst.min(pv);
        parts.push(format!("t={t} D={d:.4} p={pv:.4}"));
    }
    result("stationarity_ks", worst > o.min_p, worst, o.min_p, "min_p_value", parts.join("; "))
}

fn check_normalization(o: &ValidateOptions) -> CheckResult {
    let p = WFParams::new(1.0, 4.0, 2.0).expect("valid");
    let mut worst = 0.0f64;
    let mut err = None;
    for v0 in [0.1, 0.5, 0.9] {
        for t in [0.05, 0.5, 5.0] {
            match transition_mass(v0, t, &p) {
                Ok(m) => worst = worst.max((m - 1.0).abs()),
                Err(e) => err = Some(e.to_string()),
            }
        }
    }
    let mut series_err = 0.0f64;
    for (c, t) in [(2.0, 0.5), (2.0, 0.05), (0.5, 3.0)] {
        let q = WFParams::new(1.0, 4.0, c).expect("valid");
        match NbSeries::truncated(t, &q, SeriesOptions::default()) {
            Ok(s) => series_err = series_err.max((s.weights().iter().sum::<f64>() - 1.0).abs()),
            Err(e) => err = Some(e.to_string()),
        }
    }
    let pass = err.is_none() && worst < o.quad_tol && series_err < 1e-10;
    let detail = err.unwrap_or_else(|| format!("max |mass - 1| = {worst:.2e}; max |sum r - 1| = {series_err:.2e}"));
    result("transition_normalization", pass, worst, o.quad_tol, "abs_error", detail)
}

fn check_dp_moments(o: &ValidateOptions, rng: &mut ChaCha8Rng) -> Result<CheckResult> {
    let (theta, g_a) = (1.0, 0.5);
    let n = if o.quick { 4_000 } else { 10_000 };
    let x = dp_set_mass_draws(theta, g_a, n, rng)?;
    let m = mean_estimate(&x);
    let v = variance_estimate(&x);
    let target_v = g_a * (1.0 - g_a) / (1.0 + theta);
    let z = m.z(g_a).abs().max(v.z(target_v).abs());
    Ok(result(
        "dp_moments",
        z <= o.n_se,
        z,
        o.n_se,
        "max_abs_z",
        format!("mean {:.4} (se {:.4}) vs {g_a}; var {:.4} (se {:.4}) vs {target_v}", m.value, m.se, v.value, v.se),
    ))
}

fn check_acf(o: &ValidateOptions, rng: &mut ChaCha8Rng) -> Result<Vec<CheckResult>> {
    let theta = 1.0;
    let c = theta / 2.0;
    let lags = [0.0, 0.5, 1.0, 2.0, 20.0];
    // paths advance lag to lag, so the kernel identity uses the composed steps
    let n = if o.quick { 3_000 } else { 10_000 };
    let est = acf_mc(theta, c, &lags, n, rng)?;
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    let mut rho = 1.0;
    let mut now = 0.0;
    for (&s, e) in lags.iter().zip(&est) {
        if s > now {
            rho *= measure::mixture_kernel_stick_correlation(theta, c, s - now)?;
            now = s;
        }
        let target = measure::acf_from_stick_correlation(theta, rho);
        let z = if e.se > 0.0 { e.z(target).abs() } else { (e.value - target).abs() / 1e-12 };
        worst = worst.max(z);
        parts.push(format!(
            "s={s} mc={:.4} se={:.4} kernel={target:.4} closed_form={:.4}",
            e.value,
            e.se,
            measure::theoretical_acf(theta, s)
        ));
    }
    let kernel = result("acf_kernel", worst <= o.n_se, worst, o.n_se, "max_abs_z", parts.join("; "));
    let last = est.last().expect("nonempty");
    let limit = measure::acf_lower_bound(theta);
    let z = last.z(limit).abs();
    let tail = result(
        "acf_limit",
        z <= o.n_se,
        z,
        o.n_se,
        "abs_z",
        format!("s=20 mc={:.4} se={:.4} limit={limit:.4}", last.value, last.se),
    );
    Ok(vec![kernel, tail])
}

fn check_round_trip(rng: &mut ChaCha8Rng) -> Result<CheckResult> {
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let v: Vec<f64> = (0..50).map(|_| rng.random_range(0.01..0.2)).collect();
        let sw = sticks_to_weights(&v)?;
        let back = weights_to_sticks(&sw.weights)?;
        let identity = (sw.weights.iter().sum::<f64>() + sw.deficit - 1.0).abs();
        let round = v.iter().zip(&back.sticks).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst = worst.max(identity).max(round);
    }
    Ok(result("stick_round_trip", worst < 1e-12, worst, 1e-12, "abs_error", format!("max error {worst:.2e}")))
}

/// Runs the battery. Each check uses its own RNG stream so the quick subset
/// draws the same numbers per check as a full run would at equal sizes.
pub fn run_battery(o: &ValidateOptions) -> Result<Vec<CheckResult>> {
    let stream = |k: u64| {
        let mut r = ChaCha8Rng::seed_from_u64(o.seed);
        r.set_stream(k);
        r
    };
    let mut out =
        vec![check_normalization(o), check_round_trip(&mut stream(1))?, check_stationarity(o, &mut stream(2))];
    out.push(check_dp_moments(o, &mut stream(3))?);
    out.extend(check_acf(o, &mut stream(4))?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transition_mass_is_one() {
        let p = WFParams::new(1.0, 4.0, 2.0).unwrap();
        assert!((transition_mass(0.5, 0.25, &p).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn acf_at_zero_lag_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let e = acf_mc(1.0, 0.5, &[0.0, 1.0], 200, &mut rng).unwrap();
        assert_eq!(e[0].value, 1.0);
        assert!(e[1].value < 1.0 && e[1].value > 0.0);
    }

    #[test]
    fn dp_draws_are_probabilities() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = dp_set_mass_draws(1.0, 0.5, 100, &mut rng).unwrap();
        assert!(x.iter().all(|v| (0.0..=1.0).contains(v)));
    }
}
