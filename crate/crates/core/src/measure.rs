//! Stick-breaking weights and the diffusive Dirichlet / GEM random measure.
//!
//! Every stick `v_j(.)` is an independent Wright–Fisher diffusion with
//! Beta(a_j, b_j) invariant law; the atoms are drawn once from the centering
//! distribution and never move. At every time the weights are
//! `w_1 = v_1`, `w_j = v_j prod_{i<j} (1 - v_i)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wf::{self, SeriesOptions, WFParams};

/// Law of the stick sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum StickKind {
    /// `a_j = 1`, `b_j = theta`.
    Dirichlet { theta: f64 },
    /// `a_j = 1 - sigma`, `b_j = theta + j sigma`.
    PitmanYor { theta: f64, sigma: f64 },
    /// Explicit `(a_j, b_j)` pairs; the last pair repeats for all later sticks.
    Gem { sticks: Vec<(f64, f64)> },
}

/// Time-scale rate of each stick diffusion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum TimeScale {
    /// One rate `c` shared by all sticks.
    Shared(f64),
    /// Explicit per-stick rates; the last rate repeats.
    PerStick(Vec<f64>),
    /// `c_j = (a_j + b_j - 1) / 2`, the unscaled diffusion. For the Dirichlet
    /// case this is `c = theta / 2`.
    Standard,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StickConfig {
    pub kind: StickKind,
    pub time_scale: TimeScale,
}

impl StickConfig {
    pub fn new(kind: StickKind, time_scale: TimeScale) -> Result<Self> {
        let cfg = Self { kind, time_scale };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn dirichlet(theta: f64, c: f64) -> Result<Self> {
        Self::new(StickKind::Dirichlet { theta }, TimeScale::Shared(c))
    }

    pub fn pitman_yor(theta: f64, sigma: f64, c: f64) -> Result<Self> {
        Self::new(StickKind::PitmanYor { theta, sigma }, TimeScale::Shared(c))
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            StickKind::Dirichlet { theta } => {
                if !(*theta > 0.0 && theta.is_finite()) {
                    return Err(Error::param(format!("Dirichlet theta = {theta} must be positive")));
                }
            }
            StickKind::PitmanYor { theta, sigma } => {
                if !(0.0..1.0).contains(sigma) {
                    return Err(Error::param(format!("Pitman-Yor sigma = {sigma} must lie in [0, 1)")));
                }
                if !(*theta > -sigma) || !theta.is_finite() {
                    return Err(Error::param(format!("Pitman-Yor theta = {theta} must exceed -sigma")));
                }
            }
            StickKind::Gem { sticks } => {
                if sticks.is_empty() {
                    return Err(Error::param("GEM stick list is empty"));
                }
            }
        }
        match &self.time_scale {
            TimeScale::Shared(c) if !(*c > 0.0 && c.is_finite()) => {
                return Err(Error::param(format!("time-scale rate c = {c} must be positive")));
            }
            TimeScale::PerStick(cs) if cs.is_empty() || cs.iter().any(|c| !(*c > 0.0)) => {
                return Err(Error::param("per-stick rates must be a nonempty list of positive values"));
            }
            _ => {}
        }
        // a_j + b_j is nondecreasing in j for the parametric families, so the
        // first stick is the binding one; GEM lists are checked entry by entry.
        let check_upto = match &self.kind {
            StickKind::Gem { sticks } => sticks.len(),
            _ => 1,
        };
        let rate_len = match &self.time_scale {
            TimeScale::PerStick(cs) => cs.len(),
            _ => 1,
        };
        for j in 1..=check_upto.max(rate_len) {
            self.params(j)?;
        }
        Ok(())
    }

    /// `(a_j, b_j)` for the 1-based stick index `j`.
    pub fn stick_law(&self, j: usize) -> (f64, f64) {
        assert!(j >= 1, "stick indices are 1-based");
        match &self.kind {
            StickKind::Dirichlet { theta } => (1.0, *theta),
            StickKind::PitmanYor { theta, sigma } => (1.0 - sigma, theta + j as f64 * sigma),
            StickKind::Gem { sticks } => sticks[(j - 1).min(sticks.len() - 1)],
        }
    }

    /// Diffusion parameters of stick `j` (1-based).
    pub fn params(&self, j: usize) -> Result<WFParams> {
        let (a, b) = self.stick_law(j);
        let c = match &self.time_scale {
            TimeScale::Shared(c) => *c,
            TimeScale::PerStick(cs) => cs[(j - 1).min(cs.len() - 1)],
            TimeScale::Standard => (a + b - 1.0) / 2.0,
        };
        WFParams::new(a, b, c).map_err(|e| Error::param(format!("stick {j}: {e}")))
    }

    pub fn theta(&self) -> Option<f64> {
        match self.kind {
            StickKind::Dirichlet { theta } | StickKind::PitmanYor { theta, .. } => Some(theta),
            StickKind::Gem { .. } => None,
        }
    }

    pub fn shared_c(&self) -> Option<f64> {
        match self.time_scale {
            TimeScale::Shared(c) => Some(c),
            _ => None,
        }
    }

    /// Copy with a new concentration (no-op for GEM lists).
    pub fn with_theta(&self, theta: f64) -> Self {
        let mut out = self.clone();
        match &mut out.kind {
            StickKind::Dirichlet { theta: t } | StickKind::PitmanYor { theta: t, .. } => *t = theta,
            StickKind::Gem { .. } => {}
        }
        out
    }

    /// Copy with a new shared rate (no-op unless the rate is shared).
    pub fn with_shared_c(&self, c: f64) -> Self {
        let mut out = self.clone();
        if let TimeScale::Shared(old) = &mut out.time_scale {
            *old = c;
        }
        out
    }
}

/// Stick-breaking weights together with the unassigned mass.
#[derive(Debug, Clone, PartialEq)]
pub struct StickWeights {
    pub weights: Vec<f64>,
    /// `prod_j (1 - v_j)`.
    pub deficit: f64,
}

/// `w_1 = v_1`, `w_i = v_i prod_{j<i} (1 - v_j)`.
pub fn sticks_to_weights(v: &[f64]) -> Result<StickWeights> {
    if let Some(&bad) = v.iter().find(|x| !(**x > 0.0 && **x < 1.0)) {
        return Err(Error::Domain { name: "stick", value: bad, domain: "(0, 1)" });
    }
    Ok(sticks_to_weights_unchecked(v))
}

pub(crate) fn sticks_to_weights_unchecked(v: &[f64]) -> StickWeights {
    let mut remaining = 1.0;
    let weights = v
        .iter()
        .map(|x| {
            let w = x * remaining;
            remaining *= 1.0 - x;
            w
        })
        .collect();
    StickWeights { weights, deficit: remaining }
}

/// Sticks recovered from weights. `boundary` is set when the final stick is 1
/// (all remaining mass on the last atom).
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveredSticks {
    pub sticks: Vec<f64>,
    pub boundary: bool,
}

/// Inverse of [`sticks_to_weights`]: `v_i = w_i / (1 - sum_{k<i} w_k)`, with
/// the remaining mass carried as a product for relative accuracy.
pub fn weights_to_sticks(w: &[f64]) -> Result<RecoveredSticks> {
    let mut remaining = 1.0f64;
    let mut sticks = Vec::with_capacity(w.len());
    let mut boundary = false;
    for (i, &wi) in w.iter().enumerate() {
        if !(wi >= 0.0) {
            return Err(Error::Domain { name: "weight", value: wi, domain: "[0, 1]" });
        }
        if remaining <= 0.0 {
            return Err(Error::Degenerate(format!(
                "weights exhaust the unit mass before entry {} of {}",
                i + 1,
                w.len()
            )));
        }
        let v = wi / remaining;
        if v > 1.0 + 1e-12 {
            return Err(Error::Degenerate(format!("partial sums exceed 1 at entry {}", i + 1)));
        }
        let v = v.min(1.0);
        if v >= 1.0 {
            boundary = true;
        }
        sticks.push(v);
        remaining *= 1.0 - v;
    }
    Ok(RecoveredSticks { sticks, boundary })
}

/// Truncated diffusive random measure observed on a time grid: atoms
/// `x_1..x_m` and stick values `v_j(t_i)`.
///
/// When `closed` is set, the measure is the finite stick-breaking truncation
/// in which the last atom carries all remaining mass (its stick is 1 and is
/// not stored), so `atoms.len() == sticks.len() + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureState<X> {
    pub atoms: Vec<X>,
    /// `sticks[j][i] = v_{j+1}(t_i)`.
    pub sticks: Vec<Vec<f64>>,
    pub times: Vec<f64>,
    #[serde(default)]
    pub closed: bool,
}

impl<X> MeasureState<X> {
    /// Number of represented atoms (the truncation level).
    pub fn truncation(&self) -> usize {
        self.atoms.len()
    }

    pub fn n_times(&self) -> usize {
        self.times.len()
    }

    pub fn sticks_at(&self, time_index: usize) -> Vec<f64> {
        self.sticks.iter().map(|path| path[time_index]).collect()
    }

    /// Weights of every represented atom at `t_i`; the deficit is zero for a
    /// closed measure.
    pub fn weights_at(&self, time_index: usize) -> StickWeights {
        let mut sw = sticks_to_weights_unchecked(&self.sticks_at(time_index));
        if self.closed {
            sw.weights.push(sw.deficit);
            sw.deficit = 0.0;
        }
        sw
    }
}

/// Mass of a set with the truncation deficit as an uncertainty band: the
/// untruncated value lies in `[value, value + deficit]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureValue {
    pub value: f64,
    pub deficit: f64,
}

impl MeasureValue {
    pub fn band(&self) -> (f64, f64) {
        (self.value, self.value + self.deficit)
    }
}

/// Default deficit tolerance for sampled truncations.
pub const DEFAULT_TRUNC_TOL: f64 = 1e-4;
/// Upper limit on the number of sticks a sampled truncation may use.
pub const MAX_STICKS: usize = 100_000;

/// Draws a single-time truncation (time 0) of the stationary random measure:
/// independent Beta(a_j, b_j) sticks and i.i.d. atoms until the deficit drops
/// below `trunc_tol`.
pub fn sample_marginal<X, R, G>(
    config: &StickConfig,
    mut atom_sampler: G,
    trunc_tol: f64,
    rng: &mut R,
) -> Result<MeasureState<X>>
where
    R: Rng + ?Sized,
    G: FnMut(&mut R) -> X,
{
    if !(trunc_tol > 0.0 && trunc_tol < 1.0) {
        return Err(Error::Domain { name: "trunc_tol", value: trunc_tol, domain: "(0, 1)" });
    }
    let mut sticks = Vec::new();
    let mut atoms = Vec::new();
    let mut deficit = 1.0;
    while deficit >= trunc_tol {
        if sticks.len() >= MAX_STICKS {
            return Err(Error::TruncationCap { m: sticks.len() + 1, cap: MAX_STICKS });
        }
        let p = config.params(sticks.len() + 1)?;
        let v = wf::sample_invariant(&p, rng);
        deficit *= 1.0 - v;
        sticks.push(vec![v]);
        atoms.push(atom_sampler(rng));
    }
    Ok(MeasureState { atoms, sticks, times: vec![0.0], closed: false })
}

/// Advances every stick by `dt` with the exact transition sampler, appending a
/// new time column. Atoms do not move. If the deficit at the new time is not
/// below `trunc_tol`, further sticks are drawn from the prior (a stationary
/// start followed by exact transitions across every earlier gap).
pub fn evolve<X, R, G>(
    state: &MeasureState<X>,
    config: &StickConfig,
    dt: f64,
    mut atom_sampler: G,
    trunc_tol: f64,
    rng: &mut R,
) -> Result<MeasureState<X>>
where
    X: Clone,
    R: Rng + ?Sized,
    G: FnMut(&mut R) -> X,
{
    if !(dt > 0.0) {
        return Err(Error::Domain { name: "dt", value: dt, domain: "(0, inf)" });
    }
    if state.closed {
        return Err(Error::param("closed (finite) measures are evolved by the sampler, not by evolve"));
    }
    let last = state.times.last().copied().ok_or_else(|| Error::param("measure has no time points"))?;
    let mut next = state.clone();
    next.times.push(last + dt);
    let mut deficit = 1.0;
    for (j, path) in next.sticks.iter_mut().enumerate() {
        let p = config.params(j + 1)?;
        let v = wf::sample_transition(*path.last().expect("nonempty"), dt, &p, rng);
        deficit *= 1.0 - v;
        path.push(v);
    }
    while deficit >= trunc_tol {
        if next.sticks.len() >= MAX_STICKS {
            return Err(Error::TruncationCap { m: next.sticks.len() + 1, cap: MAX_STICKS });
        }
        let p = config.params(next.sticks.len() + 1)?;
        let path = sample_stick_path(&next.times, &p, rng);
        deficit *= 1.0 - path.last().expect("nonempty");
        next.sticks.push(path);
        next.atoms.push(atom_sampler(rng));
    }
    Ok(next)
}

/// Prior draw of one stick on a time grid: stationary start, then exact
/// transitions.
pub fn sample_stick_path<R: Rng + ?Sized>(times: &[f64], p: &WFParams, rng: &mut R) -> Vec<f64> {
    let mut path = Vec::with_capacity(times.len());
    path.push(wf::sample_invariant(p, rng));
    for w in times.windows(2) {
        let prev = *path.last().expect("nonempty");
        path.push(wf::sample_transition(prev, w[1] - w[0], p, rng));
    }
    path
}

/// `P_{t_i}(A) = sum_{j : x_j in A} w_j(t_i)`.
pub fn measure_eval<X, F: Fn(&X) -> bool>(state: &MeasureState<X>, time_index: usize, set: F) -> MeasureValue {
    let sw = state.weights_at(time_index);
    let value = state.atoms.iter().zip(&sw.weights).filter(|(x, _)| set(x)).map(|(_, w)| w).sum();
    MeasureValue { value, deficit: sw.deficit }
}

/// `lambda = (1 + theta) / 2`, the stick autocorrelation rate of the
/// Dirichlet case under the unscaled diffusion.
pub fn acf_rate(theta: f64) -> f64 {
    (1.0 + theta) / 2.0
}

/// `Corr(P_t(A), P_{t+s}(A))` for the diffusive Dirichlet process in closed
/// form; independent of `A`.
pub fn theoretical_acf(theta: f64, s: f64) -> f64 {
    acf_from_stick_correlation(theta, (-acf_rate(theta) * s).exp())
}

/// The same correlation expressed through the stick autocorrelation `rho`
/// (`rho = exp(-lambda s)` for the diffusion):
/// `(1+θ)[(2+θ)+θρ] / [(2+θ)(1+2θ) − θρ]`.
pub fn acf_from_stick_correlation(theta: f64, rho: f64) -> f64 {
    (1.0 + theta) * ((2.0 + theta) + theta * rho) / ((2.0 + theta) * (1.0 + 2.0 * theta) - theta * rho)
}

/// `k_s = sum_i E[w_i(t) w_i(t+s)]`, summed as a geometric series with
/// `c_1 = 1/(1+θ)^2` and `c_2 = θ/((1+θ)^2 (2+θ))`:
/// `k_s = (c_1 + c_2 e^{-λs}) / (1 - c_1 θ^2 - c_2 e^{-λs})`.
/// The correlation is `(1 + θ) k_s`.
pub fn acf_k_s(theta: f64, s: f64) -> f64 {
    let e = (-acf_rate(theta) * s).exp();
    let c1 = 1.0 / ((1.0 + theta) * (1.0 + theta));
    let c2 = theta / ((1.0 + theta) * (1.0 + theta) * (2.0 + theta));
    (c1 + c2 * e) / (1.0 - c1 * theta * theta - c2 * e)
}

/// Limit of the correlation as the lag grows: `(1 + θ) / (1 + 2θ)`.
pub fn acf_lower_bound(theta: f64) -> f64 {
    (1.0 + theta) / (1.0 + 2.0 * theta)
}

/// Correlation of `P_t(A)` and `P_{t+s}(A)` when the sticks move by one
/// application of the mixture transition over lag `s` (Dirichlet case with
/// rate `c`). For this kernel the stick correlation is
/// [`wf::mixture_mean_contraction`], which matches `exp(-λ s)` only to first
/// order in `s`.
pub fn mixture_kernel_acf(theta: f64, c: f64, s: f64) -> Result<f64> {
    Ok(acf_from_stick_correlation(theta, mixture_kernel_stick_correlation(theta, c, s)?))
}

/// Stick correlation over one application of the mixture transition across
/// lag `s` (Dirichlet case, rate `c`). The kernel is not a semigroup: paths
/// advanced in several steps have the product of the per-step values.
pub fn mixture_kernel_stick_correlation(theta: f64, c: f64, s: f64) -> Result<f64> {
    if s == 0.0 {
        return Ok(1.0);
    }
    let p = WFParams::new(1.0, theta, c)?;
    wf::mixture_mean_contraction(s, &p, SeriesOptions::with_tol(1e-13))
}
