//! Full-conditional updates. Each function updates one block of the state in
//! place, holding every other block fixed.

use rand::Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::config::SamplerConfig;
use super::state::{open01, resize_truncation, ChainState};
use crate::data::TimeGridDataset;
use crate::error::{Error, Result};
use crate::measure::StickConfig;
use crate::mixture::{ClusterStats, Kernel};
use crate::numerics::{beta_ln_pdf, clamp_open_unit, ln_choose, ln_gamma, sample_log_weights};
use crate::slice::GeometricSlice;
use crate::wf::{ln_nb_weight, WFParams};

/// Time index of every observation in dataset order.
pub fn observation_times(data: &TimeGridDataset) -> Vec<usize> {
    data.observations().iter().enumerate().flat_map(|(i, ys)| std::iter::repeat_n(i, ys.len())).collect()
}

/// `u ~ U(0, psi_s)` for every observation, then `m = max_i count(psi > u_i)`
/// with prior draws for new components and trailing components dropped.
/// A closed truncation keeps all of its components.
pub fn update_slice_and_truncation<R: Rng + ?Sized>(
    state: &mut ChainState,
    data: &TimeGridDataset,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<()> {
    let psi = cfg.psi()?;
    for (u, &s) in state.u.iter_mut().zip(&state.s) {
        *u = psi.value(s as u64) * open01(rng);
    }
    if !state.measure.closed {
        let m = state.u.iter().map(|&u| psi.count_above(u)).max().unwrap_or(1) as usize;
        resize_truncation(state, m, cfg, &data.gaps(), rng)?;
    }
    Ok(())
}

/// Unnormalized log masses of `k in 0..=d` given the stick values at both
/// ends of a gap.
pub fn k_log_masses(d: u64, v0: f64, v1: f64, p: &WFParams) -> Vec<f64> {
    let ratio = v0.ln() + v1.ln() - (-v0).ln_1p() - (-v1).ln_1p();
    (0..=d)
        .map(|k| ln_choose(d, k) - ln_gamma(p.a() + k as f64) - ln_gamma(p.b() + (d - k) as f64) + k as f64 * ratio)
        .collect()
}

/// Unnormalized log masses of `d in k..=d_max` (index 0 is `d = k`).
pub fn d_log_masses(k: u64, d_max: u64, v0: f64, v1: f64, tau: f64, p: &WFParams, g: &GeometricSlice) -> Vec<f64> {
    let ab = p.a() + p.b();
    let per_d = (-v0).ln_1p() + (-v1).ln_1p() - p.c() * tau + g.eta();
    (k..=d_max)
        .map(|d| {
            let df = d as f64;
            2.0 * ln_gamma(ab + df) + df * per_d - ln_gamma(p.b() + (d - k) as f64) - ln_gamma((d - k) as f64 + 1.0)
        })
        .collect()
}

fn draw(log_masses: &[f64], rng: &mut (impl Rng + ?Sized), what: &str) -> Result<usize> {
    sample_log_weights(log_masses, rng)
        .ok_or_else(|| Error::Numerical(format!("{what}: all candidate masses are zero or not finite")))
}

/// `o ~ U(0, g(d))`, then `k | d`, then `d | o, k` for every stick and gap.
pub fn update_transition_latents<R: Rng + ?Sized>(
    state: &mut ChainState,
    data: &TimeGridDataset,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<()> {
    let g = cfg.g()?;
    let gaps = data.gaps();
    let sc = state.stick_config(cfg);
    for (j, (path, augs)) in state.measure.sticks.iter().zip(state.trans_aug.iter_mut()).enumerate() {
        let p = sc.params(j + 1)?;
        for (i, aug) in augs.iter_mut().enumerate() {
            let (v0, v1) = (path[i], path[i + 1]);
            aug.o = g.value(aug.d) * open01(rng);
            aug.k = draw(&k_log_masses(aug.d, v0, v1, &p), rng, "binomial latent")? as u64;
            let d_max = g.count_above(aug.o);
            debug_assert!(d_max >= aug.d && aug.d >= aug.k);
            let lm = d_log_masses(aug.k, d_max, v0, v1, gaps[i], &p, &g);
            aug.d = aug.k + draw(&lm, rng, "series latent")? as u64;
        }
    }
    Ok(())
}

/// Per-time counts `(#{s = j}, #{s > j})` for every component label `j`.
fn membership_counts(state: &ChainState, obs_time: &[usize], n_times: usize) -> Vec<Vec<(u32, u32)>> {
    let m = state.m;
    let mut eq = vec![vec![0u32; m + 1]; n_times];
    for (&s, &i) in state.s.iter().zip(obs_time) {
        eq[i][s] += 1;
    }
    eq.into_iter()
        .map(|row| {
            let mut out = vec![(0, 0); m];
            let mut above = 0u32;
            for j in (1..=m).rev() {
                out[j - 1] = (row[j], above);
                above += row[j];
            }
            out
        })
        .collect()
}

/// Conjugate Beta draw of every stick value given the transition latents on
/// both sides and the memberships at that time.
pub fn update_stick_values<R: Rng + ?Sized>(
    state: &mut ChainState,
    data: &TimeGridDataset,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<()> {
    let obs_time = observation_times(data);
    let counts = membership_counts(state, &obs_time, data.n_times());
    let sc = state.stick_config(cfg);
    let n = data.n_times();
    for (j, (path, augs)) in state.measure.sticks.iter_mut().zip(&state.trans_aug).enumerate() {
        let (a, b) = sc.stick_law(j + 1);
        for i in 0..n {
            let (eq, gt) = counts[i][j];
            let mut alpha = a + eq as f64;
            let mut beta = b + gt as f64;
            if i > 0 {
                let l = &augs[i - 1];
                alpha += l.k as f64;
                beta += (l.d - l.k) as f64;
            }
            if i + 1 < n {
                let l = &augs[i];
                alpha += l.k as f64;
                beta += (l.d - l.k) as f64;
            }
            let v = Beta::new(alpha, beta)
                .map_err(|e| Error::Numerical(format!("stick {} at time {i}: Beta({alpha}, {beta}): {e}", j + 1)))?
                .sample(rng);
            path[i] = clamp_open_unit(v);
        }
    }
    Ok(())
}

/// Normal–gamma conjugate draw for every represented atom; empty clusters
/// are refreshed from the centering measure.
pub fn update_locations<R: Rng + ?Sized>(
    state: &mut ChainState,
    data: &TimeGridDataset,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<()> {
    let mut stats = vec![ClusterStats::default(); state.m];
    for (&s, (_, y)) in state.s.iter().zip(data.flat()) {
        stats[s - 1].push(y);
    }
    for (x, st) in state.measure.atoms.iter_mut().zip(&stats) {
        *x = cfg.centering.posterior(st).sample(rng);
    }
    Ok(())
}

/// Draws each label from the finite law on `{j : psi_j > u}` with masses
/// `w_j(t) / psi_j K(y | x_j)`. If every mass underflows, the slice is
/// redrawn once before giving up.
pub fn update_membership<R: Rng + ?Sized>(
    state: &mut ChainState,
    data: &TimeGridDataset,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<()> {
    let psi = cfg.psi()?;
    let ln_w: Vec<Vec<f64>> =
        (0..data.n_times()).map(|i| state.measure.weights_at(i).weights.iter().map(|w| w.ln()).collect()).collect();
    let mut lm = Vec::with_capacity(state.m);
    for (o, (i, y)) in data.flat().into_iter().enumerate() {
        let mut retried = false;
        loop {
            let top = (psi.count_above(state.u[o]) as usize).min(state.m);
            lm.clear();
            lm.extend(
                (1..=top).map(|j| ln_w[i][j - 1] - psi.ln_value(j as u64) + state.measure.atoms[j - 1].ln_density(y)),
            );
            if let Some(k) = sample_log_weights(&lm, rng) {
                state.s[o] = k + 1;
                break;
            }
            if retried {
                return Err(Error::Numerical(format!(
                    "observation {o} (y = {y}, time index {i}): every candidate component has zero mass"
                )));
            }
            retried = true;
            let s = state.s[o];
            state.u[o] = psi.value(s as u64) * open01(rng);
            if !state.measure.closed && psi.count_above(state.u[o]) as usize > state.m {
                return Err(Error::Numerical(format!(
                    "observation {o}: redrawn slice needs more than {} components",
                    state.m
                )));
            }
        }
    }
    Ok(())
}

/// Log joint density of the represented sticks and their transition latents
/// as a function of the stick law: stationary start, then
/// `r_tau(d) Beta(v | a + k, b + d - k)` across every gap. Binomial and slice
/// factors that do not involve the stick law are left out.
pub fn ln_stick_joint(state: &ChainState, sc: &StickConfig, gaps: &[f64]) -> f64 {
    let mut total = 0.0;
    for (j, (path, augs)) in state.measure.sticks.iter().zip(&state.trans_aug).enumerate() {
        let p = match sc.params(j + 1) {
            Ok(p) => p,
            Err(_) => return f64::NEG_INFINITY,
        };
        total += beta_ln_pdf(path[0], p.a(), p.b());
        for (i, aug) in augs.iter().enumerate() {
            total += ln_nb_weight(aug.d, gaps[i], &p)
                + beta_ln_pdf(path[i + 1], p.a() + aug.k as f64, p.b() + (aug.d - aug.k) as f64);
        }
    }
    total
}

/// Log full conditional (up to a constant) of `(theta, c)`.
pub fn ln_hyper_target(
    state: &ChainState,
    cfg: &SamplerConfig,
    theta: Option<f64>,
    c: Option<f64>,
    gaps: &[f64],
) -> f64 {
    let mut lp = 0.0;
    if cfg.samples_theta() {
        lp += cfg.theta_prior.ln_pdf(theta.unwrap_or(f64::NAN));
    }
    if cfg.samples_c() {
        lp += cfg.c_prior.ln_pdf(c.unwrap_or(f64::NAN));
    }
    if lp == f64::NEG_INFINITY || lp.is_nan() {
        return f64::NEG_INFINITY;
    }
    lp + ln_stick_joint(state, &cfg.sticks_at(theta, c), gaps)
}

/// Log-scale random-walk Metropolis with a step tuned toward acceptance 0.44
/// by a diminishing (Robbins–Monro) schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveMh {
    pub log_step: f64,
    pub proposed: u64,
    pub accepted: u64,
}

pub const MH_TARGET_ACCEPTANCE: f64 = 0.44;

impl AdaptiveMh {
    pub fn new(step: f64) -> Self {
        Self { log_step: step.ln(), proposed: 0, accepted: 0 }
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    /// One move from `x > 0`. With `adapt = Some(n)` the step is adjusted
    /// with gain `(n + 1)^-0.6`.
    pub fn step<R: Rng + ?Sized, F: Fn(f64) -> f64>(
        &mut self,
        x: f64,
        ln_target: F,
        rng: &mut R,
        adapt: Option<u64>,
    ) -> Result<f64> {
        let current = ln_target(x);
        if !current.is_finite() {
            return Err(Error::Numerical(format!("log target is {current} at the current value {x}")));
        }
        let z: f64 = rng.sample(StandardNormal);
        let y = x * (self.log_step.exp() * z).exp();
        let proposed = ln_target(y);
        let ln_alpha = if proposed.is_finite() && y > 0.0 && y.is_finite() {
            proposed - current + y.ln() - x.ln()
        } else {
            f64::NEG_INFINITY
        };
        self.proposed += 1;
        let accept = open01(rng).ln() < ln_alpha;
        if accept {
            self.accepted += 1;
        }
        if let Some(n) = adapt {
            let gain = (n as f64 + 1.0).powf(-0.6);
            self.log_step = (self.log_step + gain * (ln_alpha.min(0.0).exp() - MH_TARGET_ACCEPTANCE)).clamp(-8.0, 3.0);
        }
        Ok(if accept { y } else { x })
    }
}

/// Metropolis moves for the free concentration and shared rate.
pub fn update_hyperparams<R: Rng + ?Sized>(
    state: &mut ChainState,
    data: &TimeGridDataset,
    cfg: &SamplerConfig,
    rng: &mut R,
    adapt: Option<u64>,
) -> Result<()> {
    let gaps = data.gaps();
    let dump = |state: &ChainState, e: Error| {
        Error::Numerical(format!(
            "{e}; theta = {:?}, c = {:?}, m = {}, sticks = {}",
            state.theta,
            state.c,
            state.m,
            state.n_sticks()
        ))
    };
    if cfg.samples_theta() {
        let c = state.c;
        let x = state.theta.expect("sampled theta present");
        let mut mh = state.theta_mh;
        let st: &ChainState = state;
        let new = mh.step(x, |t| ln_hyper_target(st, cfg, Some(t), c, &gaps), rng, adapt).map_err(|e| dump(st, e))?;
        state.theta = Some(new);
        state.theta_mh = mh;
    }
    if cfg.samples_c() {
        let theta = state.theta;
        let x = state.c.expect("sampled c present");
        let mut mh = state.c_mh;
        let st: &ChainState = state;
        let new =
            mh.step(x, |c| ln_hyper_target(st, cfg, theta, Some(c), &gaps), rng, adapt).map_err(|e| dump(st, e))?;
        state.c = Some(new);
        state.c_mh = mh;
    }
    Ok(())
}
