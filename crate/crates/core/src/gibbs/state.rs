use rand::distr::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::SamplerConfig;
use super::updates::AdaptiveMh;
use crate::data::TimeGridDataset;
use crate::error::{Error, Result};
use crate::measure::{MeasureState, StickConfig};
use crate::mixture::KernelParam;
use crate::slice::GeometricSlice;
use crate::wf::{self, TransitionAug, WFParams};

/// Full sampler state.
///
/// Observations are addressed in dataset order (time by time, then within a
/// time). Stick `j` (0-based storage, label `j + 1`) has values at every
/// time in `measure.sticks[j]` and one latent triple per gap in
/// `trans_aug[j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainState {
    /// Number of represented components.
    pub m: usize,
    /// 1-based component label per observation.
    pub s: Vec<usize>,
    pub u: Vec<f64>,
    pub measure: MeasureState<KernelParam>,
    pub trans_aug: Vec<Vec<TransitionAug>>,
    pub theta: Option<f64>,
    pub c: Option<f64>,
    pub theta_mh: AdaptiveMh,
    pub c_mh: AdaptiveMh,
}

impl ChainState {
    pub fn stick_config(&self, cfg: &SamplerConfig) -> StickConfig {
        cfg.sticks_at(self.theta, self.c)
    }

    pub fn n_sticks(&self) -> usize {
        self.measure.sticks.len()
    }

    /// Checks every structural invariant of the state against the data.
    pub fn check_invariants(&self, data: &TimeGridDataset, cfg: &SamplerConfig) -> Result<()> {
        let fail = |msg: String| Err(Error::Numerical(format!("state invariant violated: {msg}")));
        let psi = cfg.psi()?;
        let g = cfg.g()?;
        let n_obs = data.n_observations();
        let n = data.n_times();
        if self.s.len() != n_obs || self.u.len() != n_obs {
            return fail(format!("{} labels, {} slices for {n_obs} observations", self.s.len(), self.u.len()));
        }
        let closed = self.measure.closed;
        let expected_sticks = if closed { self.m - 1 } else { self.m };
        if self.measure.atoms.len() != self.m || self.n_sticks() != expected_sticks {
            return fail(format!(
                "m = {} with {} atoms and {} sticks",
                self.m,
                self.measure.atoms.len(),
                self.n_sticks()
            ));
        }
        if closed != cfg.truncate_at_cap || (closed && self.m != cfg.m_cap) || self.m > cfg.m_cap {
            return fail(format!("truncation m = {} inconsistent with cap {}", self.m, cfg.m_cap));
        }
        if self.trans_aug.len() != self.n_sticks() {
            return fail("latent rows do not match sticks".into());
        }
        if self.measure.times.as_slice() != data.times() {
            return fail("measure times differ from data times".into());
        }
        let mut m_max = 0u64;
        for (o, (&s, &u)) in self.s.iter().zip(&self.u).enumerate() {
            if s == 0 || s > self.m {
                return fail(format!("observation {o} has label {s} outside 1..={}", self.m));
            }
            if !(u > 0.0 && u < psi.value(s as u64)) {
                return fail(format!("observation {o}: slice {u} not below psi_{s}"));
            }
            let above = psi.count_above(u);
            if (s as u64) > above {
                return fail(format!("observation {o}: label {s} above slice bound {above}"));
            }
            m_max = m_max.max(above);
        }
        if !closed && m_max as usize != self.m {
            return fail(format!("m = {} but the slice bound gives {m_max}", self.m));
        }
        for (j, (path, augs)) in self.measure.sticks.iter().zip(&self.trans_aug).enumerate() {
            if path.len() != n || augs.len() + 1 != n {
                return fail(format!("stick {} has wrong length", j + 1));
            }
            if let Some(v) = path.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
                return fail(format!("stick {} value {v} outside (0, 1)", j + 1));
            }
            if let Some(a) = augs.iter().find(|a| !a.is_valid(&g)) {
                return fail(format!("stick {} latent {a:?} invalid", j + 1));
            }
        }
        for x in &self.measure.atoms {
            if !(x.precision > 0.0 && x.precision.is_finite() && x.mean.is_finite()) {
                return fail(format!("atom {x:?} invalid"));
            }
        }
        for (name, v) in [("theta", self.theta), ("c", self.c)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return fail(format!("{name} = {v}"));
                }
            }
        }
        Ok(())
    }
}

/// Uniform draw on the open interval `(0, 1)`.
#[inline]
pub(crate) fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(Open01)
}

/// Draws one stick path and its transition latents from the joint prior:
/// stationary start, then `d ~ r_tau`, `k ~ Bin(d, v_prev)`,
/// `v ~ Beta(a + k, b + d - k)`, `o ~ U(0, g(d))` across each gap.
pub fn sample_prior_path<R: Rng + ?Sized>(
    gaps: &[f64],
    p: &WFParams,
    g: &GeometricSlice,
    rng: &mut R,
) -> (Vec<f64>, Vec<TransitionAug>) {
    let mut path = Vec::with_capacity(gaps.len() + 1);
    let mut augs = Vec::with_capacity(gaps.len());
    path.push(wf::sample_invariant(p, rng));
    for &tau in gaps {
        let prev = *path.last().expect("nonempty");
        let (v, d, k) = wf::sample_transition_with_latents(prev, tau, p, rng);
        let o = g.value(d) * open01(rng);
        path.push(v);
        augs.push(TransitionAug { o, k, d });
    }
    (path, augs)
}

/// Grows (with prior draws) or shrinks the represented components to `m`.
pub(crate) fn resize_truncation<R: Rng + ?Sized>(
    state: &mut ChainState,
    m: usize,
    cfg: &SamplerConfig,
    gaps: &[f64],
    rng: &mut R,
) -> Result<()> {
    if m > cfg.m_cap {
        return Err(Error::TruncationCap { m, cap: cfg.m_cap });
    }
    let g = cfg.g()?;
    let sc = state.stick_config(cfg);
    while state.m < m {
        let j = state.m + 1;
        let p = sc.params(j)?;
        let (path, augs) = sample_prior_path(gaps, &p, &g, rng);
        state.measure.sticks.push(path);
        state.trans_aug.push(augs);
        state.measure.atoms.push(cfg.centering.sample(rng));
        state.m = j;
    }
    if state.m > m {
        state.measure.sticks.truncate(m);
        state.trans_aug.truncate(m);
        state.measure.atoms.truncate(m);
        state.m = m;
    }
    Ok(())
}

/// Initial truncation level for `n_obs` observations.
pub fn initial_truncation(n_obs: usize) -> usize {
    ((n_obs as f64).ln().ceil() as usize).max(10)
}

/// Initial state. Memberships are uniform on `1..=m0`, sticks with their
/// transition latents are exact prior paths, atoms come from the centering
/// measure and free hyperparameters from their priors.
pub fn init_chain<R: Rng + ?Sized>(data: &TimeGridDataset, cfg: &SamplerConfig, rng: &mut R) -> Result<ChainState> {
    cfg.validate()?;
    let theta = match (cfg.stick_config.theta(), cfg.fix_theta) {
        (None, _) => None,
        (Some(_), Some(t)) => Some(t),
        (Some(_), None) => Some(cfg.theta_prior.sample(rng)),
    };
    let c = match (cfg.stick_config.shared_c(), cfg.fix_c) {
        (None, _) => None,
        (Some(_), Some(c)) => Some(c),
        (Some(_), None) => Some(cfg.c_prior.sample(rng)),
    };
    let psi = cfg.psi()?;
    let gaps = data.gaps();
    let n_obs = data.n_observations();
    let m0 = initial_truncation(n_obs);
    let label_max = if cfg.truncate_at_cap { m0.min(cfg.m_cap) } else { m0 };
    let s: Vec<usize> = (0..n_obs).map(|_| rng.random_range(1..=label_max)).collect();

    let mut state = ChainState {
        m: 0,
        s,
        u: vec![0.0; n_obs],
        measure: MeasureState { atoms: Vec::new(), sticks: Vec::new(), times: data.times().to_vec(), closed: false },
        trans_aug: Vec::new(),
        theta,
        c,
        theta_mh: AdaptiveMh::new(cfg.mh_initial_step),
        c_mh: AdaptiveMh::new(cfg.mh_initial_step),
    };
    for (u, &s) in state.u.iter_mut().zip(&state.s) {
        *u = psi.value(s as u64) * open01(rng);
    }
    if cfg.truncate_at_cap {
        resize_truncation(&mut state, cfg.m_cap - 1, cfg, &gaps, rng)?;
        state.measure.atoms.push(cfg.centering.sample(rng));
        state.m = cfg.m_cap;
        state.measure.closed = true;
    } else {
        let m = state.u.iter().map(|&u| psi.count_above(u)).max().unwrap_or(1) as usize;
        resize_truncation(&mut state, m, cfg, &gaps, rng)?;
    }
    Ok(state)
}
