use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{StickConfig, StickKind, TimeScale};
use crate::mixture::CenteringMeasure;
use crate::numerics::ln_gamma;
use crate::slice::GeometricSlice;

/// `Gamma(shape, rate)` prior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaPrior {
    pub shape: f64,
    pub rate: f64,
}

impl GammaPrior {
    pub fn new(shape: f64, rate: f64) -> Result<Self> {
        let g = Self { shape, rate };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.shape > 0.0 && self.rate > 0.0 && self.shape.is_finite() && self.rate.is_finite()) {
            return Err(Error::param(format!("gamma prior needs positive shape and rate, got {self:?}")));
        }
        Ok(())
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        if !(x > 0.0) {
            return f64::NEG_INFINITY;
        }
        self.shape * self.rate.ln() - ln_gamma(self.shape) + (self.shape - 1.0) * x.ln() - self.rate * x
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        Gamma::new(self.shape, 1.0 / self.rate).expect("valid gamma").sample(rng).max(f64::MIN_POSITIVE)
    }

    pub fn mean(&self) -> f64 {
        self.shape / self.rate
    }
}

impl Default for GammaPrior {
    fn default() -> Self {
        Self { shape: 2.0, rate: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Stick law and time scale. The concentration and shared rate stored
    /// here are starting values; they are overridden by the hyperparameter
    /// chain unless fixed.
    pub stick_config: StickConfig,
    pub centering: CenteringMeasure,
    /// `psi_s = exp(-slice_eta s)`.
    pub slice_eta: f64,
    /// `g(d) = exp(-trans_slice_eta d)`.
    pub trans_slice_eta: f64,
    /// Post-burn-in sweeps.
    pub iters: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub theta_prior: GammaPrior,
    pub c_prior: GammaPrior,
    pub fix_theta: Option<f64>,
    pub fix_c: Option<f64>,
    pub m_cap: usize,
    /// Represent exactly `m_cap` components, the last one taking all mass
    /// left by the first `m_cap - 1` sticks. Without it, a truncation above
    /// `m_cap` is an error.
    pub truncate_at_cap: bool,
    /// Initial step (log scale) of the hyperparameter random walks.
    pub mh_initial_step: f64,
    pub rng_seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            stick_config: StickConfig { kind: StickKind::Dirichlet { theta: 1.0 }, time_scale: TimeScale::Shared(0.5) },
            centering: CenteringMeasure::default(),
            slice_eta: 0.5,
            trans_slice_eta: 0.5,
            iters: 10_000,
            burn_in: 5_000,
            thin: 5,
            theta_prior: GammaPrior::default(),
            c_prior: GammaPrior::default(),
            fix_theta: None,
            fix_c: None,
            m_cap: 500,
            truncate_at_cap: false,
            mh_initial_step: 0.5,
            rng_seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        self.stick_config.validate()?;
        self.centering.validate()?;
        self.psi()?;
        self.g()?;
        self.theta_prior.validate()?;
        self.c_prior.validate()?;
        if self.thin == 0 {
            return Err(Error::param("thin must be at least 1"));
        }
        if self.iters == 0 {
            return Err(Error::param("iters must be at least 1"));
        }
        if self.burn_in >= self.iters && self.burn_in > 0 {
            return Err(Error::param(format!(
                "burn_in ({}) must be smaller than iters ({})",
                self.burn_in, self.iters
            )));
        }
        if self.m_cap == 0 || (self.truncate_at_cap && self.m_cap < 2) {
            return Err(Error::param("m_cap is too small"));
        }
        if !(self.mh_initial_step > 0.0) {
            return Err(Error::param("mh_initial_step must be positive"));
        }
        if let Some(t) = self.fix_theta {
            if self.stick_config.theta().is_none() {
                return Err(Error::param("fix_theta given but the stick law has no concentration"));
            }
            self.stick_config.with_theta(t).validate()?;
        }
        if let Some(c) = self.fix_c {
            if self.stick_config.shared_c().is_none() {
                return Err(Error::param("fix_c given but the time scale is not a shared rate"));
            }
            self.stick_config.with_shared_c(c).validate()?;
        }
        Ok(())
    }

    pub fn psi(&self) -> Result<GeometricSlice> {
        GeometricSlice::new(self.slice_eta)
    }

    pub fn g(&self) -> Result<GeometricSlice> {
        GeometricSlice::new(self.trans_slice_eta)
    }

    /// Whether the concentration is sampled.
    pub fn samples_theta(&self) -> bool {
        self.stick_config.theta().is_some() && self.fix_theta.is_none()
    }

    /// Whether the shared rate is sampled.
    pub fn samples_c(&self) -> bool {
        self.stick_config.shared_c().is_some() && self.fix_c.is_none()
    }

    /// Number of stored draws: one per `thin` post-burn-in sweeps.
    pub fn n_draws(&self) -> usize {
        self.iters / self.thin
    }

    /// Stick configuration at hyperparameter values `theta` and `c`.
    pub fn sticks_at(&self, theta: Option<f64>, c: Option<f64>) -> StickConfig {
        let mut sc = self.stick_config.clone();
        if let Some(t) = theta {
            sc = sc.with_theta(t);
        }
        if let Some(c) = c {
            sc = sc.with_shared_c(c);
        }
        sc
    }
}
