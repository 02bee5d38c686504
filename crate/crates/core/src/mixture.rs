//! Gaussian kernel, normal–gamma centering measure and the time-indexed
//! mixture density built on a [`MeasureState`].

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};

use crate::data::TimeGridDataset;
use crate::error::{Error, Result};
use crate::measure::MeasureState;
use crate::numerics::ln_gamma;

/// A mixture kernel indexed by its atom parameters.
pub trait Kernel {
    fn ln_density(&self, y: f64) -> f64;
    fn mean(&self) -> f64;

    fn density(&self, y: f64) -> f64 {
        self.ln_density(y).exp()
    }
}

/// Gaussian kernel `N(y | mean, 1 / precision)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParam {
    pub mean: f64,
    pub precision: f64,
}

impl KernelParam {
    pub fn new(mean: f64, precision: f64) -> Result<Self> {
        if !(precision > 0.0 && precision.is_finite()) || !mean.is_finite() {
            return Err(Error::param(format!(
                "kernel needs finite mean and positive precision, got ({mean}, {precision})"
            )));
        }
        Ok(Self { mean, precision })
    }
}

impl Kernel for KernelParam {
    #[inline]
    fn ln_density(&self, y: f64) -> f64 {
        let d = y - self.mean;
        0.5 * (self.precision / (2.0 * PI)).ln() - 0.5 * self.precision * d * d
    }

    fn mean(&self) -> f64 {
        self.mean
    }
}

pub fn kernel_eval(y: f64, x: &KernelParam) -> f64 {
    x.density(y)
}

/// Normal–gamma centering measure:
/// `precision ~ Gamma(shape, rate)`, `mean | precision ~ N(mean0, 1 / (kappa0 precision))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CenteringMeasure {
    pub mean0: f64,
    pub kappa0: f64,
    pub shape: f64,
    pub rate: f64,
}

impl Default for CenteringMeasure {
    /// `N(m | 0, 1000 / v) Gamma(v | 10, 1)`.
    fn default() -> Self {
        Self { mean0: 0.0, kappa0: 1.0 / 1000.0, shape: 10.0, rate: 1.0 }
    }
}

/// Sufficient statistics of a cluster of observations.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ClusterStats {
    pub n: usize,
    pub sum: f64,
    pub sum_sq: f64,
}

impl ClusterStats {
    pub fn push(&mut self, y: f64) {
        self.n += 1;
        self.sum += y;
        self.sum_sq += y * y;
    }

    pub fn from_slice(ys: &[f64]) -> Self {
        let mut s = Self::default();
        ys.iter().for_each(|y| s.push(*y));
        s
    }
}

impl CenteringMeasure {
    pub fn new(mean0: f64, kappa0: f64, shape: f64, rate: f64) -> Result<Self> {
        let m = Self { mean0, kappa0, shape, rate };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa0 > 0.0 && self.shape > 0.0 && self.rate > 0.0) || !self.mean0.is_finite() {
            return Err(Error::param(format!("invalid centering measure {self:?}")));
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> KernelParam {
        sample_normal_gamma(self.mean0, self.kappa0, self.shape, self.rate, rng)
    }

    /// Joint log density of `(mean, precision)`.
    pub fn ln_density(&self, x: &KernelParam) -> f64 {
        let tau = x.precision;
        let d = x.mean - self.mean0;
        self.shape * self.rate.ln() - ln_gamma(self.shape) + (self.shape - 1.0) * tau.ln() - self.rate * tau
            + 0.5 * (self.kappa0 * tau / (2.0 * PI)).ln()
            - 0.5 * self.kappa0 * tau * d * d
    }

    /// Conjugate update given the observations assigned to one atom.
    pub fn posterior(&self, stats: &ClusterStats) -> CenteringMeasure {
        if stats.n == 0 {
            return *self;
        }
        let n = stats.n as f64;
        let ybar = stats.sum / n;
        let ss = (stats.sum_sq - n * ybar * ybar).max(0.0);
        let kappa_n = self.kappa0 + n;
        let mean_n = (self.kappa0 * self.mean0 + stats.sum) / kappa_n;
        let d = ybar - self.mean0;
        CenteringMeasure {
            mean0: mean_n,
            kappa0: kappa_n,
            shape: self.shape + 0.5 * n,
            rate: self.rate + 0.5 * ss + 0.5 * self.kappa0 * n * d * d / kappa_n,
        }
    }

    /// Prior predictive density of a single observation (Student t).
    pub fn predictive_density(&self, y: f64) -> f64 {
        let nu = 2.0 * self.shape;
        let scale_sq = self.rate * (1.0 + self.kappa0) / (self.shape * self.kappa0);
        let z = (y - self.mean0) * (y - self.mean0) / (nu * scale_sq);
        (ln_gamma(0.5 * (nu + 1.0))
            - ln_gamma(0.5 * nu)
            - 0.5 * (nu * PI * scale_sq).ln()
            - 0.5 * (nu + 1.0) * z.ln_1p())
        .exp()
    }
}

fn sample_normal_gamma<R: Rng + ?Sized>(mean0: f64, kappa: f64, shape: f64, rate: f64, rng: &mut R) -> KernelParam {
    let precision = Gamma::new(shape, 1.0 / rate).expect("valid gamma").sample(rng).max(f64::MIN_POSITIVE);
    let sd = (1.0 / (kappa * precision)).sqrt();
    let mean = Normal::new(mean0, sd).expect("valid normal").sample(rng);
    KernelParam { mean, precision }
}

/// Mixture density value at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityValue {
    /// `sum_j w_j K(y | x_j)` over the represented atoms.
    pub raw: f64,
    /// `raw / (1 - deficit)`, a proper density in `y`.
    pub normalized: f64,
}

/// `f(y) = sum_j w_j(t_i) K(y | x_j)`, reported raw and renormalized by the
/// represented mass.
pub fn density_eval<X: Kernel>(state: &MeasureState<X>, time_index: usize, y: f64) -> DensityValue {
    let sw = state.weights_at(time_index);
    let raw: f64 = state.atoms.iter().zip(&sw.weights).map(|(x, w)| w * x.density(y)).sum();
    DensityValue { raw, normalized: raw / (1.0 - sw.deficit) }
}

/// Renormalized density on a grid of `y` values at one time.
pub fn density_grid<X: Kernel>(state: &MeasureState<X>, time_index: usize, ys: &[f64]) -> Vec<f64> {
    let sw = state.weights_at(time_index);
    let mass = 1.0 - sw.deficit;
    ys.iter().map(|&y| state.atoms.iter().zip(&sw.weights).map(|(x, w)| w * x.density(y)).sum::<f64>() / mass).collect()
}

/// Mean functional `eta_t = integral of y f(dy)`: for kernels with a mean,
/// `sum_j w_j mean_j / (1 - deficit)`.
pub fn mean_functional<X: Kernel>(state: &MeasureState<X>, time_index: usize) -> f64 {
    let sw = state.weights_at(time_index);
    let s: f64 = state.atoms.iter().zip(&sw.weights).map(|(x, w)| w * x.mean()).sum();
    s / (1.0 - sw.deficit)
}

/// Mean of the toy generating process at time `t`: `cos(2t) + t/2`.
pub fn toy_mean(t: f64) -> f64 {
    (2.0 * t).cos() + 0.5 * t
}

/// Variance of the toy generating process.
pub const TOY_VARIANCE: f64 = 0.1;

/// Density of the toy generating process `N(cos(2t) + t/2, 1/10)`.
pub fn toy_density(t: f64, y: f64) -> f64 {
    KernelParam { mean: toy_mean(t), precision: 1.0 / TOY_VARIANCE }.density(y)
}

/// `per_time` draws from `N(cos(2t) + t/2, 1/10)` at each of `n_times`
/// equally spaced times on `[0, t_max]`.
pub fn simulate_toy<R: Rng + ?Sized>(
    n_times: usize,
    per_time: usize,
    t_max: f64,
    rng: &mut R,
) -> Result<TimeGridDataset> {
    if n_times == 0 || per_time == 0 {
        return Err(Error::param("simulate_toy needs at least one time and one draw per time"));
    }
    if n_times > 1 && !(t_max > 0.0) {
        return Err(Error::param(format!("t_max = {t_max} must be positive")));
    }
    let times: Vec<f64> =
        if n_times == 1 { vec![0.0] } else { (0..n_times).map(|i| t_max * i as f64 / (n_times - 1) as f64).collect() };
    let sd = TOY_VARIANCE.sqrt();
    let observations = times
        .iter()
        .map(|&t| {
            let dist = Normal::new(toy_mean(t), sd).expect("valid normal");
            (0..per_time).map(|_| dist.sample(rng)).collect()
        })
        .collect();
    TimeGridDataset::new(times, observations)
}
