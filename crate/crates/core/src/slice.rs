use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Decreasing slice function `n -> exp(-eta n)` with inverse `x -> -ln(x) / eta`.
///
/// Used both for the mixture-component slice (`psi`) and for the transition
/// series slice (`g`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometricSlice {
    eta: f64,
}

impl GeometricSlice {
    pub fn new(eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta < 1.0) {
            return Err(Error::Domain { name: "slice eta", value: eta, domain: "(0, 1)" });
        }
        Ok(Self { eta })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    #[inline]
    pub fn value(&self, n: u64) -> f64 {
        (-self.eta * n as f64).exp()
    }

    #[inline]
    pub fn ln_value(&self, n: u64) -> f64 {
        -self.eta * n as f64
    }

    #[inline]
    pub fn inverse(&self, x: f64) -> f64 {
        -x.ln() / self.eta
    }

    /// `floor(inverse(x))`: the largest `n` with `value(n) > x` (up to ties).
    #[inline]
    pub fn floor_inverse(&self, x: f64) -> u64 {
        let v = self.inverse(x);
        if v <= 0.0 {
            0
        } else if v >= u64::MAX as f64 {
            u64::MAX
        } else {
            v.floor() as u64
        }
    }

    /// Largest `n` with `value(n) > x`, exact with respect to `value` (so
    /// `x < value(j)` iff `j <= count_above(x)`). Requires `0 < x < 1`.
    pub fn count_above(&self, x: f64) -> u64 {
        let mut n = self.floor_inverse(x);
        while n > 0 && self.value(n) <= x {
            n -= 1;
        }
        while self.value(n + 1) > x {
            n += 1;
        }
        n
    }
}
