//! GHZ state mixed with white noise, `ρ(x) = x|Ψ_0^+><Ψ_0^+| + (1-x) I/2^N`.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ghz::{rho_from_params, RhoNParams};
use crate::qstate::DensityMatrix;
use crate::splits::lambda_count;

/// Mixing weight `x ∈ [0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct MixtureWeight(f64);

impl MixtureWeight {
    pub fn new(x: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::InvalidArgument(format!(
                "mixture weight {x} outside [0, 1]"
            )));
        }
        Ok(MixtureWeight(x))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// `λ_0^+ = x + (1-x)/2^N`, every other weight `(1-x)/2^N`.
pub fn ghz_mixture_params(n: usize, x: MixtureWeight) -> Result<RhoNParams> {
    let count = lambda_count(n)?;
    let noise = (1.0 - x.0) / (1u64 << n) as f64;
    RhoNParams::new(n, x.0 + noise, noise, vec![noise; count])
}

pub fn ghz_mixture_state(n: usize, x: MixtureWeight) -> Result<DensityMatrix> {
    rho_from_params(&ghz_mixture_params(n, x)?)
}

/// Exact rational threshold `1 / (1 + 2^(N-1))`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Threshold {
    pub n: usize,
    pub numerator: u64,
    pub denominator: u64,
}

impl Threshold {
    pub fn value(&self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }

    /// Compares `x` with the threshold; exact for rational `x = a/b`.
    pub fn compare_rational(&self, a: u64, b: u64) -> std::cmp::Ordering {
        (a as u128 * self.denominator as u128).cmp(&(self.numerator as u128 * b as u128))
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator)
    }
}

/// Fully separable for `x <= x*`; every split NPT and the `N`-party GHZ
/// state distillable for `x > x*`.
pub fn separability_threshold(n: usize) -> Result<Threshold> {
    if !(2..=63).contains(&n) {
        return Err(Error::InvalidArgument(format!(
            "threshold needs 2 <= n <= 63, got {n}"
        )));
    }
    Ok(Threshold {
        n,
        numerator: 1,
        denominator: 1 + (1u64 << (n - 1)),
    })
}
