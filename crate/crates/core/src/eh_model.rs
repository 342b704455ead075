//! Instantaneous energy-harvesting models.
//!
//! A model maps the instantaneous received RF power `P` (watts) to the
//! instantaneous harvested DC power. Every model is a non-decreasing curve
//! `curve(P)` clamped at the saturation input `A²`:
//!
//! ```text
//! harvested(P) = min(curve(P), curve(A²))
//! ```
//!
//! The rectifier curve is the single-diode half-wave model
//!
//! ```text
//! curve(P) = λ · (W0(μ·e^μ·I0(ν·√(2P))) / μ − 1)²
//! ```
//!
//! where `W0` is the principal Lambert-W branch and `I0` the modified Bessel
//! function of order zero. With this bracketing `curve(0) = 0`.

use crate::numerics::{bessel_i0, bessel_i0_scaled, lambert_w0, lambert_w0_of_exp};
use crate::{Error, Result};

/// Relative slack accepted on inverse queries at the saturation plateau.
const SATURATION_SLACK: f64 = 1e-9;

/// Common behaviour of the harvesting models.
pub trait Harvester {
    /// Saturation input power `A²` in watts.
    fn sat_input(&self) -> f64;

    /// The unclamped curve, for `0 <= p <= sat_input()`.
    fn curve(&self, p: f64) -> f64;

    /// `curve(sat_input())`, precomputed.
    fn saturation_output(&self) -> f64;

    /// Harvested power for received power `p`; negative inputs are an error.
    fn harvested_power(&self, p: f64) -> Result<f64> {
        if p < 0.0 || p.is_nan() {
            return Err(Error::NegativeInput(p));
        }
        Ok(self.harvest(p))
    }

    /// Infallible variant of [`Harvester::harvested_power`]; negative input
    /// is treated as zero.
    fn harvest(&self, p: f64) -> f64 {
        if p >= self.sat_input() {
            self.saturation_output()
        } else if p > 0.0 {
            self.curve(p).min(self.saturation_output())
        } else {
            0.0
        }
    }

    /// Smallest input power whose harvested power reaches `target`.
    ///
    /// The saturation output maps to exactly `sat_input()`.
    fn inverse_harvested_power(&self, target: f64) -> Result<f64> {
        let sat = self.saturation_output();
        if target.is_nan() {
            return Err(Error::InvalidInput("harvest target is NaN"));
        }
        if target > sat * (1.0 + SATURATION_SLACK) {
            return Err(Error::TargetExceedsSaturation { target, saturation: sat });
        }
        if target <= 0.0 {
            return Ok(0.0);
        }
        if target >= sat {
            return Ok(self.sat_input());
        }
        Ok(bisect_inverse(|p| self.curve(p), target, self.sat_input()))
    }
}

fn bisect_inverse(curve: impl Fn(f64) -> f64, target: f64, upper: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, upper);
    for _ in 0..400 {
        if hi - lo <= 1e-14 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if curve(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Half-wave single-diode rectifier model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectifierEhModel {
    mu: f64,
    nu: f64,
    lambda_scale: f64,
    sat_input: f64,
    sat_output: f64,
}

impl RectifierEhModel {
    /// `mu` is dimensionless, `nu` in 1/√W, `lambda_scale` in W and
    /// `sat_input` (A²) in W. All must be positive and finite.
    pub fn new(mu: f64, nu: f64, lambda_scale: f64, sat_input: f64) -> Result<Self> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !(ok(mu) && ok(nu) && ok(lambda_scale) && ok(sat_input)) {
            return Err(Error::InvalidInput("rectifier parameters must be positive and finite"));
        }
        let mut model = Self { mu, nu, lambda_scale, sat_input, sat_output: 0.0 };
        model.sat_output = model.curve(sat_input);
        if !model.sat_output.is_finite() {
            return Err(Error::InvalidInput("rectifier saturation output is not finite"));
        }
        Ok(model)
    }

    /// μ = 0.03, ν = 2400 /√W, λ = 1e-10 W, A² = 0.4 mW.
    pub fn reference() -> Self {
        Self::new(0.03, 2.4e3, 1e-10, 0.4e-3).expect("reference parameters are valid")
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn lambda_scale(&self) -> f64 {
        self.lambda_scale
    }

    fn lambert_argument_w(&self, p: f64) -> f64 {
        let x = self.nu * (2.0 * p).sqrt();
        let i0 = bessel_i0(x);
        let w = if i0.is_finite() && i0 < 1e300 {
            lambert_w0(self.mu * self.mu.exp() * i0)
        } else {
            let ln_arg = self.mu.ln() + self.mu + x + bessel_i0_scaled(x).ln();
            lambert_w0_of_exp(ln_arg)
        };
        // The argument is always >= μ·e^μ > 0, well inside the domain.
        w.unwrap_or(f64::NAN)
    }
}

impl Harvester for RectifierEhModel {
    fn sat_input(&self) -> f64 {
        self.sat_input
    }

    fn curve(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return 0.0;
        }
        let w = self.lambert_argument_w(p);
        let d = w / self.mu - 1.0;
        self.lambda_scale * d * d
    }

    fn saturation_output(&self) -> f64 {
        self.sat_output
    }
}

/// Linear conversion `η·P` capped at `η·A²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSaturatedEhModel {
    efficiency: f64,
    sat_input: f64,
}

impl LinearSaturatedEhModel {
    pub fn new(efficiency: f64, sat_input: f64) -> Result<Self> {
        if !(efficiency.is_finite() && efficiency > 0.0 && sat_input.is_finite() && sat_input > 0.0) {
            return Err(Error::InvalidInput("linear model parameters must be positive and finite"));
        }
        Ok(Self { efficiency, sat_input })
    }

    pub fn efficiency(&self) -> f64 {
        self.efficiency
    }

    /// Linear model with the same saturation point and output as `other`.
    pub fn matching<H: Harvester>(other: &H) -> Result<Self> {
        Self::new(other.saturation_output() / other.sat_input(), other.sat_input())
    }
}

impl Harvester for LinearSaturatedEhModel {
    fn sat_input(&self) -> f64 {
        self.sat_input
    }

    fn curve(&self, p: f64) -> f64 {
        self.efficiency * p.max(0.0)
    }

    fn saturation_output(&self) -> f64 {
        self.efficiency * self.sat_input
    }

    fn inverse_harvested_power(&self, target: f64) -> Result<f64> {
        let sat = self.saturation_output();
        if target.is_nan() {
            return Err(Error::InvalidInput("harvest target is NaN"));
        }
        if target > sat * (1.0 + SATURATION_SLACK) {
            return Err(Error::TargetExceedsSaturation { target, saturation: sat });
        }
        if target >= sat {
            return Ok(self.sat_input);
        }
        Ok((target / self.efficiency).max(0.0))
    }
}

/// Per-user harvesting circuit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EhModel {
    Rectifier(RectifierEhModel),
    LinearSaturated(LinearSaturatedEhModel),
}

impl From<RectifierEhModel> for EhModel {
    fn from(m: RectifierEhModel) -> Self {
        Self::Rectifier(m)
    }
}

impl From<LinearSaturatedEhModel> for EhModel {
    fn from(m: LinearSaturatedEhModel) -> Self {
        Self::LinearSaturated(m)
    }
}

impl Default for EhModel {
    fn default() -> Self {
        Self::Rectifier(RectifierEhModel::reference())
    }
}

impl Harvester for EhModel {
    fn sat_input(&self) -> f64 {
        match self {
            Self::Rectifier(m) => m.sat_input(),
            Self::LinearSaturated(m) => m.sat_input(),
        }
    }

    fn curve(&self, p: f64) -> f64 {
        match self {
            Self::Rectifier(m) => m.curve(p),
            Self::LinearSaturated(m) => m.curve(p),
        }
    }

    fn saturation_output(&self) -> f64 {
        match self {
            Self::Rectifier(m) => m.saturation_output(),
            Self::LinearSaturated(m) => m.saturation_output(),
        }
    }

    fn inverse_harvested_power(&self, target: f64) -> Result<f64> {
        match self {
            Self::Rectifier(m) => m.inverse_harvested_power(target),
            Self::LinearSaturated(m) => m.inverse_harvested_power(target),
        }
    }
}
