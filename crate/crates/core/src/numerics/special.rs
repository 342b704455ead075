use core::f64::consts::{E, PI};

use crate::{Error, Result};

const INV_E: f64 = 1.0 / E;

/// Principal branch `W0` of the Lambert-W function, i.e. the solution
/// `w >= -1` of `w * exp(w) = x`.
///
/// Halley iteration from a logarithmic starting guess (branch-point series
/// close to `-1/e`). Arguments up to one machine epsilon below `-1/e` are
/// treated as the branch point itself.
pub fn lambert_w0(x: f64) -> Result<f64> {
    if x.is_nan() || x < -INV_E - f64::EPSILON {
        return Err(Error::Domain { what: "lambert_w0", value: x });
    }
    if x <= -INV_E {
        return Ok(-1.0);
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(f64::INFINITY);
    }

    let mut w = if x < -0.25 {
        let p = (2.0 * (E * x + 1.0)).max(0.0).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else {
        // Winitzki's approximation, good to a few percent on [-0.25, inf).
        let l = x.ln_1p();
        l * (1.0 - l.ln_1p() / (2.0 + l))
    };

    for _ in 0..64 {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        if wp1.abs() < 1e-300 {
            break;
        }
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let next = w - f / denom;
        if !next.is_finite() {
            break;
        }
        let done = (next - w).abs() <= 4.0 * f64::EPSILON * (1.0 + next.abs());
        w = next;
        if done {
            return Ok(w.max(-1.0));
        }
    }
    // Near the branch point Halley stalls at the rounding floor rather than
    // converging in the step-size sense; accept if the residual is there.
    if (w * w.exp() - x).abs() <= 1e-12 * x.abs().max(1e-300) {
        Ok(w.max(-1.0))
    } else {
        Err(Error::Convergence { what: "lambert_w0", iterations: 64 })
    }
}

/// `W0(exp(l))`, for arguments whose exponential would overflow.
///
/// Newton iteration on `w + ln(w) = l`.
pub fn lambert_w0_of_exp(l: f64) -> Result<f64> {
    if l < 1.0 {
        return lambert_w0(l.exp());
    }
    let mut w = l - l.ln();
    for _ in 0..64 {
        let g = w + w.ln() - l;
        let next = w - g * w / (w + 1.0);
        let done = (next - w).abs() <= 4.0 * f64::EPSILON * next;
        w = next;
        if done {
            return Ok(w);
        }
    }
    Err(Error::Convergence { what: "lambert_w0_of_exp", iterations: 64 })
}

/// Modified Bessel function of the first kind, order zero.
///
/// Power series below `x = 15`, Hankel asymptotic expansion above. Even in
/// `x`. Overflows to `+inf` past `x ≈ 713`; use [`bessel_i0_scaled`] when
/// the magnitude itself is not needed.
pub fn bessel_i0(x: f64) -> f64 {
    let x = x.abs();
    if x < 15.0 {
        i0_series(x)
    } else {
        // exp(x) split in two so the overflow point is as late as possible
        let half = (0.5 * x).exp();
        half * (half * i0_asymptotic_sum(x) / (2.0 * PI * x).sqrt())
    }
}

/// `exp(-|x|) * I0(x)`, finite for every finite `x`.
pub fn bessel_i0_scaled(x: f64) -> f64 {
    let x = x.abs();
    if x < 15.0 {
        i0_series(x) * (-x).exp()
    } else {
        i0_asymptotic_sum(x) / (2.0 * PI * x).sqrt()
    }
}

fn i0_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut m = 1.0;
    while term > 1e-17 * sum {
        term *= q / (m * m);
        sum += term;
        m += 1.0;
    }
    sum
}

fn i0_asymptotic_sum(x: f64) -> f64 {
    let mut term: f64 = 1.0;
    let mut sum = 1.0;
    for k in 1..64 {
        let odd = (2 * k - 1) as f64;
        let next = term * odd * odd / (8.0 * k as f64 * x);
        if next >= term {
            break;
        }
        term = next;
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}
