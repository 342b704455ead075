use crate::{Error, Result};

const SCAN_POINTS: usize = 1024;

/// Smallest `x` in `[a, b]` where `f` crosses from negative to non-negative.
///
/// `f` is sampled on a uniform grid of 1024 intervals and the first sign
/// change is refined by bisection until the bracket is narrower than
/// `tol`. The returned point is the upper end of the final bracket, so
/// `f(x) >= 0` always holds for the result. If `f(a) >= 0` the answer is `a`.
pub fn find_min_root(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(a <= b) {
        return Err(Error::InvalidInput("find_min_root needs a <= b"));
    }
    if f(a) >= 0.0 {
        return Ok(a);
    }
    let step = (b - a) / SCAN_POINTS as f64;
    let mut lo = a;
    let mut hi = None;
    for i in 1..=SCAN_POINTS {
        let x = if i == SCAN_POINTS { b } else { a + step * i as f64 };
        if f(x) >= 0.0 {
            hi = Some(x);
            break;
        }
        lo = x;
    }
    let mut hi = hi.ok_or(Error::NoRoot)?;
    let tol = tol.max(0.0);
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Golden-section search for the maximiser of a unimodal function on
/// `[a, b]`. Returns `(argmax, max)`.
pub fn maximize_unimodal(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    let mut best = (x1, f1);
    for x in [a, b, x2] {
        let v = f(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_root() {
        let r = find_min_root(|x| x - 0.5, 0.0, 1.0, 1e-14).unwrap();
        assert!((r - 0.5).abs() < 1e-13);
    }

    #[test]
    fn picks_smaller_of_two_roots() {
        // positive between 0.2 and 0.8
        let r = find_min_root(|x| -(x - 0.2) * (x - 0.8), 0.0, 1.0, 1e-14).unwrap();
        assert!((r - 0.2).abs() < 1e-13);
    }

    #[test]
    fn no_root() {
        assert_eq!(find_min_root(|x| -1.0 - x, 0.0, 1.0, 1e-12), Err(Error::NoRoot));
    }

    #[test]
    fn root_at_left_end() {
        assert_eq!(find_min_root(|x| x, 0.0, 1.0, 1e-12).unwrap(), 0.0);
    }

    #[test]
    fn golden_section() {
        let (x, v) = maximize_unimodal(|x| -(x - 0.3) * (x - 0.3) + 2.0, 0.0, 1.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-6);
        assert!((v - 2.0).abs() < 1e-12);
    }
}
