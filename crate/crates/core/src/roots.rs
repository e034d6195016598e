//! Scalar bracketing solvers.
//!
//! Everything in this crate that inverts a function does so on a monotone
//! quantity, so plain bisection is the workhorse: it never leaves the bracket
//! and its iteration count is predictable.

use crate::error::{GrushinError, Result};

/// Maximum number of bracket doublings before giving up.
pub const MAX_DOUBLINGS: u32 = 60;

/// Bisection on a bracket `[lo, hi]` where `f(lo)` and `f(hi)` differ in sign.
///
/// Stops when the bracket is narrower than `abs_tol + rel_tol * |mid|` or when
/// floating point can no longer split it.
pub fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64, abs_tol: f64, rel_tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if !(f_lo.is_finite() || f_hi.is_finite()) || f_lo.signum() == f_hi.signum() {
        return Err(GrushinError::numerical(
            "bisect",
            format!("no sign change on [{lo:e}, {hi:e}]: f = ({f_lo:e}, {f_hi:e})"),
        ));
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo.min(hi) || mid >= lo.max(hi) {
            return Ok(mid);
        }
        if (hi - lo).abs() <= abs_tol + rel_tol * mid.abs() {
            return Ok(mid);
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Solves `g(x) = target` for a strictly increasing `g` on `[0, ∞)` with
/// `g(0) = 0`. The bracket starts at `[0, 1]` and doubles its upper end.
pub fn invert_increasing<G>(g: G, target: f64, context: &'static str) -> Result<f64>
where
    G: Fn(f64) -> f64,
{
    if !(target >= 0.0) || !target.is_finite() {
        return Err(GrushinError::input(format!(
            "{context}: target must be finite and non-negative, got {target}"
        )));
    }
    if target == 0.0 {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    let mut doublings = 0;
    while g(hi) < target {
        hi *= 2.0;
        doublings += 1;
        if doublings > MAX_DOUBLINGS {
            return Err(GrushinError::numerical(
                context,
                format!("bracket expansion failed: g({hi:e}) < {target:e}"),
            ));
        }
    }
    let mut lo = 0.0;
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(mid);
        }
        if g(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt_two() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 0.0, 1e-15).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn bisect_rejects_same_sign() {
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 0.0, 1e-12).is_err());
    }

    #[test]
    fn invert_cube() {
        let r = invert_increasing(|x| x * x * x, 8.0, "cube").unwrap();
        assert!((r - 2.0).abs() < 1e-14);
        assert_eq!(invert_increasing(|x| x, 0.0, "id").unwrap(), 0.0);
    }

    #[test]
    fn invert_reports_unbounded_failure() {
        let err = invert_increasing(|x| x / (1.0 + x), 2.0, "bounded").unwrap_err();
        assert!(!err.is_input());
    }
}
