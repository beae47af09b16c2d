//! Bracketing root finder.

use crate::error::{Error, Result};

/// Bisection on `[lo, hi]` for a continuous `f` with `f(lo)` and `f(hi)` of
/// opposite sign (or zero).
///
/// Stops once the bracket is narrower than `tol`, or when the midpoint can no
/// longer be distinguished from an endpoint; `tol = 0.0` therefore bisects to
/// full double precision.
pub fn bisect<F>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if lo > hi {
        std::mem::swap(&mut lo, &mut hi);
    }
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return Err(Error::Precondition(format!(
            "root not bracketed on [{lo}, {hi}]: f = ({f_lo}, {f_hi})"
        )));
    }
    // 2100 halvings exhaust any pair of finite doubles
    for _ in 0..2100 {
        if hi - lo <= tol {
            break;
        }
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
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
    Ok(lo + 0.5 * (hi - lo))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_sqrt_two() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 0.0).unwrap();
        assert!((r - std::f64::consts::SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn reversed_bracket_and_tolerance() {
        let r = bisect(|x| x.cos(), 3.0, 0.0, 1e-6).unwrap();
        assert!((r - std::f64::consts::FRAC_PI_2).abs() < 1e-6);
    }

    #[test]
    fn endpoint_roots_and_bad_brackets() {
        assert_eq!(bisect(|x| x, 0.0, 1.0, 0.0).unwrap(), 0.0);
        assert_eq!(bisect(|x| x - 1.0, 0.0, 1.0, 0.0).unwrap(), 1.0);
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 0.0).is_err());
        assert!(bisect(|_| f64::NAN, -1.0, 1.0, 0.0).is_err());
    }
}
