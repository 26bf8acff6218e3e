//! Principal branch of the Lambert W function on the reals.

use std::f64::consts::E;

use crate::error::BoundError;

const BRANCH_POINT: f64 = -1.0 / E;

/// `W_0(x)`, the solution `w >= -1` of `w e^w = x`.
///
/// Starts from a branch-point series, a Padé-style guess near zero, or the
/// asymptotic `ln x - ln ln x`, then runs Halley steps to convergence.
pub fn lambert_w0(x: f64) -> Result<f64, BoundError> {
    if x.is_nan() || x < BRANCH_POINT {
        // allow the rounded value of -1/e itself
        if !(x.is_finite() && (x - BRANCH_POINT).abs() <= 4.0 * f64::EPSILON) {
            return Err(BoundError::LambertDomain(x));
        }
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(f64::INFINITY);
    }
    let q = x - BRANCH_POINT;
    if q <= 0.0 {
        return Ok(-1.0);
    }

    let mut w = if q < 0.3 {
        let p = (2.0 * E * q).sqrt();
        -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0)))
    } else if x < 3.0 {
        // rough rational fit, good to a few percent on [-0.07, 3]
        x * (1.0 + 4.0 / 3.0 * x) / (1.0 + x * (7.0 / 3.0 + 5.0 / 6.0 * x))
    } else {
        let l1 = x.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    };

    for _ in 0..64 {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        if wp1.abs() < 1e-300 {
            break;
        }
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let step = f / denom;
        let next = w - step;
        if !next.is_finite() {
            break;
        }
        let done = (next - w).abs() <= 4.0 * f64::EPSILON * (1.0 + next.abs());
        w = next;
        if done {
            break;
        }
    }
    Ok(w.max(-1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Bisection on `w e^w = x`, independent of the Halley path.
    fn bisect(x: f64) -> f64 {
        let (mut lo, mut hi) = (-1.0_f64, x.max(1.0));
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid * mid.exp() < x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn exact_points() {
        assert_eq!(lambert_w0(0.0).unwrap(), 0.0);
        assert!((lambert_w0(E).unwrap() - 1.0).abs() < 1e-15);
        assert!((lambert_w0(E.sqrt() / 2.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((lambert_w0(BRANCH_POINT).unwrap() + 1.0).abs() < 1e-7);
    }

    #[test]
    fn omega_constant() {
        // bisection oracle gives 0.5671432904097838
        let w = lambert_w0(1.0).unwrap();
        assert!((w - bisect(1.0)).abs() < 1e-14);
        assert!((w - 0.567_143_290_409_783_8).abs() < 1e-15);
    }

    #[test]
    fn matches_bisection_across_ranges() {
        for &x in &[-0.367, -0.3, -0.1, -1e-5, 1e-6, 0.2, 2.5, 3.0, 10.0, 1e3, 1e6, 1e12] {
            let w = lambert_w0(x).unwrap();
            let b = bisect(x);
            assert!((w - b).abs() <= 1e-12 * (1.0 + b.abs()), "x={x} w={w} b={b}");
        }
    }

    #[test]
    fn domain_error_below_branch_point() {
        assert!(matches!(lambert_w0(-0.4), Err(BoundError::LambertDomain(_))));
        assert!(lambert_w0(f64::NAN).is_err());
    }
}
