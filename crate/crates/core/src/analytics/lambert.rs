use std::f64::consts::E;

use super::{check, AnalyticsError};

const BRANCH_POINT: f64 = -1.0 / E;

/// Principal branch of the Lambert W function: the w ≥ −1 with w·eʷ = x.
///
/// Halley iteration from a series seed near the branch point, a `ln(1+x)`
/// seed in the middle range and the asymptotic `ln x − ln ln x` for large x.
/// Inputs up to 1e−12 below −1/e are treated as the branch point.
pub fn lambert_w0(x: f64) -> Result<f64, AnalyticsError> {
    check("x", x, "[-1/e, inf)", x >= BRANCH_POINT - 1e-12)?;
    if x.is_infinite() {
        return Ok(f64::INFINITY);
    }
    if x <= BRANCH_POINT {
        return Ok(-1.0);
    }
    if x == 0.0 {
        return Ok(0.0);
    }

    let mut w = if x < -0.25 {
        // w = -1 + p - p²/3 + 11p³/72 - ..., p = sqrt(2(ex + 1)).
        let p = (2.0 * (E * x + 1.0)).max(0.0).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else if x < 3.0 {
        x.ln_1p()
    } else {
        let l = x.ln();
        l - l.ln()
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
        let next = (w - step).max(-1.0);
        let done = (next - w).abs() <= 4.0 * f64::EPSILON * (1.0 + next.abs());
        w = next;
        if done {
            break;
        }
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_points() {
        assert_eq!(lambert_w0(0.0).unwrap(), 0.0);
        assert!((lambert_w0(E).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(lambert_w0(-1.0 / E).unwrap(), -1.0);
    }

    #[test]
    fn below_branch_point_is_an_error() {
        assert!(lambert_w0(-0.5).is_err());
        assert!(lambert_w0(f64::NAN).is_err());
        // Rounding slack right at the branch point.
        assert_eq!(lambert_w0(-1.0 / E - 1e-14).unwrap(), -1.0);
    }

    #[test]
    fn round_trips_across_ranges() {
        for &x in &[-0.3678, -0.36, -0.3, -0.1, 1e-9, 0.5, 2.0, 10.0, 1e3, 1e8, 1e300] {
            let w = lambert_w0(x).unwrap();
            let back = w * w.exp();
            assert!(
                (back - x).abs() <= 1e-12 * x.abs().max(1.0),
                "x = {x}: w = {w}, w e^w = {back}"
            );
        }
    }
}
