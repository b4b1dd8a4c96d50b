use super::{check, lambert_w0, AnalyticsError};

fn check_gamma(gamma: f64) -> Result<(), AnalyticsError> {
    if gamma > 0.0 && gamma <= 0.5 && 2.0 * gamma - gamma.ln() >= 2.0 {
        Ok(())
    } else {
        Err(AnalyticsError::EquilibriumGamma(gamma))
    }
}

/// The point `2γ − ln γ − 1` beyond which the schedule is constant at 1.
pub fn equilibrium_upper_break(gamma: f64) -> Result<f64, AnalyticsError> {
    check_gamma(gamma)?;
    Ok(2.0 * gamma - gamma.ln() - 1.0)
}

/// Claim schedule under which undercutting forkers are in equilibrium:
///
/// * `x` for `x ≤ γ`,
/// * `−W₀(−γ·e^{x−2γ})` up to `2γ − ln γ − 1`,
/// * `1` beyond.
pub fn equilibrium_f(x: f64, gamma: f64) -> Result<f64, AnalyticsError> {
    check_gamma(gamma)?;
    check("x", x, "[0, inf)", x >= 0.0)?;
    let upper = equilibrium_upper_break(gamma)?;
    if x <= gamma {
        Ok(x)
    } else if x < upper {
        equilibrium_middle_branch(x, gamma)
    } else {
        Ok(1.0)
    }
}

/// The middle branch `−W₀(−γ·e^{x−2γ})`, evaluated on the closed interval
/// `[γ, 2γ − ln γ − 1]` so both breakpoints can be checked for continuity.
pub fn equilibrium_middle_branch(x: f64, gamma: f64) -> Result<f64, AnalyticsError> {
    let upper = equilibrium_upper_break(gamma)?;
    check("x", x, "[gamma, 2 gamma - ln gamma - 1]", x >= gamma && x <= upper)?;
    // Clamp guards the argument against rounding just past −1/e.
    let arg = (-gamma * (x - 2.0 * gamma).exp()).max(-1.0 / std::f64::consts::E);
    let f = -lambert_w0(arg)?;
    Ok(polish(f, x - upper))
}

/// Refines the middle branch near the upper break, where W₀ is ill
/// conditioned. With `s = 1 − f` and `y = x − upper ≤ 0`, the branch solves
/// `ln(1 − s) + s = y`, which stays well conditioned as `s → 0`.
fn polish(f: f64, y: f64) -> f64 {
    let mut s = 1.0 - f;
    if s <= 0.0 || s < (-2.0 * y).sqrt() * 0.5 {
        s = (-2.0 * y).sqrt();
    }
    for _ in 0..8 {
        if s <= 0.0 {
            return 1.0;
        }
        let h = (-s).ln_1p() + s - y;
        let dh = -s / (1.0 - s);
        let next = (s - h / dh).clamp(0.0, 1.0 - 1e-16);
        if (next - s).abs() <= 1e-17 {
            s = next;
            break;
        }
        s = next;
    }
    1.0 - s
}
