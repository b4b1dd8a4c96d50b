use super::{param, TfmError};

const MONOTONE_GRID: usize = 256;

/// Payment implied by a monotone allocation rule `x(z)` for a bid `b_i`.
///
/// Deterministic rules (`x ∈ {0, 1}`) pay the smallest winning bid, found by
/// bisection to 1e-9. Randomized rules pay `b·x(b) − ∫₀ᵇ x(t) dt`, computed
/// by adaptive Simpson quadrature to 1e-8.
pub fn myerson_payment<F>(alloc: F, b_i: f64, randomized: bool) -> Result<f64, TfmError>
where
    F: Fn(f64) -> f64,
{
    if !b_i.is_finite() || b_i < 0.0 {
        return Err(param("b_i", b_i, "must be finite and nonnegative"));
    }
    check_monotone(&alloc, b_i)?;
    if randomized {
        let integral = adaptive_simpson(&alloc, 0.0, b_i, 1e-8);
        return Ok((b_i * alloc(b_i) - integral).max(0.0));
    }
    if alloc(b_i) < 1.0 {
        return Ok(0.0);
    }
    if alloc(0.0) >= 1.0 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, b_i);
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if alloc(mid) >= 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

fn check_monotone<F: Fn(f64) -> f64>(alloc: &F, b_i: f64) -> Result<(), TfmError> {
    // Cover [0, 2 b_i] so rules that only misbehave above the bid are caught too.
    let top = if b_i > 0.0 { 2.0 * b_i } else { 1.0 };
    let mut prev_z = 0.0;
    let mut prev_x = alloc(0.0);
    for j in 1..=MONOTONE_GRID {
        let z = top * j as f64 / MONOTONE_GRID as f64;
        let x = alloc(z);
        if x < prev_x - 1e-12 {
            return Err(TfmError::NonMonotone {
                lo: prev_z,
                hi: z,
                x_lo: prev_x,
                x_hi: x,
            });
        }
        prev_z = z;
        prev_x = x;
    }
    Ok(())
}

fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let (fa, fb) = (f(a), f(b));
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    // At a jump of a step allocation the bound never holds; the depth cap
    // ends refinement there once the cell is ~2^-50 of the range.
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
}
