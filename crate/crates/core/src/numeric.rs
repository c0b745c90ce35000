//! Small numerical utilities shared by the solvers.

use crate::error::{Result, XvaError};

/// Pairwise (cascade) summation. Deterministic for a fixed input order and
/// accurate to O(log n) rounding growth, which keeps long quadrature and
/// Monte-Carlo reductions reproducible.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Thomas algorithm for a tridiagonal system.
///
/// `sub[i]` multiplies the unknown below row `i` (with `sub[0]` unused),
/// `sup[i]` the one above (with `sup[n-1]` unused). Overwrites nothing;
/// scratch buffers are internal. Fails if a pivot collapses.
pub fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if sub.len() != n || sup.len() != n || rhs.len() != n {
        return Err(XvaError::Dimension {
            expected: n,
            actual: sub.len().min(sup.len()).min(rhs.len()),
        });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut c_star = vec![0.0; n];
    let mut d_star = vec![0.0; n];
    let mut pivot = diag[0];
    if pivot == 0.0 {
        return Err(XvaError::Config("tridiagonal pivot vanished at row 0".into()));
    }
    c_star[0] = sup[0] / pivot;
    d_star[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - sub[i] * c_star[i - 1];
        if pivot == 0.0 {
            return Err(XvaError::Config(format!(
                "tridiagonal pivot vanished at row {i}"
            )));
        }
        c_star[i] = sup[i] / pivot;
        d_star[i] = (rhs[i] - sub[i] * d_star[i - 1]) / pivot;
    }
    let mut x = d_star;
    for i in (0..n - 1).rev() {
        x[i] -= c_star[i] * x[i + 1];
    }
    Ok(x)
}

/// Number of uniform steps of size `step` covering `total`, required to be a
/// whole number up to round-off. Discretization specs promise exact tiling,
/// so a genuine remainder is a configuration error.
pub fn exact_steps(total: f64, step: f64, what: &str) -> Result<usize> {
    if !(step > 0.0) || !step.is_finite() || !total.is_finite() || total < 0.0 {
        return Err(XvaError::Config(format!(
            "{what}: need finite total >= 0 and step > 0, got {total} / {step}"
        )));
    }
    let n = (total / step).round();
    if n < 1.0 {
        return Err(XvaError::Config(format!(
            "{what}: step {step} exceeds the interval {total}"
        )));
    }
    if (n * step - total).abs() > 1e-9 * total.max(1.0) {
        return Err(XvaError::Config(format!(
            "{what}: step {step} does not tile {total} evenly"
        )));
    }
    Ok(n as usize)
}

/// Linear interpolation on a uniform grid `x_i = x0 + i h`, values `ys`.
/// Errors when `x` falls outside the covered interval.
pub fn lerp_uniform(x0: f64, h: f64, ys: &[f64], x: f64) -> Result<f64> {
    let n = ys.len();
    debug_assert!(n >= 2 && h > 0.0);
    let x_max = x0 + (n - 1) as f64 * h;
    // Tolerate end-point rounding from repeated grid arithmetic.
    let slack = 1e-9 * h.max(1.0);
    if x < x0 - slack || x > x_max + slack {
        return Err(XvaError::InvalidInput(format!(
            "query point {x} outside grid [{x0}, {x_max}]"
        )));
    }
    let t = ((x - x0) / h).clamp(0.0, (n - 1) as f64);
    let i = (t.floor() as usize).min(n - 2);
    let w = t - i as f64;
    Ok(ys[i] * (1.0 - w) + ys[i + 1] * w)
}
