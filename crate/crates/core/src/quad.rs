//! Adaptive composite Simpson quadrature.
//!
//! The integrands handled here (ratios of the model nonlinearities and the
//! blowup-time kernel) are smooth and positive, so plain Simpson with
//! interval bisection and a Richardson-style error estimate is enough.

use crate::error::{Error, Result};

/// Relative tolerance used throughout the crate for nonlinearity integrals.
pub const DEFAULT_RTOL: f64 = 1e-10;
/// Absolute floor below which an interval contribution is accepted outright.
pub const DEFAULT_ATOL: f64 = 1e-30;

const MAX_DEPTH: u32 = 60;

#[inline]
fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adapt(
    f: &mut impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    rtol: f64,
    atol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let err = left + right - whole;
    // 1/15 Richardson factor for Simpson halving.
    if err.abs() <= 15.0 * (atol + rtol * (left + right).abs()) {
        return Ok(left + right + err / 15.0);
    }
    if depth >= MAX_DEPTH {
        return Err(Error::QuadratureNonConvergence {
            a,
            b,
            estimate: left + right,
            error: err.abs() / 15.0,
        });
    }
    let half_atol = 0.5 * atol;
    let l = adapt(f, a, m, fa, flm, fm, left, rtol, half_atol, depth + 1)?;
    let r = adapt(f, m, b, fm, frm, fb, right, rtol, half_atol, depth + 1)?;
    Ok(l + r)
}

/// Integrate `f` over `[a, b]` (signed: `a > b` yields the negated value)
/// to relative tolerance `rtol` with absolute floor `atol`.
pub fn adaptive_simpson(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    rtol: f64,
    atol: f64,
) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    // Seed with a few panels so narrow features near an endpoint are not
    // missed by the first Richardson test on a wide interval.
    let panels = 8;
    let h = (hi - lo) / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let x0 = lo + k as f64 * h;
        let x1 = if k == panels - 1 { hi } else { x0 + h };
        let xm = 0.5 * (x0 + x1);
        let f0 = f(x0);
        let fm = f(xm);
        let f1 = f(x1);
        if !(f0.is_finite() && fm.is_finite() && f1.is_finite()) {
            return Err(Error::NonFiniteEvaluation {
                what: "quadrature integrand",
                s: if !f0.is_finite() {
                    x0
                } else if !fm.is_finite() {
                    xm
                } else {
                    x1
                },
            });
        }
        let whole = simpson(x0, x1, f0, fm, f1);
        total += adapt(
            &mut f,
            x0,
            x1,
            f0,
            fm,
            f1,
            whole,
            rtol,
            atol / panels as f64,
            0,
        )?;
    }
    Ok(sign * total)
}

/// Convenience wrapper with the crate-default tolerances.
pub fn integrate(f: impl FnMut(f64) -> f64, a: f64, b: f64) -> Result<f64> {
    adaptive_simpson(f, a, b, DEFAULT_RTOL, DEFAULT_ATOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomial_is_exact() {
        let v = integrate(|x| x * x, 0.0, 1.0).unwrap();
        assert_relative_eq!(v, 1.0 / 3.0, max_relative = 1e-14);
    }

    #[test]
    fn exponential_to_tolerance() {
        let v = integrate(|x| x.exp(), 0.0, 3.0).unwrap();
        assert_relative_eq!(v, 3f64.exp() - 1.0, max_relative = 1e-11);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let a = integrate(|x| x.cos(), 0.0, 1.5).unwrap();
        let b = integrate(|x| x.cos(), 1.5, 0.0).unwrap();
        assert_relative_eq!(a, -b, max_relative = 1e-14);
    }

    #[test]
    fn empty_interval_is_zero() {
        assert_eq!(integrate(|x| x.exp(), 2.0, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn steep_but_integrable_quotient() {
        // 1/x over [1e-8, 1]: large dynamic range, exact value ln(1e8).
        let v = integrate(|x| 1.0 / x, 1e-8, 1.0).unwrap();
        assert_relative_eq!(v, 8.0 * 10f64.ln(), max_relative = 1e-9);
    }

    #[test]
    fn non_finite_integrand_reports_location() {
        let err = integrate(|x| 1.0 / (x - 0.5), 0.0, 1.0).unwrap_err();
        match err {
            crate::error::Error::NonFiniteEvaluation { .. }
            | crate::error::Error::QuadratureNonConvergence { .. } => {}
            other => panic!("unexpected error {other:?}"),
        }
    }
}
