//! Bracketed root finding: bisection safeguarded secant steps.
//!
//! Open Newton iterations are avoided on purpose: the functions solved here
//! have simple poles, and every step must stay inside a sign-changing bracket.

use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Finds a zero of `f` in `[a, b]`, where `f(a)` and `f(b)` differ in sign.
///
/// Each iteration tries a secant (regula falsi with Illinois weighting) step
/// and falls back to bisection whenever the bracket fails to halve. Stops
/// when the bracket width is below `tol` (absolute) or `f` is exactly zero.
pub fn bracketed<F>(mut f: F, a: f64, b: f64, tol: f64, max_iter: usize) -> Result<Root>
where
    F: FnMut(f64) -> f64,
{
    let (mut lo, mut hi) = (a.min(b), a.max(b));
    let (mut flo, mut fhi) = (f(lo), f(hi));
    if flo == 0.0 {
        return Ok(Root { x: lo, residual: 0.0, iterations: 0 });
    }
    if fhi == 0.0 {
        return Ok(Root { x: hi, residual: 0.0, iterations: 0 });
    }
    if !(flo.is_finite() && fhi.is_finite()) || flo.signum() == fhi.signum() {
        return Err(Error::Root(format!(
            "no sign change on [{lo}, {hi}]: f = ({flo}, {fhi})"
        )));
    }

    // Illinois weights, so a stale endpoint does not stall the secant.
    let (mut wlo, mut whi) = (1.0, 1.0);
    let mut last_side = 0i8;
    let mut width = hi - lo;
    for it in 1..=max_iter {
        let secant = (lo * whi * fhi - hi * wlo * flo) / (whi * fhi - wlo * flo);
        let mut x = if secant.is_finite() && secant > lo && secant < hi {
            secant
        } else {
            0.5 * (lo + hi)
        };
        // Fall back to bisection when the previous step did not halve the bracket.
        if hi - lo > 0.5 * width {
            x = 0.5 * (lo + hi);
        }
        width = hi - lo;

        let fx = f(x);
        if fx == 0.0 {
            return Ok(Root { x, residual: 0.0, iterations: it });
        }
        if fx.signum() == flo.signum() {
            lo = x;
            flo = fx;
            wlo = 1.0;
            if last_side == -1 {
                whi *= 0.5;
            }
            last_side = -1;
        } else {
            hi = x;
            fhi = fx;
            whi = 1.0;
            if last_side == 1 {
                wlo *= 0.5;
            }
            last_side = 1;
        }
        if hi - lo <= tol || hi - lo <= 4.0 * f64::EPSILON * x.abs() {
            let (x, r) = if flo.abs() < fhi.abs() { (lo, flo) } else { (hi, fhi) };
            return Ok(Root { x, residual: r, iterations: it });
        }
    }
    Err(Error::Root(format!(
        "no convergence after {max_iter} iterations, bracket [{lo}, {hi}]"
    )))
}

/// Indices `i` such that `values[i]` and `values[i + 1]` have strictly
/// opposite signs. Non-finite samples break brackets.
pub fn sign_changes(values: &[f64]) -> Vec<usize> {
    values
        .windows(2)
        .enumerate()
        .filter(|(_, w)| {
            w[0].is_finite() && w[1].is_finite() && w[0] != 0.0 && w[1] != 0.0 && w[0].signum() != w[1].signum()
        })
        .map(|(i, _)| i)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_sqrt2() {
        let r = bracketed(|x| x * x - 2.0, 0.0, 2.0, 1e-14, 200).unwrap();
        assert!((r.x - 2f64.sqrt()).abs() < 1e-14);
        assert!(r.iterations < 60);
    }

    #[test]
    fn flat_function_converges() {
        // Steep on one side, flat on the other: the Illinois weights matter here.
        let r = bracketed(|x: f64| x.powi(9) - 1e-9, 0.0, 4.0, 1e-13, 200).unwrap();
        assert!((r.x - 0.1).abs() < 1e-12, "{r:?}");
    }

    #[test]
    fn rejects_non_bracket() {
        assert!(bracketed(|x| x * x + 1.0, -1.0, 1.0, 1e-10, 100).is_err());
    }

    #[test]
    fn exact_endpoint() {
        let r = bracketed(|x| x - 1.0, 1.0, 3.0, 1e-10, 10).unwrap();
        assert_eq!(r.x, 1.0);
    }

    #[test]
    fn sign_change_indices() {
        assert_eq!(sign_changes(&[1.0, 2.0, -1.0, -3.0, 4.0, f64::NAN, -1.0]), vec![1, 3]);
        assert!(sign_changes(&[1.0, 0.0, -1.0]).is_empty());
    }
}
