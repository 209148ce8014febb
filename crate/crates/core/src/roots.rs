//! Inversion of strictly increasing functions on `[0, ∞)` that vanish at 0.
//!
//! Newton's method on `ln g(eˣ)`, whose slope is the local growth exponent
//! `t g'(t)/g(t)` and stays bounded for power-like `g`. A bracket in `t` is
//! kept throughout and geometric bisection takes over whenever a Newton step
//! leaves it.

use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Real};

#[derive(Debug, Clone, Copy)]
pub struct InverseOptions<T> {
    /// Stop once the relative change of the iterate falls below this.
    pub rel_tol: T,
    /// Growth factor while no upper bracket is known.
    pub expand_factor: T,
    /// The iterate may not exceed this.
    pub guard: T,
    pub max_iter: usize,
}

impl<T: Real> Default for InverseOptions<T> {
    fn default() -> Self {
        InverseOptions { rel_tol: lit(1e-12), expand_factor: lit(4.0), guard: T::max_value().sqrt(), max_iter: 400 }
    }
}

impl<T: Real> InverseOptions<T> {
    pub fn with_rel_tol(rel_tol: T) -> Self {
        InverseOptions { rel_tol, ..Default::default() }
    }
}

/// Solves `g(x) = target` for `x ≥ 0`, where `g` is strictly increasing with
/// `g(0) = 0` and derivative `dg`. Returns exactly `0` for `target ≤ 0`.
pub fn invert_increasing<T, G, D>(
    g: G,
    dg: D,
    target: T,
    opts: &InverseOptions<T>,
    what: &'static str,
) -> Result<T>
where
    T: Real,
    G: Fn(T) -> T,
    D: Fn(T) -> T,
{
    if target.is_nan() {
        return Err(Error::EvaluationDomain { what, t: f64::NAN });
    }
    if target <= T::zero() {
        return Ok(T::zero());
    }
    let ln_target = target.ln();
    let mut lo = T::zero();
    let mut hi = T::infinity();
    let mut x = T::one();
    for _ in 0..opts.max_iter {
        let gx = g(x);
        if gx.is_nan() {
            return Err(Error::EvaluationDomain { what, t: to_f64(x) });
        }
        if gx == target {
            return Ok(x);
        }
        if gx < target {
            lo = x;
        } else {
            hi = x;
        }
        let slope = x * dg(x) / gx;
        let newton = x * ((ln_target - gx.ln()) / slope).exp();
        let next = if slope > T::zero() && newton.is_finite() && newton > lo && newton < hi {
            newton
        } else if hi == T::infinity() {
            x * opts.expand_factor
        } else if lo == T::zero() {
            x / opts.expand_factor
        } else {
            (lo * hi).sqrt()
        };
        if next > opts.guard || !next.is_finite() {
            return Err(Error::UnboundedInverse { what, target: to_f64(target), guard: to_f64(opts.guard) });
        }
        if (next - x).abs() <= opts.rel_tol * next {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverts_square() {
        let x = invert_increasing(|t: f64| t * t, |t| 2.0 * t, 2.0, &Default::default(), "sq").unwrap();
        assert!((x - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn zero_target_is_exact_zero() {
        let x = invert_increasing(|t: f64| t, |_| 1.0, 0.0, &Default::default(), "id").unwrap();
        assert_eq!(x, 0.0);
    }

    #[test]
    fn tiny_targets_keep_relative_accuracy() {
        let x = invert_increasing(|t: f64| 0.5 * t * t, |t| t, 1e-30, &Default::default(), "q").unwrap();
        let exact = (2e-30f64).sqrt();
        assert!(((x - exact) / exact).abs() < 1e-13);
    }

    #[test]
    fn large_targets_expand_the_bracket() {
        let x = invert_increasing(|t: f64| t.powi(3), |t| 3.0 * t * t, 1e12, &Default::default(), "cube").unwrap();
        assert!(((x - 1e4) / 1e4).abs() < 1e-13);
    }

    #[test]
    fn bounded_function_triggers_guard() {
        let err = invert_increasing(|t: f64| t / (1.0 + t), |t| 1.0 / ((1.0 + t) * (1.0 + t)), 2.0, &Default::default(), "sat")
            .unwrap_err();
        assert!(matches!(err, Error::UnboundedInverse { .. }));
    }

    #[test]
    fn flat_derivative_falls_back_to_bisection() {
        // derivative reported as zero everywhere: Newton is useless
        let x = invert_increasing(|t: f64| t * t * t, |_| 0.0, 8.0, &Default::default(), "flat").unwrap();
        assert!((x - 2.0).abs() < 1e-12);
    }

    #[test]
    fn iteration_count_stays_small() {
        use std::cell::Cell;
        let calls = Cell::new(0);
        let g = |t: f64| {
            calls.set(calls.get() + 1);
            t.powf(2.5) + t.powi(4)
        };
        let x = invert_increasing(g, |t| 2.5 * t.powf(1.5) + 4.0 * t.powi(3), 1e-20, &Default::default(), "mix").unwrap();
        assert!(((g(x) - 1e-20) / 1e-20).abs() < 1e-11);
        assert!(calls.get() < 15, "{} evaluations", calls.get());
    }
}
