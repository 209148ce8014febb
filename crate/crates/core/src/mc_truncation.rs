//! Mean-curvature kernel `1/√(1 + t²)` and its truncation `φ_L`.
//!
//! `φ_L` follows the mean-curvature kernel up to `√L`, bends along a
//! quadratic in `t²` to `√(L + 1)` and is constant afterwards, which restores
//! the growth conditions. A truncated solution whose slope stays below `√L`
//! also solves the untruncated equation.

use std::sync::Arc;

use serde::Serialize;

use crate::cauchy::{reduced_slope, solve_cauchy, HeteroclinicProfile, SolverConfig};
use crate::error::{Error, Result};
use crate::kernels::{KernelSpec, PhiKernel, ScalarFn};
use crate::ode::rk4_step;
use crate::potentials::Potential;
use crate::scalar::{lit, to_f64, Real};

/// `φ(t) = 1/√(1 + t²)`.
pub fn mc_kernel_untruncated<T: Real>(t: T) -> T {
    (T::one() + t * t).sqrt().recip()
}

fn mc_kernel_prime<T: Real>(t: T) -> T {
    let s = T::one() + t * t;
    -t / (s * s.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncationParams<T> {
    pub big_l: T,
    pub x_l: T,
    pub y_l: T,
    pub l_l: T,
    pub m_l: T,
}

impl<T: Real> TruncationParams<T> {
    pub fn new(big_l: T) -> Result<Self> {
        if !(big_l > T::zero() && big_l.is_finite()) {
            return Err(Error::Construction(format!("truncation level must be positive, got {big_l}")));
        }
        let one = T::one();
        let four = lit::<T>(4.0);
        let u = one + big_l;
        let x_l = u.sqrt() / (four * u * u);
        let y_l = (four * big_l + lit(3.0)) * x_l;
        let l_l = if big_l <= one {
            (lit::<T>(6.0) * big_l + lit(6.0) - big_l * big_l) / (four * u)
        } else {
            (lit::<T>(7.0) + four * big_l) / (four * u)
        };
        Ok(TruncationParams { big_l, x_l, y_l, l_l, m_l: lit(2.0) })
    }

    /// The knots `√L` and `√(L + 1)`.
    pub fn knots(&self) -> (T, T) {
        (self.big_l.sqrt(), (self.big_l + T::one()).sqrt())
    }

    pub fn phi_l(&self, t: T) -> T {
        let t2 = t * t;
        if t2 <= self.big_l {
            mc_kernel_untruncated(t)
        } else if t2 <= self.big_l + T::one() {
            let d = t2 - self.big_l - T::one();
            self.x_l * d * d + self.y_l
        } else {
            self.y_l
        }
    }

    pub fn phi_l_prime(&self, t: T) -> T {
        let t2 = t * t;
        if t2 <= self.big_l {
            mc_kernel_prime(t)
        } else if t2 <= self.big_l + T::one() {
            lit::<T>(4.0) * self.x_l * (t2 - self.big_l - T::one()) * t
        } else {
            T::zero()
        }
    }

    /// `Φ_L(t) = ∫₀^t sφ_L(s) ds` in closed form.
    pub fn big_phi_l(&self, t: T) -> T {
        let (one, two, six) = (T::one(), lit::<T>(2.0), lit::<T>(6.0));
        let t2 = t * t;
        let l = self.big_l;
        let at_l = l / ((one + l).sqrt() + one);
        if t2 <= l {
            t2 / ((one + t2).sqrt() + one)
        } else if t2 <= l + one {
            let d = t2 - l - one;
            at_l + self.x_l * (d * d * d + one) / six + self.y_l * (t2 - l) / two
        } else {
            at_l + self.x_l / six + self.y_l / two + self.y_l * (t2 - l - one) / two
        }
    }

    /// `G_L(t) = t²φ_L(t) − Φ_L(t)`, cancellation-free below `√L`.
    pub fn big_g_l(&self, t: T) -> T {
        let t2 = t * t;
        if t2 <= self.big_l {
            let r = (T::one() + t2).sqrt();
            t2 / (r * (r + T::one()))
        } else {
            t2 * self.phi_l(t) - self.big_phi_l(t)
        }
    }

    /// `κ = √(y_L(l_L − 1))`.
    pub fn kappa(&self) -> T {
        (self.y_l * (self.l_l - T::one())).sqrt()
    }

    pub fn kernel(&self) -> Result<PhiKernel<T>> {
        let (a, b, c, d) = (*self, *self, *self, *self);
        let (k1, k2) = self.knots();
        let g: ScalarFn<T> = Arc::new(move |t| d.big_g_l(t));
        Ok(PhiKernel::new(
            KernelSpec::new("mc-truncated", &[("L", to_f64(self.big_l))]),
            self.l_l,
            self.m_l,
            move |t| a.phi_l(t),
            move |t| b.phi_l_prime(t),
        )?
        .with_closed_forms(move |t| c.big_phi_l(t), Some(g))
        .with_knots(vec![k1, k2]))
    }
}

/// Evidence that the truncated solution never used the modified part of `φ_L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeCertificate {
    pub max_slope: f64,
    pub threshold: f64,
    pub passed: bool,
    /// `sup |−(φ(|q'|)q')' + V'(q)|` with the untruncated kernel, interior samples.
    pub untruncated_residual: Option<f64>,
}

/// Step of the centred difference used for the untruncated residual.
pub const RESIDUAL_STEP: f64 = 1e-4;

/// Solves the truncated problem at level `L` and certifies `‖q'‖∞ < √L`.
pub fn solve_mc<T: Real>(
    pot: &Potential<T>,
    big_l: T,
    cfg: &SolverConfig,
) -> Result<(HeteroclinicProfile<T>, SlopeCertificate)> {
    let kernel = TruncationParams::new(big_l)?.kernel()?;
    let profile = solve_cauchy(&kernel, pot, pot.midpoint(), cfg)?;
    let max_slope = profile.max_slope();
    let threshold = big_l.sqrt();
    let passed = max_slope < threshold;
    let untruncated_residual = if passed { Some(to_f64(untruncated_residual(&kernel, pot, &profile)?)) } else { None };
    let cert = SlopeCertificate { max_slope: to_f64(max_slope), threshold: to_f64(threshold), passed, untruncated_residual };
    Ok((profile, cert))
}

/// Euler–Lagrange residual of the untruncated equation at interior samples.
///
/// Around each sample the reduced equation is stepped by `±h` with RK4 and
/// the flux `φ(q')q'` is differenced across the two points.
pub fn untruncated_residual<T: Real>(
    truncated: &PhiKernel<T>,
    pot: &Potential<T>,
    profile: &HeteroclinicProfile<T>,
) -> Result<T> {
    let h = lit::<T>(RESIDUAL_STEP);
    let f = |q: T| reduced_slope(truncated, pot, q);
    let flux = |q: T| -> Result<T> {
        let dq = f(q)?;
        Ok(mc_kernel_untruncated(dq) * dq)
    };
    let n = profile.len();
    let mut sup = T::zero();
    for i in 2..n.saturating_sub(2) {
        let q = profile.q[i];
        let plus = rk4_step(f, q, h)?;
        let minus = rk4_step(f, q, -h)?;
        let r = -(flux(plus)? - flux(minus)?) / (h + h) + pot.v_prime(q);
        sup = sup.max(r.abs());
    }
    Ok(sup)
}

/// One attempt of the level schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelAttempt {
    pub big_l: f64,
    pub certificate: SlopeCertificate,
}

/// Doubles `L` from `start` until the slope certificate passes or `cap` is exceeded.
pub fn solve_mc_schedule<T: Real>(
    pot: &Potential<T>,
    start: T,
    cap: T,
    cfg: &SolverConfig,
) -> Result<(Option<HeteroclinicProfile<T>>, Vec<LevelAttempt>)> {
    let mut attempts = Vec::new();
    let mut big_l = start;
    while big_l <= cap {
        let (profile, certificate) = solve_mc(pot, big_l, cfg)?;
        attempts.push(LevelAttempt { big_l: to_f64(big_l), certificate });
        if certificate.passed {
            return Ok((Some(profile), attempts));
        }
        big_l = big_l * lit(2.0);
    }
    Ok((None, attempts))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McSandwichReport {
    /// `L = ‖q'‖∞²` at which `κ` is evaluated.
    pub big_l: f64,
    pub kappa: f64,
    /// `min (q − α tanh(α√2 t))` over `t ≥ 0`.
    pub lower_margin: f64,
    /// `min (α tanh(α√2 t/κ) − q)` over `t ≥ 0`.
    pub upper_margin: f64,
    pub passed: bool,
}

/// Pointwise slack allowed in [`mc_sandwich_check`], relative to `α`.
pub const MC_BOUND_SLACK: f64 = 1e-10;

/// Checks `α tanh(α√2 t) ≤ q(t) ≤ α tanh(α√2 t/κ)` for `t ≥ 0`.
pub fn mc_sandwich_check<T: Real>(profile: &HeteroclinicProfile<T>, alpha: T) -> Result<McSandwichReport> {
    let slope = profile.max_slope();
    let params = TruncationParams::new(slope * slope)?;
    let kappa = params.kappa();
    let rate = lit::<T>(2.0).sqrt() * alpha;
    let mut lower = T::infinity();
    let mut upper = T::infinity();
    for (&t, &q) in profile.t.iter().zip(&profile.q).filter(|(t, _)| **t >= T::zero()) {
        lower = lower.min(q - alpha * (rate * t).tanh());
        upper = upper.min(alpha * (rate * t / kappa).tanh() - q);
    }
    let slack = lit::<T>(MC_BOUND_SLACK) * alpha;
    Ok(McSandwichReport {
        big_l: to_f64(params.big_l),
        kappa: to_f64(kappa),
        lower_margin: to_f64(lower),
        upper_margin: to_f64(upper),
        passed: lower >= -slack && upper >= -slack && kappa <= T::one(),
    })
}
