//! Adaptive Dormand–Prince 5(4) for scalar autonomous equations `y' = f(y)`,
//! with the scheme's own fourth-order continuous extension.

use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Real};

#[derive(Debug, Clone, Copy)]
pub struct StepControl<T> {
    pub rel_tol: T,
    pub abs_tol: T,
    pub max_steps: usize,
}

/// Continuous extension over one accepted step `[t0, t0 + h]`.
#[derive(Debug, Clone, Copy)]
pub struct DenseStep<T> {
    pub t0: T,
    pub h: T,
    r: [T; 5],
}

impl<T: Real> DenseStep<T> {
    pub fn eval(&self, t: T) -> T {
        let th = (t - self.t0) / self.h;
        let th1 = T::one() - th;
        let [r1, r2, r3, r4, r5] = self.r;
        r1 + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)))
    }

    /// Derivative of the continuous extension.
    pub fn deriv(&self, t: T) -> T {
        let th = (t - self.t0) / self.h;
        let th1 = T::one() - th;
        let [_, r2, r3, r4, r5] = self.r;
        let p = r3 + th * (r4 + th1 * r5);
        let dp = r4 + (th1 - th) * r5;
        let q = r2 + th1 * p;
        let dq = th1 * dp - p;
        (q + th * dq) / self.h
    }

    pub fn t1(&self) -> T {
        self.t0 + self.h
    }
}

/// Accepted steps of one integration, starting at `t = 0`.
#[derive(Debug, Clone)]
pub struct Trajectory<T> {
    pub steps: Vec<DenseStep<T>>,
    /// `(t, y)` at every accepted step boundary, starting point included.
    pub nodes: Vec<(T, T)>,
}

impl<T: Real> Trajectory<T> {
    pub fn t_end(&self) -> T {
        self.nodes.last().map(|n| n.0).unwrap_or(T::zero())
    }

    pub fn y_end(&self) -> T {
        self.nodes.last().map(|n| n.1).unwrap_or(T::nan())
    }

    /// Dense value at `t ∈ [0, t_end]`.
    pub fn eval(&self, t: T) -> Option<T> {
        if t < T::zero() || t > self.t_end() {
            return None;
        }
        if self.steps.is_empty() {
            return Some(self.nodes[0].1);
        }
        Some(self.step_at(t).eval(t))
    }

    /// Derivative of the dense solution at `t ∈ [0, t_end]`.
    pub fn deriv(&self, t: T) -> Option<T> {
        if t < T::zero() || t > self.t_end() || self.steps.is_empty() {
            return None;
        }
        Some(self.step_at(t).deriv(t))
    }

    fn step_at(&self, t: T) -> &DenseStep<T> {
        let i = self.steps.partition_point(|s| s.t1() < t).min(self.steps.len() - 1);
        &self.steps[i]
    }
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Integrates `y' = f(y)` from `(0, y0)` until `t_max`, or until `stop(y)`
/// holds after an accepted step.
pub fn integrate<T, F, S>(f: F, y0: T, t_max: T, ctl: &StepControl<T>, stop: S) -> Result<Trajectory<T>>
where
    T: Real,
    F: Fn(T) -> Result<T>,
    S: Fn(T) -> bool,
{
    let c = |x: f64| lit::<T>(x);
    let mut t = T::zero();
    let mut y = y0;
    let mut k1 = f(y)?;
    let mut h = t_max.min(initial_step(y0, k1, ctl));
    let mut traj = Trajectory { steps: Vec::new(), nodes: vec![(t, y)] };
    let mut steps = 0usize;

    while t < t_max && !stop(y) {
        if steps >= ctl.max_steps {
            return Err(Error::StepBudget { max_steps: ctl.max_steps, t: to_f64(t) });
        }
        steps += 1;
        let last = t + h >= t_max;
        if last {
            h = t_max - t;
        }
        let k2 = f(y + h * c(A21) * k1);
        let stage = k2.and_then(|k2| {
            let k3 = f(y + h * (c(A31) * k1 + c(A32) * k2))?;
            let k4 = f(y + h * (c(A41) * k1 + c(A42) * k2 + c(A43) * k3))?;
            let k5 = f(y + h * (c(A51) * k1 + c(A52) * k2 + c(A53) * k3 + c(A54) * k4))?;
            let k6 = f(y + h * (c(A61) * k1 + c(A62) * k2 + c(A63) * k3 + c(A64) * k4 + c(A65) * k5))?;
            let y1 = y + h * (c(A71) * k1 + c(A73) * k3 + c(A74) * k4 + c(A75) * k5 + c(A76) * k6);
            let k7 = f(y1)?;
            Ok((k3, k4, k5, k6, k7, y1))
        });
        let (err, accepted) = match stage {
            Ok((k3, k4, k5, k6, k7, y1)) if y1.is_finite() => {
                let e = h * (c(E1) * k1 + c(E3) * k3 + c(E4) * k4 + c(E5) * k5 + c(E6) * k6 + c(E7) * k7);
                let scale = ctl.abs_tol + ctl.rel_tol * y.abs().max(y1.abs());
                let err = (e / scale).abs();
                (err, if err <= T::one() { Some((k3, k4, k5, k6, k7, y1)) } else { None })
            }
            // a trial stage outside the domain of f is treated as a rejected step
            _ => (T::infinity(), None),
        };
        match accepted {
            Some((k3, k4, k5, k6, k7, y1)) => {
                let r2 = y1 - y;
                let r3 = h * k1 - r2;
                let r4 = r2 - h * k7 - r3;
                let r5 = h * (c(D1) * k1 + c(D3) * k3 + c(D4) * k4 + c(D5) * k5 + c(D6) * k6 + c(D7) * k7);
                traj.steps.push(DenseStep { t0: t, h, r: [y, r2, r3, r4, r5] });
                t = if last { t_max } else { t + h };
                y = y1;
                k1 = k7;
                traj.nodes.push((t, y));
                h = h * step_factor(err, c(5.0));
            }
            None => {
                h = h * step_factor(err, T::one());
                let h_min = c(16.0) * T::epsilon() * t.abs().max(T::one());
                if h < h_min {
                    return Err(Error::Stiffness { t: to_f64(t), y: to_f64(y), h: to_f64(h) });
                }
            }
        }
    }
    Ok(traj)
}

fn step_factor<T: Real>(err: T, max_growth: T) -> T {
    let f = if err == T::zero() {
        max_growth
    } else if err.is_finite() {
        lit::<T>(0.9) * err.powf(lit(-0.2))
    } else {
        lit(0.2)
    };
    f.max(lit(0.2)).min(max_growth)
}

fn initial_step<T: Real>(y0: T, f0: T, ctl: &StepControl<T>) -> T {
    let scale = ctl.abs_tol + ctl.rel_tol * y0.abs();
    let d0 = y0.abs() / scale;
    let d1 = f0.abs() / scale;
    let tiny = lit::<T>(1e-5);
    if d0 < tiny || d1 < tiny {
        lit(1e-6)
    } else {
        (lit::<T>(0.01) * d0 / d1).min(lit(1e-2))
    }
}

/// One classical RK4 step of `y' = f(y)` with step `h`.
pub fn rk4_step<T: Real, F: Fn(T) -> Result<T>>(f: F, y: T, h: T) -> Result<T> {
    let two = lit::<T>(2.0);
    let k1 = f(y)?;
    let k2 = f(y + h / two * k1)?;
    let k3 = f(y + h / two * k2)?;
    let k4 = f(y + h * k3)?;
    Ok(y + h / lit(6.0) * (k1 + two * k2 + two * k3 + k4))
}
