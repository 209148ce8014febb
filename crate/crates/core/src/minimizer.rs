//! Direct minimization of the discretized action
//! `F(u) = ∫ (Φ(|u'|) + V(u)) dt` on `[−T, T]` with clamped endpoints.

use serde::{Deserialize, Serialize};

use crate::cauchy::{HeteroclinicProfile, Route};
use crate::error::{Error, Result};
use crate::kernels::PhiKernel;
use crate::potentials::Potential;
use crate::scalar::{lit, to_f64, Real};

/// Uniform grid of `N` free nodes on `(−T, T)`, `h = 2T/(N + 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscreteAction<T> {
    pub half_width: T,
    pub nodes: usize,
    pub h: T,
    /// Values held fixed at `−T` and `T`.
    pub boundary: (T, T),
}

impl<T: Real> DiscreteAction<T> {
    pub fn new(half_width: T, nodes: usize, boundary: (T, T)) -> Result<Self> {
        if !(half_width > T::zero() && half_width.is_finite()) || nodes == 0 {
            return Err(Error::Config(format!("need T > 0 and N >= 1, got T = {half_width}, N = {nodes}")));
        }
        let h = (half_width + half_width) / lit((nodes + 1) as f64);
        Ok(DiscreteAction { half_width, nodes, h, boundary })
    }

    /// Endpoints clamped at the wells.
    pub fn for_potential(pot: &Potential<T>, half_width: T, nodes: usize) -> Result<Self> {
        Self::new(half_width, nodes, pot.wells())
    }

    /// Default half-width `24/gap` (12 for wells at `±1`).
    pub fn default_half_width(pot: &Potential<T>) -> T {
        lit::<T>(24.0) / pot.gap()
    }

    /// Times of the free nodes.
    pub fn times(&self) -> Vec<T> {
        (1..=self.nodes).map(|i| -self.half_width + self.h * lit(i as f64)).collect()
    }

    fn node(&self, u: &[T], i: usize) -> T {
        if i == 0 {
            self.boundary.0
        } else if i > self.nodes {
            self.boundary.1
        } else {
            u[i - 1]
        }
    }
}

/// The clamped ramp `clamp(mid + t, a, b)` at the nodes.
pub fn initial_ramp<T: Real>(d: &DiscreteAction<T>, pot: &Potential<T>) -> Vec<T> {
    let (a, b) = pot.wells();
    let mid = pot.midpoint();
    d.times().into_iter().map(|t| (mid + t).max(a).min(b)).collect()
}

/// `Σ h·[Φ(|Δu/h|) + (V(u_i) + V(u_{i+1}))/2]` over all `N + 1` cells.
pub fn action_value<T: Real>(d: &DiscreteAction<T>, k: &PhiKernel<T>, pot: &Potential<T>, u: &[T]) -> T {
    cell_terms(d, k, pot, u).sum()
}

fn cell_terms<'a, T: Real>(
    d: &'a DiscreteAction<T>,
    k: &'a PhiKernel<T>,
    pot: &'a Potential<T>,
    u: &'a [T],
) -> impl Iterator<Item = T> + 'a {
    let half = lit::<T>(0.5);
    (0..=d.nodes).map(move |i| {
        let (l, r) = (d.node(u, i), d.node(u, i + 1));
        d.h * (k.phi_integral((r - l) / d.h) + half * (pot.v(l) + pot.v(r)))
    })
}

/// `∂F/∂u_j = flux(d_{j−1}) − flux(d_j) + h V'(u_j)`.
pub fn gradient<T: Real>(d: &DiscreteAction<T>, k: &PhiKernel<T>, pot: &Potential<T>, u: &[T]) -> Vec<T> {
    let flux: Vec<T> = (0..=d.nodes).map(|i| k.flux((d.node(u, i + 1) - d.node(u, i)) / d.h)).collect();
    (0..d.nodes).map(|j| flux[j] - flux[j + 1] + d.h * pot.v_prime(u[j])).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Descent {
    /// Armijo steepest descent.
    Steepest,
    /// Polak–Ribière+ conjugate gradients preconditioned by a tridiagonal
    /// approximation of the Hessian.
    PreconditionedCg,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MinimizeOptions {
    /// Stop once `max |∂F/∂u_j| ≤ gtol`.
    pub gtol: f64,
    pub max_iter: usize,
    pub method: Descent,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions { gtol: 1e-10, max_iter: 20_000, method: Descent::PreconditionedCg, armijo: 1e-4 }
    }
}

#[derive(Debug, Clone)]
pub struct Minimized<T> {
    pub u: Vec<T>,
    pub iterations: usize,
    pub grad_norm: T,
    pub action: T,
    pub converged: bool,
    /// Action after each accepted iteration, starting value first.
    pub history: Vec<T>,
}

fn sup_norm<T: Real>(g: &[T]) -> T {
    g.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| *x * *y).sum()
}

/// Solves `M x = g` for the tridiagonal Hessian model `M`.
fn precondition<T: Real>(d: &DiscreteAction<T>, k: &PhiKernel<T>, pot: &Potential<T>, u: &[T], g: &[T]) -> Vec<T> {
    let n = d.nodes;
    let floor = lit::<T>(1e-8) * pot.gap();
    let weight: Vec<T> = (0..=n)
        .map(|i| {
            let s = ((d.node(u, i + 1) - d.node(u, i)) / d.h).abs().max(floor);
            let w = k.flux_derivative(s) / d.h;
            if w.is_finite() { w } else { T::zero() }
        })
        .collect();
    let eps = lit::<T>(1e-4) * pot.gap();
    let mut diag: Vec<T> = (0..n)
        .map(|j| {
            let curv = (pot.v_prime(u[j] + eps) - pot.v_prime(u[j] - eps)) / (eps + eps);
            weight[j] + weight[j + 1] + d.h * curv.max(T::zero())
        })
        .collect();
    let top = diag.iter().fold(T::zero(), |m, &x| m.max(x));
    let tiny = top * lit(1e-10) + T::min_positive_value();
    for x in diag.iter_mut() {
        *x = x.max(tiny);
    }
    // Thomas algorithm, off-diagonals −weight[j + 1]
    let mut c = vec![T::zero(); n];
    let mut x = vec![T::zero(); n];
    let mut denom = diag[0];
    c[0] = -weight[1] / denom;
    x[0] = g[0] / denom;
    for j in 1..n {
        let off = -weight[j];
        denom = diag[j] - off * c[j - 1];
        c[j] = if j + 1 < n { -weight[j + 1] / denom } else { T::zero() };
        x[j] = (g[j] - off * x[j - 1]) / denom;
    }
    for j in (0..n.saturating_sub(1)).rev() {
        x[j] = x[j] - c[j] * x[j + 1];
    }
    x
}

/// Descent on the discrete action from `u0` with backtracking line search.
pub fn minimize_action<T: Real>(
    d: &DiscreteAction<T>,
    k: &PhiKernel<T>,
    pot: &Potential<T>,
    u0: &[T],
    opts: &MinimizeOptions,
) -> Result<Minimized<T>> {
    if u0.len() != d.nodes || u0.iter().any(|x| !x.is_finite()) {
        return Err(Error::Config(format!("initial guess must have {} finite entries", d.nodes)));
    }
    let gtol = lit::<T>(opts.gtol);
    let c1 = lit::<T>(opts.armijo);
    let mut u = u0.to_vec();
    let mut f = action_value(d, k, pot, &u);
    let mut g = gradient(d, k, pot, &u);
    let mut z = direction_seed(d, k, pot, &u, &g, opts.method);
    let mut dir: Vec<T> = z.iter().map(|x| -*x).collect();
    let mut history = vec![f];
    let mut iterations = 0;

    while sup_norm(&g) > gtol && iterations < opts.max_iter {
        let mut slope = dot(&g, &dir);
        if !(slope < T::zero()) {
            dir = z.iter().map(|x| -*x).collect();
            slope = dot(&g, &dir);
        }
        let step = line_search(d, k, pot, &u, f, &g, &dir, slope, c1);
        let (u_new, f_new, g_new) = match step {
            Some(s) => s,
            None => {
                return Err(Error::DescentStall {
                    iteration: iterations,
                    action: to_f64(f),
                    grad_norm: to_f64(sup_norm(&g)),
                })
            }
        };
        let z_new = direction_seed(d, k, pot, &u_new, &g_new, opts.method);
        let beta = match opts.method {
            Descent::Steepest => T::zero(),
            Descent::PreconditionedCg => {
                let num = dot(&g_new, &z_new) - dot(&g_new, &z);
                (num / dot(&g, &z)).max(T::zero())
            }
        };
        dir = z_new.iter().zip(&dir).map(|(zn, dv)| -*zn + beta * *dv).collect();
        u = u_new;
        f = f_new;
        g = g_new;
        z = z_new;
        iterations += 1;
        history.push(f);
    }
    let grad_norm = sup_norm(&g);
    Ok(Minimized { converged: grad_norm <= gtol, u, iterations, grad_norm, action: f, history })
}

fn direction_seed<T: Real>(
    d: &DiscreteAction<T>,
    k: &PhiKernel<T>,
    pot: &Potential<T>,
    u: &[T],
    g: &[T],
    method: Descent,
) -> Vec<T> {
    match method {
        Descent::Steepest => g.to_vec(),
        Descent::PreconditionedCg => precondition(d, k, pot, u, g),
    }
}

type Step<T> = (Vec<T>, T, Vec<T>);

/// Armijo backtracking. Once the action change drops to rounding level a
/// step is accepted if it shrinks the gradient instead.
#[allow(clippy::too_many_arguments)]
fn line_search<T: Real>(
    d: &DiscreteAction<T>,
    k: &PhiKernel<T>,
    pot: &Potential<T>,
    u: &[T],
    f: T,
    g: &[T],
    dir: &[T],
    slope: T,
    c1: T,
) -> Option<Step<T>> {
    let g_norm = sup_norm(g);
    let noise = lit::<T>(64.0) * T::epsilon() * f.abs().max(T::min_positive_value());
    let mut alpha = T::one();
    for _ in 0..60 {
        let trial: Vec<T> = u.iter().zip(dir).map(|(x, p)| *x + alpha * *p).collect();
        let f_new = action_value(d, k, pot, &trial);
        if f_new.is_finite() {
            if f_new <= f + c1 * alpha * slope {
                let g_new = gradient(d, k, pot, &trial);
                return Some((trial, f_new, g_new));
            }
            if (f_new - f).abs() <= noise {
                let g_new = gradient(d, k, pot, &trial);
                if sup_norm(&g_new) < g_norm {
                    return Some((trial, f_new.min(f), g_new));
                }
            }
        }
        alpha = alpha * lit(0.5);
    }
    None
}

/// Time at which the linear interpolant of `(times, u)` first reaches `anchor`.
pub fn crossing_time<T: Real>(times: &[T], u: &[T], anchor: T) -> Result<T> {
    for i in 0..u.len().saturating_sub(1) {
        let (a, b) = (u[i], u[i + 1]);
        if (a <= anchor && anchor <= b) || (b <= anchor && anchor <= a) {
            if a == b {
                return Ok(times[i]);
            }
            return Ok(times[i] + (anchor - a) / (b - a) * (times[i + 1] - times[i]));
        }
    }
    Err(Error::Normalization { anchor: to_f64(anchor) })
}

/// Shifts `times` so the anchor crossing sits at `t = 0`; returns the new times and the shift.
pub fn normalize_translation<T: Real>(times: &[T], u: &[T], anchor: T) -> Result<(Vec<T>, T)> {
    let shift = -crossing_time(times, u, anchor)?;
    Ok((times.iter().map(|t| *t + shift).collect(), shift))
}

/// Nodes within this fraction of the gap from a well are dropped from
/// variational profiles; there the minimizer's rounding noise exceeds the
/// increments between nodes.
pub const VARIATIONAL_TAIL_CUT: f64 = 1e-8;

/// Normalized profile from minimizer nodes, with `q'` by central differences.
pub fn variational_profile<T: Real>(
    d: &DiscreteAction<T>,
    k: &PhiKernel<T>,
    pot: &Potential<T>,
    u: &[T],
    anchor: T,
) -> Result<HeteroclinicProfile<T>> {
    let (times, shift) = normalize_translation(&d.times(), u, anchor)?;
    let (low, high) = pot.wells();
    let cut = lit::<T>(VARIATIONAL_TAIL_CUT) * pot.gap();
    let two_h = d.h + d.h;
    let mut profile = HeteroclinicProfile {
        t: Vec::new(),
        q: Vec::new(),
        q_prime: Vec::new(),
        energy_residual: Vec::new(),
        well_low: low,
        well_high: high,
        route: Route::Variational,
        anchor,
        normalization_shift: shift,
        raw_steps: Vec::new(),
    };
    for j in 0..d.nodes {
        let q = u[j];
        if !(q - low > cut && high - q > cut) {
            continue;
        }
        let dq = (d.node(u, j + 2) - d.node(u, j)) / two_h;
        profile.t.push(times[j]);
        profile.q.push(q);
        profile.q_prime.push(dq);
        profile.energy_residual.push(k.energy_g(dq.abs()) - pot.v(q));
    }
    Ok(profile)
}

/// Ramp start, minimization and normalization at the midpoint.
pub fn solve_variational<T: Real>(
    k: &PhiKernel<T>,
    pot: &Potential<T>,
    half_width: T,
    nodes: usize,
    opts: &MinimizeOptions,
) -> Result<(HeteroclinicProfile<T>, Minimized<T>)> {
    let d = DiscreteAction::for_potential(pot, half_width, nodes)?;
    let u0 = initial_ramp(&d, pot);
    let out = minimize_action(&d, k, pot, &u0, opts)?;
    let profile = variational_profile(&d, k, pot, &out.u, pot.midpoint())?;
    Ok((profile, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::p_power;
    use crate::potentials::{asymmetric_well, p_double_well};

    fn setup(n: usize) -> (DiscreteAction<f64>, PhiKernel<f64>, Potential<f64>) {
        let pot = p_double_well(2.0, 1.0).unwrap();
        (DiscreteAction::for_potential(&pot, 12.0, n).unwrap(), p_power(2.0).unwrap(), pot)
    }

    #[test]
    fn ramp_values() {
        let pot = p_double_well(2.0, 1.0).unwrap();
        let d = DiscreteAction::for_potential(&pot, 12.0, 23).unwrap();
        assert_eq!(d.h, 1.0);
        let r = initial_ramp(&d, &pot);
        assert_eq!(r[11], 0.0);
        assert_eq!(r[16], 1.0);
        let asym = asymmetric_well(2.0, 0.0, 1.0).unwrap();
        let r = initial_ramp(&d, &asym);
        assert_eq!(r[6], 0.0);
    }

    #[test]
    fn action_at_well_is_zero() {
        let pot = p_double_well(2.0, 1.0).unwrap();
        let d = DiscreteAction::new(5.0, 50, (1.0, 1.0)).unwrap();
        let k = p_power(2.0).unwrap();
        assert_eq!(action_value(&d, &k, &pot, &vec![1.0; 50]), 0.0);
    }

    #[test]
    fn classic_kink_action() {
        let (d, k, pot) = setup(4001);
        let oracle: Vec<f64> = d.times().iter().map(|t| t.tanh()).collect();
        let a = action_value(&d, &k, &pot, &oracle);
        assert!((a - 4.0 / 3.0).abs() < 1e-4, "{a}");
        assert!(action_value(&d, &k, &pot, &initial_ramp(&d, &pot)) > a);
    }

    #[test]
    fn gradient_matches_differences() {
        let (d, k, pot) = setup(41);
        let u: Vec<f64> = initial_ramp(&d, &pot).iter().enumerate().map(|(i, x)| x + 0.01 * (i as f64).sin()).collect();
        let g = gradient(&d, &k, &pot, &u);
        for j in [0, 7, 20, 33, 40] {
            let mut up = u.clone();
            let mut dn = u.clone();
            up[j] += 1e-6;
            dn[j] -= 1e-6;
            let fd = (action_value(&d, &k, &pot, &up) - action_value(&d, &k, &pot, &dn)) / 2e-6;
            assert!((fd - g[j]).abs() <= 1e-6 * g[j].abs().max(1e-3), "j = {j}: {fd} vs {}", g[j]);
        }
    }

    #[test]
    fn converges_to_tanh() {
        let (d, k, pot) = setup(4001);
        let out = minimize_action(&d, &k, &pot, &initial_ramp(&d, &pot), &MinimizeOptions::default()).unwrap();
        assert!(out.converged, "grad {}", out.grad_norm);
        assert!(out.history.windows(2).all(|w| w[1] <= w[0]));
        let prof = variational_profile(&d, &k, &pot, &out.u, 0.0).unwrap();
        prof.check_invariants().unwrap();
        assert!(prof.normalization_shift.abs() < d.h);
        let err = prof.t.iter().zip(&prof.q).fold(0.0f64, |m, (t, q)| m.max((q - t.tanh()).abs()));
        assert!(err < 5e-3, "{err}");
    }

    #[test]
    fn steepest_descent_decreases() {
        let (d, k, pot) = setup(101);
        let rev: Vec<f64> = initial_ramp(&d, &pot).into_iter().rev().collect();
        let opts = MinimizeOptions { method: Descent::Steepest, max_iter: 50, ..Default::default() };
        let out = minimize_action(&d, &k, &pot, &rev, &opts).unwrap();
        assert!(out.history.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn normalization() {
        let times: Vec<f64> = (0..201).map(|i| -10.0 + 0.1 * i as f64).collect();
        let u: Vec<f64> = times.iter().map(|t| (t - 1.0).tanh()).collect();
        let (_, shift) = normalize_translation(&times, &u, 0.0).unwrap();
        assert!((shift + 1.0).abs() < 0.1);
        assert!(matches!(normalize_translation(&times, &u, 2.0), Err(Error::Normalization { .. })));
    }
}
