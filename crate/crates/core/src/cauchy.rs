//! Heteroclinic profiles from the first-order reduction `q' = G⁻¹(V(q))`.
//!
//! Each half-line is integrated in the distance to the well it approaches:
//! `w = b − q` forward in time and `z = q − a` backward (as the reflected
//! problem `z' = −G⁻¹(V(a + z))`), so relative error control stays
//! meaningful deep in the tails.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::PhiKernel;
use crate::ode::{integrate, StepControl, Trajectory};
use crate::potentials::{Potential, PotentialShape};
use crate::scalar::{lit, to_f64, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    Cauchy,
    Variational,
}

/// Integration settings. `t_max` and `tail_epsilon` default to `40/gap`
/// and `1e−12·gap` for the wells at hand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub t_max: Option<f64>,
    pub tail_epsilon: Option<f64>,
    pub max_steps: usize,
    /// Spacing of the output grid.
    pub sample_step: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            rel_tol: 1e-12,
            abs_tol: 1e-20,
            t_max: None,
            tail_epsilon: None,
            max_steps: 1_000_000,
            sample_step: 1e-2,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Resolved<T> {
    pub ctl: StepControl<T>,
    pub t_max: T,
    pub tail: T,
    pub dt: T,
}

impl SolverConfig {
    pub(crate) fn resolve<T: Real>(&self, gap: T) -> Result<Resolved<T>> {
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if !positive(self.rel_tol) || !positive(self.abs_tol) || !positive(self.sample_step) || self.max_steps == 0 {
            return Err(Error::Config("tolerances, sample_step and max_steps must be positive".into()));
        }
        let gap_f = to_f64(gap);
        let eps = to_f64(T::epsilon());
        let t_max = self.t_max.unwrap_or(40.0 / gap_f);
        let tail = self.tail_epsilon.unwrap_or(1e-12f64.max(64.0 * eps) * gap_f);
        if !positive(t_max) {
            return Err(Error::Config(format!("t_max must be positive, got {t_max}")));
        }
        if !positive(tail) || tail >= 0.1 * gap_f {
            return Err(Error::Config(format!("tail_epsilon must lie in (0, 0.1·gap), got {tail}")));
        }
        Ok(Resolved {
            ctl: StepControl {
                rel_tol: lit(self.rel_tol.max(32.0 * eps)),
                abs_tol: lit(self.abs_tol),
                max_steps: self.max_steps,
            },
            t_max: lit(t_max),
            tail: lit(tail),
            dt: lit(self.sample_step),
        })
    }
}

/// A monotone profile sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeteroclinicProfile<T> {
    pub t: Vec<T>,
    pub q: Vec<T>,
    pub q_prime: Vec<T>,
    /// `G(q') − V(q)` at each sample.
    pub energy_residual: Vec<T>,
    pub well_low: T,
    pub well_high: T,
    pub route: Route,
    /// Value the profile takes at `t = 0`.
    pub anchor: T,
    /// Time shift applied when normalizing a variational profile.
    pub normalization_shift: T,
    /// Accepted integrator steps `(t, q)`; empty on the variational route.
    #[serde(default)]
    pub raw_steps: Vec<(T, T)>,
}

impl<T: Real> HeteroclinicProfile<T> {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn max_slope(&self) -> T {
        self.q_prime.iter().fold(T::zero(), |a, &b| a.max(b))
    }

    pub fn max_energy_residual(&self) -> T {
        self.energy_residual.iter().fold(T::zero(), |a, &b| a.max(b.abs()))
    }

    pub fn t_range(&self) -> (T, T) {
        (self.t[0], self.t[self.t.len() - 1])
    }

    /// Cubic Hermite interpolation using `q'`; `None` outside the sampled range.
    pub fn interpolate(&self, t: T) -> Option<T> {
        let n = self.t.len();
        if n == 0 || t < self.t[0] || t > self.t[n - 1] {
            return None;
        }
        let i = self.t.partition_point(|&x| x <= t).clamp(1, n - 1) - 1;
        let h = self.t[i + 1] - self.t[i];
        if h == T::zero() {
            return Some(self.q[i]);
        }
        let s = (t - self.t[i]) / h;
        let (two, three) = (lit::<T>(2.0), lit::<T>(3.0));
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = two * s3 - three * s2 + T::one();
        let h10 = s3 - two * s2 + s;
        let h01 = three * s2 - two * s3;
        let h11 = s3 - s2;
        Some(h00 * self.q[i] + h10 * h * self.q_prime[i] + h01 * self.q[i + 1] + h11 * h * self.q_prime[i + 1])
    }

    /// Structural checks: matching lengths, increasing `t` and `q`, `q` inside
    /// the wells, positive `q'`.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let n = self.t.len();
        if n < 2 || self.q.len() != n || self.q_prime.len() != n || self.energy_residual.len() != n {
            return Err(format!("inconsistent sample arrays (t has {n} entries)"));
        }
        if let Some(i) = (1..n).find(|&i| self.t[i] <= self.t[i - 1]) {
            return Err(format!("t not increasing at index {i}"));
        }
        if let Some(i) = (1..n).find(|&i| self.q[i] <= self.q[i - 1]) {
            return Err(format!("q not increasing at index {i}"));
        }
        if let Some(i) = (0..n).find(|&i| !(self.q[i] > self.well_low && self.q[i] < self.well_high)) {
            return Err(format!("q[{i}] = {} outside the open well interval", self.q[i]));
        }
        if let Some(i) = (0..n).find(|&i| !(self.q_prime[i] > T::zero())) {
            return Err(format!("q'[{i}] = {} not positive", self.q_prime[i]));
        }
        Ok(())
    }
}

/// `G⁻¹(V)` reached from the upper well: `f(w) = G⁻¹(V(b − w))`.
fn rate_below_high<T: Real>(k: &PhiKernel<T>, pot: &Potential<T>, w: T) -> Result<T> {
    if w <= T::zero() {
        return Ok(T::zero());
    }
    k.inverse_g(pot.v_below_high(w).max(T::zero()))
}

fn rate_above_low<T: Real>(k: &PhiKernel<T>, pot: &Potential<T>, z: T) -> Result<T> {
    if z <= T::zero() {
        return Ok(T::zero());
    }
    k.inverse_g(pot.v_above_low(z).max(T::zero()))
}

/// `G⁻¹(V(q))`, the slope of the profile at level `q`.
pub fn reduced_slope<T: Real>(k: &PhiKernel<T>, pot: &Potential<T>, q: T) -> Result<T> {
    if q >= pot.midpoint() {
        rate_below_high(k, pot, pot.well_high() - q)
    } else {
        rate_above_low(k, pot, q - pot.well_low())
    }
}

/// Integrates the reduced equation from `q(0) = anchor` in both directions.
pub fn solve_cauchy<T: Real>(
    k: &PhiKernel<T>,
    pot: &Potential<T>,
    anchor: T,
    cfg: &SolverConfig,
) -> Result<HeteroclinicProfile<T>> {
    let (low, high) = pot.wells();
    if anchor == low || anchor == high || (anchor > low && anchor < high && pot.v(anchor) <= T::zero()) {
        return Err(Error::StationaryStart { anchor: to_f64(anchor) });
    }
    if !(anchor > low && anchor < high) {
        return Err(Error::Config(format!("anchor {anchor} lies outside the wells ({low}, {high})")));
    }
    let r = cfg.resolve(pot.gap())?;
    let forward = integrate(|w| rate_below_high(k, pot, w).map(|v| -v), high - anchor, r.t_max, &r.ctl, |w| w < r.tail)?;
    let backward = integrate(|z| rate_above_low(k, pot, z).map(|v| -v), anchor - low, r.t_max, &r.ctl, |z| z < r.tail)?;

    let n_back = (to_f64(backward.t_end() / r.dt)).floor() as usize;
    let n_fwd = (to_f64(forward.t_end() / r.dt)).floor() as usize;
    let mut profile = HeteroclinicProfile {
        t: Vec::with_capacity(n_back + n_fwd + 1),
        q: Vec::with_capacity(n_back + n_fwd + 1),
        q_prime: Vec::with_capacity(n_back + n_fwd + 1),
        energy_residual: Vec::with_capacity(n_back + n_fwd + 1),
        well_low: low,
        well_high: high,
        route: Route::Cauchy,
        anchor,
        normalization_shift: T::zero(),
        raw_steps: Vec::new(),
    };
    let mut push = |t: T, q: T, dq: T, v: T| {
        profile.t.push(t);
        profile.q.push(q);
        profile.q_prime.push(dq);
        profile.energy_residual.push(k.energy_g(dq) - v);
    };
    for j in (1..=n_back).rev() {
        let s = r.dt * lit(j as f64);
        let z = sample(&backward, s);
        push(-s, low + z, rate_above_low(k, pot, z)?, pot.v_above_low(z));
    }
    for j in 0..=n_fwd {
        let s = r.dt * lit(j as f64);
        let w = sample(&forward, s);
        let q = if j == 0 { anchor } else { high - w };
        push(s, q, rate_below_high(k, pot, w)?, pot.v_below_high(w));
    }
    profile.raw_steps = backward
        .nodes
        .iter()
        .rev()
        .map(|&(s, z)| (-s, low + z))
        .chain(forward.nodes.iter().skip(1).map(|&(s, w)| (s, high - w)))
        .collect();
    Ok(profile)
}

fn sample<T: Real>(traj: &Trajectory<T>, s: T) -> T {
    traj.eval(s).unwrap_or_else(|| traj.y_end())
}

/// Exponential tail rates `b − q ≈ θ₁e^{−θ₂t}`, `q' ≈ β₁e^{−β₂t}` as `t → ∞`,
/// and `q − a ≈ θ₃e^{θ₄t}`, `q' ≈ β₃e^{β₄t}` as `t → −∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit<T> {
    pub theta: [T; 4],
    pub beta: [T; 4],
}

/// Least-squares fit of log-distances over the outer `tail_fraction` of the
/// samples on each side of `t = 0`.
pub fn fit_decay<T: Real>(profile: &HeteroclinicProfile<T>, tail_fraction: T) -> Result<DecayFit<T>> {
    if !(tail_fraction > T::zero() && tail_fraction < lit(0.5)) {
        return Err(Error::FitDomain(format!("tail_fraction must lie in (0, 0.5), got {tail_fraction}")));
    }
    let right: Vec<usize> = (0..profile.len()).filter(|&i| profile.t[i] > T::zero()).collect();
    let left: Vec<usize> = (0..profile.len()).filter(|&i| profile.t[i] < T::zero()).collect();
    let take = |n: usize| (to_f64(tail_fraction) * n as f64).ceil() as usize;
    let right = &right[right.len() - take(right.len()).min(right.len())..];
    let left = &left[..take(left.len()).min(left.len())];

    let fit = |idx: &[usize], y: &dyn Fn(usize) -> T, what: &str| -> Result<(T, T)> {
        if idx.len() < 3 {
            return Err(Error::FitDomain(format!("{what}: need at least 3 tail samples, got {}", idx.len())));
        }
        let mut pts = Vec::with_capacity(idx.len());
        for &i in idx {
            let v = y(i);
            if !(v > T::zero()) {
                return Err(Error::FitDomain(format!("{what}: non-positive value {v} at t = {}", profile.t[i])));
            }
            pts.push((profile.t[i], v.ln()));
        }
        Ok(linear_fit(&pts))
    };
    let (c1, s1) = fit(right, &|i| profile.well_high - profile.q[i], "upper distance")?;
    let (c2, s2) = fit(right, &|i| profile.q_prime[i], "upper slope")?;
    let (c3, s3) = fit(left, &|i| profile.q[i] - profile.well_low, "lower distance")?;
    let (c4, s4) = fit(left, &|i| profile.q_prime[i], "lower slope")?;
    let out = DecayFit { theta: [c1.exp(), -s1, c3.exp(), s3], beta: [c2.exp(), -s2, c4.exp(), s4] };
    if out.theta.iter().chain(out.beta.iter()).any(|x| !(*x > T::zero()) || !x.is_finite()) {
        return Err(Error::FitDomain(format!("fitted constants must be positive: {out:?}")));
    }
    Ok(out)
}

/// Returns `(intercept, slope)`.
fn linear_fit<T: Real>(pts: &[(T, T)]) -> (T, T) {
    let n = lit::<T>(pts.len() as f64);
    let mx = pts.iter().map(|p| p.0).sum::<T>() / n;
    let my = pts.iter().map(|p| p.1).sum::<T>() / n;
    let sxy = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<T>();
    let sxx = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum::<T>();
    let slope = sxy / sxx;
    (my - slope * mx, slope)
}

/// Closed-form solutions known for power kernels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClosedForm<T> {
    /// `α tanh(αt/(p − 1)^{1/p})` for `p`-power kernel and well.
    PTanh { p: T, alpha: T },
    /// `(a + b e^{κt})/(1 + e^{κt})`, `κ = (b − a)/(p − 1)^{1/p}`.
    AsymLogistic { p: T, a: T, b: T },
    /// `α tanh(√2 αt)` for the quadratic kernel and the quartic well.
    QuarticClassic { alpha: T },
}

impl<T: Real> ClosedForm<T> {
    /// `(midpoint, half gap, rate)` with `q(t) = mid + h·tanh(rate·t)`.
    fn parts(&self) -> (T, T, T) {
        let two = lit::<T>(2.0);
        match *self {
            ClosedForm::PTanh { p, alpha } => (T::zero(), alpha, alpha / (p - T::one()).powf(p.recip())),
            ClosedForm::AsymLogistic { p, a, b } => {
                let h = (b - a) / two;
                ((a + b) / two, h, h / (p - T::one()).powf(p.recip()))
            }
            ClosedForm::QuarticClassic { alpha } => (T::zero(), alpha, two.sqrt() * alpha),
        }
    }

    pub fn eval(&self, t: T) -> T {
        let (mid, h, rate) = self.parts();
        mid + h * (rate * t).tanh()
    }

    pub fn derivative(&self, t: T) -> T {
        let (_, h, rate) = self.parts();
        let c = (rate * t).cosh();
        h * rate / (c * c)
    }

    /// Time at which the closed form takes the value `y`.
    pub fn time_of(&self, y: T) -> T {
        let (mid, h, rate) = self.parts();
        ((y - mid) / h).atanh() / rate
    }
}

/// Builds a closed form by name: `p_tanh` (`p`, `alpha`), `asym_logistic`
/// (`p`, `a`, `b`) or `quartic_classic` (`alpha`).
pub fn closed_form_oracle<T: Real>(kind: &str, params: &[(&str, f64)]) -> Result<ClosedForm<T>> {
    let get = |name: &str| -> Result<T> {
        params
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, v)| lit(*v))
            .ok_or_else(|| Error::Config(format!("oracle '{kind}' needs parameter '{name}'")))
    };
    let oracle = match kind {
        "p_tanh" => ClosedForm::PTanh { p: get("p")?, alpha: get("alpha")? },
        "asym_logistic" => ClosedForm::AsymLogistic { p: get("p")?, a: get("a")?, b: get("b")? },
        "quartic_classic" => ClosedForm::QuarticClassic { alpha: get("alpha")? },
        other => return Err(Error::Config(format!("no closed form named '{other}'"))),
    };
    Ok(oracle)
}

fn power_exponent<T: Real>(k: &PhiKernel<T>) -> Option<T> {
    (k.spec().kind == "p-power").then(|| k.l())
}

fn same<T: Real>(a: T, b: T) -> bool {
    (a - b).abs() <= lit::<T>(1e-12) * a.abs().max(T::one())
}

/// The closed form matching this kernel and potential, centred at the midpoint.
pub fn oracle_for<T: Real>(k: &PhiKernel<T>, pot: &Potential<T>) -> Option<ClosedForm<T>> {
    let p = power_exponent(k)?;
    let (a, b) = pot.wells();
    match pot.shape() {
        PotentialShape::PhiWell { kernel } if kernel == k.spec() => Some(ClosedForm::PTanh { p, alpha: b }),
        PotentialShape::PowerWell { p: pw } if same(p, *pw) => {
            if a == -b {
                Some(ClosedForm::PTanh { p, alpha: b })
            } else {
                Some(ClosedForm::AsymLogistic { p, a, b })
            }
        }
        PotentialShape::Quartic if same(p, lit(2.0)) => Some(ClosedForm::QuarticClassic { alpha: b }),
        _ => None,
    }
}

/// Two-sided bound `mid + h·tanh(h t/d)`, with the divisor `d` chosen
/// from the growth exponents; valid for `t ≥ 0` and mirrored for `t < 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sandwich<T> {
    pub mid: T,
    pub half: T,
    /// Divisor for the lower bound on `t ≥ 0`.
    pub lower_div: T,
    pub upper_div: T,
}

impl<T: Real> Sandwich<T> {
    /// Bounds from the growth exponents `l ≤ m` of the kernel.
    pub fn from_exponents(mid: T, half: T, l: T, m: T) -> Self {
        let one = T::one();
        let (lower_div, upper_div) = if l - one > one {
            (m - one, one)
        } else if m - one < one {
            (one, l - one)
        } else {
            (m - one, l - one)
        };
        Sandwich { mid, half, lower_div, upper_div }
    }

    pub fn bounds(&self, t: T) -> (T, T) {
        let f = |d: T| self.mid + self.half * (self.half * t / d).tanh();
        if t >= T::zero() {
            (f(self.lower_div), f(self.upper_div))
        } else {
            (f(self.upper_div), f(self.lower_div))
        }
    }
}

/// The growth-exponent sandwich, when the potential is built from the same `Φ`.
pub fn sandwich_for<T: Real>(k: &PhiKernel<T>, pot: &Potential<T>) -> Option<Sandwich<T>> {
    let applies = match pot.shape() {
        PotentialShape::PhiWell { kernel } => kernel == k.spec(),
        PotentialShape::PowerWell { p } => power_exponent(k).is_some_and(|q| same(q, *p)),
        _ => false,
    };
    applies.then(|| Sandwich::from_exponents(pot.midpoint(), pot.gap() / lit(2.0), k.l(), k.m()))
}
