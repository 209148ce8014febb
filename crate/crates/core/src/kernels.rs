//! Operator kernels `φ`, the N-function `Φ(t) = ∫₀^t sφ(s) ds`, the energy
//! function `G(t) = ∫₀^t s(φ'(s)s + φ(s)) ds` and its inverse.
//!
//! Integrating by parts gives `G(t) = t²φ(t) − Φ(t)`, which is what the fast
//! evaluation path uses; [`big_phi`] and [`big_g`] integrate the defining
//! integrands directly and serve as the independent reference.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mc_truncation::TruncationParams;
use crate::quadrature::integrate_piecewise;
use crate::roots::{invert_increasing, InverseOptions};
use crate::scalar::{lit, logspace, to_f64, Real};

pub type ScalarFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// Number of log-spaced points used to certify `(l, m)`.
pub const CERT_GRID_POINTS: usize = 2048;
pub const CERT_GRID_LO: f64 = 1e-8;
pub const CERT_GRID_HI: f64 = 1e8;
pub const CERT_SLACK: f64 = 1e-9;

/// Kernel selection as it appears in JSON configs:
/// `{"kind": "p-power", "params": {"p": 2.0}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

/// Parameter names and defaults of a kernel kind.
pub fn kernel_parameters(kind: &str) -> Option<&'static [(&'static str, f64)]> {
    Some(match kind {
        "p-power" => &[("p", 2.0)],
        "mixed" => &[("p", 2.0), ("q", 4.0)],
        "gamma-power" => &[("gamma", 2.0)],
        "plog" => &[("p", 2.0)],
        "sinh-integral" => &[("gamma", 0.5), ("beta", 1.0)],
        "mc-truncated" => &[("L", 1.0)],
        _ => return None,
    })
}

impl KernelSpec {
    pub fn accepts(&self, param: &str) -> bool {
        kernel_parameters(&self.kind).is_some_and(|ps| ps.iter().any(|(n, _)| *n == param))
    }

    pub fn new(kind: &str, params: &[(&str, f64)]) -> Self {
        KernelSpec {
            kind: kind.to_string(),
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    pub fn build<T: Real>(&self) -> Result<PhiKernel<T>> {
        let allowed = kernel_parameters(&self.kind)
            .ok_or_else(|| Error::Config(format!("unknown kernel kind '{}'", self.kind)))?;
        if let Some(bad) = self.params.keys().find(|k| !allowed.iter().any(|(n, _)| n == k)) {
            return Err(Error::Config(format!("kernel '{}' has no parameter '{bad}'", self.kind)));
        }
        let get = |name: &str| -> T {
            let default = allowed.iter().find(|(n, _)| *n == name).map(|(_, v)| *v).unwrap();
            lit(self.params.get(name).copied().unwrap_or(default))
        };
        match self.kind.as_str() {
            "p-power" => p_power(get("p")),
            "mixed" => mixed(get("p"), get("q")),
            "gamma-power" => gamma_power(get("gamma")),
            "plog" => plog(get("p")),
            "sinh-integral" => sinh_integral(get("gamma"), get("beta")),
            _ => mc_truncated(get("L")),
        }
    }
}

/// Parses either a JSON object or the shorthand `kind:name=value,...`.
pub(crate) fn parse_spec_text(s: &str) -> Result<(String, BTreeMap<String, f64>)> {
    let s = s.trim();
    let (kind, rest) = match s.split_once(':') {
        Some((k, r)) => (k.trim(), r.trim()),
        None => (s, ""),
    };
    if kind.is_empty() {
        return Err(Error::Config("empty kind".into()));
    }
    let mut params = BTreeMap::new();
    for item in rest.split(',').map(str::trim).filter(|x| !x.is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected name=value, got '{item}'")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad number in '{item}'")))?;
        params.insert(k.trim().to_string(), v);
    }
    Ok((kind.to_string(), params))
}

impl FromStr for KernelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim_start().starts_with('{') {
            return serde_json::from_str(s).map_err(|e| Error::Config(format!("kernel JSON: {e}")));
        }
        let (kind, params) = parse_spec_text(s)?;
        Ok(KernelSpec { kind, params })
    }
}

/// The kernel `φ` together with its derivative and declared growth exponents
/// `1 < l ≤ m` bounding `(φ(t)t)'/φ(t)` from below by `l − 1` and above by `m − 1`.
#[derive(Clone)]
pub struct PhiKernel<T> {
    name: String,
    spec: KernelSpec,
    l: T,
    m: T,
    phi: ScalarFn<T>,
    phi_prime: ScalarFn<T>,
    big_phi_closed: Option<ScalarFn<T>>,
    big_g_closed: Option<ScalarFn<T>>,
    /// Points where `φ` is only finitely smooth; quadrature splits there.
    knots: Vec<T>,
}

impl<T: Real> fmt::Debug for PhiKernel<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PhiKernel")
            .field("name", &self.name)
            .field("params", &self.spec.params)
            .field("l", &self.l)
            .field("m", &self.m)
            .finish()
    }
}

impl<T: Real> PhiKernel<T> {
    pub fn new(
        spec: KernelSpec,
        l: T,
        m: T,
        phi: impl Fn(T) -> T + Send + Sync + 'static,
        phi_prime: impl Fn(T) -> T + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(l > T::one() && m >= l && m.is_finite()) {
            return Err(Error::Construction(format!("growth exponents need 1 < l <= m, got l = {l}, m = {m}")));
        }
        Ok(PhiKernel {
            name: spec.kind.clone(),
            spec,
            l,
            m,
            phi: Arc::new(phi),
            phi_prime: Arc::new(phi_prime),
            big_phi_closed: None,
            big_g_closed: None,
            knots: Vec::new(),
        })
    }

    /// Attaches closed forms for `Φ` and optionally `G` (both on `t ≥ 0`).
    pub fn with_closed_forms(
        mut self,
        big_phi: impl Fn(T) -> T + Send + Sync + 'static,
        big_g: Option<ScalarFn<T>>,
    ) -> Self {
        self.big_phi_closed = Some(Arc::new(big_phi));
        self.big_g_closed = big_g;
        self
    }

    pub fn with_knots(mut self, knots: Vec<T>) -> Self {
        self.knots = knots;
        self
    }

    pub fn knots(&self) -> &[T] {
        &self.knots
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn l(&self) -> T {
        self.l
    }

    pub fn m(&self) -> T {
        self.m
    }

    pub fn has_closed_form(&self) -> bool {
        self.big_phi_closed.is_some()
    }

    #[inline]
    pub fn phi(&self, t: T) -> T {
        (self.phi)(t)
    }

    #[inline]
    pub fn phi_prime(&self, t: T) -> T {
        (self.phi_prime)(t)
    }

    /// `φ(|d|)d`, extended by 0 at `d = 0`.
    #[inline]
    pub fn flux(&self, d: T) -> T {
        if d == T::zero() {
            return T::zero();
        }
        let a = d.abs();
        self.phi(a) * d
    }

    /// `(φ(t)t)' = φ'(t)t + φ(t)` for `t > 0`.
    #[inline]
    pub fn flux_derivative(&self, t: T) -> T {
        self.phi_prime(t) * t + self.phi(t)
    }

    /// `Φ(|t|)`, from the closed form when one is known and by quadrature otherwise.
    pub fn phi_integral(&self, t: T) -> T {
        let a = t.abs();
        if a == T::zero() {
            return T::zero();
        }
        match &self.big_phi_closed {
            Some(f) => f(a),
            None => self.quad_phi(a),
        }
    }

    fn quad_phi(&self, a: T) -> T {
        let tol = lit::<T>(1e-14).max(T::epsilon() * lit(16.0));
        integrate_piecewise(|s| if s == T::zero() { T::zero() } else { s * self.phi(s) }, T::zero(), a, &self.knots, tol)
            .unwrap_or_else(|_| T::nan())
    }

    /// `G(t)` for `t ≥ 0`.
    pub fn energy_g(&self, t: T) -> T {
        if t <= T::zero() {
            return T::zero();
        }
        match &self.big_g_closed {
            Some(g) => g(t),
            None => t * t * self.phi(t) - self.phi_integral(t),
        }
    }

    /// `G'(t) = t(φ(t)t)'`.
    pub fn energy_g_prime(&self, t: T) -> T {
        if t <= T::zero() {
            return T::zero();
        }
        t * self.flux_derivative(t)
    }

    /// `G⁻¹(v)` with the default relative tolerance.
    pub fn inverse_g(&self, v: T) -> Result<T> {
        big_g_inverse(self, v, lit(1e-12))
    }
}

fn check_nonneg<T: Real>(t: T, what: &'static str) -> Result<()> {
    if t >= T::zero() && t.is_finite() {
        Ok(())
    } else {
        Err(Error::EvaluationDomain { what, t: to_f64(t) })
    }
}

/// `Φ(t) = ∫₀^t sφ(s) ds` by adaptive quadrature to absolute tolerance `tol`.
pub fn big_phi<T: Real>(k: &PhiKernel<T>, t: T, tol: T) -> Result<T> {
    check_nonneg(t, "Phi argument")?;
    integrate_piecewise(|s| if s == T::zero() { T::zero() } else { s * k.phi(s) }, T::zero(), t, k.knots(), tol)
}

/// `G(t) = ∫₀^t s(φ'(s)s + φ(s)) ds` by adaptive quadrature.
pub fn big_g<T: Real>(k: &PhiKernel<T>, t: T, tol: T) -> Result<T> {
    check_nonneg(t, "G argument")?;
    integrate_piecewise(
        |s| if s == T::zero() { T::zero() } else { s * k.flux_derivative(s) },
        T::zero(),
        t,
        k.knots(),
        tol,
    )
}

/// `G⁻¹(v)`: bracket expansion, then Newton in log variables with bisection fallback.
pub fn big_g_inverse<T: Real>(k: &PhiKernel<T>, v: T, tol: T) -> Result<T> {
    if v < T::zero() || v.is_nan() {
        return Err(Error::EvaluationDomain { what: "G inverse argument", t: to_f64(v) });
    }
    invert_increasing(
        |t| k.energy_g(t),
        |t| k.energy_g_prime(t),
        v,
        &InverseOptions::with_rel_tol(tol),
        "G",
    )
}

/// Complementary N-function `Φ̃(s) = max_{t≥0} (st − Φ(t))`, attained where `φ(t)t = s`.
pub fn legendre_conjugate<T: Real>(k: &PhiKernel<T>, s: T, tol: T) -> Result<T> {
    check_nonneg(s, "conjugate argument")?;
    if s == T::zero() {
        return Ok(T::zero());
    }
    let t = invert_increasing(
        |t| k.flux(t),
        |t| k.flux_derivative(t),
        s,
        &InverseOptions::with_rel_tol(tol),
        "phi(t)t",
    )?;
    Ok(s * t - k.phi_integral(t))
}

/// `(1 + min, 1 + max)` of `(φ(t)t)'/φ(t)` over `grid`.
pub fn estimate_exponents<T: Real>(k: &PhiKernel<T>, grid: &[T]) -> Result<(T, T)> {
    if grid.is_empty() {
        return Err(Error::HypothesisViolation("empty exponent grid".into()));
    }
    let mut lo = T::infinity();
    let mut hi = T::neg_infinity();
    for &t in grid {
        let phi = k.phi(t);
        if !(phi > T::zero()) || !phi.is_finite() {
            return Err(Error::HypothesisViolation(format!("phi({t}) = {phi} is not positive and finite")));
        }
        let ratio = T::one() + k.phi_prime(t) * t / phi;
        if !ratio.is_finite() {
            return Err(Error::EvaluationDomain { what: "exponent ratio", t: to_f64(t) });
        }
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    Ok((T::one() + lo, T::one() + hi))
}

/// Sampled evidence for the kernel hypotheses on the default certification grid.
#[derive(Debug, Clone, Serialize)]
pub struct KernelCertificate {
    pub name: String,
    pub declared_l: f64,
    pub declared_m: f64,
    pub estimated_l: f64,
    pub estimated_m: f64,
    /// `φ > 0` and `(φ(t)t)' > 0` at every grid point.
    pub positivity: bool,
    /// Declared `[l, m]` contains the sampled interval up to the slack.
    pub exponents: bool,
}

impl KernelCertificate {
    pub fn passed(&self) -> bool {
        self.positivity && self.exponents
    }
}

pub fn certification_grid<T: Real>() -> Vec<T> {
    logspace(lit(CERT_GRID_LO), lit(CERT_GRID_HI), CERT_GRID_POINTS)
}

pub fn certify_kernel<T: Real>(k: &PhiKernel<T>) -> Result<KernelCertificate> {
    let grid = certification_grid::<T>();
    let positivity = grid.iter().all(|&t| k.phi(t) > T::zero() && k.flux_derivative(t) > T::zero());
    let (l_est, m_est) = estimate_exponents(k, &grid)?;
    let slack = lit::<T>(CERT_SLACK);
    Ok(KernelCertificate {
        name: k.name().to_string(),
        declared_l: to_f64(k.l()),
        declared_m: to_f64(k.m()),
        estimated_l: to_f64(l_est),
        estimated_m: to_f64(m_est),
        positivity,
        exponents: k.l() <= l_est + slack && m_est <= k.m() + slack,
    })
}

// ---------------------------------------------------------------------------
// catalog

fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Construction(msg()))
    }
}

/// `φ(t) = t^{p−2}`, `Φ(t) = t^p/p`; `l = m = p`.
pub fn p_power<T: Real>(p: T) -> Result<PhiKernel<T>> {
    require(p > T::one() && p.is_finite(), || format!("p-power needs p > 1, got {p}"))?;
    let two = lit::<T>(2.0);
    let g: ScalarFn<T> = Arc::new(move |t: T| (p - T::one()) * t.powf(p) / p);
    Ok(PhiKernel::new(
        KernelSpec::new("p-power", &[("p", to_f64(p))]),
        p,
        p,
        move |t: T| t.powf(p - two),
        move |t: T| (p - two) * t.powf(p - lit(3.0)),
    )?
    .with_closed_forms(move |t: T| t.powf(p) / p, Some(g)))
}

/// `Φ(t) = t^p/p + t^q/q` with `1 < p < q`; `(l, m) = (p, q)`.
pub fn mixed<T: Real>(p: T, q: T) -> Result<PhiKernel<T>> {
    require(p > T::one() && q > p && q.is_finite(), || format!("mixed needs 1 < p < q, got p = {p}, q = {q}"))?;
    let two = lit::<T>(2.0);
    let three = lit::<T>(3.0);
    let g: ScalarFn<T> =
        Arc::new(move |t: T| (p - T::one()) * t.powf(p) / p + (q - T::one()) * t.powf(q) / q);
    Ok(PhiKernel::new(
        KernelSpec::new("mixed", &[("p", to_f64(p)), ("q", to_f64(q))]),
        p,
        q,
        move |t: T| t.powf(p - two) + t.powf(q - two),
        move |t: T| (p - two) * t.powf(p - three) + (q - two) * t.powf(q - three),
    )?
    .with_closed_forms(move |t: T| t.powf(p) / p + t.powf(q) / q, Some(g)))
}

/// `Φ(t) = (1 + t²)^γ − 1`, `φ(t) = 2γ(1 + t²)^{γ−1}`; `(l, m) = (2, 2γ)`.
pub fn gamma_power<T: Real>(gamma: T) -> Result<PhiKernel<T>> {
    require(gamma > T::one() && gamma.is_finite(), || format!("gamma-power needs gamma > 1, got {gamma}"))?;
    let two = lit::<T>(2.0);
    Ok(PhiKernel::new(
        KernelSpec::new("gamma-power", &[("gamma", to_f64(gamma))]),
        two,
        two * gamma,
        move |t: T| two * gamma * (T::one() + t * t).powf(gamma - T::one()),
        move |t: T| lit::<T>(4.0) * gamma * (gamma - T::one()) * t * (T::one() + t * t).powf(gamma - two),
    )?
    .with_closed_forms(move |t: T| (gamma * (t * t).ln_1p()).exp_m1(), None))
}

/// `Φ(t) = t^p ln(1 + t)`, `φ = Φ'(t)/t`; `(l, m) = (p, p + 1)`.
pub fn plog<T: Real>(p: T) -> Result<PhiKernel<T>> {
    require(p > T::one() && p.is_finite(), || format!("plog needs p > 1, got {p}"))?;
    let one = T::one();
    let two = lit::<T>(2.0);
    let three = lit::<T>(3.0);
    let g: ScalarFn<T> = Arc::new(move |t: T| (p - one) * t.powf(p) * t.ln_1p() + t.powf(p + one) / (one + t));
    Ok(PhiKernel::new(
        KernelSpec::new("plog", &[("p", to_f64(p))]),
        p,
        p + one,
        move |t: T| p * t.powf(p - two) * t.ln_1p() + t.powf(p - one) / (one + t),
        move |t: T| {
            let u = one + t;
            p * (p - two) * t.powf(p - three) * t.ln_1p() + (two * p - one) * t.powf(p - two) / u
                - t.powf(p - one) / (u * u)
        },
    )?
    .with_closed_forms(move |t: T| t.powf(p) * t.ln_1p(), Some(g)))
}

/// `Φ(t) = ∫₀^t s^{1−γ} (sinh⁻¹ s)^β ds`, so `φ(t) = t^{−γ}(sinh⁻¹ t)^β`;
/// `(l, m) = (2 − γ, 2 − γ + β)`. `Φ` has no closed form and is integrated.
pub fn sinh_integral<T: Real>(gamma: T, beta: T) -> Result<PhiKernel<T>> {
    require(gamma >= T::zero() && gamma < T::one(), || format!("sinh-integral needs 0 <= gamma < 1, got {gamma}"))?;
    require(beta > T::zero() && beta.is_finite(), || format!("sinh-integral needs beta > 0, got {beta}"))?;
    let one = T::one();
    let two = lit::<T>(2.0);
    PhiKernel::new(
        KernelSpec::new("sinh-integral", &[("gamma", to_f64(gamma)), ("beta", to_f64(beta))]),
        two - gamma,
        two - gamma + beta,
        move |t: T| t.powf(-gamma) * t.asinh().powf(beta),
        move |t: T| {
            let a = t.asinh();
            -gamma * t.powf(-gamma - one) * a.powf(beta)
                + beta * t.powf(-gamma) * a.powf(beta - one) / (one + t * t).sqrt()
        },
    )
}

/// Truncated mean-curvature kernel `φ_L`; `(l, m) = (l_L, 2)`.
pub fn mc_truncated<T: Real>(big_l: T) -> Result<PhiKernel<T>> {
    TruncationParams::new(big_l)?.kernel()
}

/// One instance of every catalog kernel, at default parameters.
pub fn kernel_catalog<T: Real>() -> Vec<PhiKernel<T>> {
    ["p-power", "mixed", "gamma-power", "plog", "sinh-integral", "mc-truncated"]
        .iter()
        .map(|kind| KernelSpec::new(kind, &[]).build().expect("catalog defaults are admissible"))
        .collect()
}

// ---------------------------------------------------------------------------
// memo table

/// `Φ` and `G` tabulated on a grid, with monotone cubic interpolation between nodes.
#[derive(Debug, Clone, Serialize)]
pub struct BigPhiTable<T> {
    pub grid: Vec<T>,
    pub phi_values: Vec<T>,
    pub g_values: Vec<T>,
    phi_slopes: Vec<T>,
    g_slopes: Vec<T>,
}

impl<T: Real> BigPhiTable<T> {
    /// Builds the table by integrating cell by cell and accumulating.
    pub fn build(k: &PhiKernel<T>, grid: &[T], tol: T) -> Result<Self> {
        if grid.is_empty() || grid[0] != T::zero() || grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Construction("table grid must start at 0 and increase strictly".into()));
        }
        let cells = lit::<T>(grid.len() as f64);
        let phi_int = |s: T| if s == T::zero() { T::zero() } else { s * k.phi(s) };
        let g_int = |s: T| if s == T::zero() { T::zero() } else { s * k.flux_derivative(s) };
        let mut phi_values = vec![T::zero()];
        let mut g_values = vec![T::zero()];
        for w in grid.windows(2) {
            let dphi = integrate_piecewise(phi_int, w[0], w[1], k.knots(), tol / cells)?;
            let dg = integrate_piecewise(g_int, w[0], w[1], k.knots(), tol / cells)?;
            phi_values.push(*phi_values.last().unwrap() + dphi);
            g_values.push(*g_values.last().unwrap() + dg);
        }
        let finite_or_zero = |v: T| if v.is_finite() { v } else { T::zero() };
        let phi_slopes = grid.iter().map(|&t| finite_or_zero(phi_int(t))).collect();
        let g_slopes = grid.iter().map(|&t| finite_or_zero(k.energy_g_prime(t))).collect();
        Ok(BigPhiTable {
            phi_slopes: limit_slopes(grid, &phi_values, phi_slopes),
            g_slopes: limit_slopes(grid, &g_values, g_slopes),
            grid: grid.to_vec(),
            phi_values,
            g_values,
        })
    }

    pub fn interpolate_phi(&self, t: T) -> Option<T> {
        hermite(&self.grid, &self.phi_values, &self.phi_slopes, t)
    }

    pub fn interpolate_g(&self, t: T) -> Option<T> {
        hermite(&self.grid, &self.g_values, &self.g_slopes, t)
    }
}

/// Fritsch–Carlson limiter applied to exact nodal derivatives.
fn limit_slopes<T: Real>(x: &[T], y: &[T], mut d: Vec<T>) -> Vec<T> {
    let three = lit::<T>(3.0);
    for i in 0..x.len().saturating_sub(1) {
        let delta = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
        if delta <= T::zero() {
            d[i] = T::zero();
            d[i + 1] = T::zero();
            continue;
        }
        let a = d[i] / delta;
        let b = d[i + 1] / delta;
        let r = (a * a + b * b).sqrt();
        if r > three {
            let tau = three / r;
            d[i] = tau * a * delta;
            d[i + 1] = tau * b * delta;
        }
    }
    d
}

fn hermite<T: Real>(x: &[T], y: &[T], d: &[T], t: T) -> Option<T> {
    if t < x[0] || t > *x.last()? {
        return None;
    }
    let i = match x.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
        Ok(i) => return Some(y[i]),
        Err(i) => i - 1,
    };
    let h = x[i + 1] - x[i];
    let s = (t - x[i]) / h;
    let (two, three) = (lit::<T>(2.0), lit::<T>(3.0));
    let h00 = (T::one() + two * s) * (T::one() - s) * (T::one() - s);
    let h10 = s * (T::one() - s) * (T::one() - s);
    let h01 = s * s * (three - two * s);
    let h11 = s * s * (s - T::one());
    Some(h00 * y[i] + h10 * h * d[i] + h01 * y[i + 1] + h11 * h * d[i + 1])
}
