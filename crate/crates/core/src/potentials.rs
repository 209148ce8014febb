//! Double-well potentials.
//!
//! Every catalog potential has the product form `V(y) = F((y − a)(y − b))`
//! with wells `a < b`. Keeping `F` around lets the solver evaluate `V` from
//! the distance to a well without the cancellation in `y − b`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{parse_spec_text, KernelSpec, PhiKernel, ScalarFn};
use crate::scalar::{lit, linspace, to_f64, Real};

/// Potential selection as it appears in JSON configs:
/// `{"kind": "p-dw", "params": {"p": 2.0, "alpha": 1.0}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub kind: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

/// Parameter names and defaults of a potential kind.
pub fn potential_parameters(kind: &str) -> Option<&'static [(&'static str, f64)]> {
    Some(match kind {
        "phi-dw" => &[("alpha", 1.0)],
        "p-dw" => &[("p", 2.0), ("alpha", 1.0)],
        "quartic" => &[("alpha", 1.0)],
        "asym" => &[("p", 2.0), ("a", 0.0), ("b", 1.0)],
        _ => return None,
    })
}

impl PotentialSpec {
    pub fn accepts(&self, param: &str) -> bool {
        potential_parameters(&self.kind).is_some_and(|ps| ps.iter().any(|(n, _)| *n == param))
    }

    pub fn new(kind: &str, params: &[(&str, f64)]) -> Self {
        PotentialSpec {
            kind: kind.to_string(),
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    /// Builds the potential; `phi-dw` takes its `Φ` from `kernel`.
    pub fn build<T: Real>(&self, kernel: &PhiKernel<T>) -> Result<Potential<T>> {
        let allowed = potential_parameters(&self.kind)
            .ok_or_else(|| Error::Config(format!("unknown potential kind '{}'", self.kind)))?;
        if let Some(bad) = self.params.keys().find(|k| !allowed.iter().any(|(n, _)| n == k)) {
            return Err(Error::Config(format!("potential '{}' has no parameter '{bad}'", self.kind)));
        }
        let get = |name: &str| -> T {
            let default = allowed.iter().find(|(n, _)| *n == name).map(|(_, v)| *v).unwrap();
            lit(self.params.get(name).copied().unwrap_or(default))
        };
        match self.kind.as_str() {
            "phi-dw" => phi_double_well(kernel, get("alpha")),
            "p-dw" => p_double_well(get("p"), get("alpha")),
            "quartic" => quartic_well(get("alpha")),
            _ => asymmetric_well(get("p"), get("a"), get("b")),
        }
    }
}

impl FromStr for PotentialSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim_start().starts_with('{') {
            return serde_json::from_str(s).map_err(|e| Error::Config(format!("potential JSON: {e}")));
        }
        let (kind, params) = parse_spec_text(s)?;
        Ok(PotentialSpec { kind, params })
    }
}

/// Which construction produced a potential; drives oracle and bound selection.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialShape<T> {
    /// `Φ(|(t − a)(t − b)|)` for the kernel with this spec.
    PhiWell { kernel: KernelSpec },
    /// `|(t − a)(t − b)|^p / p`.
    PowerWell { p: T },
    /// `((t − a)(t − b))²`.
    Quartic,
    Custom,
}

#[derive(Clone)]
pub struct Potential<T> {
    name: String,
    shape: PotentialShape<T>,
    v: ScalarFn<T>,
    v_prime: ScalarFn<T>,
    /// `F` and `F'` of the product form, when available.
    product: Option<(ScalarFn<T>, ScalarFn<T>)>,
    well_low: T,
    well_high: T,
    rho: T,
}

impl<T: Real> fmt::Debug for Potential<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Potential")
            .field("name", &self.name)
            .field("shape", &self.shape)
            .field("wells", &(self.well_low, self.well_high))
            .field("rho", &self.rho)
            .finish()
    }
}

impl<T: Real> Potential<T> {
    /// A potential given only by `V` and `V'`. No product form is assumed.
    pub fn custom(
        name: &str,
        well_low: T,
        well_high: T,
        v: impl Fn(T) -> T + Send + Sync + 'static,
        v_prime: impl Fn(T) -> T + Send + Sync + 'static,
    ) -> Result<Self> {
        Self::assemble(name.to_string(), PotentialShape::Custom, well_low, well_high, Arc::new(v), Arc::new(v_prime), None)
    }

    /// `V(y) = F((y − low)(y − high))`, `V'(y) = F'(s)(2y − low − high)`.
    fn product_form(
        name: String,
        shape: PotentialShape<T>,
        low: T,
        high: T,
        f: ScalarFn<T>,
        df: ScalarFn<T>,
    ) -> Result<Self> {
        let (f1, df1) = (f.clone(), df.clone());
        let v = move |y: T| f1((y - low) * (y - high));
        let vp = move |y: T| df1((y - low) * (y - high)) * (y - low + (y - high));
        Self::assemble(name, shape, low, high, Arc::new(v), Arc::new(vp), Some((f, df)))
    }

    fn assemble(
        name: String,
        shape: PotentialShape<T>,
        well_low: T,
        well_high: T,
        v: ScalarFn<T>,
        v_prime: ScalarFn<T>,
        product: Option<(ScalarFn<T>, ScalarFn<T>)>,
    ) -> Result<Self> {
        if !(well_low < well_high) || !well_low.is_finite() || !well_high.is_finite() {
            return Err(Error::Construction(format!("wells must satisfy low < high, got ({well_low}, {well_high})")));
        }
        let mut pot = Potential { name, shape, v, v_prime, product, well_low, well_high, rho: T::zero() };
        pot.rho = convexity_radius(&pot);
        Ok(pot)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn shape(&self) -> &PotentialShape<T> {
        &self.shape
    }

    #[inline]
    pub fn v(&self, y: T) -> T {
        (self.v)(y)
    }

    #[inline]
    pub fn v_prime(&self, y: T) -> T {
        (self.v_prime)(y)
    }

    /// Central second difference of `V'`... of `V`, step `h`.
    pub fn second_difference(&self, y: T, h: T) -> T {
        (self.v(y + h) - lit::<T>(2.0) * self.v(y) + self.v(y - h)) / (h * h)
    }

    /// `V(high − w)` evaluated without forming `high − w` when possible.
    pub fn v_below_high(&self, w: T) -> T {
        match &self.product {
            Some((f, _)) => f(-(w * (self.gap() - w))),
            None => self.v(self.well_high - w),
        }
    }

    /// `V(low + z)`.
    pub fn v_above_low(&self, z: T) -> T {
        match &self.product {
            Some((f, _)) => f(-(z * (self.gap() - z))),
            None => self.v(self.well_low + z),
        }
    }

    pub fn wells(&self) -> (T, T) {
        (self.well_low, self.well_high)
    }

    pub fn well_low(&self) -> T {
        self.well_low
    }

    pub fn well_high(&self) -> T {
        self.well_high
    }

    pub fn gap(&self) -> T {
        self.well_high - self.well_low
    }

    pub fn midpoint(&self) -> T {
        (self.well_low + self.well_high) / lit(2.0)
    }

    /// Convexity radius around each well found by scanning second differences.
    pub fn rho(&self) -> T {
        self.rho
    }

    /// Product-form potentials are symmetric about the midpoint of the wells.
    pub fn is_reflection_symmetric(&self) -> bool {
        self.product.is_some()
    }
}

/// Largest `r ≤ gap/2` (in steps of `1e−3·gap`) such that the second
/// difference of `V` is positive at every scanned point within `r` of both wells.
fn convexity_radius<T: Real>(p: &Potential<T>) -> T {
    let step = lit::<T>(1e-3) * p.gap();
    let max_j = 500;
    let convex = |y: T| p.second_difference(y, step) > T::zero();
    let mut radius = T::zero();
    for j in 0..=max_j {
        let r = step * lit(j as f64);
        let ok = [p.well_low, p.well_high].iter().all(|&w| convex(w - r) && convex(w + r));
        if !ok {
            break;
        }
        radius = r;
    }
    radius
}

fn signed_pow<T: Real>(s: T, e: T) -> T {
    if s == T::zero() {
        T::zero()
    } else {
        s.signum() * s.abs().powf(e)
    }
}

/// `V(t) = Φ(|t² − α²|)` with the kernel's `Φ`.
pub fn phi_double_well<T: Real>(k: &PhiKernel<T>, alpha: T) -> Result<Potential<T>> {
    check_alpha(alpha)?;
    let (k1, k2) = (k.clone(), k.clone());
    Potential::product_form(
        format!("phi-dw[{}]", k.name()),
        PotentialShape::PhiWell { kernel: k.spec().clone() },
        -alpha,
        alpha,
        Arc::new(move |s: T| k1.phi_integral(s)),
        Arc::new(move |s: T| k2.flux(s)),
    )
}

/// `V(t) = |t² − α²|^p / p`.
pub fn p_double_well<T: Real>(p: T, alpha: T) -> Result<Potential<T>> {
    check_alpha(alpha)?;
    check_p(p)?;
    Potential::product_form(
        "p-dw".into(),
        PotentialShape::PowerWell { p },
        -alpha,
        alpha,
        Arc::new(move |s: T| s.abs().powf(p) / p),
        Arc::new(move |s: T| signed_pow(s, p - T::one())),
    )
}

/// `V(t) = (t² − α²)²`.
pub fn quartic_well<T: Real>(alpha: T) -> Result<Potential<T>> {
    check_alpha(alpha)?;
    let two = lit::<T>(2.0);
    Potential::product_form(
        "quartic".into(),
        PotentialShape::Quartic,
        -alpha,
        alpha,
        Arc::new(|s: T| s * s),
        Arc::new(move |s: T| two * s),
    )
}

/// `V(t) = |(t − a)(t − b)|^p / p` with wells `a < b`.
pub fn asymmetric_well<T: Real>(p: T, a: T, b: T) -> Result<Potential<T>> {
    check_p(p)?;
    if !(a < b) {
        return Err(Error::Construction(format!("asymmetric well needs a < b, got a = {a}, b = {b}")));
    }
    Potential::product_form(
        "asym".into(),
        PotentialShape::PowerWell { p },
        a,
        b,
        Arc::new(move |s: T| s.abs().powf(p) / p),
        Arc::new(move |s: T| signed_pow(s, p - T::one())),
    )
}

fn check_alpha<T: Real>(alpha: T) -> Result<()> {
    if alpha > T::zero() && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::Construction(format!("alpha must be positive, got {alpha}")))
    }
}

fn check_p<T: Real>(p: T) -> Result<()> {
    if p > T::one() && p.is_finite() {
        Ok(())
    } else {
        Err(Error::Construction(format!("p must exceed 1, got {p}")))
    }
}

/// Fitted envelope constants; `None` when no admissible sample fell in the window.
#[derive(Debug, Clone, Serialize)]
pub struct Envelope {
    pub min: Option<f64>,
    pub max: Option<f64>,
}

impl Envelope {
    fn positive(&self) -> bool {
        matches!((self.min, self.max), (Some(lo), Some(hi)) if lo > 0.0 && hi.is_finite())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PotentialCertificate {
    pub name: String,
    pub nonnegative: bool,
    pub wells_vanish: bool,
    pub positive_between: bool,
    pub rho: f64,
    /// Range of `V(t)/Φ(|t − well|)` near each well.
    pub growth_high: Envelope,
    pub growth_low: Envelope,
    /// Range of `V'(t)/(−(t − mid)·φ(d)d)`, `d` the distance to the nearer well.
    pub slope_high: Envelope,
    pub slope_low: Envelope,
    /// Second differences at the lower and upper well.
    pub well_curvature: (f64, f64),
    /// Range of `V'(t)/(−(t − mid)·d)`.
    pub linear_slope_high: Envelope,
    pub linear_slope_low: Envelope,
    /// `sup |V'|` over the grid, recorded for the uniform-bound hypothesis.
    pub sup_v_prime: f64,
}

impl PotentialCertificate {
    pub fn double_well(&self) -> bool {
        self.wells_vanish && self.positive_between
    }

    pub fn convex_near_wells(&self) -> bool {
        self.rho > 0.0
    }

    /// Hypotheses of the general quasilinear theory.
    pub fn general_theory(&self) -> bool {
        self.nonnegative
            && self.double_well()
            && self.convex_near_wells()
            && self.growth_high.positive()
            && self.growth_low.positive()
            && self.slope_high.positive()
            && self.slope_low.positive()
    }

    /// Hypotheses used for the mean-curvature problem.
    pub fn mean_curvature_theory(&self) -> bool {
        self.nonnegative
            && self.double_well()
            && self.well_curvature.0 > 0.0
            && self.well_curvature.1 > 0.0
            && self.linear_slope_high.positive()
            && self.linear_slope_low.positive()
    }
}

fn envelope<T: Real>(samples: impl Iterator<Item = T>) -> Envelope {
    let mut lo: Option<f64> = None;
    let mut hi: Option<f64> = None;
    for r in samples.filter(|r| r.is_finite()).map(to_f64) {
        lo = Some(lo.map_or(r, |x: f64| x.min(r)));
        hi = Some(hi.map_or(r, |x: f64| x.max(r)));
    }
    Envelope { min: lo, max: hi }
}

/// Default certification grid: 2001 points across the closed well interval.
pub fn default_grid<T: Real>(p: &Potential<T>) -> Vec<T> {
    linspace(p.well_low, p.well_high, 2001)
}

/// Scans `grid` for the structural hypotheses and fits envelope constants.
pub fn certify_hypotheses<T: Real>(p: &Potential<T>, k: &PhiKernel<T>, grid: &[T]) -> PotentialCertificate {
    let (low, high) = p.wells();
    let mid = p.midpoint();
    let gap = p.gap();
    let zero_tol = lit::<T>(1e-14);
    let window = gap / lit(4.0);
    let interior = |t: &&T| **t > low && **t < high;

    let nonnegative = grid.iter().all(|&t| p.v(t) >= T::zero());
    let wells_vanish = p.v(low).abs() <= zero_tol && p.v(high).abs() <= zero_tol;
    let positive_between = grid.iter().filter(interior).all(|&t| p.v(t) > T::zero());

    let near = |w: T| {
        grid.iter()
            .copied()
            .filter(move |&t| t != w && (t - w).abs() < window && t > low - gap && t < high + gap)
            .filter(move |&t| if w == high { t < high } else { t > low })
    };
    let growth_high = envelope(near(high).map(|t| p.v(t) / k.phi_integral(t - high)));
    let growth_low = envelope(near(low).map(|t| p.v(t) / k.phi_integral(t - low)));

    let upper = || grid.iter().copied().filter(move |&t| t > mid && t < high);
    let lower = || grid.iter().copied().filter(move |&t| t > low && t < mid);
    let slope_high = envelope(upper().map(|t| p.v_prime(t) / -((t - mid) * k.flux((t - high).abs()))));
    let slope_low = envelope(lower().map(|t| p.v_prime(t) / -((t - mid) * k.flux((t - low).abs()))));
    let linear_slope_high = envelope(upper().map(|t| p.v_prime(t) / -((t - mid) * (t - high).abs())));
    let linear_slope_low = envelope(lower().map(|t| p.v_prime(t) / -((t - mid) * (t - low).abs())));

    let h = lit::<T>(1e-4) * gap;
    let well_curvature = (to_f64(p.second_difference(low, h)), to_f64(p.second_difference(high, h)));
    let sup_v_prime = grid
        .iter()
        .filter(|t| **t >= low && **t <= high)
        .map(|&t| to_f64(p.v_prime(t).abs()))
        .fold(0.0, f64::max);

    PotentialCertificate {
        name: p.name().to_string(),
        nonnegative,
        wells_vanish,
        positive_between,
        rho: to_f64(p.rho()),
        growth_high,
        growth_low,
        slope_high,
        slope_low,
        well_curvature,
        linear_slope_high,
        linear_slope_low,
        sup_v_prime,
    }
}
