//! Checks of a computed profile against the qualitative properties of heteroclinics.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::cauchy::{fit_decay, oracle_for, sandwich_for, HeteroclinicProfile, Route};
use crate::error::{Error, Result};
use crate::kernels::{certify_kernel, KernelSpec, PhiKernel};
use crate::mc_truncation::{mc_sandwich_check, MC_BOUND_SLACK};
use crate::potentials::{Potential, PotentialShape};
use crate::scalar::{lit, to_f64, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub status: CheckStatus,
    /// Signed: positive means the check passed with that much room.
    pub margin: Option<f64>,
    /// Time of the worst sample.
    pub at: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileMeta {
    pub route: Route,
    pub kernel: KernelSpec,
    pub potential: String,
    pub wells: (f64, f64),
    pub anchor: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub meta: ProfileMeta,
    pub checks: Vec<CheckResult>,
}

impl VerificationReport {
    /// True when no applicable check failed.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Fixed-width table, one line per check.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<18} {:<8} {:>14} {:>12}  detail", "check", "status", "margin", "at t");
        for c in &self.checks {
            let status = match c.status {
                CheckStatus::Pass => "pass",
                CheckStatus::Fail => "FAIL",
                CheckStatus::Skipped => "skipped",
            };
            let num = |x: Option<f64>| x.map(|v| format!("{v:.6e}")).unwrap_or_else(|| "-".into());
            let _ = writeln!(out, "{:<18} {:<8} {:>14} {:>12}  {}", c.name, status, num(c.margin), num(c.at), c.detail);
        }
        out
    }
}

pub const CHECK_NAMES: [&str; 9] = [
    "monotonicity",
    "strict_bounds",
    "positive_slope",
    "energy_residual",
    "sandwich_bounds",
    "decay_fit",
    "symmetry",
    "oracle_distance",
    "finite_action",
];

/// Tolerances; `None` picks the default for the profile's route.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyOptions {
    pub energy_tol: Option<f64>,
    pub oracle_tol: Option<f64>,
    pub symmetry_tol: Option<f64>,
    pub bound_slack: Option<f64>,
    pub tail_fraction: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Tolerances {
    energy: f64,
    oracle: f64,
    symmetry: f64,
    slack: f64,
    tail_fraction: f64,
}

impl VerifyOptions {
    fn resolve(&self, route: Route) -> Tolerances {
        let (energy, oracle, symmetry) = match route {
            Route::Cauchy => (1e-8, 1e-8, 1e-10),
            Route::Variational => (1e-3, 5e-3, 5e-3),
        };
        Tolerances {
            energy: self.energy_tol.unwrap_or(energy),
            oracle: self.oracle_tol.unwrap_or(oracle),
            symmetry: self.symmetry_tol.unwrap_or(symmetry),
            slack: self.bound_slack.unwrap_or(1e-9),
            tail_fraction: self.tail_fraction.unwrap_or(0.25),
        }
    }
}

fn skipped(name: &str, why: &str) -> CheckResult {
    CheckResult { name: name.into(), status: CheckStatus::Skipped, margin: None, at: None, detail: why.into() }
}

fn judged(name: &str, margin: f64, at: Option<f64>, detail: String) -> CheckResult {
    let status = if margin >= 0.0 { CheckStatus::Pass } else { CheckStatus::Fail };
    CheckResult { name: name.into(), status, margin: Some(margin), at, detail }
}

fn failed(name: &str, detail: String) -> CheckResult {
    CheckResult { name: name.into(), status: CheckStatus::Fail, margin: None, at: None, detail }
}

/// `(min value, time)` over samples.
fn worst<T: Real>(profile: &HeteroclinicProfile<T>, items: impl Iterator<Item = (usize, T)>) -> (f64, Option<f64>) {
    let mut best = (f64::INFINITY, None);
    for (i, v) in items {
        let v = to_f64(v);
        if v < best.0 || v.is_nan() {
            best = (v, Some(to_f64(profile.t[i])));
            if v.is_nan() {
                break;
            }
        }
    }
    if best.0.is_nan() {
        best.0 = f64::NEG_INFINITY;
    }
    best
}

/// Runs every check, reporting inapplicable ones as skipped.
pub fn run_all<T: Real>(
    profile: &HeteroclinicProfile<T>,
    k: &PhiKernel<T>,
    pot: &Potential<T>,
    opts: &VerifyOptions,
) -> VerificationReport {
    let tol = opts.resolve(profile.route);
    let meta = ProfileMeta {
        route: profile.route,
        kernel: k.spec().clone(),
        potential: pot.name().to_string(),
        wells: (to_f64(pot.well_low()), to_f64(pot.well_high())),
        anchor: to_f64(profile.anchor),
        samples: profile.len(),
    };
    if profile.len() < 2 || profile.q.len() != profile.len() || profile.q_prime.len() != profile.len() {
        let checks = CHECK_NAMES.iter().map(|n| failed(n, "profile has fewer than two consistent samples".into())).collect();
        return VerificationReport { meta, checks };
    }
    let n = profile.len();
    let (low, high) = pot.wells();
    let mut checks = Vec::with_capacity(CHECK_NAMES.len());

    let (m, at) = worst(profile, (1..n).map(|i| (i, profile.q[i] - profile.q[i - 1])));
    checks.push(judged_strict("monotonicity", m, at, "min q[i+1] − q[i]".into()));

    let (m, at) = worst(profile, (0..n).map(|i| (i, (profile.q[i] - low).min(high - profile.q[i]))));
    checks.push(judged_strict("strict_bounds", m, at, "min distance to the wells".into()));

    let (m, at) = worst(profile, (0..n).map(|i| (i, profile.q_prime[i])));
    checks.push(judged_strict("positive_slope", m, at, "min q'".into()));

    let (m, at) = worst(
        profile,
        (0..n).map(|i| (i, lit::<T>(tol.energy) - (k.energy_g(profile.q_prime[i].abs()) - pot.v(profile.q[i])).abs())),
    );
    checks.push(judged("energy_residual", m, at, format!("tolerance {:.1e} on |G(q') − V(q)|", tol.energy)));

    checks.push(sandwich_check(profile, k, pot, tol.slack));
    checks.push(match fit_decay(profile, lit(tol.tail_fraction)) {
        Ok(fit) => {
            let rates = [fit.theta[1], fit.theta[3], fit.beta[1], fit.beta[3]];
            let min_rate = rates.iter().fold(f64::INFINITY, |m, r| m.min(to_f64(*r)));
            judged_strict(
                "decay_fit",
                min_rate,
                None,
                format!(
                    "rates theta2 {:.4} theta4 {:.4} beta2 {:.4} beta4 {:.4}",
                    to_f64(rates[0]),
                    to_f64(rates[1]),
                    to_f64(rates[2]),
                    to_f64(rates[3])
                ),
            )
        }
        Err(e) => failed("decay_fit", e.to_string()),
    });
    checks.push(symmetry_check(profile, pot, tol.symmetry));
    checks.push(match oracle_for(k, pot) {
        None => skipped("oracle_distance", "no closed form for this kernel and potential"),
        Some(oracle) => {
            let tau = oracle.time_of(profile.anchor);
            let (m, at) = worst(
                profile,
                (0..n).map(|i| (i, lit::<T>(tol.oracle) - (profile.q[i] - oracle.eval(profile.t[i] + tau)).abs())),
            );
            judged("oracle_distance", m, at, format!("tolerance {:.1e} on the sup distance", tol.oracle))
        }
    });
    checks.push(match finite_action(profile, k, pot) {
        Ok(a) if a.is_finite() && a >= T::zero() => CheckResult {
            name: "finite_action".into(),
            status: CheckStatus::Pass,
            margin: None,
            at: None,
            detail: format!("action {:.12e}", to_f64(a)),
        },
        Ok(a) => failed("finite_action", format!("action {a} is not finite and nonnegative")),
        Err(e) => failed("finite_action", e.to_string()),
    });
    VerificationReport { meta, checks }
}

/// Passes only on a strictly positive margin.
fn judged_strict(name: &str, margin: f64, at: Option<f64>, detail: String) -> CheckResult {
    let mut c = judged(name, margin, at, detail);
    if !(margin > 0.0) {
        c.status = CheckStatus::Fail;
    }
    c
}

fn sandwich_check<T: Real>(profile: &HeteroclinicProfile<T>, k: &PhiKernel<T>, pot: &Potential<T>, slack: f64) -> CheckResult {
    let name = "sandwich_bounds";
    let (low, high) = pot.wells();
    if k.spec().kind == "mc-truncated" && matches!(pot.shape(), PotentialShape::Quartic) && low == -high {
        return match mc_sandwich_check(profile, high) {
            Ok(r) => {
                let m = r.lower_margin.min(r.upper_margin) + MC_BOUND_SLACK * to_f64(high);
                let detail = format!("mean-curvature bounds, kappa {:.6}, slack {:.0e}", r.kappa, MC_BOUND_SLACK * to_f64(high));
                let mut c = judged(name, m, None, detail);
                c.status = if r.passed { CheckStatus::Pass } else { CheckStatus::Fail };
                c
            }
            Err(e) => failed(name, e.to_string()),
        };
    }
    let Some(s) = sandwich_for(k, pot) else {
        return skipped(name, "potential is not built from the kernel's Φ");
    };
    match certify_kernel(k) {
        Ok(cert) if cert.passed() => {}
        _ => return skipped(name, "growth exponents not certified"),
    }
    // bounds are stated for the profile centred at the midpoint
    let Some(tau) = centre_time(profile, pot.midpoint()) else {
        return failed(name, "profile never crosses the midpoint".into());
    };
    let (m, at) = worst(
        profile,
        (0..profile.len()).map(|i| {
            let (lo, hi) = s.bounds(profile.t[i] - tau);
            (i, (profile.q[i] - lo).min(hi - profile.q[i]) + lit::<T>(slack))
        }),
    );
    judged(name, m, at, format!("divisors {:.4} / {:.4}, slack {slack:.0e}", to_f64(s.lower_div), to_f64(s.upper_div)))
}

/// Time at which the profile passes `level`, by Hermite interpolation root search.
fn centre_time<T: Real>(profile: &HeteroclinicProfile<T>, level: T) -> Option<T> {
    if profile.anchor == level {
        return Some(T::zero());
    }
    let i = profile.q.iter().position(|q| *q >= level)?;
    if i == 0 {
        return None;
    }
    let (mut a, mut b) = (profile.t[i - 1], profile.t[i]);
    for _ in 0..200 {
        let m = (a + b) / lit(2.0);
        if profile.interpolate(m)? < level {
            a = m;
        } else {
            b = m;
        }
    }
    Some((a + b) / lit(2.0))
}

fn symmetry_check<T: Real>(profile: &HeteroclinicProfile<T>, pot: &Potential<T>, tol: f64) -> CheckResult {
    let name = "symmetry";
    if !pot.is_reflection_symmetric() {
        return skipped(name, "potential not known to be symmetric about the midpoint");
    }
    let Some(tau) = centre_time(profile, pot.midpoint()) else {
        return failed(name, "profile never crosses the midpoint".into());
    };
    let two_mid = pot.midpoint() + pot.midpoint();
    let mirrored = |i: usize| -> Option<T> {
        let target = tau + tau - profile.t[i];
        match profile.t.binary_search_by(|x| x.partial_cmp(&target).unwrap_or(std::cmp::Ordering::Less)) {
            Ok(j) => Some(profile.q[j]),
            Err(_) => profile.interpolate(target),
        }
    };
    let (m, at) = worst(
        profile,
        (0..profile.len())
            .filter(|&i| profile.t[i] >= tau)
            .filter_map(|i| mirrored(i).map(|qm| (i, lit::<T>(tol) - (profile.q[i] + qm - two_mid).abs()))),
    );
    if m == f64::INFINITY {
        return failed(name, "no mirrored sample pairs".into());
    }
    judged(name, m, at, format!("tolerance {tol:.1e} on |q(t) + q(−t) − 2·mid|"))
}

/// Action `∫ (Φ(|q'|) + V(q)) dt` by the trapezoid rule over the samples, plus
/// exponential tail corrections `L(t_end)/λ` with `λ` fitted on each tail.
pub fn finite_action<T: Real>(profile: &HeteroclinicProfile<T>, k: &PhiKernel<T>, pot: &Potential<T>) -> Result<T> {
    let n = profile.len();
    if n < 2 {
        return Err(Error::TailBound("need at least two samples".into()));
    }
    let lagr: Vec<T> = (0..n).map(|i| k.phi_integral(profile.q_prime[i]) + pot.v(profile.q[i])).collect();
    let half = lit::<T>(0.5);
    let body: T = (1..n).map(|i| (profile.t[i] - profile.t[i - 1]) * (lagr[i] + lagr[i - 1]) * half).sum();
    let take = (n / 4).max(3).min(n);
    let right = tail_term(&profile.t[n - take..], &lagr[n - take..], false)?;
    let left = tail_term(&profile.t[..take], &lagr[..take], true)?;
    Ok(body + left + right)
}

/// `L(edge)/λ` for an exponential fit `L ≈ c e^{−λ|t|}` towards the edge.
fn tail_term<T: Real>(t: &[T], l: &[T], left: bool) -> Result<T> {
    let edge = if left { l[0] } else { l[l.len() - 1] };
    if edge == T::zero() {
        return Ok(T::zero());
    }
    let pts: Vec<(T, T)> = t.iter().zip(l).filter(|(_, v)| **v > T::zero()).map(|(t, v)| (*t, v.ln())).collect();
    if pts.len() < 3 {
        return Err(Error::TailBound("too few positive tail samples".into()));
    }
    let nn = lit::<T>(pts.len() as f64);
    let mx = pts.iter().map(|p| p.0).sum::<T>() / nn;
    let my = pts.iter().map(|p| p.1).sum::<T>() / nn;
    let sxy = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<T>();
    let sxx = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum::<T>();
    let slope = sxy / sxx;
    let rate = if left { slope } else { -slope };
    if !(rate > T::zero()) || !rate.is_finite() {
        return Err(Error::TailBound(format!("integrand does not decay in the tail (rate {rate})")));
    }
    Ok(edge / rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cauchy::{solve_cauchy, SolverConfig};
    use crate::kernels::{p_power, plog};
    use crate::potentials::{p_double_well, phi_double_well};

    fn benchmark() -> (HeteroclinicProfile<f64>, PhiKernel<f64>, Potential<f64>) {
        let k = p_power(2.0).unwrap();
        let pot = p_double_well(2.0, 1.0).unwrap();
        (solve_cauchy(&k, &pot, 0.0, &SolverConfig::default()).unwrap(), k, pot)
    }

    #[test]
    fn benchmark_passes_everything() {
        let (prof, k, pot) = benchmark();
        let r = run_all(&prof, &k, &pot, &VerifyOptions::default());
        assert!(r.passed(), "{}", r.render_table());
        let names: Vec<&str> = r.checks.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, CHECK_NAMES);
        assert!(r.checks.iter().all(|c| c.status == CheckStatus::Pass));
    }

    #[test]
    fn faults_are_located() {
        let (mut prof, k, pot) = benchmark();
        let i = prof.len() / 3;
        prof.q_prime[i] = -prof.q_prime[i];
        let r = run_all(&prof, &k, &pot, &VerifyOptions::default());
        let c = r.check("positive_slope").unwrap();
        assert_eq!(c.status, CheckStatus::Fail);
        assert_eq!(c.at, Some(prof.t[i]));

        let (mut prof, k, pot) = benchmark();
        prof.q.swap(100, 101);
        assert_eq!(run_all(&prof, &k, &pot, &VerifyOptions::default()).check("monotonicity").unwrap().status, CheckStatus::Fail);

        let (mut prof, k, pot) = benchmark();
        let last = prof.len() - 1;
        prof.q[last] = 1.0 + 1e-9;
        assert_eq!(run_all(&prof, &k, &pot, &VerifyOptions::default()).check("strict_bounds").unwrap().status, CheckStatus::Fail);

        let (mut prof, k, pot) = benchmark();
        let j = prof.len() * 3 / 4;
        prof.q[j] += 1e-6;
        assert_eq!(run_all(&prof, &k, &pot, &VerifyOptions::default()).check("symmetry").unwrap().status, CheckStatus::Fail);
    }

    #[test]
    fn ramp_fails_energy() {
        let (prof, k, pot) = benchmark();
        let mut fake = prof.clone();
        for i in 0..fake.len() {
            fake.q[i] = prof.t[i].clamp(-0.999, 0.999);
            fake.q_prime[i] = 1.0;
        }
        let r = run_all(&fake, &k, &pot, &VerifyOptions::default());
        assert_eq!(r.check("energy_residual").unwrap().status, CheckStatus::Fail);
    }

    #[test]
    fn skipped_checks_are_listed() {
        let k = plog(2.0).unwrap();
        let pot = p_double_well(2.0, 1.0).unwrap();
        let prof = solve_cauchy(&k, &pot, 0.0, &SolverConfig::default()).unwrap();
        let r = run_all(&prof, &k, &pot, &VerifyOptions::default());
        assert_eq!(r.check("oracle_distance").unwrap().status, CheckStatus::Skipped);
        assert_eq!(r.check("sandwich_bounds").unwrap().status, CheckStatus::Skipped);
        assert!(r.passed(), "{}", r.render_table());
        assert_eq!(r.checks.len(), CHECK_NAMES.len());
    }

    #[test]
    fn report_is_deterministic() {
        let (prof, k, pot) = benchmark();
        let a = serde_json::to_string(&run_all(&prof, &k, &pot, &VerifyOptions::default())).unwrap();
        let b = serde_json::to_string(&run_all(&prof, &k, &pot, &VerifyOptions::default())).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn kink_action() {
        let (prof, k, pot) = benchmark();
        let a = finite_action(&prof, &k, &pot).unwrap();
        assert!((a - 4.0 / 3.0).abs() < 1e-6, "{a}");
        let mut flat = prof.clone();
        flat.q.iter_mut().for_each(|q| *q = 1.0);
        flat.q_prime.iter_mut().for_each(|d| *d = 0.0);
        assert_eq!(finite_action(&flat, &k, &pot).unwrap(), 0.0);
    }

    #[test]
    fn action_stable_under_longer_horizon() {
        let k = p_power(3.0).unwrap();
        let pot = phi_double_well(&k, 1.0).unwrap();
        let short = solve_cauchy(&k, &pot, 0.0, &SolverConfig { t_max: Some(20.0), ..Default::default() }).unwrap();
        let long = solve_cauchy(&k, &pot, 0.0, &SolverConfig { t_max: Some(40.0), ..Default::default() }).unwrap();
        let (a, b): (f64, f64) = (finite_action(&short, &k, &pot).unwrap(), finite_action(&long, &k, &pot).unwrap());
        assert!(((a - b) / a).abs() < 1e-6, "{a} vs {b}");
    }
}
