use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use hetlab::kernels::{certify_kernel, kernel_parameters};
use hetlab::minimizer::{initial_ramp, minimize_action, variational_profile};
use hetlab::potentials::{certify_hypotheses, default_grid};
use hetlab::verify::CheckResult;
use hetlab::{
    io, run_all, solve_cauchy, solve_mc, DiscreteAction, HeteroclinicProfile, PhiKernel, Potential, Route,
    SlopeCertificate,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Common, RunConfig, SweepArgs, VerifyArgs};
use crate::failure::{Failure, VERIFICATION};
use crate::grid;

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Failure::config(format!("cannot create {}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn write_failed(e: std::io::Error) -> Failure {
    Failure::config(format!("write failed: {e}"))
}

/// Builds and certifies the kernel and potential.
fn prepare(cfg: &RunConfig) -> Result<(PhiKernel, Potential), Failure> {
    let k: PhiKernel = cfg.kernel.build()?;
    let cert = certify_kernel(&k)?;
    if !cert.passed() {
        return Err(Failure::config(format!(
            "kernel {} fails certification: declared (l, m) = ({}, {}), sampled ({}, {}), positivity {}",
            cert.name, cert.declared_l, cert.declared_m, cert.estimated_l, cert.estimated_m, cert.positivity
        )));
    }
    let pot: Potential = cfg.potential.build(&k)?;
    let pc = certify_hypotheses(&pot, &k, &default_grid(&pot));
    if !(pc.nonnegative && pc.double_well()) {
        return Err(Failure::config(format!(
            "potential {} is not a double well: nonnegative {}, vanishes at wells {}, positive between {}",
            pc.name, pc.nonnegative, pc.wells_vanish, pc.positive_between
        )));
    }
    Ok((k, pot))
}

struct Solved {
    profile: HeteroclinicProfile,
    slope: Option<SlopeCertificate>,
    note: String,
}

fn solve(cfg: &RunConfig, k: &PhiKernel, pot: &Potential) -> Result<Solved, Failure> {
    match cfg.route {
        Route::Cauchy if cfg.kernel.kind == "mc-truncated" && cfg.anchor.is_none() => {
            let default_l = kernel_parameters("mc-truncated").map_or(1.0, |ps| ps[0].1);
            let big_l = cfg.kernel.params.get("L").copied().unwrap_or(default_l);
            let (profile, cert) = solve_mc(pot, big_l, &cfg.solver)?;
            let note = format!(
                "slope certificate {}: max |q'| {:.6e} vs √L {:.6e}",
                if cert.passed { "passed" } else { "FAILED" },
                cert.max_slope,
                cert.threshold
            );
            Ok(Solved { profile, slope: Some(cert), note })
        }
        Route::Cauchy => {
            let anchor = cfg.anchor.unwrap_or_else(|| pot.midpoint());
            let profile = solve_cauchy(k, pot, anchor, &cfg.solver)?;
            Ok(Solved { profile, slope: None, note: String::new() })
        }
        Route::Variational => {
            let half_width = cfg.half_width.unwrap_or_else(|| DiscreteAction::default_half_width(pot));
            let d = DiscreteAction::for_potential(pot, half_width, cfg.nodes)?;
            let run = minimize_action(&d, k, pot, &initial_ramp(&d, pot), &cfg.minimize)?;
            let anchor = cfg.anchor.unwrap_or_else(|| pot.midpoint());
            let profile = variational_profile(&d, k, pot, &run.u, anchor)?;
            let note = format!(
                "minimizer: {} iterations, max gradient {:.3e}, action {:.17}{}",
                run.iterations,
                run.grad_norm,
                run.action,
                if run.converged { "" } else { " (not converged)" }
            );
            Ok(Solved { profile, slope: None, note })
        }
    }
}

pub fn cmd_solve(flags: &Common, force_variational: bool) -> Result<u8, Failure> {
    let mut cfg = RunConfig::resolve(flags)?;
    if force_variational {
        cfg.route = Route::Variational;
    }
    let (k, pot) = prepare(&cfg)?;
    let solved = solve(&cfg, &k, &pot)?;
    let mut out = output(cfg.out.as_deref())?;
    if cfg.out.as_deref().is_some_and(is_json) {
        io::write_json(&solved.profile, &mut out)?;
    } else {
        io::write_csv(&solved.profile, &mut out).map_err(write_failed)?;
    }
    out.flush().map_err(write_failed)?;
    let p = &solved.profile;
    let (t0, t1) = p.t_range();
    eprintln!(
        "{} samples on [{t0}, {t1}], max |q'| {:.6e}, max |energy residual| {:.3e}",
        p.len(),
        p.max_slope(),
        p.max_energy_residual()
    );
    if !solved.note.is_empty() {
        eprintln!("{}", solved.note);
    }
    Ok(0)
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<u8, Failure> {
    let cfg = RunConfig::resolve(&args.common)?;
    let (k, pot) = prepare(&cfg)?;
    let path = &args.profile;
    let file = File::open(path).map_err(|e| Failure::config(format!("cannot open {}: {e}", path.display())))?;
    let profile = if is_json(path) {
        io::read_json(BufReader::new(file))?
    } else {
        io::read_csv(BufReader::new(file))?.into_profile(pot.wells(), cfg.route)
    };
    let report = run_all(&profile, &k, &pot, &cfg.verify);
    let mut out = output(cfg.out.as_deref())?;
    serde_json::to_writer_pretty(&mut out, &report).map_err(|e| Failure::config(e.to_string()))?;
    writeln!(out).and_then(|_| out.flush()).map_err(write_failed)?;
    eprint!("{}", report.render_table());
    Ok(if report.passed() { 0 } else { VERIFICATION })
}

#[derive(Debug, Serialize)]
struct Row {
    cell: usize,
    params: BTreeMap<String, f64>,
    ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_slope: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_energy_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    slope_certificate: Option<SlopeCertificate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    verified: Option<bool>,
    checks: Vec<CheckResult>,
}

fn apply(base: &RunConfig, cell: &[(String, f64)]) -> RunConfig {
    let mut cfg = base.clone();
    for (name, v) in cell {
        match name.as_str() {
            "anchor" => cfg.anchor = Some(*v),
            "T" => cfg.half_width = Some(*v),
            "N" => cfg.nodes = *v as usize,
            _ => {
                if cfg.kernel.accepts(name) {
                    cfg.kernel.params.insert(name.clone(), *v);
                }
                if cfg.potential.accepts(name) {
                    cfg.potential.params.insert(name.clone(), *v);
                }
            }
        }
    }
    cfg
}

fn run_cell(index: usize, base: &RunConfig, cell: &[(String, f64)]) -> Row {
    let params = cell.iter().cloned().collect();
    let cfg = apply(base, cell);
    let outcome = prepare(&cfg).and_then(|(k, pot)| {
        let solved = solve(&cfg, &k, &pot)?;
        let report = run_all(&solved.profile, &k, &pot, &cfg.verify);
        Ok((solved, report))
    });
    match outcome {
        Ok((solved, report)) => Row {
            cell: index,
            params,
            ok: true,
            error: None,
            max_slope: Some(solved.profile.max_slope()),
            max_energy_residual: Some(solved.profile.max_energy_residual()),
            slope_certificate: solved.slope,
            verified: Some(report.passed()),
            checks: report.checks,
        },
        Err(f) => Row {
            cell: index,
            params,
            ok: false,
            error: Some(f.message),
            max_slope: None,
            max_energy_residual: None,
            slope_certificate: None,
            verified: None,
            checks: Vec::new(),
        },
    }
}

fn pool() -> Result<rayon::ThreadPool, Failure> {
    let threads = match std::env::var("HETLAB_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| Failure::config(format!("HETLAB_THREADS must be a non-negative integer, got '{v}'")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Failure::config(format!("worker pool: {e}")))
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<u8, Failure> {
    let cfg = RunConfig::resolve(&args.common)?;
    let text = args.grid.clone().or_else(|| cfg.grid.clone()).ok_or_else(|| Failure::config("sweep needs --grid"))?;
    let axes = grid::parse(&text)?;
    for axis in &axes {
        let known = matches!(axis.name.as_str(), "anchor" | "T" | "N")
            || cfg.kernel.accepts(&axis.name)
            || cfg.potential.accepts(&axis.name);
        if !known {
            return Err(Failure::config(format!(
                "grid axis '{}' is not a parameter of kernel '{}' or potential '{}'",
                axis.name, cfg.kernel.kind, cfg.potential.kind
            )));
        }
    }
    let cells = grid::cells(&axes);
    let rows: Vec<Row> =
        pool()?.install(|| cells.par_iter().enumerate().map(|(i, cell)| run_cell(i, &cfg, cell)).collect());
    let mut out = output(cfg.out.as_deref())?;
    for row in &rows {
        serde_json::to_writer(&mut out, row).map_err(|e| Failure::config(e.to_string()))?;
        writeln!(out).map_err(write_failed)?;
    }
    out.flush().map_err(write_failed)?;
    let failed = rows.iter().filter(|r| !r.ok).count();
    let unverified = rows.iter().filter(|r| r.verified == Some(false)).count();
    eprintln!("{} cells: {} solver/config failures, {} failed verification", rows.len(), failed, unverified);
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shared_parameter_names_reach_both_specs() {
        let cfg = apply(&RunConfig::default(), &[("p".into(), 3.0), ("alpha".into(), 2.0)]);
        assert_eq!(cfg.kernel.params["p"], 3.0);
        assert_eq!(cfg.potential.params["p"], 3.0);
        assert_eq!(cfg.potential.params["alpha"], 2.0);
    }

    #[test]
    fn failing_cell_becomes_an_error_row() {
        let row = run_cell(0, &RunConfig::default(), &[("anchor".into(), 1.0)]);
        assert!(!row.ok);
        assert!(row.error.unwrap().contains("stationary"));
    }
}
