//! Command-line surface and the JSON run configuration behind it.
//!
//! Precedence is flags, then the `--config` file, then built-in defaults.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use hetlab::{KernelSpec, MinimizeOptions, PotentialSpec, Route, SolverConfig, VerifyOptions};
use serde::{Deserialize, Serialize};

use crate::failure::Failure;

#[derive(Parser, Debug)]
#[command(name = "hetlab", version, about = "Heteroclinic profiles of quasilinear double-well equations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Compute a profile and write it as CSV (default) or JSON.
    Solve(Common),
    /// Same as `solve --route variational`.
    Minimize(Common),
    /// Check a saved profile and write the verification report.
    Verify(VerifyArgs),
    /// Solve every cell of a parameter grid; one JSON row per cell.
    Sweep(SweepArgs),
}

#[derive(Args, Debug, Default, Clone)]
pub struct Common {
    /// JSON run configuration; flags take precedence over it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Kernel as `kind:name=value,...` or a JSON object.
    #[arg(long)]
    pub kernel: Option<String>,
    /// Potential as `kind:name=value,...` or a JSON object.
    #[arg(long)]
    pub potential: Option<String>,
    /// Value of q(0); defaults to the midpoint of the wells.
    #[arg(long, allow_hyphen_values = true)]
    pub anchor: Option<f64>,
    #[arg(long = "t-max")]
    pub t_max: Option<f64>,
    /// Integrator relative tolerance, and gradient tolerance of the variational route.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Half-width of the variational window.
    #[arg(long = "T")]
    pub half_width: Option<f64>,
    /// Node count of the variational grid.
    #[arg(long = "N")]
    pub nodes: Option<usize>,
    #[arg(long, value_parser = parse_route)]
    pub route: Option<Route>,
    /// Output file; `.json` selects JSON, anything else CSV. Stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Profile to check (`.json` or CSV).
    pub profile: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Axes separated by `;`, each `name=v1,v2,...` or `name=start..end:step`.
    #[arg(long)]
    pub grid: Option<String>,
    #[command(flatten)]
    pub common: Common,
}

pub fn parse_route(s: &str) -> Result<Route, String> {
    match s {
        "cauchy" => Ok(Route::Cauchy),
        "variational" => Ok(Route::Variational),
        other => Err(format!("unknown route '{other}' (expected cauchy or variational)")),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub kernel: KernelSpec,
    pub potential: PotentialSpec,
    pub route: Route,
    pub anchor: Option<f64>,
    pub solver: SolverConfig,
    pub minimize: MinimizeOptions,
    pub verify: VerifyOptions,
    #[serde(rename = "T")]
    pub half_width: Option<f64>,
    #[serde(rename = "N")]
    pub nodes: usize,
    pub out: Option<PathBuf>,
    pub grid: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            kernel: KernelSpec::new("p-power", &[("p", 2.0)]),
            potential: PotentialSpec::new("p-dw", &[("p", 2.0), ("alpha", 1.0)]),
            route: Route::Cauchy,
            anchor: None,
            solver: SolverConfig::default(),
            minimize: MinimizeOptions::default(),
            verify: VerifyOptions::default(),
            half_width: None,
            nodes: 4001,
            out: None,
            grid: None,
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Failure::config(format!("config {}: {e}", path.display())))
    }

    /// Defaults, overlaid by the config file, overlaid by flags.
    pub fn resolve(flags: &Common) -> Result<Self, Failure> {
        let mut cfg = match &flags.config {
            Some(path) => Self::from_file(path)?,
            None => Self::default(),
        };
        if let Some(k) = &flags.kernel {
            cfg.kernel = k.parse().map_err(Failure::from)?;
        }
        if let Some(p) = &flags.potential {
            cfg.potential = p.parse().map_err(Failure::from)?;
        }
        if let Some(r) = flags.route {
            cfg.route = r;
        }
        if flags.anchor.is_some() {
            cfg.anchor = flags.anchor;
        }
        if flags.t_max.is_some() {
            cfg.solver.t_max = flags.t_max;
        }
        if let Some(tol) = flags.tol {
            cfg.solver.rel_tol = tol;
            cfg.minimize.gtol = tol;
        }
        if flags.half_width.is_some() {
            cfg.half_width = flags.half_width;
        }
        if let Some(n) = flags.nodes {
            cfg.nodes = n;
        }
        if flags.out.is_some() {
            cfg.out.clone_from(&flags.out);
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn flags_override_file_overrides_defaults() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        write!(
            file,
            r#"{{"potential": {{"kind": "quartic", "params": {{"alpha": 0.5}}}}, "N": 101, "solver": {{"rel_tol": 1e-9}}}}"#
        )
        .unwrap();
        let flags = Common { config: Some(file.path().into()), nodes: Some(201), ..Default::default() };
        let cfg = RunConfig::resolve(&flags).unwrap();
        assert_eq!(cfg.potential, PotentialSpec::new("quartic", &[("alpha", 0.5)]));
        assert_eq!(cfg.nodes, 201);
        assert_eq!(cfg.solver.rel_tol, 1e-9);
        assert_eq!(cfg.kernel, RunConfig::default().kernel);
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        write!(file, r#"{{"kernal": "p-power"}}"#).unwrap();
        let flags = Common { config: Some(file.path().into()), ..Default::default() };
        assert_eq!(RunConfig::resolve(&flags).unwrap_err().code, 1);
    }

    #[test]
    fn shorthand_and_json_specs_agree() {
        let a = Common { kernel: Some("mixed:p=2,q=4".into()), ..Default::default() };
        let b = Common { kernel: Some(r#"{"kind":"mixed","params":{"p":2,"q":4}}"#.into()), ..Default::default() };
        assert_eq!(RunConfig::resolve(&a).unwrap().kernel, RunConfig::resolve(&b).unwrap().kernel);
    }

    #[test]
    fn route_names() {
        assert_eq!(parse_route("variational"), Ok(Route::Variational));
        assert!(parse_route("shooting").is_err());
    }
}
