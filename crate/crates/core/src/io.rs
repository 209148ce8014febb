//! CSV and JSON export of profiles.

use std::io::{BufRead, Write};

use crate::cauchy::{HeteroclinicProfile, Route};
use crate::error::{Error, Result};
use crate::scalar::{to_f64, Real};

pub const CSV_HEADER: &str = "t,q,qprime,energy_residual";

/// Writes one row per sample with 17 significant digits.
pub fn write_csv<T: Real, W: Write>(profile: &HeteroclinicProfile<T>, mut w: W) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for i in 0..profile.len() {
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{:.16e}",
            to_f64(profile.t[i]),
            to_f64(profile.q[i]),
            to_f64(profile.q_prime[i]),
            to_f64(profile.energy_residual[i])
        )?;
    }
    Ok(())
}

/// Columns of a profile CSV.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CsvColumns {
    pub t: Vec<f64>,
    pub q: Vec<f64>,
    pub q_prime: Vec<f64>,
    pub energy_residual: Vec<f64>,
}

impl CsvColumns {
    /// Attaches the wells and route the CSV does not record.
    pub fn into_profile(self, wells: (f64, f64), route: Route) -> HeteroclinicProfile<f64> {
        let anchor = self.t.iter().position(|t| *t == 0.0).map(|i| self.q[i]).unwrap_or((wells.0 + wells.1) / 2.0);
        HeteroclinicProfile {
            t: self.t,
            q: self.q,
            q_prime: self.q_prime,
            energy_residual: self.energy_residual,
            well_low: wells.0,
            well_high: wells.1,
            route,
            anchor,
            normalization_shift: 0.0,
            raw_steps: Vec::new(),
        }
    }
}

pub fn read_csv<R: BufRead>(r: R) -> Result<CsvColumns> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Config("empty profile CSV".into()))?
        .map_err(|e| Error::Config(e.to_string()))?;
    if header.trim() != CSV_HEADER {
        return Err(Error::Config(format!("unexpected CSV header '{}'", header.trim())));
    }
    let mut cols = CsvColumns::default();
    for (n, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::Config(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let vals: std::result::Result<Vec<f64>, _> = line.split(',').map(|x| x.trim().parse::<f64>()).collect();
        match vals {
            Ok(v) if v.len() == 4 => {
                cols.t.push(v[0]);
                cols.q.push(v[1]);
                cols.q_prime.push(v[2]);
                cols.energy_residual.push(v[3]);
            }
            _ => return Err(Error::Config(format!("malformed CSV row {}: '{line}'", n + 2))),
        }
    }
    Ok(cols)
}

pub fn write_json<W: Write>(profile: &HeteroclinicProfile<f64>, w: W) -> Result<()> {
    serde_json::to_writer(w, profile).map_err(|e| Error::Config(format!("profile JSON: {e}")))
}

pub fn read_json<R: std::io::Read>(r: R) -> Result<HeteroclinicProfile<f64>> {
    serde_json::from_reader(r).map_err(|e| Error::Config(format!("profile JSON: {e}")))
}
