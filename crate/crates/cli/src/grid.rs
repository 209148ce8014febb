//! Sweep grids: `alpha=0.05..0.4:0.05;L=1` or `p=1.5,2,3`.

use crate::failure::Failure;

const MAX_CELLS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub name: String,
    pub values: Vec<f64>,
}

fn number(s: &str) -> Result<f64, Failure> {
    let v: f64 = s.trim().parse().map_err(|_| Failure::config(format!("bad grid value '{}'", s.trim())))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Failure::config(format!("grid value '{}' is not finite", s.trim())))
    }
}

fn values(spec: &str) -> Result<Vec<f64>, Failure> {
    if let Some((range, step)) = spec.split_once(':') {
        let (start, end) = range
            .split_once("..")
            .ok_or_else(|| Failure::config(format!("expected start..end:step, got '{spec}'")))?;
        let (start, end, step) = (number(start)?, number(end)?, number(step)?);
        if step <= 0.0 || end < start {
            return Err(Failure::config(format!("range '{spec}' needs step > 0 and end ≥ start")));
        }
        // the end point counts when it is hit up to rounding
        let n = ((end - start) / step * (1.0 + 1e-12)).floor() as usize + 1;
        if n > MAX_CELLS {
            return Err(Failure::config(format!("range '{spec}' has too many points")));
        }
        // trim the rounding noise of start + i·step to 12 significant digits
        let tidy = |x: f64| format!("{x:.11e}").parse::<f64>().unwrap_or(x);
        return Ok((0..n).map(|i| tidy(start + step * i as f64)).collect());
    }
    spec.split(',').filter(|v| !v.trim().is_empty()).map(number).collect()
}

pub fn parse(text: &str) -> Result<Vec<Axis>, Failure> {
    let mut axes: Vec<Axis> = Vec::new();
    for part in text.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let (name, spec) =
            part.split_once('=').ok_or_else(|| Failure::config(format!("expected name=values, got '{part}'")))?;
        let name = name.trim().to_string();
        if axes.iter().any(|a| a.name == name) {
            return Err(Failure::config(format!("grid axis '{name}' given twice")));
        }
        let values = values(spec)?;
        if values.is_empty() {
            return Err(Failure::config(format!("grid axis '{name}' is empty")));
        }
        axes.push(Axis { name, values });
    }
    if axes.is_empty() {
        return Err(Failure::config("empty grid"));
    }
    let cells = axes.iter().try_fold(1usize, |n, a| n.checked_mul(a.values.len()));
    if cells.is_none_or(|n| n > MAX_CELLS) {
        return Err(Failure::config("grid has too many cells"));
    }
    Ok(axes)
}

/// Cartesian product, first axis varying slowest.
pub fn cells(axes: &[Axis]) -> Vec<Vec<(String, f64)>> {
    axes.iter().fold(vec![Vec::new()], |acc, axis| {
        acc.iter()
            .flat_map(|prefix| {
                axis.values.iter().map(move |&v| {
                    let mut cell = prefix.clone();
                    cell.push((axis.name.clone(), v));
                    cell
                })
            })
            .collect()
    })
}
