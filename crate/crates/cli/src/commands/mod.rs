pub mod analytic;
pub mod compare;
pub mod fit;
pub mod graph;
pub mod scattering;

use std::fs;
use std::path::Path;

use kramers_core::analytic::Variable;
use kramers_core::stats::{ks_distance, Histogram};
use kramers_core::{Absorption, SymmetryClass};

use crate::error::{CliError, CliResult};
use crate::output::Table;

pub fn read_config(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))
}

pub fn parse_class(s: &str) -> CliResult<SymmetryClass> {
    Ok(SymmetryClass::parse(s)?)
}

/// Numbers in column `column` of a whitespace table, skipping `#` lines.
pub fn read_column(path: &Path, column: usize) -> CliResult<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let field = line.split_whitespace().nth(column).ok_or_else(|| {
            CliError::config(format!("{}:{}: no column {column}", path.display(), i + 1))
        })?;
        let v: f64 = field
            .parse()
            .map_err(|_| CliError::config(format!("{}:{}: '{field}' is not a number", path.display(), i + 1)))?;
        out.push(v);
    }
    if out.is_empty() {
        return Err(CliError::config(format!("{} holds no samples", path.display())));
    }
    Ok(out)
}

/// Histogram normalized over all samples (not only the in-range ones),
/// tabulated next to reference densities.
pub fn histogram_table(
    title: &str,
    samples: &[f64],
    bins: usize,
    range: Option<(f64, f64)>,
    references: &[(&str, &dyn Fn(f64) -> f64)],
) -> CliResult<Table> {
    let h = Histogram::from_samples(samples, bins, range)?;
    let share = h.samples as f64 / samples.len() as f64;
    let mut cols = vec!["lo", "hi", "density", "std_error"];
    cols.extend(references.iter().map(|r| r.0));
    let mut t = Table::new(title, &cols)
        .meta("samples", samples.len())
        .meta("out_of_range", h.out_of_range);
    for ((e, d), err) in h.edges().windows(2).zip(h.densities()).zip(h.density_errors()) {
        let mut row = vec![e[0], e[1], d * share, err * share];
        let mid = 0.5 * (e[0] + e[1]);
        row.extend(references.iter().map(|r| (r.1)(mid)));
        t.row(&row);
    }
    Ok(t)
}

/// KS distance of `samples` against the analytic density of `variable`.
pub fn ks_vs(samples: &[f64], p: &Absorption, variable: Variable) -> CliResult<f64> {
    let cdf = p.reference_cdf(variable, 4000)?;
    Ok(ks_distance(samples, &cdf)?)
}
