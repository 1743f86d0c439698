use clap::Args;
use kramers_core::analytic::{ericson_curve, Variable};
use kramers_core::{Absorption, DistributionCurve};
use serde_json::json;

use super::parse_class;
use crate::error::{CliError, CliResult};
use crate::output::{Run, Table};
use crate::Global;

/// Largest tolerated normalization error of a tabulated density.
const NORMALIZATION_TOLERANCE: f64 = 1e-3;

#[derive(Args)]
pub struct AnalyticArgs {
    /// x, R, r, v, u, R_tilde or r_tilde.
    #[arg(long)]
    pub variable: String,
    /// Comma-separated gamma values.
    #[arg(long, value_delimiter = ',')]
    pub gamma: Vec<f64>,
    /// Comma-separated classes.
    #[arg(long, value_delimiter = ',', default_value = "GSE")]
    pub class: Vec<String>,
    /// Uniform grid `lo:hi:points`; defaults to an adapted grid.
    #[arg(long)]
    pub grid: Option<String>,
    /// Also tabulate the strong-absorption limit (rescaled variables only).
    #[arg(long)]
    pub ericson: bool,
}

fn parse_grid(s: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || CliError::config(format!("grid '{s}' is not lo:hi:points"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].parse().map_err(|_| bad())?;
    let n: usize = parts[2].parse().map_err(|_| bad())?;
    if !(hi > lo) || n < 2 {
        return Err(bad());
    }
    Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect())
}

fn table(curve: &DistributionCurve, title: String, normalization: Option<f64>) -> Table {
    let mut t = Table::new(&title, &[curve.variable.name(), "density"])
        .meta("formula", curve.variable.formula());
    if let Some(n) = normalization {
        t = t.meta("normalization", n);
    }
    t = t.meta("trapezoid_on_grid", curve.trapezoid_integral());
    for (x, p) in curve.grid.iter().zip(&curve.density) {
        t.row(&[*x, *p]);
    }
    t
}

pub fn run(g: &Global, a: &AnalyticArgs) -> CliResult<()> {
    let variable = Variable::parse(&a.variable)?;
    let classes = a.class.iter().map(|c| parse_class(c)).collect::<CliResult<Vec<_>>>()?;
    if a.gamma.is_empty() && !a.ericson {
        return Err(CliError::config("give --gamma values and/or --ericson"));
    }
    let explicit = a.grid.as_deref().map(parse_grid).transpose()?;
    let mut run = Run::start(
        &g.out,
        "analytic",
        json!({"variable": variable.name(), "gamma": a.gamma, "class": classes, "grid": a.grid, "ericson": a.ericson}),
        None,
    )?;

    let mut bad = Vec::new();
    let mut norms = serde_json::Map::new();
    for &gamma in &a.gamma {
        let mut curves = Vec::new();
        for &class in &classes {
            let p = Absorption::new(gamma, class)?;
            let grid = match &explicit {
                Some(gr) => gr.clone(),
                // shared grid so curves of different classes are comparable
                None => Absorption::new(gamma, classes[0])?.default_grid(variable),
            };
            let curve = p.curve(variable, grid);
            let n = p.normalization(variable)?;
            if (n - 1.0).abs() > NORMALIZATION_TOLERANCE {
                bad.push(format!("{class} gamma {gamma}: {n}"));
            }
            norms.insert(format!("{class}_gamma_{gamma}"), json!(n));
            let name = format!("analytic_{}_{}_gamma_{}.txt", variable.name(), class, gamma);
            run.write(&name, &table(&curve, format!("{} density, {class}, gamma {gamma}", variable.name()), Some(n)))?;
            curves.push((class, curve));
        }
        for i in 0..curves.len() {
            for j in (i + 1)..curves.len() {
                let d = curves[i].1.max_abs_difference(&curves[j].1)?;
                let key = format!("sup_distance_{}_{}_gamma_{gamma}", curves[i].0, curves[j].0);
                println!("{key} = {d:e}");
                run.derive(&key, d);
            }
        }
    }
    run.derive("normalization", norms);

    if a.ericson {
        let grid = explicit.clone().unwrap_or_else(|| {
            let hi = if variable == Variable::RescaledReflection { 12.0 } else { 5.0 };
            (0..2001).map(|i| hi * i as f64 / 2000.0).collect()
        });
        let curve = ericson_curve(variable, grid)?;
        run.write(
            &format!("ericson_{}.txt", variable.name()),
            &table(&curve, format!("{} strong-absorption limit", variable.name()), None),
        )?;
    }
    run.finish()?;
    println!("outputs in {}", g.out.display());
    if !bad.is_empty() {
        return Err(CliError::check(format!("normalization off by more than {NORMALIZATION_TOLERANCE}: {}", bad.join(", "))));
    }
    Ok(())
}
