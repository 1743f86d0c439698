use std::path::PathBuf;

use clap::Args;
use kramers_core::analytic::Variable;
use kramers_core::{Absorption, SymmetryClass};
use serde_json::json;

use super::{ks_vs, parse_class, read_column};
use crate::error::{CliError, CliResult};
use crate::output::Run;
use crate::Global;

#[derive(Args)]
pub struct CompareArgs {
    /// `records.txt` written by the scattering command.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub gamma: f64,
    /// Class the data are expected to follow.
    #[arg(long, default_value = "GSE")]
    pub class: String,
    /// Largest acceptable KS distance against the expected class.
    #[arg(long, default_value_t = 0.03)]
    pub threshold: f64,
}

pub fn run(g: &Global, a: &CompareArgs) -> CliResult<()> {
    let expected = parse_class(&a.class)?;
    if expected == SymmetryClass::Goe {
        return Err(CliError::config("compare supports GSE and GUE"));
    }
    let columns = [("R", 4, Variable::Reflection), ("u", 5, Variable::ReK), ("v", 6, Variable::ImK)];
    let mut run = Run::start(
        &g.out,
        "compare",
        json!({"input": a.input, "gamma": a.gamma, "class": expected, "threshold": a.threshold}),
        None,
    )?;
    let mut failures = Vec::new();
    println!("{:<4} {:>10} {:>10}", "var", "KS GSE", "KS GUE");
    let gse = Absorption::gse(a.gamma)?;
    let gue = Absorption::gue(a.gamma)?;
    for (name, col, var) in columns {
        let samples = read_column(&a.input, col)?;
        let d_gse = ks_vs(&samples, &gse, var)?;
        let d_gue = ks_vs(&samples, &gue, var)?;
        println!("{name:<4} {d_gse:>10.5} {d_gue:>10.5}");
        let own = if expected == SymmetryClass::Gse { d_gse } else { d_gue };
        if own > a.threshold {
            failures.push(format!("{name}: KS {own:.4} > {}", a.threshold));
        }
        run.derive(&format!("ks_{name}"), json!({"GSE": d_gse, "GUE": d_gue}));
    }
    run.derive("pass", failures.is_empty());
    run.finish()?;
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::check(failures.join("; ")))
    }
}
