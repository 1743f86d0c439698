use std::path::PathBuf;

use clap::{Args, ValueEnum};
use kramers_core::analytic::{fit_gamma, FitMethod, FitOptions, FitQuantity};
use serde_json::json;

use super::{parse_class, read_column};
use crate::error::CliResult;
use crate::output::Run;
use crate::Global;

#[derive(Clone, Copy, ValueEnum)]
pub enum Quantity {
    /// Reflection coefficients R.
    R,
    /// Amplitudes r = sqrt(R).
    Amplitude,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Method {
    Mean,
    Curve,
}

#[derive(Args)]
pub struct FitArgs {
    /// Whitespace table of samples; `#` lines are skipped.
    #[arg(long)]
    pub input: PathBuf,
    /// Zero-based column holding the samples.
    #[arg(long, default_value_t = 0)]
    pub column: usize,
    #[arg(long, default_value = "GSE")]
    pub class: String,
    #[arg(long, value_enum, default_value_t = Quantity::R)]
    pub quantity: Quantity,
    #[arg(long, value_enum, default_value_t = Method::Mean)]
    pub method: Method,
    /// Bootstrap resamples for the error estimate.
    #[arg(long, default_value_t = 200)]
    pub bootstrap: usize,
    /// Write a manifest to --out.
    #[arg(long)]
    pub save: bool,
}

pub fn run(g: &Global, a: &FitArgs) -> CliResult<()> {
    let class = parse_class(&a.class)?;
    let samples = read_column(&a.input, a.column)?;
    let quantity = match a.quantity {
        Quantity::R => FitQuantity::Reflection,
        Quantity::Amplitude => FitQuantity::Amplitude,
    };
    let options = FitOptions {
        method: match a.method {
            Method::Mean => FitMethod::Mean,
            Method::Curve => FitMethod::Curve,
        },
        bootstrap: a.bootstrap,
        seed: g.seed.unwrap_or(FitOptions::default().seed),
    };
    let fit = fit_gamma(&samples, quantity, class, options)?;
    println!(
        "gamma = {:.4} +- {:.4} ({:?} fit of {:?}, {} samples)",
        fit.gamma, fit.std_error, fit.method, fit.quantity, fit.samples
    );
    if a.save {
        let mut run = Run::start(
            &g.out,
            "fit-gamma",
            json!({"input": a.input, "column": a.column, "class": class, "bootstrap": a.bootstrap}),
            Some(options.seed),
        )?;
        run.derive("fit", fit);
        run.finish()?;
    }
    Ok(())
}
