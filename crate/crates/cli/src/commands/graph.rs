use clap::Args;
use kramers_core::graph::{secular_spectrum, wavenumber_to_ghz, ScanOptions};
use kramers_core::rng::stream;
use kramers_core::stats::{nnsd, number_variance, wigner_surmise};
use kramers_core::{GraphSpec, SymmetryClass};
use serde_json::json;

use super::{histogram_table, read_config};
use crate::error::{CliError, CliResult};
use crate::output::{Run, Table};
use crate::Global;

#[derive(Args)]
pub struct GraphArgs {
    /// Lower end of the wavenumber range (rad/m).
    #[arg(long, default_value_t = 0.5)]
    pub k_min: f64,
    /// Upper end of the wavenumber range (rad/m).
    #[arg(long, default_value_t = 1700.0)]
    pub k_max: f64,
    /// Scan points per mean level spacing.
    #[arg(long, default_value_t = 20)]
    pub points_per_spacing: usize,
    /// Spacing histogram bins on [0, 3].
    #[arg(long, default_value_t = 30)]
    pub bins: usize,
}

pub fn run(g: &Global, a: &GraphArgs) -> CliResult<()> {
    let path = g
        .config
        .as_ref()
        .ok_or_else(|| CliError::config("graph-spectrum needs --config <graph spec>"))?;
    let spec = GraphSpec::from_toml(&read_config(path)?)
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let seed = g.seed.unwrap_or(0);
    let opts = ScanOptions {
        points_per_spacing: a.points_per_spacing,
        ..ScanOptions::default()
    };
    let config = json!({
        "spec": spec,
        "k_min": a.k_min,
        "k_max": a.k_max,
        "points_per_spacing": a.points_per_spacing,
        "bins": a.bins,
    });
    let mut run = Run::start(&g.out, "graph-spectrum", config, Some(seed))?;
    let sp = secular_spectrum(&spec, a.k_min, a.k_max, opts)?;
    let s = &sp.sample;

    let mut raw = Table::new("graph eigen-wavenumbers, every root (doublets listed twice)", &["k", "nu_ghz"])
        .meta("total_length_m", sp.total_length);
    for &k in &s.raw_levels {
        raw.row(&[k, wavenumber_to_ghz(k)]);
    }
    run.write("raw_levels.txt", &raw)?;

    let mut levels = Table::new("collapsed levels with Weyl unfolding", &["k", "nu_ghz", "unfolded"])
        .meta("symmetry", format!("{:?}", spec.symmetry));
    for (&k, &e) in s.collapsed_levels.iter().zip(&s.unfolded) {
        levels.row(&[k, wavenumber_to_ghz(k), e]);
    }
    run.write("levels.txt", &levels)?;

    run.derive("roots", s.raw_levels.len());
    run.derive("levels", s.collapsed_levels.len());
    run.derive("max_splitting", s.max_splitting);
    run.derive("flagged_doublets", sp.flagged_doublets);
    run.derive("skipped_scan_points", sp.skipped_points);

    if s.unfolded.len() >= 3 {
        let mean = (s.unfolded[s.unfolded.len() - 1] - s.unfolded[0]) / (s.unfolded.len() - 1) as f64;
        run.derive("unfolded_mean_spacing", mean);
        let nn = nnsd(&[s.unfolded.clone()], a.bins, Some((0.0, 3.0)))?;
        let gse = |x: f64| wigner_surmise(SymmetryClass::Gse, x);
        let gue = |x: f64| wigner_surmise(SymmetryClass::Gue, x);
        let l2_gse = nn.histogram.l2_distance(gse, 0.0, 3.0);
        let l2_gue = nn.histogram.l2_distance(gue, 0.0, 3.0);
        let table = histogram_table(
            "nearest-neighbor spacing distribution of unfolded levels",
            &nn.spacings,
            a.bins,
            Some((0.0, 3.0)),
            &[("gse_surmise", &gse), ("gue_surmise", &gue)],
        )?;
        run.write("nnsd.txt", &table)?;
        run.derive("nnsd_l2_gse", l2_gse);
        run.derive("nnsd_l2_gue", l2_gue);
        run.derive("closer_to", if l2_gse < l2_gue { "GSE" } else { "GUE" });

        let lengths: Vec<f64> = (1..=20).map(|i| 0.25 * i as f64).collect();
        let nv = number_variance(&[s.unfolded.clone()], &lengths, &mut stream(seed, 0))?;
        let mut t = Table::new("number variance of unfolded levels", &["L", "sigma2", "std_error"]);
        for ((l, v), e) in nv.curve.abscissa.iter().zip(&nv.curve.values).zip(&nv.curve.std_errors) {
            t.row(&[*l, *v, *e]);
        }
        run.write("number_variance.txt", &t)?;
    }
    let m = run.finish()?;
    println!(
        "{} roots, {} levels; outputs in {}",
        s.raw_levels.len(),
        s.collapsed_levels.len(),
        g.out.display()
    );
    if let (Some(a), Some(b)) = (m.derived.get("nnsd_l2_gse"), m.derived.get("nnsd_l2_gue")) {
        println!("NNSD L2 distance: GSE {a}, GUE {b}");
    }
    Ok(())
}
