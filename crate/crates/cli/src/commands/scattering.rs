use clap::Args;
use kramers_core::analytic::{ericson_density, fit_gamma, FitOptions, FitQuantity, Variable};
use kramers_core::scattering::{
    autocorrelation, calibrate_tau_abs, AbsorptionTarget, PreparedEnsemble, ScatteringConfig,
};
use kramers_core::{Absorption, Error, ScatteringEnsemble};
use log::warn;
use serde_json::json;

use super::{histogram_table, ks_vs, parse_class, read_config};
use crate::error::{CliError, CliResult};
use crate::output::{Run, Table};
use crate::Global;

#[derive(Args)]
pub struct ScatteringArgs {
    /// Calibrate absorption to this gamma.
    #[arg(long, conflicts_with = "tau_abs")]
    pub gamma: Option<f64>,
    /// Use this absorption parameter directly.
    #[arg(long)]
    pub tau_abs: Option<f64>,
    /// Symmetry class (GSE or GUE).
    #[arg(long)]
    pub class: Option<String>,
    #[arg(long)]
    pub realizations: Option<usize>,
    #[arg(long)]
    pub energies: Option<usize>,
    /// Fictitious channel count.
    #[arg(long)]
    pub lambda: Option<usize>,
    /// Largest correlation offset in grid steps.
    #[arg(long, default_value_t = 10)]
    pub max_lag: usize,
    #[arg(long, default_value_t = 40)]
    pub bins: usize,
}

fn configure(g: &Global, a: &ScatteringArgs) -> CliResult<ScatteringConfig> {
    let mut cfg = match &g.config {
        Some(p) => ScatteringConfig::from_toml(&read_config(p)?)
            .map_err(|e| CliError::config(format!("{}: {e}", p.display())))?,
        None => ScatteringConfig::default(),
    };
    if let Some(c) = &a.class {
        cfg.class = parse_class(c)?;
    }
    if let Some(gamma) = a.gamma {
        cfg.gamma = Some(gamma);
        cfg.tau_abs = None;
    }
    if let Some(t) = a.tau_abs {
        cfg.tau_abs = Some(t);
        cfg.gamma = None;
    }
    if let Some(n) = a.realizations {
        cfg.realizations = n;
    }
    if let Some(n) = a.energies {
        cfg.energies = n;
    }
    if let Some(l) = a.lambda {
        cfg.lambda = l;
    }
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(g: &Global, a: &ScatteringArgs) -> CliResult<()> {
    let cfg = configure(g, a)?;
    let mut run = Run::start(&g.out, "scattering", json!(cfg), Some(cfg.seed))?;

    let ens: ScatteringEnsemble = match cfg.target()? {
        AbsorptionTarget::Gamma(gamma) => {
            let (prepared, cal) = calibrate_tau_abs(gamma, &cfg)?;
            run.derive("calibration", cal);
            prepared.evaluate(cal.t_f, Some(gamma))?
        }
        AbsorptionTarget::TauAbs(tau) => {
            let t_f = if tau == 0.0 { 0.0 } else { tau / (2.0 * cfg.lambda as f64) };
            PreparedEnsemble::prepare(&cfg, cfg.lambda)?.evaluate(t_f, None)?
        }
    };
    run.derive("lambda", ens.lambda);
    run.derive("t_f", ens.t_f);
    run.derive("tau_abs", ens.tau_abs);
    run.derive("records", ens.records.len());
    run.derive("failures", ens.failures);
    run.derive("kramers_deviation", ens.kramers_deviation);
    run.derive("mean_reflection", ens.mean_reflection());
    run.derive("mean_spacing", ens.mean_spacing);

    let mut records = Table::new(
        "scattering ensemble records",
        &["realization", "e", "re_s", "im_s", "R", "u", "v", "x"],
    )
    .meta("class", cfg.class)
    .meta("tau_abs", ens.tau_abs);
    for r in &ens.records {
        records.row(&[r.realization as f64, r.e, r.s_re, r.s_im, r.reflection, r.u, r.v, r.x]);
    }
    run.write("records.txt", &records)?;

    // analytic reference: calibrated gamma, else one fitted from <R>
    let gamma = match ens.gamma {
        Some(gm) => Some(gm),
        None if ens.tau_abs > 0.0 => {
            match fit_gamma(&ens.reflections(), FitQuantity::Reflection, cfg.class, FitOptions::default()) {
                Ok(fit) => {
                    run.derive("fitted_gamma", fit);
                    Some(fit.gamma)
                }
                Err(e) => {
                    warn!("no gamma could be fitted: {e}");
                    None
                }
            }
        }
        None => None,
    };
    let reference = gamma.map(|gm| Absorption::new(gm, cfg.class)).transpose()?;
    let density = |var: Variable| {
        let r = reference.clone();
        move |x: f64| r.as_ref().map_or(f64::NAN, |p| p.density(var, x))
    };

    let rt = ens.rescaled_reflections();
    let at = ens.rescaled_amplitudes();
    let v = ens.im_k();
    let u = ens.re_k();
    let (p_rt, p_at, p_v, p_u) = (
        density(Variable::RescaledReflection),
        density(Variable::RescaledAmplitude),
        density(Variable::ImK),
        density(Variable::ReK),
    );
    let e_rt = |x: f64| ericson_density(Variable::RescaledReflection, x).unwrap_or(f64::NAN);
    let e_at = |x: f64| ericson_density(Variable::RescaledAmplitude, x).unwrap_or(f64::NAN);
    let hist = [
        ("hist_R_tilde.txt", "rescaled reflection R/<R>", &rt, Some((0.0, 6.0)), &p_rt as &dyn Fn(f64) -> f64, Some(&e_rt as &dyn Fn(f64) -> f64)),
        ("hist_r_tilde.txt", "rescaled amplitude r/<r>", &at, Some((0.0, 3.5)), &p_at, Some(&e_at)),
        ("hist_v.txt", "v = -Im K", &v, Some((0.0, 10.0)), &p_v, None),
        ("hist_u.txt", "u = Re K", &u, Some((-5.0, 5.0)), &p_u, None),
    ];
    for (file, title, samples, range, analytic, ericson) in hist {
        let mut refs: Vec<(&str, &dyn Fn(f64) -> f64)> = vec![("analytic", analytic)];
        if let Some(e) = ericson {
            refs.push(("ericson", e));
        }
        let t = histogram_table(title, samples, a.bins, range, &refs)?;
        run.write(file, &t)?;
    }

    if let Some(p) = &reference {
        let mut ks = serde_json::Map::new();
        for (name, samples, var) in [
            ("R", ens.reflections(), Variable::Reflection),
            ("v", v.clone(), Variable::ImK),
            ("u", u.clone(), Variable::ReK),
            ("R_tilde", rt.clone(), Variable::RescaledReflection),
        ] {
            ks.insert(name.into(), json!(ks_vs(&samples, p, var)?));
        }
        let ericson = kramers_core::stats::ks_distance_with(&rt, |x| 1.0 - (-x.max(0.0)).exp())?;
        ks.insert("R_tilde_vs_ericson".into(), json!(ericson));
        println!("KS vs analytic: {}", serde_json::Value::Object(ks.clone()));
        run.derive("ks", ks);
    }

    let lags: Vec<usize> = (0..=a.max_lag.min(cfg.energies.saturating_sub(1))).collect();
    match autocorrelation(&ens, &lags) {
        Ok(c) => {
            let mut t = Table::new(
                "two-point S correlation versus energy offset",
                &["lag", "epsilon", "re_c", "im_c", "abs_c", "abs_c_std_error"],
            );
            for i in 0..c.lags.len() {
                t.row(&[c.lags[i] as f64, c.epsilon[i], c.re[i], c.im[i], c.modulus[i], c.modulus_se[i]]);
            }
            run.write("correlation.txt", &t)?;
        }
        Err(Error::DegenerateEnsemble(m)) => warn!("correlation skipped: {m}"),
        Err(e) => return Err(e.into()),
    }
    run.finish()?;
    println!(
        "{} records, <R> = {:.6}, tau_abs = {:.4}; outputs in {}",
        ens.records.len(),
        ens.mean_reflection(),
        ens.tau_abs,
        g.out.display()
    );
    Ok(())
}
