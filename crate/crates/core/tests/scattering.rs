use std::f64::consts::PI;

use kramers_core::analytic::Absorption;
use kramers_core::linalg::{max_abs, CMatrix};
use kramers_core::rmt::{sample_gse, time_reverse};
use kramers_core::rng::stream;
use kramers_core::scattering::*;
use kramers_core::{Error, SymmetryClass};
use num_complex::Complex64;

fn small(class: SymmetryClass) -> ScatteringConfig {
    ScatteringConfig {
        class,
        n: 24,
        lambda: 4,
        realizations: 6,
        energies: 7,
        seed: 99,
        ..ScatteringConfig::default()
    }
}

#[test]
fn transmission_limits_and_round_trip() {
    assert_eq!(transmission(0.0, 1.3).unwrap(), 0.0);
    let d = 0.7;
    let critical = (d / (PI * PI)).sqrt();
    assert!((transmission(critical, d).unwrap() - 1.0).abs() < 1e-15);
    for t in [0.25, 0.5, 0.95] {
        let w = inverse_transmission(t, d).unwrap();
        assert!((transmission(w, d).unwrap() - t).abs() < 1e-12);
        // sub-critical branch
        assert!(PI * PI * w * w / d <= 1.0);
    }
    assert!((inverse_transmission(1.0, d).unwrap() - critical).abs() < 1e-15);
    assert!(inverse_transmission(1e-12, d).unwrap() < 1e-6);
    assert!(transmission(1.0, 0.0).is_err());
    for bad in [0.0, -0.1, 1.5] {
        assert!(inverse_transmission(bad, d).is_err());
    }
}

fn coupling_spec(lambda: usize, t_f: f64) -> CouplingSpec {
    CouplingSpec {
        n: 30,
        open_transmissions: vec![0.95],
        lambda,
        t_f,
        d: 0.4,
    }
}

#[test]
fn gse_coupling_columns_are_orthogonal_kramers_pairs() {
    let spec = coupling_spec(5, 0.3);
    let c = build_coupling(SymmetryClass::Gse, &spec, &mut stream(1, 0)).unwrap();
    assert_eq!((c.w.nrows(), c.w.ncols()), (60, 12));
    assert_eq!(c.open_columns, 2);
    let gram = c.w.adjoint() * &c.w;
    let max_norm = c.column_norms.iter().cloned().fold(0.0, f64::max);
    // squared norm for transmission t: 2·n·d·y/π with y the sub-critical strength
    let target = |t: f64| 2.0 * 30.0 * 0.4 * (t / (1.0 + (1.0 - t).sqrt()).powi(2)) / PI;
    for i in 0..12 {
        let expected = if i < 2 { target(0.95) } else { target(0.3) };
        assert!((gram[(i, i)].re - expected).abs() <= 1e-10 * expected);
        for j in 0..12 {
            if i != j {
                assert!(gram[(i, j)].norm() <= 1e-10 * max_norm);
            }
        }
    }
    for p in 0..6 {
        let partner = time_reverse(&c.w.column(2 * p).into_owned());
        assert!((partner - c.w.column(2 * p + 1)).norm() < 1e-12);
    }
    let bare = build_coupling(SymmetryClass::Gse, &coupling_spec(0, 0.0), &mut stream(1, 1)).unwrap();
    assert_eq!(bare.w.ncols(), 2);
    let gue = build_coupling(SymmetryClass::Gue, &coupling_spec(5, 0.3), &mut stream(1, 2)).unwrap();
    assert_eq!((gue.w.nrows(), gue.w.ncols()), (30, 11));
}

#[test]
fn coupling_rejects_overfull_layouts() {
    let spec = CouplingSpec {
        lambda: 29,
        ..coupling_spec(0, 0.3)
    };
    assert!(build_coupling(SymmetryClass::Gse, &spec, &mut stream(2, 0)).is_err());
    assert!(build_coupling(SymmetryClass::Goe, &coupling_spec(1, 0.3), &mut stream(2, 0)).is_err());
}

#[test]
fn heidelberg_smatrix_basic_properties() {
    let mut rng = stream(3, 0);
    let h = sample_gse(30, &mut rng).unwrap().into_matrix();
    let zero = CMatrix::zeros(60, 4);
    let s = heidelberg_smatrix(&h, &zero, 0.3).unwrap();
    assert!(max_abs(&(s - CMatrix::identity(4, 4))) < 1e-15);

    let lossless = build_coupling(SymmetryClass::Gse, &coupling_spec(0, 0.0), &mut rng).unwrap();
    for e in [-2.0, 0.0, 0.7, 3.1] {
        let s = heidelberg_smatrix(&h, &lossless.w, e).unwrap();
        assert!(max_abs(&(s.adjoint() * &s - CMatrix::identity(2, 2))) <= 1e-10);
    }

    let lossy = build_coupling(SymmetryClass::Gse, &coupling_spec(6, 0.4), &mut rng).unwrap();
    for e in [-1.0, 0.2, 1.9] {
        let s = heidelberg_smatrix(&h, &lossy.w, e).unwrap();
        assert!(s[(0, 1)].norm() <= 1e-8 && s[(1, 0)].norm() <= 1e-8);
        assert!((s[(0, 0)] - s[(1, 1)]).norm() <= 1e-8);
        assert!(s[(0, 0)].norm() < 1.0);
    }
    assert!(heidelberg_smatrix(&h, &CMatrix::zeros(10, 2), 0.0).is_err());
}

#[test]
fn k_matrix_special_points() {
    let k = k_matrix(Complex64::new(1.0, 0.0)).unwrap();
    assert_eq!((k.u, k.v), (0.0, 0.0));
    let k = k_matrix(Complex64::new(0.0, 0.0)).unwrap();
    assert!(k.u.abs() < 1e-15 && (k.v - 1.0).abs() < 1e-15 && (k.x - 1.0).abs() < 1e-15);
    let k = k_matrix(Complex64::new(0.0, 1.0)).unwrap();
    assert!((k.u + 1.0).abs() < 1e-15 && k.v.abs() < 1e-15);
    assert!(k.x.is_infinite() || k.x > 1e15);
    assert!(k_matrix(Complex64::new(-1.0, 0.0)).is_err());
}

#[test]
fn fast_path_matches_direct_solve() {
    for class in [SymmetryClass::Gse, SymmetryClass::Gue] {
        let cfg = small(class);
        let prepared = PreparedEnsemble::prepare(&cfg, cfg.lambda).unwrap();
        for t_f in [0.0, 0.35, 1.0] {
            let ens = prepared.evaluate(t_f, None).unwrap();
            for id in [0u64, 3, 5] {
                let (h, c) = prepared.realization_model(id, t_f).unwrap();
                for rec in ens.records.iter().filter(|r| r.realization == id) {
                    let s = heidelberg_smatrix(&h, &c.w, rec.e).unwrap();
                    let diff = (s[(0, 0)] - rec.s()).norm();
                    assert!(diff < 1e-9, "{class} t_f={t_f} id={id} e={}: {diff}", rec.e);
                }
            }
        }
    }
}

#[test]
fn records_satisfy_k_matrix_identities() {
    let cfg = ScatteringConfig {
        tau_abs: Some(3.0),
        ..small(SymmetryClass::Gse)
    };
    let ens = run_ensemble(&cfg).unwrap();
    assert_eq!(ens.records.len() + ens.failures, cfg.realizations * cfg.energies);
    assert!((ens.tau_abs - 3.0).abs() < 1e-12);
    assert!(ens.kramers_deviation <= 1e-8);
    for r in &ens.records {
        assert!((0.0..1.0).contains(&r.reflection));
        assert!(r.v > 0.0 && r.x >= 1.0);
        let x = (1.0 + r.reflection) / (1.0 - r.reflection);
        assert!((r.x - x).abs() <= 1e-10 * x, "{} vs {x}", r.x);
        assert!((r.amplitude().powi(2) - r.reflection).abs() < 1e-14);
    }
}

#[test]
fn no_absorption_means_unit_reflection() {
    for class in [SymmetryClass::Gse, SymmetryClass::Gue] {
        for lambda in [0, 4] {
            let cfg = ScatteringConfig {
                lambda,
                tau_abs: Some(0.0),
                ..small(class)
            };
            let ens = run_ensemble(&cfg).unwrap();
            assert!(ens.records.iter().all(|r| (r.reflection - 1.0).abs() <= 1e-10));
        }
    }
}

#[test]
fn average_s_reproduces_open_transmission() {
    for class in [SymmetryClass::Gse, SymmetryClass::Gue] {
        let cfg = ScatteringConfig {
            class,
            n: 60,
            lambda: 0,
            open_transmission: 0.5,
            realizations: 300,
            energies: 20,
            tau_abs: Some(0.0),
            seed: 5,
            ..ScatteringConfig::default()
        };
        let ens = run_ensemble(&cfg).unwrap();
        let t = 1.0 - ens.mean_s().norm_sqr();
        assert!((t - 0.5).abs() < 0.03, "{class}: 1 - |<S>|^2 = {t}");
    }
}

#[test]
fn ensembles_are_deterministic_in_the_seed() {
    let cfg = ScatteringConfig {
        tau_abs: Some(2.0),
        ..small(SymmetryClass::Gse)
    };
    let a = run_ensemble(&cfg).unwrap();
    let b = run_ensemble(&cfg).unwrap();
    assert_eq!(a.records, b.records);
    let c = run_ensemble(&ScatteringConfig { seed: 100, ..cfg }).unwrap();
    assert_ne!(a.records, c.records);
}

#[test]
fn calibration_matches_analytic_mean_and_orders_absorption() {
    let cfg = ScatteringConfig {
        n: 60,
        lambda: 20,
        realizations: 150,
        energies: 20,
        window: 0.1,
        seed: 8,
        ..ScatteringConfig::default()
    };
    let prepared = PreparedEnsemble::prepare(&cfg, cfg.lambda).unwrap();
    let low = calibrate_prepared(&prepared, 5.7).unwrap();
    let target = Absorption::gse(5.7).unwrap().mean_reflection();
    let ens = prepared.evaluate(low.t_f, Some(5.7)).unwrap();
    assert!((ens.mean_reflection() - target).abs() < 0.01 * target);
    assert!((low.achieved_mean_reflection - low.target_mean_reflection).abs() < 1e-6);

    let high = calibrate_prepared(&prepared, 12.8).unwrap();
    assert!(high.tau_abs > low.tau_abs);
    let tiny = calibrate_prepared(&prepared, 1e-3).unwrap();
    assert!(tiny.tau_abs < 0.01, "{}", tiny.tau_abs);
    assert!(calibrate_prepared(&prepared, -1.0).is_err());
}

#[test]
fn unreachable_calibration_escalates_channels() {
    let cfg = ScatteringConfig {
        n: 40,
        lambda: 1,
        realizations: 30,
        energies: 10,
        window: 0.1,
        seed: 9,
        ..ScatteringConfig::default()
    };
    let (prepared, cal) = calibrate_tau_abs(5.7, &cfg).unwrap();
    assert!(cal.lambda > 1 && prepared.lambda() == cal.lambda);
    let prepared = PreparedEnsemble::prepare(&cfg, 1).unwrap();
    assert!(matches!(calibrate_prepared(&prepared, 5.7), Err(Error::CalibrationFailure(_))));
}

#[test]
fn autocorrelation_is_normalized() {
    let cfg = ScatteringConfig {
        n: 40,
        lambda: 8,
        realizations: 40,
        energies: 30,
        tau_abs: Some(4.0),
        seed: 10,
        ..ScatteringConfig::default()
    };
    let ens = run_ensemble(&cfg).unwrap();
    let lags: Vec<usize> = (0..10).collect();
    let c = autocorrelation(&ens, &lags).unwrap();
    assert_eq!((c.re[0], c.im[0], c.modulus[0]), (1.0, 0.0, 1.0));
    for (m, se) in c.modulus.iter().zip(&c.modulus_se) {
        assert!(*m <= 1.0 + 3.0 * se + 1e-12);
    }
    assert!(c.modulus[9] < c.modulus[1]);
    let unit = ens.energy_step / ens.mean_spacing;
    assert!((c.epsilon[3] - 3.0 * unit).abs() < 1e-12);
    assert!(autocorrelation(&ens, &[30]).is_err());

    let closed = run_ensemble(&ScatteringConfig {
        open_transmission: 0.0,
        ..cfg
    })
    .unwrap();
    assert!(matches!(autocorrelation(&closed, &[0, 1]), Err(Error::DegenerateEnsemble(_))));
}

#[test]
fn config_parsing_and_validation() {
    let cfg = ScatteringConfig::from_toml("class = \"GUE\"\nn = 50\ngamma = 5.7\n").unwrap();
    assert_eq!(cfg.class, SymmetryClass::Gue);
    assert_eq!(cfg.target().unwrap(), AbsorptionTarget::Gamma(5.7));
    assert_eq!(ScatteringConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    let err = ScatteringConfig::from_toml("n = 50\nlambada = 3\n").unwrap_err();
    assert!(matches!(err, Error::Parse { line: Some(2), .. }), "{err:?}");
    assert!(ScatteringConfig::from_toml("gamma = 1.0\ntau_abs = 2.0\n").is_err());
    assert!(ScatteringConfig::from_toml("n = 20\nlambda = 19\n").is_err());
    assert!(ScatteringConfig::from_toml("class = \"GOE\"\n").is_err());
    assert!(ScatteringConfig::from_toml("window = 1.5\n").is_err());
}
