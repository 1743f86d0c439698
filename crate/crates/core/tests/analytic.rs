mod common;

use common::*;
use kramers_core::analytic::*;
use kramers_core::rng::stream;
use kramers_core::SymmetryClass::{Gse, Gue};

const GAMMAS: [f64; 3] = [1.0, 5.7, 12.8];

fn shi_oracle(g: f64) -> f64 {
    simpson(|t| if t == 0.0 { 1.0 } else { t.sinh() / t }, 0.0, g, 40_000)
}

#[test]
fn shi_matches_simpson_oracle() {
    for g in [0.5, 1.0, 3.0, 11.9, 12.5, 20.0] {
        let s = shi(g).unwrap();
        let o = shi_oracle(g);
        assert!((s - o).abs() < 1e-12 * o, "shi({g}) = {s}, oracle {o}");
    }
}

#[test]
fn p0_at_x_equal_one_matches_direct_series_evaluation() {
    // direct evaluation with Shi summed as a power series
    let g: f64 = 1.0;
    let mut shi_series = 0.0;
    let mut term = g; // g^(2k+1)/(2k+1)!
    for k in 0..30 {
        shi_series += term / (2 * k + 1) as f64;
        term *= g * g / (((2 * k + 2) * (2 * k + 3)) as f64);
    }
    let a = (2.0 * g).exp() - 1.0;
    let b = 1.0 + 2.0 * g - (2.0 * g).exp();
    let expected = 0.5 * (2.0 * g * a + b) * (-2.0 * g).exp() - g * (-g).exp() * shi_series;
    let got = Absorption::gse(g).unwrap().p0(1.0);
    assert!((got - expected).abs() < 1e-13 * expected.abs(), "{got} vs {expected}");
}

#[test]
fn x_reflection_and_amplitude_densities_are_normalized() {
    for class in [Gse, Gue] {
        for g in GAMMAS {
            let p = Absorption::new(g, class).unwrap();
            let x_mass = simpson(|x| p.p0(x), 1.0, 1.0 + 120.0 / g, 40_000);
            let r_mass = simpson_sq(|r| p.p_reflection(r), 0.0, 1.0 - 1e-12, 40_000);
            let a_mass = simpson(|r| p.p_amplitude(r), 0.0, 1.0 - 1e-12, 40_000);
            for (name, m) in [("x", x_mass), ("R", r_mass), ("r", a_mass)] {
                assert!((m - 1.0).abs() < 1e-6, "{class} gamma={g} {name}: mass {m}");
            }
        }
    }
}

#[test]
fn im_and_re_k_densities_are_normalized() {
    for g in GAMMAS {
        let p = Absorption::gse(g).unwrap();
        let v_mass = simpson(|t| p.p_im_k(t.exp()) * t.exp(), -14.0, 9.0, 3000);
        // u = sinh t spreads the heavy-ish tails
        let u_mass = 2.0 * simpson(|t| p.p_re_k(t.sinh()) * t.cosh(), 0.0, 8.0, 3000);
        assert!((v_mass - 1.0).abs() < 1e-4, "gamma={g}: P(v) mass {v_mass}");
        assert!((u_mass - 1.0).abs() < 1e-4, "gamma={g}: P(u) mass {u_mass}");
    }
}

#[test]
fn p0_is_nonnegative_until_underflow() {
    for g in [0.5, 5.7, 12.8] {
        let p = Absorption::gse(g).unwrap();
        let mut x = 1.0;
        loop {
            let v = p.p0(x);
            assert!(v >= 0.0, "P0({x}) = {v} at gamma {g}");
            if v < 1e-30 {
                break;
            }
            x += 0.01 / g;
        }
        assert!(x > 2.0);
    }
}

#[test]
fn im_k_density_has_reciprocal_symmetry() {
    for class in [Gse, Gue] {
        for g in [5.7, 12.8] {
            let p = Absorption::new(g, class).unwrap();
            for v in [0.2, 0.5, 2.0, 5.0] {
                let lhs = p.p_im_k(1.0 / v);
                let rhs = v.powi(3) * p.p_im_k(v);
                assert!((lhs - rhs).abs() <= 1e-8 * lhs.abs(), "{class} g={g} v={v}: {lhs} vs {rhs}");
            }
        }
    }
}

#[test]
fn re_k_density_is_even() {
    let p = Absorption::gse(5.7).unwrap();
    for u in [0.5, 1.0, 3.0] {
        assert!((p.p_re_k(u) - p.p_re_k(-u)).abs() < 1e-12);
    }
}

#[test]
fn mean_reflection_limits_and_ordering() {
    let lossless = Absorption::gse(1e-3).unwrap().mean_reflection();
    assert!((lossless - 1.0).abs() < 0.01, "{lossless}");
    let means: Vec<f64> = [1.0, 2.0, 5.7, 12.8, 50.0]
        .iter()
        .map(|&g| Absorption::gse(g).unwrap().mean_reflection())
        .collect();
    assert!(means.windows(2).all(|w| w[1] < w[0]), "{means:?}");

    let gse = Absorption::gse(5.7).unwrap();
    let gue = Absorption::gue(5.7).unwrap();
    assert!((gse.mean_reflection() - gue.mean_reflection()).abs() > 0.03);
    assert!((gse.mean_amplitude() - gue.mean_amplitude()).abs() > 0.03);
}

#[test]
fn moments_match_simpson_oracle() {
    for g in GAMMAS {
        let p = Absorption::gse(g).unwrap();
        let m = simpson_sq(|r| r * p.p_reflection(r), 0.0, 1.0 - 1e-12, 40_000);
        let a = simpson(|r| r * p.p_amplitude(r), 0.0, 1.0 - 1e-12, 40_000);
        assert!((p.mean_reflection() - m).abs() < 1e-6 * m, "<R> {} vs {m}", p.mean_reflection());
        assert!((p.mean_amplitude() - a).abs() < 1e-6 * a, "<r> {} vs {a}", p.mean_amplitude());
    }
}

#[test]
fn strong_absorption_approaches_ericson_limits() {
    let p = Absorption::gse(50.0).unwrap();
    let grid = linear(0.0, 12.0, 2401);
    let r_cdf = CdfTable::new(|t| p.p_rescaled_reflection(t), &grid);
    let ks_r = grid
        .iter()
        .map(|&t| (r_cdf.at(t) - (1.0 - (-t).exp())).abs())
        .fold(0.0, f64::max);
    let grid = linear(0.0, 5.0, 2001);
    let a_cdf = CdfTable::new(|t| p.p_rescaled_amplitude(t), &grid);
    let pi = std::f64::consts::PI;
    let ks_a = grid
        .iter()
        .map(|&t| (a_cdf.at(t) - (1.0 - (-pi * t * t / 4.0).exp())).abs())
        .fold(0.0, f64::max);
    assert!(ks_r < 0.01, "R~ {ks_r}");
    assert!(ks_a < 0.01, "r~ {ks_a}");
}

#[test]
fn inverse_cdf_reflection_draws_reproduce_p0() {
    let p = Absorption::gse(5.7).unwrap();
    let mut rng = stream(11, 0);
    let xs: Vec<f64> = p
        .sample_reflection(&mut rng, 1_000_000)
        .into_iter()
        .map(|r| (1.0 + r) / (1.0 - r))
        .collect();
    let nodes: Vec<f64> = geometric(1.0, 60.0, 6000);
    let table = CdfTable::new(|x| p.p0(x), &nodes);
    let d = ks(&xs, |x| table.at(x));
    assert!(d < 0.01, "KS {d}");
}

#[test]
fn gamma_fit_recovers_synthetic_values() {
    for (g, tol) in [(5.7, 0.1), (12.8, 0.2)] {
        let p = Absorption::gse(g).unwrap();
        let mut rng = stream(21, g.to_bits());
        let data = p.sample_reflection(&mut rng, 100_000);
        let fit = fit_gamma(&data, FitQuantity::Reflection, Gse, FitOptions::default()).unwrap();
        assert!((fit.gamma - g).abs() <= tol, "gamma {g}: fitted {} +- {}", fit.gamma, fit.std_error);
        let amps: Vec<f64> = data.iter().map(|r| r.sqrt()).collect();
        let opts = FitOptions {
            method: FitMethod::Curve,
            bootstrap: 20,
            ..FitOptions::default()
        };
        let fit = fit_gamma(&amps, FitQuantity::Amplitude, Gse, opts).unwrap();
        assert!((fit.gamma - g).abs() <= 2.0 * tol, "curve fit {g}: {}", fit.gamma);
    }
}

#[test]
fn gamma_fit_error_shrinks_with_sample_size() {
    let p = Absorption::gse(5.7).unwrap();
    let mut rng = stream(33, 0);
    let mut errors = Vec::new();
    for n in [1_000, 10_000, 100_000] {
        let data = p.sample_reflection(&mut rng, n);
        let fit = fit_gamma(&data, FitQuantity::Reflection, Gse, FitOptions::default()).unwrap();
        assert!((fit.gamma - 5.7).abs() < 5.0 * fit.std_error.max(0.02), "n={n}: {fit:?}");
        errors.push(fit.std_error);
    }
    assert!(errors[0] > errors[1] && errors[1] > errors[2], "{errors:?}");
}

#[test]
fn default_curves_integrate_to_one() {
    for class in [Gse, Gue] {
        for g in GAMMAS {
            let p = Absorption::new(g, class).unwrap();
            for v in [
                Variable::X,
                Variable::Reflection,
                Variable::Amplitude,
                Variable::ImK,
                Variable::ReK,
                Variable::RescaledReflection,
                Variable::RescaledAmplitude,
            ] {
                let c = p.default_curve(v);
                assert!(c.density.iter().all(|&d| d >= 0.0));
                let m = c.trapezoid_integral();
                assert!((m - 1.0).abs() < 1e-4, "{class} g={g} {v:?}: {m}");
            }
        }
    }
}

#[test]
fn gse_and_gue_im_k_curves_are_distinguishable() {
    let grid = geometric(0.05, 20.0, 400);
    let a = Absorption::gse(5.7).unwrap().curve(Variable::ImK, grid.clone());
    let b = Absorption::gue(5.7).unwrap().curve(Variable::ImK, grid);
    let d = a.max_abs_difference(&b).unwrap();
    assert!(d > 1e-6, "sup distance {d}");
}

#[test]
fn gamma_fit_rejects_unreachable_means() {
    let ones = vec![0.999_999; 5000];
    assert!(fit_gamma(&ones, FitQuantity::Reflection, Gse, FitOptions::default()).is_err());
    let out = vec![1.5; 5000];
    assert!(fit_gamma(&out, FitQuantity::Reflection, Gse, FitOptions::default()).is_err());
}
