mod common;

use common::*;
use kramers_core::rmt::{eigen_gue, eigen_kramers, sample_gse, sample_gue, SpectrumLabel};
use kramers_core::rng::stream;
use kramers_core::stats::*;
use kramers_core::SymmetryClass::{Gse, Gue};
use rand::Rng;
use rayon::prelude::*;

fn poisson_levels(count: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream(seed, 0);
    let mut v: Vec<f64> = (0..count).map(|_| rng.random::<f64>() * count as f64).collect();
    v.sort_by(f64::total_cmp);
    v
}

fn label(i: u64) -> SpectrumLabel {
    SpectrumLabel {
        ensemble: "test".into(),
        realization: i,
        seed: 0,
    }
}

fn gse_unfolded(n: usize, count: u64, seed: u64) -> Vec<Vec<f64>> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, i);
            eigen_kramers(&sample_gse(n, &mut rng).unwrap(), label(i)).unwrap().unfolded
        })
        .collect()
}

fn gue_unfolded(n: usize, count: u64, seed: u64) -> Vec<Vec<f64>> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, i);
            eigen_gue(&sample_gue(n, &mut rng).unwrap(), label(i)).unwrap().unfolded
        })
        .collect()
}

#[test]
fn poisson_spacings_are_exponential() {
    let levels = poisson_levels(100_000, 1);
    let nn = nnsd(&[levels], DEFAULT_BINS, Some((0.0, 6.0))).unwrap();
    let d = ks(&nn.spacings, |s| 1.0 - (-s).exp());
    assert!(d < 0.02, "KS {d}");
    assert!((nn.mean_spacing - 1.0).abs() < 0.01);
}

#[test]
fn poisson_number_variance_is_linear() {
    let spectra: Vec<Vec<f64>> = (0..10).map(|i| poisson_levels(10_000, 100 + i)).collect();
    let lengths = [0.5, 1.0, 2.0, 5.0];
    let mut rng = stream(2, 0);
    let nv = number_variance(&spectra, &lengths, &mut rng).unwrap();
    assert!(nv.dropped.is_empty());
    for (l, v) in nv.curve.abscissa.iter().zip(&nv.curve.values) {
        assert!((v / l - 1.0).abs() < 0.05, "L={l}: {v}");
    }
}

#[test]
fn number_variance_vanishes_for_empty_windows() {
    let spectra = vec![poisson_levels(1000, 3)];
    let mut rng = stream(3, 0);
    let nv = number_variance(&spectra, &[0.0, 1e-9], &mut rng).unwrap();
    assert_eq!(nv.curve.values[0], 0.0);
    assert!(nv.curve.values[1] < 1e-6);
}

#[test]
fn number_variance_drops_overlong_windows() {
    let spectra = vec![poisson_levels(100, 4)];
    let mut rng = stream(4, 0);
    let nv = number_variance(&spectra, &[1.0, 80.0], &mut rng).unwrap();
    assert_eq!(nv.dropped, vec![80.0]);
    assert_eq!(nv.curve.abscissa, vec![1.0]);
}

#[test]
fn number_variance_orders_symmetry_classes() {
    let gse = gse_unfolded(200, 200, 5);
    let gue = gue_unfolded(200, 200, 6);
    let poisson: Vec<Vec<f64>> = (0..200).map(|i| poisson_levels(100, 600 + i)).collect();
    let mut rng = stream(7, 0);
    let at2 = |spectra: &[Vec<f64>], rng: &mut _| {
        let c = number_variance(spectra, &[2.0], rng).unwrap().curve;
        (c.values[0], c.std_errors[0])
    };
    let (a, sa) = at2(&gse, &mut rng);
    let (b, sb) = at2(&gue, &mut rng);
    let (c, sc) = at2(&poisson, &mut rng);
    assert!(b - a > 3.0 * (sa * sa + sb * sb).sqrt(), "GSE {a}+-{sa} GUE {b}+-{sb}");
    assert!(c - b > 3.0 * (sb * sb + sc * sc).sqrt(), "GUE {b}+-{sb} Poisson {c}+-{sc}");
}

#[test]
fn statistics_are_shift_invariant() {
    let levels = poisson_levels(2000, 8);
    let shifted: Vec<f64> = levels.iter().map(|e| e + 17.25).collect();
    let a = nnsd(&[levels.clone()], 20, Some((0.0, 4.0))).unwrap();
    let b = nnsd(&[shifted.clone()], 20, Some((0.0, 4.0))).unwrap();
    assert_eq!(a.histogram.counts(), b.histogram.counts());
    let va = number_variance(&[levels], &[1.0, 3.0], &mut stream(9, 0)).unwrap();
    let vb = number_variance(&[shifted], &[1.0, 3.0], &mut stream(9, 0)).unwrap();
    for (x, y) in va.curve.values.iter().zip(&vb.curve.values) {
        assert!((x - y).abs() < 1e-9);
    }
}

#[test]
fn thinning_keeps_binomial_share_and_unit_spacing() {
    let levels: Vec<f64> = (0..100_000).map(|i| i as f64).collect();
    let mut rng = stream(10, 0);
    assert_eq!(thin_spectrum(&levels, 1.0, &mut rng).unwrap(), levels);
    let phi = 0.94;
    let thinned = thin_spectrum(&levels, phi, &mut rng).unwrap();
    let n = levels.len() as f64;
    let sd = (n * phi * (1.0 - phi)).sqrt();
    assert!((thinned.len() as f64 - phi * n).abs() <= 3.0 * sd);
    let spacing = (thinned[thinned.len() - 1] - thinned[0]) / (thinned.len() - 1) as f64;
    assert!((spacing - 1.0).abs() < 0.01, "{spacing}");
    for bad in [0.0, -0.1, 1.2, f64::NAN] {
        assert!(thin_spectrum(&levels, bad, &mut rng).is_err());
    }
}

#[test]
fn thinned_gse_spectra_gain_small_spacings() {
    let pure = gse_unfolded(100, 4000, 11);
    let mut rng = stream(12, 0);
    let thinned: Vec<Vec<f64>> = pure
        .iter()
        .map(|l| thin_spectrum(l, 0.94, &mut rng).unwrap())
        .collect();
    let share = |spectra: &[Vec<f64>]| {
        let s = nnsd(spectra, 20, None).unwrap().spacings;
        let hits = s.iter().filter(|&&x| x < 0.3).count() as f64;
        (hits / s.len() as f64, s.len() as f64)
    };
    let (p0, n0) = share(&pure);
    let (p1, n1) = share(&thinned);
    let se = (p0 * (1.0 - p0) / n0 + p1 * (1.0 - p1) / n1).sqrt();
    assert!(p1 - p0 > 3.0 * se, "pure {p0} thinned {p1} se {se}");
}

#[test]
fn surmises_are_normalized_with_unit_mean() {
    for class in [Gse, Gue] {
        assert_eq!(wigner_surmise(class, 0.0), 0.0);
        let mass = simpson(|s| wigner_surmise(class, s), 0.0, 8.0, 20_000);
        let mean = simpson(|s| s * wigner_surmise(class, s), 0.0, 8.0, 20_000);
        assert!((mass - 1.0).abs() < 1e-8 && (mean - 1.0).abs() < 1e-8, "{class}: {mass} {mean}");
    }
    for s in linear(0.0, 4.0, 41) {
        assert!((wigner_surmise(Gse, s) - surmise_gse(s)).abs() < 1e-12);
        assert!((wigner_surmise(Gue, s) - surmise_gue(s)).abs() < 1e-12);
    }
}

#[test]
fn surmise_small_spacing_slopes() {
    for (class, expected) in [(Gse, 4.0), (Gue, 2.0)] {
        let grid = geometric(0.01, 0.1, 30);
        let xs: Vec<f64> = grid.iter().map(|s| s.ln()).collect();
        let ys: Vec<f64> = grid.iter().map(|&s| wigner_surmise(class, s).ln()).collect();
        let mx = xs.iter().sum::<f64>() / xs.len() as f64;
        let my = ys.iter().sum::<f64>() / ys.len() as f64;
        let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
            / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
        assert!((slope - expected).abs() < 0.05, "{class}: {slope}");
    }
}

#[test]
fn ks_of_self_samples_is_small() {
    let cdf = TabulatedCdf::from_density(|s| wigner_surmise(Gse, s), linear(0.0, 5.0, 400)).unwrap();
    let mut rng = stream(13, 0);
    let draws: Vec<f64> = (0..100_000).map(|_| cdf.sample(&mut rng)).collect();
    let d = ks_distance(&draws, &cdf).unwrap();
    assert!(d < 0.006, "{d}");
    let oracle = ks(&draws, |s| surmise_cdf("GSE", s));
    assert!((d - oracle).abs() < 1e-6, "{d} vs {oracle}");
}

#[test]
fn ks_of_constant_samples_is_large() {
    let cdf = TabulatedCdf::from_density(|s| wigner_surmise(Gue, s), linear(0.0, 5.0, 200)).unwrap();
    for c in [0.3, 1.0, 2.5] {
        assert!(ks_distance(&vec![c; 1000], &cdf).unwrap() >= 0.5);
    }
}

#[test]
fn ks_rejects_empty_samples_and_bad_references() {
    let cdf = TabulatedCdf::from_density(|s| wigner_surmise(Gue, s), linear(0.0, 5.0, 200)).unwrap();
    assert!(ks_distance(&[], &cdf).is_err());
    assert!(TabulatedCdf::from_density(|s| 2.0 * wigner_surmise(Gue, s), linear(0.0, 5.0, 200)).is_err());
    assert!(TabulatedCdf::from_density(|_| -1.0, linear(0.0, 1.0, 10)).is_err());
}

#[test]
fn two_sample_ks_separates_classes() {
    let a = nnsd(&gse_unfolded(100, 100, 14), 20, None).unwrap().spacings;
    let b = nnsd(&gue_unfolded(100, 100, 15), 20, None).unwrap().spacings;
    let same = ks_two_sample(&a[..a.len() / 2], &a[a.len() / 2..]).unwrap();
    let diff = ks_two_sample(&a, &b).unwrap();
    assert!(diff > 3.0 * same, "same {same} diff {diff}");
}

#[test]
fn histogram_densities_normalize() {
    let levels = poisson_levels(5000, 16);
    for range in [None, Some((0.0, 3000.0))] {
        let h = Histogram::from_samples(&levels, 37, range).unwrap();
        assert!((h.total_mass() - 1.0).abs() < 1e-12);
    }
    assert!(Histogram::from_samples(&[], 10, None).is_err());
}
