use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use kramers_core::analytic::{fit_gamma, FitOptions, FitQuantity};
use kramers_core::graph::{graph_smatrix, secular_spectrum, ScanOptions};
use kramers_core::rmt::{eigen_kramers, sample_gse};
use kramers_core::rng::stream;
use kramers_core::scattering::calibrate_prepared;
use kramers_core::{Absorption, GraphSpec, PreparedEnsemble, SpectrumLabel, SymmetryClass};
use kramers_bench::bench_config;

fn gse_eigen(c: &mut Criterion) {
    let mut rng = stream(1, 0);
    let label = SpectrumLabel {
        ensemble: "GSE".into(),
        realization: 0,
        seed: 1,
    };
    c.bench_function("gse sample + eigen n=100", |b| {
        b.iter(|| {
            let h = sample_gse(100, &mut rng).unwrap();
            black_box(eigen_kramers(&h, label.clone()).unwrap())
        })
    });
}

fn graph(c: &mut Criterion) {
    let spec = GraphSpec::default_gse();
    c.bench_function("secular spectrum k in [100, 200]", |b| {
        b.iter(|| black_box(secular_spectrum(&spec, 100.0, 200.0, ScanOptions::default()).unwrap()))
    });
    let open = GraphSpec::default_gse().with_leads(vec![2, 6]).unwrap();
    c.bench_function("graph S matrix", |b| {
        b.iter(|| black_box(graph_smatrix(&open, black_box(123.4), 1e-3).unwrap()))
    });
}

fn ensemble(c: &mut Criterion) {
    let config = bench_config();
    let prepared = PreparedEnsemble::prepare(&config, config.lambda).unwrap();
    let t_f = calibrate_prepared(&prepared, 5.7).unwrap().t_f;
    c.bench_function("prepared ensemble evaluate", |b| {
        b.iter(|| black_box(prepared.evaluate(t_f, Some(5.7)).unwrap()))
    });
}

fn analytic(c: &mut Criterion) {
    let gse = Absorption::gse(5.7).unwrap();
    c.bench_function("P(v) at 200 points", |b| {
        b.iter(|| {
            let mut acc = 0.0;
            for i in 1..=200 {
                acc += gse.p_im_k(black_box(i as f64 * 0.05));
            }
            black_box(acc)
        })
    });
    let samples = gse.sample_reflection(&mut stream(2, 0), 2000);
    c.bench_function("fit gamma, 2000 samples", |b| {
        b.iter(|| {
            black_box(
                fit_gamma(&samples, FitQuantity::Reflection, SymmetryClass::Gse, FitOptions::default()).unwrap(),
            )
        })
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = gse_eigen, graph, ensemble, analytic
}
criterion_main!(benches);
