//! Test-side numerical oracles, deliberately independent of the library's
//! quadrature and CDF code.
#![allow(dead_code)]

/// Composite Simpson rule with `n` (rounded up to even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// `∫ₐᵇ f` after the substitution `x = a + (b−a)t²`, which tames
/// integrable square-root behavior and steep rises at `a`.
pub fn simpson_sq<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    simpson(|t| 2.0 * t * (b - a) * f(a + (b - a) * t * t), 0.0, 1.0, n)
}

/// Cumulative integral of a density on `nodes` (Simpson between nodes,
/// linear interpolation in between).
pub struct CdfTable {
    pub x: Vec<f64>,
    pub c: Vec<f64>,
}

impl CdfTable {
    pub fn new<F: Fn(f64) -> f64>(f: F, nodes: &[f64]) -> Self {
        let mut c = vec![0.0];
        for w in nodes.windows(2) {
            let last = *c.last().unwrap();
            c.push(last + simpson(&f, w[0], w[1], 8));
        }
        Self { x: nodes.to_vec(), c }
    }

    pub fn total(&self) -> f64 {
        *self.c.last().unwrap()
    }

    pub fn at(&self, x: f64) -> f64 {
        if x <= self.x[0] {
            return 0.0;
        }
        if x >= *self.x.last().unwrap() {
            return self.total();
        }
        let i = self.x.partition_point(|&v| v <= x) - 1;
        let t = (x - self.x[i]) / (self.x[i + 1] - self.x[i]);
        self.c[i] + t * (self.c[i + 1] - self.c[i])
    }
}

/// Two-sided KS statistic of `samples` against a CDF.
pub fn ks<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = cdf(x);
            (c - i as f64 / n).abs().max(((i + 1) as f64 / n - c).abs())
        })
        .fold(0.0, f64::max)
}

pub fn geometric(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect()
}

pub fn linear(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Wigner surmises written out independently of the library.
pub fn surmise_gse(s: f64) -> f64 {
    let pi = std::f64::consts::PI;
    2f64.powi(18) / (3f64.powi(6) * pi.powi(3)) * s.powi(4) * (-64.0 * s * s / (9.0 * pi)).exp()
}

pub fn surmise_gue(s: f64) -> f64 {
    let pi = std::f64::consts::PI;
    32.0 / (pi * pi) * s * s * (-4.0 * s * s / pi).exp()
}

pub fn surmise_cdf(class: &str, s: f64) -> f64 {
    let f = if class == "GSE" { surmise_gse } else { surmise_gue };
    simpson(f, 0.0, s.min(6.0), 400)
}
