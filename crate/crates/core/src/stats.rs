//! Spectral statistics and goodness-of-fit utilities.

use std::f64::consts::PI;

use log::warn;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{gauss_kronrod_15, integrate, Tolerance};
use crate::rmt::SymmetryClass;

/// Number of uniform bins used when the caller has no preference.
pub const DEFAULT_BINS: usize = 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    edges: Vec<f64>,
    counts: Vec<u64>,
    density: Vec<f64>,
    /// Samples that fell inside the binned range.
    pub samples: usize,
    pub out_of_range: usize,
}

impl Histogram {
    /// Uniform binning over `range`, or over the occupied range if `None`.
    /// Densities are normalized over the in-range samples.
    pub fn from_samples(samples: &[f64], bins: usize, range: Option<(f64, f64)>) -> Result<Self> {
        if bins == 0 {
            return Err(Error::invalid("histogram needs at least one bin"));
        }
        let finite: Vec<f64> = samples.iter().copied().filter(|s| s.is_finite()).collect();
        if finite.is_empty() {
            return Err(Error::invalid("histogram of an empty sample set"));
        }
        let (mut lo, mut hi) = match range {
            Some(r) => r,
            None => finite
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &s| (a.min(s), b.max(s))),
        };
        if !(hi > lo) {
            if range.is_some() {
                return Err(Error::invalid(format!("empty histogram range [{lo}, {hi}]")));
            }
            lo -= 0.5;
            hi += 0.5;
        }
        let width = (hi - lo) / bins as f64;
        let edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();
        let mut counts = vec![0u64; bins];
        let mut out_of_range = samples.len() - finite.len();
        for &s in &finite {
            if s < lo || s > hi {
                out_of_range += 1;
                continue;
            }
            let idx = (((s - lo) / width) as usize).min(bins - 1);
            counts[idx] += 1;
        }
        let inside: u64 = counts.iter().sum();
        if inside == 0 {
            return Err(Error::invalid("no samples fall inside the histogram range"));
        }
        let density = edges
            .windows(2)
            .zip(&counts)
            .map(|(e, &c)| c as f64 / (inside as f64 * (e[1] - e[0])))
            .collect();
        Ok(Self {
            edges,
            counts,
            density,
            samples: inside as usize,
            out_of_range,
        })
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn density(&self) -> impl Iterator<Item = f64> + '_ {
        self.density.iter().copied()
    }

    pub fn densities(&self) -> &[f64] {
        &self.density
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        self.edges.windows(2).map(|e| 0.5 * (e[0] + e[1]))
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    /// `Σ density · width`; 1 up to round-off.
    pub fn total_mass(&self) -> f64 {
        self.edges
            .windows(2)
            .zip(&self.density)
            .map(|(e, d)| d * (e[1] - e[0]))
            .sum()
    }

    /// Poisson standard error of each bin density.
    pub fn density_errors(&self) -> Vec<f64> {
        self.edges
            .windows(2)
            .zip(&self.counts)
            .map(|(e, &c)| (c as f64).sqrt() / (self.samples as f64 * (e[1] - e[0])))
            .collect()
    }

    /// L² distance `∫(h − p)² ds` over the bins inside `[lo, hi]`, with the
    /// reference averaged over each bin.
    pub fn l2_distance<F: Fn(f64) -> f64>(&self, reference: F, lo: f64, hi: f64) -> f64 {
        self.edges
            .windows(2)
            .zip(&self.density)
            .filter(|(e, _)| e[0] >= lo - 1e-12 && e[1] <= hi + 1e-12)
            .map(|(e, d)| {
                let w = e[1] - e[0];
                let avg = gauss_kronrod_15(&reference, e[0], e[1]).value / w;
                (d - avg).powi(2) * w
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// A curve with per-point standard errors (`Σ²(L)`, `C(ε)`, surmises).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatCurve {
    pub abscissa: Vec<f64>,
    pub values: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub label: String,
}

impl StatCurve {
    pub fn value_at(&self, x: f64) -> Option<(f64, f64)> {
        self.abscissa
            .iter()
            .position(|&a| (a - x).abs() <= 1e-9 * a.abs().max(1.0))
            .map(|i| (self.values[i], self.std_errors[i]))
    }
}

#[derive(Debug, Clone)]
pub struct Nnsd {
    pub histogram: Histogram,
    pub spacings: Vec<f64>,
    pub mean_spacing: f64,
    pub skipped_realizations: usize,
}

/// Nearest-neighbor spacings pooled over realizations.
pub fn nnsd<S: AsRef<[f64]>>(realizations: &[S], bins: usize, range: Option<(f64, f64)>) -> Result<Nnsd> {
    let mut spacings = Vec::new();
    let mut skipped = 0;
    for (i, levels) in realizations.iter().enumerate() {
        let levels = levels.as_ref();
        if levels.len() < 2 {
            warn!("realization {i} has fewer than two levels; skipped");
            skipped += 1;
            continue;
        }
        spacings.extend(levels.windows(2).map(|w| w[1] - w[0]));
    }
    if spacings.is_empty() {
        return Err(Error::invalid("no spacings: every realization has fewer than two levels"));
    }
    let mean_spacing = spacings.iter().sum::<f64>() / spacings.len() as f64;
    let histogram = Histogram::from_samples(&spacings, bins, range)?;
    Ok(Nnsd {
        histogram,
        spacings,
        mean_spacing,
        skipped_realizations: skipped,
    })
}

#[derive(Debug, Clone)]
pub struct NumberVariance {
    pub curve: StatCurve,
    /// Requested window lengths dropped for exceeding half the spectrum span.
    pub dropped: Vec<f64>,
}

/// Windows per level when placing random counting windows.
pub const WINDOW_OVERSAMPLING: usize = 10;

/// `Σ²(L)`: variance of the number of levels in randomly placed windows of
/// length `L`, pooled within and across realizations.
pub fn number_variance<S: AsRef<[f64]>, R: Rng + ?Sized>(
    realizations: &[S],
    lengths: &[f64],
    rng: &mut R,
) -> Result<NumberVariance> {
    let usable: Vec<&[f64]> = realizations
        .iter()
        .map(|r| r.as_ref())
        .filter(|r| r.len() >= 2)
        .collect();
    if usable.is_empty() {
        return Err(Error::invalid("number variance needs spectra with at least two levels"));
    }
    let min_span = usable
        .iter()
        .map(|r| r[r.len() - 1] - r[0])
        .fold(f64::INFINITY, f64::min);
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for &l in lengths {
        if l > 0.5 * min_span {
            dropped.push(l);
        } else {
            kept.push(l);
        }
    }
    if !dropped.is_empty() {
        warn!(
            "number variance: {} window lengths exceed half the spectrum span {:.3}; truncated",
            dropped.len(),
            min_span
        );
    }
    // With a single long spectrum, split it into blocks for error estimates.
    let blocks: Vec<&[f64]> = if usable.len() == 1 {
        let levels = usable[0];
        let per = (levels.len() / 10).max(2);
        levels.chunks(per).filter(|c| c.len() >= 2).collect()
    } else {
        usable.clone()
    };

    let mut values = Vec::with_capacity(kept.len());
    let mut errors = Vec::with_capacity(kept.len());
    for &l in &kept {
        let (mut s1, mut s2, mut n) = (0.0, 0.0, 0.0);
        let mut per_block = Vec::with_capacity(blocks.len());
        let sources: &[&[f64]] = &usable;
        // pooled estimate over full spectra
        for levels in sources {
            let (a, b) = window_moments(levels, l, rng);
            s1 += a.0;
            s2 += a.1;
            n += b;
        }
        let mean = s1 / n;
        let var = s2 / n - mean * mean;
        if l == 0.0 {
            values.push(0.0);
            errors.push(0.0);
            continue;
        }
        for levels in &blocks {
            if levels[levels.len() - 1] - levels[0] <= l {
                continue;
            }
            let (a, b) = window_moments(levels, l, rng);
            let m = a.0 / b;
            per_block.push(a.1 / b - m * m);
        }
        let se = if per_block.len() > 1 {
            let m = per_block.iter().sum::<f64>() / per_block.len() as f64;
            (per_block.iter().map(|v| (v - m).powi(2)).sum::<f64>()
                / ((per_block.len() - 1) * per_block.len()) as f64)
                .sqrt()
        } else {
            f64::NAN
        };
        values.push(var);
        errors.push(se);
    }
    Ok(NumberVariance {
        curve: StatCurve {
            abscissa: kept,
            values,
            std_errors: errors,
            label: "number variance".into(),
        },
        dropped,
    })
}

/// Sums of `n` and `n²` over random windows, and the window count.
fn window_moments<R: Rng + ?Sized>(levels: &[f64], l: f64, rng: &mut R) -> ((f64, f64), f64) {
    let first = levels[0];
    let span = levels[levels.len() - 1] - first - l;
    let windows = WINDOW_OVERSAMPLING * levels.len();
    let (mut s1, mut s2) = (0.0, 0.0);
    for _ in 0..windows {
        let start = first + rng.random::<f64>() * span;
        let lo = levels.partition_point(|&e| e < start);
        let hi = levels.partition_point(|&e| e < start + l);
        let n = (hi - lo) as f64;
        s1 += n;
        s2 += n * n;
    }
    ((s1, s2), windows as f64)
}

/// Keeps each level independently with probability `retain`, then rescales
/// the survivors by `retain` to restore unit mean spacing.
pub fn thin_spectrum<R: Rng + ?Sized>(levels: &[f64], retain: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !(retain > 0.0 && retain <= 1.0) {
        return Err(Error::invalid(format!(
            "retain fraction must lie in (0, 1], got {retain}"
        )));
    }
    if retain == 1.0 {
        return Ok(levels.to_vec());
    }
    Ok(levels
        .iter()
        .filter(|_| rng.random::<f64>() < retain)
        .map(|&e| e * retain)
        .collect())
}

/// Wigner surmise with unit mean spacing.
pub fn wigner_surmise(class: SymmetryClass, s: f64) -> f64 {
    if s < 0.0 {
        return 0.0;
    }
    match class {
        SymmetryClass::Goe => 0.5 * PI * s * (-0.25 * PI * s * s).exp(),
        SymmetryClass::Gue => 32.0 / (PI * PI) * s * s * (-4.0 * s * s / PI).exp(),
        SymmetryClass::Gse => {
            let norm = 2f64.powi(18) / (3f64.powi(6) * PI.powi(3));
            norm * s.powi(4) * (-64.0 * s * s / (9.0 * PI)).exp()
        }
    }
}

pub fn wigner_surmise_curve(class: SymmetryClass, grid: &[f64]) -> StatCurve {
    StatCurve {
        abscissa: grid.to_vec(),
        values: grid.iter().map(|&s| wigner_surmise(class, s)).collect(),
        std_errors: vec![0.0; grid.len()],
        label: format!("{} Wigner surmise", class.name()),
    }
}

/// Cumulative distribution tabulated by quadrature between nodes and
/// interpolated with cubic Hermite segments whose slopes are the density.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedCdf {
    nodes: Vec<f64>,
    pdf: Vec<f64>,
    cdf: Vec<f64>,
    raw_mass: f64,
}

/// Largest tolerated deviation of a reference density's total mass from one.
pub const REFERENCE_MASS_TOLERANCE: f64 = 1e-3;

impl TabulatedCdf {
    pub fn from_density<F: Fn(f64) -> f64>(density: F, nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 || nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidReference(
                "nodes must be strictly ascending with at least two entries".into(),
            ));
        }
        let pdf: Vec<f64> = nodes.iter().map(|&x| density(x)).collect();
        if pdf.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidReference(
                "density is negative or non-finite on the grid".into(),
            ));
        }
        let mut cdf = Vec::with_capacity(nodes.len());
        cdf.push(0.0);
        let mut acc = 0.0;
        for w in nodes.windows(2) {
            let piece = gauss_kronrod_15(&density, w[0], w[1]);
            let piece = if piece.error > 1e-9 * piece.value.abs().max(1e-300) {
                integrate(&density, w[0], w[1], Tolerance::new(1e-14, 1e-10))?.value
            } else {
                piece.value
            };
            acc += piece.max(0.0);
            cdf.push(acc);
        }
        let raw_mass = acc;
        if !((raw_mass - 1.0).abs() <= REFERENCE_MASS_TOLERANCE) {
            return Err(Error::InvalidReference(format!(
                "reference density integrates to {raw_mass} over [{}, {}]",
                nodes[0],
                nodes[nodes.len() - 1]
            )));
        }
        for c in cdf.iter_mut() {
            *c /= raw_mass;
        }
        let pdf = pdf.into_iter().map(|p| p / raw_mass).collect();
        Ok(Self {
            nodes,
            pdf,
            cdf,
            raw_mass,
        })
    }

    /// Mass of the density over the tabulated range before normalization.
    pub fn raw_mass(&self) -> f64 {
        self.raw_mass
    }

    pub fn range(&self) -> (f64, f64) {
        (self.nodes[0], self.nodes[self.nodes.len() - 1])
    }

    fn segment(&self, x: f64) -> usize {
        let i = self.nodes.partition_point(|&n| n <= x);
        i.clamp(1, self.nodes.len() - 1) - 1
    }

    fn hermite(&self, i: usize, x: f64) -> f64 {
        let (x0, x1) = (self.nodes[i], self.nodes[i + 1]);
        let h = x1 - x0;
        let t = (x - x0) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * self.cdf[i]
            + (t3 - 2.0 * t2 + t) * h * self.pdf[i]
            + (-2.0 * t3 + 3.0 * t2) * self.cdf[i + 1]
            + (t3 - t2) * h * self.pdf[i + 1];
        v.clamp(self.cdf[i], self.cdf[i + 1])
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let (lo, hi) = self.range();
        if x <= lo {
            return 0.0;
        }
        if x >= hi {
            return 1.0;
        }
        self.hermite(self.segment(x), x)
    }

    pub fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        let i = self.cdf.partition_point(|&c| c < p).clamp(1, self.cdf.len() - 1) - 1;
        let (mut a, mut b) = (self.nodes[i], self.nodes[i + 1]);
        for _ in 0..60 {
            let m = 0.5 * (a + b);
            if self.hermite(i, m) < p {
                a = m;
            } else {
                b = m;
            }
            if b - a <= 1e-15 * b.abs().max(1e-300) {
                break;
            }
        }
        0.5 * (a + b)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random::<f64>())
    }
}

/// `count` nodes on `[lo, hi]`, spaced so each interval carries a similar
/// share of (density + a uniform floor). With `log_scale` the construction
/// runs in `ln x`.
pub fn adaptive_nodes<F: Fn(f64) -> f64>(density: F, lo: f64, hi: f64, count: usize, log_scale: bool) -> Vec<f64> {
    let count = count.max(2);
    let pre = 4 * count;
    let to = |t: f64| if log_scale { t.exp() } else { t };
    let (a, b) = if log_scale { (lo.ln(), hi.ln()) } else { (lo, hi) };
    let step = (b - a) / pre as f64;
    let weights: Vec<f64> = (0..=pre)
        .map(|i| {
            let t = a + step * i as f64;
            let x = to(t);
            let d = density(x);
            let d = if d.is_finite() { d.max(0.0) } else { 0.0 };
            if log_scale {
                d * x
            } else {
                d
            }
        })
        .collect();
    let mean_w = weights.iter().sum::<f64>() / weights.len() as f64;
    let floor = 0.25 * mean_w.max(1e-300);
    let mut cum = vec![0.0; pre + 1];
    for i in 0..pre {
        cum[i + 1] = cum[i] + 0.5 * (weights[i] + weights[i + 1]) + floor;
    }
    let total = cum[pre];
    let mut nodes = Vec::with_capacity(count);
    let mut j = 0;
    for k in 0..count {
        let target = total * k as f64 / (count - 1) as f64;
        while j < pre - 1 && cum[j + 1] < target {
            j += 1;
        }
        let frac = if cum[j + 1] > cum[j] {
            ((target - cum[j]) / (cum[j + 1] - cum[j])).clamp(0.0, 1.0)
        } else {
            0.0
        };
        nodes.push(to(a + step * (j as f64 + frac)));
    }
    nodes[0] = lo;
    nodes[count - 1] = hi;
    nodes.dedup_by(|x, y| *x <= *y);
    nodes
}

/// Kolmogorov–Smirnov distance between the empirical CDF of `samples` and a
/// tabulated reference.
pub fn ks_distance(samples: &[f64], reference: &TabulatedCdf) -> Result<f64> {
    ks_distance_with(samples, |x| reference.cdf(x))
}

/// Kolmogorov–Smirnov distance against an arbitrary CDF.
pub fn ks_distance_with<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::invalid("KS distance of an empty sample set"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(d.clamp(0.0, 1.0))
}

/// Two-sample Kolmogorov–Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("KS distance of an empty sample set"));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}
