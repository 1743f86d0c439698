//! Quantum graphs with Neumann vertices: secular matrix `h(k)`, eigen
//! wavenumbers, and the S-matrix of a graph opened by leads.
//!
//! A GSE-paired graph consists of two copies of one subgraph (vertices
//! `0..V` and `V..2V`, vertex `i` partnered with `i+V`) carrying opposite
//! vector potentials, joined by two bonds `(i₀, j₀+V)` and `(j₀, i₀+V)` of
//! equal length, the second with an extra phase `π`. With this layout
//! `h(k)` has the symplectic block structure of [`crate::rmt`] and every
//! level is a Kramers doublet.

use std::f64::consts::{FRAC_PI_2, PI};

use log::{debug, warn};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, solve, CMatrix};
use crate::rmt::{collapse_doublets, SpectrumLabel, SpectrumSample};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// `|sin(kL)|` below this is treated as sitting on a pole of `h(k)`.
pub const POLE_GUARD: f64 = 1e-8;

const PAIR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphSymmetry {
    GsePaired,
    Free,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bond {
    pub ends: [usize; 2],
    /// Length in meters.
    pub length: f64,
    /// `A·L` in radians, counted from `ends[0]` to `ends[1]`.
    #[serde(default)]
    pub vector_phase: f64,
    /// Additional phase in radians, same orientation.
    #[serde(default)]
    pub extra_phase: f64,
}

impl Bond {
    pub fn new(a: usize, b: usize, length: f64) -> Self {
        Self {
            ends: [a, b],
            length,
            vector_phase: 0.0,
            extra_phase: 0.0,
        }
    }

    fn phase(&self) -> f64 {
        self.vector_phase + self.extra_phase
    }
}

/// A validated graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub vertices: usize,
    pub bonds: Vec<Bond>,
    #[serde(default)]
    pub leads: Vec<usize>,
    pub symmetry: GraphSymmetry,
    /// Relative imaginary part of the wavenumber, `k → k(1+iη)`.
    #[serde(default)]
    pub eta: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    vertices: usize,
    symmetry: GraphSymmetry,
    #[serde(default)]
    eta: f64,
    #[serde(default)]
    leads: Vec<usize>,
    #[serde(rename = "bond", default)]
    bonds: Vec<toml::Spanned<RawBond>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBond {
    ends: [usize; 2],
    length: f64,
    #[serde(default)]
    vector_phase: f64,
    #[serde(default)]
    extra_phase: f64,
}

fn line_of(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

/// Wraps an angle to `(−π, π]`.
fn wrap(phase: f64) -> f64 {
    let w = phase.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

fn same_angle(a: f64, b: f64) -> bool {
    wrap(a - b).abs() < 1e-9
}

impl GraphSpec {
    /// Parses the TOML graph format; errors carry line numbers where known.
    ///
    /// ```toml
    /// vertices = 2
    /// symmetry = "free"
    /// leads = [0]
    /// [[bond]]
    /// ends = [0, 1]
    /// length = 0.5
    /// vector_phase = 0.0   # optional, A·L in radians
    /// extra_phase = 0.0    # optional
    /// ```
    pub fn from_toml(src: &str) -> Result<Self> {
        let raw: RawSpec = toml::from_str(src).map_err(|e| Error::Parse {
            line: e.span().map(|s| line_of(src, s.start)),
            message: e.message().to_string(),
        })?;
        let mut bonds = Vec::with_capacity(raw.bonds.len());
        for sb in &raw.bonds {
            let line = line_of(src, sb.span().start);
            let b = sb.get_ref();
            let bond = Bond {
                ends: b.ends,
                length: b.length,
                vector_phase: b.vector_phase,
                extra_phase: b.extra_phase,
            };
            check_bond(&bond, raw.vertices).map_err(|message| Error::Parse {
                line: Some(line),
                message,
            })?;
            bonds.push(bond);
        }
        let spec = GraphSpec {
            vertices: raw.vertices,
            bonds,
            leads: raw.leads,
            symmetry: raw.symmetry,
            eta: raw.eta,
        };
        spec.validate().map_err(|e| match e {
            Error::InvalidInput(message) => Error::Parse { line: None, message },
            other => other,
        })?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        let mut out = format!(
            "vertices = {}\nsymmetry = \"{}\"\neta = {:?}\nleads = {:?}\n",
            self.vertices,
            match self.symmetry {
                GraphSymmetry::GsePaired => "gse-paired",
                GraphSymmetry::Free => "free",
            },
            self.eta,
            self.leads
        );
        for b in &self.bonds {
            out.push_str(&format!(
                "\n[[bond]]\nends = [{}, {}]\nlength = {:?}\nvector_phase = {:?}\nextra_phase = {:?}\n",
                b.ends[0], b.ends[1], b.length, b.vector_phase, b.extra_phase
            ));
        }
        out
    }

    /// Builds and validates a spec.
    pub fn new(
        vertices: usize,
        bonds: Vec<Bond>,
        leads: Vec<usize>,
        symmetry: GraphSymmetry,
        eta: f64,
    ) -> Result<Self> {
        let spec = Self {
            vertices,
            bonds,
            leads,
            symmetry,
            eta,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Bonds in series with Neumann ends.
    pub fn path(lengths: &[f64]) -> Result<Self> {
        let bonds = lengths
            .iter()
            .enumerate()
            .map(|(i, &l)| Bond::new(i, i + 1, l))
            .collect();
        Self::new(lengths.len() + 1, bonds, vec![], GraphSymmetry::Free, 0.0)
    }

    /// Two fully connected four-vertex subgraphs with vector-potential
    /// phases `±π/2`, joined as described in the module docs. Bond lengths
    /// are proportional to square roots of primes and add up to 7.09 m.
    pub fn default_gse() -> Self {
        let roots: Vec<f64> = [2.0f64, 3.0, 5.0, 7.0, 11.0, 13.0, 17.0]
            .iter()
            .map(|p| p.sqrt())
            .collect();
        let scale = 7.09 / (2.0 * roots[..6].iter().sum::<f64>() + 2.0 * roots[6]);
        let v = 4;
        let mut bonds = Vec::new();
        let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        for (half, sign) in [(0, 1.0), (v, -1.0)] {
            for (&(a, b), root) in pairs.iter().zip(&roots) {
                bonds.push(Bond {
                    ends: [a + half, b + half],
                    length: scale * root,
                    vector_phase: sign * FRAC_PI_2,
                    extra_phase: 0.0,
                });
            }
        }
        bonds.push(Bond::new(0, 1 + v, scale * roots[6]));
        bonds.push(Bond {
            extra_phase: PI,
            ..Bond::new(1, v, scale * roots[6])
        });
        Self::new(2 * v, bonds, vec![], GraphSymmetry::GsePaired, 0.0)
            .expect("default graph is valid")
    }

    pub fn with_leads(mut self, leads: Vec<usize>) -> Result<Self> {
        self.leads = leads;
        self.validate()?;
        Ok(self)
    }

    pub fn total_length(&self) -> f64 {
        self.bonds.iter().map(|b| b.length).sum()
    }

    /// Checks every structural invariant.
    pub fn validate(&self) -> Result<()> {
        if self.vertices == 0 {
            return Err(Error::InvalidDimension(0));
        }
        for (i, b) in self.bonds.iter().enumerate() {
            check_bond(b, self.vertices).map_err(|m| Error::invalid(format!("bond {i}: {m}")))?;
        }
        let mut degree = vec![0usize; self.vertices];
        for b in &self.bonds {
            degree[b.ends[0]] += 1;
            degree[b.ends[1]] += 1;
        }
        if let Some(v) = degree.iter().position(|&d| d == 0) {
            return Err(Error::invalid(format!("vertex {v} has no bonds")));
        }
        if let Some(&l) = self.leads.iter().find(|&&l| l >= self.vertices) {
            return Err(Error::invalid(format!("lead attached to missing vertex {l}")));
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::invalid(format!("eta must be finite and >= 0, got {}", self.eta)));
        }
        if self.symmetry == GraphSymmetry::GsePaired {
            self.check_pairing()?;
        }
        Ok(())
    }

    fn check_pairing(&self) -> Result<()> {
        if self.vertices % 2 != 0 {
            return Err(Error::invalid("gse-paired graph needs an even vertex count"));
        }
        let v = self.vertices / 2;
        let side = |x: usize| x / v;
        let mut first = Vec::new();
        let mut second = Vec::new();
        let mut links = Vec::new();
        for b in &self.bonds {
            match (side(b.ends[0]), side(b.ends[1])) {
                (0, 0) => first.push(b),
                (1, 1) => second.push(b),
                _ => links.push(b),
            }
        }
        if first.len() != second.len() {
            return Err(Error::invalid(format!(
                "subgraphs have {} and {} bonds",
                first.len(),
                second.len()
            )));
        }
        let mut used = vec![false; second.len()];
        for b in &first {
            let partner = second.iter().enumerate().position(|(j, p)| {
                if used[j] || (p.length - b.length).abs() > PAIR_TOL * b.length {
                    return false;
                }
                let forward = p.ends == [b.ends[0] + v, b.ends[1] + v];
                let backward = p.ends == [b.ends[1] + v, b.ends[0] + v];
                (forward && same_angle(p.phase(), -b.phase())) || (backward && same_angle(p.phase(), b.phase()))
            });
            match partner {
                Some(j) => used[j] = true,
                None => {
                    return Err(Error::invalid(format!(
                        "bond {:?} has no partner with equal length and opposite phase",
                        b.ends
                    )))
                }
            }
        }
        if links.len() != 2 {
            return Err(Error::invalid(format!(
                "gse-paired graph needs exactly two connecting bonds, found {}",
                links.len()
            )));
        }
        // orient each link as (subgraph 1 vertex, subgraph 2 vertex)
        let oriented: Vec<(usize, usize, f64)> = links
            .iter()
            .map(|b| {
                if side(b.ends[0]) == 0 {
                    (b.ends[0], b.ends[1] - v, b.extra_phase)
                } else {
                    (b.ends[1], b.ends[0] - v, -b.extra_phase)
                }
            })
            .collect();
        let (a, b) = (links[0], links[1]);
        if (a.length - b.length).abs() > PAIR_TOL * a.length {
            return Err(Error::invalid("connecting bonds must have equal length"));
        }
        if !same_angle(a.vector_phase, 0.0) || !same_angle(b.vector_phase, 0.0) {
            return Err(Error::invalid("connecting bonds must carry no vector potential"));
        }
        let (i0, j0, p0) = oriented[0];
        let (i1, j1, p1) = oriented[1];
        if i0 == j0 || i1 != j0 || j1 != i0 {
            return Err(Error::invalid(
                "connecting bonds must join (i, j') and (j, i') with i != j",
            ));
        }
        let one_pi = (same_angle(p0, 0.0) && same_angle(p1, PI)) || (same_angle(p0, PI) && same_angle(p1, 0.0));
        if !one_pi {
            return Err(Error::invalid(
                "exactly one connecting bond must carry the extra phase pi",
            ));
        }
        Ok(())
    }
}

fn check_bond(b: &Bond, vertices: usize) -> std::result::Result<(), String> {
    if b.ends[0] >= vertices || b.ends[1] >= vertices {
        return Err(format!("endpoint out of range 0..{vertices}: {:?}", b.ends));
    }
    if b.ends[0] == b.ends[1] {
        return Err(format!("self-loop at vertex {}", b.ends[0]));
    }
    if !(b.length > 0.0 && b.length.is_finite()) {
        return Err(format!("length must be positive, got {}", b.length));
    }
    if !b.vector_phase.is_finite() || !b.extra_phase.is_finite() {
        return Err("phases must be finite".into());
    }
    Ok(())
}

/// Secular matrix `h(k)` for Neumann vertex conditions.
pub fn h_matrix(spec: &GraphSpec, k: Complex64) -> Result<CMatrix> {
    let mut h = CMatrix::zeros(spec.vertices, spec.vertices);
    for (idx, b) in spec.bonds.iter().enumerate() {
        let kl = k * b.length;
        let s = kl.sin();
        if s.norm() < POLE_GUARD {
            return Err(Error::PoleProximity {
                bond: idx,
                k: k.re,
                sin_kl: s.norm(),
            });
        }
        let cot = kl.cos() / s;
        let [a, c] = b.ends;
        h[(a, a)] -= cot;
        h[(c, c)] -= cot;
        let hop = Complex64::from_polar(1.0, -b.phase()) / s;
        h[(a, c)] += hop;
        // conjugate phase in the reverse direction keeps h Hermitian at real k
        h[(c, a)] += Complex64::from_polar(1.0, b.phase()) / s;
    }
    Ok(h)
}

/// Number of negative eigenvalues of `h(k)` at real `k`.
fn negative_count(spec: &GraphSpec, k: f64) -> Result<usize> {
    let h = h_matrix(spec, k.into())?;
    Ok(hermitian_eigenvalues(&h)?.iter().filter(|&&e| e < 0.0).count())
}

#[derive(Debug, Clone, Copy)]
pub struct ScanOptions {
    /// Scan points per mean level spacing `π/𝓛`.
    pub points_per_spacing: usize,
    /// Bisection stops once the bracket is below `tol·max(1, k)`.
    pub tol: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            points_per_spacing: 20,
            tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphSpectrum {
    pub sample: SpectrumSample,
    /// Scan points dropped for sitting on a pole.
    pub skipped_points: usize,
    /// Doublets whose splitting exceeded `1e-8` rad/m.
    pub flagged_doublets: usize,
    pub total_length: f64,
}

/// All roots of `det h(k) = 0` in `[k_min, k_max]`.
///
/// `dh/dk` is positive semidefinite, so between poles every eigenvalue of
/// `h(k)` increases and the number of negative eigenvalues drops by one at
/// each root. Counting them on a grid and bisecting the count finds every
/// root, and a Kramers doublet shows up as a drop by two.
pub fn secular_spectrum(spec: &GraphSpec, k_min: f64, k_max: f64, opts: ScanOptions) -> Result<GraphSpectrum> {
    if !spec.leads.is_empty() {
        return Err(Error::invalid("spectrum of a graph with leads is not defined"));
    }
    if !(k_min > 0.0 && k_max > k_min) {
        return Err(Error::invalid(format!("need 0 < k_min < k_max, got [{k_min}, {k_max}]")));
    }
    if opts.points_per_spacing == 0 {
        return Err(Error::invalid("points_per_spacing must be positive"));
    }
    let total = spec.total_length();
    let step = PI / total / opts.points_per_spacing as f64;

    // poles of h(k) split the range into monotone pieces
    let mut breaks = vec![k_min, k_max];
    for b in &spec.bonds {
        let first = (k_min * b.length / PI).ceil() as i64;
        let last = (k_max * b.length / PI).floor() as i64;
        breaks.extend((first.max(1)..=last).map(|n| n as f64 * PI / b.length));
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-12 * b.abs().max(1.0));
    let min_len = spec.bonds.iter().map(|b| b.length).fold(f64::INFINITY, f64::min);
    // |sin(kL)| ≈ L·δ must clear the pole guard
    let offset = 20.0 * POLE_GUARD / min_len;

    let mut roots = Vec::new();
    let mut skipped = 0usize;
    for w in breaks.windows(2) {
        let lo = if w[0] == k_min { k_min } else { w[0] + offset };
        let hi = if w[1] == k_max { k_max } else { w[1] - offset };
        if hi <= lo {
            continue;
        }
        let n = ((hi - lo) / step).ceil().max(1.0) as usize;
        let mut prev: Option<(f64, usize)> = None;
        for j in 0..=n {
            let k = if j == n { hi } else { lo + j as f64 * step };
            let count = match negative_count(spec, k) {
                Ok(c) => c,
                Err(Error::PoleProximity { .. }) => {
                    debug!("scan point k = {k} sits on a pole, skipped");
                    skipped += 1;
                    continue;
                }
                Err(e) => return Err(e),
            };
            if let Some((kp, cp)) = prev {
                if count > cp {
                    warn!("negative-eigenvalue count rose between {kp} and {k}; ignoring");
                } else if count < cp {
                    bisect_roots(spec, kp, k, cp, count, opts.tol, &mut roots)?;
                }
            }
            prev = Some((k, count));
        }
    }
    roots.sort_by(f64::total_cmp);

    let (collapsed, split, flagged, unfold_length) = match spec.symmetry {
        GraphSymmetry::GsePaired => {
            if roots.len() % 2 == 1 {
                warn!("odd root count {}; dropping the last root", roots.len());
                roots.pop();
            }
            let flagged = roots.chunks_exact(2).filter(|p| p[1] - p[0] > 1e-8).count();
            if flagged > 0 {
                warn!("{flagged} doublets split by more than 1e-8 rad/m");
            }
            let (c, s) = collapse_doublets(&roots)?;
            (c, s, flagged, 0.5 * total)
        }
        GraphSymmetry::Free => (roots.clone(), 0.0, 0, total),
    };
    let unfolded = collapsed.iter().map(|&k| unfold_length * k / PI).collect();
    Ok(GraphSpectrum {
        sample: SpectrumSample {
            raw_levels: roots,
            collapsed_levels: collapsed,
            unfolded,
            max_splitting: split,
            label: SpectrumLabel {
                ensemble: "graph".into(),
                realization: 0,
                seed: 0,
            },
        },
        skipped_points: skipped,
        flagged_doublets: flagged,
        total_length: total,
    })
}

fn bisect_roots(
    spec: &GraphSpec,
    a: f64,
    b: f64,
    na: usize,
    nb: usize,
    tol: f64,
    out: &mut Vec<f64>,
) -> Result<()> {
    if na <= nb {
        return Ok(());
    }
    if b - a <= tol * b.abs().max(1.0) {
        let m = 0.5 * (a + b);
        out.extend(std::iter::repeat(m).take(na - nb));
        return Ok(());
    }
    let m = 0.5 * (a + b);
    if m <= a || m >= b {
        return Err(Error::numerical(format!("bisection stalled near k = {m}")));
    }
    let nm = match negative_count(spec, m) {
        Ok(c) => c.clamp(nb, na),
        Err(Error::PoleProximity { .. }) => {
            // a pole inside a root bracket only happens at bracket widths
            // far below the scan step; accept the midpoint
            out.extend(std::iter::repeat(m).take(na - nb));
            return Ok(());
        }
        Err(e) => return Err(e),
    };
    bisect_roots(spec, a, m, na, nm, tol, out)?;
    bisect_roots(spec, m, b, nm, nb, tol, out)
}

/// Scattering matrix of a graph with leads at wavenumber `k(1+iη)`.
#[derive(Debug, Clone)]
pub struct GraphScatterSample {
    pub k: f64,
    pub s: CMatrix,
    pub leads: Vec<usize>,
}

/// `S = −1 + 2i Wᵀ (h + i W Wᵀ)⁻¹ W` with `W` the vertex/lead incidence.
pub fn graph_smatrix(spec: &GraphSpec, k: f64, eta: f64) -> Result<GraphScatterSample> {
    let m = spec.leads.len();
    if m == 0 {
        return Err(Error::invalid("graph has no leads"));
    }
    if !(eta >= 0.0) {
        return Err(Error::invalid(format!("eta must be >= 0, got {eta}")));
    }
    let kc = Complex64::new(k, k * eta);
    let mut a = h_matrix(spec, kc)?;
    let mut w = CMatrix::zeros(spec.vertices, m);
    for (l, &v) in spec.leads.iter().enumerate() {
        w[(v, l)] = 1.0.into();
        a[(v, v)] += Complex64::i();
    }
    let x = solve(a, &w).map_err(|_| Error::numerical(format!("singular graph resolvent at k = {k}")))?;
    let mut s = CMatrix::zeros(m, m);
    for (l, &v) in spec.leads.iter().enumerate() {
        for c in 0..m {
            s[(l, c)] = 2.0 * Complex64::i() * x[(v, c)];
        }
        s[(l, l)] -= 1.0;
    }
    Ok(GraphScatterSample {
        k,
        s,
        leads: spec.leads.clone(),
    })
}

/// Weyl unfolding `e = 2𝓛ν/c` of frequencies given in GHz. Pass half the
/// total length for Kramers-collapsed spectra.
pub fn weyl_unfold_graph(frequencies_ghz: &[f64], total_length: f64) -> Result<Vec<f64>> {
    if !(total_length > 0.0) {
        return Err(Error::invalid("total length must be positive"));
    }
    if frequencies_ghz.iter().any(|&f| !(f > 0.0)) {
        return Err(Error::invalid("frequencies must be positive"));
    }
    if frequencies_ghz.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("frequencies must be ascending"));
    }
    Ok(frequencies_ghz
        .iter()
        .map(|&f| 2.0 * total_length * f * 1e9 / SPEED_OF_LIGHT)
        .collect())
}

/// Frequency in GHz of wavenumber `k` in rad/m.
pub fn wavenumber_to_ghz(k: f64) -> f64 {
    k * SPEED_OF_LIGHT / (2.0 * PI) / 1e9
}
