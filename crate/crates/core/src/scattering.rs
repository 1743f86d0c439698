//! Heidelberg-model Monte Carlo for a single open channel in an absorbing
//! chaotic system.
//!
//! `S(e) = 1 − i W†(e − H + (i/2) W W†)⁻¹ W` with `H` drawn from the GSE
//! (or GUE), one open channel and `Λ` fictitious channels that mimic uniform
//! absorption. For the GSE every channel is a Kramers pair of columns
//! `(ψ, Tψ)` built from an eigen-doublet of an auxiliary GSE matrix, which
//! keeps `W` quaternion real and makes the open 2×2 block of `S` a multiple
//! of the identity.
//!
//! Only the open block is needed. Writing `K̃ = ½ W† (e − H)⁻¹ W` and
//! splitting it into open (o) and fictitious (f) parts, the fictitious
//! channels can be eliminated once per energy:
//!
//! `S_oo = 2 [1 + iK̃_oo + K̃_of (1 + iK̃_ff)⁻¹ K̃_fo]⁻¹ − 1`.
//!
//! All fictitious channels share one coupling strength, so after a single
//! eigendecomposition of the unit-coupling block `B = P_f† G P_f` the
//! inverse is diagonal for every value of that strength. This makes
//! re-evaluating an ensemble at a new `T_f` (as calibration does) cost
//! `O(Λ)` per energy.

use std::f64::consts::PI;

use faer::{Mat, Side};
use log::{info, warn};
use num_complex::Complex64;
use rand::seq::index::sample as sample_indices;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::Absorption;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, solve, CMatrix, CVector};
use crate::rmt::{sample_gse, sample_gue, semicircle_radius, time_reverse, SymmetryClass};
use crate::rng::stream;

/// Records whose `|S + 1|` falls below this have no finite K matrix.
pub const K_POLE_GUARD: f64 = 1e-12;

/// Maximum tolerated fraction of failed records in an ensemble.
pub const MAX_FAILURE_FRACTION: f64 = 0.01;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Coupling strength `π²w²/d` of a channel.
fn strength(w: f64, d: f64) -> f64 {
    PI * PI * w * w / d
}

/// `T = 4y/(1+y)²` with `y = π²w²/d`.
pub fn transmission(w: f64, d: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::invalid(format!("mean spacing must be positive, got {d}")));
    }
    let y = strength(w, d);
    Ok(4.0 * y / ((1.0 + y) * (1.0 + y)))
}

/// Sub-critical solution `y ≤ 1` of `T = 4y/(1+y)²`.
pub fn strength_for_transmission(t: f64) -> Result<f64> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::invalid(format!("transmission must lie in (0, 1], got {t}")));
    }
    let root = (1.0 - t).sqrt();
    // (2 − T − 2√(1−T))/T = (1 − √(1−T))², rewritten for T → 0
    let y = t / ((1.0 + root) * (1.0 + root));
    Ok(y)
}

/// Coupling amplitude `w` realizing transmission `t` at spacing `d`.
pub fn inverse_transmission(t: f64, d: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::invalid(format!("mean spacing must be positive, got {d}")));
    }
    Ok((strength_for_transmission(t)? * d).sqrt() / PI)
}

/// Channel layout of the Heidelberg model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingSpec {
    /// Hamiltonian dimension in distinct levels (quaternion dimension for the
    /// GSE).
    pub n: usize,
    pub open_transmissions: Vec<f64>,
    pub lambda: usize,
    pub t_f: f64,
    /// Mean spacing of distinct levels at the band center.
    pub d: f64,
}

impl CouplingSpec {
    pub fn tau_abs(&self) -> f64 {
        2.0 * self.lambda as f64 * self.t_f
    }

    /// Number of independent channel vectors the layout needs.
    fn vectors(&self, class: SymmetryClass) -> usize {
        match class {
            SymmetryClass::Gse => self.open_transmissions.len() + self.lambda,
            _ => self.open_transmissions.len() + 2 * self.lambda,
        }
    }

    pub fn validate(&self, class: SymmetryClass) -> Result<()> {
        if class == SymmetryClass::Goe {
            return Err(Error::invalid("scattering supports the GSE and GUE classes"));
        }
        if self.n == 0 {
            return Err(Error::InvalidDimension(0));
        }
        if self.open_transmissions.is_empty() {
            return Err(Error::invalid("at least one open channel is required"));
        }
        if let Some(t) = self.open_transmissions.iter().find(|&&t| !(0.0..=1.0).contains(&t)) {
            return Err(Error::invalid(format!("open transmission {t} outside [0, 1]")));
        }
        if !(0.0..=1.0).contains(&self.t_f) {
            return Err(Error::invalid(format!("fictitious transmission {} outside [0, 1]", self.t_f)));
        }
        if !(self.d > 0.0) {
            return Err(Error::invalid(format!("mean spacing must be positive, got {}", self.d)));
        }
        if self.vectors(class) >= self.n {
            return Err(Error::invalid(format!(
                "{} channel vectors do not fit below dimension {}",
                self.vectors(class),
                self.n
            )));
        }
        Ok(())
    }

    /// Squared column norm giving transmission `t` for a Hamiltonian with
    /// `n` distinct levels at spacing `d`.
    fn column_norm(&self, t: f64) -> Result<f64> {
        if t == 0.0 {
            return Ok(0.0);
        }
        Ok(2.0 * self.n as f64 * self.d * strength_for_transmission(t)? / PI)
    }
}

/// Coupling matrix with one column per channel (Kramers partners adjacent
/// for the GSE), open channels first.
#[derive(Debug, Clone)]
pub struct Coupling {
    pub w: CMatrix,
    /// Number of open columns (2 per open channel for the GSE).
    pub open_columns: usize,
    /// Squared norm of every column.
    pub column_norms: Vec<f64>,
}

fn channel_vectors<R: rand::Rng + ?Sized>(
    class: SymmetryClass,
    n: usize,
    count: usize,
    rng: &mut R,
) -> Result<CMatrix> {
    match class {
        SymmetryClass::Gse => {
            let aux = sample_gse(n, rng)?;
            let (_, u) = hermitian_eigen(aux.matrix())?;
            let picks = sample_indices(rng, n, count);
            let mut w = CMatrix::zeros(2 * n, 2 * count);
            for (c, j) in picks.iter().enumerate() {
                let psi: CVector = u.column(2 * j).into_owned();
                let partner = time_reverse(&psi);
                w.set_column(2 * c, &psi);
                w.set_column(2 * c + 1, &partner);
            }
            Ok(w)
        }
        SymmetryClass::Gue => {
            let aux = sample_gue(n, rng)?;
            let (_, u) = hermitian_eigen(&aux)?;
            let picks = sample_indices(rng, n, count);
            let mut w = CMatrix::zeros(n, count);
            for (c, j) in picks.iter().enumerate() {
                w.set_column(c, &u.column(j));
            }
            Ok(w)
        }
        SymmetryClass::Goe => Err(Error::invalid("scattering supports the GSE and GUE classes")),
    }
}

/// Draws channel vectors and scales them to the targeted transmissions.
pub fn build_coupling<R: rand::Rng + ?Sized>(
    class: SymmetryClass,
    spec: &CouplingSpec,
    rng: &mut R,
) -> Result<Coupling> {
    spec.validate(class)?;
    let mut w = channel_vectors(class, spec.n, spec.vectors(class), rng)?;
    let per = if class == SymmetryClass::Gse { 2 } else { 1 };
    let mut norms = Vec::with_capacity(w.ncols());
    for &t in &spec.open_transmissions {
        norms.extend(std::iter::repeat(spec.column_norm(t)?).take(per));
    }
    let fict = spec.column_norm(spec.t_f)?;
    norms.resize(w.ncols(), fict);
    for (c, &nc) in norms.iter().enumerate() {
        w.column_mut(c).scale_mut(nc.sqrt());
    }
    Ok(Coupling {
        w,
        open_columns: per * spec.open_transmissions.len(),
        column_norms: norms,
    })
}

/// Full S matrix `1 − iW†(e − H + (i/2)WW†)⁻¹W` by a direct solve.
pub fn heidelberg_smatrix(h: &CMatrix, w: &CMatrix, e: f64) -> Result<CMatrix> {
    if h.nrows() != h.ncols() || w.nrows() != h.nrows() {
        return Err(Error::InvalidShape(format!(
            "H is {}x{}, W is {}x{}",
            h.nrows(),
            h.ncols(),
            w.nrows(),
            w.ncols()
        )));
    }
    let mut a = -h + (w * w.adjoint()) * Complex64::new(0.0, 0.5);
    for i in 0..a.nrows() {
        a[(i, i)] += e;
    }
    let x = solve(a, w).map_err(|_| Error::numerical(format!("singular resolvent at e = {e}")))?;
    let mut s = -(w.adjoint() * x) * I;
    for i in 0..s.nrows() {
        s[(i, i)] += 1.0;
    }
    Ok(s)
}

/// Real and imaginary parts of `K = i(S−1)/(S+1) = u − iv`, and
/// `x = (u²+v²+1)/(2v)` (infinite at `v = 0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KValues {
    pub u: f64,
    pub v: f64,
    pub x: f64,
}

pub fn k_matrix(s: Complex64) -> Result<KValues> {
    let den = s + 1.0;
    if den.norm() < K_POLE_GUARD {
        return Err(Error::numerical(format!("S = {s} is at the K-matrix pole S = -1")));
    }
    let k = I * (s - 1.0) / den;
    let (u, v) = (k.re, -k.im);
    let x = if v == 0.0 {
        f64::INFINITY
    } else {
        (u * u + v * v + 1.0) / (2.0 * v)
    };
    Ok(KValues { u, v, x })
}

/// How absorption is specified for a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbsorptionTarget {
    /// Calibrate the fictitious channels to the analytic `⟨R⟩(γ)`.
    Gamma(f64),
    /// Use `τ_abs = 2ΛT_f` directly.
    TauAbs(f64),
}

/// Run configuration (TOML).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatteringConfig {
    #[serde(default = "default_class")]
    pub class: SymmetryClass,
    /// Distinct levels (quaternion dimension for the GSE).
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_lambda")]
    pub lambda: usize,
    #[serde(default = "default_open")]
    pub open_transmission: f64,
    #[serde(default = "default_realizations")]
    pub realizations: usize,
    #[serde(default = "default_energies")]
    pub energies: usize,
    /// Energies span `±window·R` around the band center, `R` the
    /// semicircle radius.
    #[serde(default = "default_window")]
    pub window: f64,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub tau_abs: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

fn default_class() -> SymmetryClass {
    SymmetryClass::Gse
}
fn default_n() -> usize {
    100
}
fn default_lambda() -> usize {
    10
}
fn default_open() -> f64 {
    1.0
}
fn default_realizations() -> usize {
    400
}
fn default_energies() -> usize {
    50
}
fn default_window() -> f64 {
    0.25
}

impl Default for ScatteringConfig {
    fn default() -> Self {
        Self {
            class: default_class(),
            n: default_n(),
            lambda: default_lambda(),
            open_transmission: default_open(),
            realizations: default_realizations(),
            energies: default_energies(),
            window: default_window(),
            gamma: None,
            tau_abs: None,
            seed: 0,
        }
    }
}

impl ScatteringConfig {
    pub fn from_toml(src: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(src).map_err(|e| Error::Parse {
            line: e.span().map(|s| src[..s.start].matches('\n').count() + 1),
            message: e.message().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn target(&self) -> Result<AbsorptionTarget> {
        match (self.gamma, self.tau_abs) {
            (Some(g), None) => Ok(AbsorptionTarget::Gamma(g)),
            (None, Some(t)) => Ok(AbsorptionTarget::TauAbs(t)),
            (None, None) => Ok(AbsorptionTarget::TauAbs(0.0)),
            (Some(_), Some(_)) => Err(Error::invalid("give either gamma or tau_abs, not both")),
        }
    }

    /// Largest `Λ` whose channel vectors fit below the dimension.
    pub fn max_lambda(&self) -> usize {
        match self.class {
            SymmetryClass::Gse => self.n.saturating_sub(2),
            _ => self.n.saturating_sub(2) / 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.class == SymmetryClass::Goe {
            return Err(Error::invalid("scattering supports the GSE and GUE classes"));
        }
        if self.n < 8 {
            return Err(Error::invalid(format!("n = {} is too small (need >= 8)", self.n)));
        }
        if self.lambda > self.max_lambda() {
            return Err(Error::invalid(format!(
                "lambda = {} exceeds {} for n = {}",
                self.lambda,
                self.max_lambda(),
                self.n
            )));
        }
        if !(0.0..=1.0).contains(&self.open_transmission) {
            return Err(Error::invalid("open_transmission must lie in [0, 1]"));
        }
        if self.realizations == 0 || self.energies == 0 {
            return Err(Error::invalid("realizations and energies must be positive"));
        }
        if !(self.window > 0.0 && self.window < 1.0) {
            return Err(Error::invalid("window must lie in (0, 1)"));
        }
        match self.target()? {
            AbsorptionTarget::Gamma(g) if !(g > 0.0 && g.is_finite()) => {
                Err(Error::invalid(format!("gamma must be positive, got {g}")))
            }
            AbsorptionTarget::TauAbs(t) if !(t >= 0.0 && t.is_finite()) => {
                Err(Error::invalid(format!("tau_abs must be >= 0, got {t}")))
            }
            AbsorptionTarget::TauAbs(t) if t > 0.0 && t > 2.0 * self.lambda as f64 => Err(Error::invalid(format!(
                "tau_abs = {t} needs T_f > 1 with lambda = {}",
                self.lambda
            ))),
            _ => Ok(()),
        }
    }

    fn radius(&self) -> f64 {
        match self.class {
            SymmetryClass::Gse => semicircle_radius(self.n),
            _ => 2.0 * (self.n as f64).sqrt(),
        }
    }

    pub fn energy_grid(&self) -> Vec<f64> {
        let half = self.window * self.radius();
        if self.energies == 1 {
            return vec![0.0];
        }
        (0..self.energies)
            .map(|i| -half + 2.0 * half * i as f64 / (self.energies - 1) as f64)
            .collect()
    }
}

/// Resolvent data of one energy: the open block `D`, the fictitious block
/// eigenvalues `β` and the projected cross block `c = V†C`, all at unit
/// coupling.
#[derive(Debug, Clone)]
struct EnergyBlock {
    index: u32,
    e: f64,
    open: Vec<Complex64>,
    beta: Vec<f64>,
    cross: Vec<Complex64>,
}

#[derive(Debug, Clone)]
struct Realization {
    id: u64,
    spacing: f64,
    blocks: Vec<EnergyBlock>,
    failures: usize,
}

/// An ensemble whose Hamiltonians and channel vectors are drawn and reduced
/// once, ready to be evaluated at any fictitious transmission.
#[derive(Debug, Clone)]
pub struct PreparedEnsemble {
    config: ScatteringConfig,
    lambda: usize,
    open_columns: usize,
    realizations: Vec<Realization>,
    grid: Vec<f64>,
}

/// Doublet (or level) spacing at the band center, measured from one
/// spectrum.
fn center_spacing(levels: &[f64]) -> f64 {
    let n = levels.len();
    let c = n / 2;
    let m = (n / 8).max(1);
    (levels[c + m] - levels[c - m]) / (2 * m) as f64
}

/// Hamiltonian, its spectrum and unit-norm channel vectors of one
/// realization.
struct Draw {
    h: CMatrix,
    values: Vec<f64>,
    vectors: CMatrix,
    spacing: f64,
    channels: CMatrix,
}

fn draw(config: &ScatteringConfig, lambda: usize, id: u64) -> Result<Draw> {
    let mut rng = stream(config.seed, id);
    let n = config.n;
    let (h, values, vectors, distinct) = match config.class {
        SymmetryClass::Gse => {
            let h = sample_gse(n, &mut rng)?.into_matrix();
            let (values, vectors) = hermitian_eigen(&h)?;
            let distinct: Vec<f64> = values.chunks_exact(2).map(|p| 0.5 * (p[0] + p[1])).collect();
            (h, values, vectors, distinct)
        }
        _ => {
            let h = sample_gue(n, &mut rng)?;
            let (values, vectors) = hermitian_eigen(&h)?;
            let distinct = values.clone();
            (h, values, vectors, distinct)
        }
    };
    let count = match config.class {
        SymmetryClass::Gse => 1 + lambda,
        _ => 1 + 2 * lambda,
    };
    let channels = channel_vectors(config.class, n, count, &mut rng)?;
    Ok(Draw {
        h,
        values,
        vectors,
        spacing: center_spacing(&distinct),
        channels,
    })
}

fn prepare_one(config: &ScatteringConfig, lambda: usize, id: u64, grid: &[f64]) -> Result<Realization> {
    let Draw {
        values,
        vectors,
        spacing,
        channels: w,
        ..
    } = draw(config, lambda, id)?;
    let per = if config.class == SymmetryClass::Gse { 2 } else { 1 };
    let dim = values.len();
    let m = w.ncols();
    let u = Mat::<Complex64>::from_fn(dim, dim, |i, j| vectors[(i, j)]);
    let wf = Mat::<Complex64>::from_fn(dim, m, |i, j| w[(i, j)]);
    let p: Mat<Complex64> = u.adjoint() * &wf;
    let o = per;
    let f = m - o;
    let radius = config.radius();

    let mut blocks = Vec::with_capacity(grid.len());
    let mut failures = 0;
    for (index, &e) in grid.iter().enumerate() {
        let nearest = values.iter().map(|&ev| (e - ev).abs()).fold(f64::INFINITY, f64::min);
        if nearest < 1e-12 * radius {
            warn!("realization {id}: energy {e} sits on an eigenvalue, record skipped");
            failures += 1;
            continue;
        }
        let gp = Mat::<Complex64>::from_fn(dim, m, |i, j| p[(i, j)] * (1.0 / (e - values[i])));
        let a: Mat<Complex64> = p.adjoint() * &gp;
        let open = (0..o * o).map(|k| a[(k / o, k % o)]).collect();
        let (beta, cross) = if f > 0 {
            let b = Mat::<Complex64>::from_fn(f, f, |i, j| a[(o + i, o + j)]);
            let evd = b
                .self_adjoint_eigen(Side::Lower)
                .map_err(|err| Error::numerical(format!("fictitious block eigen solver: {err:?}")))?;
            let s = evd.S().column_vector();
            let beta: Vec<f64> = (0..f).map(|i| s[i].re).collect();
            let c = Mat::<Complex64>::from_fn(f, o, |i, j| a[(o + i, j)]);
            let vc: Mat<Complex64> = evd.U().adjoint() * &c;
            let cross = (0..f * o).map(|k| vc[(k / o, k % o)]).collect();
            (beta, cross)
        } else {
            (Vec::new(), Vec::new())
        };
        blocks.push(EnergyBlock {
            index: index as u32,
            e,
            open,
            beta,
            cross,
        });
    }
    Ok(Realization {
        id,
        spacing,
        blocks,
        failures,
    })
}

/// One evaluated `(realization, energy)` sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatterRecord {
    pub realization: u64,
    /// Position on the energy grid.
    pub step: u32,
    pub e: f64,
    pub s_re: f64,
    pub s_im: f64,
    pub reflection: f64,
    pub u: f64,
    pub v: f64,
    pub x: f64,
}

impl ScatterRecord {
    pub fn s(&self) -> Complex64 {
        Complex64::new(self.s_re, self.s_im)
    }

    pub fn amplitude(&self) -> f64 {
        self.reflection.sqrt()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScatteringEnsemble {
    pub config: ScatteringConfig,
    pub lambda: usize,
    pub t_f: f64,
    pub tau_abs: f64,
    /// Target of the calibration, when calibrated.
    pub gamma: Option<f64>,
    /// Ensemble mean of the measured center spacing.
    pub mean_spacing: f64,
    pub energy_step: f64,
    pub records: Vec<ScatterRecord>,
    pub failures: usize,
    /// Largest `|S₁₁ − S₂₂|` and `|S₁₂|` of the open Kramers block.
    pub kramers_deviation: f64,
}

impl ScatteringEnsemble {
    pub fn reflections(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.reflection).collect()
    }

    pub fn amplitudes(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.amplitude()).collect()
    }

    pub fn im_k(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.v).collect()
    }

    pub fn re_k(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.u).collect()
    }

    pub fn mean_reflection(&self) -> f64 {
        self.records.iter().map(|r| r.reflection).sum::<f64>() / self.records.len() as f64
    }

    pub fn mean_amplitude(&self) -> f64 {
        self.records.iter().map(|r| r.amplitude()).sum::<f64>() / self.records.len() as f64
    }

    pub fn mean_s(&self) -> Complex64 {
        self.records.iter().map(|r| r.s()).sum::<Complex64>() / self.records.len() as f64
    }

    /// `R/⟨R⟩` for every record.
    pub fn rescaled_reflections(&self) -> Vec<f64> {
        let m = self.mean_reflection();
        self.records.iter().map(|r| r.reflection / m).collect()
    }

    /// `r/⟨r⟩` for every record.
    pub fn rescaled_amplitudes(&self) -> Vec<f64> {
        let m = self.mean_amplitude();
        self.records.iter().map(|r| r.amplitude() / m).collect()
    }
}

/// Open-block S matrix of one energy for given unit-coupling data.
fn open_block(block: &EnergyBlock, o: usize, n_open: f64, n_fict: f64) -> Result<Vec<Complex64>> {
    let mut m = vec![Complex64::new(0.0, 0.0); o * o];
    for a in 0..o {
        for b in 0..o {
            m[a * o + b] = I * (0.5 * n_open) * block.open[a * o + b];
        }
        m[a * o + a] += 1.0;
    }
    if n_fict > 0.0 {
        let pref = 0.25 * n_open * n_fict;
        for (j, &beta) in block.beta.iter().enumerate() {
            let wgt = pref / Complex64::new(1.0, 0.5 * n_fict * beta);
            let row = &block.cross[j * o..(j + 1) * o];
            for a in 0..o {
                for b in 0..o {
                    m[a * o + b] += wgt * row[a].conj() * row[b];
                }
            }
        }
    }
    let inv = invert_small(&m, o)?;
    Ok((0..o * o)
        .map(|k| {
            let diag = if k / o == k % o { 1.0 } else { 0.0 };
            2.0 * inv[k] - diag
        })
        .collect())
}

fn invert_small(m: &[Complex64], o: usize) -> Result<Vec<Complex64>> {
    match o {
        1 => {
            if m[0].norm() == 0.0 {
                return Err(Error::numerical("singular open block"));
            }
            Ok(vec![1.0 / m[0]])
        }
        2 => {
            let det = m[0] * m[3] - m[1] * m[2];
            if det.norm() == 0.0 {
                return Err(Error::numerical("singular open block"));
            }
            Ok(vec![m[3] / det, -m[1] / det, -m[2] / det, m[0] / det])
        }
        _ => {
            let a = CMatrix::from_row_slice(o, o, m);
            let inv = a
                .try_inverse()
                .ok_or_else(|| Error::numerical("singular open block"))?;
            Ok((0..o * o).map(|k| inv[(k / o, k % o)]).collect())
        }
    }
}

impl PreparedEnsemble {
    /// Draws every realization of `config` with `lambda` fictitious channels.
    pub fn prepare(config: &ScatteringConfig, lambda: usize) -> Result<Self> {
        config.validate()?;
        if lambda > config.max_lambda() {
            return Err(Error::invalid(format!(
                "lambda = {lambda} exceeds {} for n = {}",
                config.max_lambda(),
                config.n
            )));
        }
        let grid = config.energy_grid();
        let realizations = (0..config.realizations as u64)
            .into_par_iter()
            .map(|id| prepare_one(config, lambda, id, &grid))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            config: config.clone(),
            lambda,
            open_columns: if config.class == SymmetryClass::Gse { 2 } else { 1 },
            realizations,
            grid,
        })
    }

    /// Re-draws realization `id` and returns its Hamiltonian and the
    /// coupling matrix scaled for fictitious transmission `t_f`. Used to
    /// cross-check [`PreparedEnsemble::evaluate`] against a direct solve.
    pub fn realization_model(&self, id: u64, t_f: f64) -> Result<(CMatrix, Coupling)> {
        let d = draw(&self.config, self.lambda, id)?;
        let spec = CouplingSpec {
            n: self.config.n,
            open_transmissions: vec![self.config.open_transmission],
            lambda: self.lambda,
            t_f,
            d: d.spacing,
        };
        let mut w = d.channels;
        let o = self.open_columns;
        let mut norms = vec![spec.column_norm(self.config.open_transmission)?; o];
        norms.resize(w.ncols(), spec.column_norm(t_f)?);
        for (c, &nc) in norms.iter().enumerate() {
            w.column_mut(c).scale_mut(nc.sqrt());
        }
        Ok((
            d.h,
            Coupling {
                w,
                open_columns: o,
                column_norms: norms,
            },
        ))
    }

    pub fn energy_grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn lambda(&self) -> usize {
        self.lambda
    }

    pub fn config(&self) -> &ScatteringConfig {
        &self.config
    }

    fn norms(&self, spacing: f64, t_f: f64) -> Result<(f64, f64)> {
        let spec = CouplingSpec {
            n: self.config.n,
            open_transmissions: vec![self.config.open_transmission],
            lambda: self.lambda,
            t_f,
            d: spacing,
        };
        Ok((spec.column_norm(self.config.open_transmission)?, spec.column_norm(t_f)?))
    }

    /// Mean reflection at fictitious transmission `t_f`.
    pub fn mean_reflection(&self, t_f: f64) -> Result<f64> {
        let sums = self
            .realizations
            .par_iter()
            .map(|r| -> Result<(f64, usize)> {
                let (n_open, n_fict) = self.norms(r.spacing, t_f)?;
                let mut acc = 0.0;
                let mut count = 0;
                for b in &r.blocks {
                    if let Ok(s) = open_block(b, self.open_columns, n_open, n_fict) {
                        acc += s[0].norm_sqr();
                        count += 1;
                    }
                }
                Ok((acc, count))
            })
            .collect::<Result<Vec<_>>>()?;
        let (acc, count) = sums.iter().fold((0.0, 0), |(a, c), &(x, y)| (a + x, c + y));
        if count == 0 {
            return Err(Error::numerical("no valid records"));
        }
        Ok(acc / count as f64)
    }

    /// Evaluates every record at fictitious transmission `t_f`.
    pub fn evaluate(&self, t_f: f64, gamma: Option<f64>) -> Result<ScatteringEnsemble> {
        if !(0.0..=1.0).contains(&t_f) {
            return Err(Error::invalid(format!("fictitious transmission {t_f} outside [0, 1]")));
        }
        let o = self.open_columns;
        let per_realization = self
            .realizations
            .par_iter()
            .map(|r| -> Result<(Vec<ScatterRecord>, usize, f64)> {
                let (n_open, n_fict) = self.norms(r.spacing, t_f)?;
                let mut out = Vec::with_capacity(r.blocks.len());
                let mut failures = r.failures;
                let mut dev: f64 = 0.0;
                for b in &r.blocks {
                    let s = match open_block(b, o, n_open, n_fict) {
                        Ok(s) => s,
                        Err(e) => {
                            warn!("realization {}, e = {}: {e}", r.id, b.e);
                            failures += 1;
                            continue;
                        }
                    };
                    if o == 2 {
                        dev = dev.max((s[0] - s[3]).norm()).max(s[1].norm()).max(s[2].norm());
                    }
                    let k = match k_matrix(s[0]) {
                        Ok(k) => k,
                        Err(e) => {
                            warn!("realization {}, e = {}: {e}", r.id, b.e);
                            failures += 1;
                            continue;
                        }
                    };
                    out.push(ScatterRecord {
                        realization: r.id,
                        step: b.index,
                        e: b.e,
                        s_re: s[0].re,
                        s_im: s[0].im,
                        reflection: s[0].norm_sqr(),
                        u: k.u,
                        v: k.v,
                        x: k.x,
                    });
                }
                Ok((out, failures, dev))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut records = Vec::new();
        let mut failures = 0;
        let mut dev: f64 = 0.0;
        for (recs, f, d) in per_realization {
            records.extend(recs);
            failures += f;
            dev = dev.max(d);
        }
        let total = self.config.realizations * self.config.energies;
        if failures as f64 > MAX_FAILURE_FRACTION * total as f64 {
            return Err(Error::numerical(format!("{failures} of {total} records failed")));
        }
        let mean_spacing =
            self.realizations.iter().map(|r| r.spacing).sum::<f64>() / self.realizations.len() as f64;
        let energy_step = if self.grid.len() > 1 { self.grid[1] - self.grid[0] } else { 0.0 };
        Ok(ScatteringEnsemble {
            config: self.config.clone(),
            lambda: self.lambda,
            t_f,
            tau_abs: 2.0 * self.lambda as f64 * t_f,
            gamma,
            mean_spacing,
            energy_step,
            records,
            failures,
            kramers_deviation: dev,
        })
    }
}

/// Outcome of matching the ensemble `⟨R⟩` to the analytic one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub gamma: f64,
    pub lambda: usize,
    pub t_f: f64,
    pub tau_abs: f64,
    pub target_mean_reflection: f64,
    pub achieved_mean_reflection: f64,
    pub iterations: usize,
}

/// Finds `T_f` on a prepared ensemble so that its `⟨R⟩` equals the analytic
/// value at `gamma`. The same realizations are reused at every trial, so the
/// objective is a smooth decreasing function of `T_f`.
pub fn calibrate_prepared(prepared: &PreparedEnsemble, gamma: f64) -> Result<Calibration> {
    if !(gamma > 0.0) {
        return Err(Error::invalid(format!("gamma must be positive, got {gamma}")));
    }
    let target = Absorption::new(gamma, prepared.config.class)?.mean_reflection();
    let lossless = prepared.mean_reflection(0.0)?;
    let strongest = prepared.mean_reflection(1.0)?;
    if prepared.lambda == 0 || strongest > target || lossless < target {
        return Err(Error::CalibrationFailure(format!(
            "target <R> = {target:.6} (gamma = {gamma}) not bracketed: <R> spans [{strongest:.6}, {lossless:.6}] \
             for T_f in [0, 1] with lambda = {}",
            prepared.lambda
        )));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut iterations = 0;
    while hi - lo > 1e-10 {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        if prepared.mean_reflection(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t_f = 0.5 * (lo + hi);
    Ok(Calibration {
        gamma,
        lambda: prepared.lambda,
        t_f,
        tau_abs: 2.0 * prepared.lambda as f64 * t_f,
        target_mean_reflection: target,
        achieved_mean_reflection: prepared.mean_reflection(t_f)?,
        iterations,
    })
}

/// Calibrates `τ_abs` for `gamma`, starting from the configured `Λ` and
/// doubling it (up to the dimension limit) while the target stays out of
/// reach with `T_f ≤ 1`.
pub fn calibrate_tau_abs(gamma: f64, config: &ScatteringConfig) -> Result<(PreparedEnsemble, Calibration)> {
    let mut lambda = config.lambda.max(1);
    loop {
        let prepared = PreparedEnsemble::prepare(config, lambda)?;
        match calibrate_prepared(&prepared, gamma) {
            Ok(c) => {
                info!("gamma = {gamma}: lambda = {}, T_f = {:.6}, tau_abs = {:.4}", c.lambda, c.t_f, c.tau_abs);
                return Ok((prepared, c));
            }
            Err(Error::CalibrationFailure(msg)) if lambda < config.max_lambda() => {
                let next = (2 * lambda).min(config.max_lambda());
                info!("{msg}; retrying with lambda = {next}");
                lambda = next;
            }
            Err(e) => return Err(e),
        }
    }
}

/// Runs the ensemble described by `config`, calibrating first when it names
/// a `gamma`.
pub fn run_ensemble(config: &ScatteringConfig) -> Result<ScatteringEnsemble> {
    config.validate()?;
    match config.target()? {
        AbsorptionTarget::Gamma(g) => {
            let (prepared, cal) = calibrate_tau_abs(g, config)?;
            prepared.evaluate(cal.t_f, Some(g))
        }
        AbsorptionTarget::TauAbs(tau) => {
            let t_f = if tau == 0.0 { 0.0 } else { tau / (2.0 * config.lambda as f64) };
            PreparedEnsemble::prepare(config, config.lambda)?.evaluate(t_f, None)
        }
    }
}

/// Normalized two-point correlation of `S` versus energy offset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Correlation {
    /// Offsets in grid steps.
    pub lags: Vec<usize>,
    /// Offsets in units of the mean level spacing.
    pub epsilon: Vec<f64>,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    pub modulus: Vec<f64>,
    /// Jackknife (over realizations) standard error of the modulus.
    pub modulus_se: Vec<f64>,
}

#[derive(Clone)]
struct Sums {
    s: Complex64,
    s2: f64,
    count: f64,
    pairs: Vec<Complex64>,
    pair_count: Vec<f64>,
}

fn correlation_from(total: &Sums, lag_zero: &[bool]) -> Result<Vec<Complex64>> {
    let mean = total.s / total.count;
    let den = total.s2 / total.count - mean.norm_sqr();
    if !(den > 1e-14) {
        return Err(Error::DegenerateEnsemble(format!(
            "<|S|^2> - |<S>|^2 = {den:e}; S does not fluctuate"
        )));
    }
    Ok(total
        .pairs
        .iter()
        .zip(&total.pair_count)
        .zip(lag_zero)
        .map(|((&p, &c), &zero)| {
            if zero {
                Complex64::new(1.0, 0.0)
            } else {
                (p / c - mean.norm_sqr()) / den
            }
        })
        .collect())
}

/// `C(ε) = [⟨S(e)S*(e+ε)⟩ − |⟨S⟩|²] / [⟨|S|²⟩ − |⟨S⟩|²]` at offsets of
/// `lags` grid steps, averaged over energies and realizations.
pub fn autocorrelation(ensemble: &ScatteringEnsemble, lags: &[usize]) -> Result<Correlation> {
    if ensemble.records.is_empty() {
        return Err(Error::DegenerateEnsemble("no records".into()));
    }
    let steps = ensemble.config.energies;
    if let Some(&l) = lags.iter().find(|&&l| l >= steps) {
        return Err(Error::invalid(format!("lag {l} exceeds the {steps}-point energy grid")));
    }
    // per-realization sums, in realization order
    let mut per: Vec<Sums> = Vec::new();
    let mut grid: Vec<Option<Complex64>> = vec![None; steps];
    let mut idx = 0;
    let recs = &ensemble.records;
    while idx < recs.len() {
        let id = recs[idx].realization;
        grid.iter_mut().for_each(|g| *g = None);
        while idx < recs.len() && recs[idx].realization == id {
            grid[recs[idx].step as usize] = Some(recs[idx].s());
            idx += 1;
        }
        let mut sums = Sums {
            s: 0.0.into(),
            s2: 0.0,
            count: 0.0,
            pairs: vec![0.0.into(); lags.len()],
            pair_count: vec![0.0; lags.len()],
        };
        for s in grid.iter().flatten() {
            sums.s += s;
            sums.s2 += s.norm_sqr();
            sums.count += 1.0;
        }
        for (li, &lag) in lags.iter().enumerate() {
            for j in 0..steps - lag {
                if let (Some(a), Some(b)) = (grid[j], grid[j + lag]) {
                    sums.pairs[li] += a * b.conj();
                    sums.pair_count[li] += 1.0;
                }
            }
        }
        per.push(sums);
    }
    let add = |acc: &mut Sums, x: &Sums, sign: f64| {
        acc.s += x.s * sign;
        acc.s2 += x.s2 * sign;
        acc.count += x.count * sign;
        for i in 0..acc.pairs.len() {
            acc.pairs[i] += x.pairs[i] * sign;
            acc.pair_count[i] += x.pair_count[i] * sign;
        }
    };
    let mut total = Sums {
        s: 0.0.into(),
        s2: 0.0,
        count: 0.0,
        pairs: vec![0.0.into(); lags.len()],
        pair_count: vec![0.0; lags.len()],
    };
    for p in &per {
        add(&mut total, p, 1.0);
    }
    let zero: Vec<bool> = lags.iter().map(|&l| l == 0).collect();
    let c = correlation_from(&total, &zero)?;

    let r = per.len();
    let mut se = vec![0.0; lags.len()];
    if r > 1 {
        let mut jack: Vec<Vec<f64>> = Vec::with_capacity(r);
        for p in &per {
            let mut t = total.clone();
            add(&mut t, p, -1.0);
            jack.push(correlation_from(&t, &zero)?.iter().map(|z| z.norm()).collect());
        }
        for li in 0..lags.len() {
            let mean = jack.iter().map(|j| j[li]).sum::<f64>() / r as f64;
            let var = jack.iter().map(|j| (j[li] - mean).powi(2)).sum::<f64>();
            se[li] = ((r - 1) as f64 / r as f64 * var).sqrt();
        }
    }
    let unit = ensemble.energy_step / ensemble.mean_spacing;
    Ok(Correlation {
        lags: lags.to_vec(),
        epsilon: lags.iter().map(|&l| l as f64 * unit).collect(),
        re: c.iter().map(|z| z.re).collect(),
        im: c.iter().map(|z| z.im).collect(),
        modulus: c.iter().map(|z| z.norm()).collect(),
        modulus_se: se,
    })
}
