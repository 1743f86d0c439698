//! Gaussian random-matrix ensembles.
//!
//! GSE matrices are stored as `2n × 2n` complex Hermitian matrices in the
//! basis `{|1⟩..|n⟩, T|1⟩..T|n⟩}`, where they take the block form
//! `[[H₀, V], [−V*, H₀*]]` with `H₀` Hermitian and `V = −Vᵀ`. Time reversal
//! acts as `T = Y·K` with `Y = [[0, −1], [1, 0]]` and `K` complex conjugation.
//!
//! Variance convention: every independent off-diagonal quaternion coefficient
//! has standard deviation `σ = 1/√2` and the real diagonal coefficients
//! `h⁰ₙₙ` have `√2·σ = 1`. Seen as a `2n × 2n` complex matrix, diagonal
//! entries then have unit variance and off-diagonal entries `E|h|² = 1`,
//! exactly like the GUE sampled here; the semicircle radius is `2√(2n)`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, CMatrix, CVector};

/// Standard deviation of the off-diagonal quaternion coefficients.
pub const QUATERNION_SIGMA: f64 = FRAC_1_SQRT_2;

/// Fraction of each spectrum (centered) kept for unfolded statistics.
pub const UNFOLD_WINDOW: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SymmetryClass {
    Goe,
    Gue,
    Gse,
}

impl SymmetryClass {
    pub fn name(self) -> &'static str {
        match self {
            SymmetryClass::Goe => "GOE",
            SymmetryClass::Gue => "GUE",
            SymmetryClass::Gse => "GSE",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "GOE" => Ok(SymmetryClass::Goe),
            "GUE" => Ok(SymmetryClass::Gue),
            "GSE" => Ok(SymmetryClass::Gse),
            other => Err(Error::invalid(format!("unknown symmetry class '{other}'"))),
        }
    }
}

impl std::fmt::Display for SymmetryClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Self-dual Hermitian quaternion matrix (a GSE Hamiltonian).
#[derive(Debug, Clone, PartialEq)]
pub struct QuaternionHermitian {
    n: usize,
    matrix: CMatrix,
}

impl QuaternionHermitian {
    /// Wraps a `2n × 2n` matrix after checking Hermiticity and self-duality.
    pub fn from_matrix(matrix: CMatrix, tol: f64) -> Result<Self> {
        if !symplectic_check(&matrix, tol)? {
            return Err(Error::invalid(
                "matrix is not Hermitian and self-dual within tolerance",
            ));
        }
        let n = matrix.nrows() / 2;
        if n == 0 {
            return Err(Error::InvalidDimension(0));
        }
        Ok(Self { n, matrix })
    }

    /// Quaternion dimension `n`.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    /// Real coefficients `(h⁰, h¹, h², h³)` of the quaternion block `ĥ_{mk}`,
    /// `ĥ = h⁰·1 + Σ hᵘ τᵤ`, `τ = −iσ`.
    pub fn quaternion(&self, m: usize, k: usize) -> [f64; 4] {
        let n = self.n;
        let a = self.matrix[(m, k)]; // h⁰ − i h³
        let v = self.matrix[(m, n + k)]; // −i h¹ − h²
        [a.re, -v.im, -v.re, -a.im]
    }
}

/// Time reversal `T v = Y v*` in the `{|i⟩, T|i⟩}` basis.
pub fn time_reverse(v: &CVector) -> CVector {
    let n = v.len() / 2;
    CVector::from_fn(v.len(), |i, _| {
        if i < n {
            -v[n + i].conj()
        } else {
            v[i - n].conj()
        }
    })
}

fn normal<R: Rng + ?Sized>(rng: &mut R, sd: f64) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    sd * z
}

/// Draws a GSE matrix of quaternion dimension `n`.
pub fn sample_gse<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<QuaternionHermitian> {
    if n == 0 {
        return Err(Error::InvalidDimension(0));
    }
    let s = QUATERNION_SIGMA;
    let mut h = CMatrix::zeros(2 * n, 2 * n);
    for m in 0..n {
        let d = normal(rng, 2f64.sqrt() * s);
        h[(m, m)] = d.into();
        h[(n + m, n + m)] = d.into();
        for k in (m + 1)..n {
            let h0 = normal(rng, s);
            let h1 = normal(rng, s);
            let h2 = normal(rng, s);
            let h3 = normal(rng, s);
            let a = num_complex::Complex64::new(h0, -h3);
            let v = num_complex::Complex64::new(-h2, -h1);
            // block (m, k) and its Hermitian partner (k, m) = (h⁰, −h)
            h[(m, k)] = a;
            h[(k, m)] = a.conj();
            h[(n + m, n + k)] = a.conj();
            h[(n + k, n + m)] = a;
            h[(m, n + k)] = v;
            h[(k, n + m)] = -v;
            h[(n + k, m)] = v.conj();
            h[(n + m, k)] = -v.conj();
        }
    }
    Ok(QuaternionHermitian { n, matrix: h })
}

/// Draws an `n × n` GUE matrix with unit-variance entries.
pub fn sample_gue<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<CMatrix> {
    if n == 0 {
        return Err(Error::InvalidDimension(0));
    }
    let mut h = CMatrix::zeros(n, n);
    for i in 0..n {
        h[(i, i)] = normal(rng, 1.0).into();
        for j in (i + 1)..n {
            let z = num_complex::Complex64::new(normal(rng, FRAC_1_SQRT_2), normal(rng, FRAC_1_SQRT_2));
            h[(i, j)] = z;
            h[(j, i)] = z.conj();
        }
    }
    Ok(h)
}

/// True iff `h` is Hermitian and equals its symplectic transpose `Y hᵀ Yᵀ`,
/// both to `tol` in the max norm.
pub fn symplectic_check(h: &CMatrix, tol: f64) -> Result<bool> {
    let dim = h.nrows();
    if dim != h.ncols() {
        return Err(Error::InvalidShape(format!("matrix is {}x{}", dim, h.ncols())));
    }
    if dim % 2 != 0 {
        return Err(Error::InvalidShape(format!("odd dimension {dim}")));
    }
    let n = dim / 2;
    for i in 0..dim {
        for j in 0..dim {
            if (h[(i, j)] - h[(j, i)].conj()).norm() > tol {
                return Ok(false);
            }
            let (bi, ii) = (i / n, i % n);
            let (bj, jj) = (j / n, j % n);
            let src = h[((1 - bj) * n + jj, (1 - bi) * n + ii)];
            let dual = if bi == bj { src } else { -src };
            if (h[(i, j)] - dual).norm() > tol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumLabel {
    pub ensemble: String,
    pub realization: u64,
    pub seed: u64,
}

/// Levels of one realization: raw, Kramers-collapsed and unfolded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSample {
    pub raw_levels: Vec<f64>,
    pub collapsed_levels: Vec<f64>,
    pub unfolded: Vec<f64>,
    /// Largest gap between the two members of a Kramers doublet.
    pub max_splitting: f64,
    pub label: SpectrumLabel,
}

impl SpectrumSample {
    pub fn spectral_radius(&self) -> f64 {
        self.raw_levels.iter().map(|e| e.abs()).fold(0.0, f64::max)
    }
}

/// Diagonalizes a GSE matrix and pairs its levels into Kramers doublets.
pub fn eigen_kramers(h: &QuaternionHermitian, label: SpectrumLabel) -> Result<SpectrumSample> {
    let raw = hermitian_eigenvalues(h.matrix())?;
    let (collapsed, max_splitting) = collapse_doublets(&raw)?;
    let radius = semicircle_radius(h.n());
    let unfolded = unfold_semicircle(&collapsed, radius, UNFOLD_WINDOW);
    Ok(SpectrumSample {
        raw_levels: raw,
        collapsed_levels: collapsed,
        unfolded,
        max_splitting,
        label,
    })
}

/// Diagonalizes a GUE matrix; no collapsing.
pub fn eigen_gue(h: &CMatrix, label: SpectrumLabel) -> Result<SpectrumSample> {
    let raw = hermitian_eigenvalues(h)?;
    let radius = 2.0 * (raw.len() as f64).sqrt();
    let unfolded = unfold_semicircle(&raw, radius, UNFOLD_WINDOW);
    Ok(SpectrumSample {
        collapsed_levels: raw.clone(),
        raw_levels: raw,
        unfolded,
        max_splitting: 0.0,
        label,
    })
}

/// Means of consecutive pairs and the largest intra-pair gap.
pub fn collapse_doublets(raw: &[f64]) -> Result<(Vec<f64>, f64)> {
    if raw.len() % 2 != 0 {
        return Err(Error::InvalidShape(format!(
            "{} levels cannot form Kramers doublets",
            raw.len()
        )));
    }
    let mut split: f64 = 0.0;
    let collapsed = raw
        .chunks_exact(2)
        .map(|p| {
            split = split.max(p[1] - p[0]);
            0.5 * (p[0] + p[1])
        })
        .collect();
    Ok((collapsed, split))
}

/// Semicircle radius of a GSE matrix of quaternion dimension `n` in the
/// variance convention of this module.
pub fn semicircle_radius(n: usize) -> f64 {
    2.0 * (2.0 * n as f64).sqrt()
}

/// Counting function of `count` levels distributed on a semicircle.
pub fn semicircle_counting(e: f64, radius: f64, count: usize) -> f64 {
    let t = (e / radius).clamp(-1.0, 1.0);
    count as f64 * (0.5 + (t * (1.0 - t * t).sqrt() + t.asin()) / PI)
}

/// Mean level spacing at the band center for `count` semicircle levels.
pub fn semicircle_center_spacing(radius: f64, count: usize) -> f64 {
    PI * radius / (2.0 * count as f64)
}

/// Unfolds the central `window` fraction (by index) of ascending `levels`
/// with the integrated semicircle law.
pub fn unfold_semicircle(levels: &[f64], radius: f64, window: f64) -> Vec<f64> {
    let n = levels.len();
    let drop = ((1.0 - window) * 0.5 * n as f64).round() as usize;
    levels[drop..n - drop]
        .iter()
        .map(|&e| semicircle_counting(e, radius, n))
        .collect()
}
