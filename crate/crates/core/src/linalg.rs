//! Dense complex linear algebra used by the simulation engines.
//!
//! Matrices are `nalgebra` types throughout; Hermitian eigendecompositions are
//! delegated to `faer`, which is markedly faster at the sizes used here.

use faer::{Mat, Side};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

fn to_faer(m: &CMatrix) -> Mat<Complex64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Ascending eigenvalues of a Hermitian matrix (lower triangle is read).
pub fn hermitian_eigenvalues(m: &CMatrix) -> Result<Vec<f64>> {
    square(m)?;
    to_faer(m)
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::numerical(format!("Hermitian eigenvalue solver: {e:?} (dim {})", m.nrows())))
}

/// Ascending eigenvalues and the matching orthonormal eigenvectors (columns).
pub fn hermitian_eigen(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    square(m)?;
    let evd = to_faer(m)
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::numerical(format!("Hermitian eigen solver: {e:?} (dim {})", m.nrows())))?;
    let s = evd.S().column_vector();
    let values: Vec<f64> = (0..m.nrows()).map(|i| s[i].re).collect();
    let u = evd.U();
    let vectors = CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| u[(i, j)]);
    Ok((values, vectors))
}

/// Solves `a x = b` by LU with partial pivoting.
pub fn solve(a: CMatrix, b: &CMatrix) -> Result<CMatrix> {
    square(&a)?;
    let lu = a.lu();
    lu.solve(b)
        .ok_or_else(|| Error::numerical("singular matrix in linear solve"))
}

/// Largest absolute entry.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn square(m: &CMatrix) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidShape(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_reconstructs_matrix() {
        let m = CMatrix::from_fn(4, 4, |i, j| {
            let (a, b) = if i >= j { (i, j) } else { (j, i) };
            let z = Complex64::new((a + 2 * b) as f64, if a == b { 0.0 } else { (a * b) as f64 - 1.0 });
            if i >= j {
                z
            } else {
                z.conj()
            }
        });
        let (vals, vecs) = hermitian_eigen(&m).unwrap();
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let d = CMatrix::from_diagonal(&CVector::from_iterator(4, vals.iter().map(|&v| Complex64::new(v, 0.0))));
        let rebuilt = &vecs * d * vecs.adjoint();
        assert!(max_abs(&(rebuilt - &m)) < 1e-12);
        assert_eq!(hermitian_eigenvalues(&m).unwrap().len(), 4);
    }

    #[test]
    fn non_square_is_rejected() {
        assert!(matches!(hermitian_eigenvalues(&CMatrix::zeros(2, 3)), Err(Error::InvalidShape(_))));
    }
}
