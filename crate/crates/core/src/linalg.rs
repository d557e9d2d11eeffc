//! Small symmetric-matrix helpers shared by the Gaussian geometry and the
//! kernel solvers. Matrix roots go through a symmetric eigendecomposition
//! with a relative eigenvalue floor so chained roots stay symmetric.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative eigenvalue floor applied inside matrix roots.
pub const EIG_FLOOR_REL: f64 = 1e-12;

/// Max |A - A^T| entry over the scale of A.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Symmetric eigendecomposition, eigenvalues ascending not guaranteed;
/// returns (eigenvalues, eigenvectors).
pub fn sym_eig(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let se = symmetrize(m).symmetric_eigen();
    (se.eigenvalues, se.eigenvectors)
}

/// Apply `f` to the eigenvalues of a symmetric matrix: U f(L) U^T.
pub fn sym_map(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let (vals, vecs) = sym_eig(m);
    let scaled = DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| vecs[(i, j)] * f(vals[j]));
    &scaled * vecs.transpose()
}

/// Smallest eigenvalue of the symmetrized input.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let (vals, _) = sym_eig(m);
    vals.iter().cloned().fold(f64::INFINITY, f64::min)
}

fn floored(vals: &DVector<f64>) -> Vec<f64> {
    let max = vals.iter().cloned().fold(0.0f64, |a, b| a.max(b.abs()));
    let floor = max * EIG_FLOOR_REL;
    vals.iter().map(|&v| v.max(floor)).collect()
}

/// Principal square root of an SPD matrix (eigenvalues floored at
/// `EIG_FLOOR_REL` relative to the spectral radius).
pub fn sqrt_spd(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (vals, vecs) = sym_eig(m);
    let fl = floored(&vals);
    let scaled = DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| vecs[(i, j)] * fl[j].sqrt());
    symmetrize(&(&scaled * vecs.transpose()))
}

/// Inverse square root of an SPD matrix.
pub fn inv_sqrt_spd(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (vals, vecs) = sym_eig(m);
    let fl = floored(&vals);
    let scaled = DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| vecs[(i, j)] / fl[j].sqrt());
    symmetrize(&(&scaled * vecs.transpose()))
}

/// Check that `m` is symmetric within `tol` and has strictly positive
/// spectrum; returns a descriptive error otherwise.
pub fn require_spd(m: &DMatrix<f64>, tol_sym: f64, context: &str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidInput(format!("{context}: matrix is not square")));
    }
    let asym = asymmetry(m);
    if asym > tol_sym {
        return Err(Error::InvalidInput(format!(
            "{context}: matrix asymmetry {asym:.3e} exceeds {tol_sym:.1e}"
        )));
    }
    let min = min_eigenvalue(m);
    if min <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "{context}: matrix is not positive definite (min eigenvalue {min:.3e})"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sqrt_roundtrip() {
        let m = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let r = sqrt_spd(&m);
        let back = &r * &r;
        assert_relative_eq!(back, m, epsilon = 1e-10);
        assert!(asymmetry(&r) < 1e-14);
    }

    #[test]
    fn inv_sqrt_roundtrip() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let r = inv_sqrt_spd(&m);
        let prod = &r * &m * &r;
        assert_relative_eq!(prod, DMatrix::identity(2, 2), epsilon = 1e-10);
    }

    #[test]
    fn spd_check_rejects_indefinite() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(require_spd(&m, 1e-10, "test").is_err());
        let ok = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 1.0]);
        assert!(require_spd(&ok, 1e-10, "test").is_ok());
    }
}
