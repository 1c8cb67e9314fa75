//! Symmetric matrix decompositions with a single positive-definiteness policy.
//!
//! Every symmetric intermediate in the crate lives in a [`SymMatrix`], which is
//! exactly symmetric by construction. Positive definiteness is judged by the
//! smallest eigenvalue against a tolerance relative to the largest diagonal
//! entry.

use std::ops::Index;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative tolerance for the smallest admissible eigenvalue.
pub const PD_TOLERANCE: f64 = 1e-10;

/// A dense, exactly symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    /// Wraps `m` after replacing it by `(m + m') / 2`.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: "square matrix".into(),
                found: format!("{}x{}", m.nrows(), m.ncols()),
            });
        }
        let n = m.nrows();
        let mut s = m;
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (s[(i, j)] + s[(j, i)]);
                s[(i, j)] = v;
                s[(j, i)] = v;
            }
        }
        Ok(SymMatrix(s))
    }

    pub fn from_row_slice(n: usize, data: &[f64]) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: format!("{} entries", n * n),
                found: format!("{} entries", data.len()),
            });
        }
        Self::new(DMatrix::from_row_slice(n, n, data))
    }

    pub fn identity(n: usize) -> Self {
        SymMatrix(DMatrix::identity(n, n))
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        SymMatrix(DMatrix::from_diagonal(&DVector::from_column_slice(d)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.0.diagonal().iter().copied().collect()
    }

    /// Largest absolute elementwise difference.
    pub fn max_abs_diff(&self, other: &SymMatrix) -> f64 {
        max_abs_diff(&self.0, &other.0)
    }
}

impl Index<(usize, usize)> for SymMatrix {
    type Output = f64;

    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

/// Outcome of a positive-definiteness test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpdCheck {
    pub min_eigenvalue: f64,
    pub is_pd: bool,
    pub tolerance: f64,
}

pub fn spd_check(m: &SymMatrix) -> SpdCheck {
    let n = m.dim();
    if n == 0 {
        return SpdCheck {
            min_eigenvalue: f64::NAN,
            is_pd: false,
            tolerance: PD_TOLERANCE,
        };
    }
    let max_diag = m.0.diagonal().iter().fold(0.0_f64, |a, &d| a.max(d.abs()));
    let tolerance = PD_TOLERANCE * max_diag;
    let eig = m.0.clone().symmetric_eigenvalues();
    let min_eigenvalue = eig.iter().copied().fold(f64::INFINITY, f64::min);
    SpdCheck {
        min_eigenvalue,
        is_pd: min_eigenvalue > tolerance,
        tolerance,
    }
}

fn require_pd(m: &SymMatrix) -> Result<()> {
    let check = spd_check(m);
    if check.is_pd {
        Ok(())
    } else {
        Err(Error::NotPositiveDefinite {
            min_eigenvalue: check.min_eigenvalue,
            tolerance: check.tolerance,
        })
    }
}

pub fn invert_spd(m: &SymMatrix) -> Result<SymMatrix> {
    require_pd(m)?;
    let chol = nalgebra::Cholesky::new(m.0.clone()).ok_or(Error::NotPositiveDefinite {
        min_eigenvalue: 0.0,
        tolerance: PD_TOLERANCE,
    })?;
    SymMatrix::new(chol.inverse())
}

/// Symmetric inverse square root `M^(-1/2)` via eigendecomposition.
pub fn inv_sqrt_spd(m: &SymMatrix) -> Result<SymMatrix> {
    require_pd(m)?;
    let SymmetricEigen {
        eigenvalues,
        eigenvectors,
    } = SymmetricEigen::new(m.0.clone());
    let scale = DMatrix::from_diagonal(&eigenvalues.map(|l| 1.0 / l.sqrt()));
    SymMatrix::new(&eigenvectors * scale * eigenvectors.transpose())
}

/// Lower Cholesky factor `L` with `L L' = M`.
pub fn cholesky_lower(m: &SymMatrix) -> Result<DMatrix<f64>> {
    require_pd(m)?;
    nalgebra::Cholesky::new(m.0.clone())
        .map(|c| c.l())
        .ok_or(Error::NotPositiveDefinite {
            min_eigenvalue: 0.0,
            tolerance: PD_TOLERANCE,
        })
}

/// Eigenpairs sorted by descending eigenvalue; ties keep the solver's order.
pub fn sym_eigen_desc(m: &SymMatrix) -> (Vec<f64>, DMatrix<f64>) {
    let SymmetricEigen {
        eigenvalues,
        eigenvectors,
    } = SymmetricEigen::new(m.0.clone());
    let mut order: Vec<usize> = (0..eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eigenvalues[b].total_cmp(&eigenvalues[a]));
    let values = order.iter().map(|&i| eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m.dim(), m.dim(), |r, c| eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn max_dev_from_identity(m: &DMatrix<f64>) -> f64 {
        max_abs_diff(m, &DMatrix::identity(m.nrows(), m.ncols()))
    }

    fn spd_from_seed(n: usize, entries: &[f64]) -> SymMatrix {
        let a = DMatrix::from_fn(n, n, |i, j| entries[(i * n + j) % entries.len()]);
        SymMatrix::new(&a * a.transpose() + DMatrix::identity(n, n) * (n as f64) * 0.1).unwrap()
    }

    #[test]
    fn construction_symmetrizes() {
        let s = SymMatrix::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.4, 1.0])).unwrap();
        assert_eq!(s[(0, 1)], s[(1, 0)]);
        assert!((s[(0, 1)] - 0.3).abs() < 1e-15);
        assert!(SymMatrix::new(DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn invert_identity() {
        let inv = invert_spd(&SymMatrix::identity(3)).unwrap();
        assert!(max_dev_from_identity(inv.as_matrix()) < 1e-15);
    }

    #[test]
    fn invert_two_by_two_matches_closed_form() {
        // det = 1 - .64^2; inverse = [[1, -.64], [-.64, 1]] / det
        let det = 1.0 - 0.64_f64 * 0.64;
        let m = SymMatrix::from_row_slice(2, &[1.0, 0.64, 0.64, 1.0]).unwrap();
        let inv = invert_spd(&m).unwrap();
        assert!((inv[(0, 0)] - 1.0 / det).abs() < 1e-12);
        assert!((inv[(0, 1)] + 0.64 / det).abs() < 1e-12);
        assert!((inv[(0, 0)] - 1.69377).abs() < 1e-5);
        assert!((inv[(0, 1)] + 1.08401).abs() < 1e-5);
    }

    #[test]
    fn invert_indefinite_fails() {
        let m = SymMatrix::from_row_slice(2, &[1.0, 2.0, 2.0, 1.0]).unwrap();
        match invert_spd(&m) {
            Err(Error::NotPositiveDefinite { min_eigenvalue, .. }) => {
                assert!((min_eigenvalue + 1.0).abs() < 1e-12)
            }
            other => panic!("expected NotPositiveDefinite, got {other:?}"),
        }
    }

    #[test]
    fn inv_sqrt_simple_cases() {
        let s = inv_sqrt_spd(&SymMatrix::identity(2)).unwrap();
        assert!(max_dev_from_identity(s.as_matrix()) < 1e-15);
        let s = inv_sqrt_spd(&SymMatrix::from_diagonal(&[4.0, 9.0])).unwrap();
        assert!((s[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((s[(1, 1)] - 1.0 / 3.0).abs() < 1e-15);
        assert!(s[(0, 1)].abs() < 1e-15);
    }

    #[test]
    fn inv_sqrt_random_dim5() {
        let m = spd_from_seed(5, &[0.3, -0.7, 0.2, 0.9, -0.1, 0.5, 0.4]);
        let s = inv_sqrt_spd(&m).unwrap();
        let ssm = s.as_matrix() * s.as_matrix() * m.as_matrix();
        assert!(max_dev_from_identity(&ssm) < 1e-9);
    }

    #[test]
    fn cholesky_examples() {
        let l = cholesky_lower(&SymMatrix::identity(4)).unwrap();
        assert!(max_dev_from_identity(&l) < 1e-15);
        let l = cholesky_lower(&SymMatrix::from_row_slice(2, &[1.0, 0.64, 0.64, 1.0]).unwrap()).unwrap();
        assert!((l[(0, 0)] - 1.0).abs() < 1e-12);
        assert_eq!(l[(0, 1)], 0.0);
        assert!((l[(1, 0)] - 0.64).abs() < 1e-12);
        assert!((l[(1, 1)] - (1.0 - 0.64_f64 * 0.64).sqrt()).abs() < 1e-6);
        let singular = SymMatrix::from_row_slice(2, &[1.0, 1.0, 1.0, 1.0]).unwrap();
        assert!(matches!(
            cholesky_lower(&singular),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn spd_check_uses_relative_tolerance() {
        let c = spd_check(&SymMatrix::from_diagonal(&[1.0, 5e-11]));
        assert!(!c.is_pd);
        let c = spd_check(&SymMatrix::from_diagonal(&[1.0, 2e-10]));
        assert!(c.is_pd);
        assert_eq!(c.tolerance, 1e-10);
    }

    #[test]
    fn eigen_desc_is_sorted() {
        let m = spd_from_seed(6, &[0.1, 0.8, -0.3, 0.6]);
        let (vals, vecs) = sym_eigen_desc(&m);
        assert!(vals.windows(2).all(|w| w[0] >= w[1]));
        let recon = &vecs * DMatrix::from_diagonal(&DVector::from_vec(vals)) * vecs.transpose();
        assert!(max_abs_diff(&recon, m.as_matrix()) < 1e-10);
    }

    proptest! {
        #[test]
        fn inverse_property(n in 1usize..=20, entries in prop::collection::vec(-1.0f64..1.0, 1..50)) {
            let m = spd_from_seed(n, &entries);
            let inv = invert_spd(&m).unwrap();
            prop_assert!(max_dev_from_identity(&(inv.as_matrix() * m.as_matrix())) < 1e-10);
        }

        #[test]
        fn inv_sqrt_commutes(n in 1usize..=12, entries in prop::collection::vec(-1.0f64..1.0, 1..50)) {
            let m = spd_from_seed(n, &entries);
            let s = inv_sqrt_spd(&m).unwrap();
            let sm = s.as_matrix() * m.as_matrix();
            let ms = m.as_matrix() * s.as_matrix();
            prop_assert!(max_abs_diff(&sm, &ms) < 1e-9);
        }

        #[test]
        fn cholesky_recovers_factor(n in 1usize..=10, entries in prop::collection::vec(-1.0f64..1.0, 1..60)) {
            let l = DMatrix::from_fn(n, n, |i, j| {
                let v = entries[(i * n + j) % entries.len()];
                if i == j { 0.5 + v.abs() } else if i > j { v } else { 0.0 }
            });
            let m = SymMatrix::new(&l * l.transpose()).unwrap();
            let back = cholesky_lower(&m).unwrap();
            prop_assert!(max_abs_diff(&back, &l) < 1e-9);
        }
    }
}
