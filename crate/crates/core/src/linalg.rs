//! Thin helpers over nalgebra for the symmetric problems the scatter analysis needs.

use nalgebra::{DMatrix, SymmetricEigen};

/// Eigenvalues of a symmetric matrix in ascending order.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(symmetrize(m)).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Largest eigenvalue of `L⁻¹ A L⁻ᵀ` where `B = L Lᵀ`. `None` when `B` has no Cholesky factor.
pub fn max_generalized_eigenvalue(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Option<f64> {
    let chol = symmetrize(b).cholesky()?;
    let l = chol.l();
    // X = L⁻¹ A, then M = L⁻¹ Xᵀ = L⁻¹ Aᵀ L⁻ᵀ = L⁻¹ A L⁻ᵀ for symmetric A.
    let x = l.solve_lower_triangular(a)?;
    let m = l.solve_lower_triangular(&x.transpose())?;
    sym_eigenvalues(&m).last().copied()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvalues_of_diag() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 1.0, 2.0]));
        assert_eq!(sym_eigenvalues(&m), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn generalized_matches_explicit_inverse() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let b = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 2.0]);
        let got = max_generalized_eigenvalue(&a, &b).unwrap();
        // eigenvalues of B⁻¹A for a 2×2 pencil: det(A − λB) = 0
        // (2−4λ)(3−2λ) − (1−λ)² = 7λ² − 14λ + 5 = 0
        let want = (14.0 + (196.0f64 - 140.0).sqrt()) / 14.0;
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn singular_b_has_no_factor() {
        let a = DMatrix::identity(2, 2);
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(max_generalized_eigenvalue(&a, &b).is_none());
    }
}
