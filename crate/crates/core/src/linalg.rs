//! Small dense helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Largest eigenvalue modulus; zero for an empty matrix.
pub fn spectral_radius(m: &Matrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    if m.nrows() == 1 {
        return m[(0, 0)].abs();
    }
    m.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Largest singular value; zero for an empty matrix.
pub fn spectral_norm(m: &Matrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    if m.nrows() == 1 && m.ncols() == 1 {
        return m[(0, 0)].abs();
    }
    m.singular_values().iter().copied().fold(0.0, f64::max)
}

/// Orthonormal basis of the null space of a square matrix, using singular
/// values below `tol · max(1, σ_max)`.
pub fn null_space(m: &Matrix, tol: f64) -> Vec<Vector> {
    let n = m.ncols();
    if n == 0 {
        return Vec::new();
    }
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors were requested");
    let sigma_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cutoff = tol * sigma_max.max(1.0);
    let mut basis: Vec<Vector> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= cutoff)
        .map(|(i, _)| v_t.row(i).transpose())
        .collect();
    // a square input has n singular values; anything past the thin SVD is null too
    for i in svd.singular_values.len()..n.min(v_t.nrows()) {
        basis.push(v_t.row(i).transpose());
    }
    basis
}

/// `‖v‖₁`.
pub fn l1_norm(v: &Vector) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radius_and_norm() {
        let rot = Matrix::from_row_slice(2, 2, &[0.0, -2.0, 2.0, 0.0]);
        assert!((spectral_radius(&rot) - 2.0).abs() < 1e-12);
        let nil = Matrix::from_row_slice(2, 2, &[0.0, 3.0, 0.0, 0.0]);
        assert!(spectral_radius(&nil) < 1e-12);
        assert!((spectral_norm(&nil) - 3.0).abs() < 1e-12);
        assert_eq!(spectral_radius(&Matrix::zeros(0, 0)), 0.0);
        assert_eq!(spectral_norm(&Matrix::from_element(1, 1, -0.5)), 0.5);
    }

    #[test]
    fn null_space_of_projection() {
        let m = Matrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let ns = null_space(&m, 1e-9);
        assert_eq!(ns.len(), 1);
        assert!((&m * &ns[0]).norm() < 1e-12);
        assert!(null_space(&Matrix::identity(3, 3), 1e-9).is_empty());
    }
}
