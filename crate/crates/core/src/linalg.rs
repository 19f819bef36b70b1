use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::C64;

/// exp(−i·K·dt) for Hermitian `k`, built from its eigendecomposition so the
/// result is unitary to rounding.
pub(crate) fn unitary_from_hermitian(k: &DMatrix<C64>, dt: f64) -> DMatrix<C64> {
    let eig = SymmetricEigen::new(k.clone());
    let v = &eig.eigenvectors;
    let phases = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| C64::from_polar(1.0, -l * dt)),
    );
    let mut scaled = v.clone();
    for (mut col, p) in scaled.column_iter_mut().zip(phases.iter()) {
        col *= *p;
    }
    let u = scaled * v.adjoint();
    // one Newton-Schulz step pulls the product back onto the unitary group
    let n = u.nrows();
    let defect = DMatrix::<C64>::identity(n, n) * C64::new(3.0, 0.0) - u.adjoint() * &u;
    u * defect * C64::new(0.5, 0.0)
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub(crate) fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}
