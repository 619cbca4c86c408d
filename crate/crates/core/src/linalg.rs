//! Dense Hermitian eigensolvers with a deterministic output convention.
//!
//! Eigenvalues come back ascending. Each eigenvector is rescaled so that its
//! first component with magnitude above [`PHASE_TOL`] is real and positive,
//! which keeps exported eigenvectors stable between runs.

use nalgebra::{Complex, DMatrix};

const PHASE_TOL: f64 = 1e-10;

pub(crate) type C64 = Complex<f64>;

/// Eigen-decomposition of a real symmetric matrix. Columns of the returned
/// matrix are eigenvectors.
pub(crate) fn eigh_real(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(src);
        let sign = v.iter().find(|x| x.abs() > PHASE_TOL).map(|x| x.signum()).unwrap_or(1.0);
        for row in 0..n {
            vectors[(row, col)] = sign * v[row];
        }
    }
    (values, vectors)
}

/// Eigen-decomposition of a complex Hermitian matrix.
pub(crate) fn eigh_hermitian(m: DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(src);
        let phase = v
            .iter()
            .find(|x| x.norm() > PHASE_TOL)
            .map(|x| x.conj() / x.norm())
            .unwrap_or(C64::new(1.0, 0.0));
        for row in 0..n {
            vectors[(row, col)] = phase * v[row];
        }
    }
    (values, vectors)
}

/// Largest entrywise deviation from Hermiticity.
pub(crate) fn hermiticity_defect(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}
