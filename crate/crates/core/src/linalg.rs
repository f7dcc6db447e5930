//! Dense helpers for the small symmetric problems that show up everywhere:
//! spectral norms of `d x n` template matrices and bottom eigenpairs of
//! `d x d` sums of rank-one terms.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Accumulates `v vᵀ` into a row-major `d x d` buffer.
pub(crate) fn add_outer(acc: &mut [f64], v: &[f64]) {
    let d = v.len();
    for i in 0..d {
        let vi = v[i];
        for j in 0..d {
            acc[i * d + j] += vi * v[j];
        }
    }
}

/// Smallest eigenvalue of a symmetric row-major `d x d` buffer.
pub(crate) fn lambda_min_buf(m: &[f64], d: usize) -> f64 {
    match d {
        0 => 0.0,
        1 => m[0],
        2 => {
            let (a, b, c) = (m[0], 0.5 * (m[1] + m[2]), m[3]);
            let mean = 0.5 * (a + c);
            let half = 0.5 * (a - c);
            mean - (half * half + b * b).sqrt()
        }
        _ => {
            let mat = DMatrix::from_row_slice(d, d, m);
            sym_eigen(&mat).0[0]
        }
    }
}

/// Eigenvalues (ascending) and matching unit eigenvectors of a symmetric matrix.
pub fn sym_eigen(m: &DMatrix<f64>) -> (Vec<f64>, Vec<DVector<f64>>) {
    let sym = 0.5 * (m + m.transpose());
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = order
        .iter()
        .map(|&k| eig.eigenvectors.column(k).into_owned())
        .collect();
    (values, vectors)
}

/// `Σ v vᵀ` over the given vectors.
pub fn frame_operator<'a>(dim: usize, vectors: impl IntoIterator<Item = &'a DVector<f64>>) -> DMatrix<f64> {
    let mut acc = vec![0.0; dim * dim];
    for v in vectors {
        add_outer(&mut acc, v.as_slice());
    }
    DMatrix::from_row_slice(dim, dim, &acc)
}

/// `λ_min(Σ v vᵀ)`, clamped at zero.
pub fn lambda_min_frame<'a>(dim: usize, vectors: impl IntoIterator<Item = &'a DVector<f64>>) -> f64 {
    let mut acc = vec![0.0; dim * dim];
    for v in vectors {
        add_outer(&mut acc, v.as_slice());
    }
    lambda_min_buf(&acc, dim).max(0.0)
}

/// Operator 2-norm of the matrix whose columns are `cols`, via the `d x d` Gram.
pub fn spectral_norm<'a>(dim: usize, cols: impl IntoIterator<Item = &'a DVector<f64>>) -> f64 {
    let gram = frame_operator(dim, cols);
    let (values, _) = sym_eigen(&gram);
    values.last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

/// Bottom unit eigenvector of a symmetric matrix.
pub fn bottom_eigenvector(m: &DMatrix<f64>) -> (f64, DVector<f64>) {
    let (values, mut vectors) = sym_eigen(m);
    (values[0], vectors.swap_remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    #[test]
    fn closed_form_2x2_matches_general_solver() {
        let m = [2.0, 0.7, 0.7, 1.0];
        let general = sym_eigen(&DMatrix::from_row_slice(2, 2, &m)).0[0];
        assert!((lambda_min_buf(&m, 2) - general).abs() < 1e-14);
    }

    #[test]
    fn spectral_norm_of_orthogonal_columns() {
        let cols = [dvector![3.0, 0.0], dvector![0.0, 4.0]];
        assert!((spectral_norm(2, cols.iter()) - 4.0).abs() < 1e-12);
        assert!((lambda_min_frame(2, cols.iter()) - 9.0).abs() < 1e-12);
    }
}
