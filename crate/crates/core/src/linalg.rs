//! Small dense helpers on top of nalgebra.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Cholesky factor of `D A D` with `D = diag(1/sqrt(a_ii))`, plus `D`'s diagonal.
/// Jacobi scaling keeps the factorization insensitive to regressor units.
pub(crate) struct ScaledCholesky {
    chol: Cholesky<f64, Dyn>,
    inv_scale: DVector<f64>,
}

impl ScaledCholesky {
    pub(crate) fn new(a: &DMatrix<f64>) -> Option<Self> {
        let n = a.nrows();
        let inv_scale = DVector::from_iterator(n, (0..n).map(|i| 1.0 / a[(i, i)].sqrt()));
        if inv_scale.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let scaled = DMatrix::from_fn(n, n, |i, j| a[(i, j)] * inv_scale[i] * inv_scale[j]);
        Cholesky::new(scaled).map(|chol| Self { chol, inv_scale })
    }

    /// `A^{-1} B`.
    pub(crate) fn solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut rhs = b.clone();
        for (i, mut row) in rhs.row_iter_mut().enumerate() {
            row *= self.inv_scale[i];
        }
        let mut x = self.chol.solve(&rhs);
        for (i, mut row) in x.row_iter_mut().enumerate() {
            row *= self.inv_scale[i];
        }
        x
    }

    pub(crate) fn inverse(&self) -> DMatrix<f64> {
        let n = self.inv_scale.len();
        let mut inv = self.chol.inverse();
        for i in 0..n {
            for j in 0..n {
                inv[(i, j)] *= self.inv_scale[i] * self.inv_scale[j];
            }
        }
        symmetrize(&mut inv);
        inv
    }
}

/// Symmetric square root factor `A` with `A Aᵀ = S` for a PSD matrix; tiny
/// negative eigenvalues from rounding are clipped to zero.
pub(crate) fn psd_factor(s: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = s.clone().symmetric_eigen();
    let mut f = eig.eigenvectors;
    for (j, mut col) in f.column_iter_mut().enumerate() {
        col *= eig.eigenvalues[j].max(0.0).sqrt();
    }
    f
}

#[cfg(test)]
pub(crate) fn min_eigenvalue(s: &DMatrix<f64>) -> f64 {
    s.clone().symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}
