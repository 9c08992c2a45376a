//! Lowest eigenpair of a sparse real symmetric matrix by Lanczos iteration
//! with full reorthogonalization.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Symmetric matrix as its diagonal plus upper-triangle entries.
pub(crate) struct SparseSymmetric {
    pub diagonal: Vec<f64>,
    pub upper: Vec<(usize, usize, f64)>,
}

impl SparseSymmetric {
    fn apply(&self, x: &DVector<f64>, y: &mut DVector<f64>) {
        for (i, d) in self.diagonal.iter().enumerate() {
            y[i] = d * x[i];
        }
        for &(i, j, v) in &self.upper {
            y[i] += v * x[j];
            y[j] += v * x[i];
        }
    }
}

/// Returns `(value, vector)` of the lowest eigenpair once the residual
/// `‖Hv − θv‖` is below `tol`, or `None` after `max_iter` steps.
pub(crate) fn lowest(m: &SparseSymmetric, tol: f64, max_iter: usize) -> Option<(f64, DVector<f64>)> {
    let n = m.diagonal.len();
    let steps = max_iter.min(n);
    // Deterministic start with generic overlaps.
    let mut q = DVector::from_fn(n, |i, _| 1.0 + 0.5 * ((i as f64) * 0.754_877_666).sin());
    q /= q.norm();
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(steps);
    let mut alpha: Vec<f64> = Vec::with_capacity(steps);
    let mut beta: Vec<f64> = Vec::with_capacity(steps);
    let mut w = DVector::zeros(n);
    for k in 0..steps {
        m.apply(&q, &mut w);
        let a = q.dot(&w);
        w.axpy(-a, &q, 1.0);
        if k > 0 {
            w.axpy(-beta[k - 1], &basis[k - 1], 1.0);
        }
        basis.push(q.clone());
        alpha.push(a);
        for _ in 0..2 {
            for v in &basis {
                let c = v.dot(&w);
                w.axpy(-c, v, 1.0);
            }
        }
        let b = w.norm();
        let last = k + 1 == steps;
        if last || b <= tol || (k + 1) % 8 == 0 {
            let (theta, y) = ritz(&alpha, &beta);
            if last || b <= tol || (b * y[k]).abs() <= tol {
                let mut v = DVector::zeros(n);
                for (c, qc) in y.iter().zip(&basis) {
                    v.axpy(*c, qc, 1.0);
                }
                v /= v.norm();
                m.apply(&v.clone(), &mut w);
                let residual = (&w - &v * theta).norm();
                return (residual <= tol.max(1e-13)).then_some((theta, v));
            }
        }
        beta.push(b);
        q = &w / b;
    }
    None
}

/// Lowest eigenpair of the tridiagonal matrix with diagonal `alpha` and
/// off-diagonal `beta`.
fn ritz(alpha: &[f64], beta: &[f64]) -> (f64, DVector<f64>) {
    let k = alpha.len();
    let mut t = DMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let idx = eig.eigenvalues.imin();
    (eig.eigenvalues[idx], eig.eigenvectors.column(idx).into_owned())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_dense_on_a_chain() {
        let n = 300;
        let m = SparseSymmetric {
            diagonal: (0..n).map(|i| (i as f64 * 0.37).cos() * 3.0).collect(),
            upper: (0..n - 1).map(|i| (i, i + 1, 1.0 + 0.1 * i as f64 / n as f64)).collect(),
        };
        let mut dense = DMatrix::zeros(n, n);
        for i in 0..n {
            dense[(i, i)] = m.diagonal[i];
        }
        for &(i, j, v) in &m.upper {
            dense[(i, j)] = v;
            dense[(j, i)] = v;
        }
        let exact = SymmetricEigen::new(dense).eigenvalues.min();
        let (theta, v) = lowest(&m, 1e-11, 400).unwrap();
        assert!((theta - exact).abs() < 1e-10, "{theta} vs {exact}");
        assert!((v.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tiny_invariant_subspace() {
        let m = SparseSymmetric { diagonal: vec![2.0, -1.0], upper: vec![] };
        let (theta, v) = lowest(&m, 1e-12, 10).unwrap();
        assert!((theta + 1.0).abs() < 1e-14);
        assert!((v[1].abs() - 1.0).abs() < 1e-12);
    }
}
