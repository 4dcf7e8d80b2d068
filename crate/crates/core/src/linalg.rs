//! Dense LU factorisation with partial pivoting.
//!
//! Only used for the small steady-state systems of the lattice and the
//! finite-difference solver (a few hundred unknowns).

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Real> DenseMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = self.data[i * self.n + j] + v;
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    /// Solves `A x = b` by Gaussian elimination with partial pivoting.
    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        let n = self.n;
        if b.len() != n {
            return Err(Error::Precondition(format!(
                "right-hand side has length {}, matrix is {n}×{n}",
                b.len()
            )));
        }
        let mut a = self.data.clone();
        let mut x = b.to_vec();
        let scale = a.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let tiny = scale * T::epsilon() * T::from_count(n.max(1));
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| {
                    a[i * n + col]
                        .abs()
                        .partial_cmp(&a[j * n + col].abs())
                        .unwrap()
                })
                .unwrap();
            let p = a[pivot * n + col];
            if !(p.abs() > tiny) {
                return Err(Error::Singular(format!("zero pivot in column {col}")));
            }
            if pivot != col {
                for j in 0..n {
                    a.swap(col * n + j, pivot * n + j);
                }
                x.swap(col, pivot);
            }
            for row in col + 1..n {
                let factor = a[row * n + col] / p;
                if factor == T::zero() {
                    continue;
                }
                for j in col..n {
                    a[row * n + j] = a[row * n + j] - factor * a[col * n + j];
                }
                x[row] = x[row] - factor * x[col];
            }
        }
        for row in (0..n).rev() {
            let mut acc = x[row];
            for j in row + 1..n {
                acc = acc - a[row * n + j] * x[j];
            }
            x[row] = acc / a[row * n + row];
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("linear solve".into()));
        }
        Ok(x)
    }
}

/// Null vector of a generator matrix `Q` (columns summing to zero),
/// normalised to unit sum: solves `Q p = 0, Σ p = 1` by replacing the last
/// row with the normalisation constraint.
pub fn stationary_distribution<T: Real>(q: &DenseMatrix<T>) -> Result<Vec<T>> {
    let n = q.size();
    let mut a = q.clone();
    for j in 0..n {
        a.set(n - 1, j, T::one());
    }
    let mut b = vec![T::zero(); n];
    b[n - 1] = T::one();
    a.solve(&b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn solves_small_system() {
        let mut a = DenseMatrix::<f64>::zeros(3);
        for (i, row) in [[0.0, 2.0, 1.0], [1.0, 1.0, 0.0], [3.0, 0.0, 1.0]]
            .iter()
            .enumerate()
        {
            for (j, &v) in row.iter().enumerate() {
                a.set(i, j, v);
            }
        }
        let x = a.solve(&[3.0, 2.0, 4.0]).unwrap();
        for (xi, ei) in x.iter().zip([1.0, 1.0, 1.0]) {
            assert!((xi - ei).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_is_reported() {
        let a = DenseMatrix::<f64>::zeros(2);
        assert!(matches!(a.solve(&[1.0, 1.0]), Err(Error::Singular(_))));
    }

    #[test]
    fn two_state_chain() {
        // rates a: 0→1, b: 1→0; stationary (b, a)/(a+b)
        let (ra, rb) = (2.0, 3.0);
        let mut q = DenseMatrix::<f64>::zeros(2);
        q.set(0, 0, -ra);
        q.set(1, 0, ra);
        q.set(0, 1, rb);
        q.set(1, 1, -rb);
        let p = stationary_distribution(&q).unwrap();
        assert!((p[0] - 0.6).abs() < 1e-15 && (p[1] - 0.4).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn residual_is_small(
            entries in prop::collection::vec(-1.0f64..1.0, 16),
            rhs in prop::collection::vec(-1.0f64..1.0, 4),
        ) {
            let mut a = DenseMatrix::zeros(4);
            for i in 0..4 {
                for j in 0..4 {
                    a.set(i, j, entries[4 * i + j] + if i == j { 5.0 } else { 0.0 });
                }
            }
            let x = a.solve(&rhs).unwrap();
            let ax = a.mul_vec(&x);
            for (l, r) in ax.iter().zip(&rhs) {
                prop_assert!((l - r).abs() < 1e-12);
            }
        }
    }
}
