//! Dense LU solve with partial pivoting.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Solve `a x = b` in place. `a` is row-major and square.
pub fn lu_solve<S: Scalar>(mut a: Vec<Vec<S>>, mut b: Vec<S>) -> Result<Vec<S>> {
    let n = b.len();
    if a.len() != n || a.iter().any(|r| r.len() != n) {
        return Err(Error::Usage("lu_solve: shape mismatch".into()));
    }
    for k in 0..n {
        let pivot = (k..n)
            .max_by(|&p, &q| a[p][k].abs().partial_cmp(&a[q][k].abs()).unwrap_or(std::cmp::Ordering::Equal))
            .expect("non-empty pivot range");
        if !(a[pivot][k].abs() > S::zero()) || !a[pivot][k].is_finite() {
            return Err(Error::Numerical(format!("matrix is singular at column {k}")));
        }
        a.swap(k, pivot);
        b.swap(k, pivot);
        let (head, tail) = a.split_at_mut(k + 1);
        let pivot_row = &head[k];
        for (r, row) in tail.iter_mut().enumerate() {
            let factor = row[k] / pivot_row[k];
            if factor == S::zero() {
                continue;
            }
            row[k] = S::zero();
            for c in k + 1..n {
                row[c] = row[c] - factor * pivot_row[c];
            }
            b[k + 1 + r] = b[k + 1 + r] - factor * b[k];
        }
    }
    let mut x = vec![S::zero(); n];
    for k in (0..n).rev() {
        let mut acc = b[k];
        for c in k + 1..n {
            acc = acc - a[k][c] * x[c];
        }
        x[k] = acc / a[k][k];
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("solution is not finite".into()));
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        let a = vec![vec![2.0, 1.0, -1.0], vec![-3.0, -1.0, 2.0], vec![-2.0, 1.0, 2.0]];
        let x = lu_solve(a, vec![8.0, -11.0, -3.0]).unwrap();
        for (got, want) in x.iter().zip([2.0_f64, 3.0, -1.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn needs_pivoting() {
        let a = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        assert_eq!(lu_solve(a, vec![3.0, 4.0]).unwrap(), vec![4.0, 3.0]);
    }

    #[test]
    fn singular_is_error() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert_eq!(lu_solve(a, vec![1.0, 1.0]).unwrap_err().name(), "NumericalError");
    }
}
