//! Truncated Neumann-series approximation of the regularized Gram inverse.

use num_complex::Complex64;

use super::matrix::{ComplexMatrix, DiagSplit};
use super::LinalgError;

/// K-term series approximation of `A^-1` from the split `A = D + E`:
///
/// ```text
/// inv_K = sum_{n=0}^{K-1} (-D^-1 E)^n D^-1
/// ```
///
/// evaluated through the recurrence `inv_K = D^-1 + (-D^-1 E) inv_{K-1}`,
/// `inv_1 = D^-1`. The K=1 result is the scaled matched-filter detector.
pub fn neumann_inverse(split: &DiagSplit, k: usize) -> Result<ComplexMatrix, LinalgError> {
    if k == 0 {
        return Err(LinalgError::InvalidTermCount);
    }
    let n = split.dim();
    let d_inv: Vec<f64> = split.d.iter().map(|&d| 1.0 / d).collect();

    let mut inv = ComplexMatrix::diag(&d_inv);
    if k == 1 {
        return Ok(inv);
    }

    // M = -D^-1 E, fixed across iterations.
    let mut m = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = -split.e[(i, j)] * d_inv[i];
        }
    }

    for _ in 1..k {
        let mut next = m.matmul(&inv);
        for i in 0..n {
            next[(i, i)] += d_inv[i];
        }
        inv = next;
    }
    // each series term is Hermitian; symmetrize away rounding drift
    Ok(inv.symmetrized())
}

/// Brute-force explicit sum of the series, term by term. Kept as an
/// independent cross-check of the recurrence path.
pub fn neumann_inverse_by_sum(split: &DiagSplit, k: usize) -> Result<ComplexMatrix, LinalgError> {
    if k == 0 {
        return Err(LinalgError::InvalidTermCount);
    }
    let n = split.dim();
    let d_inv: Vec<f64> = split.d.iter().map(|&d| 1.0 / d).collect();
    let d_inv_mat = ComplexMatrix::diag(&d_inv);

    let mut m = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = -split.e[(i, j)] * d_inv[i];
        }
    }

    let mut term = d_inv_mat;
    let mut sum = term.clone();
    for _ in 1..k {
        term = m.matmul(&term);
        sum = sum.add(&term);
    }
    Ok(sum)
}

#[allow(unused)]
fn _c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matrix::diag_split;

    #[test]
    fn diagonal_input_is_exact_at_k1() {
        let a = ComplexMatrix::diag(&[2.0, 4.0]);
        let s = diag_split(&a).unwrap();
        for k in 1..=5 {
            let inv = neumann_inverse(&s, k).unwrap();
            assert!(inv.max_abs_diff(&ComplexMatrix::diag(&[0.5, 0.25])) < 1e-15);
        }
    }

    #[test]
    fn two_term_hand_value() {
        let a = ComplexMatrix::from_real(2, 2, &[2.0, 1.0, 1.0, 2.0]).unwrap();
        let s = diag_split(&a).unwrap();
        let inv = neumann_inverse(&s, 2).unwrap();
        let want = ComplexMatrix::from_real(2, 2, &[0.5, -0.25, -0.25, 0.5]).unwrap();
        assert!(inv.max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn three_term_hand_value() {
        let a = ComplexMatrix::from_real(2, 2, &[2.0, 1.0, 1.0, 2.0]).unwrap();
        let s = diag_split(&a).unwrap();
        let inv = neumann_inverse(&s, 3).unwrap();
        let want = ComplexMatrix::from_real(2, 2, &[0.625, -0.25, -0.25, 0.625]).unwrap();
        assert!(inv.max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn zero_terms_rejected() {
        let a = ComplexMatrix::diag(&[1.0]);
        let s = diag_split(&a).unwrap();
        assert!(matches!(
            neumann_inverse(&s, 0),
            Err(LinalgError::InvalidTermCount)
        ));
    }

    #[test]
    fn recurrence_matches_explicit_sum() {
        let a = ComplexMatrix::from_rows(
            3,
            3,
            vec![
                _c(4.0, 0.0),
                _c(1.0, 0.5),
                _c(0.3, -0.2),
                _c(1.0, -0.5),
                _c(5.0, 0.0),
                _c(0.7, 0.1),
                _c(0.3, 0.2),
                _c(0.7, -0.1),
                _c(6.0, 0.0),
            ],
        )
        .unwrap();
        let s = diag_split(&a).unwrap();
        for k in 1..=8 {
            let rec = neumann_inverse(&s, k).unwrap();
            let sum = neumann_inverse_by_sum(&s, k).unwrap();
            assert!(rec.max_abs_diff(&sum) < 1e-10, "K={k}");
        }
    }
}
