//! Exact Hermitian inversion via Cholesky decomposition and
//! forward/backward substitution against unit vectors.

use num_complex::Complex64;

use super::matrix::ComplexMatrix;
use super::LinalgError;

/// Lower-triangular Cholesky factor with real positive diagonal.
#[derive(Debug, Clone)]
pub struct LowerTriangular {
    n: usize,
    entries: Vec<Complex64>, // row-major, zeros above the diagonal
}

impl LowerTriangular {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.n + j]
    }

    pub fn to_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_rows(self.n, self.n, self.entries.clone()).expect("square")
    }
}

/// Relative pivot floor below which a matrix is declared not positive definite.
const PIVOT_TOL: f64 = 1e-12;

/// `A = L L^H` for Hermitian positive definite `A`.
pub fn cholesky_decompose(a: &ComplexMatrix) -> Result<LowerTriangular, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare);
    }
    let n = a.rows();
    let max_diag = (0..n).map(|i| a[(i, i)].re).fold(0.0_f64, f64::max);
    let floor = PIVOT_TOL * max_diag.max(f64::MIN_POSITIVE);

    let mut l = vec![Complex64::new(0.0, 0.0); n * n];
    for j in 0..n {
        let mut pivot = a[(j, j)].re;
        for k in 0..j {
            pivot -= l[j * n + k].norm_sqr();
        }
        if pivot <= floor || !pivot.is_finite() {
            return Err(LinalgError::NotPositiveDefinite { pivot_index: j });
        }
        let ljj = pivot.sqrt();
        l[j * n + j] = Complex64::new(ljj, 0.0);
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k].conj();
            }
            l[i * n + j] = s / ljj;
        }
    }
    Ok(LowerTriangular { n, entries: l })
}

/// Solves `L u = b` by forward substitution.
pub fn solve_forward(l: &LowerTriangular, b: &[Complex64]) -> Result<Vec<Complex64>, LinalgError> {
    let n = l.dim();
    if b.len() != n {
        return Err(LinalgError::ShapeMismatch { expected: n, got: b.len() });
    }
    let mut u = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..n {
        let diag = l.get(i, i);
        if diag.re == 0.0 {
            return Err(LinalgError::SingularDiagonal { index: i, value: diag.re });
        }
        let mut s = b[i];
        for k in 0..i {
            s -= l.get(i, k) * u[k];
        }
        u[i] = s / diag.re;
    }
    Ok(u)
}

/// Solves `L^H v = u` by backward substitution.
pub fn solve_backward(l: &LowerTriangular, u: &[Complex64]) -> Result<Vec<Complex64>, LinalgError> {
    let n = l.dim();
    if u.len() != n {
        return Err(LinalgError::ShapeMismatch { expected: n, got: u.len() });
    }
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    for i in (0..n).rev() {
        let diag = l.get(i, i);
        if diag.re == 0.0 {
            return Err(LinalgError::SingularDiagonal { index: i, value: diag.re });
        }
        let mut s = u[i];
        for k in (i + 1)..n {
            // (L^H)[i][k] = conj(L[k][i])
            s -= l.get(k, i).conj() * v[k];
        }
        v[i] = s / diag.re;
    }
    Ok(v)
}

/// Explicit inverse assembled column-wise from substitution against unit
/// vectors. The result is symmetrized, since downstream NPI formulas assume
/// a Hermitian inverse.
pub fn invert_via_cholesky(a: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
    let l = cholesky_decompose(a)?;
    let n = l.dim();
    let mut inv = ComplexMatrix::zeros(n, n);
    let mut e = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..n {
        e[i] = Complex64::new(1.0, 0.0);
        let u = solve_forward(&l, &e)?;
        let v = solve_backward(&l, &u)?;
        for r in 0..n {
            inv[(r, i)] = v[r];
        }
        e[i] = Complex64::new(0.0, 0.0);
    }
    Ok(inv.symmetrized())
}
