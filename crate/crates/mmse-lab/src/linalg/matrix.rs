//! Dense complex matrix container and the Gram / regularization / diagonal-split
//! primitives of the per-subcarrier preprocessing stage.

use num_complex::Complex64;

use super::LinalgError;

/// Dense row-major complex matrix.
///
/// Dimensions stay small in this problem (`U <= 64` users, `B <= 1024` BS
/// antennas), so a flat `Vec` with no stride tricks is all we need.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from row-major entries.
    pub fn from_rows(rows: usize, cols: usize, entries: Vec<Complex64>) -> Result<Self, LinalgError> {
        if rows == 0 || cols == 0 {
            return Err(LinalgError::EmptyDimension);
        }
        if entries.len() != rows * cols {
            return Err(LinalgError::ShapeMismatch {
                expected: rows * cols,
                got: entries.len(),
            });
        }
        Ok(Self { rows, cols, entries })
    }

    /// Convenience constructor from real entries.
    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Result<Self, LinalgError> {
        Self::from_rows(
            rows,
            cols,
            entries.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        )
    }

    pub fn diag(d: &[f64]) -> Self {
        let n = d.len();
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(d[i], 0.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn hermitian_transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matmul dimension mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[Complex64]) -> Result<Vec<Complex64>, LinalgError> {
        if v.len() != self.cols {
            return Err(LinalgError::ShapeMismatch {
                expected: self.cols,
                got: v.len(),
            });
        }
        Ok((0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .map(|(a, x)| a * x)
                    .sum::<Complex64>()
            })
            .collect())
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let mut out = self.clone();
        for (a, b) in out.entries.iter_mut().zip(&rhs.entries) {
            *a += b;
        }
        out
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let mut out = self.clone();
        for (a, b) in out.entries.iter_mut().zip(&rhs.entries) {
            *a -= b;
        }
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        for a in out.entries.iter_mut() {
            *a *= s;
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest elementwise magnitude of `self - rhs`.
    pub fn max_abs_diff(&self, rhs: &Self) -> f64 {
        self.entries
            .iter()
            .zip(&rhs.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// (X + X^H) / 2.
    pub fn symmetrized(&self) -> Self {
        assert!(self.is_square());
        let mut out = Self::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = (self[(i, j)] + self[(j, i)].conj()) * 0.5;
            }
        }
        out
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.entries[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.entries[i * self.cols + j]
    }
}

/// Diagonal / hollow split `A = diag(d) + E` of a regularized Gram matrix.
#[derive(Debug, Clone)]
pub struct DiagSplit {
    /// Real positive diagonal of `A`.
    pub d: Vec<f64>,
    /// Hollow (zero-diagonal) Hermitian part of `A`.
    pub e: ComplexMatrix,
}

impl DiagSplit {
    /// Reassembles `diag(d) + E`.
    pub fn reassemble(&self) -> ComplexMatrix {
        let mut a = self.e.clone();
        for i in 0..self.d.len() {
            a[(i, i)] += self.d[i];
        }
        a
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }
}

/// Gram matrix `G = H^H H`.
///
/// Accumulated as a sum of outer products of the rows of `H`, lower triangle
/// only, then mirrored. This fixes the summation order so results are
/// reproducible across detector paths.
pub fn gram_matrix(h: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
    if h.rows() == 0 || h.cols() == 0 {
        return Err(LinalgError::EmptyDimension);
    }
    let u = h.cols();
    let mut g = ComplexMatrix::zeros(u, u);
    for r in 0..h.rows() {
        let row = h.row(r);
        for i in 0..u {
            for j in 0..=i {
                let acc = row[i].conj() * row[j];
                g[(i, j)] += acc;
            }
        }
    }
    for i in 0..u {
        for j in (i + 1)..u {
            g[(i, j)] = g[(j, i)].conj();
        }
        // diagonal is a sum of |.|^2 terms; drop rounding residue
        g[(i, i)] = Complex64::new(g[(i, i)].re, 0.0);
    }
    Ok(g)
}

/// `A = G + (N0/Es) I`.
pub fn regularized_gram(g: &ComplexMatrix, n0_over_es: f64) -> Result<ComplexMatrix, LinalgError> {
    if !g.is_square() {
        return Err(LinalgError::NotSquare);
    }
    if n0_over_es < 0.0 || !n0_over_es.is_finite() {
        return Err(LinalgError::NegativeRegularizer(n0_over_es));
    }
    let mut a = g.clone();
    for i in 0..a.rows() {
        a[(i, i)] += n0_over_es;
    }
    Ok(a)
}

/// Splits `A` into its diagonal `D` and hollow part `E`.
///
/// Fails when a diagonal entry is not strictly positive, since the Neumann
/// recurrence needs `D^-1`.
pub fn diag_split(a: &ComplexMatrix) -> Result<DiagSplit, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare);
    }
    let n = a.rows();
    let mut d = Vec::with_capacity(n);
    let mut e = a.clone();
    for i in 0..n {
        let di = a[(i, i)].re;
        if di <= 0.0 || !di.is_finite() {
            return Err(LinalgError::SingularDiagonal { index: i, value: di });
        }
        d.push(di);
        e[(i, i)] = Complex64::new(0.0, 0.0);
    }
    Ok(DiagSplit { d, e })
}

/// Frobenius norm of `D^-1 E`; values below 1 certify Neumann convergence.
pub fn convergence_norm(split: &DiagSplit) -> f64 {
    let n = split.dim();
    let mut acc = 0.0;
    for i in 0..n {
        let inv = 1.0 / split.d[i];
        for j in 0..n {
            acc += (split.e[(i, j)] * inv).norm_sqr();
        }
    }
    acc.sqrt()
}
