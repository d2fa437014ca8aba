//! Instrumented variants of the preprocessing kernels. Every real-valued
//! arithmetic operation is tallied in an [`OpCountLedger`] so closed-form
//! complexity formulas can be checked against actual work done.
//!
//! Conventions: one complex-by-complex multiplication costs 4 real
//! multiplications and 2 real additions; a real-by-complex scaling costs 2
//! real multiplications; a complex addition costs 2 real additions.
//! Reciprocals and square roots are tallied as divisions.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::matrix::{ComplexMatrix, DiagSplit};
use super::LinalgError;

/// Tally of real-valued arithmetic.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCountLedger {
    pub real_mults: u64,
    pub real_adds: u64,
    pub real_divs: u64,
}

impl OpCountLedger {
    fn complex_mult(&mut self) {
        self.real_mults += 4;
        self.real_adds += 2;
    }

    fn complex_add(&mut self) {
        self.real_adds += 2;
    }

    fn real_scale(&mut self) {
        self.real_mults += 2;
    }

    fn div(&mut self) {
        self.real_divs += 1;
    }

    pub fn merge(&mut self, other: OpCountLedger) {
        self.real_mults += other.real_mults;
        self.real_adds += other.real_adds;
        self.real_divs += other.real_divs;
    }
}

impl std::ops::Add for OpCountLedger {
    type Output = OpCountLedger;
    fn add(self, rhs: OpCountLedger) -> OpCountLedger {
        OpCountLedger {
            real_mults: self.real_mults + rhs.real_mults,
            real_adds: self.real_adds + rhs.real_adds,
            real_divs: self.real_divs + rhs.real_divs,
        }
    }
}

/// Gram matrix with operation tally: outer-product accumulation over the
/// lower triangle, mirrored afterwards (mirroring is free).
pub fn gram_matrix_counted(
    h: &ComplexMatrix,
    ledger: &mut OpCountLedger,
) -> Result<ComplexMatrix, LinalgError> {
    if h.rows() == 0 || h.cols() == 0 {
        return Err(LinalgError::EmptyDimension);
    }
    let u = h.cols();
    let mut g = ComplexMatrix::zeros(u, u);
    for r in 0..h.rows() {
        let row = h.row(r);
        for i in 0..u {
            for j in 0..=i {
                let prod = row[i].conj() * row[j];
                ledger.complex_mult();
                g[(i, j)] += prod;
                ledger.complex_add();
            }
        }
    }
    for i in 0..u {
        for j in (i + 1)..u {
            g[(i, j)] = g[(j, i)].conj();
        }
        g[(i, i)] = Complex64::new(g[(i, i)].re, 0.0);
    }
    Ok(g)
}

/// Adds the regularizer to the diagonal: `U` real additions.
pub fn regularized_gram_counted(
    g: &ComplexMatrix,
    n0_over_es: f64,
    ledger: &mut OpCountLedger,
) -> Result<ComplexMatrix, LinalgError> {
    let a = super::matrix::regularized_gram(g, n0_over_es)?;
    ledger.real_adds += g.rows() as u64;
    Ok(a)
}

/// Neumann approximation with operation tally. The K>=3 matrix products
/// exploit the Hermitian structure of each iterate: only the lower triangle
/// is computed, then mirrored.
pub fn neumann_inverse_counted(
    split: &DiagSplit,
    k: usize,
    ledger: &mut OpCountLedger,
) -> Result<ComplexMatrix, LinalgError> {
    if k == 0 {
        return Err(LinalgError::InvalidTermCount);
    }
    let n = split.dim();

    let mut d_inv = Vec::with_capacity(n);
    for &d in &split.d {
        d_inv.push(1.0 / d);
        ledger.div();
    }

    let mut inv = ComplexMatrix::diag(&d_inv);
    if k == 1 {
        return Ok(inv);
    }

    // M = -D^-1 E (off-diagonal entries only)
    let mut m = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                m[(i, j)] = -split.e[(i, j)] * d_inv[i];
                ledger.real_scale();
            }
        }
    }

    // two-term value M * D^-1 has zero diagonal; the diagonal stays D^-1
    for i in 0..n {
        for j in 0..n {
            if i != j {
                inv[(i, j)] = m[(i, j)] * d_inv[j];
                ledger.real_scale();
            }
        }
    }

    for _ in 2..k {
        // lower triangle of the Hermitian product M * inv, mirrored
        let mut next = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let mut acc = Complex64::new(0.0, 0.0);
                for t in 0..n {
                    let prod = m[(i, t)] * inv[(t, j)];
                    ledger.complex_mult();
                    acc += prod;
                    if t > 0 {
                        ledger.complex_add();
                    }
                }
                next[(i, j)] = acc;
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                next[(i, j)] = next[(j, i)].conj();
            }
            next[(i, i)] += d_inv[i];
            ledger.real_adds += 1; // diagonal is real + real
        }
        inv = next;
    }
    Ok(inv)
}

/// Cholesky-based explicit inverse with operation tally. A 1x1 input reduces
/// to a single scalar reciprocal.
pub fn invert_via_cholesky_counted(
    a: &ComplexMatrix,
    ledger: &mut OpCountLedger,
) -> Result<ComplexMatrix, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare);
    }
    let n = a.rows();
    if n == 1 {
        let d = a[(0, 0)].re;
        if d <= 0.0 {
            return Err(LinalgError::NotPositiveDefinite { pivot_index: 0 });
        }
        ledger.div();
        return ComplexMatrix::from_real(1, 1, &[1.0 / d]);
    }

    // decomposition, with per-column pivot reciprocals kept for reuse
    let mut l = vec![Complex64::new(0.0, 0.0); n * n];
    let mut recip = vec![0.0_f64; n];
    for j in 0..n {
        let mut pivot = a[(j, j)].re;
        for k in 0..j {
            let sq = l[j * n + k].norm_sqr();
            ledger.real_mults += 2;
            ledger.real_adds += 1;
            pivot -= sq;
            ledger.real_adds += 1;
        }
        if pivot <= 0.0 || !pivot.is_finite() {
            return Err(LinalgError::NotPositiveDefinite { pivot_index: j });
        }
        let ljj = pivot.sqrt();
        ledger.div(); // square root
        l[j * n + j] = Complex64::new(ljj, 0.0);
        recip[j] = 1.0 / ljj;
        ledger.div();
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                let prod = l[i * n + k] * l[j * n + k].conj();
                ledger.complex_mult();
                s -= prod;
                ledger.complex_add();
            }
            l[i * n + j] = s * recip[j];
            ledger.real_scale();
        }
    }

    let mut inv = ComplexMatrix::zeros(n, n);
    let mut u = vec![Complex64::new(0.0, 0.0); n];
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    for col in 0..n {
        // forward: L u = e_col, with u zero above `col`
        for x in u.iter_mut() {
            *x = Complex64::new(0.0, 0.0);
        }
        u[col] = Complex64::new(recip[col], 0.0); // 1 * recip, free by convention
        for j in (col + 1)..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in col..j {
                let prod = l[j * n + k] * u[k];
                ledger.complex_mult();
                if k > col {
                    ledger.complex_add();
                }
                acc += prod;
            }
            u[j] = -acc * recip[j];
            ledger.real_scale();
        }

        // backward: L^H v = u
        for j in (0..n).rev() {
            let mut s = u[j];
            let terms = n - 1 - j;
            for k in (j + 1)..n {
                let prod = l[k * n + j].conj() * v[k];
                ledger.complex_mult();
                s -= prod;
            }
            if terms > 0 {
                ledger.real_adds += 2 * terms as u64; // accumulation + subtraction
            }
            v[j] = s * recip[j];
            ledger.real_scale();
        }
        for r in 0..n {
            inv[(r, col)] = v[r];
        }
    }
    Ok(inv.symmetrized())
}
