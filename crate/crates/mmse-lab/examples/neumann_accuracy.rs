//! Approximate-inverse accuracy as the series length grows.
//!
//! Draws a random uplink channel, forms the regularized Gram matrix, and
//! compares the K-term Neumann inverse against the exact Cholesky-based
//! inverse. The relative error contracts by roughly the convergence norm
//! per added term whenever that norm is below one.
//!
//! Run with: `cargo run --example neumann_accuracy`

use mmse_lab::linalg::{
    convergence_norm, diag_split, gram_matrix, invert_via_cholesky, neumann_inverse,
    regularized_gram, ComplexMatrix,
};
use mmse_lab::txchain::{standard_complex_gaussian, trial_rng};

fn main() {
    let (b, u) = (64, 8);
    let n0_over_es = 0.05;
    let mut rng = trial_rng(42, 0);

    let entries = (0..b * u).map(|_| standard_complex_gaussian(&mut rng)).collect();
    let h = ComplexMatrix::from_rows(b, u, entries).unwrap();
    let g = gram_matrix(&h).unwrap();
    let a = regularized_gram(&g, n0_over_es).unwrap();

    let exact = invert_via_cholesky(&a).unwrap();
    let exact_norm = exact.frobenius_norm();
    let split = diag_split(&a).unwrap();
    let norm = convergence_norm(&split);

    println!("B = {b}, U = {u}, N0/Es = {n0_over_es}");
    println!("convergence norm ||D^-1 E||_F = {norm:.4}\n");
    println!("{:>2}  {:>12}  {:>12}", "K", "rel error", "norm^K");
    for k in 1..=8 {
        let approx = neumann_inverse(&split, k).unwrap();
        let err = approx.sub(&exact).frobenius_norm() / exact_norm;
        println!("{k:>2}  {err:>12.3e}  {:>12.3e}", norm.powi(k as i32));
    }
}
