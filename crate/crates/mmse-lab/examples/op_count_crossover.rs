//! Arithmetic cost of the inversion stage and where the series wins.
//!
//! Prints closed-form real-multiplication counts for the inversion stage of
//! each detector, verifies them against instrumented runs of the actual
//! kernels, and shows the crossover: a three-term series stays cheaper than
//! Cholesky inversion, while four terms overtake it as U grows.
//!
//! Run with: `cargo run --example op_count_crossover`

use mmse_lab::analysis::{instrumented_count, inversion_stage_count, multiplication_count};
use mmse_lab::detector::Method;

fn main() {
    let methods = [
        Method::MatchedFilter,
        Method::Neumann(2),
        Method::Neumann(3),
        Method::Neumann(4),
        Method::Cholesky,
    ];

    println!("Inversion-stage real multiplications:");
    print!("{:>4}", "U");
    for m in &methods {
        print!("{:>12}", m.label());
    }
    println!();
    for u in [2usize, 4, 8, 16, 32] {
        print!("{u:>4}");
        for m in &methods {
            print!("{:>12}", inversion_stage_count(*m, u).real_mults);
        }
        println!();
    }

    // Full preprocessing (Gram + regularization + inversion), closed form
    // against instrumented kernels on a random instance.
    let (u, b) = (8usize, 64usize);
    println!("\nFull preprocessing at U = {u}, B = {b} (closed form | instrumented):");
    for m in &methods {
        let closed = multiplication_count(*m, u, b);
        let measured = instrumented_count(*m, u, b, 1).unwrap();
        assert_eq!(closed, measured);
        println!(
            "  {:<10} mults {:>7} | {:>7}   adds {:>7} | {:>7}   divs {:>3} | {:>3}",
            m.label(),
            closed.real_mults,
            measured.real_mults,
            closed.real_adds,
            measured.real_adds,
            closed.real_divs,
            measured.real_divs,
        );
    }
}
