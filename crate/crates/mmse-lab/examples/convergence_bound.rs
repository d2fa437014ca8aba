//! Convergence-probability bound versus Monte-Carlo measurement.
//!
//! The closed-form lower bound on `Pr{ ||D^-1 E||_F^K < alpha }` depends on
//! the antenna ratio B/U; this prints it next to the empirical probability
//! for several configurations, along with the two fourth-moment identities
//! that the bound's derivation rests on.
//!
//! Run with: `cargo run --example convergence_bound`

use mmse_lab::analysis::{
    empirical_norm_prob, moment_mc_detailed, theorem1_bound, BoundQuery, MomentKind,
};

fn main() {
    let trials = 20_000;
    let seed = 7;

    println!("{:>3} {:>5} {:>2} {:>6}  {:>10}  {:>10}", "U", "B", "K", "alpha", "bound", "empirical");
    for (u, b, k, alpha) in [
        (8, 128, 1, 1.0),
        (8, 128, 2, 1.0),
        (8, 64, 1, 1.0),
        (4, 32, 1, 0.9),
        (16, 256, 1, 1.0),
    ] {
        let q = BoundQuery { u, b, k, alpha };
        let bound = theorem1_bound(q).unwrap();
        let emp = empirical_norm_prob(q, trials, seed).unwrap();
        let tag = if bound < 0.0 { " (vacuous)" } else { "" };
        println!("{u:>3} {b:>5} {k:>2} {alpha:>6.2}  {bound:>10.4}  {emp:>10.4}{tag}");
    }

    println!("\nFourth-moment identities behind the bound ({trials} trials each):");
    for (kind, b, label) in [
        (MomentKind::Lemma1, 16, "E[|x^H y|^4]          "),
        (MomentKind::Lemma2, 16, "E[(sum |x_k|^2)^-4]   "),
    ] {
        let d = moment_mc_detailed(kind, b, trials, seed).unwrap();
        println!(
            "  {label} B={b:<3} estimate {: >12.6e}  target {: >12.6e}  rel.std.err {:.2e}",
            d.estimate, d.target, d.relative_std_error
        );
    }
}
