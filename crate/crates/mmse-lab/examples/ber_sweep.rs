//! Small uncoded-BER sweep comparing inversion strategies.
//!
//! Runs the Monte-Carlo harness over an SNR grid for matched filtering, two-
//! and three-term series inversion, and exact Cholesky inversion. Every
//! method sees the same channel and noise realizations (same seed, same
//! substreams), so differences are attributable to the detector alone.
//!
//! Run with: `cargo run --release --example ber_sweep`

use mmse_lab::analysis::ber_sweep;
use mmse_lab::detector::{DetectorConfig, Method, NpiMode};
use mmse_lab::txchain::{Modulation, SimConfig};

fn main() {
    let sim = SimConfig {
        b: 128,
        u: 8,
        l: 12,
        modulation: Modulation::Qam64,
        es: 1.0,
        snr_db: 0.0, // overridden per grid point
        seed: 1,
        trials: 200,
    };
    let snr_grid: Vec<f64> = (0..8).map(|i| 10.0 + 2.0 * i as f64).collect();

    let methods = [
        (Method::MatchedFilter, NpiMode::LowComplexity),
        (Method::Neumann(2), NpiMode::LowComplexity),
        (Method::Neumann(3), NpiMode::LowComplexity),
        (Method::Cholesky, NpiMode::ExactMmse),
    ];

    println!(
        "B = {}, U = {}, L = {}, 64-QAM, {} trials per point\n",
        sim.b, sim.u, sim.l, sim.trials
    );
    print!("{:>7}", "snr_db");
    for (m, _) in &methods {
        print!("{:>12}", m.label());
    }
    println!();

    let mut columns = Vec::new();
    for (method, npi_mode) in methods {
        let det = DetectorConfig { method, npi_mode, modulation: sim.modulation };
        columns.push(ber_sweep(&sim, &det, &snr_grid).unwrap());
    }
    for (gi, &snr) in snr_grid.iter().enumerate() {
        print!("{snr:>7.1}");
        for col in &columns {
            print!("{:>12.3e}", col[gi].ber);
        }
        println!();
    }
}
