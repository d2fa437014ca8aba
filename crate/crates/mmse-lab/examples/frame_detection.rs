//! End-to-end detection of a single SC-FDMA uplink symbol.
//!
//! Generates one frame (bits -> Gray-mapped QAM -> DFT spreading -> per-
//! subcarrier channel -> AWGN), runs the soft-output MMSE detector with both
//! exact and series-based inversion, and reports per-user SINR plus the raw
//! bit errors against the transmitted bits.
//!
//! Run with: `cargo run --example frame_detection`

use mmse_lab::detector::{detect_frame, DetectorConfig, Method, NpiMode};
use mmse_lab::txchain::{generate_frame, trial_rng, Modulation, SimConfig};

fn main() {
    let sim = SimConfig {
        b: 128,
        u: 8,
        l: 12,
        modulation: Modulation::Qam16,
        es: 1.0,
        snr_db: 16.0,
        seed: 3,
        trials: 1,
    };
    let mut rng = trial_rng(sim.seed, 0);
    let frame = generate_frame(&sim, &mut rng);

    println!(
        "B = {}, U = {}, L = {}, 16-QAM, SNR = {} dB\n",
        sim.b, sim.u, sim.l, sim.snr_db
    );

    for (method, npi) in [
        (Method::Cholesky, NpiMode::ExactMmse),
        (Method::Neumann(3), NpiMode::LowComplexity),
        (Method::Neumann(2), NpiMode::LowComplexity),
    ] {
        let cfg = DetectorConfig { method, npi_mode: npi, modulation: sim.modulation };
        let (llr_frame, stats) = detect_frame(&cfg, &frame).unwrap();

        let mut errors = 0usize;
        let mut total = 0usize;
        for (user, hard) in llr_frame.hard_bits.iter().enumerate() {
            errors += hard
                .iter()
                .zip(&frame.bits[user])
                .filter(|(a, b)| a != b)
                .count();
            total += hard.len();
        }
        let mean_sinr_db = 10.0
            * (stats.sinr.iter().sum::<f64>() / stats.sinr.len() as f64).log10();
        println!(
            "{:<10}  mean post-eq SINR {:>6.2} dB   bit errors {}/{}",
            cfg.method.label(),
            mean_sinr_db,
            errors,
            total
        );
    }
}
