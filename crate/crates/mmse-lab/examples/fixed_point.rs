//! Fixed-point detection pipeline against its floating-point reference.
//!
//! Runs the same frames through the floating-point detector and the
//! quantized pipeline (15-bit inputs, 22-bit MAC registers, 12-bit equalizer
//! outputs, 8-bit LLRs, 1024-entry reciprocal table), and reports how often
//! the hard decisions agree. A widened-word configuration is included to
//! show the quantization error collapsing.
//!
//! Run with: `cargo run --release --example fixed_point`

use mmse_lab::detector::{detect_frame, DetectorConfig, Method, NpiMode};
use mmse_lab::fxp::{fxp_detect_frame, FxpPipelineConfig};
use mmse_lab::txchain::{generate_frame, trial_rng, Modulation, SimConfig};

fn main() {
    let sim = SimConfig {
        b: 64,
        u: 4,
        l: 12,
        modulation: Modulation::Qam64,
        es: 1.0,
        snr_db: 20.0,
        seed: 11,
        trials: 50,
    };
    let det = DetectorConfig {
        method: Method::Neumann(3),
        npi_mode: NpiMode::LowComplexity,
        modulation: sim.modulation,
    };

    println!(
        "B = {}, U = {}, L = {}, 64-QAM, SNR = {} dB, {} frames, detector {}\n",
        sim.b, sim.u, sim.l, sim.snr_db, sim.trials, det.method.label()
    );

    for (label, fxp) in [
        ("reference word lengths", FxpPipelineConfig::paper()),
        ("widened word lengths  ", FxpPipelineConfig::wide()),
    ] {
        let mut agree = 0u64;
        let mut total = 0u64;
        let mut max_llr_dev: f64 = 0.0;
        for t in 0..sim.trials {
            let mut rng = trial_rng(sim.seed, t as u64);
            let frame = generate_frame(&sim, &mut rng);
            let (float_out, _) = detect_frame(&det, &frame).unwrap();
            let (fxp_out, _) = fxp_detect_frame(&fxp, &det, &frame).unwrap();
            for (fu, qu) in float_out.hard_bits.iter().zip(&fxp_out.hard_bits) {
                agree += fu.iter().zip(qu).filter(|(a, b)| a == b).count() as u64;
                total += fu.len() as u64;
            }
            for (fu, qu) in float_out.llrs.iter().zip(&fxp_out.llrs) {
                for (a, b) in fu.iter().zip(qu) {
                    max_llr_dev = max_llr_dev.max((a - b).abs());
                }
            }
        }
        println!(
            "{label}  hard-bit agreement {agree}/{total} ({:.2}%)   max |LLR dev| {max_llr_dev:.3e}",
            100.0 * agree as f64 / total as f64
        );
    }
}
