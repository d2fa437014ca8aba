//! SC-FDMA uplink transmit chain: user bits, Gray-mapped constellation
//! symbols, unitary DFT spreading, i.i.d. Rayleigh per-subcarrier channels,
//! and AWGN.

use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::linalg::{unitary_transform, ComplexMatrix, Direction};

/// Errors from configuration and mapping.
#[derive(Debug, thiserror::Error)]
pub enum TxError {
    #[error("unsupported constellation size {0}; expected 2, 4, 16 or 64")]
    UnsupportedModulation(usize),
    #[error("bit vector length {got} does not match log2(M) = {expected}")]
    BitLength { expected: usize, got: usize },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
}

/// Gray-mapped constellation, 3GPP conventions, unit average energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Modulation {
    Bpsk,
    Qpsk,
    Qam16,
    Qam64,
}

impl Modulation {
    pub fn from_order(m: usize) -> Result<Self, TxError> {
        match m {
            2 => Ok(Modulation::Bpsk),
            4 => Ok(Modulation::Qpsk),
            16 => Ok(Modulation::Qam16),
            64 => Ok(Modulation::Qam64),
            other => Err(TxError::UnsupportedModulation(other)),
        }
    }

    pub fn order(self) -> usize {
        match self {
            Modulation::Bpsk => 2,
            Modulation::Qpsk => 4,
            Modulation::Qam16 => 16,
            Modulation::Qam64 => 64,
        }
    }

    pub fn bits_per_symbol(self) -> usize {
        match self {
            Modulation::Bpsk => 1,
            Modulation::Qpsk => 2,
            Modulation::Qam16 => 4,
            Modulation::Qam64 => 6,
        }
    }

    /// Per-axis amplitude normalizer (1/sqrt(2), 1/sqrt(10), 1/sqrt(42)).
    pub fn axis_scale(self) -> f64 {
        match self {
            Modulation::Bpsk | Modulation::Qpsk => 1.0 / 2.0_f64.sqrt(),
            Modulation::Qam16 => 1.0 / 10.0_f64.sqrt(),
            Modulation::Qam64 => 1.0 / 42.0_f64.sqrt(),
        }
    }

    /// Number of bits steering one axis (I or Q). BPSK drives both axes with
    /// its single bit.
    pub fn bits_per_axis(self) -> usize {
        match self {
            Modulation::Bpsk => 1,
            Modulation::Qpsk => 1,
            Modulation::Qam16 => 2,
            Modulation::Qam64 => 3,
        }
    }

    /// Maps axis bits (sign bit first) to the unnormalized PAM level.
    fn axis_level(self, bits: &[u8]) -> f64 {
        let sgn = 1.0 - 2.0 * bits[0] as f64;
        match self {
            Modulation::Bpsk | Modulation::Qpsk => sgn,
            Modulation::Qam16 => {
                let m = 1.0 - 2.0 * bits[1] as f64;
                sgn * (2.0 - m)
            }
            Modulation::Qam64 => {
                let m1 = 1.0 - 2.0 * bits[1] as f64;
                let m2 = 1.0 - 2.0 * bits[2] as f64;
                sgn * (4.0 - m1 * (2.0 - m2))
            }
        }
    }

    /// All unnormalized axis levels with their axis-bit labels, sorted by level.
    pub fn axis_levels(self) -> Vec<(f64, Vec<u8>)> {
        let k = self.bits_per_axis();
        let mut out: Vec<(f64, Vec<u8>)> = (0..1usize << k)
            .map(|pat| {
                let bits: Vec<u8> = (0..k).map(|p| ((pat >> (k - 1 - p)) & 1) as u8).collect();
                (self.axis_level(&bits), bits)
            })
            .collect();
        out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        out
    }
}

/// Maps `log2(M)` bits to a Gray constellation point with average energy `es`.
///
/// 3GPP bit ordering: even-index bits steer the in-phase axis, odd-index bits
/// the quadrature axis (sign bit first on each axis). BPSK maps bit 0 to
/// `(1+j)/sqrt(2)`.
pub fn map_gray_qam(bits: &[u8], m: usize, es: f64) -> Result<Complex64, TxError> {
    let modu = Modulation::from_order(m)?;
    let bps = modu.bits_per_symbol();
    if bits.len() != bps {
        return Err(TxError::BitLength { expected: bps, got: bits.len() });
    }
    let amp = es.sqrt() * modu.axis_scale();
    let point = match modu {
        Modulation::Bpsk => {
            let s = 1.0 - 2.0 * bits[0] as f64;
            Complex64::new(s, s)
        }
        _ => {
            let k = modu.bits_per_axis();
            let i_bits: Vec<u8> = (0..k).map(|p| bits[2 * p]).collect();
            let q_bits: Vec<u8> = (0..k).map(|p| bits[2 * p + 1]).collect();
            Complex64::new(modu.axis_level(&i_bits), modu.axis_level(&q_bits))
        }
    };
    Ok(point * amp)
}

/// `N0 = B * Es / 10^(snr_db/10)`, with SNR defined as `B Es / N0`.
pub fn snr_to_n0(snr_db: f64, b: usize, es: f64) -> f64 {
    b as f64 * es / 10f64.powf(snr_db / 10.0)
}

/// Simulation configuration shared by the transmit chain and sweeps.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    /// BS antenna count.
    pub b: usize,
    /// Single-antenna user count.
    pub u: usize,
    /// Subcarrier count (DFT spreading length).
    pub l: usize,
    /// Constellation.
    pub modulation: Modulation,
    /// Average symbol energy.
    pub es: f64,
    /// SNR in dB, defined as B*Es/N0.
    pub snr_db: f64,
    /// RNG seed; trials derive substreams from it.
    pub seed: u64,
    /// Monte-Carlo trial count.
    pub trials: usize,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), TxError> {
        if self.u == 0 || self.u > self.b {
            return Err(TxError::InvalidConfig(format!(
                "need 1 <= U <= B, got U={} B={}",
                self.u, self.b
            )));
        }
        if self.l == 0 {
            return Err(TxError::InvalidConfig("need L >= 1".into()));
        }
        if self.es <= 0.0 {
            return Err(TxError::InvalidConfig("need Es > 0".into()));
        }
        if self.trials == 0 {
            return Err(TxError::InvalidConfig("need trials >= 1".into()));
        }
        Ok(())
    }

    pub fn n0(&self) -> f64 {
        snr_to_n0(self.snr_db, self.b, self.es)
    }
}

/// One generated SC-FDMA symbol worth of uplink data.
#[derive(Debug, Clone)]
pub struct UplinkFrame {
    /// Per user: L * log2(M) bits.
    pub bits: Vec<Vec<u8>>,
    /// Per user: L time-domain constellation symbols.
    pub x: Vec<Vec<Complex64>>,
    /// Per user: L frequency-domain symbols, `s = F_L x`.
    pub s: Vec<Vec<Complex64>>,
    /// Per subcarrier: B x U channel matrix.
    pub channels: Vec<ComplexMatrix>,
    /// Per subcarrier: received vector of length B.
    pub y: Vec<Vec<Complex64>>,
    /// Noise variance per complex receive entry.
    pub n0: f64,
    /// Average symbol energy used by the mapper.
    pub es: f64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic per-trial RNG substream: the trial index is mixed into the
/// base seed so trials can run in parallel with no coordination.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(trial)))
}

pub fn standard_complex_gaussian(rng: &mut impl Rng) -> Complex64 {
    // unit variance per complex entry: each axis has variance 1/2
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Draws bits, maps, spreads, draws channels and noise. Deterministic given
/// `(cfg, rng state)`.
pub fn generate_frame(cfg: &SimConfig, rng: &mut impl Rng) -> UplinkFrame {
    let channels = (0..cfg.l)
        .map(|_| {
            let entries = (0..cfg.b * cfg.u)
                .map(|_| standard_complex_gaussian(rng))
                .collect();
            ComplexMatrix::from_rows(cfg.b, cfg.u, entries).expect("nonzero dims")
        })
        .collect();
    generate_frame_over_channels(cfg, channels, cfg.n0(), rng)
}

/// Same transmit chain over caller-supplied channels and noise variance.
/// Test hook for orthogonal / identity channels and noiseless runs.
pub fn generate_frame_over_channels(
    cfg: &SimConfig,
    channels: Vec<ComplexMatrix>,
    n0: f64,
    rng: &mut impl Rng,
) -> UplinkFrame {
    let bps = cfg.modulation.bits_per_symbol();
    let m = cfg.modulation.order();

    let bits: Vec<Vec<u8>> = (0..cfg.u)
        .map(|_| (0..cfg.l * bps).map(|_| rng.gen_range(0..2u8)).collect())
        .collect();

    let x: Vec<Vec<Complex64>> = bits
        .iter()
        .map(|user_bits| {
            (0..cfg.l)
                .map(|t| {
                    map_gray_qam(&user_bits[t * bps..(t + 1) * bps], m, cfg.es)
                        .expect("validated modulation")
                })
                .collect()
        })
        .collect();

    let s: Vec<Vec<Complex64>> = x
        .iter()
        .map(|xt| unitary_transform(xt, Direction::Forward))
        .collect();

    let noise_amp = (n0 / 2.0).sqrt();
    let y: Vec<Vec<Complex64>> = (0..cfg.l)
        .map(|w| {
            let s_w: Vec<Complex64> = (0..cfg.u).map(|i| s[i][w]).collect();
            let mut y_w = channels[w].matvec(&s_w).expect("dims");
            for yv in y_w.iter_mut() {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                *yv += Complex64::new(re, im) * noise_amp;
            }
            y_w
        })
        .collect();

    UplinkFrame { bits, x, s, channels, y, n0, es: cfg.es }
}

/// L copies of the U x U identity embedded into B x U (upper block).
pub fn identity_channels(b: usize, u: usize, l: usize) -> Vec<ComplexMatrix> {
    let mut h = ComplexMatrix::zeros(b, u);
    for i in 0..u {
        h[(i, i)] = Complex64::new(1.0, 0.0);
    }
    vec![h; l]
}
