//! Fixed-point model of the detection pipeline: per-stage word lengths,
//! round-to-nearest-even quantization with saturation, a reciprocal lookup
//! table, and the 1/B dynamic-range scale-down of the Gram matrix.
//!
//! Only arithmetic word-length effects are modeled; there is no cycle- or
//! register-level hardware emulation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::detector::{
    effective_gain_from_grams, llr_maxlog, post_eq_sinr, DetectorConfig, DetectorError, Method,
    NpiInputs, LlrFrame, PostEqStats,
};
use crate::linalg::{
    diag_split, gram_matrix, invert_via_cholesky, unitary_transform, ComplexMatrix, Direction,
    LinalgError,
};
use crate::txchain::UplinkFrame;

#[derive(Debug, thiserror::Error)]
pub enum FxpError {
    #[error("invalid fixed-point format: {0}")]
    InvalidFormat(String),
    #[error("cannot quantize non-finite value {0}")]
    NonFinite(f64),
    #[error("reciprocal LUT input {value} outside table range [{lo}, {hi})")]
    LutRange { value: f64, lo: f64, hi: f64 },
    #[error("stage '{stage}': {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<FxpError>,
    },
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Detector(#[from] DetectorError),
}

fn at_stage(stage: &'static str) -> impl Fn(FxpError) -> FxpError {
    move |source| FxpError::Stage { stage, source: Box::new(source) }
}

/// A signed fixed-point format: `word_bits` total (including sign),
/// `frac_bits` fractional. Representable range is
/// `[-2^(word-1-frac), 2^(word-1-frac) - 2^-frac]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedFormat {
    pub word_bits: u32,
    pub frac_bits: u32,
}

impl FixedFormat {
    pub fn new(word_bits: u32, frac_bits: u32) -> Result<Self, FxpError> {
        let fmt = FixedFormat { word_bits, frac_bits };
        fmt.validate()?;
        Ok(fmt)
    }

    pub fn validate(&self) -> Result<(), FxpError> {
        if !(1 <= self.frac_bits && self.frac_bits < self.word_bits && self.word_bits <= 32) {
            return Err(FxpError::InvalidFormat(format!(
                "need 1 <= frac < word <= 32, got word={} frac={}",
                self.word_bits, self.frac_bits
            )));
        }
        Ok(())
    }

    pub fn resolution(&self) -> f64 {
        (-(self.frac_bits as f64)).exp2()
    }

    pub fn max_value(&self) -> f64 {
        ((self.word_bits - 1 - self.frac_bits) as f64).exp2() - self.resolution()
    }

    pub fn min_value(&self) -> f64 {
        -(((self.word_bits - 1 - self.frac_bits) as f64).exp2())
    }
}

fn round_half_even(x: f64) -> f64 {
    let floor = x.floor();
    let diff = x - floor;
    if diff > 0.5 {
        floor + 1.0
    } else if diff < 0.5 {
        floor
    } else if (floor as i64) % 2 == 0 {
        floor
    } else {
        floor + 1.0
    }
}

/// Rounds to the nearest representable value (ties to even), saturating at
/// the format limits. Idempotent.
pub fn quantize(v: f64, fmt: FixedFormat) -> Result<f64, FxpError> {
    if !v.is_finite() {
        return Err(FxpError::NonFinite(v));
    }
    fmt.validate()?;
    let scale = (fmt.frac_bits as f64).exp2();
    let q = round_half_even(v * scale) / scale;
    Ok(q.clamp(fmt.min_value(), fmt.max_value()))
}

fn quantize_c(v: Complex64, fmt: FixedFormat) -> Result<Complex64, FxpError> {
    Ok(Complex64::new(quantize(v.re, fmt)?, quantize(v.im, fmt)?))
}

fn quantize_matrix(m: &ComplexMatrix, fmt: FixedFormat) -> Result<ComplexMatrix, FxpError> {
    let mut out = ComplexMatrix::zeros(m.rows(), m.cols());
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            out[(i, j)] = quantize_c(m[(i, j)], fmt)?;
        }
    }
    Ok(out)
}

fn quantize_vec(v: &[Complex64], fmt: FixedFormat) -> Result<Vec<Complex64>, FxpError> {
    v.iter().map(|&x| quantize_c(x, fmt)).collect()
}

/// Word-length plan for the whole pipeline.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FxpPipelineConfig {
    /// Received samples and channel estimates.
    pub input_fmt: FixedFormat,
    /// MAC registers: Gram matrix, inverse iterates, matched-filter output.
    pub mac_fmt: FixedFormat,
    /// Equalizer and despreader outputs.
    pub equalizer_out_fmt: FixedFormat,
    /// Soft outputs.
    pub llr_fmt: FixedFormat,
    pub recip_lut_addr_bits: u32,
    pub recip_lut_out_bits: u32,
}

impl FxpPipelineConfig {
    /// The reference word lengths: 15-bit inputs, 22-bit MAC registers,
    /// 12-bit equalizer outputs, 8-bit LLRs, 1024-entry 12-bit LUT.
    /// Binary points sit at `word - 3` throughout.
    pub fn paper() -> Self {
        FxpPipelineConfig {
            input_fmt: FixedFormat { word_bits: 15, frac_bits: 12 },
            mac_fmt: FixedFormat { word_bits: 22, frac_bits: 19 },
            equalizer_out_fmt: FixedFormat { word_bits: 12, frac_bits: 9 },
            llr_fmt: FixedFormat { word_bits: 8, frac_bits: 5 },
            recip_lut_addr_bits: 10,
            recip_lut_out_bits: 12,
        }
    }

    /// Widened formats used as a convergence oracle: quantization effects
    /// shrink below 1e-4. LLRs keep fewer fraction bits for headroom.
    pub fn wide() -> Self {
        FxpPipelineConfig {
            input_fmt: FixedFormat { word_bits: 30, frac_bits: 24 },
            mac_fmt: FixedFormat { word_bits: 30, frac_bits: 24 },
            equalizer_out_fmt: FixedFormat { word_bits: 30, frac_bits: 24 },
            llr_fmt: FixedFormat { word_bits: 30, frac_bits: 16 },
            recip_lut_addr_bits: 16,
            recip_lut_out_bits: 30,
        }
    }

    fn lut_out_fmt(&self) -> FixedFormat {
        FixedFormat {
            word_bits: self.recip_lut_out_bits,
            frac_bits: self.recip_lut_out_bits - 3,
        }
    }
}

/// Input range covered by the reciprocal table; normalized diagonals of
/// `A/B` concentrate near 1.
pub const LUT_RANGE: (f64, f64) = (0.25, 4.0);

/// Table lookup of `1/d` on a uniform grid over [`LUT_RANGE`]; each entry is
/// the reciprocal of its cell midpoint, quantized to the output format.
pub fn reciprocal_lut(d: f64, cfg: &FxpPipelineConfig) -> Result<f64, FxpError> {
    let (lo, hi) = LUT_RANGE;
    if !d.is_finite() || d < lo || d >= hi {
        return Err(FxpError::LutRange { value: d, lo, hi });
    }
    let cells = 1u64 << cfg.recip_lut_addr_bits;
    let step = (hi - lo) / cells as f64;
    let idx = (((d - lo) / step) as u64).min(cells - 1);
    let center = lo + (idx as f64 + 0.5) * step;
    quantize(1.0 / center, cfg.lut_out_fmt())
}

/// Neumann recurrence on the normalized matrix, with LUT reciprocals for the
/// diagonal and quantization to the MAC format after each iterate.
fn neumann_inverse_fxp(
    a_norm: &ComplexMatrix,
    k: usize,
    cfg: &FxpPipelineConfig,
) -> Result<ComplexMatrix, FxpError> {
    let split = diag_split(a_norm)?;
    let n = split.dim();
    let d_inv: Vec<f64> = split
        .d
        .iter()
        .map(|&d| reciprocal_lut(d, cfg))
        .collect::<Result<_, _>>()
        .map_err(at_stage("reciprocal"))?;

    let mut inv = ComplexMatrix::diag(&d_inv);
    if k == 1 {
        return Ok(inv);
    }

    let mut m = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                m[(i, j)] = quantize_c(-split.e[(i, j)] * d_inv[i], cfg.mac_fmt)
                    .map_err(at_stage("series"))?;
            }
        }
    }
    for _ in 1..k {
        let next = m.matmul(&inv);
        let mut next = quantize_matrix(&next, cfg.mac_fmt).map_err(at_stage("series"))?;
        for i in 0..n {
            next[(i, i)] += d_inv[i];
        }
        inv = quantize_matrix(&next.symmetrized(), cfg.mac_fmt).map_err(at_stage("series"))?;
    }
    Ok(inv)
}

/// Fixed-point counterpart of `detector::detect_frame`: identical data path
/// with quantization at every stage boundary and the Gram matrix scaled down
/// by `1/B` before inversion.
pub fn fxp_detect_frame(
    cfg: &FxpPipelineConfig,
    det: &DetectorConfig,
    frame: &UplinkFrame,
) -> Result<(LlrFrame, PostEqStats), FxpError> {
    det.validate()?;
    let terms = match det.method {
        Method::Neumann(k) => Some(k),
        Method::Cholesky => None,
        Method::MatchedFilter => {
            return Err(FxpError::Unsupported(
                "fixed-point pipeline models neumann:K and cholesky only".into(),
            ))
        }
    };

    let l = frame.channels.len();
    let b = frame.channels[0].rows();
    let u = frame.channels[0].cols();
    let b_inv = 1.0 / b as f64;
    let n0_over_es_norm = frame.n0 / frame.es * b_inv;

    let mut grams = Vec::with_capacity(l);
    let mut regularized = Vec::with_capacity(l);
    let mut inverses = Vec::with_capacity(l);
    let mut equalized = Vec::with_capacity(l);
    for w in 0..l {
        let hq = quantize_matrix(&frame.channels[w], cfg.input_fmt).map_err(at_stage("input"))?;
        let yq = quantize_vec(&frame.y[w], cfg.input_fmt).map_err(at_stage("input"))?;

        // normalized Gram A/B keeps MAC values near unity
        let g_norm =
            quantize_matrix(&gram_matrix(&hq)?.scale(b_inv), cfg.mac_fmt).map_err(at_stage("gram"))?;
        let mut a_norm = g_norm.clone();
        for i in 0..u {
            a_norm[(i, i)] = quantize_c(
                a_norm[(i, i)] + Complex64::new(n0_over_es_norm, 0.0),
                cfg.mac_fmt,
            )
            .map_err(at_stage("gram"))?;
        }

        let inv_norm = match terms {
            Some(k) => neumann_inverse_fxp(&a_norm, k, cfg)?,
            None => quantize_matrix(&invert_via_cholesky(&a_norm)?, cfg.mac_fmt)
                .map_err(at_stage("inverse"))?,
        };

        // matched filter, scaled down by 1/B so inv(A/B) applies directly
        let mut y_mf = Vec::with_capacity(u);
        for i in 0..u {
            let acc: Complex64 = (0..b).map(|r| hq[(r, i)].conj() * yq[r]).sum();
            y_mf.push(
                quantize_c(acc * b_inv, cfg.mac_fmt).map_err(at_stage("matched-filter"))?,
            );
        }
        let s_hat = quantize_vec(&inv_norm.matvec(&y_mf)?, cfg.equalizer_out_fmt)
            .map_err(at_stage("equalizer"))?;

        grams.push(g_norm);
        regularized.push(a_norm);
        inverses.push(inv_norm);
        equalized.push(s_hat);
    }

    // the 1/B scale-down cancels in every gain/NPI expression
    let mu = effective_gain_from_grams(&inverses, &grams)?;
    let npi = crate::detector::npi_variance(
        det.npi_mode,
        &NpiInputs {
            es: frame.es,
            n0_over_es: n0_over_es_norm,
            mu: &mu,
            grams: &grams,
            regularized: &regularized,
            inverses: &inverses,
        },
    )?;
    let stats = post_eq_sinr(PostEqStats { mu, npi, sinr: vec![] })?;

    let bps = det.modulation.bits_per_symbol();
    let mut llrs = Vec::with_capacity(u);
    let mut hard = Vec::with_capacity(u);
    for i in 0..u {
        let s_user: Vec<Complex64> = (0..l).map(|w| equalized[w][i]).collect();
        let x_hat = quantize_vec(
            &unitary_transform(&s_user, Direction::Inverse),
            cfg.equalizer_out_fmt,
        )
        .map_err(at_stage("despreader"))?;
        let mut user_llrs = Vec::with_capacity(l * bps);
        for t in 0..l {
            let vals = llr_maxlog(x_hat[t], stats.mu[i], stats.sinr[i], det.modulation, frame.es)?;
            for v in vals {
                user_llrs.push(quantize(v, cfg.llr_fmt).map_err(at_stage("llr"))?);
            }
        }
        let user_hard: Vec<u8> = user_llrs.iter().map(|&v| (v > 0.0) as u8).collect();
        llrs.push(user_llrs);
        hard.push(user_hard);
    }
    Ok((LlrFrame { llrs, hard_bits: hard }, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::{detect_frame, NpiMode};
    use crate::linalg::{gram_matrix, neumann_inverse};
    use crate::txchain::{
        generate_frame, generate_frame_over_channels, identity_channels, trial_rng, Modulation,
        SimConfig,
    };

    #[test]
    fn quantize_examples() {
        let f42 = FixedFormat { word_bits: 4, frac_bits: 2 };
        assert_eq!(quantize(0.6, f42).unwrap(), 0.5);
        assert_eq!(quantize(10.0, f42).unwrap(), 1.75);
        assert_eq!(quantize(0.0, f42).unwrap(), 0.0);
        assert_eq!(quantize(-10.0, f42).unwrap(), -2.0);
        // ties to even at half-LSB
        assert_eq!(quantize(0.375, f42).unwrap(), 0.5);
        assert_eq!(quantize(0.125, f42).unwrap(), 0.0);
        assert!(quantize(f64::NAN, f42).is_err());
        assert!(quantize(f64::INFINITY, f42).is_err());
    }

    #[test]
    fn quantize_is_idempotent_and_bounded() {
        let fmt = FixedFormat { word_bits: 12, frac_bits: 9 };
        let mut v = -5.0;
        while v < 5.0 {
            let q = quantize(v, fmt).unwrap();
            assert_eq!(quantize(q, fmt).unwrap(), q, "v={v}");
            if v.abs() < fmt.max_value() {
                assert!((q - v).abs() <= fmt.resolution() / 2.0 + 1e-15, "v={v}");
            }
            v += 0.00137;
        }
    }

    #[test]
    fn invalid_formats_rejected() {
        assert!(FixedFormat::new(4, 0).is_err());
        assert!(FixedFormat::new(4, 4).is_err());
        assert!(FixedFormat::new(40, 10).is_err());
        assert!(FixedFormat::new(15, 12).is_ok());
    }

    #[test]
    fn lut_hand_values() {
        let cfg = FxpPipelineConfig::paper();
        let lsb = cfg.lut_out_fmt().resolution();
        assert!((reciprocal_lut(1.0, &cfg).unwrap() - 1.0).abs() <= lsb + 1e-12);
        assert!((reciprocal_lut(2.0, &cfg).unwrap() - 0.5).abs() <= lsb + 1e-12);
        assert!((reciprocal_lut(0.5, &cfg).unwrap() - 2.0).abs() <= 4.0 * lsb + 1e-12);
        assert!(reciprocal_lut(0.1, &cfg).is_err());
        assert!(reciprocal_lut(4.0, &cfg).is_err());
    }

    #[test]
    fn lut_central_relative_error_below_one_percent() {
        let cfg = FxpPipelineConfig::paper();
        // central half of [0.25, 4)
        let mut d = 1.1875;
        let mut worst: f64 = 0.0;
        while d < 3.0625 {
            let got = reciprocal_lut(d, &cfg).unwrap();
            worst = worst.max((got - 1.0 / d).abs() * d);
            d += 1e-4;
        }
        assert!(worst <= 0.01, "worst relative error {worst}");
    }

    #[test]
    fn scale_down_is_neutral_in_float() {
        let cfg = SimConfig {
            b: 32,
            u: 4,
            l: 1,
            modulation: Modulation::Qpsk,
            es: 1.0,
            snr_db: 15.0,
            seed: 3,
            trials: 1,
        };
        let mut rng = trial_rng(3, 0);
        let frame = generate_frame(&cfg, &mut rng);
        let g = gram_matrix(&frame.channels[0]).unwrap();
        let ratio = frame.n0 / frame.es;
        let a = crate::linalg::regularized_gram(&g, ratio).unwrap();
        let a_norm = crate::linalg::regularized_gram(
            &g.scale(1.0 / cfg.b as f64),
            ratio / cfg.b as f64,
        )
        .unwrap();
        for k in 1..=4 {
            let direct = neumann_inverse(&diag_split(&a).unwrap(), k).unwrap();
            let rescaled = neumann_inverse(&diag_split(&a_norm).unwrap(), k)
                .unwrap()
                .scale(1.0 / cfg.b as f64);
            assert!(direct.max_abs_diff(&rescaled) < 1e-10, "K={k}");
        }
    }

    #[test]
    fn noiseless_identity_channel_survives_quantization() {
        // B=U identity channel: normalized diagonals are 1/B + reg, which sits
        // below the LUT range for large B, so keep B small here.
        let cfg = SimConfig {
            b: 2,
            u: 2,
            l: 4,
            modulation: Modulation::Qam16,
            es: 1.0,
            snr_db: 200.0,
            seed: 9,
            trials: 1,
        };
        let mut rng = trial_rng(9, 0);
        let mut frame = generate_frame_over_channels(
            &cfg,
            identity_channels(cfg.b, cfg.u, cfg.l),
            0.0,
            &mut rng,
        );
        frame.n0 = 1e-9;
        for method in [Method::Neumann(2), Method::Cholesky] {
            let det = DetectorConfig {
                method,
                npi_mode: if method == Method::Cholesky {
                    NpiMode::ExactMmse
                } else {
                    NpiMode::LowComplexity
                },
                modulation: cfg.modulation,
            };
            let (out, _) = fxp_detect_frame(&FxpPipelineConfig::paper(), &det, &frame).unwrap();
            assert_eq!(out.hard_bits, frame.bits, "{method:?}");
        }
    }

    #[test]
    fn wide_formats_track_floating_llrs() {
        let cfg = SimConfig {
            b: 64,
            u: 4,
            l: 8,
            modulation: Modulation::Qam64,
            es: 1.0,
            snr_db: 20.0,
            seed: 17,
            trials: 1,
        };
        let det = DetectorConfig {
            method: Method::Cholesky,
            npi_mode: NpiMode::ExactMmse,
            modulation: cfg.modulation,
        };
        let mut worst: f64 = 0.0;
        for trial in 0..5 {
            let mut rng = trial_rng(cfg.seed, trial);
            let frame = generate_frame(&cfg, &mut rng);
            let (float_out, _) = detect_frame(&det, &frame).unwrap();
            let (fxp_out, _) =
                fxp_detect_frame(&FxpPipelineConfig::wide(), &det, &frame).unwrap();
            let mut max_abs: f64 = 0.0;
            let mut max_dev: f64 = 0.0;
            for (a, b) in float_out.llrs.iter().zip(&fxp_out.llrs) {
                for (x, y) in a.iter().zip(b) {
                    max_abs = max_abs.max(x.abs());
                    max_dev = max_dev.max((x - y).abs());
                }
            }
            worst = worst.max(max_dev / max_abs);
        }
        assert!(worst <= 1e-4, "worst relative deviation {worst}");
    }

    #[test]
    fn paper_formats_agree_with_float_hard_bits() {
        let cfg = SimConfig {
            b: 64,
            u: 4,
            l: 8,
            modulation: Modulation::Qam64,
            es: 1.0,
            snr_db: 20.0,
            seed: 23,
            trials: 1,
        };
        let det = DetectorConfig {
            method: Method::Neumann(3),
            npi_mode: NpiMode::LowComplexity,
            modulation: cfg.modulation,
        };
        let fxp_cfg = FxpPipelineConfig::paper();
        let mut agree = 0u64;
        let mut total = 0u64;
        for trial in 0..20 {
            let mut rng = trial_rng(cfg.seed, trial);
            let frame = generate_frame(&cfg, &mut rng);
            let (float_out, _) = detect_frame(&det, &frame).unwrap();
            let (fxp_out, _) = fxp_detect_frame(&fxp_cfg, &det, &frame).unwrap();
            for (a, b) in float_out.hard_bits.iter().zip(&fxp_out.hard_bits) {
                for (x, y) in a.iter().zip(b) {
                    agree += u64::from(x == y);
                    total += 1;
                }
            }
        }
        let rate = agree as f64 / total as f64;
        assert!(rate >= 0.99, "agreement rate {rate}");
    }

    #[test]
    fn matched_filter_rejected() {
        let cfg = SimConfig {
            b: 8,
            u: 2,
            l: 2,
            modulation: Modulation::Qpsk,
            es: 1.0,
            snr_db: 10.0,
            seed: 1,
            trials: 1,
        };
        let mut rng = trial_rng(1, 0);
        let frame = generate_frame(&cfg, &mut rng);
        let det = DetectorConfig {
            method: Method::MatchedFilter,
            npi_mode: NpiMode::LowComplexity,
            modulation: cfg.modulation,
        };
        assert!(matches!(
            fxp_detect_frame(&FxpPipelineConfig::paper(), &det, &frame),
            Err(FxpError::Unsupported(_))
        ));
    }
}
