//! Soft-output linear detection: matched filter, per-subcarrier MMSE
//! equalization with exact or Neumann-approximated inverses, effective
//! channel gain, NPI variance, SINR, despreading, and max-log LLRs.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::linalg::{
    diag_split, gram_matrix, invert_via_cholesky, neumann_inverse, regularized_gram,
    unitary_transform, ComplexMatrix, Direction, LinalgError,
};
use crate::txchain::{map_gray_qam, Modulation, UplinkFrame};

/// Inversion method for the per-subcarrier equalizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    /// Matched filter; identical to `Neumann(1)` up to naming.
    MatchedFilter,
    /// K-term truncated series approximation.
    Neumann(usize),
    /// Exact Cholesky-based inverse.
    Cholesky,
}

impl Method {
    pub fn label(&self) -> String {
        match self {
            Method::MatchedFilter => "mf".into(),
            Method::Neumann(k) => format!("neumann:{k}"),
            Method::Cholesky => "cholesky".into(),
        }
    }
}

/// How the post-equalization NPI variance is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NpiMode {
    /// `Es*mu - Es*mu^2`; only valid for the exact inverse.
    ExactMmse,
    /// Per-subcarrier quadratic form through the approximate inverse.
    NeumannExact,
    /// One-term inner-product substitute.
    K1,
    /// Diagonal-only approximation.
    LowComplexity,
}

impl NpiMode {
    pub fn label(&self) -> &'static str {
        match self {
            NpiMode::ExactMmse => "exact",
            NpiMode::NeumannExact => "neumann-exact",
            NpiMode::K1 => "k1",
            NpiMode::LowComplexity => "low",
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub method: Method,
    pub npi_mode: NpiMode,
    pub modulation: Modulation,
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<(), DetectorError> {
        if let Method::Neumann(0) = self.method {
            return Err(DetectorError::InvalidConfig(
                "Neumann term count must be at least 1".into(),
            ));
        }
        if self.npi_mode == NpiMode::ExactMmse && self.method != Method::Cholesky {
            return Err(DetectorError::InvalidConfig(
                "exact-mmse NPI requires the Cholesky method".into(),
            ));
        }
        Ok(())
    }

    /// Effective Neumann term count (MF is the one-term expansion).
    fn terms(&self) -> Option<usize> {
        match self.method {
            Method::MatchedFilter => Some(1),
            Method::Neumann(k) => Some(k),
            Method::Cholesky => None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DetectorError {
    #[error("invalid detector config: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("subcarrier {subcarrier}: {source}")]
    Subcarrier {
        subcarrier: usize,
        source: LinalgError,
    },
    #[error("effective gain for user {user} has imaginary residue {imag} (re {re})")]
    NumericalConsistency { user: usize, re: f64, imag: f64 },
    #[error("user {user} has a degenerate (all-zero) channel column")]
    DegenerateUser { user: usize },
    #[error("NPI for user {user} is not positive: {value}")]
    DegenerateNpi { user: usize, value: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Tx(#[from] crate::txchain::TxError),
}

/// Per-user effective gain, NPI variance, and SINR.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PostEqStats {
    pub mu: Vec<f64>,
    pub npi: Vec<f64>,
    pub sinr: Vec<f64>,
}

/// Soft outputs plus hard decisions for one frame.
#[derive(Debug, Clone)]
pub struct LlrFrame {
    /// Per user: L * log2(M) soft values.
    pub llrs: Vec<Vec<f64>>,
    /// Hard decision per LLR: 1 iff the LLR is positive.
    pub hard_bits: Vec<Vec<u8>>,
}

/// Matched-filter output `H^H y`.
pub fn matched_filter(
    h: &ComplexMatrix,
    y: &[Complex64],
) -> Result<Vec<Complex64>, DetectorError> {
    if y.len() != h.rows() {
        return Err(DetectorError::Dimension { expected: h.rows(), got: y.len() });
    }
    Ok((0..h.cols())
        .map(|i| {
            (0..h.rows())
                .map(|r| h[(r, i)].conj() * y[r])
                .sum::<Complex64>()
        })
        .collect())
}

/// Equalized symbols `inv * y_mf`.
pub fn equalize(
    a_inv: &ComplexMatrix,
    y_mf: &[Complex64],
) -> Result<Vec<Complex64>, DetectorError> {
    a_inv.matvec(y_mf).map_err(DetectorError::from)
}

// loose enough to admit quantized (fixed-point) inputs
const MU_IMAG_TOL: f64 = 1e-6;
const NPI_FLOOR_FACTOR: f64 = 1e-12;

/// Effective channel gain per user, averaged over subcarriers:
/// `mu_i = L^-1 sum_w [inv_w G_w]_ii`, with `G_w = H_w^H H_w`.
pub fn effective_gain(
    a_inv_per_sc: &[ComplexMatrix],
    channels: &[ComplexMatrix],
) -> Result<Vec<f64>, DetectorError> {
    let grams: Vec<ComplexMatrix> = channels
        .iter()
        .map(gram_matrix)
        .collect::<Result<_, _>>()?;
    effective_gain_from_grams(a_inv_per_sc, &grams)
}

pub(crate) fn effective_gain_from_grams(
    a_inv_per_sc: &[ComplexMatrix],
    grams: &[ComplexMatrix],
) -> Result<Vec<f64>, DetectorError> {
    let l = a_inv_per_sc.len();
    assert_eq!(l, grams.len());
    let u = grams[0].rows();
    let mut mu = vec![Complex64::new(0.0, 0.0); u];
    for (inv, g) in a_inv_per_sc.iter().zip(grams) {
        for (i, m) in mu.iter_mut().enumerate() {
            let diag: Complex64 = (0..u).map(|j| inv[(i, j)] * g[(j, i)]).sum();
            *m += diag;
        }
    }
    mu.iter()
        .enumerate()
        .map(|(i, m)| {
            let val = m / l as f64;
            if val.im.abs() > MU_IMAG_TOL * val.re.abs().max(1.0) {
                return Err(DetectorError::NumericalConsistency {
                    user: i,
                    re: val.re,
                    imag: val.im,
                });
            }
            Ok(val.re)
        })
        .collect()
}

/// Inputs for [`npi_variance`], gathered per subcarrier as the mode requires.
pub struct NpiInputs<'a> {
    pub es: f64,
    pub n0_over_es: f64,
    /// Effective gain of the detector actually in use.
    pub mu: &'a [f64],
    pub grams: &'a [ComplexMatrix],
    pub regularized: &'a [ComplexMatrix],
    pub inverses: &'a [ComplexMatrix],
}

/// Post-equalization NPI variance per user, clamped to a small positive
/// floor; the series-based expressions are not guaranteed non-negative.
pub fn npi_variance(mode: NpiMode, inp: &NpiInputs<'_>) -> Result<Vec<f64>, DetectorError> {
    let l = inp.grams.len();
    let u = inp.grams[0].rows();
    for i in 0..u {
        if inp.grams.iter().all(|g| g[(i, i)].re <= 0.0) {
            return Err(DetectorError::DegenerateUser { user: i });
        }
    }

    let raw: Vec<f64> = match mode {
        NpiMode::ExactMmse => inp
            .mu
            .iter()
            .map(|&m| inp.es * m - inp.es * m * m)
            .collect(),
        NpiMode::NeumannExact => {
            let mut acc = vec![0.0; u];
            for ((inv, a), g) in inp.inverses.iter().zip(inp.regularized).zip(inp.grams) {
                let ag = a.matmul(g);
                for (i, slot) in acc.iter_mut().enumerate() {
                    let row = inv.row(i);
                    let mut q = Complex64::new(0.0, 0.0);
                    for j in 0..u {
                        let mut inner = Complex64::new(0.0, 0.0);
                        for k in 0..u {
                            inner += ag[(j, k)] * row[k].conj();
                        }
                        q += row[j] * inner;
                    }
                    *slot += q.re;
                }
            }
            acc.iter()
                .zip(inp.mu)
                .map(|(&s, &m)| inp.es * s / l as f64 - inp.es * m * m)
                .collect()
        }
        NpiMode::K1 | NpiMode::LowComplexity => {
            let mut acc = vec![0.0; u];
            let mut mu1 = vec![0.0; u];
            for g in inp.grams {
                for i in 0..u {
                    let d = g[(i, i)].re + inp.n0_over_es;
                    mu1[i] += g[(i, i)].re / d;
                    match mode {
                        NpiMode::K1 => {
                            // row i of A against column i of G
                            let mut ip = Complex64::new(0.0, 0.0);
                            for j in 0..u {
                                let a_ij = if j == i {
                                    Complex64::new(d, 0.0)
                                } else {
                                    g[(i, j)]
                                };
                                ip += a_ij.conj() * g[(j, i)];
                            }
                            acc[i] += ip.re / (d * d);
                        }
                        NpiMode::LowComplexity => {
                            acc[i] += g[(i, i)].re / d;
                        }
                        _ => unreachable!(),
                    }
                }
            }
            acc.iter()
                .zip(&mu1)
                .map(|(&s, &m1)| {
                    let m1 = m1 / l as f64;
                    inp.es * s / l as f64 - inp.es * m1 * m1
                })
                .collect()
        }
    };

    let floor = NPI_FLOOR_FACTOR * inp.es;
    Ok(raw.into_iter().map(|v| v.max(floor)).collect())
}

/// Fills in `sinr = mu^2 / npi`.
pub fn post_eq_sinr(mut stats: PostEqStats) -> Result<PostEqStats, DetectorError> {
    stats.sinr = stats
        .mu
        .iter()
        .zip(&stats.npi)
        .enumerate()
        .map(|(i, (&m, &v))| {
            if v <= 0.0 {
                return Err(DetectorError::DegenerateNpi { user: i, value: v });
            }
            Ok(m * m / v)
        })
        .collect::<Result<_, _>>()?;
    Ok(stats)
}

fn nearest_level(levels: &[f64], z: f64) -> f64 {
    let mut best = levels[0];
    let mut best_d = (z - best).abs();
    for &a in &levels[1..] {
        let d = (z - a).abs();
        if d < best_d {
            best_d = d;
            best = a;
        }
    }
    best
}

/// Difference of squared distances to the nearest points of two level sets,
/// evaluated in its piecewise-linear form `(a1-a0)(2z - a0 - a1)`.
fn axis_llr_piecewise(z: f64, zero_levels: &[f64], one_levels: &[f64]) -> f64 {
    let a0 = nearest_level(zero_levels, z);
    let a1 = nearest_level(one_levels, z);
    (a1 - a0) * (2.0 * z - a0 - a1)
}

/// Max-log LLRs for one equalized time-domain symbol, piecewise-linear path.
///
/// Positive LLR means bit 1 is more likely; the sign convention pairs with
/// `min over zero-labeled points minus min over one-labeled points`.
pub fn llr_maxlog(
    x_hat: Complex64,
    mu: f64,
    sinr: f64,
    modulation: Modulation,
    es: f64,
) -> Result<Vec<f64>, DetectorError> {
    if mu <= 0.0 {
        return Err(DetectorError::InvalidConfig(format!(
            "effective gain must be positive, got {mu}"
        )));
    }
    let z = x_hat / mu;
    let amp = es.sqrt() * modulation.axis_scale();

    if modulation == Modulation::Bpsk {
        // single bit drives both axes
        let s = amp;
        let lam = axis_llr_piecewise(z.re, &[s], &[-s]) + axis_llr_piecewise(z.im, &[s], &[-s]);
        return Ok(vec![sinr * lam]);
    }

    let levels = modulation.axis_levels();
    let k = modulation.bits_per_axis();
    let bps = modulation.bits_per_symbol();
    let mut out = Vec::with_capacity(bps);
    for b in 0..bps {
        let axis_val = if b % 2 == 0 { z.re } else { z.im };
        let pos = b / 2;
        let zero: Vec<f64> = levels
            .iter()
            .filter(|(_, bits)| bits[pos] == 0)
            .map(|(lv, _)| lv * amp)
            .collect();
        let one: Vec<f64> = levels
            .iter()
            .filter(|(_, bits)| bits[pos] == 1)
            .map(|(lv, _)| lv * amp)
            .collect();
        debug_assert_eq!(zero.len(), 1 << (k - 1));
        out.push(sinr * axis_llr_piecewise(axis_val, &zero, &one));
    }
    Ok(out)
}

/// Max-log LLRs by exhaustive two-minimum search over the full constellation.
/// Reference path for the piecewise-linear evaluator.
pub fn llr_maxlog_direct(
    x_hat: Complex64,
    mu: f64,
    sinr: f64,
    modulation: Modulation,
    es: f64,
) -> Result<Vec<f64>, DetectorError> {
    if mu <= 0.0 {
        return Err(DetectorError::InvalidConfig(format!(
            "effective gain must be positive, got {mu}"
        )));
    }
    let z = x_hat / mu;
    let m = modulation.order();
    let bps = modulation.bits_per_symbol();
    let points: Vec<(Vec<u8>, Complex64)> = (0..m)
        .map(|pat| {
            let bits: Vec<u8> = (0..bps).map(|p| ((pat >> (bps - 1 - p)) & 1) as u8).collect();
            let pt = map_gray_qam(&bits, m, es).expect("valid order");
            (bits, pt)
        })
        .collect();

    Ok((0..bps)
        .map(|b| {
            let mut min0 = f64::INFINITY;
            let mut min1 = f64::INFINITY;
            for (bits, pt) in &points {
                let d = (z - pt).norm_sqr();
                if bits[b] == 0 {
                    min0 = min0.min(d);
                } else {
                    min1 = min1.min(d);
                }
            }
            sinr * (min0 - min1)
        })
        .collect())
}

/// Per-subcarrier preprocessing products kept for NPI computation.
struct Preprocessed {
    grams: Vec<ComplexMatrix>,
    regularized: Vec<ComplexMatrix>,
    inverses: Vec<ComplexMatrix>,
    equalized: Vec<Vec<Complex64>>, // per subcarrier, length U
}

fn preprocess(cfg: &DetectorConfig, frame: &UplinkFrame) -> Result<Preprocessed, DetectorError> {
    let l = frame.channels.len();
    let n0_over_es = frame.n0 / frame.es;
    let mut grams = Vec::with_capacity(l);
    let mut regularized = Vec::with_capacity(l);
    let mut inverses = Vec::with_capacity(l);
    let mut equalized = Vec::with_capacity(l);

    for w in 0..l {
        let wrap = |source: LinalgError| DetectorError::Subcarrier { subcarrier: w, source };
        let h = &frame.channels[w];
        let g = gram_matrix(h).map_err(wrap)?;
        let a = regularized_gram(&g, n0_over_es).map_err(wrap)?;
        let inv = match cfg.terms() {
            Some(k) => {
                let split = diag_split(&a).map_err(wrap)?;
                neumann_inverse(&split, k).map_err(wrap)?
            }
            None => invert_via_cholesky(&a).map_err(wrap)?,
        };
        let y_mf = matched_filter(h, &frame.y[w])?;
        let s_hat = equalize(&inv, &y_mf)?;
        grams.push(g);
        regularized.push(a);
        inverses.push(inv);
        equalized.push(s_hat);
    }
    Ok(Preprocessed { grams, regularized, inverses, equalized })
}

/// Runs the full detection pipeline on one frame.
pub fn detect_frame(
    cfg: &DetectorConfig,
    frame: &UplinkFrame,
) -> Result<(LlrFrame, PostEqStats), DetectorError> {
    cfg.validate()?;
    let u = frame.channels[0].cols();
    let l = frame.channels.len();
    let pre = preprocess(cfg, frame)?;

    let mu = effective_gain_from_grams(&pre.inverses, &pre.grams)?;
    let npi = npi_variance(
        cfg.npi_mode,
        &NpiInputs {
            es: frame.es,
            n0_over_es: frame.n0 / frame.es,
            mu: &mu,
            grams: &pre.grams,
            regularized: &pre.regularized,
            inverses: &pre.inverses,
        },
    )?;
    let stats = post_eq_sinr(PostEqStats { mu, npi, sinr: vec![] })?;

    let bps = cfg.modulation.bits_per_symbol();
    let mut llrs = Vec::with_capacity(u);
    let mut hard = Vec::with_capacity(u);
    for i in 0..u {
        let s_hat_user: Vec<Complex64> = (0..l).map(|w| pre.equalized[w][i]).collect();
        let x_hat = unitary_transform(&s_hat_user, Direction::Inverse);
        let mut user_llrs = Vec::with_capacity(l * bps);
        for t in 0..l {
            let vals = llr_maxlog(
                x_hat[t],
                stats.mu[i],
                stats.sinr[i],
                cfg.modulation,
                frame.es,
            )?;
            user_llrs.extend(vals);
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
    use crate::txchain::{generate_frame_over_channels, identity_channels, trial_rng, SimConfig};
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn matched_filter_hand_values() {
        let h = ComplexMatrix::identity(2);
        let y = [c(1.5, 0.0), c(0.0, -2.0)];
        assert_eq!(matched_filter(&h, &y).unwrap(), y.to_vec());

        let h = ComplexMatrix::from_rows(2, 1, vec![c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
        let out = matched_filter(&h, &[c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
        assert_abs_diff_eq!(out[0].re, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out[0].im, 0.0, epsilon = 1e-15);

        let h = ComplexMatrix::from_real(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
        let out = matched_filter(&h, &[c(1.0, 0.0); 3]).unwrap();
        assert_abs_diff_eq!(out[0].re, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out[1].re, 2.0, epsilon = 1e-15);
    }

    #[test]
    fn matched_filter_dimension_check() {
        let h = ComplexMatrix::identity(2);
        assert!(matches!(
            matched_filter(&h, &[c(1.0, 0.0)]),
            Err(DetectorError::Dimension { .. })
        ));
    }

    #[test]
    fn equalize_hand_values() {
        let inv = ComplexMatrix::diag(&[0.5, 0.25]);
        let out = equalize(&inv, &[c(2.0, 0.0), c(4.0, 0.0)]).unwrap();
        assert_abs_diff_eq!(out[0].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out[1].re, 1.0, epsilon = 1e-15);

        let third = 1.0 / 3.0;
        let inv =
            ComplexMatrix::from_real(2, 2, &[2.0 * third, -third, -third, 2.0 * third]).unwrap();
        let out = equalize(&inv, &[c(3.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert_abs_diff_eq!(out[0].re, 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(out[1].re, -1.0, epsilon = 1e-14);
    }

    #[test]
    fn effective_gain_hand_values() {
        // U=1, L=1, h=1, N0/Es=1: exact inverse of (1+1) is 0.5, mu = 0.5
        let h = ComplexMatrix::from_real(1, 1, &[1.0]).unwrap();
        let inv = ComplexMatrix::from_real(1, 1, &[0.5]).unwrap();
        let mu = effective_gain(&[inv], &[h]).unwrap();
        assert_abs_diff_eq!(mu[0], 0.5, epsilon = 1e-14);

        // L=2, h1=1 and h2=2: mu = (0.5 + 0.8)/2
        let h1 = ComplexMatrix::from_real(1, 1, &[1.0]).unwrap();
        let h2 = ComplexMatrix::from_real(1, 1, &[2.0]).unwrap();
        let inv1 = ComplexMatrix::from_real(1, 1, &[1.0 / 2.0]).unwrap();
        let inv2 = ComplexMatrix::from_real(1, 1, &[1.0 / 5.0]).unwrap();
        let mu = effective_gain(&[inv1, inv2], &[h1, h2]).unwrap();
        assert_abs_diff_eq!(mu[0], 0.65, epsilon = 1e-14);
    }

    #[test]
    fn effective_gain_is_one_without_regularizer() {
        let mut rng = trial_rng(11, 0);
        let cfg = SimConfig {
            b: 8,
            u: 3,
            l: 2,
            modulation: Modulation::Qpsk,
            es: 1.0,
            snr_db: 10.0,
            seed: 11,
            trials: 1,
        };
        let frame = crate::txchain::generate_frame(&cfg, &mut rng);
        let invs: Vec<ComplexMatrix> = frame
            .channels
            .iter()
            .map(|h| {
                let g = gram_matrix(h).unwrap();
                invert_via_cholesky(&g).unwrap()
            })
            .collect();
        let mu = effective_gain(&invs, &frame.channels).unwrap();
        for m in mu {
            assert_abs_diff_eq!(m, 1.0, epsilon = 1e-9);
        }
    }

    fn scalar_npi_inputs<'a>(
        grams: &'a [ComplexMatrix],
        regularized: &'a [ComplexMatrix],
        inverses: &'a [ComplexMatrix],
        mu: &'a [f64],
    ) -> NpiInputs<'a> {
        NpiInputs { es: 1.0, n0_over_es: 1.0, mu, grams, regularized, inverses }
    }

    #[test]
    fn npi_modes_agree_on_scalar_example() {
        // U=1, L=1, h=1, N0/Es=1, Es=1: every mode gives 0.25
        let g = vec![ComplexMatrix::from_real(1, 1, &[1.0]).unwrap()];
        let a = vec![ComplexMatrix::from_real(1, 1, &[2.0]).unwrap()];
        let inv = vec![ComplexMatrix::from_real(1, 1, &[0.5]).unwrap()];
        let mu = vec![0.5];
        for mode in [
            NpiMode::ExactMmse,
            NpiMode::NeumannExact,
            NpiMode::K1,
            NpiMode::LowComplexity,
        ] {
            let v = npi_variance(mode, &scalar_npi_inputs(&g, &a, &inv, &mu)).unwrap();
            assert_abs_diff_eq!(v[0], 0.25, epsilon = 1e-12);
        }
    }

    #[test]
    fn exact_npi_vanishes_at_high_snr() {
        let mu = vec![1.0 - 1e-9];
        let g = vec![ComplexMatrix::from_real(1, 1, &[1.0]).unwrap()];
        let a = g.clone();
        let inv = g.clone();
        let inputs = NpiInputs {
            es: 1.0,
            n0_over_es: 0.0,
            mu: &mu,
            grams: &g,
            regularized: &a,
            inverses: &inv,
        };
        let v = npi_variance(NpiMode::ExactMmse, &inputs).unwrap();
        assert!(v[0] < 1e-8);
    }

    #[test]
    fn sinr_examples() {
        let stats = post_eq_sinr(PostEqStats {
            mu: vec![0.5, 1.0, 0.0],
            npi: vec![0.25, 1e-6, 0.3],
            sinr: vec![],
        })
        .unwrap();
        assert_abs_diff_eq!(stats.sinr[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(stats.sinr[1], 1e6, epsilon = 1.0);
        assert_abs_diff_eq!(stats.sinr[2], 0.0, epsilon = 1e-15);

        assert!(matches!(
            post_eq_sinr(PostEqStats { mu: vec![1.0], npi: vec![0.0], sinr: vec![] }),
            Err(DetectorError::DegenerateNpi { .. })
        ));
    }

    #[test]
    fn qpsk_llr_hand_value() {
        let llrs = llr_maxlog(c(0.5, 0.5), 1.0, 1.0, Modulation::Qpsk, 1.0).unwrap();
        let want = -(2.0_f64.sqrt());
        assert_abs_diff_eq!(llrs[0], want, epsilon = 1e-12);
        assert_abs_diff_eq!(llrs[1], want, epsilon = 1e-12);
    }

    #[test]
    fn midpoint_gives_zero_llr() {
        // z on the imaginary axis sits midway between the QPSK half-planes
        let llrs = llr_maxlog(c(0.0, 0.3), 1.0, 2.0, Modulation::Qpsk, 1.0).unwrap();
        assert_abs_diff_eq!(llrs[0], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_sinr_means_zero_llrs() {
        for modu in [Modulation::Bpsk, Modulation::Qpsk, Modulation::Qam16, Modulation::Qam64] {
            let llrs = llr_maxlog(c(0.37, -0.8), 0.9, 0.0, modu, 1.0).unwrap();
            assert!(llrs.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn piecewise_matches_direct_on_grid() {
        for modu in [Modulation::Bpsk, Modulation::Qpsk, Modulation::Qam16, Modulation::Qam64] {
            let mut worst: f64 = 0.0;
            let n = 100;
            for a in 0..n {
                for b in 0..n {
                    let z = c(
                        -2.0 + 4.0 * a as f64 / (n - 1) as f64,
                        -2.0 + 4.0 * b as f64 / (n - 1) as f64,
                    );
                    let p = llr_maxlog(z, 0.8, 1.7, modu, 1.0).unwrap();
                    let d = llr_maxlog_direct(z, 0.8, 1.7, modu, 1.0).unwrap();
                    for (x, y) in p.iter().zip(&d) {
                        worst = worst.max((x - y).abs());
                    }
                }
            }
            assert!(worst <= 1e-9, "{modu:?}: worst deviation {worst}");
        }
    }

    fn noiseless_identity_frame(modu: Modulation, u: usize, l: usize) -> UplinkFrame {
        let cfg = SimConfig {
            b: u,
            u,
            l,
            modulation: modu,
            es: 1.0,
            snr_db: 200.0,
            seed: 5,
            trials: 1,
        };
        let mut rng = trial_rng(cfg.seed, 0);
        let mut frame = generate_frame_over_channels(
            &cfg,
            identity_channels(cfg.b, cfg.u, cfg.l),
            0.0,
            &mut rng,
        );
        frame.n0 = 1e-12; // keep A positive definite
        frame
    }

    #[test]
    fn noiseless_identity_channel_decodes_exactly() {
        for modu in [Modulation::Bpsk, Modulation::Qpsk, Modulation::Qam16, Modulation::Qam64] {
            for method in [Method::MatchedFilter, Method::Neumann(2), Method::Cholesky] {
                let frame = noiseless_identity_frame(modu, 3, 6);
                let npi_mode = if method == Method::Cholesky {
                    NpiMode::ExactMmse
                } else {
                    NpiMode::LowComplexity
                };
                let cfg = DetectorConfig { method, npi_mode, modulation: modu };
                let (out, _) = detect_frame(&cfg, &frame).unwrap();
                assert_eq!(out.hard_bits, frame.bits, "{modu:?} {method:?}");
            }
        }
    }

    #[test]
    fn mf_equalizer_is_scaled_matched_filter() {
        let cfg = SimConfig {
            b: 16,
            u: 4,
            l: 3,
            modulation: Modulation::Qpsk,
            es: 1.0,
            snr_db: 10.0,
            seed: 21,
            trials: 1,
        };
        let mut rng = trial_rng(cfg.seed, 0);
        let frame = crate::txchain::generate_frame(&cfg, &mut rng);
        let det = DetectorConfig {
            method: Method::MatchedFilter,
            npi_mode: NpiMode::LowComplexity,
            modulation: cfg.modulation,
        };
        let pre = preprocess(&det, &frame).unwrap();
        for w in 0..cfg.l {
            let g = &pre.grams[w];
            let y_mf = matched_filter(&frame.channels[w], &frame.y[w]).unwrap();
            for i in 0..cfg.u {
                let d = g[(i, i)].re + frame.n0 / frame.es;
                let want = y_mf[i] / d;
                assert!((pre.equalized[w][i] - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn invalid_configs_rejected() {
        let bad = DetectorConfig {
            method: Method::Neumann(0),
            npi_mode: NpiMode::LowComplexity,
            modulation: Modulation::Qpsk,
        };
        assert!(bad.validate().is_err());
        let bad = DetectorConfig {
            method: Method::Neumann(2),
            npi_mode: NpiMode::ExactMmse,
            modulation: Modulation::Qpsk,
        };
        assert!(bad.validate().is_err());
    }
}
