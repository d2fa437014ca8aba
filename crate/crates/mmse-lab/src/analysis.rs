//! Analytical results and their Monte-Carlo validation: the convergence
//! probability bound, fourth-moment lemmata, the residual-error bound,
//! closed-form operation counts, and uncoded BER sweeps.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detector::{detect_frame, DetectorConfig, DetectorError, Method};
use crate::fxp::{fxp_detect_frame, FxpPipelineConfig};
use crate::linalg::counted::{
    gram_matrix_counted, invert_via_cholesky_counted, neumann_inverse_counted,
    regularized_gram_counted,
};
use crate::linalg::{
    convergence_norm, diag_split, gram_matrix, invert_via_cholesky, neumann_inverse,
    ComplexMatrix, LinalgError, OpCountLedger,
};
use crate::txchain::{
    generate_frame, standard_complex_gaussian, trial_rng, SimConfig, TxError,
};

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("out of domain: {0}")]
    OutOfDomain(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Detector(#[from] DetectorError),
    #[error(transparent)]
    Tx(#[from] TxError),
}

/// Parameters of the convergence-probability bound.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BoundQuery {
    pub u: usize,
    pub b: usize,
    pub k: usize,
    pub alpha: f64,
}

impl BoundQuery {
    fn validate(&self) -> Result<(), AnalysisError> {
        if self.u == 0 {
            return Err(AnalysisError::OutOfDomain("need U >= 1".into()));
        }
        if self.k == 0 {
            return Err(AnalysisError::OutOfDomain("need K >= 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(AnalysisError::OutOfDomain(format!(
                "alpha must lie in (0,1], got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// Lower bound on `Pr{ ||D^-1 E||_F^K < alpha }` for i.i.d. Gaussian channels:
/// `1 - (U^2-U)/alpha^(2/K) * sqrt(2B(B+1) / ((B-1)(B-2)(B-3)(B-4)))`.
///
/// May be negative (a vacuous bound); callers report that rather than clamp.
pub fn theorem1_bound(q: BoundQuery) -> Result<f64, AnalysisError> {
    q.validate()?;
    if q.b <= 4 {
        return Err(AnalysisError::OutOfDomain(format!(
            "the bound requires B > 4, got B = {}",
            q.b
        )));
    }
    let b = q.b as f64;
    let u = q.u as f64;
    let num = 2.0 * b * (b + 1.0);
    let den = (b - 1.0) * (b - 2.0) * (b - 3.0) * (b - 4.0);
    Ok(1.0 - (u * u - u) / q.alpha.powf(2.0 / q.k as f64) * (num / den).sqrt())
}

/// Empirical `Pr{ ||D^-1 E||_F^K < alpha }` over i.i.d. Gaussian channel
/// draws with zero regularization, matching the bound's setting.
pub fn empirical_norm_prob(
    q: BoundQuery,
    trials: usize,
    seed: u64,
) -> Result<f64, AnalysisError> {
    q.validate()?;
    if trials == 0 {
        return Err(AnalysisError::OutOfDomain("need trials >= 1".into()));
    }
    if q.u == 1 {
        return Ok(1.0); // E is empty, the norm is 0
    }
    let hits: u64 = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t as u64);
            let entries: Vec<Complex64> = (0..q.b * q.u)
                .map(|_| standard_complex_gaussian(&mut rng))
                .collect();
            let h = ComplexMatrix::from_rows(q.b, q.u, entries).expect("nonzero dims");
            let g = gram_matrix(&h).expect("valid dims");
            let split = diag_split(&g).expect("positive diagonal a.s.");
            let norm = convergence_norm(&split);
            u64::from(norm.powi(q.k as i32) < q.alpha)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    Ok(hits as f64 / trials as f64)
}

/// Which fourth-moment identity to estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MomentKind {
    /// `E[|sum_k x_k y_k|^4] = 2B(B+1)` for i.i.d. unit-variance CSCG draws.
    Lemma1,
    /// `E[g^-4] = 1/((B-1)(B-2)(B-3)(B-4))` with `g = sum_k |x_k|^2`, B > 4.
    Lemma2,
}

/// Monte-Carlo estimate of a fourth-moment identity, paired with its target.
pub fn moment_mc(
    kind: MomentKind,
    b: usize,
    trials: usize,
    seed: u64,
) -> Result<(f64, f64), AnalysisError> {
    let d = moment_mc_detailed(kind, b, trials, seed)?;
    Ok((d.estimate, d.target))
}

/// Estimate plus its Monte-Carlo standard error.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MomentDetail {
    pub estimate: f64,
    pub target: f64,
    pub std_error: f64,
    pub relative_std_error: f64,
}

pub fn moment_mc_detailed(
    kind: MomentKind,
    b: usize,
    trials: usize,
    seed: u64,
) -> Result<MomentDetail, AnalysisError> {
    if trials == 0 {
        return Err(AnalysisError::OutOfDomain("need trials >= 1".into()));
    }
    if b == 0 {
        return Err(AnalysisError::OutOfDomain("need B >= 1".into()));
    }
    let bf = b as f64;
    let target = match kind {
        MomentKind::Lemma1 => 2.0 * bf * (bf + 1.0),
        MomentKind::Lemma2 => {
            if b <= 4 {
                return Err(AnalysisError::OutOfDomain(format!(
                    "lemma 2 requires B > 4, got B = {b}"
                )));
            }
            1.0 / ((bf - 1.0) * (bf - 2.0) * (bf - 3.0) * (bf - 4.0))
        }
    };
    let samples: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t as u64);
            match kind {
                MomentKind::Lemma1 => {
                    let mut s = Complex64::new(0.0, 0.0);
                    for _ in 0..b {
                        s += standard_complex_gaussian(&mut rng)
                            * standard_complex_gaussian(&mut rng);
                    }
                    let n = s.norm_sqr();
                    n * n
                }
                MomentKind::Lemma2 => {
                    let mut g = 0.0;
                    for _ in 0..b {
                        g += standard_complex_gaussian(&mut rng).norm_sqr();
                    }
                    g.powi(-4)
                }
            }
        })
        .collect();
    let estimate = samples.iter().sum::<f64>() / trials as f64;
    let var = samples
        .iter()
        .map(|&s| (s - estimate) * (s - estimate))
        .sum::<f64>()
        / trials as f64;
    let std_error = (var / trials as f64).sqrt();
    Ok(MomentDetail {
        estimate,
        target,
        std_error,
        relative_std_error: if estimate != 0.0 { std_error / estimate.abs() } else { 0.0 },
    })
}

/// Result of one residual-bound evaluation.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ResidualCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

const RESIDUAL_SLACK: f64 = 1e-9;

/// Checks `||(A^-1 - approx_K) y|| <= ||D^-1 E||_F^K * ||A^-1 y||` on one
/// instance.
pub fn residual_bound_check(
    a: &ComplexMatrix,
    y_mf: &[Complex64],
    k: usize,
) -> Result<ResidualCheck, AnalysisError> {
    let split = diag_split(a)?;
    let exact = invert_via_cholesky(a)?;
    let approx = neumann_inverse(&split, k)?;
    let s_exact = exact.matvec(y_mf)?;
    let s_approx = approx.matvec(y_mf)?;
    let lhs = s_exact
        .iter()
        .zip(&s_approx)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let norm_exact = s_exact.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let rhs = convergence_norm(&split).powi(k as i32) * norm_exact;
    Ok(ResidualCheck { lhs, rhs, holds: lhs <= rhs + RESIDUAL_SLACK })
}

fn neumann_inversion_counts(u: u64, k: u64) -> OpCountLedger {
    if k == 1 {
        return OpCountLedger { real_mults: 0, real_adds: 0, real_divs: u };
    }
    let per_iter_mults = 2 * u * u * (u + 1);
    let per_iter_adds = u * (u + 1) * (2 * u - 1) + u;
    OpCountLedger {
        real_mults: 4 * u * (u - 1) + (k - 2) * per_iter_mults,
        real_adds: (k - 2) * per_iter_adds,
        real_divs: u,
    }
}

fn cholesky_inversion_counts(u: u64) -> OpCountLedger {
    if u == 1 {
        return OpCountLedger { real_mults: 0, real_adds: 0, real_divs: 1 };
    }
    // decomposition + forward + backward substitution for all unit columns
    let mults = 2 * u * (u * u - 1) / 3 + u * (u - 1) * (2 * u - 1) / 3
        + 2 * u * (u - 1)
        + 2 * u * u * u;
    let adds = 2 * u * (u - 1) * (2 * u - 1) / 3 + 2 * u * u * (u - 1);
    OpCountLedger { real_mults: mults, real_adds: adds, real_divs: 2 * u }
}

/// Closed-form preprocessing operation count for one subcarrier: Gram-matrix
/// formation, regularization, and inversion. Matches the instrumented
/// counters in `linalg::counted` exactly.
pub fn multiplication_count(method: Method, u: usize, b: usize) -> OpCountLedger {
    let (uu, bb) = (u as u64, b as u64);
    let gram = OpCountLedger {
        real_mults: 2 * bb * uu * (uu + 1),
        real_adds: 2 * bb * uu * (uu + 1) + uu, // + U regularizer additions
        real_divs: 0,
    };
    let inversion = match method {
        Method::MatchedFilter => neumann_inversion_counts(uu, 1),
        Method::Neumann(k) => neumann_inversion_counts(uu, k as u64),
        Method::Cholesky => cholesky_inversion_counts(uu),
    };
    gram + inversion
}

/// Inversion-stage count alone (no Gram/regularization), for crossover plots.
pub fn inversion_stage_count(method: Method, u: usize) -> OpCountLedger {
    match method {
        Method::MatchedFilter => neumann_inversion_counts(u as u64, 1),
        Method::Neumann(k) => neumann_inversion_counts(u as u64, k as u64),
        Method::Cholesky => cholesky_inversion_counts(u as u64),
    }
}

/// Instrumented counterpart of [`multiplication_count`]: runs the actual
/// kernels on a random instance and tallies arithmetic.
pub fn instrumented_count(
    method: Method,
    u: usize,
    b: usize,
    seed: u64,
) -> Result<OpCountLedger, AnalysisError> {
    let mut rng = trial_rng(seed, 0);
    let entries: Vec<Complex64> = (0..b * u)
        .map(|_| standard_complex_gaussian(&mut rng))
        .collect();
    let h = ComplexMatrix::from_rows(b, u, entries)?;
    let mut ledger = OpCountLedger::default();
    let g = gram_matrix_counted(&h, &mut ledger)?;
    let a = regularized_gram_counted(&g, 0.1, &mut ledger)?;
    match method {
        Method::MatchedFilter => {
            neumann_inverse_counted(&diag_split(&a)?, 1, &mut ledger)?;
        }
        Method::Neumann(k) => {
            neumann_inverse_counted(&diag_split(&a)?, k, &mut ledger)?;
        }
        Method::Cholesky => {
            invert_via_cholesky_counted(&a, &mut ledger)?;
        }
    }
    Ok(ledger)
}

/// One point of an error-rate sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRecord {
    pub snr_db: f64,
    pub method: String,
    pub npi: String,
    pub ber: f64,
    pub bit_errors: u64,
    /// Successfully detected trials; `ber = bit_errors / (trials*U*L*log2 M)`.
    pub trials: u64,
    pub seed: u64,
    /// Trials whose detection failed numerically (excluded from `trials`).
    pub failures: u64,
}

/// Uncoded-BER sweep over an SNR grid. Trials parallelize over a deterministic
/// substream per (grid point, trial); identical seeds draw identical frames
/// regardless of the detector, so methods compare on the same realizations.
pub fn ber_sweep(
    sim: &SimConfig,
    det: &DetectorConfig,
    snr_grid: &[f64],
) -> Result<Vec<SweepRecord>, AnalysisError> {
    ber_sweep_with(sim, det, snr_grid, None)
}

/// [`ber_sweep`] with an optional fixed-point pipeline; when `fxp` is given,
/// detection runs through the quantized data path.
pub fn ber_sweep_with(
    sim: &SimConfig,
    det: &DetectorConfig,
    snr_grid: &[f64],
    fxp: Option<&FxpPipelineConfig>,
) -> Result<Vec<SweepRecord>, AnalysisError> {
    sim.validate()?;
    det.validate()?;
    let bits_per_trial =
        (sim.u * sim.l * sim.modulation.bits_per_symbol()) as u64;

    let mut records = Vec::with_capacity(snr_grid.len());
    for (gi, &snr_db) in snr_grid.iter().enumerate() {
        let point_sim = SimConfig { snr_db, ..sim.clone() };
        let per_trial: Vec<Option<u64>> = (0..sim.trials)
            .into_par_iter()
            .map(|t| {
                let sub = (gi * sim.trials + t) as u64;
                let mut rng = trial_rng(sim.seed, sub);
                let frame = generate_frame(&point_sim, &mut rng);
                let out = match fxp {
                    None => detect_frame(det, &frame).ok()?.0,
                    Some(cfg) => fxp_detect_frame(cfg, det, &frame).ok()?.0,
                };
                let errs = out
                    .hard_bits
                    .iter()
                    .zip(&frame.bits)
                    .map(|(got, want)| {
                        got.iter().zip(want).filter(|(a, b)| a != b).count() as u64
                    })
                    .sum();
                Some(errs)
            })
            .collect();

        let mut bit_errors = 0u64;
        let mut ok = 0u64;
        let mut failures = 0u64;
        for r in per_trial {
            match r {
                Some(e) => {
                    bit_errors += e;
                    ok += 1;
                }
                None => failures += 1,
            }
        }
        let denom = ok * bits_per_trial;
        records.push(SweepRecord {
            snr_db,
            method: det.method.label(),
            npi: det.npi_mode.label().to_string(),
            ber: if denom > 0 { bit_errors as f64 / denom as f64 } else { 0.0 },
            bit_errors,
            trials: ok,
            seed: sim.seed,
            failures,
        });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::NpiMode;
    use crate::txchain::Modulation;
    use approx::assert_abs_diff_eq;

    #[test]
    fn theorem1_bound_examples() {
        let q = |u, b, k, alpha| BoundQuery { u, b, k, alpha };
        assert_abs_diff_eq!(theorem1_bound(q(1, 100, 1, 1.0)).unwrap(), 1.0);
        assert_abs_diff_eq!(
            theorem1_bound(q(8, 128, 1, 1.0)).unwrap(),
            0.3538,
            epsilon = 5e-5
        );
        assert_abs_diff_eq!(
            theorem1_bound(q(4, 64, 1, 1.0)).unwrap(),
            0.7105,
            epsilon = 5e-5
        );
        assert!(matches!(
            theorem1_bound(q(4, 4, 1, 1.0)),
            Err(AnalysisError::OutOfDomain(_))
        ));
        // vacuous bounds stay negative, not clamped
        assert!(theorem1_bound(q(32, 8, 1, 1.0)).unwrap() < 0.0);
    }

    #[test]
    fn empirical_prob_trivial_and_markov() {
        let q = BoundQuery { u: 1, b: 16, k: 1, alpha: 0.5 };
        assert_eq!(empirical_norm_prob(q, 10, 1).unwrap(), 1.0);

        let q = BoundQuery { u: 8, b: 128, k: 1, alpha: 1.0 };
        let p = empirical_norm_prob(q, 2000, 7).unwrap();
        let bound = theorem1_bound(q).unwrap();
        let sigma = (p * (1.0 - p) / 2000.0).sqrt();
        assert!(p >= bound - 3.0 * sigma, "p={p} bound={bound}");
    }

    #[test]
    fn moment_targets() {
        assert_eq!(moment_mc(MomentKind::Lemma1, 1, 1, 0).unwrap().1, 4.0);
        assert_eq!(moment_mc(MomentKind::Lemma1, 128, 1, 0).unwrap().1, 33024.0);
        assert_abs_diff_eq!(
            moment_mc(MomentKind::Lemma2, 5, 1, 0).unwrap().1,
            1.0 / 24.0
        );
        assert!(moment_mc(MomentKind::Lemma2, 4, 1, 0).is_err());
    }

    #[test]
    fn residual_bound_hand_example() {
        let a = ComplexMatrix::from_real(2, 2, &[2.0, 1.0, 1.0, 2.0]).unwrap();
        let y = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        let r = residual_bound_check(&a, &y, 2).unwrap();
        let want_lhs = ((1.0 / 6.0f64).powi(2) + (1.0 / 12.0f64).powi(2)).sqrt();
        let want_rhs = 0.5 * ((2.0 / 3.0f64).powi(2) + (1.0 / 3.0f64).powi(2)).sqrt();
        assert_abs_diff_eq!(r.lhs, want_lhs, epsilon = 1e-12);
        assert_abs_diff_eq!(r.rhs, want_rhs, epsilon = 1e-12);
        assert!(r.holds);

        // diagonal A: zero residual at every K
        let a = ComplexMatrix::diag(&[3.0, 5.0]);
        for k in 1..=4 {
            let r = residual_bound_check(&a, &y, k).unwrap();
            assert!(r.lhs < 1e-14);
            assert!(r.holds);
        }
    }

    #[test]
    fn closed_forms_match_instrumented() {
        for &u in &[2usize, 4, 8, 16] {
            for &b in &[16usize, 64, 128] {
                for k in 1..=4 {
                    let method = Method::Neumann(k);
                    let closed = multiplication_count(method, u, b);
                    let measured = instrumented_count(method, u, b, 99).unwrap();
                    assert_eq!(closed, measured, "neumann K={k} U={u} B={b}");
                }
                let closed = multiplication_count(Method::Cholesky, u, b);
                let measured = instrumented_count(Method::Cholesky, u, b, 99).unwrap();
                assert_eq!(closed, measured, "cholesky U={u} B={b}");
            }
        }
    }

    #[test]
    fn inversion_stage_crossover() {
        for &u in &[4usize, 8, 16] {
            let mf = inversion_stage_count(Method::MatchedFilter, u).real_mults;
            let n2 = inversion_stage_count(Method::Neumann(2), u).real_mults;
            let n3 = inversion_stage_count(Method::Neumann(3), u).real_mults;
            let chol = inversion_stage_count(Method::Cholesky, u).real_mults;
            assert!(mf < n2 && n2 < n3 && n3 < chol, "U={u}");
        }
        let n4 = inversion_stage_count(Method::Neumann(4), 16).real_mults;
        let chol = inversion_stage_count(Method::Cholesky, 16).real_mults;
        assert!(n4 > chol);
    }

    #[test]
    fn neumann_quadratic_cholesky_cubic_scaling() {
        let r2 = inversion_stage_count(Method::Neumann(2), 64).real_mults as f64
            / inversion_stage_count(Method::Neumann(2), 32).real_mults as f64;
        assert!((r2 - 4.0).abs() < 0.2);
        let r3 = inversion_stage_count(Method::Cholesky, 64).real_mults as f64
            / inversion_stage_count(Method::Cholesky, 32).real_mults as f64;
        assert!((r3 - 8.0).abs() < 0.5);
    }

    #[test]
    fn sweep_is_deterministic_and_monotone() {
        let sim = SimConfig {
            b: 16,
            u: 2,
            l: 4,
            modulation: Modulation::Qpsk,
            es: 1.0,
            snr_db: 0.0,
            seed: 33,
            trials: 40,
        };
        let det = DetectorConfig {
            method: Method::Cholesky,
            npi_mode: NpiMode::ExactMmse,
            modulation: sim.modulation,
        };
        let grid = [0.0, 10.0, 20.0];
        let a = ber_sweep(&sim, &det, &grid).unwrap();
        let b = ber_sweep(&sim, &det, &grid).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.bit_errors, y.bit_errors);
            assert_eq!(x.ber, y.ber);
        }
        assert!(a[0].ber > a[2].ber, "{} vs {}", a[0].ber, a[2].ber);
        assert!(a.iter().all(|r| r.failures == 0));
    }
}
