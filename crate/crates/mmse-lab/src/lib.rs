//! Soft-output linear MMSE detection for large-scale MIMO SC-FDMA uplinks.
//!
//! The crate implements the full receive pipeline — per-subcarrier Gram
//! matrix, regularized MMSE filter, Neumann-series or Cholesky matrix
//! inversion, effective-gain/NPI/SINR statistics, despreading, and max-log
//! LLRs — together with the series' convergence analysis, operation-count
//! instrumentation, a fixed-point model of the data path, and a Monte-Carlo
//! sweep driver exposed through the `mmse-lab` binary.
//!
//! Entry points:
//! - [`txchain`]: constellation mapping, DFT spreading, channel/noise draws.
//! - [`linalg`]: the matrix kernels, with instrumented counterparts in
//!   [`linalg::counted`].
//! - [`detector`]: frame detection ([`detector::detect_frame`]).
//! - [`analysis`]: convergence bound, moment lemmata, residual bound,
//!   closed-form operation counts, BER sweeps.
//! - [`fxp`]: the quantized pipeline ([`fxp::fxp_detect_frame`]).
//! - [`cli`]: the command-line front end ([`cli::run_with_args`]).

pub mod analysis;
pub mod cli;
pub mod detector;
pub mod fxp;
pub mod linalg;
pub mod txchain;
