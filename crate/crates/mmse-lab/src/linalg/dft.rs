//! Unitary DFT used for SC-FDMA spreading/despreading, normalized so that
//! `F^H F = I` and round trips are exact to working precision.
//!
//! Small sizes go through a direct O(L^2) evaluation; larger sizes through a
//! recursive mixed-radix decimation (radices 2, 3, 5 cover the LTE size
//! 1200 = 2^4 * 3 * 5^2). Any leftover prime factor falls back to the direct
//! kernel for that sub-length.

use std::f64::consts::PI;

use num_complex::Complex64;

/// Transform direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Applies `F_L` (time -> frequency).
    Forward,
    /// Applies `F_L^H` (frequency -> time).
    Inverse,
}

const DIRECT_THRESHOLD: usize = 64;

/// Applies the unitary DFT (or its adjoint) to `v`.
pub fn unitary_transform(v: &[Complex64], direction: Direction) -> Vec<Complex64> {
    let n = v.len();
    assert!(n >= 1, "transform length must be at least 1");
    let sign = match direction {
        Direction::Forward => -1.0,
        Direction::Inverse => 1.0,
    };
    let mut out = if n <= DIRECT_THRESHOLD {
        direct_dft(v, sign)
    } else {
        fft_recursive(v, sign)
    };
    let scale = 1.0 / (n as f64).sqrt();
    for z in out.iter_mut() {
        *z *= scale;
    }
    out
}

/// Unnormalized direct DFT, exposed for cross-checking the fast path.
pub fn direct_transform(v: &[Complex64], direction: Direction) -> Vec<Complex64> {
    let sign = match direction {
        Direction::Forward => -1.0,
        Direction::Inverse => 1.0,
    };
    let mut out = direct_dft(v, sign);
    let scale = 1.0 / (v.len() as f64).sqrt();
    for z in out.iter_mut() {
        *z *= scale;
    }
    out
}

fn direct_dft(v: &[Complex64], sign: f64) -> Vec<Complex64> {
    let n = v.len();
    let step = sign * 2.0 * PI / n as f64;
    (0..n)
        .map(|k| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (t, &x) in v.iter().enumerate() {
                let phase = step * ((k * t) % n) as f64;
                acc += x * Complex64::new(phase.cos(), phase.sin());
            }
            acc
        })
        .collect()
}

fn smallest_radix(n: usize) -> Option<usize> {
    [2, 3, 5].into_iter().find(|p| n % p == 0)
}

fn fft_recursive(v: &[Complex64], sign: f64) -> Vec<Complex64> {
    let n = v.len();
    if n <= DIRECT_THRESHOLD {
        return direct_dft(v, sign);
    }
    let Some(p) = smallest_radix(n) else {
        return direct_dft(v, sign);
    };
    let m = n / p;

    // decimate in time: sub[r][t] = v[t*p + r]
    let subs: Vec<Vec<Complex64>> = (0..p)
        .map(|r| (0..m).map(|t| v[t * p + r]).collect::<Vec<_>>())
        .map(|sub| fft_recursive(&sub, sign))
        .collect();

    let step = sign * 2.0 * PI / n as f64;
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for q in 0..p {
        for k in 0..m {
            let idx = q * m + k;
            let mut acc = Complex64::new(0.0, 0.0);
            for (r, sub) in subs.iter().enumerate() {
                let phase = step * ((idx * r) % n) as f64;
                acc += sub[k] * Complex64::new(phase.cos(), phase.sin());
            }
            out[idx] = acc;
        }
    }
    out
}
