//! Resolvent observables computed from an eigendecomposition: the normalized
//! trace g(z), (1/n) Tr G^2, diagonal resolvent entries, and the composite
//! observables B12, U12 and L.
//!
//! Everything is a pure function of a `SpectralSample` and one or two
//! spectral points, so observables at many z reuse one O(n^3) eigensolve.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eig::SpectralSample;

#[derive(Debug, Error)]
pub enum ResolventError {
    #[error("resolvent requires Im z != 0 (z = {0})")]
    RealArgument(Complex64),
    #[error("operation requires eigenvectors; decompose with want_vectors")]
    MissingVectors,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
}

/// Spectral argument z with the derived xi = -1/z and a flag for membership
/// in the proved domain |Im z| >= 2v + 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralPoint {
    pub z: Complex64,
    pub xi: Complex64,
    pub in_lambda_v: bool,
}

impl SpectralPoint {
    /// Points with |Im z| < 2v + 1 are allowed (the leading terms continue up
    /// to the real axis); callers may warn via `in_lambda_v`.
    pub fn new(z: Complex64, v: f64) -> Result<Self, ResolventError> {
        if z.im == 0.0 {
            return Err(ResolventError::RealArgument(z));
        }
        Ok(SpectralPoint { z, xi: -1.0 / z, in_lambda_v: z.im.abs() >= 2.0 * v + 1.0 })
    }
}

/// g(z) = (1/n) sum_j (lambda_j - z)^{-1}, the Stieltjes transform of the
/// empirical spectral distribution.
pub fn trace_resolvent(s: &SpectralSample, point: &SpectralPoint) -> Complex64 {
    let n = s.eigenvalues.len() as f64;
    let z = point.z;
    let mut acc = Complex64::new(0.0, 0.0);
    for &lam in &s.eigenvalues {
        acc += 1.0 / Complex64::new(lam - z.re, -z.im);
    }
    acc / n
}

/// (1/n) Tr G^2 = (1/n) sum_j (lambda_j - z)^{-2}; equals the z-derivative
/// of `trace_resolvent` and, by symmetry, (1/n) sum_{ij} G(i,j)^2.
pub fn trace_resolvent_sq(s: &SpectralSample, point: &SpectralPoint) -> Complex64 {
    let n = s.eigenvalues.len() as f64;
    let z = point.z;
    let mut acc = Complex64::new(0.0, 0.0);
    for &lam in &s.eigenvalues {
        let d = Complex64::new(lam - z.re, -z.im);
        acc += 1.0 / (d * d);
    }
    acc / n
}

/// Diagonal entries G(i,i) = sum_k u_k(i)^2 / (lambda_k - z).
pub fn diag_resolvent(s: &SpectralSample, point: &SpectralPoint) -> Result<Vec<Complex64>, ResolventError> {
    diag_weighted(s, point, false)
}

/// Diagonal entries of G^2: (G^2)(i,i) = sum_k u_k(i)^2 / (lambda_k - z)^2.
pub fn diag_resolvent_sq(s: &SpectralSample, point: &SpectralPoint) -> Result<Vec<Complex64>, ResolventError> {
    diag_weighted(s, point, true)
}

fn diag_weighted(s: &SpectralSample, point: &SpectralPoint, squared: bool) -> Result<Vec<Complex64>, ResolventError> {
    let vectors = s.vectors.as_ref().ok_or(ResolventError::MissingVectors)?;
    let n = s.eigenvalues.len();
    let z = point.z;
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for (k, &lam) in s.eigenvalues.iter().enumerate() {
        let d = Complex64::new(lam - z.re, -z.im);
        let w = if squared { 1.0 / (d * d) } else { 1.0 / d };
        let col = &vectors[k * n..(k + 1) * n];
        for i in 0..n {
            out[i] += col[i] * col[i] * w;
        }
    }
    Ok(out)
}

/// B12 = (1/n) sum_j G1(j,j) G2(j,j).
pub fn observable_b12(d1: &[Complex64], d2: &[Complex64]) -> Result<Complex64, ResolventError> {
    if d1.len() != d2.len() {
        return Err(ResolventError::LengthMismatch(d1.len(), d2.len()));
    }
    let n = d1.len() as f64;
    Ok(d1.iter().zip(d2).map(|(a, b)| a * b).sum::<Complex64>() / n)
}

/// U12 = (1/n) sum_i (G1^2)(i,i) G2(i,i).
pub fn observable_u12(dsq1: &[Complex64], d2: &[Complex64]) -> Result<Complex64, ResolventError> {
    observable_b12(dsq1, d2)
}

/// L = (1/n^2) sum_{ij} (G1^2)(i,i) G1(j,j) G2(i,i) G2(j,j). The (i,j)
/// summand is a product of an i-factor and a j-factor, so the double sum
/// factorizes exactly into U12 * B12.
pub fn observable_l(dsq1: &[Complex64], d1: &[Complex64], d2: &[Complex64]) -> Result<Complex64, ResolventError> {
    Ok(observable_u12(dsq1, d2)? * observable_b12(d1, d2)?)
}
