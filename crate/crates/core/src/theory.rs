//! Closed-form side of the toolkit: the semicircle Stieltjes transform w(z)
//! and its boundary values, the semicircle density/CDF, the covariance
//! leading terms S and T, cumulant ledgers, the q-factor, the leading-order
//! observable predictions, and the density-density correlation with its
//! universal scaling limit.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

use crate::ensemble::EntryLaw;

#[derive(Debug, Error)]
pub enum TheoryError {
    #[error("spectral argument must be off the real axis (z = {0})")]
    RealArgument(Complex64),
    #[error("lambda = {0} outside the open support (-2v, 2v)")]
    OutsideSupport(f64),
    #[error("coincident arguments: {0}")]
    Singularity(String),
    #[error("inconsistent moments: mu4 = {mu4} < mu2^2 = {mu2_sq}")]
    MomentInconsistency { mu4: f64, mu2_sq: f64 },
    #[error("s = 0 has no scaling limit")]
    ZeroSeparation,
}

/// Moment/size parameters entering the covariance and universality formulas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryParams {
    pub v2: f64,
    pub v4: f64,
    pub v6: f64,
    pub n: usize,
    pub p: f64,
}

impl TheoryParams {
    pub fn from_law(law: &EntryLaw, n: usize, p: f64) -> Self {
        TheoryParams { v2: law.v2, v4: law.v4(), v6: law.v6(), n, p }
    }

    pub fn validate(&self) -> Result<(), TheoryError> {
        if self.v4 < self.v2 * self.v2 {
            return Err(TheoryError::MomentInconsistency { mu4: self.v4, mu2_sq: self.v2 * self.v2 });
        }
        Ok(())
    }
}

/// Stieltjes transform of the semicircle law: the solution of
/// w = 1/(-z - v^2 w) with the Herglotz branch Im w * Im z > 0.
pub fn stieltjes_w(z: Complex64, v2: f64) -> Result<Complex64, TheoryError> {
    if z.im == 0.0 {
        return Err(TheoryError::RealArgument(z));
    }
    let disc = (z * z - 4.0 * v2).sqrt();
    // The two quadratic roots; exactly one satisfies Im w * Im z > 0.
    let w1 = (-z + disc) / (2.0 * v2);
    let w2 = (-z - disc) / (2.0 * v2);
    Ok(if w1.im * z.im > 0.0 { w1 } else { w2 })
}

/// Boundary value w(lambda + i0) on the support, with Im w >= 0.
pub fn stieltjes_w_boundary(lambda: f64, v2: f64) -> Result<Complex64, TheoryError> {
    let v = v2.sqrt();
    if lambda.abs() >= 2.0 * v {
        return Err(TheoryError::OutsideSupport(lambda));
    }
    Ok(Complex64::new(-lambda / (2.0 * v2), (4.0 * v2 - lambda * lambda).sqrt() / (2.0 * v2)))
}

/// Residual |w + 1/(z + v^2 w)| of the defining fixed-point equation.
pub fn fixed_point_residual(z: Complex64, w: Complex64, v2: f64) -> f64 {
    (w + 1.0 / (z + v2 * w)).norm()
}

/// Semicircle density (2 pi v^2)^{-1} sqrt(4v^2 - lambda^2) on |lambda| <= 2v.
pub fn semicircle_density(lambda: f64, v2: f64) -> f64 {
    let rad = 4.0 * v2 - lambda * lambda;
    if rad <= 0.0 {
        0.0
    } else {
        rad.sqrt() / (2.0 * PI * v2)
    }
}

/// Semicircle CDF, the closed-form antiderivative of the density.
pub fn semicircle_cdf(lambda: f64, v2: f64) -> f64 {
    let v = v2.sqrt();
    if lambda <= -2.0 * v {
        return 0.0;
    }
    if lambda >= 2.0 * v {
        return 1.0;
    }
    0.5 + lambda * (4.0 * v2 - lambda * lambda).sqrt() / (4.0 * PI * v2) + (lambda / (2.0 * v)).asin() / PI
}

/// S(z1, z2): the difference-quotient leading term of the covariance.
pub fn s_leading(z1: Complex64, z2: Complex64, v2: f64) -> Result<Complex64, TheoryError> {
    if z1 == z2 {
        return Err(TheoryError::Singularity("use s_diagonal for z1 = z2".into()));
    }
    let w1 = stieltjes_w(z1, v2)?;
    let w2 = stieltjes_w(z2, v2)?;
    let dq = (w1 - w2) / (z1 - z2);
    Ok(dq * dq / ((1.0 - v2 * w1 * w1) * (1.0 - v2 * w2 * w2)))
}

/// Coincident-point limit of S, using w'(z) = w^2/(1 - v^2 w^2).
pub fn s_diagonal(z: Complex64, v2: f64) -> Result<Complex64, TheoryError> {
    let w = stieltjes_w(z, v2)?;
    let denom = 1.0 - v2 * w * w;
    let wp = w * w / denom;
    Ok(wp * wp / (denom * denom))
}

/// T(z1, z2) = w1^3 w2^3 / ((1 - v^2 w1^2)(1 - v^2 w2^2)).
pub fn t_leading(z1: Complex64, z2: Complex64, v2: f64) -> Result<Complex64, TheoryError> {
    let w1 = stieltjes_w(z1, v2)?;
    let w2 = stieltjes_w(z2, v2)?;
    Ok(w1.powu(3) * w2.powu(3) / ((1.0 - v2 * w1 * w1) * (1.0 - v2 * w2 * w2)))
}

/// Leading term of the resolvent covariance:
/// (2v^2/n^2) S + (2V4/np - 6v^4/n^2) T.
pub fn c_leading(params: &TheoryParams, z1: Complex64, z2: Complex64) -> Result<Complex64, TheoryError> {
    params.validate()?;
    let s = if z1 == z2 { s_diagonal(z1, params.v2)? } else { s_leading(z1, z2, params.v2)? };
    let t = t_leading(z1, z2, params.v2)?;
    let n = params.n as f64;
    let v2 = params.v2;
    Ok(2.0 * v2 / (n * n) * s + (2.0 * params.v4 / (n * params.p) - 6.0 * v2 * v2 / (n * n)) * t)
}

/// (K2, K4, K6) from the even moments of a symmetric law.
pub fn cumulants_from_moments(mu2: f64, mu4: f64, mu6: f64) -> Result<(f64, f64, f64), TheoryError> {
    if mu4 < mu2 * mu2 {
        return Err(TheoryError::MomentInconsistency { mu4, mu2_sq: mu2 * mu2 });
    }
    Ok((mu2, mu4 - 3.0 * mu2 * mu2, mu6 - 15.0 * mu4 * mu2 + 30.0 * mu2 * mu2 * mu2))
}

/// Cumulants of a matrix entry H(i,j):
/// K2 = (v^2/n)(1+d), K4 = (Delta/np)(1+d)^2, K6 = (sigma/np^2)(1+d)^3
/// with Delta = V4 - 3v^4 p/n and sigma = V6 - 15 V4 v^2 p/n + 30 v^6 p^2/n^2.
pub fn entry_cumulants(params: &TheoryParams, diagonal: bool) -> (f64, f64, f64) {
    let n = params.n as f64;
    let p = params.p;
    let d = if diagonal { 1.0 } else { 0.0 };
    let v2 = params.v2;
    let delta = params.v4 - 3.0 * v2 * v2 * p / n;
    let sigma = params.v6 - 15.0 * params.v4 * v2 * p / n + 30.0 * v2.powi(3) * (p / n).powi(2);
    (
        v2 / n * (1.0 + d),
        delta / (n * p) * (1.0 + d).powi(2),
        sigma / (n * p * p) * (1.0 + d).powi(3),
    )
}

/// Limit of the q-factor: w/(1 - v^2 w^2).
pub fn q_limit(z: Complex64, v2: f64) -> Result<Complex64, TheoryError> {
    let w = stieltjes_w(z, v2)?;
    Ok(w / (1.0 - v2 * w * w))
}

/// Finite-n q-factor xi/(1 - 2 xi v^2 Eg) with xi = -1/z, for a measured Eg.
pub fn q_finite(z: Complex64, v2: f64, e_g: Complex64) -> Result<Complex64, TheoryError> {
    if z.im == 0.0 {
        return Err(TheoryError::RealArgument(z));
    }
    let xi = -1.0 / z;
    Ok(xi / (1.0 - 2.0 * xi * v2 * e_g))
}

// Leading-order predictions. The O(1/p) corrections are deliberately
// excluded; tolerance policy lives with the callers.

/// E g = w(z) + O(1/p).
pub fn predict_e_g(z: Complex64, v2: f64) -> Result<Complex64, TheoryError> {
    stieltjes_w(z, v2)
}

/// E (1/n) Tr G^2 = w^2/(1 - v^2 w^2) + O(1/p).
pub fn predict_e_tr_g2(z: Complex64, v2: f64) -> Result<Complex64, TheoryError> {
    let w = stieltjes_w(z, v2)?;
    Ok(w * w / (1.0 - v2 * w * w))
}

/// E B12 = w1 w2 + O(1/p).
pub fn predict_b12(z1: Complex64, z2: Complex64, v2: f64) -> Result<Complex64, TheoryError> {
    Ok(stieltjes_w(z1, v2)? * stieltjes_w(z2, v2)?)
}

/// E U12 = w1^2 w2 / (1 - v^2 w1^2) + O(1/p).
pub fn predict_u12(z1: Complex64, z2: Complex64, v2: f64) -> Result<Complex64, TheoryError> {
    let w1 = stieltjes_w(z1, v2)?;
    let w2 = stieltjes_w(z2, v2)?;
    Ok(w1 * w1 * w2 / (1.0 - v2 * w1 * w1))
}

/// E L = w1^3 w2^2 / (1 - v^2 w1^2) + O(1/p).
pub fn predict_l(z1: Complex64, z2: Complex64, v2: f64) -> Result<Complex64, TheoryError> {
    let w1 = stieltjes_w(z1, v2)?;
    let w2 = stieltjes_w(z2, v2)?;
    Ok(w1.powu(3) * w2 * w2 / (1.0 - v2 * w1 * w1))
}

/// Leading term of the density-density correlation at distinct bulk points:
/// a -1/(n(l1-l2))^2 difference term plus the V4/np and 3v^4/n^2 smooth terms.
pub fn density_density_leading(lambda1: f64, lambda2: f64, params: &TheoryParams) -> Result<f64, TheoryError> {
    let v2 = params.v2;
    let v = v2.sqrt();
    for l in [lambda1, lambda2] {
        if l.abs() >= 2.0 * v {
            return Err(TheoryError::OutsideSupport(l));
        }
    }
    if lambda1 == lambda2 {
        return Err(TheoryError::Singularity("lambda1 = lambda2".into()));
    }
    let n = params.n as f64;
    let r1 = (4.0 * v2 - lambda1 * lambda1).sqrt();
    let r2 = (4.0 * v2 - lambda2 * lambda2).sqrt();
    let smooth = (2.0 * v2 - lambda1 * lambda1) * (2.0 * v2 - lambda2 * lambda2) / (r1 * r2);
    let v8 = v2.powi(4);
    let term1 = -(4.0 * v2 - lambda1 * lambda2) / (PI * PI * (n * (lambda1 - lambda2)).powi(2) * r1 * r2);
    let term2 = params.v4 / (n * params.p) / (2.0 * PI * PI * v8) * smooth;
    let term3 = -3.0 * v2 * v2 / (n * n) / (2.0 * PI * PI * v8) * smooth;
    Ok(term1 + term2 + term3)
}

/// Universal local limit -1/(pi^2 s^2) of the density-density correlation.
pub fn universality_limit(s: f64) -> Result<f64, TheoryError> {
    if s == 0.0 {
        return Err(TheoryError::ZeroSeparation);
    }
    Ok(-1.0 / (PI * PI * s * s))
}

/// Residuals of the edge relations on the open support:
/// |v^2 (Re w)^2 - lambda^2/4v^2| and |v^2 (Im w)^2 - (1 - lambda^2/4v^2)|.
pub fn edge_relations_check(lambda: f64, v2: f64) -> Result<(f64, f64), TheoryError> {
    let w = stieltjes_w_boundary(lambda, v2)?;
    let re = (v2 * w.re * w.re - lambda * lambda / (4.0 * v2)).abs();
    let im = (v2 * w.im * w.im - (1.0 - lambda * lambda / (4.0 * v2))).abs();
    Ok((re, im))
}
