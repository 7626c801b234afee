//! Numerical verification of the two core technical tools: the cumulant
//! expansion E{X F(X)} = sum_r K_{r+1}/r! E{F^(r)(X)} + remainder on scalar
//! laws, and the resolvent identities on small matrices.
//!
//! Expectations use exact summation for discrete laws and 64-node
//! Gauss-Hermite quadrature for Gaussian laws. Matrix checks use a local
//! complex Gauss-Jordan inverse so they stay independent of the eigensolver.

use num_complex::Complex64;
use thiserror::Error;

use crate::ensemble::SymmetricMatrix;

#[derive(Debug, Error)]
pub enum IdentityError {
    #[error("law must have finite moments up to order {0}")]
    InsufficientMoments(usize),
    #[error("resolvent check requires Im z != 0")]
    RealArgument,
}

/// Scalar probability law with a moment accessor up to order 14.
#[derive(Debug, Clone)]
pub enum ScalarLaw {
    /// Atoms (value, probability); must be normalized.
    Discrete(Vec<(f64, f64)>),
    Gaussian { variance: f64 },
}

impl ScalarLaw {
    pub fn rademacher() -> Self {
        ScalarLaw::Discrete(vec![(1.0, 0.5), (-1.0, 0.5)])
    }

    pub fn moment(&self, r: usize) -> f64 {
        assert!(r <= 14);
        match self {
            ScalarLaw::Discrete(atoms) => atoms.iter().map(|(x, p)| p * x.powi(r as i32)).sum(),
            ScalarLaw::Gaussian { variance } => {
                if r % 2 == 1 {
                    0.0
                } else {
                    let mut acc = 1.0;
                    let mut k = r as i64 - 1;
                    while k > 1 {
                        acc *= k as f64;
                        k -= 2;
                    }
                    acc * variance.powi(r as i32 / 2)
                }
            }
        }
    }

    /// Cumulants K_1..K_6 from the moment ledger (general, via the standard
    /// moments-to-cumulants relations).
    pub fn cumulants(&self) -> [f64; 6] {
        let m: Vec<f64> = (1..=6).map(|r| self.moment(r)).collect();
        let k1 = m[0];
        let k2 = m[1] - m[0] * m[0];
        let k3 = m[2] - 3.0 * m[1] * m[0] + 2.0 * m[0].powi(3);
        let k4 = m[3] - 4.0 * m[2] * m[0] - 3.0 * m[1] * m[1] + 12.0 * m[1] * m[0] * m[0] - 6.0 * m[0].powi(4);
        let k5 = m[4] - 5.0 * m[3] * m[0] - 10.0 * m[2] * m[1] + 20.0 * m[2] * m[0] * m[0]
            + 30.0 * m[1] * m[1] * m[0]
            - 60.0 * m[1] * m[0].powi(3)
            + 24.0 * m[0].powi(5);
        let k6 = m[5] - 6.0 * m[4] * m[0] - 15.0 * m[3] * m[1] + 30.0 * m[3] * m[0] * m[0] - 10.0 * m[2] * m[2]
            + 120.0 * m[2] * m[1] * m[0]
            - 120.0 * m[2] * m[0].powi(3)
            + 30.0 * m[1].powi(3)
            - 270.0 * m[1] * m[1] * m[0] * m[0]
            + 360.0 * m[1] * m[0].powi(4)
            - 120.0 * m[0].powi(6);
        [k1, k2, k3, k4, k5, k6]
    }

    /// E f(X): exact summation (discrete) or 64-node Gauss-Hermite (Gaussian).
    pub fn expectation<F: Fn(f64) -> Complex64>(&self, f: F) -> Complex64 {
        match self {
            ScalarLaw::Discrete(atoms) => atoms.iter().map(|(x, p)| *p * f(*x)).sum(),
            ScalarLaw::Gaussian { variance } => {
                let (nodes, weights) = gauss_hermite_64();
                let scale = (2.0 * variance).sqrt();
                let norm = 1.0 / std::f64::consts::PI.sqrt();
                nodes
                    .iter()
                    .zip(weights.iter())
                    .map(|(x, w)| *w * norm * f(scale * x))
                    .sum()
            }
        }
    }
}

/// Smooth test function with evaluable derivatives; order 0 is the value.
pub trait SmoothFn {
    fn derivative(&self, order: usize, x: f64) -> Complex64;
}

/// F(x) = x^k.
pub struct Monomial(pub u32);

impl SmoothFn for Monomial {
    fn derivative(&self, order: usize, x: f64) -> Complex64 {
        let k = self.0 as usize;
        if order > k {
            return Complex64::new(0.0, 0.0);
        }
        let coeff: f64 = (k - order + 1..=k).map(|j| j as f64).product();
        Complex64::new(coeff * x.powi((k - order) as i32), 0.0)
    }
}

/// F(x) = 1/(x - z): F^(r)(x) = (-1)^r r! (x - z)^{-(r+1)}.
pub struct ResolventKernel(pub Complex64);

impl SmoothFn for ResolventKernel {
    fn derivative(&self, order: usize, x: f64) -> Complex64 {
        let base = Complex64::new(x, 0.0) - self.0;
        let sign = if order % 2 == 0 { 1.0 } else { -1.0 };
        let fact: f64 = (1..=order).map(|j| j as f64).product();
        sign * fact / base.powu(order as u32 + 1)
    }
}

/// |E{X F(X)} - sum_{r=0}^{q} K_{r+1}/r! E{F^(r)(X)}|.
pub fn cumulant_expansion_residual(law: &ScalarLaw, f: &dyn SmoothFn, q: usize) -> Result<f64, IdentityError> {
    if q + 2 > 14 {
        return Err(IdentityError::InsufficientMoments(q + 2));
    }
    let lhs = law.expectation(|x| x * f.derivative(0, x));
    let cumulants = law.cumulants();
    let mut rhs = Complex64::new(0.0, 0.0);
    let mut r_fact = 1.0;
    for r in 0..=q {
        if r > 0 {
            r_fact *= r as f64;
        }
        let k = cumulants[r]; // K_{r+1}
        if k != 0.0 {
            rhs += k / r_fact * law.expectation(|x| f.derivative(r, x));
        }
    }
    Ok((lhs - rhs).norm())
}

// --- small complex matrix helpers -----------------------------------------

/// Dense complex matrix, row-major.
#[derive(Debug, Clone)]
pub struct CMatrix {
    pub n: usize,
    pub data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        CMatrix { n, data: vec![Complex64::new(0.0, 0.0); n * n] }
    }

    pub fn from_symmetric_shifted(h: &SymmetricMatrix, z: Complex64) -> Self {
        let n = h.n();
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = Complex64::new(h.get(i, j), 0.0);
            }
            m.data[i * n + i] -= z;
        }
        m
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    pub fn mul(&self, other: &CMatrix) -> CMatrix {
        let n = self.n;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn sub(&self, other: &CMatrix) -> CMatrix {
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(other.data.iter()) {
            *a -= b;
        }
        out
    }

    pub fn scale(&self, c: Complex64) -> CMatrix {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|a| *a *= c);
        out
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Gauss-Jordan inverse with partial pivoting. Intended for the small
    /// matrices of the identity checks.
    pub fn inverse(&self) -> CMatrix {
        let n = self.n;
        let mut a = self.clone();
        let mut inv = CMatrix::identity(n);
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| a.at(i, col).norm().partial_cmp(&a.at(j, col).norm()).unwrap())
                .unwrap();
            if pivot != col {
                for j in 0..n {
                    a.data.swap(col * n + j, pivot * n + j);
                    inv.data.swap(col * n + j, pivot * n + j);
                }
            }
            let p = a.at(col, col);
            for j in 0..n {
                a.data[col * n + j] /= p;
                inv.data[col * n + j] /= p;
            }
            for i in 0..n {
                if i == col {
                    continue;
                }
                let f = a.at(i, col);
                if f.norm() == 0.0 {
                    continue;
                }
                for j in 0..n {
                    let ac = a.at(col, j);
                    let ic = inv.at(col, j);
                    a.data[i * n + j] -= f * ac;
                    inv.data[i * n + j] -= f * ic;
                }
            }
        }
        inv
    }
}

/// Resolvent G = (h - z)^{-1} via direct complex inversion.
pub fn resolvent_matrix(h: &SymmetricMatrix, z: Complex64) -> Result<CMatrix, IdentityError> {
    if z.im == 0.0 {
        return Err(IdentityError::RealArgument);
    }
    Ok(CMatrix::from_symmetric_shifted(h, z).inverse())
}

/// Max over (s,t) of |central finite difference of G(s,t) under a symmetric
/// perturbation of h(j,k) minus the derivative formula
/// -(1 + delta_jk)^{-1} [G(s,j)G(k,t) + G(s,k)G(j,t)]|.
pub fn resolvent_derivative_residual(
    h: &SymmetricMatrix,
    jk: (usize, usize),
    z: Complex64,
    step: f64,
) -> Result<f64, IdentityError> {
    if z.im == 0.0 {
        return Err(IdentityError::RealArgument);
    }
    let (j, k) = jk;
    let n = h.n();
    let g = resolvent_matrix(h, z)?;

    let mut hp = h.clone();
    hp.set(j, k, h.get(j, k) + step);
    let gp = resolvent_matrix(&hp, z)?;
    let mut hm = h.clone();
    hm.set(j, k, h.get(j, k) - step);
    let gm = resolvent_matrix(&hm, z)?;

    let delta = if j == k { 1.0 } else { 0.0 };
    let mut max_err = 0.0f64;
    for s in 0..n {
        for t in 0..n {
            let fd = (gp.at(s, t) - gm.at(s, t)) / (2.0 * step);
            let formula = -(g.at(s, j) * g.at(k, t) + g.at(s, k) * g.at(j, t)) / (1.0 + delta);
            max_err = max_err.max((fd - formula).norm());
        }
    }
    Ok(max_err)
}

/// Residuals of the matrix identities, relative to the scale of the
/// resolvents involved.
#[derive(Debug, Clone, Copy)]
pub struct IdentityResiduals {
    /// A^{-1} = A~^{-1} - A~^{-1}(A - A~)A^{-1} with A = h1 - z1, A~ = h2 - z2.
    pub perturbation: f64,
    /// G1 G2 = (G1 - G2)/(z1 - z2) on h1; `None` when z1 = z2.
    pub product: Option<f64>,
    /// G = xi I - xi G h with xi = -1/z1 on h1.
    pub neumann: f64,
}

pub fn resolvent_identity_residual(
    h1: &SymmetricMatrix,
    h2: &SymmetricMatrix,
    z1: Complex64,
    z2: Complex64,
) -> Result<IdentityResiduals, IdentityError> {
    let a_inv = resolvent_matrix(h1, z1)?;
    let at_inv = resolvent_matrix(h2, z2)?;

    // A - A~ = (h1 - h2) - (z1 - z2) I
    let n = h1.n();
    let mut diff = CMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            diff.data[i * n + j] = Complex64::new(h1.get(i, j) - h2.get(i, j), 0.0);
        }
        diff.data[i * n + i] -= z1 - z2;
    }
    let rhs = at_inv.sub(&at_inv.mul(&diff).mul(&a_inv));
    let perturbation = a_inv.sub(&rhs).frobenius() / a_inv.frobenius();

    let product = if z1 == z2 {
        None
    } else {
        let g1 = a_inv.clone();
        let g2 = resolvent_matrix(h1, z2)?;
        let lhs = g1.mul(&g2);
        let rhs = g1.sub(&g2).scale(1.0 / (z1 - z2));
        Some(lhs.sub(&rhs).frobenius() / lhs.frobenius().max(1e-300))
    };

    // (2.27): G = xi I - xi G h.
    let xi = -1.0 / z1;
    let mut hm = CMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            hm.data[i * n + j] = Complex64::new(h1.get(i, j), 0.0);
        }
    }
    let rhs = CMatrix::identity(n).scale(xi).sub(&a_inv.mul(&hm).scale(xi));
    let neumann = a_inv.sub(&rhs).frobenius() / a_inv.frobenius();

    Ok(IdentityResiduals { perturbation, product, neumann })
}

/// Nodes and weights of 64-point Gauss-Hermite quadrature (weight e^{-x^2}),
/// computed by Golub-Welsch on the Jacobi matrix using the crate's own
/// tridiagonal eigensolver.
pub fn gauss_hermite_64() -> (Vec<f64>, Vec<f64>) {
    let n = 64;
    let mut m = SymmetricMatrix::zeros(n);
    for k in 1..n {
        m.set(k, k - 1, (k as f64 / 2.0).sqrt());
    }
    let s = crate::eig::eigen_decompose(&m, true).expect("Jacobi matrix decomposition");
    let q = s.vectors.as_ref().unwrap();
    let total_mass = std::f64::consts::PI.sqrt();
    let weights: Vec<f64> = (0..n).map(|k| total_mass * q[k * n] * q[k * n]).collect();
    (s.eigenvalues, weights)
}
