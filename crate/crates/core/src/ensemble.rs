//! Entry laws and sampling of dilute Wigner matrices.
//!
//! A matrix draw puts `a(i,j) * d(i,j) / sqrt(p)` at every entry with
//! `d ~ Bernoulli(p/n)` and `a` drawn from the configured entry law.
//! Diagonal entries use the off-diagonal law scaled by sqrt(2), which
//! realizes the (1 + delta_ij) second- and fourth-moment factors exactly
//! for the built-in laws.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnsembleError {
    #[error("invalid ensemble config: {0}")]
    InvalidConfig(String),
    #[error("invalid entry law: {0}")]
    InvalidLaw(String),
}

/// Shape of the pre-dilution entry distribution. All kinds are symmetric
/// about zero and have every even moment up to order 14 finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LawKind {
    Gaussian,
    Rademacher,
    SymmetricUniform,
    /// Atoms on a support symmetric about 0; probabilities sum to 1.
    SymmetricDiscrete { atoms: Vec<(f64, f64)> },
    /// Law of a * 1{|a| <= cutoff}: base law with tail mass moved to 0.
    Truncated { base: Box<LawKind>, cutoff: f64 },
}

/// Probability law of the pre-dilution entries with its moment ledger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryLaw {
    #[serde(flatten)]
    pub kind: LawKind,
    /// Off-diagonal variance v^2.
    pub v2: f64,
}

impl EntryLaw {
    pub fn gaussian(v2: f64) -> Self {
        EntryLaw { kind: LawKind::Gaussian, v2 }
    }

    /// Rademacher on {-v, +v}.
    pub fn rademacher(v2: f64) -> Self {
        EntryLaw { kind: LawKind::Rademacher, v2 }
    }

    pub fn symmetric_uniform(v2: f64) -> Self {
        EntryLaw { kind: LawKind::SymmetricUniform, v2 }
    }

    /// Discrete symmetric law; v^2 is derived from the atoms.
    pub fn symmetric_discrete(atoms: Vec<(f64, f64)>) -> Result<Self, EnsembleError> {
        let law = EntryLaw { v2: discrete_moment(&atoms, 2), kind: LawKind::SymmetricDiscrete { atoms } };
        law.validate()?;
        Ok(law)
    }

    pub fn validate(&self) -> Result<(), EnsembleError> {
        if !(self.v2 > 0.0) || !self.v2.is_finite() {
            return Err(EnsembleError::InvalidLaw(format!("v2 must be positive, got {}", self.v2)));
        }
        match &self.kind {
            LawKind::SymmetricDiscrete { atoms } => {
                let total: f64 = atoms.iter().map(|(_, p)| p).sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(EnsembleError::InvalidLaw(format!("probabilities sum to {total}, not 1")));
                }
                if atoms.iter().any(|(_, p)| *p < 0.0) {
                    return Err(EnsembleError::InvalidLaw("negative probability".into()));
                }
                // Support symmetric about 0: every atom has a mirror with equal mass.
                for (x, p) in atoms {
                    if *x == 0.0 {
                        continue;
                    }
                    let mirror: f64 = atoms
                        .iter()
                        .filter(|(y, _)| (*y + *x).abs() <= 1e-12 * x.abs().max(1.0))
                        .map(|(_, q)| q)
                        .sum();
                    if (mirror - p).abs() > 1e-12 {
                        return Err(EnsembleError::InvalidLaw(format!("support not symmetric at {x}")));
                    }
                }
                let mu2 = discrete_moment(atoms, 2);
                if (mu2 - self.v2).abs() > 1e-10 * self.v2.max(1.0) {
                    return Err(EnsembleError::InvalidLaw(format!(
                        "v2 = {} inconsistent with atom second moment {mu2}",
                        self.v2
                    )));
                }
            }
            LawKind::Truncated { cutoff, .. } => {
                if !(*cutoff > 0.0) {
                    return Err(EnsembleError::InvalidLaw("truncation cutoff must be positive".into()));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// r-th moment of the off-diagonal entry law (odd moments are zero).
    pub fn moment(&self, r: usize) -> f64 {
        assert!(r <= 14, "moment ledger goes up to order 14");
        if r % 2 == 1 {
            return 0.0;
        }
        kind_moment(&self.kind, self.v2, r)
    }

    /// V4 such that E a^4 = V4 for off-diagonal entries.
    pub fn v4(&self) -> f64 {
        self.moment(4)
    }

    pub fn v6(&self) -> f64 {
        self.moment(6)
    }

    /// One off-diagonal draw.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        sample_kind(&self.kind, self.v2, rng)
    }
}

fn kind_moment(kind: &LawKind, v2: f64, r: usize) -> f64 {
    let v = v2.sqrt();
    match kind {
        // sigma^r (r-1)!!
        LawKind::Gaussian => v2.powi(r as i32 / 2) * double_factorial(r as i64 - 1),
        LawKind::Rademacher => v.powi(r as i32),
        // Uniform on [-c, c] with c = v sqrt(3): mu_r = c^r / (r+1).
        LawKind::SymmetricUniform => (v * 3f64.sqrt()).powi(r as i32) / (r as f64 + 1.0),
        LawKind::SymmetricDiscrete { atoms } => discrete_moment(atoms, r),
        LawKind::Truncated { base, cutoff } => truncated_moment(base, v2, *cutoff, r),
    }
}

fn double_factorial(k: i64) -> f64 {
    let mut acc = 1.0;
    let mut i = k;
    while i > 1 {
        acc *= i as f64;
        i -= 2;
    }
    acc
}

fn discrete_moment(atoms: &[(f64, f64)], r: usize) -> f64 {
    atoms.iter().map(|(x, p)| p * x.powi(r as i32)).sum()
}

/// E{ a^r 1{|a| <= c} } for the supported base kinds.
fn truncated_moment(base: &LawKind, v2: f64, c: f64, r: usize) -> f64 {
    match base {
        LawKind::Gaussian => gaussian_window_moment(v2, c, r),
        LawKind::Rademacher => {
            let v = v2.sqrt();
            if v <= c {
                v.powi(r as i32)
            } else {
                0.0
            }
        }
        LawKind::SymmetricUniform => {
            let half = (3.0 * v2).sqrt();
            let m = half.min(c);
            // int_{-m}^{m} x^r / (2 half) dx for even r
            m.powi(r as i32 + 1) / ((r as f64 + 1.0) * half)
        }
        LawKind::SymmetricDiscrete { atoms } => atoms
            .iter()
            .filter(|(x, _)| x.abs() <= c)
            .map(|(x, p)| p * x.powi(r as i32))
            .sum(),
        LawKind::Truncated { base, cutoff } => truncated_moment(base, v2, cutoff.min(c), r),
    }
}

/// int_{-c}^{c} x^r phi_sigma(x) dx for even r, by the standard recursion
/// I_r = (r-1) sigma^2 I_{r-2} - 2 sigma^2 c^{r-1} phi_sigma(c).
fn gaussian_window_moment(v2: f64, c: f64, r: usize) -> f64 {
    let sigma = v2.sqrt();
    let phi_c = (-c * c / (2.0 * v2)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt());
    let mut prev = erf(c / (sigma * 2f64.sqrt())); // I_0
    if r == 0 {
        return prev;
    }
    let mut cur = 0.0;
    let mut k = 2;
    while k <= r {
        cur = (k as f64 - 1.0) * v2 * prev - 2.0 * v2 * c.powi(k as i32 - 1) * phi_c;
        prev = cur;
        k += 2;
    }
    cur
}

fn sample_kind(kind: &LawKind, v2: f64, rng: &mut ChaCha8Rng) -> f64 {
    match kind {
        LawKind::Gaussian => Normal::new(0.0, v2.sqrt()).unwrap().sample(rng),
        LawKind::Rademacher => {
            let v = v2.sqrt();
            if rng.gen::<bool>() {
                v
            } else {
                -v
            }
        }
        LawKind::SymmetricUniform => {
            let half = (3.0 * v2).sqrt();
            rng.gen_range(-half..half)
        }
        LawKind::SymmetricDiscrete { atoms } => {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            for (x, p) in atoms {
                acc += p;
                if u < acc {
                    return *x;
                }
            }
            atoms.last().map(|(x, _)| *x).unwrap_or(0.0)
        }
        LawKind::Truncated { base, cutoff } => {
            let a = sample_kind(base, v2, rng);
            if a.abs() <= *cutoff {
                a
            } else {
                0.0
            }
        }
    }
}

/// Law of a * 1{|a| <= sqrt(p)}. For discrete laws the truncation is exact
/// mass removal (tail atoms collapse onto 0); the returned law exposes
/// recomputed moments for diagnostics.
pub fn truncated_law(law: &EntryLaw, p: f64) -> EntryLaw {
    assert!(p > 0.0, "truncation requires p > 0");
    let cutoff = p.sqrt();
    let kind = match &law.kind {
        LawKind::Rademacher if law.v2.sqrt() <= cutoff => law.kind.clone(),
        LawKind::SymmetricUniform if (3.0 * law.v2).sqrt() <= cutoff => law.kind.clone(),
        LawKind::SymmetricDiscrete { atoms } => {
            if atoms.iter().all(|(x, _)| x.abs() <= cutoff) {
                law.kind.clone()
            } else {
                let mut kept: Vec<(f64, f64)> = Vec::new();
                let mut zero_mass = 0.0;
                for (x, pr) in atoms {
                    if x.abs() <= cutoff {
                        if *x == 0.0 {
                            zero_mass += pr;
                        } else {
                            kept.push((*x, *pr));
                        }
                    } else {
                        zero_mass += pr;
                    }
                }
                if zero_mass > 0.0 {
                    kept.push((0.0, zero_mass));
                }
                LawKind::SymmetricDiscrete { atoms: kept }
            }
        }
        other => LawKind::Truncated { base: Box::new(other.clone()), cutoff },
    };
    EntryLaw { kind, v2: law.v2 }
}

/// Full specification of one dilute Wigner ensemble H_{n,p}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub n: usize,
    /// Dilution parameter: entries survive with probability p/n. Need not be
    /// an integer.
    pub p: f64,
    pub law: EntryLaw,
    /// Defaults to 0 when absent; the CLI layer resolves the effective seed.
    #[serde(default)]
    pub seed: u64,
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<(), EnsembleError> {
        if self.n == 0 {
            return Err(EnsembleError::InvalidConfig("n must be positive".into()));
        }
        if !(self.p > 0.0 && self.p <= self.n as f64) {
            return Err(EnsembleError::InvalidConfig(format!(
                "need 0 < p <= n, got p = {}, n = {}",
                self.p, self.n
            )));
        }
        self.law.validate()
    }

    /// Dilution exponent alpha = log p / log n.
    pub fn alpha(&self) -> f64 {
        self.p.ln() / (self.n as f64).ln()
    }
}

/// Dense symmetric matrix in packed lower-triangular storage. Entries are
/// already scaled by p^{-1/2}.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    n: usize,
    /// Row-packed lower triangle: row i occupies [i(i+1)/2, i(i+1)/2 + i].
    entries: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn zeros(n: usize) -> Self {
        SymmetricMatrix { n, entries: vec![0.0; n * (n + 1) / 2] }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(i: usize, j: usize) -> usize {
        debug_assert!(j <= i);
        i * (i + 1) / 2 + j
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j <= i {
            self.entries[Self::idx(i, j)]
        } else {
            self.entries[Self::idx(j, i)]
        }
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        if j <= i {
            self.entries[Self::idx(i, j)] = value;
        } else {
            self.entries[Self::idx(j, i)] = value;
        }
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            for j in 0..=i {
                let x = self.entries[Self::idx(i, j)];
                acc += if i == j { x * x } else { 2.0 * x * x };
            }
        }
        acc.sqrt()
    }

    /// Count of nonzero strictly-off-diagonal pairs (i < j).
    pub fn nonzero_offdiag_pairs(&self) -> usize {
        let mut count = 0;
        for i in 0..self.n {
            for j in 0..i {
                if self.entries[Self::idx(i, j)] != 0.0 {
                    count += 1;
                }
            }
        }
        count
    }
}

/// Substream derivation: seed and sample index are mixed through splitmix64
/// so that per-sample streams are independent of draw order and worker
/// count. The generator itself is ChaCha8, fixed across the repo.
pub fn sample_stream(seed: u64, sample_index: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(splitmix64(splitmix64(seed) ^ splitmix64(sample_index.wrapping_add(0x9E3779B97F4A7C15))))
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Draw one matrix H_{n,p}: for each i <= j independently, d ~ Bernoulli(p/n)
/// and a from the law (diagonal entries scaled by sqrt(2)); the entry is
/// a * d / sqrt(p). Deterministic given the stream.
pub fn sample_matrix(cfg: &EnsembleConfig, stream: &mut ChaCha8Rng) -> Result<SymmetricMatrix, EnsembleError> {
    cfg.validate()?;
    let n = cfg.n;
    let prob = cfg.p / n as f64;
    let inv_sqrt_p = 1.0 / cfg.p.sqrt();
    let diag_scale = 2f64.sqrt();
    let mut m = SymmetricMatrix::zeros(n);
    let degenerate = prob >= 1.0;
    for i in 0..n {
        let row = i * (i + 1) / 2;
        for j in 0..=i {
            let d = degenerate || stream.gen::<f64>() < prob;
            if d {
                let mut a = cfg.law.sample(stream);
                if i == j {
                    a *= diag_scale;
                }
                m.entries[row + j] = a * inv_sqrt_p;
            }
        }
    }
    Ok(m)
}
