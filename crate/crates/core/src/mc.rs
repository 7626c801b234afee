//! Seeded Monte Carlo campaigns over the dilute Wigner ensemble.
//!
//! Reproducibility contract: each sample index owns a derived substream, the
//! per-sample observable values are collected in index order, and every
//! reduction is a single sequential pass. Two runs with the same spec are
//! bit-identical regardless of worker count.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;
use std::time::Instant;
use thiserror::Error;

use crate::eig::eigen_decompose;
use crate::ensemble::{sample_matrix, sample_stream, EnsembleConfig};
use crate::resolvent::{
    diag_resolvent, diag_resolvent_sq, observable_b12, observable_l, observable_u12, trace_resolvent,
    trace_resolvent_sq, SpectralPoint,
};
use crate::theory;

#[derive(Debug, Error)]
pub enum McError {
    #[error("ensemble error: {0}")]
    Ensemble(#[from] crate::ensemble::EnsembleError),
    #[error("eigensolver error: {0}")]
    Eig(#[from] crate::eig::EigError),
    #[error("resolvent error: {0}")]
    Resolvent(#[from] crate::resolvent::ResolventError),
    #[error("invalid campaign: {0}")]
    InvalidSpec(String),
    #[error("slope fit needs at least two distinct (n, p) configs")]
    DegenerateFit,
}

/// Observables a campaign can measure. B12/U12/L require eigenvectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    G,
    TrG2,
    B12,
    U12,
    L,
}

impl Observable {
    pub fn needs_vectors(self) -> bool {
        matches!(self, Observable::B12 | Observable::U12 | Observable::L)
    }

    pub fn is_pairwise(self) -> bool {
        self.needs_vectors()
    }

    pub fn name(self) -> &'static str {
        match self {
            Observable::G => "g",
            Observable::TrG2 => "trG2",
            Observable::B12 => "B12",
            Observable::U12 => "U12",
            Observable::L => "L",
        }
    }
}

/// Key of one measured quantity: a single spectral point or an ordered pair
/// of point indices into the campaign's point list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum PointKey {
    Single(usize),
    Pair(usize, usize),
}

#[derive(Debug, Clone)]
pub struct CampaignSpec {
    pub cfg: EnsembleConfig,
    pub points: Vec<SpectralPoint>,
    pub observables: Vec<Observable>,
    /// Sample count M.
    pub samples: usize,
    /// Contiguous batches for the stderr estimate.
    pub batches: usize,
}

impl CampaignSpec {
    fn validate(&self) -> Result<(), McError> {
        self.cfg.validate()?;
        if self.points.is_empty() {
            return Err(McError::InvalidSpec("at least one spectral point required".into()));
        }
        if self.observables.is_empty() {
            return Err(McError::InvalidSpec("at least one observable required".into()));
        }
        if self.batches < 2 || self.samples < self.batches {
            return Err(McError::InvalidSpec(format!(
                "need M >= batches >= 2, got M = {}, batches = {}",
                self.samples, self.batches
            )));
        }
        Ok(())
    }

    fn needs_vectors(&self) -> bool {
        self.observables.iter().any(|o| o.needs_vectors())
    }
}

/// A Monte Carlo estimate with its batch-based standard error.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MCEstimate {
    pub value: Complex64,
    pub stderr: f64,
    pub samples: usize,
    pub seed: u64,
    pub wall_time: f64,
}

/// Result table of one campaign.
#[derive(Debug)]
pub struct CampaignResult {
    /// Mean estimates keyed by (observable, point key).
    pub means: BTreeMap<(Observable, PointKey), MCEstimate>,
    /// Covariance estimates C~(z_i, z_j) of g, without complex conjugation,
    /// keyed by the unordered point-index pair (i < j) plus the diagonal.
    pub covariances: BTreeMap<(usize, usize), MCEstimate>,
    /// Per-sample g values per point, kept for downstream estimators.
    pub g_samples: Vec<Vec<Complex64>>,
    pub wall_time: f64,
}

/// Run a campaign: per sample draw one matrix, eigendecompose once, evaluate
/// every requested observable at every point (pairwise observables at every
/// ordered pair). Deterministic for a fixed (seed, M).
pub fn run_campaign(spec: &CampaignSpec) -> Result<CampaignResult, McError> {
    spec.validate()?;
    let started = Instant::now();
    let want_vectors = spec.needs_vectors();
    let points = &spec.points;
    let keys = result_keys(spec);

    // Per-sample evaluation; collect() preserves index order.
    let rows: Result<Vec<Vec<Complex64>>, McError> = (0..spec.samples)
        .into_par_iter()
        .map(|idx| evaluate_sample(spec, idx as u64, want_vectors, &keys))
        .collect();
    let rows = rows?;

    let wall_time = started.elapsed().as_secs_f64();
    let mut means = BTreeMap::new();
    for (slot, key) in keys.iter().enumerate() {
        let series: Vec<Complex64> = rows.iter().map(|r| r[slot]).collect();
        let (mean, stderr) = mean_with_batch_stderr(&series, spec.batches);
        means.insert(
            *key,
            MCEstimate { value: mean, stderr, samples: spec.samples, seed: spec.cfg.seed, wall_time },
        );
    }

    // g samples per point for the covariance estimators.
    let g_slots: Vec<usize> = (0..points.len())
        .map(|i| keys.iter().position(|k| *k == (Observable::G, PointKey::Single(i))))
        .collect::<Option<Vec<_>>>()
        .unwrap_or_default();
    let mut g_samples: Vec<Vec<Complex64>> = Vec::new();
    let mut covariances = BTreeMap::new();
    if g_slots.len() == points.len() {
        for &slot in &g_slots {
            g_samples.push(rows.iter().map(|r| r[slot]).collect());
        }
        for i in 0..points.len() {
            for j in i..points.len() {
                let (value, stderr) = covariance_with_batch_stderr(&g_samples[i], &g_samples[j], spec.batches);
                covariances.insert(
                    (i, j),
                    MCEstimate { value, stderr, samples: spec.samples, seed: spec.cfg.seed, wall_time },
                );
            }
        }
    }

    Ok(CampaignResult { means, covariances, g_samples, wall_time })
}

/// Fixed slot layout for one sample's observable values.
fn result_keys(spec: &CampaignSpec) -> Vec<(Observable, PointKey)> {
    let mut keys = Vec::new();
    let np = spec.points.len();
    for &obs in &spec.observables {
        if obs.is_pairwise() {
            for i in 0..np {
                for j in 0..np {
                    if i != j {
                        keys.push((obs, PointKey::Pair(i, j)));
                    }
                }
            }
        } else {
            for i in 0..np {
                keys.push((obs, PointKey::Single(i)));
            }
        }
    }
    keys
}

fn evaluate_sample(
    spec: &CampaignSpec,
    sample_index: u64,
    want_vectors: bool,
    keys: &[(Observable, PointKey)],
) -> Result<Vec<Complex64>, McError> {
    let mut stream = sample_stream(spec.cfg.seed, sample_index);
    let matrix = sample_matrix(&spec.cfg, &mut stream)?;
    let sample = eigen_decompose(&matrix, want_vectors)?;

    let np = spec.points.len();
    let mut diag: Vec<Vec<Complex64>> = Vec::new();
    let mut diag_sq: Vec<Vec<Complex64>> = Vec::new();
    if want_vectors {
        for p in &spec.points {
            diag.push(diag_resolvent(&sample, p)?);
            diag_sq.push(diag_resolvent_sq(&sample, p)?);
        }
    }
    let gs: Vec<Complex64> = spec.points.iter().map(|p| trace_resolvent(&sample, p)).collect();

    #[cfg(debug_assertions)]
    for (p, g) in spec.points.iter().zip(&gs) {
        debug_assert!(g.norm() <= 1.0 / p.z.im.abs() + 1e-12);
        debug_assert!(g.im * p.z.im > 0.0, "Herglotz violated at {}", p.z);
    }

    let mut out = Vec::with_capacity(keys.len());
    for &(obs, key) in keys {
        let value = match (obs, key) {
            (Observable::G, PointKey::Single(i)) => gs[i],
            (Observable::TrG2, PointKey::Single(i)) => trace_resolvent_sq(&sample, &spec.points[i]),
            (Observable::B12, PointKey::Pair(i, j)) => observable_b12(&diag[i], &diag[j])?,
            (Observable::U12, PointKey::Pair(i, j)) => observable_u12(&diag_sq[i], &diag[j])?,
            (Observable::L, PointKey::Pair(i, j)) => observable_l(&diag_sq[i], &diag[i], &diag[j])?,
            _ => unreachable!("key layout mismatch"),
        };
        out.push(value);
    }
    let _ = np;
    Ok(out)
}

/// Sequential mean and batch-means standard error.
pub fn mean_with_batch_stderr(series: &[Complex64], batches: usize) -> (Complex64, f64) {
    let m = series.len();
    let mean = series.iter().sum::<Complex64>() / m as f64;
    let stderr = batch_spread(series, batches, |chunk| {
        chunk.iter().sum::<Complex64>() / chunk.len() as f64
    });
    (mean, stderr)
}

/// Covariance estimator C~ = (1/(M-1)) sum (x - x_bar)(y - y_bar) with NO
/// complex conjugation, plus its batch-based standard error.
pub fn covariance_with_batch_stderr(xs: &[Complex64], ys: &[Complex64], batches: usize) -> (Complex64, f64) {
    let value = covariance_no_conj(xs, ys);
    let stderr = batch_spread_pair(xs, ys, batches, covariance_no_conj);
    (value, stderr)
}

pub fn covariance_no_conj(xs: &[Complex64], ys: &[Complex64]) -> Complex64 {
    let m = xs.len();
    assert_eq!(m, ys.len());
    assert!(m >= 2);
    let xbar = xs.iter().sum::<Complex64>() / m as f64;
    let ybar = ys.iter().sum::<Complex64>() / m as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        acc += (x - xbar) * (y - ybar);
    }
    acc / (m as f64 - 1.0)
}

/// Leave-one-out jackknife standard error of the no-conjugation covariance.
pub fn jackknife_covariance_stderr(xs: &[Complex64], ys: &[Complex64]) -> f64 {
    let m = xs.len() as f64;
    let sx: Complex64 = xs.iter().sum();
    let sy: Complex64 = ys.iter().sum();
    let sxy: Complex64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let mut reps = Vec::with_capacity(xs.len());
    for (x, y) in xs.iter().zip(ys) {
        let rm = m - 1.0;
        let mx = (sx - x) / rm;
        let my = (sy - y) / rm;
        let rxy = sxy - x * y;
        // covariance of the reduced sample
        reps.push((rxy - rm * mx * my) / (rm - 1.0));
    }
    let rbar = reps.iter().sum::<Complex64>() / m;
    let var: f64 = reps.iter().map(|r| (r - rbar).norm_sqr()).sum::<f64>() * (m - 1.0) / m;
    var.sqrt()
}

/// Leave-one-out jackknife standard error of the mean (equals s/sqrt(M)).
pub fn jackknife_mean_stderr(series: &[Complex64]) -> f64 {
    let m = series.len() as f64;
    let mean = series.iter().sum::<Complex64>() / m;
    let var: f64 = series.iter().map(|x| (x - mean).norm_sqr()).sum::<f64>() / (m - 1.0);
    (var / m).sqrt()
}

fn batch_spread<F: Fn(&[Complex64]) -> Complex64>(series: &[Complex64], batches: usize, stat: F) -> f64 {
    let m = series.len();
    let b = batches.min(m).max(2);
    let base = m / b;
    let mut values = Vec::with_capacity(b);
    let mut start = 0;
    for k in 0..b {
        // distribute the remainder over the first batches
        let len = base + usize::from(k < m % b);
        values.push(stat(&series[start..start + len]));
        start += len;
    }
    spread_of(&values)
}

fn batch_spread_pair<F: Fn(&[Complex64], &[Complex64]) -> Complex64>(
    xs: &[Complex64],
    ys: &[Complex64],
    batches: usize,
    stat: F,
) -> f64 {
    let m = xs.len();
    let b = batches.min(m / 2).max(2);
    let base = m / b;
    let mut values = Vec::with_capacity(b);
    let mut start = 0;
    for k in 0..b {
        let len = base + usize::from(k < m % b);
        values.push(stat(&xs[start..start + len], &ys[start..start + len]));
        start += len;
    }
    spread_of(&values)
}

fn spread_of(values: &[Complex64]) -> f64 {
    let b = values.len() as f64;
    let mean = values.iter().sum::<Complex64>() / b;
    let var: f64 = values.iter().map(|v| (v - mean).norm_sqr()).sum::<f64>() / (b - 1.0);
    (var / b).sqrt()
}

/// One row of the variance-scaling study.
#[derive(Debug, Clone, Serialize)]
pub struct VarianceRow {
    pub n: usize,
    pub p: f64,
    pub variance: f64,
    pub stderr: f64,
    /// Excluded from the fit when the variance estimate is non-positive.
    pub excluded: bool,
}

#[derive(Debug)]
pub struct VarianceScaling {
    pub rows: Vec<VarianceRow>,
    /// Least-squares slope of log Var vs log(np).
    pub slope: f64,
}

/// Var g at one z (via C~(z, conj z), which estimates E|g - Eg|^2) across a
/// grid of configs, with the log-log scaling fit.
pub fn variance_vs_np(grid: &[EnsembleConfig], z: Complex64, samples: usize, batches: usize) -> Result<VarianceScaling, McError> {
    if grid.len() < 2 {
        return Err(McError::DegenerateFit);
    }
    let v2 = grid[0].law.v2;
    for cfg in grid {
        if cfg.law != grid[0].law {
            return Err(McError::InvalidSpec("variance grid must share one entry law".into()));
        }
    }
    let mut rows = Vec::new();
    for cfg in grid {
        let points = vec![
            SpectralPoint::new(z, v2.sqrt()).map_err(McError::Resolvent)?,
            SpectralPoint::new(z.conj(), v2.sqrt()).map_err(McError::Resolvent)?,
        ];
        let spec = CampaignSpec {
            cfg: cfg.clone(),
            points,
            observables: vec![Observable::G],
            samples,
            batches,
        };
        let result = run_campaign(&spec)?;
        let est = result.covariances[&(0, 1)];
        let variance = est.value.re;
        rows.push(VarianceRow {
            n: cfg.n,
            p: cfg.p,
            variance,
            stderr: est.stderr,
            excluded: !(variance > 0.0),
        });
    }
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| !r.excluded)
        .map(|r| ((r.n as f64 * r.p).ln(), r.variance.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(McError::DegenerateFit);
    }
    let slope = least_squares_slope(&pts);
    Ok(VarianceScaling { rows, slope })
}

fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    sxy / sxx
}

/// Histogram row of the semicircle study.
#[derive(Debug, Clone, Serialize)]
pub struct DensityBin {
    pub bin_center: f64,
    pub empirical_density: f64,
    pub semicircle_density: f64,
}

#[derive(Debug)]
pub struct SemicircleStudy {
    /// KS distance of the averaged (pooled) empirical CDF to the semicircle CDF.
    pub ks: f64,
    pub bins: Vec<DensityBin>,
    pub samples: usize,
}

/// Pool the spectra of K samples, compare the averaged empirical CDF to the
/// semicircle CDF, and bin the eigenvalues for plotting (80 bins over
/// [-2v - 0.5, 2v + 0.5]).
pub fn semicircle_study(cfg: &EnsembleConfig, samples: usize) -> Result<SemicircleStudy, McError> {
    if samples == 0 {
        return Err(McError::InvalidSpec("K >= 1 required".into()));
    }
    cfg.validate()?;
    let v2 = cfg.law.v2;
    let pooled: Result<Vec<Vec<f64>>, McError> = (0..samples)
        .into_par_iter()
        .map(|k| {
            let mut stream = sample_stream(cfg.seed, k as u64);
            let m = sample_matrix(cfg, &mut stream)?;
            Ok(eigen_decompose(&m, false)?.eigenvalues)
        })
        .collect();
    let mut eigenvalues: Vec<f64> = pooled?.into_iter().flatten().collect();
    eigenvalues.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pooled_sample = crate::eig::SpectralSample { eigenvalues, vectors: None };
    let ks = crate::eig::ks_distance(&pooled_sample, |x| theory::semicircle_cdf(x, v2));
    let bins = density_table(&pooled_sample.eigenvalues, v2);
    Ok(SemicircleStudy { ks, bins, samples })
}

/// Fixed-width density table: B = 80 bins over [-2v - 0.5, 2v + 0.5],
/// empirical density normalized so sum(density) * width = 1.
pub fn density_table(sorted_eigenvalues: &[f64], v2: f64) -> Vec<DensityBin> {
    const BINS: usize = 80;
    let v = v2.sqrt();
    let lo = -2.0 * v - 0.5;
    let hi = 2.0 * v + 0.5;
    let width = (hi - lo) / BINS as f64;
    let total = sorted_eigenvalues.len() as f64;
    let mut counts = vec![0usize; BINS];
    for &x in sorted_eigenvalues {
        if x < lo || x > hi {
            continue;
        }
        let b = (((x - lo) / width) as usize).min(BINS - 1);
        counts[b] += 1;
    }
    let inside: f64 = counts.iter().sum::<usize>() as f64;
    let norm = if inside > 0.0 { inside } else { total.max(1.0) };
    (0..BINS)
        .map(|b| {
            let center = lo + (b as f64 + 0.5) * width;
            DensityBin {
                bin_center: center,
                empirical_density: counts[b] as f64 / (norm * width),
                semicircle_density: theory::semicircle_density(center, v2),
            }
        })
        .collect()
}

/// Comparison row of a prediction sweep.
#[derive(Debug, Clone, Serialize)]
pub struct PredictionRow {
    pub observable: &'static str,
    pub z1: Complex64,
    pub z2: Option<Complex64>,
    pub mc_value: Complex64,
    pub stderr: f64,
    pub theory: Complex64,
    pub gap: f64,
    /// gap expressed in units of the O(1/p) budget.
    pub gap_over_inv_p: f64,
}

/// Measure E g, E (1/n)Tr G^2 at each point and E B12, E U12, E L at each
/// ordered pair, against the leading-order leading predictions.
pub fn prediction_sweep(
    cfg: &EnsembleConfig,
    points: &[SpectralPoint],
    samples: usize,
    batches: usize,
) -> Result<Vec<PredictionRow>, McError> {
    let spec = CampaignSpec {
        cfg: cfg.clone(),
        points: points.to_vec(),
        observables: vec![Observable::G, Observable::TrG2, Observable::B12, Observable::U12, Observable::L],
        samples,
        batches,
    };
    let result = run_campaign(&spec)?;
    let v2 = cfg.law.v2;
    let inv_p = 1.0 / cfg.p;
    let mut rows = Vec::new();
    for ((obs, key), est) in &result.means {
        let (z1, z2, theory_value) = match key {
            PointKey::Single(i) => {
                let z = points[*i].z;
                let th = match obs {
                    Observable::G => theory::predict_e_g(z, v2),
                    Observable::TrG2 => theory::predict_e_tr_g2(z, v2),
                    _ => unreachable!(),
                };
                (z, None, th)
            }
            PointKey::Pair(i, j) => {
                let (z1, z2) = (points[*i].z, points[*j].z);
                let th = match obs {
                    Observable::B12 => theory::predict_b12(z1, z2, v2),
                    Observable::U12 => theory::predict_u12(z1, z2, v2),
                    Observable::L => theory::predict_l(z1, z2, v2),
                    _ => unreachable!(),
                };
                (z1, Some(z2), th)
            }
        };
        let theory_value = theory_value.map_err(|e| McError::InvalidSpec(e.to_string()))?;
        let gap = (est.value - theory_value).norm();
        rows.push(PredictionRow {
            observable: obs.name(),
            z1,
            z2,
            mc_value: est.value,
            stderr: est.stderr,
            theory: theory_value,
            gap,
            gap_over_inv_p: gap / inv_p,
        });
    }
    Ok(rows)
}
