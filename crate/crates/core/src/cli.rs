//! Batch front-end: JSON experiment configs in, CSV tables + a JSON sidecar
//! out. All floats are printed with 17 significant digits so the CSV
//! round-trips, and reruns of a sidecar's resolved config are byte-identical.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;
use thiserror::Error;

use crate::ensemble::{EnsembleConfig, EntryLaw};
use crate::identities::{
    cumulant_expansion_residual, resolvent_derivative_residual, resolvent_identity_residual,
    Monomial, ResolventKernel, ScalarLaw,
};
use crate::mc;
use crate::resolvent::SpectralPoint;
use crate::theory::{self, TheoryParams};

pub const ENV_THREADS: &str = "DILUTE_WIGNER_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("config file {0}: {1}")]
    Io(PathBuf, #[source] std::io::Error),
    #[error("output file {0}: {1}")]
    Output(PathBuf, #[source] std::io::Error),
    #[error("{0}")]
    Run(String),
}

impl From<mc::McError> for CliError {
    fn from(e: mc::McError) -> Self {
        CliError::Run(e.to_string())
    }
}

impl From<theory::TheoryError> for CliError {
    fn from(e: theory::TheoryError) -> Self {
        CliError::Run(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Semicircle,
    VarianceScaling,
    Covariance,
    Predictions,
    Universality,
    Identities,
}

/// One (n, p) entry of a variance-scaling grid; shares the top-level law.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GridEntry {
    pub n: usize,
    pub p: f64,
}

/// The ensemble portion of a config; the effective seed is resolved from the
/// top level (or the --seed flag) afterwards.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub n: usize,
    pub p: f64,
    pub law: EntryLaw,
}

/// On-disk experiment description. Optional fields are per-experiment; the
/// validator reports missing ones by JSON path (".M", ".points", ...).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleSpec>,
    /// Spectral points as [re, im] pairs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<[f64; 2]>>,
    /// Monte Carlo sample count.
    #[serde(rename = "M", skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    /// Sample count of the semicircle study.
    #[serde(rename = "K", skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batches: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Variance-scaling / universality (n, p) grid.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<GridEntry>>,
    /// Local scale s = n(lambda2 - lambda1) of the universality experiment.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
}

/// Command-line overrides; flags win over the config, and for threads the
/// DILUTE_WIGNER_THREADS env var is honored only when the flag is absent.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub check: bool,
    pub output: Option<PathBuf>,
}

const DEFAULT_BATCHES: usize = 100;

fn missing(path: &str) -> CliError {
    CliError::Schema { path: path.into(), message: "required field missing".into() }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| CliError::Schema {
            path: format!(".(line {}, column {})", e.line(), e.column()),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        use ExperimentKind::*;
        fn need_ensemble(slf: &ExperimentConfig) -> Result<&EnsembleSpec, CliError> {
            slf.ensemble.as_ref().ok_or_else(|| missing(".ensemble"))
        }
        let need_m = |slf: &Self| slf.m.ok_or_else(|| missing(".M"));
        let need_points = |slf: &Self, count: usize| -> Result<(), CliError> {
            let pts = slf.points.as_ref().ok_or_else(|| missing(".points"))?;
            if pts.len() < count {
                return Err(CliError::Schema {
                    path: ".points".into(),
                    message: format!("need at least {count} spectral point(s), got {}", pts.len()),
                });
            }
            Ok(())
        };
        match self.experiment {
            Semicircle => {
                need_ensemble(self)?;
                self.k.ok_or_else(|| missing(".K"))?;
            }
            VarianceScaling => {
                let grid = self.grid.as_ref().ok_or_else(|| missing(".grid"))?;
                if grid.len() < 2 {
                    return Err(CliError::Schema {
                        path: ".grid".into(),
                        message: "variance scaling needs at least two (n, p) entries".into(),
                    });
                }
                need_ensemble(self)?; // supplies the shared law
                need_points(self, 1)?;
                need_m(self)?;
            }
            Covariance => {
                need_ensemble(self)?;
                need_points(self, 2)?;
                need_m(self)?;
            }
            Predictions => {
                need_ensemble(self)?;
                need_points(self, 1)?;
                need_m(self)?;
            }
            Universality => {
                need_ensemble(self)?;
                self.s.ok_or_else(|| missing(".s"))?;
            }
            Identities => {}
        }
        if let Some(law) = self.ensemble.as_ref().map(|e| &e.law) {
            law.validate().map_err(|e| CliError::Schema {
                path: ".ensemble.law".into(),
                message: e.to_string(),
            })?;
        }
        Ok(())
    }
}

/// Apply overrides and defaults, producing a config with every decision
/// recorded in its own fields. The sidecar carries this resolved form, so
/// feeding it back through the CLI repeats the run exactly.
pub fn resolve(config: &ExperimentConfig, overrides: &Overrides) -> ExperimentConfig {
    let mut resolved = config.clone();
    resolved.seed = Some(overrides.seed.or(config.seed).unwrap_or(0));
    resolved.batches = Some(config.batches.unwrap_or(DEFAULT_BATCHES));
    resolved.threads = overrides
        .threads
        .or_else(|| std::env::var(ENV_THREADS).ok().and_then(|v| v.parse().ok()))
        .or(config.threads);
    resolved.output = Some(
        overrides
            .output
            .clone()
            .or_else(|| config.output.clone())
            .unwrap_or_else(|| PathBuf::from("results.csv")),
    );
    resolved
}

/// One CSV row of the main result table.
#[derive(Debug, Clone, Serialize)]
pub struct ResultRow {
    pub observable: String,
    pub z1: Complex64,
    pub z2: Complex64,
    pub n: usize,
    pub p: f64,
    pub m: usize,
    pub value: Complex64,
    pub stderr: f64,
    pub theory: Complex64,
}

/// A tolerance comparison evaluated in --check mode.
#[derive(Debug, Clone, Serialize)]
pub struct CheckItem {
    pub name: String,
    pub actual: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub version: String,
    pub wall_time: f64,
    pub config: ExperimentConfig,
    pub checks: Vec<CheckItem>,
    /// Experiment-level scalars (KS distance, fitted slope, ...).
    pub summary: serde_json::Map<String, serde_json::Value>,
}

struct ExperimentOutput {
    csv: String,
    checks: Vec<CheckItem>,
    summary: serde_json::Map<String, serde_json::Value>,
}

/// Execute a config file with overrides. Returns the process exit code:
/// 0 success, 2 a --check tolerance failed, 1 any error (already printed).
pub fn run(config_path: &Path, overrides: &Overrides) -> i32 {
    match run_inner(config_path, overrides) {
        Ok(true) => 0,
        Ok(false) => 2,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn run_inner(config_path: &Path, overrides: &Overrides) -> Result<bool, CliError> {
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| CliError::Io(config_path.to_path_buf(), e))?;
    let config = ExperimentConfig::from_json(&text)?;
    let resolved = resolve(&config, overrides);

    let started = Instant::now();
    let output = match resolved.threads {
        Some(t) if t > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| CliError::Run(e.to_string()))?
            .install(|| execute(&resolved)),
        _ => execute(&resolved),
    }?;
    let wall_time = started.elapsed().as_secs_f64();

    let out_path = resolved.output.clone().expect("resolved");
    std::fs::write(&out_path, &output.csv).map_err(|e| CliError::Output(out_path.clone(), e))?;

    let all_pass = output.checks.iter().all(|c| c.pass);
    let report = RunReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time,
        config: resolved.clone(),
        checks: output.checks,
        summary: output.summary,
    };
    let sidecar = out_path.with_extension("json");
    std::fs::write(&sidecar, serde_json::to_string_pretty(&report).unwrap())
        .map_err(|e| CliError::Output(sidecar.clone(), e))?;

    if overrides.check {
        for c in &report.checks {
            println!(
                "check {}: {} (|value| {:.6e} vs bound {:.6e})",
                c.name,
                if c.pass { "PASS" } else { "FAIL" },
                c.actual,
                c.bound
            );
        }
        Ok(all_pass)
    } else {
        Ok(true)
    }
}

fn execute(rc: &ExperimentConfig) -> Result<ExperimentOutput, CliError> {
    match rc.experiment {
        ExperimentKind::Semicircle => run_semicircle(rc),
        ExperimentKind::VarianceScaling => run_variance_scaling(rc),
        ExperimentKind::Covariance => run_covariance(rc),
        ExperimentKind::Predictions => run_predictions(rc),
        ExperimentKind::Universality => run_universality(rc),
        ExperimentKind::Identities => run_identities(rc),
    }
}

fn ensemble_cfg(rc: &ExperimentConfig) -> EnsembleConfig {
    let e = rc.ensemble.as_ref().expect("validated");
    EnsembleConfig { n: e.n, p: e.p, law: e.law.clone(), seed: rc.seed.expect("resolved") }
}

fn spectral_points(rc: &ExperimentConfig, v: f64) -> Result<Vec<SpectralPoint>, CliError> {
    let raw = rc.points.as_ref().expect("validated");
    let mut out = Vec::with_capacity(raw.len());
    for &[re, im] in raw {
        let point = SpectralPoint::new(Complex64::new(re, im), v)
            .map_err(|e| CliError::Run(e.to_string()))?;
        if !point.in_lambda_v {
            eprintln!(
                "warning: z = {re}+{im}i lies outside the validated domain |Im z| >= 2v+1; \
                 asymptotic predictions are extrapolations there"
            );
        }
        out.push(point);
    }
    Ok(out)
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

const RESULT_HEADER: &str =
    "observable,re_z1,im_z1,re_z2,im_z2,n,p,M,re_value,im_value,stderr,re_theory,im_theory\n";

fn push_row(csv: &mut String, r: &ResultRow) {
    let _ = writeln!(
        csv,
        "{},{},{},{},{},{},{},{},{},{},{},{},{}",
        r.observable,
        fmt(r.z1.re),
        fmt(r.z1.im),
        fmt(r.z2.re),
        fmt(r.z2.im),
        r.n,
        fmt(r.p),
        r.m,
        fmt(r.value.re),
        fmt(r.value.im),
        fmt(r.stderr),
        fmt(r.theory.re),
        fmt(r.theory.im),
    );
}

fn rows_to_csv(rows: &[ResultRow]) -> String {
    let mut csv = String::from(RESULT_HEADER);
    for r in rows {
        push_row(&mut csv, r);
    }
    csv
}

fn run_semicircle(rc: &ExperimentConfig) -> Result<ExperimentOutput, CliError> {
    let cfg = ensemble_cfg(rc);
    let k = rc.k.expect("validated");
    let study = mc::semicircle_study(&cfg, k)?;
    let csv = emit_density_table(&study.bins);
    let mut summary = serde_json::Map::new();
    summary.insert("ks_distance".into(), study.ks.into());
    summary.insert("pooled_samples".into(), study.samples.into());
    let checks = vec![CheckItem {
        name: "ks_distance".into(),
        actual: study.ks,
        bound: 0.02,
        pass: study.ks < 0.02,
    }];
    Ok(ExperimentOutput { csv, checks, summary })
}

/// CSV view of a binned density study: bin_center, empirical_density,
/// semicircle_density per row.
pub fn emit_density_table(bins: &[mc::DensityBin]) -> String {
    let mut csv = String::from("bin_center,empirical_density,semicircle_density\n");
    for b in bins {
        let _ = writeln!(
            csv,
            "{},{},{}",
            fmt(b.bin_center),
            fmt(b.empirical_density),
            fmt(b.semicircle_density)
        );
    }
    csv
}

fn run_variance_scaling(rc: &ExperimentConfig) -> Result<ExperimentOutput, CliError> {
    let base = ensemble_cfg(rc);
    let grid: Vec<EnsembleConfig> = rc
        .grid
        .as_ref()
        .expect("validated")
        .iter()
        .map(|g| EnsembleConfig { n: g.n, p: g.p, law: base.law.clone(), seed: rc.seed.expect("resolved") })
        .collect();
    let raw = rc.points.as_ref().expect("validated")[0];
    let z = Complex64::new(raw[0], raw[1]);
    let m = rc.m.expect("validated");
    let scaling = mc::variance_vs_np(&grid, z, m, rc.batches.expect("resolved"))?;

    let mut rows = Vec::new();
    for row in &scaling.rows {
        let params = TheoryParams::from_law(&base.law, row.n, row.p);
        let theory_var = theory::c_leading(&params, z, z.conj())?;
        rows.push(ResultRow {
            observable: "var_g".into(),
            z1: z,
            z2: z.conj(),
            n: row.n,
            p: row.p,
            m,
            value: Complex64::new(row.variance, 0.0),
            stderr: row.stderr,
            theory: theory_var,
        });
    }
    let mut summary = serde_json::Map::new();
    summary.insert("slope".into(), scaling.slope.into());
    let checks = vec![CheckItem {
        name: "variance_slope".into(),
        actual: scaling.slope,
        bound: 0.15,
        pass: (-1.15..=-0.85).contains(&scaling.slope),
    }];
    Ok(ExperimentOutput { csv: rows_to_csv(&rows), checks, summary })
}

fn run_covariance(rc: &ExperimentConfig) -> Result<ExperimentOutput, CliError> {
    let cfg = ensemble_cfg(rc);
    let v = cfg.law.v2.sqrt();
    let points = spectral_points(rc, v)?;
    let m = rc.m.expect("validated");
    let spec = mc::CampaignSpec {
        cfg: cfg.clone(),
        points: points.clone(),
        observables: vec![mc::Observable::G],
        samples: m,
        batches: rc.batches.expect("resolved"),
    };
    let result = mc::run_campaign(&spec)?;
    let params = TheoryParams::from_law(&cfg.law, cfg.n, cfg.p);

    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for (i, point) in points.iter().enumerate() {
        let est = result.means[&(mc::Observable::G, mc::PointKey::Single(i))];
        rows.push(ResultRow {
            observable: "g".into(),
            z1: point.z,
            z2: point.z,
            n: cfg.n,
            p: cfg.p,
            m,
            value: est.value,
            stderr: est.stderr,
            theory: theory::predict_e_g(point.z, cfg.law.v2)?,
        });
    }
    for ((i, j), est) in &result.covariances {
        if i == j {
            continue;
        }
        let (z1, z2) = (points[*i].z, points[*j].z);
        let theory_cov = theory::c_leading(&params, z1, z2)?;
        rows.push(ResultRow {
            observable: "cov_g".into(),
            z1,
            z2,
            n: cfg.n,
            p: cfg.p,
            m,
            value: est.value,
            stderr: est.stderr,
            theory: theory_cov,
        });
        let gap = (est.value - theory_cov).norm();
        let bound = (4.0 * est.stderr).max(0.15 * theory_cov.norm());
        checks.push(CheckItem {
            name: format!("cov_gap_{i}{j}"),
            actual: gap,
            bound,
            pass: gap <= bound,
        });
    }
    Ok(ExperimentOutput { csv: rows_to_csv(&rows), checks, summary: serde_json::Map::new() })
}

fn run_predictions(rc: &ExperimentConfig) -> Result<ExperimentOutput, CliError> {
    let cfg = ensemble_cfg(rc);
    let v = cfg.law.v2.sqrt();
    let points = spectral_points(rc, v)?;
    let m = rc.m.expect("validated");
    let table = mc::prediction_sweep(&cfg, &points, m, rc.batches.expect("resolved"))?;

    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for entry in &table {
        let z2 = entry.z2.unwrap_or(entry.z1);
        rows.push(ResultRow {
            observable: entry.observable.to_string(),
            z1: entry.z1,
            z2,
            n: cfg.n,
            p: cfg.p,
            m,
            value: entry.mc_value,
            stderr: entry.stderr,
            theory: entry.theory,
        });
        // O(1/p) constant budget of 3 plus 4 standard errors
        let bound = 3.0 / cfg.p + 4.0 * entry.stderr;
        checks.push(CheckItem {
            name: format!("{}_gap", entry.observable),
            actual: entry.gap,
            bound,
            pass: entry.gap <= bound,
        });
    }
    Ok(ExperimentOutput { csv: rows_to_csv(&rows), checks, summary: serde_json::Map::new() })
}

fn run_universality(rc: &ExperimentConfig) -> Result<ExperimentOutput, CliError> {
    let e = rc.ensemble.as_ref().expect("validated");
    let s = rc.s.expect("validated");
    let reference = theory::universality_limit(s)?;

    // evaluate at the base (n, p) plus any grid entries
    let mut configs: Vec<(usize, f64)> = vec![(e.n, e.p)];
    if let Some(grid) = &rc.grid {
        configs.extend(grid.iter().map(|g| (g.n, g.p)));
    }

    let mut rows = Vec::new();
    let mut checks = Vec::new();
    let mut errors = Vec::new();
    for (n, p) in configs {
        let params = TheoryParams::from_law(&e.law, n, p);
        let half = s / (2.0 * n as f64);
        let value = theory::density_density_leading(-half, half, &params)?;
        rows.push(ResultRow {
            observable: "density_density".into(),
            z1: Complex64::new(-half, 0.0),
            z2: Complex64::new(half, 0.0),
            n,
            p,
            m: 0,
            value: Complex64::new(value, 0.0),
            stderr: 0.0,
            theory: Complex64::new(reference, 0.0),
        });
        errors.push((value - reference).abs());
    }
    checks.push(CheckItem {
        name: "universality_gap".into(),
        actual: errors[0],
        bound: 1e-5,
        pass: errors[0] <= 1e-5,
    });
    let mut summary = serde_json::Map::new();
    summary.insert("reference".into(), reference.into());
    summary.insert(
        "errors".into(),
        serde_json::Value::Array(errors.iter().map(|&e| e.into()).collect()),
    );
    Ok(ExperimentOutput { csv: rows_to_csv(&rows), checks, summary })
}

fn run_identities(rc: &ExperimentConfig) -> Result<ExperimentOutput, CliError> {
    let _ = rc;
    let mut csv = String::from("identity,residual,tolerance\n");
    let mut checks = Vec::new();
    let mut record = |name: &str, residual: f64, tolerance: f64, csv: &mut String| {
        let _ = writeln!(csv, "{},{},{}", name, fmt(residual), fmt(tolerance));
        checks.push(CheckItem {
            name: name.to_string(),
            actual: residual,
            bound: tolerance,
            pass: residual <= tolerance,
        });
    };

    // fixed-point residual of w(z) over a grid of the validated domain
    let mut worst = 0.0f64;
    for k in 0..100 {
        let t = k as f64 / 99.0;
        let z = Complex64::new(-6.0 + 12.0 * t, 3.0 + 4.0 * t);
        let w = theory::stieltjes_w(z, 1.0)?;
        worst = worst.max(theory::fixed_point_residual(z, w, 1.0));
    }
    record("stieltjes_fixed_point", worst, 1e-12, &mut csv);

    // difference-quotient identity (z1 - z2)^{-1}(w1 - w2) = w1 w2 / (1 - v^2 w1 w2)
    let mut worst = 0.0f64;
    for k in 0..50 {
        let t = k as f64 / 49.0;
        let z1 = Complex64::new(-2.0 + 4.0 * t, 3.0 + t);
        let z2 = Complex64::new(1.5 - 3.0 * t, -3.2 - t);
        let w1 = theory::stieltjes_w(z1, 1.0)?;
        let w2 = theory::stieltjes_w(z2, 1.0)?;
        let lhs = (w1 - w2) / (z1 - z2);
        let rhs = w1 * w2 / (Complex64::new(1.0, 0.0) - w1 * w2);
        worst = worst.max((lhs - rhs).norm());
    }
    record("difference_quotient", worst, 1e-12, &mut csv);

    // Stein exactness: Gaussian law, cubic monomial, one cumulant term
    let stein = cumulant_expansion_residual(&ScalarLaw::Gaussian { variance: 1.0 }, &Monomial(3), 1)
        .map_err(|e| CliError::Run(e.to_string()))?;
    record("stein_exactness", stein, 1e-12, &mut csv);

    // |Im z| = 6: far enough out that the q=5 remainder genuinely shrinks
    let kernel = ResolventKernel(Complex64::new(0.0, 6.0));
    let law = ScalarLaw::rademacher();
    let r1 = cumulant_expansion_residual(&law, &kernel, 1).map_err(|e| CliError::Run(e.to_string()))?;
    let r5 = cumulant_expansion_residual(&law, &kernel, 5).map_err(|e| CliError::Run(e.to_string()))?;
    record("cumulant_remainder_decay", r5 / r1.max(f64::MIN_POSITIVE), 1.0, &mut csv);

    // matrix identities on seeded dense symmetric inputs
    let h1 = seeded_dense_symmetric(8, 31);
    let h2 = seeded_dense_symmetric(8, 32);
    let z1 = Complex64::new(0.4, 3.0);
    let z2 = Complex64::new(-0.7, -3.5);
    let res = resolvent_identity_residual(&h1, &h2, z1, z2).map_err(|e| CliError::Run(e.to_string()))?;
    record("resolvent_perturbation", res.perturbation, 1e-10, &mut csv);
    record("resolvent_product", res.product.unwrap_or(0.0), 1e-10, &mut csv);
    record("resolvent_neumann", res.neumann, 1e-10, &mut csv);

    let deriv = resolvent_derivative_residual(&h1, (1, 4), z1, 1e-5)
        .map_err(|e| CliError::Run(e.to_string()))?;
    record("resolvent_derivative_fd", deriv, 1e-6, &mut csv);

    Ok(ExperimentOutput { csv, checks, summary: serde_json::Map::new() })
}

fn seeded_dense_symmetric(n: usize, seed: u64) -> crate::ensemble::SymmetricMatrix {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut m = crate::ensemble::SymmetricMatrix::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            m.set(i, j, rng.gen_range(-1.0..1.0));
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_m_is_reported_by_path() {
        let text = r#"{
            "experiment": "covariance",
            "ensemble": {"n": 10, "p": 5.0, "law": {"kind": "gaussian", "v2": 1.0}},
            "points": [[0.0, 3.0], [0.0, -3.0]]
        }"#;
        let err = ExperimentConfig::from_json(text).unwrap_err();
        match err {
            CliError::Schema { path, .. } => assert_eq!(path, ".M"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn unknown_field_rejected() {
        let text = r#"{"experiment": "identities", "bogus": 1}"#;
        assert!(ExperimentConfig::from_json(text).is_err());
    }

    #[test]
    fn threads_priority_flag_over_env_over_config() {
        let text = r#"{"experiment": "identities", "threads": 3}"#;
        let cfg = ExperimentConfig::from_json(text).unwrap();
        std::env::set_var(ENV_THREADS, "5");
        let with_flag = resolve(&cfg, &Overrides { threads: Some(7), ..Default::default() });
        assert_eq!(with_flag.threads, Some(7));
        let with_env = resolve(&cfg, &Overrides::default());
        assert_eq!(with_env.threads, Some(5));
        std::env::remove_var(ENV_THREADS);
        let from_config = resolve(&cfg, &Overrides::default());
        assert_eq!(from_config.threads, Some(3));
    }

    #[test]
    fn density_table_header_and_width() {
        let bins = mc::density_table(&[0.0, 0.1, -0.1], 1.0);
        let csv = emit_density_table(&bins);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "bin_center,empirical_density,semicircle_density");
        assert_eq!(lines.count(), 80);
    }

    #[test]
    fn csv_floats_round_trip() {
        let x = std::f64::consts::PI * 1e-7;
        let parsed: f64 = fmt(x).parse().unwrap();
        assert_eq!(parsed, x);
    }

    #[test]
    fn universality_experiment_hits_reference() {
        let text = r#"{
            "experiment": "universality",
            "ensemble": {"n": 10000, "p": 1585.0, "law": {"kind": "gaussian", "v2": 1.0}},
            "s": 1.0,
            "output": "unused.csv"
        }"#;
        let cfg = ExperimentConfig::from_json(text).unwrap();
        let rc = resolve(&cfg, &Overrides::default());
        let out = execute(&rc).unwrap();
        assert!(out.checks.iter().all(|c| c.pass), "{:?}", out.checks);
        // the CSV carries the reference -1/pi^2 alongside the value
        assert!(out.csv.contains("density_density"));
        let row = out.csv.lines().nth(1).unwrap();
        let fields: Vec<&str> = row.split(',').collect();
        let value: f64 = fields[8].parse().unwrap();
        assert!((value - (-0.1013212)).abs() < 1e-5, "{value}");
    }

    #[test]
    fn identities_experiment_all_pass() {
        let cfg = ExperimentConfig::from_json(r#"{"experiment": "identities"}"#).unwrap();
        let rc = resolve(&cfg, &Overrides::default());
        let out = execute(&rc).unwrap();
        assert!(!out.checks.is_empty());
        for c in &out.checks {
            assert!(c.pass, "{} residual {} exceeds {}", c.name, c.actual, c.bound);
        }
    }
}
