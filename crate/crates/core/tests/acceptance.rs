//! Acceptance gate: seven desk-scale experiments, one pass/fail line each.
//! The statistical criteria use pinned seeds and the tolerance budgets stated
//! alongside each check; the deterministic ones are exact formula suites.

use num_complex::Complex64;

use dilute_wigner::ensemble::{EnsembleConfig, EntryLaw, SymmetricMatrix};
use dilute_wigner::identities::{
    cumulant_expansion_residual, resolvent_derivative_residual, resolvent_identity_residual,
    Monomial, ResolventKernel, ScalarLaw,
};
use dilute_wigner::mc;
use dilute_wigner::resolvent::SpectralPoint;
use dilute_wigner::theory::{self, TheoryParams};

fn report(criterion: &str, pass: bool, detail: &str) {
    println!("acceptance {criterion}: {} ({detail})", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "{criterion}: {detail}");
}

fn gaussian_cfg(n: usize, p: f64, seed: u64) -> EnsembleConfig {
    EnsembleConfig { n, p, law: EntryLaw::gaussian(1.0), seed }
}

fn conj_pair(im: f64) -> Vec<SpectralPoint> {
    vec![
        SpectralPoint::new(Complex64::new(0.0, im), 1.0).unwrap(),
        SpectralPoint::new(Complex64::new(0.0, -im), 1.0).unwrap(),
    ]
}

#[test]
fn criterion_1_semicircle_law() {
    let n = 2000;
    let cfg = gaussian_cfg(n, (n as f64).powf(0.8), 101);
    let study = mc::semicircle_study(&cfg, 20).unwrap();
    report(
        "1 semicircle KS distance",
        study.ks < 0.02,
        &format!("ks = {:.5}, bound 0.02, n = {n}, K = 20", study.ks),
    );
}

#[test]
fn criterion_2_variance_scaling() {
    let grid: Vec<EnsembleConfig> =
        [200usize, 400, 800].iter().map(|&n| gaussian_cfg(n, (n as f64).powf(0.8), 202)).collect();
    let scaling = mc::variance_vs_np(&grid, Complex64::new(0.0, 3.0), 5000, 100).unwrap();
    let pass = (-1.15..=-0.85).contains(&scaling.slope);
    report(
        "2 variance scaling slope",
        pass,
        &format!("slope = {:.4}, window [-1.15, -0.85], M = 5000 per config", scaling.slope),
    );
}

fn covariance_estimate(law: EntryLaw, seed: u64) -> mc::MCEstimate {
    let spec = mc::CampaignSpec {
        cfg: EnsembleConfig { n: 300, p: 54.0, law, seed },
        points: conj_pair(3.0),
        observables: vec![mc::Observable::G],
        samples: 200_000,
        batches: 100,
    };
    let result = mc::run_campaign(&spec).unwrap();
    result.covariances[&(0, 1)]
}

#[test]
fn criterion_3_covariance_leading_term() {
    let target = 3.8627e-7;
    let gauss = covariance_estimate(EntryLaw::gaussian(1.0), 303);
    let gap = (gauss.value - Complex64::new(target, 0.0)).norm();
    let bound = (4.0 * gauss.stderr).max(0.15 * target);
    report(
        "3a covariance vs leading term",
        gap <= bound,
        &format!("C = {:.4e}, target {target:.4e}, gap {gap:.2e}, bound {bound:.2e}", gauss.value.re),
    );

    let rad = covariance_estimate(EntryLaw::rademacher(1.0), 303);
    let ratio = gauss.value.re / rad.value.re;
    report(
        "3b fourth-moment sensitivity",
        ratio > 1.5,
        &format!("gaussian/rademacher covariance ratio = {ratio:.3}, must exceed 1.5"),
    );
}

#[test]
fn criterion_4_resolvent_predictions() {
    let n = 1000;
    let cfg = gaussian_cfg(n, (n as f64).powf(0.8), 404);
    let rows = mc::prediction_sweep(&cfg, &conj_pair(3.0), 200, 20).unwrap();
    let tolerance = 0.012; // 3/p + 4 stderr budget, rounded up
    for name in ["g", "trG2", "B12", "U12"] {
        let row = rows
            .iter()
            .find(|r| r.observable == name && r.z1.im > 0.0)
            .unwrap_or_else(|| panic!("missing row {name}"));
        report(
            &format!("4 prediction {name}"),
            row.gap <= tolerance,
            &format!(
                "mc = {:.5}{:+.5}i, theory = {:.5}{:+.5}i, gap {:.4}, tol {tolerance}",
                row.mc_value.re, row.mc_value.im, row.theory.re, row.theory.im, row.gap
            ),
        );
    }
}

#[test]
fn criterion_5_universality_limit() {
    let reference = theory::universality_limit(1.0).unwrap();
    let law = EntryLaw::gaussian(1.0);
    let errors: Vec<f64> = [100usize, 1000, 10_000]
        .iter()
        .map(|&n| {
            let p = if n == 10_000 { 1585.0 } else { (n as f64).powf(0.8) };
            let params = TheoryParams::from_law(&law, n, p);
            let half = 1.0 / (2.0 * n as f64);
            (theory::density_density_leading(-half, half, &params).unwrap() - reference).abs()
        })
        .collect();
    report(
        "5a universality value",
        errors[2] <= 1e-5,
        &format!("|value - (-1/pi^2)| = {:.2e} at n = 10^4, bound 1e-5", errors[2]),
    );
    report(
        "5b universality convergence",
        errors[0] > errors[1] && errors[1] > errors[2],
        &format!("errors over n = 10^2, 10^3, 10^4: {:.2e}, {:.2e}, {:.2e}", errors[0], errors[1], errors[2]),
    );
}

#[test]
fn criterion_6_identity_suites() {
    // Stieltjes transform fixed point on a grid of the validated domain
    let mut worst = 0.0f64;
    for k in 0..100 {
        let t = k as f64 / 99.0;
        let z = Complex64::new(-6.0 + 12.0 * t, if k % 2 == 0 { 3.0 + 4.0 * t } else { -3.0 - 4.0 * t });
        let w = theory::stieltjes_w(z, 1.3).unwrap();
        worst = worst.max(theory::fixed_point_residual(z, w, 1.3));
    }
    report("6a stieltjes fixed point", worst <= 1e-12, &format!("max residual {worst:.2e} over 100 points"));

    // difference-quotient identity
    let mut worst = 0.0f64;
    for k in 0..50 {
        let t = k as f64 / 49.0;
        let (z1, z2) = (Complex64::new(-2.0 + 4.0 * t, 3.0 + t), Complex64::new(1.5 - 3.0 * t, -3.2 - t));
        let (w1, w2) = (theory::stieltjes_w(z1, 1.0).unwrap(), theory::stieltjes_w(z2, 1.0).unwrap());
        let lhs = (w1 - w2) / (z1 - z2);
        let rhs = w1 * w2 / (Complex64::new(1.0, 0.0) - w1 * w2);
        worst = worst.max((lhs - rhs).norm());
    }
    report("6b difference quotient", worst <= 1e-12, &format!("max residual {worst:.2e}"));

    // finite-difference check of the resolvent entry derivative
    let h = random_symmetric(8, 61);
    let deriv = resolvent_derivative_residual(&h, (1, 4), Complex64::new(0.4, 3.0), 1e-5).unwrap();
    report("6c derivative formula", deriv <= 1e-6, &format!("residual {deriv:.2e} at step 1e-5 on 8x8"));

    // matrix resolvent identities
    let h2 = random_symmetric(8, 62);
    let res =
        resolvent_identity_residual(&h, &h2, Complex64::new(0.4, 3.0), Complex64::new(-0.7, -3.5)).unwrap();
    let worst = res.perturbation.max(res.product.unwrap_or(0.0)).max(res.neumann);
    report("6d matrix identities", worst <= 1e-10, &format!("max residual {worst:.2e}"));

    // cumulant expansion: Stein exactness and remainder decay
    let stein =
        cumulant_expansion_residual(&ScalarLaw::Gaussian { variance: 1.0 }, &Monomial(3), 1).unwrap();
    let kernel = ResolventKernel(Complex64::new(0.0, 6.0));
    let decay: Vec<f64> = [1usize, 3, 5]
        .iter()
        .map(|&q| cumulant_expansion_residual(&ScalarLaw::rademacher(), &kernel, q).unwrap())
        .collect();
    let pass = stein <= 1e-12 && decay[0] > decay[1] && decay[1] > decay[2];
    report(
        "6e cumulant expansion",
        pass,
        &format!("stein {stein:.2e}, remainders {:.2e} > {:.2e} > {:.2e}", decay[0], decay[1], decay[2]),
    );
}

#[test]
fn criterion_7_deterministic_output() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("campaign.json");
    std::fs::write(
        &config,
        r#"{
            "experiment": "covariance",
            "ensemble": {"n": 60, "p": 24.0, "law": {"kind": "gaussian", "v2": 1.0}},
            "points": [[0.0, 3.0], [0.0, -3.0]],
            "M": 500,
            "batches": 25,
            "seed": 707
        }"#,
    )
    .unwrap();
    let bin = env!("CARGO_BIN_EXE_dilute-wigner");
    for threads in ["1", "3"] {
        let status = std::process::Command::new(bin)
            .arg(&config)
            .args(["--threads", threads, "--output"])
            .arg(dir.path().join(format!("t{threads}.csv")))
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = std::fs::read(dir.path().join("t1.csv")).unwrap();
    let b = std::fs::read(dir.path().join("t3.csv")).unwrap();
    report(
        "7 determinism across thread counts",
        a == b,
        &format!("{} bytes, 1 vs 3 worker threads, same seed", a.len()),
    );
}

fn random_symmetric(n: usize, seed: u64) -> SymmetricMatrix {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut m = SymmetricMatrix::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            m.set(i, j, rng.gen_range(-1.0..1.0));
        }
    }
    m
}
