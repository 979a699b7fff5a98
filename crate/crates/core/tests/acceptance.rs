//! Acceptance suite. Prints one line per criterion and exits non-zero if any fails.

mod common;

use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wavedens::basis::{BasisKind, BiorthogonalBasis, CoefficientIndex};
use wavedens::estimator::{
    estimate, threshold_practical, threshold_theoretical, variance_hat, variance_tilde, DensityEstimate,
    EstimatorConfig, KeptCoefficient, ThresholdMode,
};
use wavedens::risk::{
    calibration_sweep, ise, ise_with, mise_sweep, replication_seed, support_sweep, GridSpec, Method,
    SweepSettings, DEFAULT_RISK_STEP,
};
use wavedens::signals::{SignalSpec, TestSignal, BUMPS_QUOTED_NORMALIZER};

const MASTER_SEED: u64 = 20_240_917;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

/// Uniform plateau: γ ∈ {1.25, 1.5, 2}, Haar, n = 1024, 200 replications.
/// Pass: kept set is exactly {(−1,0) ↦ 1.0} in ≥ 95% of replications and mean n·MISE ≤ 0.05.
fn uniform_plateau() -> Verdict {
    let (n, reps) = (1024, 200);
    let signal = TestSignal::new(SignalSpec::Uniform01).unwrap();
    let gammas = [1.25, 1.5, 2.0];
    let settings = SweepSettings::new(n, reps, MASTER_SEED);
    let reports = calibration_sweep(&signal, BasisKind::Haar, &gammas, &settings).unwrap();
    let haar = Arc::new(BiorthogonalBasis::haar());
    let mut pass = true;
    let mut parts = Vec::new();
    for (&gamma, report) in gammas.iter().zip(&reports) {
        let config = EstimatorConfig::new(Arc::clone(&haar), ThresholdMode::PracticalGamma { gamma });
        let exact = (0..reps)
            .filter(|&rep| {
                let sample = signal.sample(replication_seed(MASTER_SEED, rep), n).unwrap();
                let est = estimate(&sample, &config).unwrap();
                est.kept.len() == 1
                    && est.kept.get(&CoefficientIndex::new(-1, 0)).map(|k| k.value) == Some(1.0)
            })
            .count();
        let share = exact as f64 / reps as f64;
        pass &= share >= 0.95 && report.n_mise() <= 0.05;
        parts.push(format!("γ={gamma}: father-only {:.1}%, n·MISE={:.4}", 100.0 * share, report.n_mise()));
    }
    verdict(pass, parts.join("; "))
}

/// Sub-γ blow-up: γ ∈ {0.25, 0.5, 0.75, 1.5}, same setup.
/// Pass: mean n·MISE strictly decreasing along γ, and n·MISE(0.25) ≥ 10·n·MISE(1.5) + 0.1.
fn sub_gamma_blow_up() -> Verdict {
    let signal = TestSignal::new(SignalSpec::Uniform01).unwrap();
    let gammas = [0.25, 0.5, 0.75, 1.5];
    let settings = SweepSettings::new(1024, 200, MASTER_SEED);
    let reports = calibration_sweep(&signal, BasisKind::Haar, &gammas, &settings).unwrap();
    let v: Vec<f64> = reports.iter().map(|r| r.n_mise()).collect();
    let decreasing = v.windows(2).all(|w| w[0] > w[1]);
    let gap = v[0] >= 10.0 * v[3] + 0.1;
    let shown: Vec<String> = gammas.iter().zip(&v).map(|(g, m)| format!("γ={g}: {m:.4}")).collect();
    verdict(decreasing && gap, format!("n·MISE {}", shown.join(", ")))
}

/// Curse of support: method S, n = 1024, 50 replications, d ∈ {10, 70}.
/// Pass: median ISE(70) ≤ 2 × median ISE(10).
fn curse_of_support() -> Verdict {
    let settings = SweepSettings::new(1024, 50, MASTER_SEED);
    let reports = support_sweep(&[10.0, 70.0], &[Method::S], &settings).unwrap();
    let (m10, m70) = (reports[0].median, reports[1].median);
    verdict(m70 <= 2.0 * m10, format!("median ISE d=10: {m10:.6}, d=70: {m70:.6}, ratio {:.3} (≤ 2)", m70 / m10))
}

/// Variance identity: 100 random vectors, n ∈ [2, 200]. Pass: relative error ≤ 1e−12.
fn variance_identity() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(MASTER_SEED);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(2..=200);
        let values: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let mut pairwise = 0.0;
        for i in 1..n {
            for l in 0..i {
                pairwise += (values[i] - values[l]).powi(2);
            }
        }
        pairwise /= (n * (n - 1)) as f64;
        let fast = variance_hat(&values).unwrap();
        worst = worst.max((fast - pairwise).abs() / pairwise);
    }
    verdict(worst <= 1e-12, format!("max relative error {worst:.2e} (≤ 1e-12)"))
}

/// Threshold ordering on 1000 random (σ̂², ‖ψ‖∞, n) triples for γ ∈ {1, 1.5, 3}. Pass: η_prac ≤ η_γ with no tolerance.
fn threshold_ordering() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(MASTER_SEED + 1);
    let mut violations = 0;
    for _ in 0..1000 {
        let s2 = rng.random_range(0.0..10.0);
        let sup = rng.random_range(0.01..50.0);
        let n = rng.random_range(2usize..1_000_000);
        let prac = threshold_practical(s2, sup, n, 1.0);
        for gamma in [1.0, 1.5, 3.0] {
            let th = threshold_theoretical(variance_tilde(s2, sup, n, gamma), sup, n, gamma);
            violations += (prac > th) as usize;
        }
    }
    verdict(violations == 0, format!("{violations} violations over 3000 comparisons"))
}

/// Basis checks. Pass: spline biorthogonality within 1e−3, Haar ∫ψ = 0 exactly, Haar frame equality within 1e−4 relative.
fn basis_checks() -> Verdict {
    let spline = BiorthogonalBasis::spline(12).unwrap();
    let bio = common::biorthogonality_error(&spline, 1.0 / 65536.0);
    let haar_mean = BiorthogonalBasis::haar().psi().integral();
    let frame = (0..5).map(common::haar_frame_gap).fold(0.0, f64::max);
    verdict(
        bio <= 1e-3 && haar_mean == 0.0 && frame <= 1e-4,
        format!("spline biorthogonality {bio:.2e} (≤ 1e-3), Haar ∫ψ = {haar_mean}, Haar frame gap {frame:.2e} (≤ 1e-4)"),
    )
}

/// Bumps constant. Pass: numeric normalizer within 2% of 0.284.
fn bumps_constant() -> Verdict {
    let c = TestSignal::new(SignalSpec::Bumps).unwrap().bumps_normalizer().unwrap();
    let rel = (c - BUMPS_QUOTED_NORMALIZER).abs() / BUMPS_QUOTED_NORMALIZER;
    verdict(rel <= 0.02, format!("normalizer {c:.6}, {:.2}% from 0.284 (≤ 2%)", 100.0 * rel))
}

fn haar_estimate(entries: &[(i32, i64, f64)]) -> DensityEstimate {
    DensityEstimate {
        kept: entries
            .iter()
            .map(|&(j, k, value)| (CoefficientIndex::new(j, k), KeptCoefficient { value, threshold: 0.0 }))
            .collect(),
        basis: Arc::new(BiorthogonalBasis::haar()),
        positive_part: true,
        n: 2,
        j0: 0,
        mode: ThresholdMode::Practical,
        oracle: false,
    }
}

/// Analytic ISE cases for f = 1_[0,1]: f̂ = f → 0, f̂ = 0 → 1, f̂ = 1_[0,½] → 0.5. Pass: each within 1e−6.
fn ise_oracle() -> Verdict {
    let u = TestSignal::new(SignalSpec::Uniform01).unwrap();
    let grid = GridSpec::new(-1.0, 2.0, DEFAULT_RISK_STEP).unwrap();
    let same = ise_with(&u, &grid, |xs| xs.iter().map(|&x| u.pdf(x)).collect()).unwrap();
    let zero = ise(&haar_estimate(&[]), &u, &grid).unwrap();
    let half = ise(&haar_estimate(&[(-1, 0, 0.5), (0, 0, 0.5)]), &u, &grid).unwrap();
    let errs = [same.abs(), (zero - 1.0).abs(), (half - 0.5).abs()];
    verdict(
        errs.iter().all(|&e| e <= 1e-6),
        format!("ISE {same:.3e} / {zero:.9} / {half:.9} (targets 0 / 1 / 0.5, tol 1e-6)"),
    )
}

/// Oracle sanity: Gauss(0.5, 0.25), spline, n = 4096, 50 replications. Pass: MISE(Practical) ≤ 20 × MISE(oracle).
fn oracle_sanity() -> Verdict {
    let signal = TestSignal::new(SignalSpec::Gauss { mean: 0.5, sd: 0.25 }).unwrap();
    let methods = [Method::S, Method::Oracle { basis: BasisKind::Spline }];
    let reports = mise_sweep(&signal, &methods, &SweepSettings::new(4096, 50, MASTER_SEED)).unwrap();
    let (prac, oracle) = (reports[0].mean, reports[1].mean);
    verdict(
        prac <= 20.0 * oracle,
        format!("MISE practical {prac:.3e}, oracle {oracle:.3e}, ratio {:.2} (≤ 20)", prac / oracle),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 9] = [
        ("uniform plateau", uniform_plateau),
        ("sub-gamma blow-up", sub_gamma_blow_up),
        ("curse-of-support robustness", curse_of_support),
        ("variance identity", variance_identity),
        ("threshold ordering", threshold_ordering),
        ("biorthogonality and moments", basis_checks),
        ("bumps constant", bumps_constant),
        ("ISE oracle", ise_oracle),
        ("oracle vs threshold", oracle_sanity),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = check();
        failed += !v.pass as usize;
        println!(
            "acceptance {} {:<28} {}  {}  [{:.1}s]",
            i + 1,
            name,
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
