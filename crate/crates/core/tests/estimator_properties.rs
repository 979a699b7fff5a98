use std::sync::{Arc, OnceLock};

use proptest::prelude::*;
use wavedens::basis::{BiorthogonalBasis, CoefficientIndex};
use wavedens::estimator::{
    empirical_coefficients, estimate, oracle_estimate, variance_hat, EstimatorConfig, ThresholdMode,
};
use wavedens::sample::Sample;
use wavedens::signals::{SignalSpec, TestSignal};

fn haar() -> Arc<BiorthogonalBasis> {
    static B: OnceLock<Arc<BiorthogonalBasis>> = OnceLock::new();
    Arc::clone(B.get_or_init(|| Arc::new(BiorthogonalBasis::haar())))
}

fn spline() -> Arc<BiorthogonalBasis> {
    static B: OnceLock<Arc<BiorthogonalBasis>> = OnceLock::new();
    Arc::clone(B.get_or_init(|| Arc::new(BiorthogonalBasis::spline(12).unwrap())))
}

fn signal_strategy() -> impl Strategy<Value = SignalSpec> {
    prop_oneof![
        Just(SignalSpec::Uniform01),
        Just(SignalSpec::Gauss { mean: 0.5, sd: 0.25 }),
        (1.0f64..20.0).prop_map(|d| SignalSpec::MixtureGd { d }),
        Just(SignalSpec::MixtureHk { k: 3.0 }),
        Just(SignalSpec::Bumps),
    ]
}

fn mode_strategy() -> impl Strategy<Value = ThresholdMode> {
    prop_oneof![
        Just(ThresholdMode::Practical),
        (0.1f64..3.0).prop_map(|gamma| ThresholdMode::PracticalGamma { gamma }),
        (0.5f64..3.0).prop_map(ThresholdMode::theoretical),
    ]
}

/// The threshold written out from scratch for one coefficient.
fn reference_threshold(values: &[f64], sup: f64, mode: ThresholdMode) -> f64 {
    let n = values.len() as f64;
    let ln_n = n.ln();
    let s2 = variance_hat(values).unwrap();
    match mode {
        ThresholdMode::Practical => (2.0 * s2 * ln_n / n).sqrt() + 2.0 * sup * ln_n / (3.0 * n),
        ThresholdMode::PracticalGamma { gamma } => {
            (2.0 * gamma * s2 * ln_n / n).sqrt() + 2.0 * gamma * sup * ln_n / (3.0 * n)
        }
        ThresholdMode::Theoretical { gamma, .. } => {
            let tilde = s2
                + 2.0 * sup * (2.0 * gamma * s2 * ln_n / n).sqrt()
                + 8.0 * gamma * sup * sup * ln_n / n;
            (2.0 * gamma * tilde * ln_n / n).sqrt() + 2.0 * sup * gamma * ln_n / (3.0 * n)
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn keep_rule_is_sound(
        spec in signal_strategy(), mode in mode_strategy(), seed in any::<u64>(),
        n in 2usize..300, use_spline in any::<bool>(),
    ) {
        let signal = TestSignal::new(spec).unwrap();
        let sample = signal.sample(seed, n).unwrap();
        let basis = if use_spline { spline() } else { haar() };
        let config = EstimatorConfig::new(Arc::clone(&basis), mode);
        let coeffs = empirical_coefficients(&sample, &config).unwrap();
        let est = estimate(&sample, &config).unwrap();
        for c in &coeffs {
            let values: Vec<f64> =
                sample.as_slice().iter().map(|&x| basis.eval_decomposition(c.idx, x)).collect();
            let eta = reference_threshold(&values, basis.sup_norm(c.idx), mode);
            prop_assert!((eta - c.threshold).abs() <= 1e-12 * eta);
            match est.kept.get(&c.idx) {
                Some(k) => {
                    prop_assert!(c.beta_hat.abs() >= c.threshold);
                    prop_assert_eq!(k.value, c.beta_hat);
                    prop_assert!(k.value.abs() >= k.threshold);
                }
                None => prop_assert!(c.beta_hat.abs() < c.threshold),
            }
        }
        prop_assert_eq!(est.positive_part, !matches!(mode, ThresholdMode::Theoretical { .. }));
    }

    #[test]
    fn deterministic_and_serial_equals_parallel(
        spec in signal_strategy(), mode in mode_strategy(), seed in any::<u64>(), n in 2usize..400,
    ) {
        let sample = TestSignal::new(spec).unwrap().sample(seed, n).unwrap();
        let config = EstimatorConfig::new(spline(), mode);
        let a = estimate(&sample, &config).unwrap();
        let b = estimate(&sample, &config).unwrap();
        let c = estimate(&sample, &config.clone().serial()).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(&a, &c);
        prop_assert_eq!(a.to_json().unwrap(), c.to_json().unwrap());
    }

    #[test]
    fn sparsity_bound(spec in signal_strategy(), seed in any::<u64>(), n in 2usize..500, use_spline in any::<bool>()) {
        let sample = TestSignal::new(spec).unwrap().sample(seed, n).unwrap();
        let basis = if use_spline { spline() } else { haar() };
        let config = EstimatorConfig::new(Arc::clone(&basis), ThresholdMode::Practical);
        let coeffs = empirical_coefficients(&sample, &config).unwrap();
        let j0 = config.finest_level(n) as f64;
        prop_assert!(coeffs.len() as f64 <= (j0 + 2.0) * (n as f64 + basis.max_support_width()));
    }

    #[test]
    fn zero_outside_kept_supports(spec in signal_strategy(), seed in any::<u64>(), n in 2usize..300, probe in 0.0f64..1.0) {
        let sample = TestSignal::new(spec).unwrap().sample(seed, n).unwrap();
        let est = estimate(&sample, &EstimatorConfig::new(spline(), ThresholdMode::PracticalGamma { gamma: 0.5 })).unwrap();
        let outside = |x: f64| est.kept.keys().all(|&i| {
            let (lo, hi) = est.basis.reconstruction_support(i);
            x < lo || x > hi
        });
        // Level −1 translates reach furthest: the dual scaling support is 5 wide.
        let w = 5.0;
        let xs = [
            sample.min() - w - 1.0 - probe * 100.0,
            sample.max() + w + 1.0 + probe * 100.0,
            sample.min() + probe * (sample.max() - sample.min()),
        ];
        for x in xs {
            if outside(x) {
                prop_assert_eq!(est.eval(x), 0.0);
                prop_assert_eq!(est.evaluate(&[x])[0], 0.0);
            }
        }
        prop_assert!(outside(xs[0]) && outside(xs[1]));
    }
}

#[test]
fn uniform_plateau_keeps_only_the_father() {
    let signal = TestSignal::new(SignalSpec::Uniform01).unwrap();
    let config = EstimatorConfig::new(haar(), ThresholdMode::PracticalGamma { gamma: 1.5 });
    let mut exact = 0;
    for seed in 0..20 {
        let est = estimate(&signal.sample(seed, 1024).unwrap(), &config).unwrap();
        let father_only = est.kept.len() == 1
            && est.kept.get(&CoefficientIndex::new(-1, 0)).map(|k| k.value) == Some(1.0);
        exact += father_only as usize;
    }
    assert!(exact >= 19, "{exact}/20");
}

#[test]
fn tiny_samples_are_fine() {
    for n in 2..=4 {
        let s = Sample::new((0..n).map(|i| i as f64 * 0.3).collect()).unwrap();
        for mode in [ThresholdMode::Practical, ThresholdMode::theoretical(1.0)] {
            let est = estimate(&s, &EstimatorConfig::new(spline(), mode)).unwrap();
            assert!(est.kept.values().all(|k| k.threshold > 0.0));
        }
    }
}

#[test]
fn oracle_on_uniform_keeps_father_only() {
    let signal = TestSignal::new(SignalSpec::Uniform01).unwrap();
    let sample = signal.sample(4, 500).unwrap();
    let a = oracle_estimate(&sample, &signal, &EstimatorConfig::new(haar(), ThresholdMode::Practical)).unwrap();
    let keys: Vec<_> = a.kept.keys().copied().collect();
    assert_eq!(keys, vec![CoefficientIndex::new(-1, 0)]);
    assert!(!a.positive_part && a.oracle);
    // Selection does not look at the threshold mode.
    let b = oracle_estimate(
        &sample,
        &signal,
        &EstimatorConfig::new(haar(), ThresholdMode::PracticalGamma { gamma: 9.0 }),
    )
    .unwrap();
    assert_eq!(a.kept, b.kept);
}

#[test]
fn oracle_grows_with_n() {
    let signal = TestSignal::new(SignalSpec::Gauss { mean: 0.5, sd: 0.25 }).unwrap();
    let config = EstimatorConfig::new(spline(), ThresholdMode::Practical);
    let sizes: Vec<usize> = [256, 1024, 4096]
        .iter()
        .map(|&n| oracle_estimate(&signal.sample(8, n).unwrap(), &signal, &config).unwrap().kept.len())
        .collect();
    assert!(sizes[0] < sizes[1] && sizes[1] < sizes[2], "{sizes:?}");
}

#[test]
fn rescaled_sample_matches_predivided() {
    let raw = Sample::new(vec![250.0, 500.0, 125.0, 375.0, 610.0, 80.0]).unwrap();
    let divided = Sample::new(raw.as_slice().iter().map(|x| x / 250.0).collect()).unwrap();
    let config = EstimatorConfig::new(haar(), ThresholdMode::PracticalGamma { gamma: 0.2 });
    assert_eq!(
        estimate(&raw.rescaled(250.0).unwrap(), &config).unwrap(),
        estimate(&divided, &config).unwrap()
    );
}
