mod common;

use common::Rng;
use proptest::prelude::*;
use tem_core::encoders::{encode_crossing, EncoderConfig, SpikeTrain, TestFunction};
use tem_core::noiselab::{
    default_epsilon_grid, linear_fit, quantize_train, random_coefficients, run_experiment,
    run_experiment_sequential, run_trial, NoiseExperimentConfig, NoiseLab,
};
use tem_core::Error;

fn small(trials: usize, grid: Vec<f64>) -> NoiseExperimentConfig {
    NoiseExperimentConfig {
        trials,
        epsilon_grid: grid,
        ..Default::default()
    }
}

#[test]
fn quantize_rounds_wraps_and_merges() {
    let train = SpikeTrain::new(10, vec![-5.0, -4.96, 0.12, 0.13, 4.97]).unwrap();
    let q = quantize_train(&train, 0.1);
    // −4.96 and 4.97 both land on −5.0 after wrapping; 0.12 and 0.13 on 0.1.
    assert_eq!(q.len(), 2);
    assert!((q.times()[0] + 5.0).abs() < 1e-12);
    assert!((q.times()[1] - 0.1).abs() < 1e-12);
    assert_eq!(quantize_train(&train, 0.0), train);
}

#[test]
fn default_grid() {
    let g = default_epsilon_grid();
    assert_eq!(g.len(), 13);
    assert!((g[0] - 1e-6).abs() < 1e-18);
    assert!((g[12] - 1e-2).abs() < 1e-14);
    assert!(g.windows(2).all(|w| w[1] > w[0]));
    NoiseExperimentConfig::default().validate().unwrap();
}

#[test]
fn config_validation() {
    let mut cfg = small(1, vec![0.6]);
    assert!(matches!(cfg.validate(), Err(Error::InvalidInput(_))));
    cfg.epsilon_grid = vec![];
    assert!(cfg.validate().is_err());
    cfg = small(0, vec![0.0]);
    assert!(cfg.validate().is_err());
    cfg = small(1, vec![0.0]);
    cfg.test_function = TestFunction::Ramp { span: 1.0 };
    assert!(cfg.validate().is_err());
    let json = r#"{"K": 50, "trials": 3, "bogus": 1}"#;
    assert!(serde_json::from_str::<NoiseExperimentConfig>(json).is_err());
    let json = r#"{"K": 50, "trials": 3, "decoder": "pv"}"#;
    let cfg: NoiseExperimentConfig = serde_json::from_str(json).unwrap();
    assert_eq!(cfg.trials, 3);
    assert_eq!(cfg.rng_seed, 2024);
}

#[test]
fn coefficients_are_uniform_and_reproducible() {
    let a = random_coefficients(5, 3, 2000);
    assert_eq!(a, random_coefficients(5, 3, 2000));
    assert_ne!(a, random_coefficients(5, 4, 2000));
    assert!(a.iter().all(|v| (-1.0..1.0).contains(v)));
    let mean = a.iter().sum::<f64>() / a.len() as f64;
    let var = a.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / a.len() as f64;
    assert!(mean.abs() < 0.05);
    assert!((var - 1.0 / 3.0).abs() < 0.03);
}

#[test]
fn zero_step_trial_is_exact() {
    let recs = run_trial(&small(1, vec![0.0]), 0).unwrap();
    assert_eq!(recs.len(), 1);
    assert_eq!(recs[0].time_error_l2, 0.0);
    assert!(recs[0].signal_error_l2 <= 1e-6);
    assert!(recs[0].failure.is_none());
    let s = run_experiment(&small(1, vec![0.0])).unwrap();
    assert_eq!(s.records.len(), 1);
    assert!(s.fit.is_none());
}

#[test]
fn quantization_error_bounded_by_half_step() {
    let lab = NoiseLab::new(small(1, vec![1e-3])).unwrap();
    for trial in 0..5 {
        let sig = lab.random_signal(trial).unwrap();
        let train = encode_crossing(&sig, &lab.config().test_function, &EncoderConfig::default())
            .unwrap();
        for eps in [1e-5, 1e-3, 0.1] {
            let q = quantize_train(&train, eps);
            for t in q.times() {
                let k = (t / eps).round();
                assert!((t - k * eps).abs() < 1e-9 * (1.0 + t.abs()));
            }
            // Every original spike is within ε/2 of some quantized one.
            for t in train.times() {
                let d = q
                    .times()
                    .iter()
                    .map(|u| {
                        let d = (u - t).rem_euclid(50.0);
                        d.min(50.0 - d)
                    })
                    .fold(f64::INFINITY, f64::min);
                assert!(d <= eps / 2.0 + 1e-12);
            }
        }
    }
}

#[test]
fn records_are_consistent() {
    let grid = vec![1e-5, 1e-4, 1e-3];
    let recs = run_trial(&small(1, grid.clone()), 3).unwrap();
    assert_eq!(recs.len(), 3);
    for (r, e) in recs.iter().zip(&grid) {
        assert_eq!(r.epsilon, *e);
        assert_eq!(r.trial, 3);
        assert_eq!(r.seed, 2024);
        assert!(r.time_error_inf <= e / 2.0 + 1e-15);
        assert!(r.time_error_l2 <= r.time_error_inf * (r.spikes as f64 + 2.0).sqrt());
        assert!(r.density_preserved);
    }
}

#[test]
fn halving_step_halves_error() {
    let cfg = small(20, vec![2e-4, 1e-4]);
    let s = run_experiment(&cfg).unwrap();
    let e0 = s.per_epsilon[0].mean_signal_error;
    let e1 = s.per_epsilon[1].mean_signal_error;
    let ratio = e1 / e0;
    assert!((ratio - 0.5).abs() < 0.125, "ratio {ratio}");
}

#[test]
fn parallel_matches_sequential() {
    let cfg = small(12, vec![1e-5, 1e-3]);
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment_sequential(&cfg).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    assert_eq!(a.records, b.records);
    assert_eq!(run_experiment(&cfg).unwrap().to_csv(), a.to_csv());
}

#[test]
fn summary_statistics() {
    let cfg = small(30, default_epsilon_grid());
    let s = run_experiment(&cfg).unwrap();
    assert_eq!(s.records.len(), 30 * 13);
    assert_eq!(s.failures, 0);
    let n: usize = s.bins.iter().map(|b| b.n).sum();
    assert_eq!(n, s.records.len());
    for b in &s.bins {
        assert!(b.ci_low <= b.mean_err && b.mean_err <= b.ci_high);
        assert!(b.n > 0);
    }
    let fit = s.fit.unwrap();
    assert!(fit.r_squared > 0.95);
    assert!(fit.slope > 0.0);
    let csv = s.to_csv();
    assert!(csv.lines().next().unwrap().contains("mean_err"));
    assert_eq!(csv.lines().count(), s.bins.len() + 1);
}

#[test]
fn linear_fit_oracle() {
    let mut rng = Rng::new(40);
    let x: Vec<f64> = (0..50).map(|_| rng.uniform(0.0, 10.0)).collect();
    let y: Vec<f64> = x.iter().map(|v| 3.0 * v - 2.0).collect();
    let f = linear_fit(&x, &y).unwrap();
    assert!((f.slope - 3.0).abs() < 1e-12);
    assert!((f.intercept + 2.0).abs() < 1e-11);
    assert!((f.r_squared - 1.0).abs() < 1e-12);
    assert!(linear_fit(&[1.0], &[2.0]).is_none());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quantized_times_stay_in_window(
        mut times in prop::collection::vec(-10.0f64..10.0, 1..40),
        eps in 1e-4f64..0.5,
    ) {
        times.sort_by(f64::total_cmp);
        times.dedup();
        let train = SpikeTrain::new(20, times).unwrap();
        let q = quantize_train(&train, eps);
        prop_assert!(!q.is_empty());
        prop_assert!(q.len() <= train.len());
        prop_assert!(q.times().iter().all(|t| (-10.0..10.0).contains(t)));
        prop_assert!(q.times().windows(2).all(|w| w[0] < w[1]));
    }
}
