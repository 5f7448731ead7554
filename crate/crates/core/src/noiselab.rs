//! Timing-quantization experiments: encode random signals, round the spike
//! times to a grid εZ, decode from the perturbed times and aggregate the
//! signal error against the time error.
//!
//! Randomness: trial `i` draws from `ChaCha8Rng::seed_from_u64(rng_seed)`
//! switched to stream `i`. Each coefficient is `2u − 1` with
//! `u = (next_u64() >> 11) · 2⁻⁵³`.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::decoders::{decode_with, default_tau, DecoderKind, IterConfig};
use crate::encoders::{
    density_report, encode_crossing, sample_amplitudes, EncoderConfig, SpikeTrain, TestFunction,
};
use crate::error::{Error, Result};
use crate::generators::GeneratorSpec;
use crate::siss::{PeriodicSignal, PeriodicSpace};

/// Number of log-spaced bins over the positive time errors.
pub const LOG_BINS: usize = 30;

/// Environment variable capping worker threads (0 or unset = automatic).
pub const THREADS_ENV: &str = "NOISELAB_THREADS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseExperimentConfig {
    #[serde(rename = "K")]
    pub k: usize,
    /// Cubic B-spline of period K when absent.
    pub generator: Option<GeneratorSpec>,
    pub test_function: TestFunction,
    pub trials: usize,
    pub epsilon_grid: Vec<f64>,
    pub rng_seed: u64,
    pub decoder: DecoderKind,
}

impl Default for NoiseExperimentConfig {
    fn default() -> Self {
        Self {
            k: 50,
            generator: None,
            test_function: TestFunction::Cosine {
                amplitude: 1.1,
                period: 1.0,
            },
            trials: 1000,
            epsilon_grid: default_epsilon_grid(),
            rng_seed: 2024,
            decoder: DecoderKind::PinvPlain,
        }
    }
}

/// 13 geometric steps from 1e−6 to 1e−2.
pub fn default_epsilon_grid() -> Vec<f64> {
    (0..13).map(|i| 10f64.powf(-6.0 + i as f64 / 3.0)).collect()
}

impl NoiseExperimentConfig {
    pub fn generator_spec(&self) -> GeneratorSpec {
        self.generator
            .clone()
            .unwrap_or_else(|| GeneratorSpec::bspline(3, self.k))
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidInput("trials must be at least 1".into()));
        }
        if self.epsilon_grid.is_empty() {
            return Err(Error::InvalidInput("epsilon grid is empty".into()));
        }
        if let Some(g) = &self.generator {
            if g.period != self.k {
                return Err(Error::InvalidInput(format!(
                    "generator period {} differs from K = {}",
                    g.period, self.k
                )));
            }
        }
        if self.test_function.has_feedback() {
            return Err(Error::InvalidInput(
                "quantization experiments need a test function without feedback".into(),
            ));
        }
        let limit = 0.5 * self.test_function.time_scale();
        if let Some(e) = self
            .epsilon_grid
            .iter()
            .find(|e| !(e.is_finite() && **e >= 0.0 && **e < limit))
        {
            return Err(Error::InvalidInput(format!(
                "quantization step {e} outside [0, {limit})"
            )));
        }
        Ok(())
    }
}

/// Round-to-nearest on εZ, wrapped back into [−K/2, K/2), sorted, with
/// equal neighbours merged.
pub fn quantize_train(train: &SpikeTrain, epsilon: f64) -> SpikeTrain {
    quantize_with_errors(train, epsilon).0
}

fn quantize_with_errors(train: &SpikeTrain, epsilon: f64) -> (SpikeTrain, Vec<f64>) {
    if epsilon <= 0.0 {
        return (train.clone(), vec![0.0; train.len()]);
    }
    let k = train.period() as f64;
    let half = k / 2.0;
    let rounded: Vec<f64> = train
        .times()
        .iter()
        .map(|t| (t / epsilon).round() * epsilon)
        .collect();
    let errors = rounded.iter().zip(train.times()).map(|(a, b)| a - b).collect();
    let mut times: Vec<f64> = rounded
        .into_iter()
        .map(|t| {
            if t >= half {
                t - k
            } else if t < -half {
                t + k
            } else {
                t
            }
        })
        .collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let q = SpikeTrain::new(train.period(), times).expect("quantized times stay in the window");
    (q, errors)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub seed: u64,
    pub trial: usize,
    pub epsilon: f64,
    pub spikes: usize,
    pub time_error_l2: f64,
    pub time_error_inf: f64,
    #[serde(rename = "signal_error_L2")]
    pub signal_error_l2: f64,
    /// Quantized max gap ≤ clean max gap + ε.
    pub density_preserved: bool,
    /// Decoder failure message, if the perturbed system could not be solved.
    pub failure: Option<String>,
}

/// K coefficients uniform on [−1, 1] from stream `stream` of `seed`.
pub fn random_coefficients(seed: u64, stream: u64, k: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    (0..k)
        .map(|_| {
            let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            2.0 * u - 1.0
        })
        .collect()
}

/// Rescales so the grid sup-norm estimate is 1 (zero signals unchanged).
pub fn normalize_sup(sig: PeriodicSignal) -> Result<PeriodicSignal> {
    let sup = sig.sup_estimate()?;
    if sup == 0.0 {
        return Ok(sig);
    }
    let coeffs = sig.coeffs.iter().map(|c| c / sup).collect();
    PeriodicSignal::new(sig.generator, coeffs)
}

/// One configured experiment with its space and τ precomputed.
#[derive(Debug, Clone)]
pub struct NoiseLab {
    cfg: NoiseExperimentConfig,
    space: PeriodicSpace,
    tau: f64,
}

impl NoiseLab {
    pub fn new(cfg: NoiseExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let space = PeriodicSpace::new(cfg.generator_spec())?;
        let tau = default_tau(&space)?;
        Ok(Self { cfg, space, tau })
    }

    pub fn config(&self) -> &NoiseExperimentConfig {
        &self.cfg
    }

    pub fn space(&self) -> &PeriodicSpace {
        &self.space
    }

    /// Uniform[−1, 1] coefficients normalized to unit sup-norm estimate.
    pub fn random_signal(&self, trial: usize) -> Result<PeriodicSignal> {
        let coeffs = random_coefficients(self.cfg.rng_seed, trial as u64, self.cfg.k);
        normalize_sup(self.space.signal(coeffs)?)
    }

    /// Runs one trial at every ε of the grid.
    pub fn trial(&self, trial: usize) -> Result<Vec<TrialRecord>> {
        let sig = self.random_signal(trial)?;
        let phi = self.cfg.test_function;
        let clean = encode_crossing(&sig, &phi, &EncoderConfig::default())?;
        let clean_gap = density_report(&clean)?.max_gap;
        let iter = IterConfig::default();
        Ok(self
            .cfg
            .epsilon_grid
            .iter()
            .map(|&eps| {
                let (q, errs) = quantize_with_errors(&clean, eps);
                let time_error_l2 = errs.iter().map(|e| e * e).sum::<f64>().sqrt();
                let time_error_inf = errs.iter().fold(0.0f64, |m, e| m.max(e.abs()));
                let q_gap = density_report(&q).map(|r| r.max_gap).unwrap_or(f64::INFINITY);
                let y = sample_amplitudes(&phi, &q);
                let (signal_error_l2, failure) =
                    match decode_with(self.cfg.decoder, &self.space, &q, &y, self.tau, &iter) {
                        Ok(r) => {
                            let d: Vec<f64> =
                                r.coeffs.iter().zip(&sig.coeffs).map(|(a, b)| a - b).collect();
                            (self.space.coeff_norm(&d), None)
                        }
                        Err(e) => (f64::NAN, Some(e.to_string())),
                    };
                TrialRecord {
                    seed: self.cfg.rng_seed,
                    trial,
                    epsilon: eps,
                    spikes: q.len(),
                    time_error_l2,
                    time_error_inf,
                    signal_error_l2,
                    density_preserved: q_gap <= clean_gap + eps + 1e-12,
                    failure,
                }
            })
            .collect())
    }

    /// All trials, on the rayon pool when the `parallel` feature is on.
    pub fn run(&self) -> Result<ExperimentSummary> {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            let work = || -> Result<Vec<Vec<TrialRecord>>> {
                (0..self.cfg.trials)
                    .into_par_iter()
                    .map(|i| self.trial(i))
                    .collect()
            };
            let threads = std::env::var(THREADS_ENV)
                .ok()
                .and_then(|v| v.trim().parse::<usize>().ok())
                .unwrap_or(0);
            let records = if threads > 0 {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build()
                    .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?
                    .install(work)?
            } else {
                work()?
            };
            Ok(summarize(&self.cfg, records.into_iter().flatten().collect()))
        }
        #[cfg(not(feature = "parallel"))]
        self.run_sequential()
    }

    /// All trials on the calling thread.
    pub fn run_sequential(&self) -> Result<ExperimentSummary> {
        let mut records = Vec::new();
        for i in 0..self.cfg.trials {
            records.extend(self.trial(i)?);
        }
        Ok(summarize(&self.cfg, records))
    }
}

pub fn run_trial(cfg: &NoiseExperimentConfig, trial_index: usize) -> Result<Vec<TrialRecord>> {
    NoiseLab::new(cfg.clone())?.trial(trial_index)
}

pub fn run_experiment(cfg: &NoiseExperimentConfig) -> Result<ExperimentSummary> {
    NoiseLab::new(cfg.clone())?.run()
}

pub fn run_experiment_sequential(cfg: &NoiseExperimentConfig) -> Result<ExperimentSummary> {
    NoiseLab::new(cfg.clone())?.run_sequential()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    /// Lower and upper edge on the time-error axis.
    pub lo: f64,
    pub hi: f64,
    /// Mean time error of the members.
    pub bin_center: f64,
    pub mean_err: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonStats {
    pub epsilon: f64,
    pub n: usize,
    pub failures: usize,
    pub mean_time_error_l2: f64,
    pub mean_time_error_inf: f64,
    pub mean_signal_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub bins: Vec<Bin>,
    pub per_epsilon: Vec<EpsilonStats>,
    /// OLS fit of bin mean error against bin center.
    pub fit: Option<LinearFit>,
    pub failures: usize,
    pub density_violations: usize,
    pub records: Vec<TrialRecord>,
}

fn mean_ci(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, 1.96 * (var / n).sqrt())
}

/// Ordinary least squares y ≈ slope·x + intercept.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LinearFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

/// Bins successful records by time_error_l2: an exact-zero bin plus
/// `LOG_BINS` log-spaced bins over the positive range. Empty bins are
/// omitted.
pub fn summarize(cfg: &NoiseExperimentConfig, mut records: Vec<TrialRecord>) -> ExperimentSummary {
    records.sort_by(|a, b| {
        a.epsilon
            .total_cmp(&b.epsilon)
            .then(a.trial.cmp(&b.trial))
    });
    let ok: Vec<&TrialRecord> = records.iter().filter(|r| r.failure.is_none()).collect();
    let failures = records.len() - ok.len();
    let density_violations = records.iter().filter(|r| !r.density_preserved).count();

    let mut bins = Vec::new();
    let zero: Vec<&&TrialRecord> = ok.iter().filter(|r| r.time_error_l2 == 0.0).collect();
    if !zero.is_empty() {
        let errs: Vec<f64> = zero.iter().map(|r| r.signal_error_l2).collect();
        let (m, h) = mean_ci(&errs);
        bins.push(Bin {
            lo: 0.0,
            hi: 0.0,
            bin_center: 0.0,
            mean_err: m,
            ci_low: m - h,
            ci_high: m + h,
            n: errs.len(),
        });
    }
    let positive: Vec<&&TrialRecord> = ok.iter().filter(|r| r.time_error_l2 > 0.0).collect();
    if !positive.is_empty() {
        let lo = positive.iter().map(|r| r.time_error_l2).fold(f64::INFINITY, f64::min);
        let hi = positive.iter().map(|r| r.time_error_l2).fold(0.0, f64::max);
        let (llo, lhi) = (lo.ln(), hi.ln());
        let span = lhi - llo;
        let mut members: Vec<Vec<(f64, f64)>> = vec![Vec::new(); LOG_BINS];
        for r in &positive {
            let idx = if span > 0.0 {
                (((r.time_error_l2.ln() - llo) / span * LOG_BINS as f64) as usize).min(LOG_BINS - 1)
            } else {
                0
            };
            members[idx].push((r.time_error_l2, r.signal_error_l2));
        }
        for (i, m) in members.iter().enumerate() {
            if m.is_empty() {
                continue;
            }
            let edge = |j: usize| (llo + span * j as f64 / LOG_BINS as f64).exp();
            let errs: Vec<f64> = m.iter().map(|p| p.1).collect();
            let (mean, h) = mean_ci(&errs);
            bins.push(Bin {
                lo: edge(i),
                hi: edge(i + 1),
                bin_center: m.iter().map(|p| p.0).sum::<f64>() / m.len() as f64,
                mean_err: mean,
                ci_low: mean - h,
                ci_high: mean + h,
                n: m.len(),
            });
        }
    }
    let fit = linear_fit(
        &bins.iter().map(|b| b.bin_center).collect::<Vec<_>>(),
        &bins.iter().map(|b| b.mean_err).collect::<Vec<_>>(),
    );

    let per_epsilon = cfg
        .epsilon_grid
        .iter()
        .map(|&eps| {
            let all: Vec<&TrialRecord> = records.iter().filter(|r| r.epsilon == eps).collect();
            let good: Vec<&&TrialRecord> = all.iter().filter(|r| r.failure.is_none()).collect();
            let n = good.len();
            let avg = |f: &dyn Fn(&TrialRecord) -> f64| {
                if n == 0 {
                    f64::NAN
                } else {
                    good.iter().map(|r| f(r)).sum::<f64>() / n as f64
                }
            };
            EpsilonStats {
                epsilon: eps,
                n,
                failures: all.len() - n,
                mean_time_error_l2: avg(&|r| r.time_error_l2),
                mean_time_error_inf: avg(&|r| r.time_error_inf),
                mean_signal_error: avg(&|r| r.signal_error_l2),
            }
        })
        .collect();

    ExperimentSummary {
        bins,
        per_epsilon,
        fit,
        failures,
        density_violations,
        records,
    }
}

impl ExperimentSummary {
    /// `bin_center,mean_err,ci_low,ci_high,n` with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_center,mean_err,ci_low,ci_high,n\n");
        for b in &self.bins {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
                b.bin_center, b.mean_err, b.ci_low, b.ci_high, b.n
            ));
        }
        out
    }

    /// Total records placed in bins.
    pub fn binned(&self) -> usize {
        self.bins.iter().map(|b| b.n).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_merges_collisions() {
        let train = SpikeTrain::new(4, vec![0.26, 0.74]).unwrap();
        assert_eq!(quantize_train(&train, 0.5).times(), &[0.5]);
        assert_eq!(quantize_train(&train, 0.0), train);
    }

    #[test]
    fn rounding_wraps_into_window() {
        let train = SpikeTrain::new(4, vec![-2.0, 1.9]).unwrap();
        let q = quantize_train(&train, 0.5);
        assert_eq!(q.times(), &[-2.0]);
    }

    #[test]
    fn default_grid_spans_four_decades() {
        let g = default_epsilon_grid();
        assert_eq!(g.len(), 13);
        assert!((g[0] - 1e-6).abs() < 1e-18);
        assert!((g[12] - 1e-2).abs() < 1e-14);
        NoiseExperimentConfig::default().validate().unwrap();
    }

    #[test]
    fn config_validation() {
        let bad = NoiseExperimentConfig {
            trials: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = NoiseExperimentConfig {
            epsilon_grid: vec![0.6],
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = NoiseExperimentConfig {
            generator: Some(GeneratorSpec::bspline(3, 40)),
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let js = r#"{"K": 20, "trials": 3, "epsilon_grid": [0.001]}"#;
        let cfg: NoiseExperimentConfig = serde_json::from_str(js).unwrap();
        assert_eq!(cfg.k, 20);
        assert_eq!(cfg.decoder, DecoderKind::PinvPlain);
    }

    #[test]
    fn fit_of_exact_line() {
        let f = linear_fit(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-15);
        assert!((f.intercept - 1.0).abs() < 1e-15);
        assert!((f.r_squared - 1.0).abs() < 1e-15);
        assert!(linear_fit(&[1.0], &[1.0]).is_none());
    }
}
