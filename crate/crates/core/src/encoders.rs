//! Time encoding machines: crossing encoders (with and without feedback),
//! integrate-and-fire encoders, and the spike-train utilities the decoders
//! need (density, Voronoi cells, thinning, amplitude recovery).

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::{Family, Order};
use crate::siss::PeriodicSignal;

/// Test function Φ_n compared against the (integrated) signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TestFunction {
    /// α cos(2πt / T_c), no feedback.
    Cosine { amplitude: f64, period: f64 },
    /// −1 + 2 (t − t_{n−1}) / T_r, reset at every spike.
    Ramp { span: f64 },
    /// Constant threshold q, no explicit time dependence.
    Constant { level: f64 },
}

impl TestFunction {
    /// True when Φ_n depends on the previous spike.
    pub fn has_feedback(&self) -> bool {
        matches!(self, Self::Ramp { .. })
    }

    /// Φ_n(t), where `reference` is t_{n−1}.
    #[inline]
    pub fn value(&self, t: f64, reference: f64) -> f64 {
        match *self {
            Self::Cosine { amplitude, period } => amplitude * (2.0 * PI * t / period).cos(),
            Self::Ramp { span } => -1.0 + 2.0 * (t - reference) / span,
            Self::Constant { level } => level,
        }
    }

    /// Time scale that sets the scan step.
    pub fn time_scale(&self) -> f64 {
        match *self {
            Self::Cosine { period, .. } => period,
            Self::Ramp { span } => span,
            Self::Constant { .. } => 1.0,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Cosine { amplitude, period } => {
                amplitude.is_finite() && period.is_finite() && period > 0.0
            }
            Self::Ramp { span } => span.is_finite() && span > 0.0,
            Self::Constant { level } => level.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("bad test function {self}")))
        }
    }
}

impl FromStr for TestFunction {
    type Err = Error;

    /// `cosine:AMPLITUDE:PERIOD`, `ramp:SPAN` or `const:LEVEL`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |i: usize| -> Result<f64> {
            parts
                .get(i)
                .ok_or_else(|| Error::InvalidInput(format!("missing field in {s:?}")))?
                .parse::<f64>()
                .map_err(|e| Error::InvalidInput(format!("{s:?}: {e}")))
        };
        let phi = match (parts[0], parts.len()) {
            ("cosine", 3) => Self::Cosine {
                amplitude: num(1)?,
                period: num(2)?,
            },
            ("ramp", 2) => Self::Ramp { span: num(1)? },
            ("const", 2) => Self::Constant { level: num(1)? },
            _ => return Err(Error::InvalidInput(format!("unrecognized test function {s:?}"))),
        };
        phi.validate()?;
        Ok(phi)
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Cosine { amplitude, period } => write!(f, "cosine:{amplitude}:{period}"),
            Self::Ramp { span } => write!(f, "ramp:{span}"),
            Self::Constant { level } => write!(f, "const:{level}"),
        }
    }
}

/// Strictly increasing spike times t₁ < … < t_J in [−K/2, K/2), read with
/// the wrap convention t_{J+1} = t₁ + K.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TrainRepr")]
pub struct SpikeTrain {
    #[serde(rename = "K")]
    k: usize,
    times: Vec<f64>,
}

#[derive(Deserialize)]
struct TrainRepr {
    #[serde(rename = "K")]
    k: usize,
    times: Vec<f64>,
}

impl TryFrom<TrainRepr> for SpikeTrain {
    type Error = Error;

    fn try_from(r: TrainRepr) -> Result<Self> {
        SpikeTrain::new(r.k, r.times)
    }
}

impl SpikeTrain {
    pub fn new(k: usize, times: Vec<f64>) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidInput("period must be positive".into()));
        }
        let half = k as f64 / 2.0;
        if let Some(t) = times.iter().find(|t| !(-half..half).contains(*t)) {
            return Err(Error::InvalidInput(format!(
                "spike time {t} outside [{}, {half})",
                -half
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("spike times must strictly increase".into()));
        }
        Ok(Self { k, times })
    }

    pub fn period(&self) -> usize {
        self.k
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Start of the window, which also serves as the initial feedback
    /// reference t₀.
    pub fn origin(&self) -> f64 {
        -(self.k as f64) / 2.0
    }

    /// One time per line with a `t` header, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t\n");
        for t in &self.times {
            out.push_str(&format!("{t:.16e}\n"));
        }
        out
    }

    pub fn from_csv(text: &str, k: usize) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        match lines.next() {
            Some("t") => {}
            other => {
                return Err(Error::InvalidInput(format!(
                    "expected CSV header \"t\", found {other:?}"
                )))
            }
        }
        let times = lines
            .map(|l| {
                l.parse::<f64>()
                    .map_err(|e| Error::InvalidInput(format!("bad time {l:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(k, times)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncoderConfig {
    /// Scan samples per test-function time scale.
    pub oversampling: usize,
    pub bisection_tol: f64,
    /// Defaults to 10 K / T when unset.
    pub max_spikes: Option<usize>,
    /// Caller's bound on sup |f|, checked against cosine amplitudes.
    pub sup_bound: Option<f64>,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            oversampling: 64,
            bisection_tol: 1e-12,
            max_spikes: None,
            sup_bound: None,
        }
    }
}

impl EncoderConfig {
    fn validate(&self) -> Result<()> {
        if self.oversampling < 8 {
            return Err(Error::InvalidInput("oversampling must be at least 8".into()));
        }
        if !(self.bisection_tol > 0.0) {
            return Err(Error::InvalidInput("bisection tolerance must be > 0".into()));
        }
        Ok(())
    }

    fn budget(&self, k: usize, phi: &TestFunction) -> usize {
        self.max_spikes
            .unwrap_or_else(|| (10.0 * k as f64 / phi.time_scale()).ceil() as usize)
    }
}

fn bisect<F: FnMut(f64) -> Result<f64>>(
    mut h: F,
    mut lo: f64,
    mut hi: f64,
    mut h_lo: f64,
    tol: f64,
) -> Result<f64> {
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let hm = h(mid)?;
        if hm == 0.0 {
            return Ok(mid);
        }
        if (hm < 0.0) == (h_lo < 0.0) {
            lo = mid;
            h_lo = hm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// All sign changes of h on [start, end), scanned at `step` then bisected.
fn roots_in_window<F: FnMut(f64) -> Result<f64>>(
    mut h: F,
    start: f64,
    end: f64,
    step: f64,
    tol: f64,
    budget: usize,
) -> Result<Vec<f64>> {
    let n = ((end - start) / step).ceil() as usize;
    let mut roots = Vec::new();
    let mut x0 = start;
    let mut h0 = h(x0)?;
    for i in 1..=n {
        let x1 = if i == n { end } else { start + i as f64 * step };
        let h1 = h(x1)?;
        if h0 == 0.0 {
            roots.push(x0);
        } else if h0 * h1 < 0.0 {
            let r = bisect(&mut h, x0, x1, h0, tol)?;
            if r < end {
                roots.push(r);
            }
        }
        if roots.len() > budget {
            return Err(Error::SpikeBudgetExceeded(budget));
        }
        x0 = x1;
        h0 = h1;
    }
    Ok(roots)
}

/// Feedback scan: after each spike the comparison restarts from the new
/// reference. `h(t, reference)` must be evaluated relative to t_{n−1}.
fn roots_with_feedback<F: FnMut(f64, f64) -> Result<f64>>(
    mut h: F,
    start: f64,
    end: f64,
    step: f64,
    tol: f64,
    budget: usize,
) -> Result<Vec<f64>> {
    let mut roots = Vec::new();
    let mut reference = start;
    'spikes: loop {
        let h_ref = h(reference, reference)?;
        let sign = if h_ref == 0.0 { 1.0 } else { h_ref.signum() };
        let mut x0 = reference;
        let mut h0 = h_ref;
        let mut i = 1usize;
        loop {
            let x1 = (reference + i as f64 * step).min(end);
            let h1 = h(x1, reference)?;
            let root = if h1 == 0.0 && x1 > reference {
                Some(x1)
            } else if h1 * sign < 0.0 {
                let r = if h0 == 0.0 && x0 > reference {
                    x0
                } else {
                    bisect(|t| h(t, reference), x0, x1, h0, tol)?
                };
                Some(r)
            } else {
                None
            };
            if let Some(r) = root {
                if r >= end || r <= reference {
                    break 'spikes;
                }
                roots.push(r);
                if roots.len() > budget {
                    return Err(Error::SpikeBudgetExceeded(budget));
                }
                reference = r;
                continue 'spikes;
            }
            if x1 >= end {
                break 'spikes;
            }
            x0 = x1;
            h0 = h1;
            i += 1;
        }
    }
    Ok(roots)
}

/// Crossing TEM: spikes where f(t) = Φ_n(t) inside [−K/2, K/2).
pub fn encode_crossing(
    sig: &PeriodicSignal,
    phi: &TestFunction,
    cfg: &EncoderConfig,
) -> Result<SpikeTrain> {
    cfg.validate()?;
    phi.validate()?;
    if let (TestFunction::Cosine { amplitude, .. }, Some(bound)) = (phi, cfg.sup_bound) {
        if amplitude.abs() <= bound {
            return Err(Error::NoSpikes(format!(
                "cosine amplitude {amplitude} does not exceed sup|f| bound {bound}"
            )));
        }
    }
    let k = sig.k;
    let half = k as f64 / 2.0;
    let step = phi.time_scale() / cfg.oversampling as f64;
    let budget = cfg.budget(k, phi);
    let times = if phi.has_feedback() {
        roots_with_feedback(
            |t, r| Ok(sig.eval(t, Order::Value)? - phi.value(t, r)),
            -half,
            half,
            step,
            cfg.bisection_tol,
            budget,
        )?
    } else {
        roots_in_window(
            |t| Ok(sig.eval(t, Order::Value)? - phi.value(t, 0.0)),
            -half,
            half,
            step,
            cfg.bisection_tol,
            budget,
        )?
    };
    finish(k, times)
}

/// Integrate-and-fire TEM: spikes where ∫_{t_{n−1}}^{t} f = Φ_n(t), with
/// t₀ = −K/2. A crossing encoder on the running integral.
pub fn encode_if(
    sig: &PeriodicSignal,
    phi: &TestFunction,
    cfg: &EncoderConfig,
) -> Result<SpikeTrain> {
    cfg.validate()?;
    phi.validate()?;
    if matches!(sig.generator.family, Family::Sinc) {
        return Err(Error::UnsupportedGenerator(
            "integrate-and-fire encoding needs a compactly supported generator",
        ));
    }
    let k = sig.k;
    let half = k as f64 / 2.0;
    let step = phi.time_scale() / cfg.oversampling as f64;
    let budget = cfg.budget(k, phi);
    let times = roots_with_feedback(
        |t, r| Ok(sig.integral(r, t)? - phi.value(t, r)),
        -half,
        half,
        step,
        cfg.bisection_tol,
        budget,
    )?;
    finish(k, times)
}

fn finish(k: usize, times: Vec<f64>) -> Result<SpikeTrain> {
    if times.is_empty() {
        return Err(Error::NoSpikes("no crossing inside the window".into()));
    }
    SpikeTrain::new(k, times)
}

/// Gaps t_{n+1} − t_n for n = 1..J including the wrap gap t₁ + K − t_J.
pub fn periodic_gaps(train: &SpikeTrain) -> Vec<f64> {
    let t = train.times();
    let mut gaps: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
    if let (Some(first), Some(last)) = (t.first(), t.last()) {
        gaps.push(first + train.period() as f64 - last);
    }
    gaps
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub max_gap: f64,
}

impl DensityReport {
    pub fn is_t_dense(&self, t: f64) -> bool {
        self.max_gap <= t
    }
}

pub fn density_report(train: &SpikeTrain) -> Result<DensityReport> {
    if train.is_empty() {
        return Err(Error::EmptyTrain);
    }
    let max_gap = periodic_gaps(train).into_iter().fold(0.0, f64::max);
    Ok(DensityReport { max_gap })
}

/// Voronoi cells [s_n, s_{n+1}) of the spikes on the circle of length K.
#[derive(Debug, Clone, PartialEq)]
pub struct Voronoi {
    /// s_n = (t_{n−1} + t_n) / 2 with t₀ = t_J − K.
    pub midpoints: Vec<f64>,
    /// w_n = s_{n+1} − s_n with s_{J+1} = s₁ + K.
    pub weights: Vec<f64>,
}

impl Voronoi {
    /// Cell boundaries s₁ < … < s_J < s₁ + K.
    pub fn breakpoints(&self, k: usize) -> Vec<f64> {
        let mut b = self.midpoints.clone();
        b.push(self.midpoints[0] + k as f64);
        b
    }
}

pub fn voronoi(train: &SpikeTrain) -> Result<Voronoi> {
    let t = train.times();
    let j = t.len();
    if j == 0 {
        return Err(Error::EmptyTrain);
    }
    let k = train.period() as f64;
    let midpoints: Vec<f64> = (0..j)
        .map(|n| {
            let prev = if n == 0 { t[j - 1] - k } else { t[n - 1] };
            0.5 * (prev + t[n])
        })
        .collect();
    let weights = (0..j)
        .map(|n| {
            let next = if n + 1 == j {
                midpoints[0] + k
            } else {
                midpoints[n + 1]
            };
            next - midpoints[n]
        })
        .collect();
    Ok(Voronoi { midpoints, weights })
}

/// Greedy density-preserving subsequence: i₁ = 1 and
/// i_{n+1} = max { j ≤ J+1 : t_j − t_{i_n} ≤ T }.
pub fn thin_to_density(train: &SpikeTrain, t_max: f64) -> Result<SpikeTrain> {
    let report = density_report(train)?;
    if !report.is_t_dense(t_max) {
        return Err(Error::NotDenseEnough {
            max_gap: report.max_gap,
            t: t_max,
        });
    }
    let t = train.times();
    let j = t.len();
    let wrapped = t[0] + train.period() as f64;
    let at = |i: usize| if i == j { wrapped } else { t[i] };
    let mut kept = vec![t[0]];
    let mut i = 0;
    loop {
        let mut next = i + 1;
        while next < j && at(next + 1) - t[i] <= t_max {
            next += 1;
        }
        if next >= j {
            break;
        }
        kept.push(t[next]);
        i = next;
    }
    SpikeTrain::new(train.period(), kept)
}

/// Decoder-side amplitudes y_n = Φ_n(t_n), with t₀ = −K/2 for feedback.
pub fn sample_amplitudes(phi: &TestFunction, train: &SpikeTrain) -> Vec<f64> {
    let mut reference = train.origin();
    train
        .times()
        .iter()
        .map(|&t| {
            let y = phi.value(t, reference);
            reference = t;
            y
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::GeneratorSpec;

    #[test]
    fn parse_test_functions() {
        assert_eq!(
            "cosine:1.1:1".parse::<TestFunction>().unwrap(),
            TestFunction::Cosine {
                amplitude: 1.1,
                period: 1.0
            }
        );
        assert_eq!(
            "ramp:2".parse::<TestFunction>().unwrap(),
            TestFunction::Ramp { span: 2.0 }
        );
        assert!("ramp:-1".parse::<TestFunction>().is_err());
        assert!("saw:1".parse::<TestFunction>().is_err());
        let phi: TestFunction = "const:0.5".parse().unwrap();
        assert_eq!(phi.to_string().parse::<TestFunction>().unwrap(), phi);
    }

    #[test]
    fn zero_signal_cosine_crossings() {
        let f = PeriodicSignal::zero(GeneratorSpec::bspline(3, 50));
        let phi = TestFunction::Cosine {
            amplitude: 1.1,
            period: 1.0,
        };
        let train = encode_crossing(&f, &phi, &EncoderConfig::default()).unwrap();
        assert_eq!(train.len(), 100);
        for (m, t) in train.times().iter().enumerate() {
            let expected = -25.0 + 0.25 + 0.5 * m as f64;
            assert!((t - expected).abs() < 1e-11, "{t} vs {expected}");
        }
    }

    #[test]
    fn zero_signal_ramp_crossings() {
        let f = PeriodicSignal::zero(GeneratorSpec::bspline(3, 50));
        let train =
            encode_crossing(&f, &TestFunction::Ramp { span: 1.0 }, &EncoderConfig::default())
                .unwrap();
        assert_eq!(train.len(), 99);
        for (m, t) in train.times().iter().enumerate() {
            assert!((t - (-25.0 + 0.5 * (m + 1) as f64)).abs() < 1e-10);
        }
        let if_train =
            encode_if(&f, &TestFunction::Ramp { span: 1.0 }, &EncoderConfig::default()).unwrap();
        assert_eq!(if_train.len(), train.len());
        for (a, b) in if_train.times().iter().zip(train.times()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn constant_integrator_fires_regularly() {
        // Box spline with equal coefficients is the constant c.
        let c = 0.8;
        let f = PeriodicSignal::new(GeneratorSpec::bspline(0, 20), vec![c; 20]).unwrap();
        let q = 0.3;
        let train =
            encode_if(&f, &TestFunction::Constant { level: q }, &EncoderConfig::default())
                .unwrap();
        let mut prev = train.origin();
        for t in train.times() {
            assert!((t - prev - q / c).abs() < 1e-10);
            prev = *t;
        }
    }

    #[test]
    fn if_rejects_sinc() {
        let f = PeriodicSignal::zero(GeneratorSpec::sinc(8));
        assert!(matches!(
            encode_if(&f, &TestFunction::Ramp { span: 1.0 }, &EncoderConfig::default()),
            Err(Error::UnsupportedGenerator(_))
        ));
    }

    #[test]
    fn guards() {
        let f = PeriodicSignal::zero(GeneratorSpec::bspline(1, 10));
        let phi = TestFunction::Cosine {
            amplitude: 1.1,
            period: 1.0,
        };
        let cfg = EncoderConfig {
            sup_bound: Some(1.2),
            ..Default::default()
        };
        assert!(matches!(encode_crossing(&f, &phi, &cfg), Err(Error::NoSpikes(_))));
        let cfg = EncoderConfig {
            max_spikes: Some(5),
            ..Default::default()
        };
        assert!(matches!(
            encode_crossing(&f, &phi, &cfg),
            Err(Error::SpikeBudgetExceeded(5))
        ));
        let none = encode_crossing(&f, &TestFunction::Constant { level: 2.0 }, &Default::default());
        assert!(matches!(none, Err(Error::NoSpikes(_))));
    }

    #[test]
    fn density_and_voronoi_arithmetic() {
        let train = SpikeTrain::new(50, vec![-25.0, 0.0, 24.0]).unwrap();
        assert_eq!(density_report(&train).unwrap().max_gap, 25.0);
        assert_eq!(periodic_gaps(&train), vec![25.0, 24.0, 1.0]);

        let uniform = SpikeTrain::new(6, (0..6).map(|i| i as f64 - 3.0).collect()).unwrap();
        assert_eq!(density_report(&uniform).unwrap().max_gap, 1.0);
        let v = voronoi(&uniform).unwrap();
        assert!(v.weights.iter().all(|w| *w == 1.0));
        assert_eq!(v.midpoints[0], -3.5);
        assert_eq!(v.midpoints[1], -2.5);

        assert!(matches!(
            density_report(&SpikeTrain::new(4, vec![]).unwrap()),
            Err(Error::EmptyTrain)
        ));
    }

    #[test]
    fn thinning_requires_density() {
        let train = SpikeTrain::new(10, vec![-5.0, -1.0, 3.0]).unwrap();
        assert!(matches!(
            thin_to_density(&train, 1.0),
            Err(Error::NotDenseEnough { .. })
        ));
        let uniform = SpikeTrain::new(10, (0..10).map(|i| i as f64 - 5.0).collect()).unwrap();
        let thinned = thin_to_density(&uniform, 1.0).unwrap();
        assert_eq!(thinned, uniform);
    }

    #[test]
    fn csv_and_json_formats() {
        let train = SpikeTrain::new(4, vec![-1.5, 0.1, 1.0 / 3.0]).unwrap();
        let csv = train.to_csv();
        assert!(csv.starts_with("t\n"));
        assert_eq!(SpikeTrain::from_csv(&csv, 4).unwrap(), train);
        let js = serde_json::to_string(&train).unwrap();
        assert!(js.starts_with(r#"{"K":4,"times":["#));
        assert_eq!(serde_json::from_str::<SpikeTrain>(&js).unwrap(), train);
        assert!(serde_json::from_str::<SpikeTrain>(r#"{"K":4,"times":[1.0,0.5]}"#).is_err());
        assert!(SpikeTrain::new(4, vec![2.0]).is_err());
    }

    #[test]
    fn amplitudes_from_timing() {
        let train = SpikeTrain::new(4, vec![-1.5, 0.25, 1.0]).unwrap();
        let y = sample_amplitudes(
            &TestFunction::Cosine {
                amplitude: 1.1,
                period: 1.0,
            },
            &train,
        );
        assert!((y[0] - 1.1 * (2.0 * PI * -1.5).cos()).abs() < 1e-15);
        let y = sample_amplitudes(&TestFunction::Ramp { span: 2.0 }, &train);
        assert_eq!(y, vec![-1.0 + 0.5, -1.0 + 1.75, -1.0 + 0.75]);
    }
}
