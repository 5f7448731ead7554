#![allow(dead_code)]

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tem_core::decoders::default_tau;
use tem_core::encoders::{encode_crossing, sample_amplitudes, EncoderConfig, SpikeTrain, TestFunction};
use tem_core::noiselab::{normalize_sup, random_coefficients};
use tem_core::{GeneratorSpec, PeriodicSignal, PeriodicSpace};

pub struct Rng(ChaCha8Rng);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        let u = (self.0.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        lo + (hi - lo) * u
    }
}

/// Centered cardinal B-spline of degree n from the truncated-power formula
/// β^n(x) = (1/n!) Σ_k (−1)^k C(n+1, k) (x + (n+1)/2 − k)_+^n.
pub fn bspline_oracle(n: usize, x: f64) -> f64 {
    let half = (n as f64 + 1.0) / 2.0;
    if x < -half || x >= half {
        return 0.0;
    }
    let mut fact = 1.0;
    for i in 2..=n {
        fact *= i as f64;
    }
    let mut binom = 1.0;
    let mut acc = 0.0;
    for k in 0..=n + 1 {
        let u = x + (n as f64 + 1.0) / 2.0 - k as f64;
        if u > 0.0 || (n == 0 && u == 0.0) {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * binom * u.powi(n as i32);
        }
        binom = binom * (n + 1 - k) as f64 / (k + 1) as f64;
    }
    acc / fact
}

/// G_λ(ω)² for the degree-d spline from the autocorrelation samples
/// β^{2d+1}(n), a finite cosine sum with no aliasing truncation.
pub fn spline_profile_sq(d: usize, omega: f64) -> f64 {
    let m = 2 * d + 1;
    let mut s = bspline_oracle(m, 0.0);
    for n in 1..=d + 1 {
        s += 2.0 * bspline_oracle(m, n as f64) * (omega * n as f64).cos();
    }
    s
}

/// G_λ′(ω)² = Σ_n −(β^{2d+1})″(n) cos(ωn), using
/// (β^{2d+1})″(x) = β^{2d−1}(x+1) − 2β^{2d−1}(x) + β^{2d−1}(x−1).
pub fn spline_derivative_profile_sq(d: usize, omega: f64) -> f64 {
    let m = 2 * d - 1;
    let second = |x: f64| {
        bspline_oracle(m, x + 1.0) - 2.0 * bspline_oracle(m, x) + bspline_oracle(m, x - 1.0)
    };
    let mut s = -second(0.0);
    for n in 1..=d + 1 {
        s -= 2.0 * second(n as f64) * (omega * n as f64).cos();
    }
    s.max(0.0)
}

/// Composite Simpson rule with `n` (rounded up to even) subintervals.
pub fn simpson(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let n = if n % 2 == 0 { n } else { n + 1 };
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Composite Simpson over [a, b] split at the integer lattice shifted by
/// `offset`, so piecewise polynomials integrate exactly up to degree 3 and
/// with O(h⁴) error above.
pub fn lattice_simpson(a: f64, b: f64, offset: f64, per_unit: usize, f: impl Fn(f64) -> f64) -> f64 {
    let mut cuts = vec![a];
    let mut k = (a - offset).floor() + 1.0;
    while k + offset < b {
        if k + offset > a {
            cuts.push(k + offset);
        }
        k += 1.0;
    }
    cuts.push(b);
    cuts.windows(2)
        .map(|w| {
            let n = ((w[1] - w[0]) * per_unit as f64).ceil().max(2.0) as usize;
            simpson(w[0], w[1], n, &f)
        })
        .sum()
}

pub fn cubic_space(k: usize) -> PeriodicSpace {
    PeriodicSpace::new(GeneratorSpec::bspline(3, k)).unwrap()
}

/// Uniform [−1, 1] coefficients rescaled to unit sup-norm.
pub fn random_signal(space: &PeriodicSpace, seed: u64) -> PeriodicSignal {
    let c = random_coefficients(seed, 1, space.dim());
    normalize_sup(space.signal(c).unwrap()).unwrap()
}

/// Uniform [−1, 1] coefficients, unnormalized.
pub fn raw_signal(space: &PeriodicSpace, seed: u64) -> PeriodicSignal {
    space.signal(random_coefficients(seed, 2, space.dim())).unwrap()
}

pub fn cosine() -> TestFunction {
    TestFunction::Cosine {
        amplitude: 1.1,
        period: 1.0,
    }
}

/// K = 50 cubic instance encoded with 1.1 cos(2πt).
pub struct Instance {
    pub space: PeriodicSpace,
    pub signal: PeriodicSignal,
    pub train: SpikeTrain,
    pub y: Vec<f64>,
    pub tau: f64,
}

pub fn instance(seed: u64) -> Instance {
    let space = cubic_space(50);
    let signal = random_signal(&space, seed);
    let train = encode_crossing(&signal, &cosine(), &EncoderConfig::default()).unwrap();
    let y = sample_amplitudes(&cosine(), &train);
    let tau = default_tau(&space).unwrap();
    Instance {
        space,
        signal,
        train,
        y,
        tau,
    }
}

/// Random train on the circle of length K whose gaps (wrap included) lie in
/// [lo, t_max].
pub fn dense_train(k: usize, lo: f64, t_max: f64, rng: &mut Rng) -> SpikeTrain {
    let kf = k as f64;
    let start = -kf / 2.0 + rng.uniform(0.0, t_max);
    let mut times = vec![start];
    loop {
        let next = times[times.len() - 1] + rng.uniform(lo, t_max);
        if next >= start + kf - 1e-9 {
            break;
        }
        times.push(next);
    }
    let mut wrapped: Vec<f64> = times
        .into_iter()
        .map(|t| if t >= kf / 2.0 { t - kf } else { t })
        .collect();
    wrapped.sort_by(f64::total_cmp);
    SpikeTrain::new(k, wrapped).unwrap()
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}
