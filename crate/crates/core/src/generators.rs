//! Generator functions for shift-invariant spaces: pointwise evaluation,
//! Fourier transforms, aliased spectral profiles, frame bounds and the
//! critical sampling density.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Highest B-spline degree accepted. Antiderivatives evaluate degree + 1.
pub const MAX_DEGREE: usize = 15;

/// Lower frame bounds below this are treated as "not a frame".
pub const FRAME_FLOOR: f64 = 1e-12;

/// Relative tail tolerance for tabulated alias sums.
pub const TAIL_TOLERANCE: f64 = 1e-6;

pub const DEFAULT_GRID: usize = 4096;
pub const DEFAULT_SPLINE_KMAX: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    BSpline { degree: usize },
    Sinc,
    /// Piecewise-linear interpolant of `samples` spaced `step` apart,
    /// zero outside the table.
    Tabulated { samples: Vec<f64>, step: f64 },
}

/// A generator λ together with the period K of the space it spans.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecRepr", into = "SpecRepr")]
pub struct GeneratorSpec {
    pub family: Family,
    pub period: usize,
    /// Splines centered at 0 (support symmetric about the origin).
    pub centered: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    Value,
    Derivative,
    Antiderivative,
}

#[derive(Serialize, Deserialize)]
struct SpecRepr {
    family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    degree: Option<usize>,
    period: usize,
    #[serde(default = "default_centered")]
    centered: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    samples: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    step: Option<f64>,
}

fn default_centered() -> bool {
    true
}

impl TryFrom<SpecRepr> for GeneratorSpec {
    type Error = Error;

    fn try_from(r: SpecRepr) -> Result<Self> {
        let family = match r.family.as_str() {
            "bspline" => Family::BSpline {
                degree: r
                    .degree
                    .ok_or_else(|| Error::InvalidInput("bspline needs a degree".into()))?,
            },
            "sinc" => Family::Sinc,
            "tabulated" => Family::Tabulated {
                samples: r
                    .samples
                    .ok_or_else(|| Error::InvalidInput("tabulated needs samples".into()))?,
                step: r
                    .step
                    .ok_or_else(|| Error::InvalidInput("tabulated needs a step".into()))?,
            },
            other => return Err(Error::InvalidInput(format!("unknown family {other:?}"))),
        };
        let spec = GeneratorSpec {
            family,
            period: r.period,
            centered: r.centered,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl From<GeneratorSpec> for SpecRepr {
    fn from(s: GeneratorSpec) -> Self {
        let (family, degree, samples, step) = match s.family {
            Family::BSpline { degree } => ("bspline", Some(degree), None, None),
            Family::Sinc => ("sinc", None, None, None),
            Family::Tabulated { samples, step } => ("tabulated", None, Some(samples), Some(step)),
        };
        SpecRepr {
            family: family.to_string(),
            degree,
            period: s.period,
            centered: s.centered,
            samples,
            step,
        }
    }
}

impl GeneratorSpec {
    pub fn bspline(degree: usize, period: usize) -> Self {
        Self {
            family: Family::BSpline { degree },
            period,
            centered: true,
        }
    }

    pub fn sinc(period: usize) -> Self {
        Self {
            family: Family::Sinc,
            period,
            centered: true,
        }
    }

    pub fn tabulated(samples: Vec<f64>, step: f64, period: usize) -> Self {
        Self {
            family: Family::Tabulated { samples, step },
            period,
            centered: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.period == 0 {
            return Err(Error::InvalidInput("period must be positive".into()));
        }
        match &self.family {
            Family::BSpline { degree } if *degree > MAX_DEGREE => Err(Error::InvalidInput(
                format!("bspline degree {degree} exceeds {MAX_DEGREE}"),
            )),
            Family::Tabulated { samples, step } => {
                if !(step.is_finite() && *step > 0.0) {
                    return Err(Error::InvalidInput("tabulated step must be > 0".into()));
                }
                if samples.len() < 2 || samples.iter().any(|s| !s.is_finite()) {
                    return Err(Error::InvalidInput(
                        "tabulated generator needs at least two finite samples".into(),
                    ));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Closed support interval, `None` for sinc.
    pub fn support(&self) -> Option<(f64, f64)> {
        match &self.family {
            Family::BSpline { degree } => {
                let s = (*degree + 1) as f64;
                Some(if self.centered { (-s / 2.0, s / 2.0) } else { (0.0, s) })
            }
            Family::Sinc => None,
            Family::Tabulated { samples, step } => {
                let lo = self.table_origin();
                Some((lo, lo + (samples.len() - 1) as f64 * step))
            }
        }
    }

    /// Support length S.
    pub fn support_width(&self) -> Option<f64> {
        self.support().map(|(a, b)| b - a)
    }

    /// Knot lattice `offset + width * Z` on which the generator is a
    /// polynomial between consecutive points.
    pub fn knot_lattice(&self) -> (f64, f64) {
        match &self.family {
            Family::BSpline { degree } => {
                let shift = if self.centered {
                    (*degree + 1) as f64 / 2.0
                } else {
                    0.0
                };
                (shift.fract(), 1.0)
            }
            Family::Sinc => (0.0, 1.0),
            Family::Tabulated { step, .. } => (self.table_origin().rem_euclid(*step), *step),
        }
    }

    /// Gauss–Legendre order exact (or near-exact) on one lattice cell for
    /// products of two generators.
    pub fn quadrature_order(&self) -> usize {
        match &self.family {
            Family::BSpline { degree } => (*degree + 1).max(8),
            Family::Sinc => 16,
            Family::Tabulated { .. } => 8,
        }
    }

    fn table_origin(&self) -> f64 {
        match &self.family {
            Family::Tabulated { samples, step } if self.centered => {
                -((samples.len() - 1) as f64) * step / 2.0
            }
            _ => 0.0,
        }
    }

    /// Shift that maps the generator's argument onto the cardinal spline
    /// variable u ∈ [0, d + 1).
    #[inline]
    pub(crate) fn spline_offset(&self) -> f64 {
        match self.family {
            Family::BSpline { degree } if self.centered => (degree + 1) as f64 / 2.0,
            _ => 0.0,
        }
    }

    pub fn eval(&self, t: f64, order: Order) -> Result<f64> {
        match &self.family {
            Family::BSpline { degree } => {
                let u = t + self.spline_offset();
                match order {
                    Order::Value => Ok(cardinal_bspline(*degree, u)),
                    Order::Derivative => {
                        if *degree == 0 {
                            return Err(Error::UnsupportedOrder(
                                "derivative of the degree-0 box spline",
                            ));
                        }
                        Ok(cardinal_bspline_derivative(*degree, u))
                    }
                    Order::Antiderivative => Ok(cardinal_bspline_integral(*degree, u)),
                }
            }
            Family::Sinc => match order {
                Order::Value => Ok(sinc(t)),
                Order::Derivative => Ok(sinc_derivative(t)),
                Order::Antiderivative => {
                    Err(Error::UnsupportedOrder("antiderivative of sinc"))
                }
            },
            Family::Tabulated { samples, step } => {
                let lo = self.table_origin();
                let n = samples.len();
                let hi = lo + (n - 1) as f64 * step;
                if order == Order::Antiderivative {
                    return Ok(table_integral(samples, *step, lo, t));
                }
                if !(lo..=hi).contains(&t) {
                    return Err(Error::OutOfTable { t, lo, hi });
                }
                let x = (t - lo) / step;
                let i = (x.floor() as usize).min(n - 2);
                let frac = x - i as f64;
                Ok(match order {
                    Order::Value => samples[i] + frac * (samples[i + 1] - samples[i]),
                    _ => (samples[i + 1] - samples[i]) / step,
                })
            }
        }
    }

    /// λ̂(ω) = ∫ λ(t) e^{-iωt} dt.
    pub fn fourier(&self, omega: f64) -> Complex64 {
        match &self.family {
            Family::BSpline { degree } => {
                let mag = sinc_half(omega).powi(*degree as i32 + 1);
                if self.centered {
                    Complex64::new(mag, 0.0)
                } else {
                    Complex64::from_polar(mag, -omega * (*degree + 1) as f64 / 2.0)
                }
            }
            Family::Sinc => {
                if (-PI..PI).contains(&omega) {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
            Family::Tabulated { samples, step } => {
                // Exact transform of the piecewise-linear interpolant: every
                // sample carries a hat of half-width `step`.
                let lo = self.table_origin();
                let envelope = step * sinc_half(omega * step).powi(2);
                let phase: Complex64 = samples
                    .iter()
                    .enumerate()
                    .map(|(i, s)| {
                        let ti = lo + i as f64 * step;
                        Complex64::from_polar(*s, -omega * ti)
                    })
                    .sum();
                phase * envelope
            }
        }
    }

    pub fn default_k_max(&self) -> usize {
        match self.family {
            Family::Sinc => 1,
            _ => DEFAULT_SPLINE_KMAX,
        }
    }
}

/// sin(x/2) / (x/2) with the removable singularity at 0.
fn sinc_half(omega: f64) -> f64 {
    let x = omega / 2.0;
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

fn sinc(t: f64) -> f64 {
    let x = PI * t;
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

fn sinc_derivative(t: f64) -> f64 {
    let x = PI * t;
    if x.abs() < 1e-4 {
        PI * (-x / 3.0 + x * x * x / 30.0)
    } else {
        PI * (x * x.cos() - x.sin()) / (x * x)
    }
}

fn table_integral(samples: &[f64], step: f64, lo: f64, t: f64) -> f64 {
    if t <= lo {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..samples.len() - 1 {
        let a = lo + i as f64 * step;
        let b = a + step;
        if t >= b {
            acc += 0.5 * step * (samples[i] + samples[i + 1]);
        } else {
            let h = t - a;
            let slope = (samples[i + 1] - samples[i]) / step;
            acc += h * (samples[i] + 0.5 * slope * h);
            return acc;
        }
    }
    acc
}

/// Nonzero uniform B-spline values N_{d+1}(frac + j), j = 0..=d, by the
/// Cox–de Boor recursion on integer knots. `frac` ∈ [0, 1).
#[inline]
pub(crate) fn spline_basis(degree: usize, frac: f64, out: &mut [f64; MAX_DEGREE + 3]) {
    out[0] = 1.0;
    for p in 1..=degree {
        let pf = p as f64;
        out[p] = 0.0;
        for j in (0..=p).rev() {
            let jf = j as f64;
            let left = if j > 0 { out[j - 1] } else { 0.0 };
            out[j] = ((frac + jf) * out[j] + (pf + 1.0 - frac - jf) * left) / pf;
        }
    }
}

/// Cardinal B-spline N_{d+1}(u), supported on [0, d + 1).
pub(crate) fn cardinal_bspline(degree: usize, u: f64) -> f64 {
    let top = (degree + 1) as f64;
    if !(0.0..top).contains(&u) {
        return 0.0;
    }
    let i = u.floor();
    let mut b = [0.0; MAX_DEGREE + 3];
    spline_basis(degree, u - i, &mut b);
    b[i as usize]
}

/// N'_{d+1}(u) = N_d(u) - N_d(u - 1), for d ≥ 1.
pub(crate) fn cardinal_bspline_derivative(degree: usize, u: f64) -> f64 {
    let top = (degree + 1) as f64;
    if !(0.0..top).contains(&u) {
        return 0.0;
    }
    let i = u.floor() as usize;
    let mut b = [0.0; MAX_DEGREE + 3];
    spline_basis(degree - 1, u - u.floor(), &mut b);
    let here = if i < degree { b[i] } else { 0.0 };
    let left = if i > 0 { b[i - 1] } else { 0.0 };
    here - left
}

/// ∫_{-∞}^u N_{d+1} = Σ_{j ≥ 0} N_{d+2}(u - j).
pub(crate) fn cardinal_bspline_integral(degree: usize, u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    if u >= (degree + 1) as f64 {
        return 1.0;
    }
    let i = u.floor() as usize;
    let mut b = [0.0; MAX_DEGREE + 3];
    spline_basis(degree + 1, u - u.floor(), &mut b);
    b[..=i.min(degree + 1)].iter().sum()
}

/// Point evaluation of λ or one of its derivative/antiderivative.
pub fn eval_generator(spec: &GeneratorSpec, t: f64, order: Order) -> Result<f64> {
    spec.eval(t, order)
}

pub fn generator_fourier(spec: &GeneratorSpec, omega: f64) -> Complex64 {
    spec.fourier(omega)
}

/// Sampled aliased energies G_λ and G_λ' on a uniform grid over [0, 2π).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralProfile {
    pub omega_grid: Vec<f64>,
    pub g_lambda: Vec<f64>,
    pub g_lambda_prime: Vec<f64>,
    pub k_max: usize,
    /// Upper bound on the neglected part of G_λ² (compact-support
    /// splines and sinc only).
    pub tail_bound: Option<f64>,
}

impl SpectralProfile {
    /// sup over the grid of G_λ'/G_λ, the constant in ‖f'‖ ≤ C‖f‖.
    pub fn bernstein_constant(&self) -> f64 {
        self.g_lambda
            .iter()
            .zip(&self.g_lambda_prime)
            .map(|(g, gp)| gp / g)
            .fold(0.0, f64::max)
    }
}

pub fn spectral_profile(
    spec: &GeneratorSpec,
    grid_size: usize,
    k_max: usize,
) -> Result<SpectralProfile> {
    if grid_size < 64 {
        return Err(Error::InvalidInput(format!(
            "grid size {grid_size} is below 64"
        )));
    }
    if k_max < 1 {
        return Err(Error::InvalidInput("k_max must be at least 1".into()));
    }
    let omega_grid: Vec<f64> = (0..grid_size)
        .map(|i| 2.0 * PI * i as f64 / grid_size as f64)
        .collect();
    let kmax = k_max as i64;
    let mut g_lambda = Vec::with_capacity(grid_size);
    let mut g_lambda_prime = Vec::with_capacity(grid_size);
    let mut worst_edge = 0.0f64;
    for &w in &omega_grid {
        // Alias around the representative in [−π, π) so the truncated sum
        // keeps the symmetry G(ω) = G(2π − ω).
        let w = if w > PI { w - 2.0 * PI } else { w };
        let mut e = 0.0;
        let mut ep = 0.0;
        for k in -kmax..=kmax {
            let wk = w + 2.0 * PI * k as f64;
            let h = spec.fourier(wk).norm_sqr();
            e += h;
            ep += wk * wk * h;
        }
        if matches!(spec.family, Family::Tabulated { .. }) && e > 0.0 {
            let edge = spec.fourier(w + 2.0 * PI * kmax as f64).norm_sqr()
                + spec.fourier(w - 2.0 * PI * kmax as f64).norm_sqr();
            worst_edge = worst_edge.max(edge * kmax as f64 / e);
        }
        g_lambda.push(e.sqrt());
        g_lambda_prime.push(ep.sqrt());
    }
    let tail_bound = match spec.family {
        Family::BSpline { degree } => {
            // |λ̂(ω + 2kπ)|² ≤ (π (|k| - 1))^{-2(d+1)} for |k| ≥ 2.
            let p = 2.0 * (degree + 1) as f64;
            let m = k_max as f64;
            Some(2.0 * (PI * m).powf(-p) * (1.0 + m / (p - 1.0)))
        }
        Family::Sinc => Some(0.0),
        Family::Tabulated { .. } => {
            if worst_edge > TAIL_TOLERANCE {
                return Err(Error::NonConvergentTail {
                    tail: worst_edge,
                    tol: TAIL_TOLERANCE,
                });
            }
            None
        }
    };
    Ok(SpectralProfile {
        omega_grid,
        g_lambda,
        g_lambda_prime,
        k_max,
        tail_bound,
    })
}

/// Riesz bounds 0 < A ≤ G_λ ≤ B.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameBounds {
    pub lower: f64,
    pub upper: f64,
}

pub fn frame_bounds(profile: &SpectralProfile) -> Result<FrameBounds> {
    if profile.g_lambda.is_empty() {
        return Err(Error::InvalidInput("empty spectral profile".into()));
    }
    let lower = profile.g_lambda.iter().copied().fold(f64::INFINITY, f64::min);
    let upper = profile.g_lambda.iter().copied().fold(0.0, f64::max);
    if !(lower >= FRAME_FLOOR) {
        return Err(Error::DegenerateFrame {
            lower,
            floor: FRAME_FLOOR,
        });
    }
    Ok(FrameBounds { lower, upper })
}

/// Critical density τ = π · min over the grid of G_λ / G_λ'. Grid points
/// where G_λ' vanishes do not constrain τ; if it vanishes everywhere τ is
/// +∞.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityBound {
    pub tau: f64,
}

impl DensityBound {
    pub fn is_unbounded(&self) -> bool {
        self.tau.is_infinite()
    }
}

pub fn density_bound(profile: &SpectralProfile) -> Result<DensityBound> {
    if profile
        .g_lambda
        .iter()
        .chain(&profile.g_lambda_prime)
        .any(|v| !v.is_finite())
    {
        return Err(Error::UnboundedDerivativeProfile);
    }
    let ratio = profile
        .g_lambda
        .iter()
        .zip(&profile.g_lambda_prime)
        .filter(|(_, gp)| **gp > 0.0)
        .map(|(g, gp)| g / gp)
        .fold(f64::INFINITY, f64::min);
    Ok(DensityBound { tau: PI * ratio })
}
