//! Periodic shift-invariant spaces V²_K(λ): signals, the circulant Gram
//! matrix, the biorthogonal dual generator, the reproducing kernel and the
//! orthogonal projector. All inner products are ⟨f | g⟩ = (1/K) ∫₀^K f g.
//!
//! Coefficient `coeffs[k]` multiplies the shift λ(t − k), k = 0..K−1, with
//! shifts taken mod K.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::{
    cardinal_bspline_integral, spline_basis, Family, GeneratorSpec, Order, MAX_DEGREE,
};
use crate::linalg::{dot, SpdFactor, SymMatrix};
use crate::quadrature::GaussLegendre;

/// Step of the dense grid used for sup-norm estimates.
pub const SUP_GRID_STEP: f64 = 1e-3;

impl GeneratorSpec {
    /// Calls `f(k, λ_K(t − k))` for every shift k whose periodized generator
    /// may be nonzero at t, where λ_K(t) = Σ_m λ(t + mK).
    pub fn for_each_shift<F: FnMut(usize, f64)>(&self, t: f64, order: Order, mut f: F) -> Result<()> {
        let kk = self.period;
        match &self.family {
            Family::BSpline { degree } => {
                let d = *degree;
                let a = t + self.spline_offset();
                let base = a.floor();
                let frac = a - base;
                let i0 = base as i64;
                let mut b = [0.0; MAX_DEGREE + 3];
                match order {
                    Order::Value => {
                        spline_basis(d, frac, &mut b);
                        for (i, v) in b.iter().enumerate().take(d + 1) {
                            f(wrap(i0 - i as i64, kk), *v);
                        }
                    }
                    Order::Derivative => {
                        if d == 0 {
                            return Err(Error::UnsupportedOrder(
                                "derivative of the degree-0 box spline",
                            ));
                        }
                        spline_basis(d - 1, frac, &mut b);
                        for i in 0..=d {
                            let here = if i < d { b[i] } else { 0.0 };
                            let left = if i > 0 { b[i - 1] } else { 0.0 };
                            f(wrap(i0 - i as i64, kk), here - left);
                        }
                    }
                    Order::Antiderivative => {
                        return Err(Error::UnsupportedOrder(
                            "pointwise antiderivative of a periodized generator",
                        ))
                    }
                }
            }
            Family::Sinc => {
                for k in 0..kk {
                    f(k, periodic_sinc(t - k as f64, kk, order)?);
                }
            }
            Family::Tabulated { .. } => {
                let (lo, hi) = self.support().expect("tabulated support");
                for k in 0..kk {
                    let r = self.reduce(t - k as f64);
                    if (lo..=hi).contains(&r) {
                        f(k, self.eval(r, order)?);
                    }
                }
            }
        }
        Ok(())
    }

    /// λ_K(t − k).
    pub fn shift_value(&self, t: f64, k: usize, order: Order) -> Result<f64> {
        match self.family {
            Family::Sinc => periodic_sinc(t - k as f64, self.period, order),
            _ => {
                let r = self.reduce(t - k as f64);
                let (lo, hi) = self.support().expect("compact support");
                if r < lo || r > hi {
                    return Ok(0.0);
                }
                match self.eval(r, order) {
                    Err(Error::OutOfTable { .. }) => Ok(0.0),
                    other => other,
                }
            }
        }
    }

    /// Reduces r modulo K into the period window centered on the support.
    fn reduce(&self, r: f64) -> f64 {
        let k = self.period as f64;
        let c = self.support().map(|(a, b)| 0.5 * (a + b)).unwrap_or(0.0);
        let lo = c - k / 2.0;
        r - k * ((r - lo) / k).floor()
    }

    /// ∫_a^b λ_K(u − k) du for any a ≤ b, summing the generator images.
    pub fn shift_integral(&self, a: f64, b: f64, k: usize) -> Result<f64> {
        let (lo, hi) = self
            .support()
            .ok_or(Error::UnsupportedGenerator("integrals need a compactly supported generator"))?;
        let kk = self.period as f64;
        let a0 = a - k as f64;
        let b0 = b - k as f64;
        let m_lo = ((a0 - hi) / kk).ceil() as i64;
        let m_hi = ((b0 - lo) / kk).floor() as i64;
        let mut acc = 0.0;
        for m in m_lo..=m_hi {
            let shift = m as f64 * kk;
            acc += self.antiderivative(b0 - shift) - self.antiderivative(a0 - shift);
        }
        Ok(acc)
    }

    fn antiderivative(&self, x: f64) -> f64 {
        match self.family {
            Family::BSpline { degree } => cardinal_bspline_integral(degree, x + self.spline_offset()),
            _ => self.eval(x, Order::Antiderivative).unwrap_or(0.0),
        }
    }
}

#[inline]
fn wrap(i: i64, k: usize) -> usize {
    i.rem_euclid(k as i64) as usize
}

/// Σ_m sinc(r + mK) summed symmetrically, i.e. the Dirichlet kernel
/// (1/K) Σ_{|n| < K/2} e^{2πinr/K}, with a half-weight Nyquist cosine when K
/// is even.
fn periodic_sinc(r: f64, k: usize, order: Order) -> Result<f64> {
    let kf = k as f64;
    let m = (k - 1) / 2;
    let mut acc = match order {
        Order::Value => 1.0,
        Order::Derivative => 0.0,
        Order::Antiderivative => return Err(Error::UnsupportedOrder("antiderivative of sinc")),
    };
    for n in 1..=m {
        let w = 2.0 * PI * n as f64 / kf;
        acc += match order {
            Order::Value => 2.0 * (w * r).cos(),
            _ => -2.0 * w * (w * r).sin(),
        };
    }
    if k % 2 == 0 {
        acc += match order {
            Order::Value => (PI * r).cos(),
            _ => -PI * (PI * r).sin(),
        };
    }
    Ok(acc / kf)
}

/// First row of the symmetric circulant Gram matrix ⟨λ(· − 0) | λ(· − l)⟩.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramMatrix {
    pub first_row: Vec<f64>,
}

impl GramMatrix {
    pub fn to_matrix(&self) -> SymMatrix {
        SymMatrix::circulant(&self.first_row)
    }
}

/// Gram matrix by Gauss–Legendre quadrature on the knot lattice.
pub fn gram_circulant(spec: &GeneratorSpec, k: usize) -> Result<GramMatrix> {
    gram_with_order(spec, k, Order::Value)
}

fn gram_with_order(spec: &GeneratorSpec, k: usize, order: Order) -> Result<GramMatrix> {
    let mut spec = spec.clone();
    spec.period = k;
    check_period(&spec)?;
    let rule = GaussLegendre::new(spec.quadrature_order());
    let (offset, width) = spec.knot_lattice();
    let kf = k as f64;
    let (a, b) = spec.support().unwrap_or((-kf / 2.0, kf / 2.0));
    let mut first_row = vec![0.0; k];
    for l in 0..=k / 2 {
        let mut err = None;
        let v = rule.integrate_on_lattice(a, b, offset, width, |u| {
            let x = spec.shift_value(u, 0, order);
            let y = spec.shift_value(u, l, order);
            match (x, y) {
                (Ok(x), Ok(y)) => x * y,
                (Err(e), _) | (_, Err(e)) => {
                    err.get_or_insert(e);
                    0.0
                }
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        first_row[l] = v / kf;
        first_row[(k - l) % k] = v / kf;
    }
    Ok(GramMatrix { first_row })
}

fn check_period(spec: &GeneratorSpec) -> Result<()> {
    if let Some(s) = spec.support_width() {
        if (spec.period as f64) <= s {
            return Err(Error::PeriodTooSmall {
                k: spec.period,
                support: s,
            });
        }
    }
    Ok(())
}

/// Coefficients g of λ̃ = Σ_m g_m λ(· − m), biorthogonal to the shifts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualGenerator {
    pub dual_coeffs: Vec<f64>,
    /// max_l |(Gram · g − e₀)_l|
    pub residual: f64,
}

pub fn dual_generator(gram: &GramMatrix) -> Result<DualGenerator> {
    let g = gram.to_matrix();
    let factor = SpdFactor::factor(&g, false).map_err(|_| Error::SingularGram)?;
    let n = g.dim();
    let mut e0 = vec![0.0; n];
    e0[0] = 1.0;
    let dual_coeffs = factor.solve(&e0);
    let residual = g
        .matvec(&dual_coeffs)
        .iter()
        .zip(&e0)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(DualGenerator {
        dual_coeffs,
        residual,
    })
}

/// A signal f(t) = Σ_k c_k λ_K(t − k).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SignalRepr")]
pub struct PeriodicSignal {
    pub generator: GeneratorSpec,
    #[serde(rename = "K")]
    pub k: usize,
    pub coeffs: Vec<f64>,
}

#[derive(Deserialize)]
struct SignalRepr {
    generator: GeneratorSpec,
    #[serde(rename = "K")]
    k: usize,
    coeffs: Vec<f64>,
}

impl TryFrom<SignalRepr> for PeriodicSignal {
    type Error = Error;

    fn try_from(r: SignalRepr) -> Result<Self> {
        PeriodicSignal::new(r.generator, r.coeffs).and_then(|s| {
            if s.k == r.k {
                Ok(s)
            } else {
                Err(Error::InvalidInput(format!(
                    "K = {} disagrees with generator period {}",
                    r.k, s.k
                )))
            }
        })
    }
}

impl PeriodicSignal {
    pub fn new(generator: GeneratorSpec, coeffs: Vec<f64>) -> Result<Self> {
        generator.validate()?;
        let k = generator.period;
        if coeffs.len() != k {
            return Err(Error::InvalidInput(format!(
                "expected {k} coefficients, got {}",
                coeffs.len()
            )));
        }
        Ok(Self {
            generator,
            k,
            coeffs,
        })
    }

    pub fn zero(generator: GeneratorSpec) -> Self {
        let k = generator.period;
        Self {
            generator,
            k,
            coeffs: vec![0.0; k],
        }
    }

    pub fn eval(&self, t: f64, order: Order) -> Result<f64> {
        let mut acc = 0.0;
        self.generator
            .for_each_shift(t, order, |k, v| acc += self.coeffs[k] * v)?;
        Ok(acc)
    }

    /// ∫_a^b f.
    pub fn integral(&self, a: f64, b: f64) -> Result<f64> {
        let mut acc = 0.0;
        for (k, c) in self.coeffs.iter().enumerate() {
            if *c != 0.0 {
                acc += c * self.generator.shift_integral(a, b, k)?;
            }
        }
        Ok(acc)
    }

    /// max |f| over a grid of step `SUP_GRID_STEP` on [−K/2, K/2).
    pub fn sup_estimate(&self) -> Result<f64> {
        let n = (self.k as f64 / SUP_GRID_STEP).round() as usize;
        let start = -(self.k as f64) / 2.0;
        let mut best = 0.0f64;
        for i in 0..n {
            let t = start + i as f64 * SUP_GRID_STEP;
            best = best.max(self.eval(t, Order::Value)?.abs());
        }
        Ok(best)
    }
}

pub fn eval_signal(sig: &PeriodicSignal, t: f64, order: Order) -> Result<f64> {
    sig.eval(t, order)
}

/// The space V²_K(λ) with its Gram machinery precomputed.
#[derive(Debug, Clone)]
pub struct PeriodicSpace {
    spec: GeneratorSpec,
    gram: GramMatrix,
    gram_matrix: SymMatrix,
    gram_factor: SpdFactor,
    derivative_gram: Option<SymMatrix>,
    dual: DualGenerator,
    rule: GaussLegendre,
}

impl PeriodicSpace {
    pub fn new(spec: GeneratorSpec) -> Result<Self> {
        spec.validate()?;
        let k = spec.period;
        let gram = gram_circulant(&spec, k)?;
        let gram_matrix = gram.to_matrix();
        let banded = spec.support_width().is_some_and(|s| s < k as f64 / 4.0);
        let gram_factor =
            SpdFactor::factor(&gram_matrix, banded).map_err(|_| Error::SingularGram)?;
        let dual = dual_generator(&gram)?;
        let derivative_gram = match gram_with_order(&spec, k, Order::Derivative) {
            Ok(g) => Some(g.to_matrix()),
            Err(Error::UnsupportedOrder(_)) => None,
            Err(e) => return Err(e),
        };
        let rule = GaussLegendre::new(spec.quadrature_order());
        Ok(Self {
            spec,
            gram,
            gram_matrix,
            gram_factor,
            derivative_gram,
            dual,
            rule,
        })
    }

    pub fn spec(&self) -> &GeneratorSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.period
    }

    pub fn gram(&self) -> &GramMatrix {
        &self.gram
    }

    pub fn gram_matrix(&self) -> &SymMatrix {
        &self.gram_matrix
    }

    pub fn dual(&self) -> &DualGenerator {
        &self.dual
    }

    pub fn derivative_gram(&self) -> Option<&SymMatrix> {
        self.derivative_gram.as_ref()
    }

    /// Gram⁻¹ x: maps ⟨f | λ(· − l)⟩ to coefficients.
    pub fn solve_gram(&self, x: &[f64]) -> Vec<f64> {
        self.gram_factor.solve(x)
    }

    pub fn signal(&self, coeffs: Vec<f64>) -> Result<PeriodicSignal> {
        PeriodicSignal::new(self.spec.clone(), coeffs)
    }

    /// ‖c‖ in the L²_K metric, √(cᵀ Gram c).
    pub fn coeff_norm(&self, c: &[f64]) -> f64 {
        self.gram_matrix.quad_form(c, c).max(0.0).sqrt()
    }

    /// (1/K) ∫ over [a, b] split on the knot lattice.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, f: F) -> f64 {
        let (offset, width) = self.spec.knot_lattice();
        self.rule.integrate_on_lattice(a, b, offset, width, f) / self.dim() as f64
    }

    /// (1/K) ∫ over one period [−K/2, K/2).
    pub fn integrate_period<F: FnMut(f64) -> f64>(&self, f: F) -> f64 {
        let h = self.dim() as f64 / 2.0;
        self.integrate(-h, h, f)
    }

    /// Vector (λ_K(x − k))_k.
    pub fn shift_vector(&self, x: f64) -> Result<Vec<f64>> {
        let mut m = vec![0.0; self.dim()];
        self.spec.for_each_shift(x, Order::Value, |k, v| m[k] += v)?;
        Ok(m)
    }

    /// Coefficients of the reproducing kernel K_x.
    pub fn kernel_coeffs(&self, x: f64) -> Result<Vec<f64>> {
        Ok(self.solve_gram(&self.shift_vector(x)?))
    }

    /// λ̃(t − k) = Σ_m g_m λ_K(t − k − m).
    pub fn dual_shift_value(&self, t: f64, k: usize) -> Result<f64> {
        let n = self.dim();
        let g = &self.dual.dual_coeffs;
        let mut acc = 0.0;
        self.spec.for_each_shift(t, Order::Value, |j, v| {
            acc += g[(j + n - k) % n] * v;
        })?;
        Ok(acc)
    }

    /// Reproducing kernel K_x(t) = Σ_k λ(x − k) λ̃(t − k).
    pub fn kernel_eval(&self, x: f64, t: f64) -> Result<f64> {
        let n = self.dim();
        let g = &self.dual.dual_coeffs;
        let mx = self.shift_vector(x)?;
        let mut acc = 0.0;
        // λ̃(t − k) expands to Σ_j g_{j−k} λ(t − j).
        self.spec.for_each_shift(t, Order::Value, |j, vt| {
            for (k, vx) in mx.iter().enumerate() {
                if *vx != 0.0 {
                    acc += vx * g[(j + n - k) % n] * vt;
                }
            }
        })?;
        Ok(acc)
    }

    /// ⟨h | λ(· − l)⟩ for the step function h = Σ v_c 1_[b_c, b_{c+1}).
    pub fn step_moments(&self, breakpoints: &[f64], values: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        let kf = n as f64;
        let mut out = vec![0.0; n];
        for (cell, v) in breakpoints.windows(2).zip(values) {
            if *v == 0.0 {
                continue;
            }
            for (l, o) in out.iter_mut().enumerate() {
                *o += v * self.spec.shift_integral(cell[0], cell[1], l)? / kf;
            }
        }
        Ok(out)
    }

    pub fn inner_product(&self, f: &PeriodicSignal, g: &PeriodicSignal) -> Result<f64> {
        if f.generator != self.spec || g.generator != self.spec {
            return Err(Error::SpaceMismatch);
        }
        Ok(self.gram_matrix.quad_form(&f.coeffs, &g.coeffs))
    }

    pub fn norms(&self, f: &PeriodicSignal) -> Result<Norms> {
        if f.generator != self.spec {
            return Err(Error::SpaceMismatch);
        }
        let l2_k = self.coeff_norm(&f.coeffs);
        let h1_estimate = self.derivative_gram.as_ref().map(|dg| {
            let d2 = dg.quad_form(&f.coeffs, &f.coeffs).max(0.0);
            (l2_k * l2_k + d2).sqrt()
        });
        Ok(Norms {
            l2_of_coeffs: dot(&f.coeffs, &f.coeffs).sqrt(),
            l2_k,
            sup_estimate: f.sup_estimate()?,
            h1_estimate,
        })
    }

    /// ‖f'‖_{L²_K}, when the generator is differentiable.
    pub fn derivative_norm(&self, c: &[f64]) -> Option<f64> {
        self.derivative_gram
            .as_ref()
            .map(|dg| dg.quad_form(c, c).max(0.0).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub l2_of_coeffs: f64,
    #[serde(rename = "L2_K")]
    pub l2_k: f64,
    pub sup_estimate: f64,
    #[serde(rename = "H1_estimate")]
    pub h1_estimate: Option<f64>,
}

pub fn kernel_eval(space: &PeriodicSpace, x: f64, t: f64) -> Result<f64> {
    space.kernel_eval(x, t)
}

pub fn inner_product(space: &PeriodicSpace, f: &PeriodicSignal, g: &PeriodicSignal) -> Result<f64> {
    space.inner_product(f, g)
}

pub fn norms(space: &PeriodicSpace, f: &PeriodicSignal) -> Result<Norms> {
    space.norms(f)
}

/// Checks that `breakpoints` is strictly increasing and spans exactly one
/// period.
pub fn check_partition(breakpoints: &[f64], k: usize) -> Result<()> {
    if breakpoints.len() < 2 {
        return Err(Error::BadPartition("need at least two breakpoints".into()));
    }
    if breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::BadPartition("breakpoints must increase".into()));
    }
    let span = breakpoints[breakpoints.len() - 1] - breakpoints[0];
    let kf = k as f64;
    if (span - kf).abs() > 1e-9 * kf {
        return Err(Error::BadPartition(format!(
            "partition spans {span}, expected {kf}"
        )));
    }
    Ok(())
}

/// Coefficients of P h for the step function h taking `values[c]` on
/// [breakpoints[c], breakpoints[c+1]); the last cell may wrap past the
/// period boundary.
pub fn project_piecewise_constant(
    space: &PeriodicSpace,
    breakpoints: &[f64],
    values: &[f64],
) -> Result<Vec<f64>> {
    check_partition(breakpoints, space.dim())?;
    if values.len() + 1 != breakpoints.len() {
        return Err(Error::BadPartition(format!(
            "{} values for {} cells",
            values.len(),
            breakpoints.len() - 1
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite step value".into()));
    }
    Ok(space.solve_gram(&space.step_moments(breakpoints, values)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_gram_and_dual() {
        let space = PeriodicSpace::new(GeneratorSpec::bspline(0, 6)).unwrap();
        let row = &space.gram().first_row;
        assert!((row[0] - 1.0 / 6.0).abs() < 1e-15);
        assert!(row[1..].iter().all(|v| v.abs() < 1e-15));
        let g = &space.dual().dual_coeffs;
        assert!((g[0] - 6.0).abs() < 1e-12);
        assert!(g[1..].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn hat_gram_ratio() {
        let gram = gram_circulant(&GeneratorSpec::bspline(1, 8), 8).unwrap();
        let r = &gram.first_row;
        assert!((r[0] - 2.0 / 3.0 / 8.0).abs() < 1e-15);
        assert!((r[1] / r[0] - 0.25).abs() < 1e-14);
        assert!(r[2].abs() < 1e-15);
    }

    #[test]
    fn identity_gram_has_unit_dual() {
        let mut first_row = vec![0.0; 5];
        first_row[0] = 1.0;
        let dual = dual_generator(&GramMatrix { first_row }).unwrap();
        assert_eq!(dual.dual_coeffs, vec![1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(dual.residual, 0.0);
    }

    #[test]
    fn singular_gram_rejected() {
        let g = GramMatrix {
            first_row: vec![1.0, 1.0, 1.0],
        };
        assert!(matches!(dual_generator(&g), Err(Error::SingularGram)));
    }

    #[test]
    fn period_must_exceed_support() {
        assert!(matches!(
            PeriodicSpace::new(GeneratorSpec::bspline(3, 4)),
            Err(Error::PeriodTooSmall { .. })
        ));
    }

    #[test]
    fn box_kernel_is_cell_indicator() {
        let space = PeriodicSpace::new(GeneratorSpec::bspline(0, 10)).unwrap();
        assert!((space.kernel_eval(0.1, -0.3).unwrap() - 10.0).abs() < 1e-12);
        assert!(space.kernel_eval(0.1, 0.7).unwrap().abs() < 1e-12);
    }

    #[test]
    fn sinc_space_interpolates() {
        let spec = GeneratorSpec::sinc(9);
        let f = PeriodicSignal::new(spec.clone(), (0..9).map(|i| i as f64).collect()).unwrap();
        for k in 0..9 {
            assert!((f.eval(k as f64, Order::Value).unwrap() - k as f64).abs() < 1e-12);
        }
        // Periodic sinc matches the truncated image sum far from the edges.
        let direct: f64 = (-4000..=4000)
            .map(|m| spec.eval(0.37 + 9.0 * m as f64, Order::Value).unwrap())
            .sum();
        let periodic = spec.shift_value(0.37, 0, Order::Value).unwrap();
        assert!((direct - periodic).abs() < 1e-4);
    }

    #[test]
    fn partition_errors() {
        let space = PeriodicSpace::new(GeneratorSpec::bspline(1, 4)).unwrap();
        assert!(matches!(
            project_piecewise_constant(&space, &[0.0, 1.0, 0.5, 4.0], &[1.0, 1.0, 1.0]),
            Err(Error::BadPartition(_))
        ));
        assert!(matches!(
            project_piecewise_constant(&space, &[0.0, 1.0, 3.0], &[1.0, 1.0]),
            Err(Error::BadPartition(_))
        ));
        let zero = project_piecewise_constant(&space, &[-2.0, 0.0, 2.0], &[0.0, 0.0]).unwrap();
        assert!(zero.iter().all(|c| *c == 0.0));
    }

    #[test]
    fn signal_json_validates_length() {
        let js = r#"{"generator":{"family":"bspline","degree":1,"period":3,"centered":true},"K":3,"coeffs":[1,2]}"#;
        assert!(serde_json::from_str::<PeriodicSignal>(js).is_err());
        let js = r#"{"generator":{"family":"bspline","degree":1,"period":3,"centered":true},"K":3,"coeffs":[1,2,3]}"#;
        let s: PeriodicSignal = serde_json::from_str(js).unwrap();
        assert_eq!(s.coeffs, vec![1.0, 2.0, 3.0]);
    }
}
