//! Reconstruction of coefficients from spike times: direct least squares on
//! the sampling matrix, the relaxed frame iteration, the PV iteration and the
//! integrate-and-fire path.
//!
//! All iterative schemes measure errors in the L²_K metric ‖c‖² = cᵀ Gram c,
//! which is the norm their contraction bounds are stated in.

use serde::{Deserialize, Serialize};

use crate::encoders::{density_report, voronoi, SpikeTrain};
use crate::error::{Error, Result};
use crate::generators::{density_bound, spectral_profile, Order, DEFAULT_GRID};
use crate::linalg::{dot, SpdFactor, SymMatrix};
use crate::siss::{check_partition, PeriodicSpace};

/// Sparse row: (shift index, value) pairs.
pub type SparseRow = Vec<(usize, f64)>;

fn sample_row(space: &PeriodicSpace, t: f64) -> Result<SparseRow> {
    let mut row: SparseRow = Vec::new();
    space.spec().for_each_shift(t, Order::Value, |k, v| {
        match row.iter_mut().find(|(j, _)| *j == k) {
            Some(e) => e.1 += v,
            None => row.push((k, v)),
        }
    })?;
    row.sort_by_key(|e| e.0);
    Ok(row)
}

fn row_dot(row: &SparseRow, c: &[f64]) -> f64 {
    row.iter().map(|(k, v)| v * c[*k]).sum()
}

fn apply_rows(rows: &[SparseRow], c: &[f64]) -> Vec<f64> {
    rows.iter().map(|r| row_dot(r, c)).collect()
}

fn apply_rows_t(rows: &[SparseRow], r: &[f64], k: usize) -> Vec<f64> {
    let mut out = vec![0.0; k];
    for (row, ri) in rows.iter().zip(r) {
        for (j, v) in row {
            out[*j] += v * ri;
        }
    }
    out
}

/// Rowsᵀ W rows, touching only entries that share a row.
fn normal_matrix(rows: &[SparseRow], weights: Option<&[f64]>, k: usize) -> SymMatrix {
    let mut u = SymMatrix::zeros(k);
    for (n, row) in rows.iter().enumerate() {
        let w = weights.map_or(1.0, |w| w[n]);
        for (a, (i, vi)) in row.iter().enumerate() {
            for (j, vj) in &row[..=a] {
                let v = w * vi * vj;
                if i == j {
                    u.set(*i, *i, u.get(*i, *i) + v);
                } else {
                    u.add_sym(*i, *j, v);
                }
            }
        }
    }
    u
}

fn solve_least_squares(
    rows: &[SparseRow],
    weights: Option<&[f64]>,
    y: &[f64],
    k: usize,
    banded: bool,
) -> Result<Vec<f64>> {
    let u = normal_matrix(rows, weights, k);
    let wy: Vec<f64> = match weights {
        Some(w) => y.iter().zip(w).map(|(a, b)| a * b).collect(),
        None => y.to_vec(),
    };
    let rhs = apply_rows_t(rows, &wy, k);
    Ok(SpdFactor::factor(&u, banded)?.solve(&rhs))
}

fn banded(space: &PeriodicSpace) -> bool {
    space
        .spec()
        .support_width()
        .is_some_and(|s| s < space.dim() as f64 / 4.0)
}

/// Sampling matrix M_{jk} = λ_K(t_j − k) with Voronoi weights D.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    space: PeriodicSpace,
    times: Vec<f64>,
    rows: Vec<SparseRow>,
    weights: Vec<f64>,
    support: Option<usize>,
    gamma_hint: Option<f64>,
}

pub fn build_system(space: &PeriodicSpace, train: &SpikeTrain) -> Result<LinearSystem> {
    if train.is_empty() {
        return Err(Error::EmptyTrain);
    }
    if train.period() != space.dim() {
        return Err(Error::SpaceMismatch);
    }
    let rows = train
        .times()
        .iter()
        .map(|&t| sample_row(space, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(LinearSystem {
        space: space.clone(),
        times: train.times().to_vec(),
        rows,
        weights: voronoi(train)?.weights,
        support: space.spec().support_width().map(|s| s.ceil() as usize),
        gamma_hint: None,
    })
}

impl LinearSystem {
    /// Records γ = T/τ for callers that want to reuse it.
    pub fn with_gamma_hint(mut self, gamma: f64) -> Self {
        self.gamma_hint = Some(gamma);
        self
    }

    pub fn gamma_hint(&self) -> Option<f64> {
        self.gamma_hint
    }

    pub fn space(&self) -> &PeriodicSpace {
        &self.space
    }

    pub fn period(&self) -> usize {
        self.space.dim()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn row(&self, j: usize) -> &SparseRow {
        &self.rows[j]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Integer support width S, if compact.
    pub fn support(&self) -> Option<usize> {
        self.support
    }

    /// Dense copy of M, row-major J × K.
    pub fn dense_m(&self) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|row| {
                let mut r = vec![0.0; self.period()];
                for (k, v) in row {
                    r[*k] = *v;
                }
                r
            })
            .collect()
    }

    /// M c, i.e. the samples f(t_j).
    pub fn apply(&self, c: &[f64]) -> Vec<f64> {
        apply_rows(&self.rows, c)
    }

    /// Mᵀ r.
    pub fn apply_transpose(&self, r: &[f64]) -> Vec<f64> {
        apply_rows_t(&self.rows, r, self.period())
    }

    /// U = Mᵀ D M when `weighted`, else Mᵀ M. Entries of unrelated shifts
    /// are never written and stay exactly zero.
    pub fn normal_matrix(&self, weighted: bool) -> SymMatrix {
        normal_matrix(
            &self.rows,
            weighted.then_some(self.weights.as_slice()),
            self.period(),
        )
    }

    /// (1/K) Gram⁻¹ Mᵀ D M c: the frame operator in coefficient space.
    pub fn frame_operator(&self, c: &[f64]) -> Vec<f64> {
        let mc = self.apply(c);
        let dmc: Vec<f64> = mc.iter().zip(&self.weights).map(|(a, w)| a * w).collect();
        self.scaled_gram_solve(&self.apply_transpose(&dmc))
    }

    fn scaled_gram_solve(&self, x: &[f64]) -> Vec<f64> {
        let inv_k = 1.0 / self.period() as f64;
        let mut v = self.space.solve_gram(x);
        v.iter_mut().for_each(|e| *e *= inv_k);
        v
    }

    fn check_len(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.len() {
            return Err(Error::InvalidInput(format!(
                "{} amplitudes for {} spikes",
                y.len(),
                self.len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodeResult {
    pub coeffs: Vec<f64>,
    pub iterations: usize,
    #[serde(rename = "residuals")]
    pub residual_history: Vec<f64>,
    pub converged: bool,
}

/// Least-squares solution of M c ≈ y through the normal equations,
/// Voronoi-weighted when `weighted`.
pub fn decode_pinv(sys: &LinearSystem, y: &[f64], weighted: bool) -> Result<DecodeResult> {
    sys.check_len(y)?;
    let weights = weighted.then_some(sys.weights.as_slice());
    let coeffs = solve_least_squares(&sys.rows, weights, y, sys.period(), banded(&sys.space))?;
    let resid: Vec<f64> = sys.apply(&coeffs).iter().zip(y).map(|(a, b)| a - b).collect();
    Ok(DecodeResult {
        coeffs,
        iterations: 1,
        residual_history: vec![dot(&resid, &resid).sqrt()],
        converged: true,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterConfig {
    /// Stop once ‖Δc‖ ≤ tol ‖c‖.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for IterConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 500,
        }
    }
}

/// μ = 1/(1+γ²) and β = 2γ/(1+γ²).
pub fn relaxation(gamma: f64) -> Result<(f64, f64)> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::InvalidGamma(gamma));
    }
    let g2 = 1.0 + gamma * gamma;
    Ok((1.0 / g2, 2.0 * gamma / g2))
}

/// c ← c + μ (1/K) Gram⁻¹ Mᵀ D (y − M c), one step per call.
#[derive(Debug, Clone)]
pub struct FrameIteration<'a> {
    sys: &'a LinearSystem,
    y: &'a [f64],
    mu: f64,
    coeffs: Vec<f64>,
}

impl<'a> FrameIteration<'a> {
    pub fn new(sys: &'a LinearSystem, y: &'a [f64], gamma: f64) -> Result<Self> {
        sys.check_len(y)?;
        let (mu, _) = relaxation(gamma)?;
        Ok(Self {
            sys,
            y,
            mu,
            coeffs: vec![0.0; sys.period()],
        })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Performs one step and returns the L²_K norm of the update.
    pub fn step(&mut self) -> f64 {
        let sys = self.sys;
        let mc = sys.apply(&self.coeffs);
        let r: Vec<f64> = self
            .y
            .iter()
            .zip(&mc)
            .zip(&sys.weights)
            .map(|((y, m), w)| w * (y - m))
            .collect();
        let mut delta = sys.scaled_gram_solve(&sys.apply_transpose(&r));
        delta.iter_mut().for_each(|d| *d *= self.mu);
        for (c, d) in self.coeffs.iter_mut().zip(&delta) {
            *c += d;
        }
        sys.space.coeff_norm(&delta)
    }
}

enum Stall {
    NotContractive,
    NonConvergent,
}

fn drive<S: FnMut() -> f64, N: Fn() -> f64>(
    mut step: S,
    norm: N,
    cfg: &IterConfig,
    stall: Stall,
) -> Result<(usize, Vec<f64>, bool)> {
    let mut history: Vec<f64> = Vec::new();
    let mut rising = 0;
    for it in 1..=cfg.max_iter {
        let upd = step();
        if !upd.is_finite() {
            return Err(Error::NonConvergent { iterations: it });
        }
        let ratio = history.last().map(|p| upd / p);
        history.push(upd);
        if upd == 0.0 || upd <= cfg.tol * norm() {
            return Ok((it, history, true));
        }
        match ratio {
            Some(r) if r >= 1.0 => {
                rising += 1;
                if matches!(stall, Stall::NotContractive) && rising >= 5 {
                    return Err(Error::NotContractive { ratio: r });
                }
            }
            _ => rising = 0,
        }
    }
    if matches!(stall, Stall::NonConvergent) && rising > 0 {
        return Err(Error::NonConvergent {
            iterations: cfg.max_iter,
        });
    }
    Ok((cfg.max_iter, history, false))
}

/// Relaxed frame iteration with γ = T/τ ∈ [0, 1).
pub fn decode_frame_iterative(
    sys: &LinearSystem,
    y: &[f64],
    gamma: f64,
    cfg: &IterConfig,
) -> Result<DecodeResult> {
    let mut it = FrameIteration::new(sys, y, gamma)?;
    let cell = std::cell::RefCell::new(&mut it);
    let (iterations, history, converged) = drive(
        || cell.borrow_mut().step(),
        || {
            let it = cell.borrow();
            sys.space.coeff_norm(it.coeffs())
        },
        cfg,
        Stall::NotContractive,
    )?;
    Ok(DecodeResult {
        coeffs: it.coeffs,
        iterations,
        residual_history: history,
        converged,
    })
}

/// Power iteration estimate of ‖I − μ U‖ in the L²_K metric, with U the
/// normalized frame operator.
pub fn operator_norm_estimate(sys: &LinearSystem, mu: f64) -> f64 {
    let k = sys.period();
    let space = &sys.space;
    let mut v: Vec<f64> = (0..k)
        .map(|i| 1.0 + 0.5 * (1.7 * i as f64).sin() + 0.25 * (0.3 * i as f64).cos())
        .collect();
    let n0 = space.coeff_norm(&v);
    v.iter_mut().for_each(|e| *e /= n0);
    let mut estimate = 0.0;
    for _ in 0..200 {
        let u = sys.frame_operator(&v);
        let w: Vec<f64> = v.iter().zip(&u).map(|(a, b)| a - mu * b).collect();
        let nw = space.coeff_norm(&w);
        let prev = estimate;
        estimate = nw;
        if nw == 0.0 {
            break;
        }
        v = w.into_iter().map(|e| e / nw).collect();
        if (estimate - prev).abs() <= 1e-10 * estimate {
            break;
        }
    }
    estimate
}

/// Acell_{kj} = ∫_{s_j}^{s_{j+1}} λ̃(u − k) du over the Voronoi cells, stored
/// row-major K × J.
#[derive(Debug, Clone, PartialEq)]
pub struct DualCellMatrix {
    k: usize,
    j: usize,
    data: Vec<f64>,
}

impl DualCellMatrix {
    pub fn rows(&self) -> usize {
        self.k
    }

    pub fn cols(&self) -> usize {
        self.j
    }

    pub fn get(&self, k: usize, j: usize) -> f64 {
        self.data[k * self.j + j]
    }

    /// Acell h.
    pub fn apply(&self, h: &[f64]) -> Vec<f64> {
        self.data.chunks(self.j).map(|row| dot(row, h)).collect()
    }
}

/// Moments of λ over each cell [b_c, b_{c+1}), as sparse rows.
fn cell_integrals(space: &PeriodicSpace, breakpoints: &[f64]) -> Result<Vec<SparseRow>> {
    let spec = space.spec();
    breakpoints
        .windows(2)
        .map(|w| {
            let mut row = SparseRow::new();
            for k in 0..space.dim() {
                let v = spec.shift_integral(w[0], w[1], k)?;
                if v != 0.0 {
                    row.push((k, v));
                }
            }
            Ok(row)
        })
        .collect()
}

pub fn dual_cell_matrix(space: &PeriodicSpace, train: &SpikeTrain) -> Result<DualCellMatrix> {
    if train.is_empty() {
        return Err(Error::EmptyTrain);
    }
    let cells = voronoi(train)?.breakpoints(space.dim());
    let b = cell_integrals(space, &cells)?;
    let k = space.dim();
    let j = b.len();
    let mut data = vec![0.0; k * j];
    for (col, row) in b.iter().enumerate() {
        let mut e = vec![0.0; k];
        for (i, v) in row {
            e[*i] = *v;
        }
        for (i, v) in space.solve_gram(&e).into_iter().enumerate() {
            data[i * j + col] = v;
        }
    }
    Ok(DualCellMatrix { k, j, data })
}

/// Coefficients of PV, f ↦ (1/K) Acell M c, iterated as
/// c₁ = (1/K) Acell y, c_{n+1} = c₁ + c_n − (1/K) Acell M c_n.
#[derive(Debug, Clone)]
pub struct PvIteration {
    sys: LinearSystem,
    cell: DualCellMatrix,
    first: Vec<f64>,
    coeffs: Vec<f64>,
}

impl PvIteration {
    pub fn new(space: &PeriodicSpace, train: &SpikeTrain, y: &[f64]) -> Result<Self> {
        let sys = build_system(space, train)?;
        sys.check_len(y)?;
        let cell = dual_cell_matrix(space, train)?;
        let inv_k = 1.0 / space.dim() as f64;
        let first = cell.apply(y).into_iter().map(|v| v * inv_k).collect();
        Ok(Self {
            coeffs: vec![0.0; space.dim()],
            sys,
            cell,
            first,
        })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn dual_cells(&self) -> &DualCellMatrix {
        &self.cell
    }

    /// Coefficients of PV applied to the signal with coefficients `c`.
    pub fn apply_pv(&self, c: &[f64]) -> Vec<f64> {
        let inv_k = 1.0 / self.sys.period() as f64;
        self.cell
            .apply(&self.sys.apply(c))
            .into_iter()
            .map(|v| v * inv_k)
            .collect()
    }

    /// One step; returns the L²_K norm of the update.
    pub fn step(&mut self) -> f64 {
        let pv = self.apply_pv(&self.coeffs);
        let next: Vec<f64> = self
            .first
            .iter()
            .zip(&self.coeffs)
            .zip(&pv)
            .map(|((f, c), p)| f + c - p)
            .collect();
        let delta: Vec<f64> = next.iter().zip(&self.coeffs).map(|(a, b)| a - b).collect();
        self.coeffs = next;
        self.sys.space.coeff_norm(&delta)
    }
}

/// τ of the space's default spectral profile.
pub fn default_tau(space: &PeriodicSpace) -> Result<f64> {
    let spec = space.spec();
    let profile = spectral_profile(spec, DEFAULT_GRID, spec.default_k_max())?;
    Ok(density_bound(&profile)?.tau)
}

/// PV iteration. The train must be T-dense with T < τ; `tau` overrides the
/// value from the default spectral profile.
pub fn decode_pv_iterative(
    space: &PeriodicSpace,
    train: &SpikeTrain,
    y: &[f64],
    tau: Option<f64>,
    cfg: &IterConfig,
) -> Result<DecodeResult> {
    let tau = match tau {
        Some(t) => t,
        None => default_tau(space)?,
    };
    let max_gap = density_report(train)?.max_gap;
    if max_gap >= tau {
        return Err(Error::NotDenseEnough { max_gap, t: tau });
    }
    let mut it = PvIteration::new(space, train, y)?;
    let cell = std::cell::RefCell::new(&mut it);
    let (iterations, history, converged) = drive(
        || cell.borrow_mut().step(),
        || space.coeff_norm(cell.borrow().coeffs()),
        cfg,
        Stall::NonConvergent,
    )?;
    Ok(DecodeResult {
        coeffs: it.coeffs,
        iterations,
        residual_history: history,
        converged,
    })
}

/// Integration intervals of an IF train: [−K/2, t₁], [t₁, t₂], …, [t_{J−1}, t_J].
pub fn if_boundaries(train: &SpikeTrain) -> Vec<f64> {
    let mut b = Vec::with_capacity(train.len() + 1);
    b.push(train.origin());
    b.extend_from_slice(train.times());
    b
}

/// Integral-sample matrix B_{nk} = ∫_{b_n}^{b_{n+1}} λ_K(u − k) du.
pub fn integral_rows(space: &PeriodicSpace, boundaries: &[f64]) -> Result<Vec<SparseRow>> {
    if boundaries.len() < 2 {
        return Err(Error::EmptyTrain);
    }
    if boundaries.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::BadPartition("interval boundaries must increase".into()));
    }
    cell_integrals(space, boundaries)
}

/// Direct IF decoding: weighted least squares on B c = q with weights
/// 1/(b_{n+1} − b_n).
pub fn decode_if(space: &PeriodicSpace, boundaries: &[f64], q: &[f64]) -> Result<DecodeResult> {
    let rows = integral_rows(space, boundaries)?;
    if q.len() != rows.len() {
        return Err(Error::InvalidInput(format!(
            "{} integrals for {} intervals",
            q.len(),
            rows.len()
        )));
    }
    let w: Vec<f64> = boundaries.windows(2).map(|b| 1.0 / (b[1] - b[0])).collect();
    let coeffs = solve_least_squares(&rows, Some(&w), q, space.dim(), banded(space))?;
    let resid: Vec<f64> = apply_rows(&rows, &coeffs)
        .iter()
        .zip(q)
        .map(|(a, b)| a - b)
        .collect();
    Ok(DecodeResult {
        coeffs,
        iterations: 1,
        residual_history: vec![dot(&resid, &resid).sqrt()],
        converged: true,
    })
}

/// PZ in coefficient space for intervals tiling one period:
/// c ↦ (1/K) Gram⁻¹ Σ_n (B c)_n m(mid_n), where m(x) = (λ_K(x − k))_k and
/// mid_n is the midpoint of interval n.
#[derive(Debug, Clone)]
pub struct IntegralOperator {
    space: PeriodicSpace,
    integrals: Vec<SparseRow>,
    midpoint_rows: Vec<SparseRow>,
}

impl IntegralOperator {
    pub fn new(space: &PeriodicSpace, boundaries: &[f64]) -> Result<Self> {
        check_partition(boundaries, space.dim())?;
        let integrals = integral_rows(space, boundaries)?;
        let midpoint_rows = boundaries
            .windows(2)
            .map(|w| sample_row(space, 0.5 * (w[0] + w[1])))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            space: space.clone(),
            integrals,
            midpoint_rows,
        })
    }

    fn lift(&self, q: &[f64]) -> Vec<f64> {
        let k = self.space.dim();
        let inv_k = 1.0 / k as f64;
        let mut v = self
            .space
            .solve_gram(&apply_rows_t(&self.midpoint_rows, q, k));
        v.iter_mut().for_each(|e| *e *= inv_k);
        v
    }

    /// Coefficients of PZ f.
    pub fn apply_pz(&self, c: &[f64]) -> Vec<f64> {
        self.lift(&apply_rows(&self.integrals, c))
    }

    /// Coefficients of PV′ g, V′ being the step function with value
    /// g(mid_n) on interval n.
    pub fn apply_pv_prime(&self, c: &[f64]) -> Vec<f64> {
        let k = self.space.dim();
        let inv_k = 1.0 / k as f64;
        let samples = apply_rows(&self.midpoint_rows, c);
        let mut v = self
            .space
            .solve_gram(&apply_rows_t(&self.integrals, &samples, k));
        v.iter_mut().for_each(|e| *e *= inv_k);
        v
    }

    /// Interval integrals (B c)_n.
    pub fn integrals(&self, c: &[f64]) -> Vec<f64> {
        apply_rows(&self.integrals, c)
    }

    pub fn midpoint_samples(&self, c: &[f64]) -> Vec<f64> {
        apply_rows(&self.midpoint_rows, c)
    }
}

/// Iterative IF decoding with Z in place of V; the intervals must tile one
/// period.
pub fn decode_if_iterative(
    space: &PeriodicSpace,
    boundaries: &[f64],
    q: &[f64],
    cfg: &IterConfig,
) -> Result<DecodeResult> {
    let op = IntegralOperator::new(space, boundaries)?;
    if q.len() + 1 != boundaries.len() {
        return Err(Error::InvalidInput(format!(
            "{} integrals for {} intervals",
            q.len(),
            boundaries.len() - 1
        )));
    }
    let first = op.lift(q);
    let mut coeffs = vec![0.0; space.dim()];
    let state = std::cell::RefCell::new(&mut coeffs);
    let (iterations, history, converged) = drive(
        || {
            let mut c = state.borrow_mut();
            let pz = op.apply_pz(&c);
            // c_{n+1} − c_n = c₁ − PZ c_n
            let delta: Vec<f64> = first.iter().zip(&pz).map(|(f, p)| f - p).collect();
            for (x, d) in c.iter_mut().zip(&delta) {
                *x += d;
            }
            space.coeff_norm(&delta)
        },
        || space.coeff_norm(&state.borrow()),
        cfg,
        Stall::NonConvergent,
    )?;
    Ok(DecodeResult {
        coeffs,
        iterations,
        residual_history: history,
        converged,
    })
}

/// Decoder selection shared by the CLI and the noise experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecoderKind {
    /// Voronoi-weighted least squares.
    #[default]
    Pinv,
    /// Unweighted least squares, (MᵀM)⁻¹Mᵀ.
    PinvPlain,
    Frame,
    Pv,
}

impl std::str::FromStr for DecoderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pinv" => Ok(Self::Pinv),
            "pinv-plain" => Ok(Self::PinvPlain),
            "frame" => Ok(Self::Frame),
            "pv" => Ok(Self::Pv),
            _ => Err(Error::InvalidInput(format!("unknown decoder {s:?}"))),
        }
    }
}

impl std::fmt::Display for DecoderKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Pinv => "pinv",
            Self::PinvPlain => "pinv-plain",
            Self::Frame => "frame",
            Self::Pv => "pv",
        })
    }
}

/// Runs the selected decoder on crossing samples. The iterative decoders
/// use γ = (max gap)/τ.
pub fn decode_with(
    kind: DecoderKind,
    space: &PeriodicSpace,
    train: &SpikeTrain,
    y: &[f64],
    tau: f64,
    cfg: &IterConfig,
) -> Result<DecodeResult> {
    match kind {
        DecoderKind::Pinv | DecoderKind::PinvPlain => {
            let sys = build_system(space, train)?;
            decode_pinv(&sys, y, kind == DecoderKind::Pinv)
        }
        DecoderKind::Frame => {
            let gamma = density_report(train)?.max_gap / tau;
            let sys = build_system(space, train)?.with_gamma_hint(gamma);
            decode_frame_iterative(&sys, y, gamma, cfg)
        }
        DecoderKind::Pv => decode_pv_iterative(space, train, y, Some(tau), cfg),
    }
}
