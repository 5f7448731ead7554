//! Symmetric positive-definite solvers: a dense Cholesky factorization and
//! an envelope (skyline) Cholesky that exploits the cyclic band structure of
//! periodic spline normal matrices.

use crate::error::{Error, Result};

/// Dense symmetric matrix stored in full row-major form.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Circulant matrix with the given first row.
    pub fn circulant(first_row: &[f64]) -> Self {
        let n = first_row.len();
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = first_row[(j + n - i) % n];
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Sets both (i, j) and (j, i).
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    /// Adds `v` to (i, j) and, off the diagonal, to (j, i).
    #[inline]
    pub fn add_sym(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] += v;
        if i != j {
            self.data[j * self.n + i] += v;
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| dot(self.row(i), x)).collect()
    }

    /// x^T A y.
    pub fn quad_form(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(x, &self.matvec(y))
    }

    /// Infinity norm (max absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Relative pivot floor used by both factorizations.
pub const PIVOT_FLOOR: f64 = 1e-12;

/// Lower-triangular factor L with A = L L^T, dense storage.
#[derive(Debug, Clone)]
pub struct DenseCholesky {
    n: usize,
    l: Vec<f64>,
}

impl DenseCholesky {
    pub fn factor(a: &SymMatrix) -> Result<Self> {
        let n = a.dim();
        let floor = PIVOT_FLOOR * a.norm_inf();
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = a.get(j, j);
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > floor) {
                return Err(Error::RankDeficient {
                    pivot: d,
                    column: j,
                });
            }
            let djj = d.sqrt();
            l[j * n + j] = djj;
            for i in j + 1..n {
                let mut s = a.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / djj;
            }
        }
        Ok(Self { n, l })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[i * n + k] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        y
    }
}

/// Envelope Cholesky. Row i of L is stored from its first structurally
/// nonzero column `first[i]` up to the diagonal; the envelope of A is
/// preserved by the factorization, so a cyclic band with half-width s costs
/// O(n s^2) for the band plus O(s^2 n) for the s dense wrap rows.
#[derive(Debug, Clone)]
pub struct SkylineCholesky {
    first: Vec<usize>,
    rows: Vec<Vec<f64>>,
}

impl SkylineCholesky {
    pub fn factor(a: &SymMatrix) -> Result<Self> {
        let n = a.dim();
        let floor = PIVOT_FLOOR * a.norm_inf();
        let first: Vec<usize> = (0..n)
            .map(|i| (0..i).find(|&j| a.get(i, j) != 0.0).unwrap_or(i))
            .collect();
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
        for i in 0..n {
            let fi = first[i];
            let mut row = vec![0.0; i - fi + 1];
            for j in fi..i {
                let fj = first[j];
                let lo = fi.max(fj);
                let mut s = a.get(i, j);
                let rj = &rows[j];
                for k in lo..j {
                    s -= row[k - fi] * rj[k - fj];
                }
                row[j - fi] = s / rj[j - fj];
            }
            let mut d = a.get(i, i);
            for v in &row[..i - fi] {
                d -= v * v;
            }
            if !(d > floor) {
                return Err(Error::RankDeficient {
                    pivot: d,
                    column: i,
                });
            }
            row[i - fi] = d.sqrt();
            rows.push(row);
        }
        Ok(Self { first, rows })
    }

    /// Number of stored entries of L.
    pub fn envelope_size(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.rows.len();
        let mut y = b.to_vec();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.rows[i];
            let mut s = y[i];
            for k in fi..i {
                s -= row[k - fi] * y[k];
            }
            y[i] = s / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.rows[i];
            y[i] /= row[i - fi];
            let xi = y[i];
            for k in fi..i {
                y[k] -= row[k - fi] * xi;
            }
        }
        y
    }
}

/// Either factorization behind one interface.
#[derive(Debug, Clone)]
pub enum SpdFactor {
    Dense(DenseCholesky),
    Skyline(SkylineCholesky),
}

impl SpdFactor {
    /// Picks the envelope solver when `banded` is set.
    pub fn factor(a: &SymMatrix, banded: bool) -> Result<Self> {
        if banded {
            SkylineCholesky::factor(a).map(Self::Skyline)
        } else {
            DenseCholesky::factor(a).map(Self::Dense)
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        match self {
            Self::Dense(f) => f.solve(b),
            Self::Skyline(f) => f.solve(b),
        }
    }

    pub fn is_banded(&self) -> bool {
        matches!(self, Self::Skyline(_))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cyclic_band(n: usize, s: usize) -> SymMatrix {
        let mut a = SymMatrix::zeros(n);
        for i in 0..n {
            a.set(i, i, 4.0 + i as f64 * 0.01);
            for d in 1..=s {
                let j = (i + d) % n;
                a.set(i, j, -0.5 / d as f64);
            }
        }
        a
    }

    #[test]
    fn skyline_matches_dense() {
        let a = cyclic_band(30, 3);
        let b: Vec<f64> = (0..30).map(|i| (i as f64 * 0.7).sin()).collect();
        let x1 = DenseCholesky::factor(&a).unwrap().solve(&b);
        let sky = SkylineCholesky::factor(&a).unwrap();
        let x2 = sky.solve(&b);
        for (u, v) in x1.iter().zip(&x2) {
            assert!((u - v).abs() < 1e-13);
        }
        let r = a.matvec(&x2);
        for (u, v) in r.iter().zip(&b) {
            assert!((u - v).abs() < 1e-12);
        }
        // Band plus three dense wrap rows, far less than the full triangle.
        assert!(sky.envelope_size() < 30 * 31 / 2 / 2);
    }

    #[test]
    fn rank_deficiency_is_reported() {
        let mut a = SymMatrix::zeros(3);
        a.set(0, 0, 1.0);
        a.set(1, 1, 1.0);
        a.set(0, 1, 1.0);
        a.set(2, 2, 1.0);
        assert!(matches!(
            DenseCholesky::factor(&a),
            Err(Error::RankDeficient { column: 1, .. })
        ));
        assert!(matches!(
            SkylineCholesky::factor(&a),
            Err(Error::RankDeficient { column: 1, .. })
        ));
    }

    #[test]
    fn identity_solves_trivially() {
        let f = SpdFactor::factor(&SymMatrix::identity(4), true).unwrap();
        assert_eq!(f.solve(&[1.0, 2.0, 3.0, 4.0]), vec![1.0, 2.0, 3.0, 4.0]);
    }
}
