//! Symmetric banded matrices and their `L D L^T` factorization.

use crate::error::{Error, Result};

/// Relative pivot size below which a factorization reports [`Error::SingularJacobian`].
pub const PIVOT_TOL: f64 = 1e-12;

/// Symmetric matrix with `a[i][j] = 0` for `|i - j| > bandwidth`; only the lower band is stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SymBand {
    n: usize,
    bw: usize,
    // row i holds a[i][i - bw ..= i]; entries before column 0 stay zero
    data: Vec<f64>,
}

impl SymBand {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        SymBand { n, bw: bandwidth, data: vec![0.0; n * (bandwidth + 1)] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + self.bw - (i - j)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bw {
            0.0
        } else {
            self.data[self.slot(i, j)]
        }
    }

    /// Adds `v` to `a[i][j]` (and, by symmetry, `a[j][i]`).
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        assert!(i - j <= self.bw, "entry ({i}, {j}) outside the band");
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            for j in lo..i {
                let a = self.data[self.slot(i, j)];
                y[i] += a * x[j];
                y[j] += a * x[i];
            }
            y[i] += self.data[self.slot(i, i)] * x[i];
        }
        y
    }

    /// `L D L^T` without pivoting. Fails on a pivot smaller than `PIVOT_TOL` times the
    /// largest diagonal magnitude.
    pub fn factor(&self) -> Result<LdlFactor> {
        let (n, bw) = (self.n, self.bw);
        let scale = (0..n).map(|i| self.get(i, i).abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let mut l = self.data.clone();
        let mut d = vec![0.0; n];
        let mut w = vec![0.0; bw];
        for j in 0..n {
            let lo = j.saturating_sub(bw);
            // w[k - lo] = L[j][k] D[k]
            let mut djj = l[j * (bw + 1) + bw];
            for k in lo..j {
                let ljk = l[j * (bw + 1) + bw - (j - k)];
                w[k - lo] = ljk * d[k];
                djj -= ljk * w[k - lo];
            }
            if djj.abs() < PIVOT_TOL * scale || !djj.is_finite() {
                return Err(Error::SingularJacobian { pivot: djj, row: j });
            }
            d[j] = djj;
            for i in j + 1..(j + bw + 1).min(n) {
                let base = i * (bw + 1) + bw - i;
                let mut s = l[base + j];
                for k in lo.max(i.saturating_sub(bw))..j {
                    s -= l[base + k] * w[k - lo];
                }
                l[base + j] = s / djj;
            }
        }
        Ok(LdlFactor { n, bw, l, d })
    }
}

#[derive(Debug, Clone)]
pub struct LdlFactor {
    n: usize,
    bw: usize,
    l: Vec<f64>,
    d: Vec<f64>,
}

impl LdlFactor {
    pub fn pivots(&self) -> &[f64] {
        &self.d
    }

    /// Number of negative pivots, which equals the number of negative eigenvalues.
    pub fn negative_count(&self) -> usize {
        self.d.iter().filter(|&&v| v < 0.0).count()
    }

    #[allow(clippy::needless_range_loop)]
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(Error::SizeMismatch(b.len(), self.n));
        }
        let (n, bw) = (self.n, self.bw);
        let mut x = b.to_vec();
        for i in 0..n {
            let base = i * (bw + 1) + bw - i;
            let mut s = x[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.l[base + k] * x[k];
            }
            x[i] = s;
        }
        for i in 0..n {
            x[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..(i + bw + 1).min(n) {
                s -= self.l[k * (bw + 1) + bw - k + i] * x[k];
            }
            x[i] = s;
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn sample(n: usize, bw: usize) -> SymBand {
        let mut a = SymBand::zeros(n, bw);
        for i in 0..n {
            a.add(i, i, 4.0 + (i % 3) as f64);
            for d in 1..=bw.min(i) {
                a.add(i, i - d, ((i * 7 + d * 3) % 5) as f64 * 0.1 - 0.2);
            }
        }
        a
    }

    #[test]
    fn solve_matches_dense() {
        let (n, bw) = (40, 6);
        let a = sample(n, bw);
        let dense = DMatrix::from_fn(n, n, |i, j| a.get(i, j));
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let x = a.factor().unwrap().solve(&b).unwrap();
        let want = dense.lu().solve(&nalgebra::DVector::from_vec(b.clone())).unwrap();
        for i in 0..n {
            assert!((x[i] - want[i]).abs() < 1e-12);
        }
        let r = a.matvec(&x);
        for i in 0..n {
            assert!((r[i] - b[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn indefinite_inertia() {
        let mut a = SymBand::zeros(3, 1);
        a.add(0, 0, 2.0);
        a.add(1, 1, -3.0);
        a.add(2, 2, 1.0);
        a.add(1, 0, 0.5);
        let f = a.factor().unwrap();
        assert_eq!(f.negative_count(), 1);
    }

    #[test]
    fn zero_pivot_reported() {
        let mut a = SymBand::zeros(2, 1);
        a.add(0, 0, 1.0);
        a.add(1, 0, 1.0);
        a.add(1, 1, 1.0);
        assert!(matches!(a.factor(), Err(Error::SingularJacobian { row: 1, .. })));
    }
}
