//! Hessian of `Phi_m` at the regular polygon.
//!
//! In polar block coordinates the Hessian is block circulant, `H_{jk} = C_{(k-j) mod m}`,
//! so conjugating by the discrete Fourier transform splits it into `m` Hermitian
//! 2x2 blocks `M_p = sum_l C_l w^{pl}` with closed-form entries.

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::params::{polygon_rho, DiskParams, PeakCount};

/// Relative threshold for calling an eigenvalue zero.
pub const ZERO_EIGEN_REL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct BlockCirculant {
    pub blocks: Vec<Matrix2<f64>>,
    pub rho: f64,
    /// `2 pi l / m`, `l = 0..m`.
    pub angles: Vec<f64>,
    /// `1 + rho^2 - 2 rho cos(2 pi l / m)`.
    pub gaps: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeSums {
    pub r: f64,
    pub s: f64,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeBlock {
    pub p: usize,
    pub mu: f64,
    pub nu: f64,
    pub gamma: f64,
    pub x_p: f64,
    pub y_p: f64,
    pub a_hat: f64,
    pub b_hat: f64,
}

impl ModeBlock {
    pub fn det(&self) -> f64 {
        self.mu * self.nu - self.gamma * self.gamma
    }

    /// Closed-form eigenvalues, ascending.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let mean = 0.5 * (self.mu + self.nu);
        let rad = (0.5 * (self.mu - self.nu)).hypot(self.gamma);
        [mean - rad, mean + rad]
    }

    /// The block as it appears on the diagonal of the Fourier-conjugated Hessian:
    /// `[[mu, i gamma], [-i gamma, nu]]`.
    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        let ig = Complex64::new(0.0, self.gamma);
        [[Complex64::new(self.mu, 0.0), ig], [-ig, Complex64::new(self.nu, 0.0)]]
    }
}

fn setup(p: &DiskParams, m: PeakCount) -> Result<(f64, usize)> {
    Ok((polygon_rho(p, m)?, m.get()))
}

pub fn lattice_sums(p: &DiskParams, m: PeakCount, pmode: usize) -> Result<LatticeSums> {
    let (rho, m) = setup(p, m)?;
    if pmode >= m {
        return Err(Error::Domain(format!("mode {pmode} outside 0..{m}")));
    }
    Ok(lattice_sums_rho(rho, m, pmode))
}

fn lattice_sums_rho(rho: f64, m: usize, pm: usize) -> LatticeSums {
    let (mf, pf) = (m as f64, pm as f64);
    let r = (mf * mf - 1.0) / 3.0 - 2.0 * pf * (mf - pf);
    let rp = rho.powi(pm as i32);
    let rq = rho.powi((m - pm) as i32);
    let rm = rho.powi(m as i32);
    let r2 = rho * rho;
    let s = mf * (rp + rq) / ((1.0 - r2) * (1.0 - rm));
    let q = mf - pf;
    let t = mf / ((1.0 - r2).powi(3) * (1.0 - rm).powi(2))
        * (rp * ((pf + 1.0) - (pf - 1.0) * r2 + rm * (q - 1.0 - (q + 1.0) * r2))
            + rq * ((q + 1.0) - (q - 1.0) * r2 + rm * (pf - 1.0 - (pf + 1.0) * r2)));
    LatticeSums { r, s, t }
}

pub fn assemble_blocks(p: &DiskParams, m: PeakCount) -> Result<BlockCirculant> {
    let (rho, m) = setup(p, m)?;
    let alpha = p.alpha();
    let angles: Vec<f64> = (0..m).map(|l| TAU * l as f64 / m as f64).collect();
    let gaps: Vec<f64> = angles.iter().map(|t| 1.0 + rho * rho - 2.0 * rho * t.cos()).collect();
    let mf = m as f64;
    let sq = rho.sqrt();
    let w = (1.0 - rho * rho).powi(2);

    let LatticeSums { s: s0, t: t0, .. } = lattice_sums_rho(rho, m, 0);
    // off-diagonal parts of S_0 and T_0 (drop the l = 0 term)
    let s0 = s0 - (1.0 - rho).powi(-2);
    let t0 = t0 - (1.0 - rho).powi(-4);
    let a0 = -2.0 * alpha / rho - 4.0 * (1.0 + rho) / (1.0 - rho).powi(2) + 4.0 / rho * s0
        - 2.0 * w / rho * t0
        - (mf * mf - 1.0) / (3.0 * rho);
    let c0 = (mf * mf - 1.0) / 3.0 + 2.0 * w * t0 - 2.0 * (1.0 + rho * rho) * s0;

    let mut blocks = vec![Matrix2::new(a0, 0.0, 0.0, c0)];
    for l in 1..m {
        let (th, d) = (angles[l], gaps[l]);
        let sh2 = (0.5 * th).sin().powi(2);
        let a = 1.0 / (rho * sh2) + 2.0 * (1.0 + rho * rho) / (rho * d) - 2.0 * w / (rho * d * d);
        let c = -1.0 / sh2 + 2.0 * (1.0 + rho * rho) / d - 2.0 * w / (d * d);
        let b = -4.0 * sq * (1.0 - rho * rho) * th.sin() / (d * d);
        blocks.push(Matrix2::new(a, -b, b, c));
    }
    Ok(BlockCirculant { blocks, rho, angles, gaps })
}

impl BlockCirculant {
    pub fn m(&self) -> usize {
        self.blocks.len()
    }

    /// The full `2m x 2m` polar Hessian.
    pub fn dense(&self) -> DMatrix<f64> {
        let m = self.m();
        let mut h = DMatrix::zeros(2 * m, 2 * m);
        for j in 0..m {
            for k in 0..m {
                let c = &self.blocks[(k + m - j) % m];
                h.view_mut((2 * j, 2 * k), (2, 2)).copy_from(c);
            }
        }
        h
    }

    /// `J^{-T} H J^{-1}` with `J = d(x, y)/d(r, theta)` at the polygon with a vertex on the positive axis.
    pub fn cartesian(&self) -> DMatrix<f64> {
        let m = self.m();
        let r = self.rho.sqrt();
        let mut jinv = DMatrix::zeros(2 * m, 2 * m);
        for j in 0..m {
            let (s, c) = self.angles[j].sin_cos();
            jinv[(2 * j, 2 * j)] = c;
            jinv[(2 * j, 2 * j + 1)] = s;
            jinv[(2 * j + 1, 2 * j)] = -s / r;
            jinv[(2 * j + 1, 2 * j + 1)] = c / r;
        }
        jinv.transpose() * self.dense() * jinv
    }

    /// `sum_l C_l w^{pl}`.
    pub fn dft_block(&self, pmode: usize) -> [[Complex64; 2]; 2] {
        let m = self.m();
        let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
        for (l, c) in self.blocks.iter().enumerate() {
            let w = Complex64::from_polar(1.0, TAU * ((pmode * l) % m) as f64 / m as f64);
            for (a, row) in out.iter_mut().enumerate() {
                for (b, v) in row.iter_mut().enumerate() {
                    *v += c[(a, b)] * w;
                }
            }
        }
        out
    }
}

fn mode_block_closed(p: &DiskParams, rho: f64, m: usize, pmode: usize) -> ModeBlock {
    let b = p.beta();
    let (mf, pf) = (m as f64, pmode as f64);
    let x_p = (b + mf) * rho.powi((m - pmode) as i32);
    let y_p = (b + mf) * rho.powi(pmode as i32);
    let a_hat = b - mf + 2.0 * pf;
    let b_hat = b + mf - 2.0 * pf;
    ModeBlock {
        p: pmode,
        mu: -(x_p + a_hat) * (y_p + b_hat) / (2.0 * rho),
        nu: (x_p - a_hat) * (y_p - b_hat) / 2.0,
        gamma: (a_hat * y_p - b_hat * x_p) / (2.0 * rho.sqrt()),
        x_p,
        y_p,
        a_hat,
        b_hat,
    }
}

fn block_distance(a: &[[Complex64; 2]; 2], b: &[[Complex64; 2]; 2]) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            d = d.max((a[i][j] - b[i][j]).norm());
        }
    }
    d
}

pub fn mode_block(p: &DiskParams, m: PeakCount, pmode: usize) -> Result<ModeBlock> {
    let (rho, mm) = setup(p, m)?;
    if pmode >= mm {
        return Err(Error::Domain(format!("mode {pmode} outside 0..{mm}")));
    }
    let mb = mode_block_closed(p, rho, mm, pmode);
    let bc = assemble_blocks(p, m)?;
    let dft = bc.dft_block(pmode);
    let scale = mb.mu.abs().max(mb.nu.abs()).max(mb.gamma.abs()).max(1.0);
    let dev = block_distance(&dft, &mb.matrix());
    if dev > 1e-9 * scale {
        return Err(Error::InternalInconsistency(format!(
            "mode {pmode}: Fourier sum and closed form differ by {dev:e}"
        )));
    }
    Ok(mb)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    /// All `2m` eigenvalues of the polar Hessian, ascending.
    pub eigenvalues: Vec<f64>,
    /// Normalized Cartesian kernel vector `(0, 1, -sin t_2, cos t_2, ...)`.
    pub zero_vector: Vec<f64>,
}

impl Spectrum {
    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn zero_count(&self) -> usize {
        let thr = ZERO_EIGEN_REL * self.spectral_radius();
        self.eigenvalues.iter().filter(|v| v.abs() < thr).count()
    }
}

pub fn full_spectrum(p: &DiskParams, m: PeakCount) -> Result<Spectrum> {
    let mm = m.get();
    let mut eigenvalues = Vec::with_capacity(2 * mm);
    for pmode in 0..mm {
        eigenvalues.extend(mode_block(p, m, pmode)?.eigenvalues());
    }
    eigenvalues.sort_by(f64::total_cmp);
    let mut zero_vector: Vec<f64> = (0..mm)
        .flat_map(|j| {
            let (s, c) = (TAU * j as f64 / mm as f64).sin_cos();
            [-s, c]
        })
        .collect();
    let n = zero_vector.iter().map(|v| v * v).sum::<f64>().sqrt();
    zero_vector.iter_mut().for_each(|v| *v /= n);
    Ok(Spectrum { eigenvalues, zero_vector })
}

/// Off-block-diagonal mass of `(F* x E) H (F x E) / m` plus the largest deviation
/// of its diagonal blocks from the closed-form mode blocks.
pub fn dft_conjugation_residual(p: &DiskParams, m: PeakCount) -> Result<f64> {
    let (rho, mm) = setup(p, m)?;
    let h = assemble_blocks(p, m)?.dense().map(|v| Complex64::new(v, 0.0));
    let mut u = DMatrix::<Complex64>::zeros(2 * mm, 2 * mm);
    for j in 0..mm {
        for k in 0..mm {
            let w = Complex64::from_polar(1.0, TAU * ((j * k) % mm) as f64 / mm as f64);
            u[(2 * j, 2 * k)] = w;
            u[(2 * j + 1, 2 * k + 1)] = w;
        }
    }
    let conj = u.adjoint() * h * &u / Complex64::new(mm as f64, 0.0);
    let mut off: f64 = 0.0;
    let mut diag: f64 = 0.0;
    for bp in 0..mm {
        for bq in 0..mm {
            let blk = [
                [conj[(2 * bp, 2 * bq)], conj[(2 * bp, 2 * bq + 1)]],
                [conj[(2 * bp + 1, 2 * bq)], conj[(2 * bp + 1, 2 * bq + 1)]],
            ];
            if bp == bq {
                let want = mode_block_closed(p, rho, mm, bp).matrix();
                diag = diag.max(block_distance(&blk, &want));
            } else {
                off = off.max(block_distance(&blk, &[[Complex64::new(0.0, 0.0); 2]; 2]));
            }
        }
    }
    Ok(off + diag)
}

/// `csc^2(pi l / m)` summed against `w^{pl}`; exposed for cross-checks of `R_p`.
pub fn csc_sum(m: usize, pmode: usize) -> f64 {
    (1..m)
        .map(|l| {
            let phase = TAU * ((pmode * l) % m) as f64 / m as f64;
            phase.cos() / (PI * l as f64 / m as f64).sin().powi(2)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::hessian_fd;
    use crate::params::polygon_config;

    fn setup(a: f64, m: usize) -> (DiskParams, PeakCount) {
        (DiskParams::new(a).unwrap(), PeakCount::new(m).unwrap())
    }

    #[test]
    fn single_point_blocks() {
        let (p, m) = setup(2.0, 1);
        let bc = assemble_blocks(&p, m).unwrap();
        assert_eq!(bc.m(), 1);
        assert!((bc.blocks[0][(0, 0)] + 32.0).abs() < 1e-12);
        assert!(bc.blocks[0][(1, 1)].abs() < 1e-12);
        let sp = full_spectrum(&p, m).unwrap();
        let rho = bc.rho;
        assert!((sp.eigenvalues[0] + 2.0 * (9.0 - 1.0) / rho).abs() < 1e-12);
        assert_eq!(sp.zero_count(), 1);
    }

    #[test]
    fn blocks_match_fd_hessian() {
        for (a, mm) in [(2.5, 3), (5.0, 4), (1.5, 2)] {
            let (p, m) = setup(a, mm);
            let h = assemble_blocks(&p, m).unwrap().dense();
            let fd = hessian_fd(&polygon_config(&p, m, 0.0).unwrap(), &p, 1e-5).unwrap();
            assert!((h - fd).amax() < 1e-5, "alpha {a} m {mm}");
        }
    }

    #[test]
    fn transpose_symmetry() {
        let (p, m) = setup(5.0, 4);
        let bc = assemble_blocks(&p, m).unwrap();
        for l in 1..4 {
            assert!((bc.blocks[l] - bc.blocks[4 - l].transpose()).amax() < 1e-13);
        }
    }

    #[test]
    fn mode_examples() {
        let (p, m) = setup(2.5, 3);
        let rho = 13f64.powf(-1.0 / 3.0);
        let m0 = mode_block(&p, m, 0).unwrap();
        assert!((m0.mu + 2.0 * (12.25 - 9.0) / rho).abs() < 1e-12);
        assert!((m0.mu + 15.283).abs() < 1e-2);
        assert_eq!(m0.nu, 0.0);
        let m1 = mode_block(&p, m, 1).unwrap();
        assert!((m1.det() + 16.0 / rho).abs() < 1e-12 * 16.0 / rho);
        assert!((m1.det() + 37.62).abs() < 0.01);
    }

    #[test]
    fn lattice_examples() {
        let (p, _) = setup(5.0, 4);
        let l = lattice_sums(&p, PeakCount::new(4).unwrap(), 1).unwrap();
        assert!((l.r + 1.0).abs() < 1e-15);
        assert!((csc_sum(4, 1) + 1.0).abs() < 1e-13);
        let l = lattice_sums(&p, PeakCount::new(3).unwrap(), 0).unwrap();
        assert!((l.r - 8.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn dft_residual_small() {
        for (a, mm) in [(2.5, 3), (5.0, 4), (2.0, 1)] {
            let (p, m) = setup(a, mm);
            assert!(dft_conjugation_residual(&p, m).unwrap() < 1e-11);
        }
    }

    #[test]
    fn domain_errors() {
        let (p, m) = setup(1.0, 2);
        assert!(matches!(assemble_blocks(&p, m), Err(Error::Domain(_))));
        let (p, m) = setup(2.5, 3);
        assert!(matches!(mode_block(&p, m, 3), Err(Error::Domain(_))));
    }
}
