//! The vortex Hamiltonian `Phi_m` on the unit disk and the angular functional `E_0`.
//!
//! Positions are complex numbers in the punctured disk. The canonical gradient
//! is the polar one, ordered `(d/dr_1, d/dtheta_1, ..., d/dr_m, d/dtheta_m)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::DiskParams;
use crate::wrap_angle;

/// Minimum distance to the origin, to the unit circle and between points.
pub const GUARD: f64 = 1e-8;

/// Points `z_1, ..., z_m` in the punctured disk, pairwise distinct.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VortexConfig {
    points: Vec<Complex64>,
}

fn check_points(points: &[Complex64]) -> Result<()> {
    if points.is_empty() {
        return Err(Error::DegenerateConfig("no points".into()));
    }
    for (j, z) in points.iter().enumerate() {
        let r = z.norm();
        if !r.is_finite() || r < GUARD || 1.0 - r < GUARD {
            return Err(Error::DegenerateConfig(format!("|z_{}| = {r} outside the guarded disk", j + 1)));
        }
        for (k, w) in points.iter().enumerate().skip(j + 1) {
            if (z - w).norm() < GUARD {
                return Err(Error::DegenerateConfig(format!("z_{} and z_{} collide", j + 1, k + 1)));
            }
        }
    }
    Ok(())
}

impl VortexConfig {
    pub fn new(points: Vec<Complex64>) -> Result<Self> {
        check_points(&points)?;
        Ok(Self { points })
    }

    pub fn from_polar(r: &[f64], theta: &[f64]) -> Result<Self> {
        if r.len() != theta.len() {
            return Err(Error::SizeMismatch(r.len(), theta.len()));
        }
        Self::new(r.iter().zip(theta).map(|(&r, &t)| Complex64::from_polar(r, t)).collect())
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Radii and arguments (in `(-pi, pi]`).
    pub fn polar(&self) -> (Vec<f64>, Vec<f64>) {
        self.points.iter().map(|z| (z.norm(), z.arg())).unzip()
    }

    /// Polar coordinates interleaved as `(r_1, theta_1, r_2, theta_2, ...)`.
    pub fn polar_flat(&self) -> Vec<f64> {
        self.points.iter().flat_map(|z| [z.norm(), z.arg()]).collect()
    }

    pub fn rotate(&self, phi: f64) -> Self {
        let w = Complex64::from_polar(1.0, phi);
        Self { points: self.points.iter().map(|z| z * w).collect() }
    }
}

/// Evaluates `Phi_m` on polar data without validating it.
pub(crate) fn phi_polar(x: &[f64], alpha: f64) -> f64 {
    let m = x.len() / 2;
    let mut single = 0.0;
    let mut pair = 0.0;
    for j in 0..m {
        let (rj, tj) = (x[2 * j], x[2 * j + 1]);
        single += 2.0 * alpha * rj.ln() + 2.0 * (1.0 - rj * rj).ln();
        for k in j + 1..m {
            let (rk, tk) = (x[2 * k], x[2 * k + 1]);
            let c = (tj - tk).cos();
            let a = 1.0 + rj * rj * rk * rk - 2.0 * rj * rk * c;
            let g = rj * rj + rk * rk - 2.0 * rj * rk * c;
            // each unordered pair appears twice in the ordered sums
            pair += 2.0 * (a.ln() - g.ln());
        }
    }
    single + pair
}

/// Polar gradient on unvalidated polar data.
pub(crate) fn grad_polar(x: &[f64], alpha: f64) -> Vec<f64> {
    let m = x.len() / 2;
    let mut g = vec![0.0; 2 * m];
    for j in 0..m {
        let (rj, tj) = (x[2 * j], x[2 * j + 1]);
        let mut dr = 2.0 * alpha / rj - 4.0 * rj / (1.0 - rj * rj);
        let mut dt = 0.0;
        for k in 0..m {
            if k == j {
                continue;
            }
            let (rk, tk) = (x[2 * k], x[2 * k + 1]);
            let (s, c) = (tj - tk).sin_cos();
            let a = 1.0 + rj * rj * rk * rk - 2.0 * rj * rk * c;
            let gg = rj * rj + rk * rk - 2.0 * rj * rk * c;
            dr += 2.0 * ((2.0 * rj * rk * rk - 2.0 * rk * c) / a - (2.0 * rj - 2.0 * rk * c) / gg);
            dt += 4.0 * rj * rk * s * (1.0 / a - 1.0 / gg);
        }
        g[2 * j] = dr;
        g[2 * j + 1] = dt;
    }
    g
}

fn polar_is_admissible(x: &[f64]) -> bool {
    let m = x.len() / 2;
    let pts: Vec<Complex64> = (0..m).map(|j| Complex64::from_polar(x[2 * j], x[2 * j + 1])).collect();
    x.iter().step_by(2).all(|&r| r > 0.0) && check_points(&pts).is_ok()
}

pub fn phi_m(c: &VortexConfig, p: &DiskParams) -> f64 {
    phi_polar(&c.polar_flat(), p.alpha())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GradMode {
    /// `(d/dr_j, d/dtheta_j)` from the explicit polar formulas.
    Polar,
    /// `(d/dx_j, d/dy_j)` from the complex critical-point system.
    Cartesian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientVector {
    pub entries: Vec<f64>,
    pub mode: GradMode,
}

impl GradientVector {
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

/// For each j, `sum_{k != j} 1/(z_j - z_k) - alpha/(2 z_j) - sum_k 1/(z_j - 1/conj(z_k))`.
///
/// This vanishes exactly at critical points; `d Phi / d z_j = -2` times it.
pub fn critical_residual(c: &VortexConfig, p: &DiskParams) -> Vec<Complex64> {
    let z = c.points();
    z.iter()
        .enumerate()
        .map(|(j, &zj)| {
            let mut acc = -p.alpha() / (2.0 * zj);
            for (k, &zk) in z.iter().enumerate() {
                if k != j {
                    acc += 1.0 / (zj - zk);
                }
                acc -= 1.0 / (zj - 1.0 / zk.conj());
            }
            acc
        })
        .collect()
}

pub fn grad_phi_m(c: &VortexConfig, p: &DiskParams, mode: GradMode) -> GradientVector {
    let entries = match mode {
        GradMode::Polar => grad_polar(&c.polar_flat(), p.alpha()),
        GradMode::Cartesian => critical_residual(c, p)
            .into_iter()
            .flat_map(|res| {
                let dz = -2.0 * res;
                [2.0 * dz.re, -2.0 * dz.im]
            })
            .collect(),
    };
    GradientVector { entries, mode }
}

/// Polar Hessian by central differences of the analytic polar gradient, symmetrized.
pub fn hessian_fd(c: &VortexConfig, p: &DiskParams, step: f64) -> Result<DMatrix<f64>> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Domain(format!("step must be positive, got {step}")));
    }
    let x0 = c.polar_flat();
    let n = x0.len();
    let mut h = DMatrix::zeros(n, n);
    for b in 0..n {
        let mut xp = x0.clone();
        let mut xm = x0.clone();
        xp[b] += step;
        xm[b] -= step;
        if !polar_is_admissible(&xp) || !polar_is_admissible(&xm) {
            return Err(Error::StepTooLarge { step });
        }
        let gp = grad_polar(&xp, p.alpha());
        let gm = grad_polar(&xm, p.alpha());
        for a in 0..n {
            h[(a, b)] = (gp[a] - gm[a]) / (2.0 * step);
        }
    }
    Ok((&h + h.transpose()) * 0.5)
}

/// Angles `phi_1, ..., phi_m`, pairwise distinct modulo `2 pi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleConfig {
    angles: Vec<f64>,
}

impl AngleConfig {
    pub fn new(angles: Vec<f64>) -> Result<Self> {
        for j in 0..angles.len() {
            for k in j + 1..angles.len() {
                if (0.5 * wrap_angle(angles[j] - angles[k])).sin().abs() < 1e-12 {
                    return Err(Error::CollidingAngles(j, k));
                }
            }
        }
        Ok(Self { angles })
    }

    /// `2 pi (j - (m+1)/2) / m`, the ordered mean-zero equiangular point.
    pub fn equiangular(m: usize) -> Self {
        let mf = m as f64;
        Self {
            angles: (1..=m)
                .map(|j| std::f64::consts::TAU * (j as f64 - 0.5 * (mf + 1.0)) / mf)
                .collect(),
        }
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }
}

/// `f_0(phi) = (2 + cos phi) / (2 sin^4(phi/2))`, the second derivative of `csc^2(phi/2)`.
pub fn f0(phi: f64) -> f64 {
    let phi = wrap_angle(phi);
    let s = (0.5 * phi).sin();
    (2.0 + phi.cos()) / (2.0 * s.powi(4))
}

pub fn e0_value(a: &AngleConfig) -> f64 {
    let x = a.angles();
    let mut e = 0.0;
    for j in 0..x.len() {
        for k in j + 1..x.len() {
            let s = (0.5 * wrap_angle(x[j] - x[k])).sin();
            e += 1.0 / (s * s);
        }
    }
    e
}

pub fn e0_grad(a: &AngleConfig) -> Vec<f64> {
    let x = a.angles();
    (0..x.len())
        .map(|j| {
            let mut g = 0.0;
            for k in 0..x.len() {
                if k != j {
                    let (s, c) = (0.5 * wrap_angle(x[j] - x[k])).sin_cos();
                    g -= c / (s * s * s);
                }
            }
            g
        })
        .collect()
}

pub fn e0_hessian(a: &AngleConfig) -> DMatrix<f64> {
    let x = a.angles();
    let m = x.len();
    let mut h = DMatrix::zeros(m, m);
    for j in 0..m {
        for k in 0..m {
            if k != j {
                let v = f0(x[j] - x[k]);
                h[(j, k)] = -v;
                h[(j, j)] += v;
            }
        }
    }
    h
}

/// Orthonormal basis (as columns) of the mean-zero subspace of `R^m`.
pub fn mean_zero_basis(m: usize) -> DMatrix<f64> {
    let mut q = DMatrix::zeros(m, m.saturating_sub(1));
    for c in 0..m.saturating_sub(1) {
        let k = (c + 1) as f64;
        let norm = (k * (k + 1.0)).sqrt();
        for r in 0..=c {
            q[(r, c)] = 1.0 / norm;
        }
        q[(c + 1, c)] = -k / norm;
    }
    q
}

/// Smallest eigenvalue of the `E_0` Hessian restricted to mean-zero vectors.
pub fn e0_restricted_min_eigenvalue(a: &AngleConfig) -> f64 {
    let q = mean_zero_basis(a.len());
    let h = q.transpose() * e0_hessian(a) * &q;
    h.symmetric_eigenvalues().min()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, b| a.max(b.abs()))
}

fn cyclically_ordered(x: &[f64]) -> bool {
    x.windows(2).all(|w| w[1] > w[0]) && x[x.len() - 1] - x[0] < std::f64::consts::TAU
}

/// Damped Newton for `E_0` in the ordered mean-zero chart.
///
/// `start` must be strictly increasing with total spread below `2 pi`.
/// Returns the final angles, recentred to mean zero.
pub fn e0_newton(start: &AngleConfig, tol: f64, max_iter: usize) -> Result<AngleConfig> {
    let m = start.len();
    let mean = start.angles().iter().sum::<f64>() / m as f64;
    let mut x: Vec<f64> = start.angles().iter().map(|v| v - mean).collect();
    if !cyclically_ordered(&x) {
        return Err(Error::Domain("start angles are not cyclically ordered".into()));
    }
    let q = mean_zero_basis(m);
    for _ in 0..max_iter {
        let a = AngleConfig { angles: x.clone() };
        let g = nalgebra::DVector::from_vec(e0_grad(&a));
        if g.amax() < tol {
            break;
        }
        let hr = q.transpose() * e0_hessian(&a) * &q;
        let gr = q.transpose() * &g;
        let y = hr
            .cholesky()
            .ok_or_else(|| Error::InternalInconsistency("E0 Hessian not positive definite".into()))?
            .solve(&(-gr));
        let d = &q * y;
        let e = e0_value(&a);
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = x.iter().zip(d.iter()).map(|(v, dv)| v + t * dv).collect();
            let ta = AngleConfig { angles: trial.clone() };
            // near the minimum the value stalls at roundoff; the gradient still measures progress
            let better = cyclically_ordered(&trial)
                && (e0_value(&ta) < e || max_abs(&e0_grad(&ta)) < g.amax());
            if better {
                x = trial;
                break;
            }
            t *= 0.5;
            if t < 1e-12 {
                return Err(Error::NewtonDiverged { iterations: 0, residual: g.amax() });
            }
        }
    }
    AngleConfig::new(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{polygon_config, PeakCount};
    use std::f64::consts::{PI, TAU};

    fn dp(a: f64) -> DiskParams {
        DiskParams::new(a).unwrap()
    }

    // Term-by-term summation straight from the complex form.
    fn phi_oracle(z: &[Complex64], alpha: f64) -> f64 {
        let mut s = 0.0;
        for (j, zj) in z.iter().enumerate() {
            s += 2.0 * alpha * zj.norm().ln() + 2.0 * (1.0 - zj.norm_sqr()).ln();
            for (k, zk) in z.iter().enumerate() {
                if j != k {
                    s += 2.0 * (1.0 - zj * zk.conj()).norm().ln() - 2.0 * (zj - zk).norm().ln();
                }
            }
        }
        s
    }

    #[test]
    fn single_point_value_and_gradient() {
        let c = VortexConfig::new(vec![Complex64::new(0.5, 0.0)]).unwrap();
        let want = 4.0 * 0.5f64.ln() + 2.0 * 0.75f64.ln();
        assert!((phi_m(&c, &dp(2.0)) - want).abs() < 1e-14);
        assert!((want + 3.347953).abs() < 1e-6);
        let g = grad_phi_m(&c, &dp(2.0), GradMode::Polar);
        assert!((g.entries[0] - 16.0 / 3.0).abs() < 1e-13);
        assert_eq!(g.entries[1], 0.0);
    }

    #[test]
    fn two_point_value_matches_oracle() {
        let z = vec![Complex64::new(0.5, 0.0), Complex64::new(-0.5, 0.0)];
        let c = VortexConfig::new(z.clone()).unwrap();
        assert!((phi_m(&c, &dp(1.0)) - phi_oracle(&z, 1.0)).abs() < 1e-12);
    }

    #[test]
    fn polygon_is_critical() {
        let c = polygon_config(&dp(2.5), PeakCount::new(3).unwrap(), 0.0).unwrap();
        let g = grad_phi_m(&c, &dp(2.5), GradMode::Polar);
        assert!(g.max_abs() < 1e-10);
        for j in 0..3 {
            assert!(g.entries[2 * j + 1].abs() < 1e-13);
        }
        assert!(grad_phi_m(&c, &dp(2.5), GradMode::Cartesian).max_abs() < 1e-10);
    }

    #[test]
    fn radial_second_derivative_negative_for_single_point() {
        let p = dp(2.0);
        let c = polygon_config(&p, PeakCount::new(1).unwrap(), 0.0).unwrap();
        let h = hessian_fd(&c, &p, 1e-5).unwrap();
        assert!(h[(0, 0)] < 0.0);
        let r: f64 = 0.5f64.sqrt();
        let exact = -2.0 * 2.0 / (r * r) - 4.0 * (1.0 + r * r) / (1.0 - r * r).powi(2);
        assert!((h[(0, 0)] - exact).abs() < 1e-6);
    }

    #[test]
    fn fd_step_outside_disk() {
        let c = VortexConfig::new(vec![Complex64::new(0.999, 0.0)]).unwrap();
        assert_eq!(hessian_fd(&c, &dp(1.0), 0.01), Err(Error::StepTooLarge { step: 0.01 }));
    }

    #[test]
    fn guards_reject_degenerate_points() {
        assert!(VortexConfig::new(vec![Complex64::new(0.0, 0.0)]).is_err());
        assert!(VortexConfig::new(vec![Complex64::new(1.0, 0.0)]).is_err());
        let z = Complex64::new(0.3, 0.1);
        assert!(VortexConfig::new(vec![z, z]).is_err());
    }

    #[test]
    fn e0_examples() {
        let a = AngleConfig::new(vec![0.0, TAU / 3.0, 2.0 * TAU / 3.0]).unwrap();
        assert!((e0_value(&a) - 4.0).abs() < 1e-13);
        assert!(e0_grad(&a).iter().all(|g| g.abs() < 1e-12));
        let a = AngleConfig::new(vec![0.0, PI]).unwrap();
        assert!((e0_value(&a) - 1.0).abs() < 1e-14);
        assert!((e0_value(&AngleConfig::equiangular(4)) - 10.0).abs() < 1e-12);
        assert!(AngleConfig::new(vec![0.3, 0.3 + TAU]).is_err());
    }

    #[test]
    fn e0_hessian_matches_fd_of_gradient() {
        let x = vec![-2.0, -0.3, 0.4, 2.1];
        let h = e0_hessian(&AngleConfig::new(x.clone()).unwrap());
        let step = 1e-6;
        for b in 0..4 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[b] += step;
            xm[b] -= step;
            let gp = e0_grad(&AngleConfig::new(xp).unwrap());
            let gm = e0_grad(&AngleConfig::new(xm).unwrap());
            for a in 0..4 {
                let fd = (gp[a] - gm[a]) / (2.0 * step);
                assert!((fd - h[(a, b)]).abs() < 1e-6 * h[(a, b)].abs().max(1.0));
            }
        }
    }

    #[test]
    fn mean_zero_basis_is_orthonormal() {
        let q = mean_zero_basis(5);
        let g = q.transpose() * &q;
        assert!((g - DMatrix::identity(4, 4)).amax() < 1e-15);
        for c in 0..4 {
            assert!(q.column(c).sum().abs() < 1e-15);
        }
    }
}
