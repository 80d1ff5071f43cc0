//! Finite-volume Newton solver for `Δu + λ|x|^{2α} e^u = 0` on a polar grid of the unit
//! disk, with sector symmetry, lambda continuation, and post-processing of the peaks.
//!
//! Cells are centred at `r_i = (i - 1/2) h` (1-based) with `h = 1/(Nr - 1/2)`, so the
//! last node sits on the boundary `r = 1`. The inner face of the first ring is the axis.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use crate::banded::SymBand;
use crate::error::{Error, Result};
use crate::params::DiskParams;
use crate::radial::{self, RadialSolution};

pub const NEWTON_TOL: f64 = 1e-10;
pub const NEWTON_MAX_ITER: usize = 40;
/// Seeding amplitudes tried in turn when leaving the radial branch.
pub const SEED_LADDER: [f64; 7] = [1e-2, 3e-2, 0.1, 0.3, 1.0, 2.0, 3.0];
/// Angular variation below which a converged field counts as radial.
pub const RADIAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarGrid {
    nr: usize,
    nt: usize,
    sector_m: usize,
    r: Vec<f64>,
    faces: Vec<f64>,
}

impl PolarGrid {
    pub fn new(nr: usize, nt: usize, sector_m: usize) -> Result<Self> {
        if nr < 16 || nt < 16 {
            return Err(Error::Domain(format!("grid {nr}x{nt} below the 16x16 minimum")));
        }
        if sector_m == 0 {
            return Err(Error::Domain("sector_m must be at least 1".into()));
        }
        let h = 1.0 / (nr as f64 - 0.5);
        let mut r: Vec<f64> = (0..nr).map(|i| (i as f64 + 0.5) * h).collect();
        r[nr - 1] = 1.0;
        let mut faces = Vec::with_capacity(nr + 1);
        faces.push(0.0);
        for i in 1..nr {
            faces.push(0.5 * (r[i - 1] + r[i]));
        }
        faces.push(1.0);
        Ok(PolarGrid { nr, nt, sector_m, r, faces })
    }

    pub fn nr(&self) -> usize {
        self.nr
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn sector_m(&self) -> usize {
        self.sector_m
    }

    pub fn radii(&self) -> &[f64] {
        &self.r
    }

    /// Inner face of cell `i`; `face(nr) = 1`.
    pub fn face(&self, i: usize) -> f64 {
        self.faces[i]
    }

    pub fn period(&self) -> f64 {
        TAU / self.sector_m as f64
    }

    pub fn dtheta(&self) -> f64 {
        self.period() / self.nt as f64
    }

    pub fn theta(&self, j: usize) -> f64 {
        j as f64 * self.dtheta()
    }

    /// Number of unknowns (all rows but the boundary).
    pub fn unknowns(&self) -> usize {
        (self.nr - 1) * self.nt
    }

    /// The same resolution on the full disk.
    pub fn unfolded(&self) -> PolarGrid {
        PolarGrid { nt: self.nt * self.sector_m, sector_m: 1, ..self.clone() }
    }

    /// Index of the ring whose centre is nearest to `r0`.
    pub fn nearest_ring(&self, r0: f64) -> usize {
        (0..self.nr)
            .min_by(|&a, &b| (self.r[a] - r0).abs().total_cmp(&(self.r[b] - r0).abs()))
            .unwrap()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field2D {
    grid: PolarGrid,
    values: Vec<f64>,
    params: DiskParams,
}

impl Field2D {
    pub fn new(grid: PolarGrid, params: DiskParams, values: Vec<f64>) -> Result<Self> {
        let n = grid.nr * grid.nt;
        if values.len() != n {
            return Err(Error::SizeMismatch(values.len(), n));
        }
        if values[n - grid.nt..].iter().any(|&v| v != 0.0) {
            return Err(Error::Domain("boundary row must vanish".into()));
        }
        Ok(Field2D { grid, values, params })
    }

    pub fn zeros(grid: PolarGrid, params: DiskParams) -> Self {
        let values = vec![0.0; grid.nr * grid.nt];
        Field2D { grid, values, params }
    }

    /// Samples `f(r, theta)` at the nodes; the boundary row is set to zero.
    pub fn from_fn(grid: PolarGrid, params: DiskParams, f: impl Fn(f64, f64) -> f64) -> Self {
        let (nr, nt) = (grid.nr, grid.nt);
        let mut values = vec![0.0; nr * nt];
        for i in 0..nr - 1 {
            for j in 0..nt {
                values[i * nt + j] = f(grid.r[i], grid.theta(j));
            }
        }
        Field2D { grid, values, params }
    }

    pub fn radial(grid: PolarGrid, params: DiskParams, sol: &RadialSolution) -> Self {
        Field2D::from_fn(grid, params, |r, _| sol.u(r))
    }

    pub fn grid(&self) -> &PolarGrid {
        &self.grid
    }

    pub fn params(&self) -> &DiskParams {
        &self.params
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.nt + j % self.grid.nt]
    }

    pub fn ring(&self, i: usize) -> &[f64] {
        &self.values[i * self.grid.nt..(i + 1) * self.grid.nt]
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest `max - min` over the rings.
    pub fn angular_variation(&self) -> f64 {
        (0..self.grid.nr)
            .map(|i| {
                let ring = self.ring(i);
                let hi = ring.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let lo = ring.iter().cloned().fold(f64::INFINITY, f64::min);
                hi - lo
            })
            .fold(0.0, f64::max)
    }

    /// Copies the sector `sector_m` times around the disk.
    pub fn unfold(&self) -> Field2D {
        let g = self.grid.unfolded();
        let (nr, nt, m) = (self.grid.nr, self.grid.nt, self.grid.sector_m);
        let mut values = Vec::with_capacity(nr * nt * m);
        for i in 0..nr {
            for _ in 0..m {
                values.extend_from_slice(self.ring(i));
            }
        }
        Field2D { grid: g, values, params: self.params }
    }

    /// Cyclic shift by `steps` angular cells, i.e. rotation by `steps * dtheta`.
    pub fn rotate_steps(&self, steps: usize) -> Field2D {
        let nt = self.grid.nt;
        let mut values = self.values.clone();
        for i in 0..self.grid.nr {
            for j in 0..nt {
                values[i * nt + (j + steps) % nt] = self.values[i * nt + j];
            }
        }
        Field2D { values, ..self.clone() }
    }

    /// Same values under different parameters.
    pub fn with_params(&self, params: DiskParams) -> Field2D {
        Field2D { params, ..self.clone() }
    }

    /// Max-norm of the cell-integrated residual, evaluated face by face (independently of
    /// the Newton assembly).
    pub fn residual_norm(&self) -> Result<f64> {
        let lambda = self.params.require_lambda("residual_norm")?;
        let g = &self.grid;
        let (nr, nt, dth) = (g.nr, g.nt, g.dtheta());
        let mut acc = vec![0.0; (nr - 1) * nt];
        // radial faces between rings i and i+1
        for i in 0..nr - 1 {
            let t = g.faces[i + 1] * dth / (g.r[i + 1] - g.r[i]);
            for j in 0..nt {
                let flux = t * (self.get(i + 1, j) - self.get(i, j));
                acc[i * nt + j] += flux;
                if i + 1 < nr - 1 {
                    acc[(i + 1) * nt + j] -= flux;
                }
            }
        }
        // angular faces between j and j+1
        for i in 0..nr - 1 {
            let t = (g.faces[i + 1] - g.faces[i]) / (g.r[i] * dth);
            for j in 0..nt {
                let flux = t * (self.get(i, j + 1) - self.get(i, j));
                acc[i * nt + j] += flux;
                acc[i * nt + (j + 1) % nt] -= flux;
            }
        }
        let a2 = 2.0 * self.params.alpha();
        let mut worst: f64 = 0.0;
        for i in 0..nr - 1 {
            let area = 0.5 * (g.faces[i + 1].powi(2) - g.faces[i].powi(2)) * dth;
            let w = lambda * area * g.r[i].powf(a2);
            for j in 0..nt {
                let v = acc[i * nt + j] + w * self.get(i, j).exp();
                worst = worst.max(v.abs());
            }
        }
        Ok(worst)
    }

    /// Interpolated value at `(r, theta)`: cubic Lagrange in `r` (with rows mirrored across
    /// the axis) and periodic cubic Lagrange in `theta`.
    pub fn sample(&self, r: f64, theta: f64) -> f64 {
        let g = &self.grid;
        let nr = g.nr;
        // extended abscissae: -r_2, -r_1, -r_0, r_0, ..., r_{nr-1}
        let node = |k: isize| -> (f64, usize, bool) {
            if k < 0 {
                let i = (-k - 1) as usize;
                (-g.r[i], i, true)
            } else {
                (g.r[k as usize], k as usize, false)
            }
        };
        let r = r.clamp(0.0, 1.0);
        let mut hi = g.r.partition_point(|&x| x < r) as isize; // first node >= r
        if hi == 0 {
            hi = 0;
        }
        let start = (hi - 2).clamp(-3, nr as isize - 4);
        let mut total = 0.0;
        for a in 0..4 {
            let (xa, ia, ghost) = node(start + a);
            let mut wgt = 1.0;
            for b in 0..4 {
                if a != b {
                    let (xb, _, _) = node(start + b);
                    wgt *= (r - xb) / (xa - xb);
                }
            }
            if wgt != 0.0 {
                let th = if ghost { theta + PI } else { theta };
                total += wgt * self.sample_ring(ia, th);
            }
        }
        total
    }

    fn sample_ring(&self, i: usize, theta: f64) -> f64 {
        let g = &self.grid;
        let mut x = theta.rem_euclid(g.period()) / g.dtheta();
        if (x - x.round()).abs() < 1e-9 {
            x = x.round();
        }
        let j0 = x.floor();
        let t = x - j0;
        let j0 = j0 as isize;
        let nt = g.nt as isize;
        let at = |k: isize| self.values[i * g.nt + (j0 + k).rem_euclid(nt) as usize];
        if t == 0.0 {
            return at(0);
        }
        // nodes -1, 0, 1, 2 in units of dtheta
        let w = [
            -t * (t - 1.0) * (t - 2.0) / 6.0,
            (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
            -(t + 1.0) * t * (t - 2.0) / 2.0,
            (t + 1.0) * t * (t - 1.0) / 6.0,
        ];
        w[0] * at(-1) + w[1] * at(0) + w[2] * at(1) + w[3] * at(2)
    }

    /// CSV with header `r,theta,u`, row-major by radial index, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,theta,u\n");
        for i in 0..self.grid.nr {
            for j in 0..self.grid.nt {
                let _ = writeln!(s, "{:.16e},{:.16e},{:.16e}", self.grid.r[i], self.grid.theta(j), self.get(i, j));
            }
        }
        s
    }
}

struct Stencil {
    tr: Vec<f64>,
    ta: Vec<f64>,
    src: Vec<f64>,
}

impl Stencil {
    fn new(g: &PolarGrid, lambda: f64, alpha: f64) -> Self {
        let dth = g.dtheta();
        let n = g.nr - 1;
        let tr = (0..n).map(|i| g.faces[i + 1] * dth / (g.r[i + 1] - g.r[i])).collect();
        let ta = (0..n).map(|i| (g.faces[i + 1] - g.faces[i]) / (g.r[i] * dth)).collect();
        let src = (0..n)
            .map(|i| lambda * dth * 0.5 * (g.faces[i + 1].powi(2) - g.faces[i].powi(2)) * g.r[i].powf(2.0 * alpha))
            .collect();
        Stencil { tr, ta, src }
    }
}

fn assemble(g: &PolarGrid, st: &Stencil, u: &[f64], jac: Option<&mut SymBand>) -> Vec<f64> {
    let (nr, nt) = (g.nr, g.nt);
    let n = nr - 1;
    let mut res = vec![0.0; n * nt];
    for i in 0..n {
        for j in 0..nt {
            let k = i * nt + j;
            let (jp, jm) = ((j + 1) % nt, (j + nt - 1) % nt);
            let uc = u[k];
            let out = if i + 1 < n { u[k + nt] } else { 0.0 };
            let mut v = st.tr[i] * (out - uc) + st.ta[i] * (u[i * nt + jp] + u[i * nt + jm] - 2.0 * uc);
            if i > 0 {
                v += st.tr[i - 1] * (u[k - nt] - uc);
            }
            res[k] = v + st.src[i] * uc.exp();
        }
    }
    if let Some(jac) = jac {
        for i in 0..n {
            for j in 0..nt {
                let k = i * nt + j;
                let mut d = -st.tr[i] - 2.0 * st.ta[i] + st.src[i] * u[k].exp();
                if i > 0 {
                    d -= st.tr[i - 1];
                    jac.add(k, k - nt, st.tr[i - 1]);
                }
                jac.add(k, k, d);
                jac.add(k, i * nt + (j + 1) % nt, st.ta[i]);
            }
        }
    }
    res
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, &b| if b.is_finite() { a.max(b.abs()) } else { f64::INFINITY })
}

fn sum_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewtonOutcome {
    pub field: Field2D,
    pub iterations: usize,
    pub residual: f64,
}

/// Damped Newton iteration on the cell-integrated residual, starting from `init`.
pub fn newton_solve(p: &DiskParams, init: &Field2D) -> Result<NewtonOutcome> {
    newton_solve_with(p, init, NEWTON_TOL, NEWTON_MAX_ITER)
}

pub fn newton_solve_with(p: &DiskParams, init: &Field2D, tol: f64, max_iter: usize) -> Result<NewtonOutcome> {
    let lambda = p.require_lambda("newton_solve")?;
    let g = init.grid.clone();
    let st = Stencil::new(&g, lambda, p.alpha());
    let n = g.unknowns();
    let mut u = init.values[..n].to_vec();
    let mut res = assemble(&g, &st, &u, None);
    let mut norm = max_abs(&res);
    let mut iterations = 0;
    loop {
        if norm < tol {
            let mut values = u;
            values.extend(std::iter::repeat_n(0.0, g.nt));
            return Ok(NewtonOutcome { field: Field2D { grid: g, values, params: *p }, iterations, residual: norm });
        }
        if iterations == max_iter || !norm.is_finite() {
            return Err(Error::NewtonDiverged { iterations, residual: norm });
        }
        let mut jac = SymBand::zeros(n, g.nt);
        assemble(&g, &st, &u, Some(&mut jac));
        let rhs: Vec<f64> = res.iter().map(|v| -v).collect();
        let du = jac.factor()?.solve(&rhs)?;
        // Armijo on the squared 2-norm, for which the Newton step is a descent direction
        let merit = sum_sq(&res);
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = u.iter().zip(&du).map(|(a, b)| a + t * b).collect();
            let tres = assemble(&g, &st, &trial, None);
            let tnorm = max_abs(&tres);
            if tnorm.is_finite() && sum_sq(&tres) <= (1.0 - 2e-4 * t) * merit {
                u = trial;
                res = tres;
                norm = tnorm;
                break;
            }
            t *= 0.5;
            if t < 1.0 / 1048576.0 {
                return Err(Error::NewtonDiverged { iterations: iterations + 1, residual: norm });
            }
        }
        iterations += 1;
    }
}

/// Singular radial solution plus `eps * cos(k theta) * f_{k1}(s(r)) / max|f_{k1}|`.
pub fn mode_seed(p: &DiskParams, grid: &PolarGrid, k: usize, eps: f64) -> Result<Field2D> {
    let sols = radial::radial_solutions(p)?;
    let sing = *sols.last().ok_or_else(|| Error::Domain("no radial solution at this lambda".into()))?;
    let b = p.beta();
    let delta = k as f64 / b;
    let sb = (sing.big_lambda / (8.0 * b * b)).sqrt();
    let profile = |r: f64| radial::mode_f1(delta, sb * r.powf(b));
    let scale = grid.radii().iter().map(|&r| profile(r).abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    Ok(Field2D::from_fn(grid.clone(), *p, |r, th| sing.u(r) + eps * (k as f64 * th).cos() * profile(r) / scale))
}

/// Leaves the singular radial branch in mode `k` by trying the amplitudes of `ladder`
/// (each multiplied by `sign`) until Newton converges to a non-radial field.
pub fn enter_mode_branch(
    p: &DiskParams,
    grid: &PolarGrid,
    k: usize,
    sign: f64,
    ladder: &[f64],
) -> Result<(NewtonOutcome, f64)> {
    for &a in ladder {
        let eps = sign.signum() * a;
        let seed = mode_seed(p, grid, k, eps)?;
        if let Ok(out) = newton_solve(p, &seed) {
            if out.field.angular_variation() > RADIAL_TOL {
                return Ok((out, eps));
            }
        }
    }
    Err(Error::BranchLost(p.require_lambda("enter_mode_branch")?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchSample {
    pub lambda: f64,
    pub field: Field2D,
    pub report: PeakReport,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Continuation {
    pub samples: Vec<BranchSample>,
    /// Coupling at which the branch was lost, if it was.
    pub lost_at: Option<f64>,
}

impl Continuation {
    pub fn complete(self) -> Result<Vec<BranchSample>> {
        match self.lost_at {
            Some(l) => Err(Error::BranchLost(l)),
            None => Ok(self.samples),
        }
    }
}

/// Geometric schedule of `steps` couplings from `lambda_from` down to `lambda_to`, each
/// solve warm-started from the previous field. A failed step is retried once through
/// its geometric midpoint.
pub fn continue_in_lambda(
    p: &DiskParams,
    lambda_from: f64,
    lambda_to: f64,
    steps: usize,
    init: &Field2D,
) -> Result<Continuation> {
    if !(lambda_from > lambda_to && lambda_to > 0.0) {
        return Err(Error::Domain(format!("need lambda_from > lambda_to > 0, got {lambda_from}, {lambda_to}")));
    }
    if steps < 2 {
        return Err(Error::Domain("continuation needs at least 2 steps".into()));
    }
    let ratio = (lambda_to / lambda_from).ln() / (steps - 1) as f64;
    let schedule: Vec<f64> = (0..steps)
        .map(|i| if i + 1 == steps { lambda_to } else { lambda_from * (ratio * i as f64).exp() })
        .collect();
    let solve = |lambda: f64, start: &Field2D| -> Result<NewtonOutcome> {
        let q = p.with_lambda(lambda)?;
        newton_solve(&q, &start.with_params(q))
    };
    let mut samples: Vec<BranchSample> = Vec::new();
    let mut current = init.clone();
    let mut prev_lambda = lambda_from;
    for &lambda in &schedule {
        let out = match solve(lambda, &current) {
            Ok(o) => o,
            Err(_) => {
                let mid = (prev_lambda * lambda).sqrt();
                match solve(mid, &current).and_then(|o| solve(lambda, &o.field)) {
                    Ok(o) => o,
                    Err(_) => return Ok(Continuation { samples, lost_at: Some(lambda) }),
                }
            }
        };
        let report = peak_report(&out.field)?;
        current = out.field.clone();
        prev_lambda = lambda;
        samples.push(BranchSample { lambda, field: out.field, report, iterations: out.iterations });
    }
    Ok(Continuation { samples, lost_at: None })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub r: f64,
    pub theta: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakReport {
    pub peaks: Vec<Peak>,
    pub mass: f64,
    pub residual_norm: f64,
}

impl PeakReport {
    pub fn has_origin_peak(&self) -> bool {
        self.peaks.iter().any(|p| p.r == 0.0)
    }
}

/// `lambda int |x|^{2 alpha} e^u` with `r^{2 alpha + 1}` integrated exactly across each cell.
pub fn mass_2d(f: &Field2D) -> Result<f64> {
    let lambda = f.params.require_lambda("mass_2d")?;
    let g = &f.grid;
    let b2 = 2.0 * f.params.beta();
    let dth = g.dtheta();
    let mut total = 0.0;
    for i in 0..g.nr {
        let w = (g.faces[i + 1].powf(b2) - g.faces[i].powf(b2)) / b2;
        let ring: f64 = f.ring(i).iter().map(|v| v.exp()).sum();
        total += w * ring;
    }
    Ok(lambda * dth * total * g.sector_m as f64)
}

/// Strict local maxima over the 8-neighbourhood, refined by a least-squares quadratic in
/// Cartesian coordinates; a radially symmetric cap at the axis is reported as `r = 0`.
pub fn peak_report(f: &Field2D) -> Result<PeakReport> {
    let full = f.unfold();
    let g = &full.grid;
    let (nr, nt) = (g.nr, g.nt);
    let mut peaks = Vec::new();
    let ring0 = full.ring(0);
    let ring0_mean = ring0.iter().sum::<f64>() / nt as f64;
    let ring0_var = ring0.iter().map(|v| (v - ring0_mean).abs()).fold(0.0, f64::max);
    let ring1_max = full.ring(1).iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let axis_symmetric = ring0_var <= 1e-9 * (1.0 + ring0_mean.abs());
    if axis_symmetric && ring0_mean > ring1_max {
        // u ~ a + b r^2 through the first two ring averages
        let ring1_mean = full.ring(1).iter().sum::<f64>() / nt as f64;
        let (r0, r1) = (g.r[0] * g.r[0], g.r[1] * g.r[1]);
        let height = (ring0_mean * r1 - ring1_mean * r0) / (r1 - r0);
        peaks.push(Peak { r: 0.0, theta: 0.0, height });
    }
    let opposite = |j: usize| (j + nt / 2) % nt;
    let neighbours = |i: usize, j: usize| -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(8);
        for dj in [nt - 1, 0, 1] {
            let jj = (j + dj) % nt;
            if dj != 0 {
                out.push((i, jj));
            }
            out.push((i + 1, jj));
            if i > 0 {
                out.push((i - 1, jj));
            } else {
                out.push((0, opposite(jj)));
            }
        }
        out
    };
    let pos = |i: usize, j: usize| (g.r[i] * g.theta(j).cos(), g.r[i] * g.theta(j).sin());
    if !axis_symmetric {
        for i in 0..nr - 1 {
            for j in 0..nt {
                let v = full.get(i, j);
                let nb = neighbours(i, j);
                if nb.iter().any(|&(a, b)| full.get(a, b) >= v) {
                    continue;
                }
                let (cx, cy) = pos(i, j);
                let pts: Vec<(f64, f64, f64)> = nb
                    .iter()
                    .map(|&(a, b)| {
                        let (x, y) = pos(a, b);
                        (x - cx, y - cy, full.get(a, b))
                    })
                    .chain(std::iter::once((0.0, 0.0, v)))
                    .collect();
                let reach = pts.iter().map(|p| p.0.hypot(p.1)).fold(0.0, f64::max);
                let (dx, dy, height) = quadratic_peak(&pts, reach).unwrap_or((0.0, 0.0, v));
                let (x, y) = (cx + dx, cy + dy);
                peaks.push(Peak { r: x.hypot(y), theta: y.atan2(x).rem_euclid(TAU), height });
            }
        }
    }
    peaks.sort_by(|a, b| a.theta.total_cmp(&b.theta).then(a.r.total_cmp(&b.r)));
    Ok(PeakReport { peaks, mass: mass_2d(f)?, residual_norm: f.residual_norm()? })
}

/// Maximum of the least-squares quadratic through `pts` (offsets and values); `None` when
/// the fit is not concave or its maximum leaves the stencil.
fn quadratic_peak(pts: &[(f64, f64, f64)], reach: f64) -> Option<(f64, f64, f64)> {
    let s = reach.max(f64::MIN_POSITIVE);
    let a = DMatrix::from_fn(pts.len(), 6, |k, c| {
        let (x, y) = (pts[k].0 / s, pts[k].1 / s);
        [1.0, x, y, x * x, x * y, y * y][c]
    });
    let b = DVector::from_iterator(pts.len(), pts.iter().map(|p| p.2));
    let c = a.svd(true, true).solve(&b, 1e-12).ok()?;
    let h = nalgebra::Matrix2::new(2.0 * c[3], c[4], c[4], 2.0 * c[5]);
    if !(h[(0, 0)] < 0.0 && h.determinant() > 0.0) {
        return None;
    }
    let z = h.try_inverse()? * nalgebra::Vector2::new(-c[1], -c[2]);
    if z.norm() > 1.0 {
        return None;
    }
    let (x, y) = (z[0], z[1]);
    let val = c[0] + c[1] * x + c[2] * y + c[3] * x * x + c[4] * x * y + c[5] * y * y;
    Some((x * s, y * s, val))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum MonotonicityVerdict {
    Alternating,
    MonotoneTrivial,
    Violated { arc: usize },
}

/// Checks that `u(r0, .)` decreases on `(2k pi/m, (2k+1) pi/m)` and increases on the next
/// arc, on the ring nearest `r0`. One reversed step next to an arc endpoint is tolerated.
pub fn angular_monotonicity_check(f: &Field2D, m: usize, r0: f64) -> MonotonicityVerdict {
    let full = f.unfold();
    let g = &full.grid;
    let nt = g.nt;
    let ring = full.ring(g.nearest_ring(r0));
    let hi = ring.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = ring.iter().cloned().fold(f64::INFINITY, f64::min);
    let scale = 1.0 + hi.abs().max(lo.abs());
    if hi - lo <= 1e-8 * scale {
        return MonotonicityVerdict::MonotoneTrivial;
    }
    let arc_len = PI / m as f64;
    for arc in 0..2 * m {
        let (a, b) = (arc as f64 * arc_len, (arc + 1) as f64 * arc_len);
        let idx: Vec<usize> = (0..=nt).filter(|&j| g.theta(j) >= a - 1e-12 && g.theta(j) <= b + 1e-12).collect();
        let sign = if arc % 2 == 0 { -1.0 } else { 1.0 };
        let steps = idx.len().saturating_sub(1);
        for s in 0..steps {
            let d = sign * (ring[idx[s + 1] % nt] - ring[idx[s] % nt]);
            if d < -1e-12 * scale && s != 0 && s + 1 != steps {
                return MonotonicityVerdict::Violated { arc };
            }
        }
    }
    MonotonicityVerdict::Alternating
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerMapCheck {
    pub m: usize,
    /// Residual of `v(x) = u(x^m)` in its own equation on the target grid.
    pub residual: f64,
    /// Residual, on the same target grid, of the exact closed-form solution of the
    /// mapped equation: the truncation level the discretization itself imposes.
    pub reference: f64,
}

impl PowerMapCheck {
    pub fn ratio(&self) -> f64 {
        self.residual / self.reference
    }
}

/// `v(rho, phi) = u(rho^m, m phi)` sampled onto `target`, with parameters
/// `alpha_v = m (alpha + 1) - 1` and `lambda_v = m^2 lambda`.
pub fn power_map_field(f: &Field2D, m: usize, target: &PolarGrid) -> Result<Field2D> {
    if m == 0 {
        return Err(Error::Domain("power m must be at least 1".into()));
    }
    let lambda = f.params.require_lambda("power_map_field")?;
    let mf = m as f64;
    let q = DiskParams::new(mf * f.params.beta() - 1.0)?.with_lambda(mf * mf * lambda)?;
    Ok(Field2D::from_fn(target.clone(), q, |rho, phi| f.sample(rho.powi(m as i32), mf * phi)))
}

/// Residual of the power-mapped field on the grid `target`.
pub fn power_map_check(f: &Field2D, m: usize, target: &PolarGrid) -> Result<f64> {
    power_map_field(f, m, target)?.residual_norm()
}

/// Power map of a radial field onto the grid with `sector_m * m` sectors (angular nodes map
/// onto angular nodes). The reference is the residual of the exact radial solution of the mapped
/// problem on that grid, picked as the branch whose sup norm is closest to the field's maximum.
pub fn power_map_study(f: &Field2D, m: usize) -> Result<PowerMapCheck> {
    if f.angular_variation() > RADIAL_TOL {
        return Err(Error::Domain("power_map_study needs a radial field".into()));
    }
    let g = &f.grid;
    let target = PolarGrid::new(g.nr, g.nt, g.sector_m * m)?;
    let top = f.max_value();
    let sol = radial::radial_solutions(&f.params)?
        .into_iter()
        .min_by(|a, b| (a.sup_norm() - top).abs().total_cmp(&(b.sup_norm() - top).abs()))
        .ok_or_else(|| Error::Domain("no radial solution for this lambda".into()))?;
    let mapped = power_map_field(f, m, &target)?;
    let mi = m as i32;
    let exact = Field2D::from_fn(target, *mapped.params(), |rho, _| sol.u(rho.powi(mi)));
    Ok(PowerMapCheck { m, residual: mapped.residual_norm()?, reference: exact.residual_norm()? })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(alpha: f64, lambda: f64) -> DiskParams {
        DiskParams::new(alpha).unwrap().with_lambda(lambda).unwrap()
    }

    fn radial_solve(nr: usize, nt: usize, which: usize) -> (Field2D, f64, usize) {
        let p = params(1.0, 1.0);
        let sol = radial::radial_solutions(&p).unwrap()[which];
        let g = PolarGrid::new(nr, nt, 1).unwrap();
        let exact = Field2D::radial(g, p, &sol);
        let out = newton_solve(&p, &exact).unwrap();
        let err = out.field.values().iter().zip(exact.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        (out.field, err, out.iterations)
    }

    #[test]
    fn grid_shape() {
        let g = PolarGrid::new(32, 16, 3).unwrap();
        assert_eq!(g.radii()[31], 1.0);
        assert!(g.radii().windows(2).all(|w| w[0] < w[1]));
        assert!((g.period() - TAU / 3.0).abs() < 1e-15);
        assert!(PolarGrid::new(8, 16, 1).is_err());
        assert!(PolarGrid::new(16, 16, 0).is_err());
    }

    #[test]
    fn minimal_branch_converges_fast_and_second_order() {
        let (_, e1, it) = radial_solve(32, 32, 0);
        assert!(it <= 3, "{it}");
        let (_, e2, _) = radial_solve(64, 64, 0);
        assert!(e1 / e2 >= 3.5, "{e1} {e2}");
    }

    #[test]
    fn singular_branch_mass_and_residual() {
        let (f, _, _) = radial_solve(64, 32, 1);
        let p = params(1.0, 1.0);
        let sol = radial::radial_solutions(&p).unwrap()[1];
        let exact = radial::mass(sol.big_lambda, &p);
        let m = mass_2d(&f).unwrap();
        assert!((m - exact).abs() / exact < 2e-2, "{m} {exact}");
        assert!(m < 16.0 * PI);
        let rep = peak_report(&f).unwrap();
        assert_eq!(rep.peaks.len(), 1);
        assert!(rep.has_origin_peak());
        assert!(rep.residual_norm < 1e-10);
        assert_eq!(angular_monotonicity_check(&f, 1, 0.5), MonotonicityVerdict::MonotoneTrivial);
    }

    #[test]
    fn rotation_equivariance() {
        let p = params(1.0, 5.8);
        let g = PolarGrid::new(48, 48, 1).unwrap();
        let (out, eps) = enter_mode_branch(&p, &g, 1, 1.0, &SEED_LADDER).unwrap();
        let seed = mode_seed(&p, &g, 1, eps).unwrap();
        let b = newton_solve(&p, &seed.rotate_steps(1)).unwrap().field;
        assert!(b.angular_variation() > 0.1);
        let d = out.field.rotate_steps(1).values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        // two Newton runs from different seeds agree to the conditioning near the fold
        assert!(d < 1e-6, "{d}");
        let own = out.field.residual_norm().unwrap();
        let turned = out.field.rotate_steps(1).residual_norm().unwrap();
        assert!((own - turned).abs() < 1e-14, "{own} {turned}");
    }

    #[test]
    fn sector_matches_full_disk() {
        let p = params(2.0, 0.5);
        let g3 = PolarGrid::new(24, 16, 3).unwrap();
        let bump = |r: f64, th: f64| 3.0 * (-30.0 * ((r - 0.6).powi(2))).exp() * (1.0 + (3.0 * th).cos()) * 0.5;
        let sector = newton_solve(&p, &Field2D::from_fn(g3.clone(), p, bump)).unwrap().field.unfold();
        let full = newton_solve(&p, &Field2D::from_fn(g3.unfolded(), p, bump)).unwrap().field;
        let d = sector.values().iter().zip(full.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(d < 1e-9, "{d}");
    }

    #[test]
    fn sampling_and_power_map_identity() {
        let (f, _, _) = radial_solve(32, 32, 0);
        let g = f.grid().clone();
        for (i, j) in [(0, 0), (5, 7), (30, 31)] {
            assert_eq!(f.sample(g.radii()[i], g.theta(j)), f.get(i, j));
        }
        let own = f.residual_norm().unwrap();
        assert_eq!(power_map_check(&f, 1, &g).unwrap(), own);
        let study = power_map_study(&f, 2).unwrap();
        assert!(study.ratio() < 10.0, "{study:?}");
    }

    #[test]
    fn csv_layout() {
        let g = PolarGrid::new(16, 16, 1).unwrap();
        let f = Field2D::zeros(g, params(1.0, 1.0));
        let csv = f.to_csv();
        assert!(csv.starts_with("r,theta,u\n"));
        assert_eq!(csv.lines().count(), 1 + 16 * 16);
    }
}
