//! Critical points of `Phi_m` by damped Newton with multistart, classified modulo rotation.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::hamiltonian::{grad_polar, hessian_fd, VortexConfig};
use crate::params::{polygon_radius, DiskParams, PeakCount};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 100;
/// Rotation-quotient distance below which two reports are the same class.
pub const DEDUP_THRESHOLD: f64 = 1e-6;
/// Radius spread and angle-spacing tolerance for the polygon verdict.
pub const POLYGON_TOL: f64 = 1e-6;

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Verdict {
    Polygon { radius: f64, theta0: f64 },
    NonPolygon,
    NotConverged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPointReport {
    pub config: VortexConfig,
    pub residual: f64,
    pub verdict: Verdict,
    /// `|mean radius - r_{alpha,m}|`, absent when no closed-form radius exists.
    pub radius_error: Option<f64>,
    pub iterations: usize,
}

impl CriticalPointReport {
    pub fn is_converged(&self) -> bool {
        !matches!(self.verdict, Verdict::NotConverged)
    }

    pub fn mean_radius(&self) -> f64 {
        let pts = self.config.points();
        pts.iter().map(|z| z.norm()).sum::<f64>() / pts.len() as f64
    }

    fn sort_key(&self) -> (f64, f64) {
        let t = match self.verdict {
            Verdict::Polygon { theta0, .. } => theta0,
            _ => 0.0,
        };
        (self.mean_radius(), t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSummary {
    pub restarts: usize,
    pub converged: usize,
    pub distinct_classes: Vec<CriticalPointReport>,
    pub seed: u64,
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

fn to_config(x: &[f64]) -> Result<VortexConfig> {
    let m = x.len() / 2;
    if x.iter().step_by(2).any(|&r| r <= 0.0) {
        return Err(Error::DegenerateConfig("nonpositive radius".into()));
    }
    VortexConfig::new((0..m).map(|j| Complex64::from_polar(x[2 * j], x[2 * j + 1])).collect())
}

/// Newton direction in the chart with the `theta_1` step pinned to zero.
fn newton_direction(c: &VortexConfig, p: &DiskParams, g: &[f64]) -> Option<Vec<f64>> {
    let h = hessian_fd(c, p, 1e-6).or_else(|_| hessian_fd(c, p, 1e-9)).ok()?;
    let n = g.len();
    let keep: Vec<usize> = (0..n).filter(|&i| i != 1).collect();
    let hr = DMatrix::from_fn(n - 1, n - 1, |a, b| h[(keep[a], keep[b])]);
    let gr = DVector::from_fn(n - 1, |a, _| -g[keep[a]]);
    let y = hr.lu().solve(&gr)?;
    let mut d = vec![0.0; n];
    for (a, &i) in keep.iter().enumerate() {
        d[i] = y[a];
    }
    d.iter().all(|v| v.is_finite()).then_some(d)
}

fn classify(c: &VortexConfig, p: &DiskParams, residual: f64, tol: f64) -> (VortexConfig, Verdict, Option<f64>) {
    let m = c.len();
    let (r, th) = c.polar();
    let mean = r.iter().sum::<f64>() / m as f64;
    let expected = PeakCount::new(m).ok().and_then(|mm| polygon_radius(p, mm).ok());
    let radius_error = expected.map(|e| (mean - e).abs());
    let sector = TAU / m as f64;

    let mut ang: Vec<f64> = th.iter().map(|t| t.rem_euclid(TAU)).collect();
    ang.sort_by(f64::total_cmp);
    let radial_ok = r.iter().all(|v| (v - mean).abs() < POLYGON_TOL);
    let spacing_ok = (0..m).all(|j| {
        let next = if j + 1 < m { ang[j + 1] } else { ang[0] + TAU };
        (next - ang[j] - sector).abs() < POLYGON_TOL
    });

    // canonical representative: one vertex on the positive axis, points ordered by angle
    let anchor = if radial_ok && spacing_ok {
        ang[0]
    } else {
        let (mut best, mut br) = (0, -1.0);
        for (j, &rj) in r.iter().enumerate() {
            if rj > br {
                best = j;
                br = rj;
            }
        }
        th[best]
    };
    let mut pts: Vec<Complex64> = c.rotate(-anchor).points().to_vec();
    pts.sort_by(|a, b| a.arg().rem_euclid(TAU).total_cmp(&b.arg().rem_euclid(TAU)));
    let canon = VortexConfig::new(pts).unwrap_or_else(|_| c.clone());

    let verdict = if residual >= tol {
        Verdict::NotConverged
    } else if radial_ok && spacing_ok {
        Verdict::Polygon { radius: mean, theta0: ang[0].rem_euclid(sector) }
    } else {
        Verdict::NonPolygon
    };
    (canon, verdict, radius_error)
}

pub fn newton_refine(c: &VortexConfig, p: &DiskParams, tol: f64, max_iter: usize) -> CriticalPointReport {
    let mut x = c.polar_flat();
    let mut g = grad_polar(&x, p.alpha());
    let mut iterations = 0;
    while max_abs(&g) >= tol && iterations < max_iter {
        let cur = match to_config(&x) {
            Ok(cur) => cur,
            Err(_) => break,
        };
        let Some(d) = newton_direction(&cur, p, &g) else { break };
        let f0 = norm_sq(&g);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            if to_config(&trial).is_ok() {
                let gt = grad_polar(&trial, p.alpha());
                if norm_sq(&gt) <= (1.0 - 2.0 * ARMIJO * t) * f0 {
                    accepted = Some((trial, gt));
                    break;
                }
            }
            t *= 0.5;
        }
        iterations += 1;
        match accepted {
            Some((nx, ng)) => {
                x = nx;
                g = ng;
            }
            None => break,
        }
    }
    let residual = max_abs(&g);
    match to_config(&x) {
        Ok(cfg) => {
            let (config, verdict, radius_error) = classify(&cfg, p, residual, tol);
            CriticalPointReport { config, residual, verdict, radius_error, iterations }
        }
        Err(_) => CriticalPointReport {
            config: c.clone(),
            residual,
            verdict: Verdict::NotConverged,
            radius_error: None,
            iterations,
        },
    }
}

/// Random start with radii in (0.1, 0.95) and pairwise separation at least 0.1.
pub fn sample_start(m: usize, rng: &mut impl Rng) -> Option<VortexConfig> {
    for _ in 0..1000 {
        let pts: Vec<Complex64> = (0..m)
            .map(|_| Complex64::from_polar(rng.gen_range(0.1..0.95), rng.gen_range(0.0..TAU)))
            .collect();
        let separated = (0..m).all(|j| (j + 1..m).all(|k| (pts[j] - pts[k]).norm() >= 0.1));
        if separated {
            if let Ok(c) = VortexConfig::new(pts) {
                return Some(c);
            }
        }
    }
    None
}

pub fn multistart_search(p: &DiskParams, m: PeakCount, restarts: usize, seed: u64) -> SearchSummary {
    let mut reports: Vec<CriticalPointReport> = (0..restarts)
        .into_par_iter()
        .filter_map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let start = sample_start(m.get(), &mut rng)?;
            let rep = newton_refine(&start, p, DEFAULT_TOL, DEFAULT_MAX_ITER);
            rep.is_converged().then_some(rep)
        })
        .collect();
    let converged = reports.len();
    reports.sort_by(|a, b| {
        let (ka, kb) = (a.sort_key(), b.sort_key());
        ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1))
    });
    let mut distinct: Vec<CriticalPointReport> = Vec::new();
    for rep in reports {
        let dup = distinct.iter().any(|d| {
            rotation_quotient_distance(&d.config, &rep.config).is_ok_and(|v| v < DEDUP_THRESHOLD)
        });
        if !dup {
            distinct.push(rep);
        }
    }
    SearchSummary { restarts, converged, distinct_classes: distinct, seed }
}

/// Whether a perfect matching exists using only edges with `cost <= thr`.
fn has_matching(cost: &[Vec<f64>], thr: f64) -> bool {
    let n = cost.len();
    let mut owner: Vec<Option<usize>> = vec![None; n];
    fn augment(j: usize, cost: &[Vec<f64>], thr: f64, seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for k in 0..cost.len() {
            if cost[j][k] <= thr && !seen[k] {
                seen[k] = true;
                if owner[k].is_none_or(|o| augment(o, cost, thr, seen, owner)) {
                    owner[k] = Some(j);
                    return true;
                }
            }
        }
        false
    }
    (0..n).all(|j| augment(j, cost, thr, &mut vec![false; n], &mut owner))
}

/// Smallest achievable maximum distance over relabelings.
fn bottleneck(a: &[Complex64], b: &[Complex64]) -> f64 {
    let cost: Vec<Vec<f64>> = a.iter().map(|x| b.iter().map(|y| (x - y).norm()).collect()).collect();
    let mut vals: Vec<f64> = cost.iter().flatten().copied().collect();
    vals.sort_by(f64::total_cmp);
    let (mut lo, mut hi) = (0, vals.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if has_matching(&cost, vals[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    vals[lo]
}

pub fn rotation_quotient_distance(a: &VortexConfig, b: &VortexConfig) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::SizeMismatch(a.len(), b.len()));
    }
    let eval = |phi: f64| bottleneck(a.rotate(phi).points(), b.points());
    const GRID: usize = 720;
    let step = TAU / GRID as f64;
    let mut coarse: Vec<(f64, f64)> = (0..GRID).map(|i| (eval(i as f64 * step), i as f64 * step)).collect();
    coarse.sort_by(|x, y| x.0.total_cmp(&y.0));
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut best = coarse[0].0;
    for &(_, centre) in coarse.iter().take(3) {
        let (mut lo, mut hi) = (centre - step, centre + step);
        let mut x1 = hi - inv_phi * (hi - lo);
        let mut x2 = lo + inv_phi * (hi - lo);
        let (mut f1, mut f2) = (eval(x1), eval(x2));
        for _ in 0..100 {
            if f1 <= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - inv_phi * (hi - lo);
                f1 = eval(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + inv_phi * (hi - lo);
                f2 = eval(x2);
            }
        }
        best = best.min(f1).min(f2);
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignChange {
    pub lo: f64,
    pub hi: f64,
    pub root: f64,
}

/// `d/dr Phi_m` along the polygon ansatz of radius `r`.
pub fn polygon_radial_derivative(p: &DiskParams, m: PeakCount, r: f64) -> f64 {
    let mm = m.get();
    let x: Vec<f64> = (0..mm).flat_map(|j| [r, TAU * j as f64 / mm as f64]).collect();
    grad_polar(&x, p.alpha()).iter().step_by(2).sum()
}

pub fn radial_profile_scan(p: &DiskParams, m: PeakCount, grid: usize) -> Result<Vec<SignChange>> {
    if grid < 100 {
        return Err(Error::Domain(format!("grid must be at least 100, got {grid}")));
    }
    let f = |r: f64| polygon_radial_derivative(p, m, r);
    let rs: Vec<f64> = (0..grid).map(|i| 0.01 + 0.98 * i as f64 / (grid - 1) as f64).collect();
    let vals: Vec<f64> = rs.iter().map(|&r| f(r)).collect();
    let mut out = Vec::new();
    for i in 0..grid - 1 {
        if vals[i] == 0.0 || vals[i].signum() != vals[i + 1].signum() {
            let (mut lo, mut hi) = (rs[i], rs[i + 1]);
            let flo = vals[i].signum();
            while hi - lo > 1e-12 {
                let mid = 0.5 * (lo + hi);
                if f(mid).signum() == flo {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            out.push(SignChange { lo, hi, root: 0.5 * (lo + hi) });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::polygon_config;

    fn pm(a: f64, m: usize) -> (DiskParams, PeakCount) {
        (DiskParams::new(a).unwrap(), PeakCount::new(m).unwrap())
    }

    #[test]
    fn exact_polygon_is_fixed_point() {
        let (p, m) = pm(2.5, 3);
        let rep = newton_refine(&polygon_config(&p, m, 0.0).unwrap(), &p, 1e-10, 50);
        assert!(rep.iterations <= 1);
        assert!(rep.residual < 1e-12);
        assert!(matches!(rep.verdict, Verdict::Polygon { .. }));
    }

    #[test]
    fn perturbed_polygon_converges() {
        let (p, m) = pm(2.5, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<Complex64> = polygon_config(&p, m, 0.4)
            .unwrap()
            .points()
            .iter()
            .map(|z| z + Complex64::from_polar(rng.gen_range(0.0..0.05), rng.gen_range(0.0..TAU)))
            .collect();
        let rep = newton_refine(&VortexConfig::new(pts).unwrap(), &p, 1e-10, 100);
        assert!(matches!(rep.verdict, Verdict::Polygon { .. }), "{rep:?}");
        assert!(rep.radius_error.unwrap() < 1e-8);
    }

    #[test]
    fn quotient_distance_examples() {
        let (p, m) = pm(2.5, 3);
        let c = VortexConfig::new(vec![Complex64::new(0.3, 0.1), Complex64::new(-0.2, 0.5)]).unwrap();
        assert!(rotation_quotient_distance(&c, &c.rotate(1.234)).unwrap() < 1e-9);
        let a = polygon_config(&p, m, 0.0).unwrap();
        let b = polygon_config(&p, m, TAU / 3.0).unwrap();
        assert!(rotation_quotient_distance(&a, &b).unwrap() < 1e-9);
        let pa = VortexConfig::new((0..3).map(|j| Complex64::from_polar(0.65, TAU * j as f64 / 3.0)).collect()).unwrap();
        let pb = VortexConfig::new((0..3).map(|j| Complex64::from_polar(0.70, TAU * j as f64 / 3.0 + 0.2)).collect()).unwrap();
        assert!((rotation_quotient_distance(&pa, &pb).unwrap() - 0.05).abs() < 1e-6);
        assert!(matches!(rotation_quotient_distance(&a, &c), Err(Error::SizeMismatch(3, 2))));
    }

    #[test]
    fn profile_scan_examples() {
        let (p, m) = pm(2.5, 3);
        let z = radial_profile_scan(&p, m, 200).unwrap();
        assert_eq!(z.len(), 1);
        assert!((z[0].root - polygon_radius(&p, m).unwrap()).abs() < 1e-9);
        let (p, m) = pm(1.0, 2);
        assert!(radial_profile_scan(&p, m, 200).unwrap().is_empty());
        let (p, m) = pm(2.0, 1);
        let z = radial_profile_scan(&p, m, 100).unwrap();
        assert_eq!(z.len(), 1);
        assert!((z[0].root - 0.5f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn small_census() {
        let (p, m) = pm(2.5, 3);
        let s = multistart_search(&p, m, 40, 7);
        assert_eq!(s.distinct_classes.len(), 1);
        assert!((s.distinct_classes[0].mean_radius() - polygon_radius(&p, m).unwrap()).abs() < 1e-8);
    }
}
