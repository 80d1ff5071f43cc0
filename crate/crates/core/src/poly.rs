//! Dense complex polynomials and the two structural identities satisfied by
//! critical points of `Phi_m` and by solutions of the limit system.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::hamiltonian::VortexConfig;
use crate::params::DiskParams;

type C = Complex64;

fn c(re: f64) -> C {
    C::new(re, 0.0)
}

/// Coefficients in ascending degree; trailing exact zeros are trimmed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexPoly {
    coeffs: Vec<C>,
}

impl ComplexPoly {
    pub fn new(mut coeffs: Vec<C>) -> Self {
        while coeffs.last().is_some_and(|v| *v == c(0.0)) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn monomial(coef: C, degree: usize) -> Self {
        let mut v = vec![c(0.0); degree + 1];
        v[degree] = coef;
        Self::new(v)
    }

    pub fn from_roots(roots: &[C]) -> Self {
        let mut out = vec![c(1.0)];
        for &r in roots {
            let mut next = vec![c(0.0); out.len() + 1];
            for (i, &a) in out.iter().enumerate() {
                next[i + 1] += a;
                next[i] -= a * r;
            }
            out = next;
        }
        Self::new(out)
    }

    pub fn coeffs(&self) -> &[C] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, with the zero polynomial reported as degree 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn leading(&self) -> C {
        self.coeffs.last().copied().unwrap_or(c(0.0))
    }

    pub fn derivative(&self) -> Self {
        Self::new(self.coeffs.iter().enumerate().skip(1).map(|(i, a)| a * i as f64).collect())
    }

    pub fn scale(&self, k: C) -> Self {
        Self::new(self.coeffs.iter().map(|a| a * k).collect())
    }

    /// Multiplies by `z`.
    pub fn shift(&self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut v = vec![c(0.0)];
        v.extend_from_slice(&self.coeffs);
        Self::new(v)
    }

    pub fn evaluate(&self, z: C) -> C {
        self.coeffs.iter().rev().fold(c(0.0), |acc, a| acc * z + a)
    }

    pub fn max_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, a| m.max(a.norm()))
    }

    /// `c_j -> (-1)^(p-j) conj(c_j)`, i.e. the polynomial whose roots are `-conj(w_j)`.
    pub fn reflect(&self) -> Self {
        let p = self.degree();
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(j, a)| if (p - j).is_multiple_of(2) { a.conj() } else { -a.conj() })
                .collect(),
        )
    }

    /// Roots by Aberth iteration, falling back to companion-matrix eigenvalues.
    pub fn roots(&self) -> Result<Vec<C>> {
        let n = self.degree();
        if self.is_zero() {
            return Err(Error::RootFindingFailure("zero polynomial".into()));
        }
        if n == 0 {
            return Ok(Vec::new());
        }
        let roots = aberth(self).filter(|r| self.roots_ok(r)).or_else(|| {
            let r = companion_roots(self)?;
            self.roots_ok(&r).then_some(r)
        });
        roots
            .map(|r| self.collapse_clusters(r))
            .ok_or_else(|| Error::RootFindingFailure("backward residual above 1e-8".into()))
    }

    /// Replaces each tight cluster of `k` roots by the single point where
    /// `P, P', ..., P^(k-1)` verifiably vanish, when such a point exists.
    /// Multiple roots are only resolved to about `eps^(1/k)` otherwise.
    fn collapse_clusters(&self, mut roots: Vec<C>) -> Vec<C> {
        let n = roots.len();
        let mut group: Vec<usize> = (0..n).collect();
        fn find(g: &mut [usize], i: usize) -> usize {
            if g[i] != i {
                let r = find(g, g[i]);
                g[i] = r;
            }
            g[i]
        }
        for i in 0..n {
            for j in i + 1..n {
                if (roots[i] - roots[j]).norm() < 1e-3 * roots[i].norm().max(1.0) {
                    let (a, b) = (find(&mut group, i), find(&mut group, j));
                    group[a] = b;
                }
            }
        }
        let mut derivs = vec![self.clone()];
        for _ in 1..n {
            let d = derivs.last().unwrap().derivative();
            derivs.push(d);
        }
        for root in 0..n {
            let members: Vec<usize> = (0..n).filter(|&i| find(&mut group, i) == root).collect();
            let k = members.len();
            if k < 2 {
                continue;
            }
            let mut z = members.iter().map(|&i| roots[i]).sum::<C>() / k as f64;
            let (f, df) = (&derivs[k - 1], &derivs[k]);
            for _ in 0..50 {
                let step = f.evaluate(z) / df.evaluate(z);
                if !step.is_finite() {
                    break;
                }
                z -= step;
                if step.norm() <= 1e-16 * z.norm().max(1.0) {
                    break;
                }
            }
            let vanishes = derivs[..k].iter().all(|d| {
                let scale: f64 = d.coeffs.iter().enumerate().map(|(j, a)| a.norm() * z.norm().powi(j as i32)).sum();
                d.evaluate(z).norm() <= 1e-12 * scale.max(1.0)
            });
            if vanishes && z.is_finite() {
                for &i in &members {
                    roots[i] = z;
                }
            }
        }
        roots
    }

    fn roots_ok(&self, roots: &[C]) -> bool {
        roots.iter().all(|&z| {
            let scale = self
                .coeffs
                .iter()
                .enumerate()
                .map(|(j, a)| a.norm() * z.norm().powi(j as i32))
                .sum::<f64>()
                .max(1.0);
            z.is_finite() && self.evaluate(z).norm() <= 1e-8 * scale
        })
    }
}

impl Add for &ComplexPoly {
    type Output = ComplexPoly;
    fn add(self, o: &ComplexPoly) -> ComplexPoly {
        let n = self.coeffs.len().max(o.coeffs.len());
        ComplexPoly::new(
            (0..n)
                .map(|i| {
                    self.coeffs.get(i).copied().unwrap_or(c(0.0)) + o.coeffs.get(i).copied().unwrap_or(c(0.0))
                })
                .collect(),
        )
    }
}

impl Neg for &ComplexPoly {
    type Output = ComplexPoly;
    fn neg(self) -> ComplexPoly {
        self.scale(c(-1.0))
    }
}

impl Sub for &ComplexPoly {
    type Output = ComplexPoly;
    fn sub(self, o: &ComplexPoly) -> ComplexPoly {
        self + &(-o)
    }
}

impl Mul for &ComplexPoly {
    type Output = ComplexPoly;
    fn mul(self, o: &ComplexPoly) -> ComplexPoly {
        if self.is_zero() || o.is_zero() {
            return ComplexPoly::zero();
        }
        let mut v = vec![c(0.0); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in o.coeffs.iter().enumerate() {
                v[i + j] += a * b;
            }
        }
        ComplexPoly::new(v)
    }
}

fn aberth(p: &ComplexPoly) -> Option<Vec<C>> {
    let n = p.degree();
    let lead = p.leading();
    let monic: Vec<C> = p.coeffs.iter().map(|a| a / lead).collect();
    let pm = ComplexPoly::new(monic);
    let dp = pm.derivative();
    // Cauchy bound for the initial circle
    let radius = 1.0 + pm.coeffs[..n].iter().fold(0.0f64, |m, a| m.max(a.norm()));
    let mut z: Vec<C> = (0..n)
        .map(|k| C::from_polar(0.5 * radius, std::f64::consts::TAU * k as f64 / n as f64 + 0.4))
        .collect();
    for _ in 0..500 {
        let mut biggest: f64 = 0.0;
        for k in 0..n {
            let pv = pm.evaluate(z[k]);
            if pv == c(0.0) {
                continue;
            }
            let ratio = pv / dp.evaluate(z[k]);
            let repulsion: C = (0..n).filter(|&j| j != k).map(|j| 1.0 / (z[k] - z[j])).sum();
            let w = ratio / (1.0 - ratio * repulsion);
            if w.is_finite() {
                z[k] -= w;
                biggest = biggest.max(w.norm() / z[k].norm().max(1e-300));
            }
        }
        if biggest < 1e-15 {
            break;
        }
    }
    z.iter().all(|v| v.is_finite()).then_some(z)
}

fn companion_roots(p: &ComplexPoly) -> Option<Vec<C>> {
    let n = p.degree();
    let lead = p.leading();
    let mut m = DMatrix::<C>::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = c(1.0);
    }
    for i in 0..n {
        m[(i, n - 1)] = -p.coeffs[i] / lead;
    }
    m.schur().eigenvalues().map(|v| v.iter().copied().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityResidual {
    pub coeffs: Vec<C>,
    pub max_abs: f64,
    pub normalization: f64,
}

impl IdentityResidual {
    fn from_terms(total: ComplexPoly, terms: &[&ComplexPoly], width: usize) -> Self {
        let normalization = terms.iter().fold(0.0f64, |m, t| m.max(t.max_coeff())).max(f64::MIN_POSITIVE);
        let mut coeffs = total.coeffs;
        coeffs.resize(width.max(coeffs.len()), c(0.0));
        let max_abs = coeffs.iter().fold(0.0f64, |m, a| m.max(a.norm()));
        Self { coeffs, max_abs, normalization }
    }

    pub fn relative(&self) -> f64 {
        self.max_abs / self.normalization
    }
}

/// `P(z) = prod (z - z_j)` and `Q(z) = prod (z - 1/conj(z_j))`.
pub fn build_pq(cfg: &VortexConfig) -> (ComplexPoly, ComplexPoly) {
    let pts = cfg.points();
    let refl: Vec<C> = pts.iter().map(|z| 1.0 / z.conj()).collect();
    (ComplexPoly::from_roots(pts), ComplexPoly::from_roots(&refl))
}

/// `2 z P' Q' + (alpha P' - z P'') Q - ((alpha + 2) Q' + z Q'') P`.
pub fn pq_identity_residual(p: &ComplexPoly, q: &ComplexPoly, params: &DiskParams) -> Result<IdentityResidual> {
    if p.degree() != q.degree() {
        return Err(Error::DegreeMismatch(p.degree(), q.degree()));
    }
    let a = params.alpha();
    let (p1, p2) = (p.derivative(), p.derivative().derivative());
    let (q1, q2) = (q.derivative(), q.derivative().derivative());
    let t1 = (&p1 * &q1).shift().scale(c(2.0));
    let t2 = (&p1 * q).scale(c(a));
    let t3 = (&p2 * q).shift();
    let t4 = (&q1 * p).scale(c(a + 2.0));
    let t5 = (&q2 * p).shift();
    let total = &(&(&t1 + &t2) - &t3) - &(&t4 + &t5);
    Ok(IdentityResidual::from_terms(total, &[&t1, &t2, &t3, &t4, &t5], 2 * p.degree() + 1))
}

fn check_monic(p: &ComplexPoly) -> Result<()> {
    let lead = p.leading();
    if p.is_zero() || (lead - c(1.0)).norm() > 1e-12 {
        return Err(Error::NonMonic(format!("{lead}")));
    }
    Ok(())
}

/// `(P'' - P') Q + (Q'' + Q') P - 2 P' Q'` with `Q` the reflection of `P`.
pub fn limit_identity_residual(pcal: &ComplexPoly) -> Result<IdentityResidual> {
    check_monic(pcal)?;
    limit_identity_with(pcal, &pcal.reflect())
}

/// The limit identity for an explicit pair.
pub fn limit_identity_with(pcal: &ComplexPoly, qcal: &ComplexPoly) -> Result<IdentityResidual> {
    let (p1, p2) = (pcal.derivative(), pcal.derivative().derivative());
    let (q1, q2) = (qcal.derivative(), qcal.derivative().derivative());
    let t1 = &p2 * qcal;
    let t2 = &p1 * qcal;
    let t3 = &q2 * pcal;
    let t4 = &q1 * pcal;
    let t5 = (&p1 * &q1).scale(c(2.0));
    let total = &(&(&(&t1 - &t2) + &t3) + &t4) - &t5;
    Ok(IdentityResidual::from_terms(total, &[&t1, &t2, &t3, &t4, &t5], 2 * pcal.degree() + 1))
}

/// `(z + 1 + t i)^3 - 4 + s i` for `p = 3`; `(z + 2 + t i)^3 (z - 2 + t i)` for `p = 4`.
pub fn limit_family(p: usize, t: f64, s: f64) -> Result<ComplexPoly> {
    match p {
        3 => {
            let shift = C::new(1.0, t);
            let base = ComplexPoly::from_roots(&[-shift, -shift, -shift]);
            Ok(&base + &ComplexPoly::new(vec![C::new(-4.0, s)]))
        }
        4 => {
            let a = C::new(2.0, t);
            let b = C::new(-2.0, t);
            Ok(ComplexPoly::from_roots(&[-a, -a, -a, -b]))
        }
        _ => Err(Error::Domain(format!("no explicit family for p = {p}"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootStructure {
    pub sum_re: f64,
    pub max_re: f64,
}

pub fn root_structure_report(pcal: &ComplexPoly) -> Result<RootStructure> {
    check_monic(pcal)?;
    let roots = pcal.roots()?;
    Ok(RootStructure {
        sum_re: roots.iter().map(|z| z.re).sum(),
        max_re: roots.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max),
    })
}

pub fn unit_circle_clearance(p: &ComplexPoly) -> Result<f64> {
    if p.is_zero() {
        return Err(Error::RootFindingFailure("zero polynomial".into()));
    }
    Ok(p.roots()?.iter().map(|z| (z.norm() - 1.0).abs()).fold(f64::INFINITY, f64::min))
}
