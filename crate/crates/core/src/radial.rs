//! Radial solutions `u = log[Lambda / (1 + Lambda r^{2 beta} / (8 beta^2))^2] - log lambda`,
//! their mass, the fold and mode degeneracies, and the limit bubbles.

use num_complex::Complex64;
use ode_solvers::{Dopri5, System, Vector2};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::params::DiskParams;
use crate::quad;

/// Start radius for the shooting integrators.
pub const SHOOT_EPS: f64 = 1e-6;
const SHOOT_TOL: f64 = 1e-12;
/// Threshold on `|f_1(s_b)| / max(1, s_b^delta)` for calling a mode degenerate.
pub const DEGENERACY_TOL: f64 = 1e-9;

fn eight_beta_sq(p: &DiskParams) -> f64 {
    8.0 * p.beta() * p.beta()
}

pub fn lambda_of_big_lambda(big_lambda: f64, p: &DiskParams) -> f64 {
    big_lambda / (1.0 + big_lambda / eight_beta_sq(p)).powi(2)
}

/// The maximum of `lambda(Lambda)`, attained at `Lambda = 8 beta^2`.
pub fn lambda_max(p: &DiskParams) -> f64 {
    2.0 * p.beta() * p.beta()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LambdaRoots {
    Two { small: f64, large: f64 },
    Fold { big_lambda: f64 },
    Empty,
}

impl LambdaRoots {
    pub fn values(&self) -> Vec<f64> {
        match *self {
            LambdaRoots::Two { small, large } => vec![small, large],
            LambdaRoots::Fold { big_lambda } => vec![big_lambda],
            LambdaRoots::Empty => Vec::new(),
        }
    }
}

fn bisect_monotone(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    // f(lo) and f(hi) have opposite signs; iterate in log space
    let flo = f(lo).signum();
    for _ in 0..400 {
        let mid = (lo * hi).sqrt();
        if f(mid).signum() == flo {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Both preimages of `lambda` under `Lambda -> lambda`, by bisection on each monotone piece.
pub fn solve_big_lambda(p: &DiskParams) -> Result<LambdaRoots> {
    let lambda = p.require_lambda("solve_big_lambda")?;
    if lambda <= 0.0 {
        return Err(Error::Domain("lambda must be positive".into()));
    }
    let lmax = lambda_max(p);
    let fold = eight_beta_sq(p);
    if (lambda - lmax).abs() <= 1e-12 * lmax {
        return Ok(LambdaRoots::Fold { big_lambda: fold });
    }
    if lambda > lmax {
        return Ok(LambdaRoots::Empty);
    }
    let g = |x: f64| lambda_of_big_lambda(x, p) - lambda;
    let mut lo = lambda;
    while g(lo) > 0.0 {
        lo *= 0.5;
    }
    let small = bisect_monotone(g, lo, fold);
    let mut hi = 2.0 * fold;
    while g(hi) > 0.0 {
        hi *= 2.0;
    }
    let large = bisect_monotone(g, fold, hi);
    Ok(LambdaRoots::Two { small, large })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Minimal,
    Singular,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialSolution {
    pub big_lambda: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub branch: Branch,
}

pub fn radial_solution(big_lambda: f64, p: &DiskParams) -> Result<RadialSolution> {
    let lambda = p.require_lambda("radial_solution")?;
    if !(big_lambda > 0.0 && big_lambda.is_finite()) {
        return Err(Error::Domain(format!("Lambda must be positive, got {big_lambda}")));
    }
    let implied = lambda_of_big_lambda(big_lambda, p);
    if (implied - lambda).abs() > 1e-10 * lambda.max(implied) {
        return Err(Error::InconsistentPair { big_lambda, lambda });
    }
    let branch = if big_lambda < eight_beta_sq(p) { Branch::Minimal } else { Branch::Singular };
    Ok(RadialSolution { big_lambda, lambda, alpha: p.alpha(), branch })
}

/// Both radial solutions at the coupling stored in `p`, minimal first.
pub fn radial_solutions(p: &DiskParams) -> Result<Vec<RadialSolution>> {
    solve_big_lambda(p)?.values().into_iter().map(|l| radial_solution(l, p)).collect()
}

impl RadialSolution {
    fn beta(&self) -> f64 {
        self.alpha + 1.0
    }

    /// `w = Lambda r^{2 beta} / (8 beta^2)`.
    fn w(&self, r: f64) -> f64 {
        let b = self.beta();
        self.big_lambda * r.powf(2.0 * b) / (8.0 * b * b)
    }

    pub fn u(&self, r: f64) -> f64 {
        self.big_lambda.ln() - 2.0 * self.w(r).ln_1p() - self.lambda.ln()
    }

    pub fn du(&self, r: f64) -> f64 {
        let w = self.w(r);
        -4.0 * self.beta() * w / (r * (1.0 + w))
    }

    pub fn d2u(&self, r: f64) -> f64 {
        let (b, w) = (self.beta(), self.w(r));
        -4.0 * b * w * (2.0 * b - 1.0 - w) / (r * r * (1.0 + w).powi(2))
    }

    /// `u'' + u'/r + lambda r^{2 alpha} e^u`.
    pub fn ode_residual(&self, r: f64) -> f64 {
        self.d2u(r) + self.du(r) / r + self.lambda * r.powf(2.0 * self.alpha) * self.u(r).exp()
    }

    /// `max u = u(0) = log(Lambda / lambda)`.
    pub fn sup_norm(&self) -> f64 {
        (self.big_lambda / self.lambda).ln()
    }

    /// `lambda |x|^{2 alpha} e^u` as a function of `r`.
    pub fn density(&self, r: f64) -> f64 {
        self.lambda * r.powf(2.0 * self.alpha) * self.u(r).exp()
    }
}

/// `8 pi beta Lambda / (Lambda + 8 beta^2)`.
pub fn mass(big_lambda: f64, p: &DiskParams) -> f64 {
    8.0 * PI * p.beta() * big_lambda / (big_lambda + eight_beta_sq(p))
}

/// `lambda int_B |x|^{2 alpha} e^u` by adaptive quadrature in `s = r^{2 beta}`.
pub fn mass_by_quadrature(sol: &RadialSolution) -> f64 {
    let b = sol.beta();
    // r^{2 alpha + 1} dr = ds / (2 beta)
    let f = |s: f64| {
        let r = s.powf(0.5 / b);
        sol.lambda * sol.u(r).exp()
    };
    PI / b * quad::integrate(f, 0.0, 1.0, 1e-13, 0.0).value
}

struct RadialOde {
    lambda: f64,
    two_alpha: f64,
}

// in t = log r the radial equation reads u_tt = -lambda e^{(2 alpha + 2) t} e^u
impl System<f64, Vector2<f64>> for RadialOde {
    fn system(&self, tau: f64, y: &Vector2<f64>, dy: &mut Vector2<f64>) {
        let t = tau + SHOOT_EPS.ln();
        dy[0] = y[1];
        dy[1] = -self.lambda * ((self.two_alpha + 2.0) * t + y[0]).exp();
    }

    fn solout(&mut self, _r: f64, y: &Vector2<f64>, _dy: &Vector2<f64>) -> bool {
        !(y[0].is_finite() && y[0] < 700.0)
    }
}

// Every system below is written in a shifted logarithmic variable tau >= 0, which keeps
// the equations free of 1/r coefficients.
fn solver<S: System<f64, Vector2<f64>>>(
    sys: S,
    len: f64,
    y0: Vector2<f64>,
    rtol: f64,
    atol: f64,
) -> Dopri5<f64, Vector2<f64>, S> {
    Dopri5::new(sys, 0.0, len, len, y0, rtol, atol)
}

fn integrate_to_one<S: System<f64, Vector2<f64>>>(sys: S, y0: Vector2<f64>) -> Result<Vector2<f64>> {
    let len = -SHOOT_EPS.ln();
    let mut solver = solver(sys, len, y0, SHOOT_TOL, SHOOT_TOL);
    match solver.integrate() {
        Ok(_) => {
            let (x, y) = (solver.x_out(), solver.y_out());
            let (xe, ye) = (*x.last().unwrap(), *y.last().unwrap());
            if (xe - len).abs() > 1e-9 || !ye.iter().all(|v| v.is_finite()) {
                return Err(Error::BlowupInIntegration((xe - len).exp()));
            }
            Ok(ye)
        }
        Err(e) => Err(Error::BlowupInIntegration(match e {
            ode_solvers::dop_shared::IntegrationError::MaxNumStepReached { x, .. }
            | ode_solvers::dop_shared::IntegrationError::StepSizeUnderflow { x }
            | ode_solvers::dop_shared::IntegrationError::StiffnessDetected { x } => x,
        })),
    }
}

/// Integrates the radial equation from the regular expansion at `r = SHOOT_EPS`
/// with `u(0) = u0` and returns `u(1)`.
pub fn shoot(p: &DiskParams, u0: f64) -> Result<f64> {
    let lambda = p.require_lambda("shoot")?;
    let b = p.beta();
    let c = lambda * u0.exp() / (4.0 * b * b);
    let e = SHOOT_EPS;
    let y0 = Vector2::new(u0 - c * e.powf(2.0 * b), -2.0 * b * c * e.powf(2.0 * b));
    let y = integrate_to_one(RadialOde { lambda, two_alpha: 2.0 * p.alpha() }, y0)?;
    Ok(y[0])
}

fn golden_max(f: impl Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64, iters: usize) -> Result<(f64, f64)> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    for _ in 0..iters {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 >= f2 { (x1, f1) } else { (x2, f2) })
}

/// `max_{u0} u(1; u0)` over the shooting map at the coupling stored in `p`.
pub fn shooting_max(p: &DiskParams) -> Result<(f64, f64)> {
    let lambda = p.require_lambda("shooting_max")?;
    // the maximizer sits near log(8 beta^2 / lambda)
    let centre = (eight_beta_sq(p) / lambda).ln();
    golden_max(|u0| shoot(p, u0), centre - 6.0, centre + 6.0, 45)
}

/// Coupling at which the two zeros of the shooting map merge.
pub fn fold_by_shooting(p: &DiskParams) -> Result<f64> {
    let lmax = lambda_max(p);
    // the maximum behaves like log(lambda_max / lambda), so work in log lambda
    let at = |x: f64| -> Result<f64> { Ok(shooting_max(&p.with_lambda(x.exp())?)?.1) };
    let (lo, hi) = ((0.5 * lmax).ln(), (2.0 * lmax).ln());
    let (flo, fhi) = (at(lo)?, at(hi)?);
    if flo <= 0.0 || fhi >= 0.0 {
        return Err(Error::InternalInconsistency("fold not bracketed by the shooting map".into()));
    }
    Ok(illinois(at, (lo, flo), (hi, fhi), 1e-13)?.exp())
}

/// Regula falsi with the Illinois modification on a sign-changing bracket.
fn illinois(
    f: impl Fn(f64) -> Result<f64>,
    (mut a, mut fa): (f64, f64),
    (mut b, mut fb): (f64, f64),
    xtol: f64,
) -> Result<f64> {
    let mut side = 0;
    for _ in 0..200 {
        let c = (a * fb - b * fa) / (fb - fa);
        let fc = f(c)?;
        if fc == 0.0 {
            return Ok(c);
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
        if (b - a).abs() <= xtol * a.abs().max(b.abs()).max(1.0) {
            break;
        }
    }
    Ok((a * fb - b * fa) / (fb - fa))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub lambda: f64,
    pub big_lambda: f64,
    pub mass: f64,
    pub sup_norm: f64,
    pub branch: Branch,
}

/// Tabulates both branches over `lambda_grid`, ordered by lambda then branch.
pub fn continuation(p: &DiskParams, lambda_grid: &[f64]) -> Result<Vec<BranchPoint>> {
    let lmax = lambda_max(p);
    let mut out = Vec::new();
    for &lambda in lambda_grid {
        if !(lambda > 0.0 && lambda <= lmax * (1.0 + 1e-12)) {
            return Err(Error::Domain(format!("lambda = {lambda} outside (0, {lmax}]")));
        }
        let q = p.with_lambda(lambda)?;
        for sol in radial_solutions(&q)? {
            out.push(BranchPoint {
                lambda,
                big_lambda: sol.big_lambda,
                mass: mass(sol.big_lambda, p),
                sup_norm: sol.sup_norm(),
                branch: sol.branch,
            });
        }
    }
    out.sort_by(|a, b| a.lambda.total_cmp(&b.lambda).then(a.branch.cmp(&b.branch)));
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeAnalysis {
    pub k: usize,
    pub delta: f64,
    pub s_boundary: f64,
    pub f1_boundary: f64,
    pub degenerate: bool,
}

impl ModeAnalysis {
    /// `|f_1(s_b)| / max(1, s_b^delta)`.
    pub fn normalized(&self) -> f64 {
        self.f1_boundary.abs() / self.s_boundary.powf(self.delta).max(1.0)
    }
}

/// The regular mode solution; `s / (1 + s^2)` when `delta = 1`.
pub fn mode_f1(delta: f64, s: f64) -> f64 {
    if delta == 1.0 {
        return s / (1.0 + s * s);
    }
    ((delta + 1.0) * s.powf(delta) + (delta - 1.0) * s.powf(delta + 2.0)) / (1.0 + s * s)
}

/// The singular mode solution (`delta != 1`).
pub fn mode_f2(delta: f64, s: f64) -> f64 {
    ((delta + 1.0) * s.powf(2.0 - delta) + (delta - 1.0) * s.powf(-delta)) / (1.0 + s * s)
}

pub fn mode_boundary_value(k: usize, big_lambda: f64, p: &DiskParams) -> ModeAnalysis {
    let delta = k as f64 / p.beta();
    let s_boundary = (big_lambda / eight_beta_sq(p)).sqrt();
    let f1_boundary = mode_f1(delta, s_boundary);
    let mut ma = ModeAnalysis { k, delta, s_boundary, f1_boundary, degenerate: false };
    ma.degenerate = ma.normalized() < DEGENERACY_TOL;
    ma
}

/// `2 (beta^2 - k^2)`, where the singular branch degenerates in mode `k`.
pub fn degeneracy_lambda(k: usize, p: &DiskParams) -> Result<f64> {
    let (b, kf) = (p.beta(), k as f64);
    if kf >= b {
        return Err(Error::Domain(format!("mode k = {k} is not below beta = {b}")));
    }
    Ok(2.0 * (b * b - kf * kf))
}

/// `f = sum c_i s^{e_i} / (1 + s^2)`, residual of `f'' + f'/s + (8/(1+s^2)^2 - delta^2/s^2) f`
/// divided by the summed magnitudes of the individual terms before cancellation.
fn relative_mode_residual(terms: &[(f64, f64)], delta: f64, s: f64) -> f64 {
    let d = 1.0 + s * s;
    let (q, q1, q2) = (1.0 / d, -2.0 * s / (d * d), -2.0 / (d * d) + 8.0 * s * s / (d * d * d));
    let pot = 8.0 / (d * d) - delta * delta / (s * s);
    let pot_abs = 8.0 / (d * d) + delta * delta / (s * s);
    let (mut f, mut f1, mut f2, mut scale) = (0.0, 0.0, 0.0, 0.0);
    // each term s^e q is differentiated on its own to avoid cancellation between terms
    for &(c, e) in terms {
        let (m, m1, m2) = (s.powf(e), e * s.powf(e - 1.0), e * (e - 1.0) * s.powf(e - 2.0));
        f += c * m * q;
        f1 += c * (m1 * q + m * q1);
        f2 += c * (m2 * q + 2.0 * m1 * q1 + m * q2);
        scale += c.abs()
            * ((m2 * q).abs()
                + (2.0 * m1 * q1).abs()
                + (m * q2).abs()
                + ((m1 * q).abs() + (m * q1).abs()) / s
                + pot_abs * (m * q).abs());
    }
    (f2 + f1 / s + pot * f).abs() / scale.max(f64::MIN_POSITIVE)
}

/// Largest relative residual of `f_{k1}` (and `f_{k2}` when `delta != 1`) in the mode
/// equation at `samples` log-spaced points of `[1e-3, 1e3]`.
pub fn mode_ode_residual(k: usize, p: &DiskParams, samples: usize) -> f64 {
    let delta = k as f64 / p.beta();
    let f1: Vec<(f64, f64)> = if delta == 1.0 {
        vec![(1.0, 1.0)]
    } else {
        vec![(delta + 1.0, delta), (delta - 1.0, delta + 2.0)]
    };
    let f2 = [(delta + 1.0, 2.0 - delta), (delta - 1.0, -delta)];
    let n = samples.max(2);
    (0..n)
        .map(|i| {
            let s = 10f64.powf(-3.0 + 6.0 * i as f64 / (n - 1) as f64);
            let mut r = relative_mode_residual(&f1, delta, s);
            if delta != 1.0 {
                r = r.max(relative_mode_residual(&f2, delta, s));
            }
            r
        })
        .fold(0.0, f64::max)
}

struct ModeLogOde {
    delta_sq: f64,
}

impl System<f64, Vector2<f64>> for ModeLogOde {
    fn system(&self, tau: f64, y: &Vector2<f64>, dy: &mut Vector2<f64>) {
        // with t = log s = -tau the mode equation reads f_tt = (delta^2 - 8 s^2 / (1+s^2)^2) f
        let s2 = (-2.0 * tau).exp();
        dy[0] = y[1];
        dy[1] = (self.delta_sq - 8.0 * s2 / (1.0 + s2).powi(2)) * y[0];
    }
}

/// Local exponent `d log|f| / d log s` at `s_min` of the solution with `f(1) = 0, f'(1) = 1`,
/// integrated toward the origin. For `delta = 1` this approaches `-1`.
pub fn singular_mode_exponent(delta: f64, s_min: f64) -> Result<f64> {
    let len = -s_min.ln();
    let mut solver = solver(ModeLogOde { delta_sq: delta * delta }, len, Vector2::new(0.0, -1.0), 1e-12, 1e-14);
    solver.integrate().map_err(|_| Error::BlowupInIntegration(s_min))?;
    let y = *solver.y_out().last().unwrap();
    Ok(-y[1] / y[0])
}

struct LinearizedMode {
    big_lambda: f64,
    two_alpha: f64,
    coef: f64,
    two_k: f64,
}

// psi_tt + 2k psi_t + r^2 V psi = 0 in t = log r
impl System<f64, Vector2<f64>> for LinearizedMode {
    fn system(&self, tau: f64, y: &Vector2<f64>, dy: &mut Vector2<f64>) {
        let t = tau + SHOOT_EPS.ln();
        let r2b = ((self.two_alpha + 2.0) * t).exp();
        let w = self.coef * r2b;
        let v = self.big_lambda * r2b / (1.0 + w).powi(2);
        dy[0] = y[1];
        dy[1] = -self.two_k * y[1] - v * y[0];
    }
}

/// `psi(1)` for `phi = r^k psi` solving `phi'' + phi'/r + (lambda r^{2 alpha} e^u - k^2/r^2) phi = 0`
/// with `psi(0) = 1`, linearized about the radial solution with parameter `Lambda`.
/// A zero means mode `k` of that solution is degenerate.
pub fn linearized_mode_shoot(k: usize, big_lambda: f64, p: &DiskParams) -> Result<f64> {
    let (b, kf) = (p.beta(), k as f64);
    let e = SHOOT_EPS;
    let c = -big_lambda / (2.0 * b * (2.0 * b + 2.0 * kf));
    let y0 = Vector2::new(1.0 + c * e.powf(2.0 * b), 2.0 * b * c * e.powf(2.0 * b));
    let sys = LinearizedMode {
        big_lambda,
        two_alpha: 2.0 * p.alpha(),
        coef: big_lambda / eight_beta_sq(p),
        two_k: 2.0 * kf,
    };
    Ok(integrate_to_one(sys, y0)?[0])
}

/// Locates the first sign change of [`linearized_mode_shoot`] in `Lambda` (log scan then
/// bisection) and returns the corresponding coupling `lambda(Lambda)`, or `None` when
/// no sign change occurs on `[Lambda_lo, Lambda_hi]`.
pub fn mode_degeneracy_by_shooting(
    k: usize,
    p: &DiskParams,
    big_lambda_lo: f64,
    big_lambda_hi: f64,
    scan: usize,
) -> Result<Option<f64>> {
    let f = |l: f64| linearized_mode_shoot(k, l, p);
    let ratio = (big_lambda_hi / big_lambda_lo).ln();
    let mut prev = (big_lambda_lo, f(big_lambda_lo)?);
    for i in 1..=scan {
        let l = big_lambda_lo * (ratio * i as f64 / scan as f64).exp();
        let v = f(l)?;
        if v.signum() != prev.1.signum() {
            let root = illinois(|x| f(x.exp()), (prev.0.ln(), prev.1), (l.ln(), v), 1e-14)?;
            return Ok(Some(lambda_of_big_lambda(root.exp(), p)));
        }
        prev = (l, v);
    }
    Ok(None)
}

/// `U(x) = log[Lambda^2 / (1 + Lambda^2 |x^beta - xi|^2 / (8 beta^2))^2]` on the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitBubble {
    pub big_lambda: f64,
    pub xi: Complex64,
    pub alpha: f64,
}

pub fn limit_bubble(big_lambda: f64, xi: Complex64, p: &DiskParams) -> Result<LimitBubble> {
    if !(big_lambda > 0.0 && big_lambda.is_finite()) {
        return Err(Error::Domain(format!("Lambda must be positive, got {big_lambda}")));
    }
    if xi != Complex64::new(0.0, 0.0) && !p.is_integer_alpha() {
        return Err(Error::Domain("x^beta is multivalued: xi must be 0 for non-integer alpha".into()));
    }
    Ok(LimitBubble { big_lambda, xi, alpha: p.alpha() })
}

impl LimitBubble {
    fn beta(&self) -> f64 {
        self.alpha + 1.0
    }

    fn c(&self) -> f64 {
        let b = self.beta();
        self.big_lambda * self.big_lambda / (8.0 * b * b)
    }

    /// `F(x) = x^beta - xi` and `F'(x) = beta x^alpha`.
    fn f_and_df(&self, x: Complex64) -> (Complex64, Complex64) {
        let b = self.beta();
        if self.xi == Complex64::new(0.0, 0.0) {
            // only |x^beta| enters, so the principal branch is fine
            (x.powf(b), b * x.powf(self.alpha))
        } else {
            let n = b as i32;
            (x.powi(n) - self.xi, b * x.powi(n - 1))
        }
    }

    pub fn u(&self, x: Complex64) -> f64 {
        let (f, _) = self.f_and_df(x);
        2.0 * self.big_lambda.ln() - 2.0 * (self.c() * f.norm_sqr()).ln_1p()
    }

    /// `Delta U` from the gradient and Laplacian of `w = c |F|^2` for holomorphic `F`.
    pub fn laplacian(&self, x: Complex64) -> f64 {
        let (f, df) = self.f_and_df(x);
        let c = self.c();
        let w = c * f.norm_sqr();
        // grad Re F = (Re F', -Im F'), grad Im F = (Im F', Re F')
        let gx = 2.0 * c * (f.re * df.re + f.im * df.im);
        let gy = 2.0 * c * (-f.re * df.im + f.im * df.re);
        let lap_w = 4.0 * c * df.norm_sqr();
        -2.0 * (lap_w / (1.0 + w) - (gx * gx + gy * gy) / (1.0 + w).powi(2))
    }

    pub fn residual_at(&self, x: Complex64) -> f64 {
        self.laplacian(x) + x.norm().powf(2.0 * self.alpha) * self.u(x).exp()
    }

    /// `int_{R^2} |x|^{2 alpha} e^U` by nested adaptive quadrature in polar coordinates.
    pub fn total_mass(&self) -> f64 {
        let radial = |t: f64| {
            quad::integrate_to_infinity(
                |r| {
                    let x = Complex64::from_polar(r, t);
                    r * r.powf(2.0 * self.alpha) * self.u(x).exp()
                },
                0.0,
                1e-11,
                0.0,
            )
            .value
        };
        if self.xi == Complex64::new(0.0, 0.0) {
            TAU * radial(0.0)
        } else {
            quad::integrate(radial, 0.0, TAU, 1e-10, 0.0).value
        }
    }
}

/// Largest `|Delta U + |x|^{2 alpha} e^U|` over a polar sample grid with `r` in `[0.05, 3]`.
pub fn bubble_residual(b: &LimitBubble) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..40 {
        let r = 0.05 * 60f64.powf(i as f64 / 39.0);
        for j in 0..24 {
            let x = Complex64::from_polar(r, TAU * j as f64 / 24.0 + 0.1);
            worst = worst.max(b.residual_at(x).abs());
        }
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFunction {
    Psi0,
    Psi1,
    Psi2,
}

/// `Delta psi + 8 psi / (1 + |z|^2)^2` at `z`, with derivatives taken by hand.
pub fn kernel_residual_at(which: KernelFunction, z: Complex64) -> f64 {
    let rho = z.norm();
    let q = 1.0 + rho * rho;
    let pot = 8.0 / (q * q);
    match which {
        KernelFunction::Psi0 => {
            let psi = (1.0 - rho * rho) / q;
            let d1 = -4.0 * rho / (q * q);
            let d2 = -4.0 / (q * q) + 16.0 * rho * rho / (q * q * q);
            d2 + d1 / rho + pot * psi
        }
        KernelFunction::Psi1 | KernelFunction::Psi2 => {
            // psi = x_i g(rho) with g = 1/(1+rho^2); Delta(x_i g) = x_i (g'' + 3 g'/rho)
            let xi = if which == KernelFunction::Psi1 { z.re } else { z.im };
            let g = 1.0 / q;
            let g1 = -2.0 * rho / (q * q);
            let g2 = -2.0 / (q * q) + 8.0 * rho * rho / (q * q * q);
            xi * (g2 + 3.0 * g1 / rho) + pot * xi * g
        }
    }
}

/// Largest kernel residual over 500 points with `|z|` in `[0.01, 10]`.
pub fn kernel_residual(which: KernelFunction) -> f64 {
    (0..500)
        .map(|i| {
            let r = 0.01 * 1000f64.powf((i % 50) as f64 / 49.0);
            let z = Complex64::from_polar(r, TAU * (i / 50) as f64 / 10.0 + 0.05);
            kernel_residual_at(which, z).abs()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dp(a: f64, l: f64) -> DiskParams {
        DiskParams::new(a).unwrap().with_lambda(l).unwrap()
    }

    #[test]
    fn lambda_map_examples() {
        let p = dp(1.0, 1.0);
        assert!((lambda_of_big_lambda(32.0, &p) - 8.0).abs() < 1e-14);
        assert!((lambda_of_big_lambda(1e-9, &p) / 1e-9 - 1.0).abs() < 1e-9);
        assert_eq!(lambda_max(&p), 8.0);
        assert_eq!(lambda_max(&dp(0.5, 1.0)), 4.5);
        assert_eq!(lambda_max(&dp(3.0, 1.0)), 32.0);
    }

    #[test]
    fn roots_against_quadratic() {
        let disc = (480.0f64 * 480.0 - 1024.0).sqrt();
        let (a, b) = (480.0 - disc, 480.0 + disc);
        match solve_big_lambda(&dp(1.0, 1.0)).unwrap() {
            LambdaRoots::Two { small, large } => {
                assert!((small - a).abs() < 1e-12 * a);
                assert!((large - b).abs() < 1e-12 * b);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(solve_big_lambda(&dp(1.0, 8.0)).unwrap(), LambdaRoots::Fold { big_lambda: 32.0 });
        assert_eq!(solve_big_lambda(&dp(1.0, 9.0)).unwrap(), LambdaRoots::Empty);
    }

    #[test]
    fn closed_form_profiles() {
        let p = dp(1.0, 1.0);
        for sol in radial_solutions(&p).unwrap() {
            assert!(sol.u(1.0).abs() < 1e-12);
            for i in 0..200 {
                let r = 0.5 * (1.0 - (PI * (i as f64 + 0.5) / 200.0).cos());
                assert!(sol.ode_residual(r.max(1e-6)).abs() < 1e-10);
            }
        }
        let sing = radial_solutions(&p).unwrap()[1];
        assert!((sing.u(0.0) - 6.866).abs() < 1e-3);
        assert!(matches!(radial_solution(5.0, &p), Err(Error::InconsistentPair { .. })));
    }

    #[test]
    fn mass_examples() {
        let p = dp(1.0, 1.0);
        let sols = radial_solutions(&p).unwrap();
        assert!((mass(sols[1].big_lambda, &p) - 48.64).abs() < 0.01);
        for s in &sols {
            let m = mass(s.big_lambda, &p);
            assert!(((mass_by_quadrature(s) - m) / m).abs() < 1e-10);
            assert!(m < 16.0 * PI);
        }
        assert!((mass(1e14, &p) - 16.0 * PI).abs() < 1e-10);
    }

    #[test]
    fn shooting_recovers_roots() {
        let p = dp(1.0, 1.0);
        for s in radial_solutions(&p).unwrap() {
            assert!(shoot(&p, s.sup_norm()).unwrap().abs() < 1e-7);
        }
        let mid = 0.5 * radial_solutions(&p).unwrap().iter().map(|s| s.sup_norm()).sum::<f64>();
        assert!(shoot(&p, mid).unwrap() > 0.0);
    }

    #[test]
    fn mode_examples() {
        let p = dp(1.0, 1.0);
        assert!(mode_boundary_value(0, 32.0, &p).degenerate);
        assert!(mode_boundary_value(1, 96.0, &p).degenerate);
        assert!((degeneracy_lambda(1, &p).unwrap() - 6.0).abs() < 1e-15);
        assert_eq!(degeneracy_lambda(0, &p).unwrap(), lambda_max(&p));
        assert!(degeneracy_lambda(2, &p).is_err());
        for l in [1.0, 10.0, 1e3, 1e6] {
            assert!(!mode_boundary_value(2, l, &p).degenerate);
        }
    }

    #[test]
    fn mode_equation_residuals() {
        assert!(mode_ode_residual(0, &dp(1.0, 1.0), 200) < 1e-11);
        assert!(mode_ode_residual(1, &dp(1.0, 1.0), 200) < 1e-11);
        assert!(mode_ode_residual(2, &dp(1.0, 1.0), 200) < 1e-11);
        assert!((singular_mode_exponent(1.0, 1e-4).unwrap() + 1.0).abs() < 1e-5);
    }

    #[test]
    fn bubble_and_kernels() {
        let p = DiskParams::new(1.0).unwrap();
        let b = limit_bubble(2.0 * 2f64.sqrt() * 2.0, Complex64::new(0.0, 0.0), &p).unwrap();
        assert!(bubble_residual(&b) < 1e-10);
        assert!(((b.total_mass() - 16.0 * PI) / (16.0 * PI)).abs() < 1e-6);
        let b = limit_bubble(3.0, Complex64::new(0.4, -0.2), &p).unwrap();
        assert!(bubble_residual(&b) < 1e-10);
        for w in [KernelFunction::Psi0, KernelFunction::Psi1, KernelFunction::Psi2] {
            assert!(kernel_residual(w) < 1e-12);
        }
        assert!(limit_bubble(3.0, Complex64::new(0.4, 0.0), &DiskParams::new(0.5).unwrap()).is_err());
    }

    #[test]
    fn shooting_fold_and_mode_degeneracy() {
        let p = DiskParams::new(1.0).unwrap();
        let fold = fold_by_shooting(&p).unwrap();
        assert!((fold - 8.0).abs() < 1e-6, "{fold}");
        let l1 = mode_degeneracy_by_shooting(1, &p, 33.0, 1e5, 40).unwrap().unwrap();
        assert!((l1 - 6.0).abs() < 1e-6, "{l1}");
        let l0 = mode_degeneracy_by_shooting(0, &p, 1.0, 1e4, 40).unwrap().unwrap();
        assert!((l0 - 8.0).abs() < 1e-6, "{l0}");
    }
}
