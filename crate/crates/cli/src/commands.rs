use crate::error::{AtFlag, CliError};
use crate::output::{f, n, Table};
use clap::{Args, Subcommand, ValueEnum};
use liouville_core::critical::{multistart_search, newton_refine, Verdict, DEFAULT_MAX_ITER, DEFAULT_TOL};
use liouville_core::params::{ceil_alpha, polygon_config, solution_count, DiskParams, PeakCount};
use liouville_core::pde2d::{self, Field2D, PeakReport, PolarGrid};
use liouville_core::poly::{self, ComplexPoly, IdentityResidual};
use liouville_core::radial::{self, Branch, RadialSolution};
use liouville_core::spectral;
use num_complex::Complex64;
use serde_json::{json, Value};

/// Result of one subcommand, in both output encodings.
pub struct Report {
    pub json: Value,
    pub table: Table,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Multistart search for critical points of the vortex Hamiltonian.
    Critical(CriticalArgs),
    /// Block-circulant Hessian at the polygon: mode blocks and spectrum.
    Hessian(PolygonArgs),
    /// P/Q polynomial identity at a refined polygon critical point.
    PolyCheck(PolyCheckArgs),
    /// Limit polynomial identity and root structure for the explicit families.
    LimitPoly(LimitPolyArgs),
    /// Both radial solutions at one coupling.
    Radial(RadialArgs),
    /// Radial bifurcation diagram on a uniform lambda grid.
    Bifurcate(BifurcateArgs),
    /// Fourier-mode boundary values and degeneracy loci of the radial solutions.
    Modes(ModesArgs),
    /// Newton solve of the 2-D problem on a polar grid.
    #[command(name = "pde2d-solve")]
    Pde2dSolve(SolveArgs),
    /// Lambda continuation of a 2-D branch.
    #[command(name = "pde2d-continue")]
    Pde2dContinue(ContinueArgs),
    /// Power-map residual of a radial field.
    PowerCheck(PowerArgs),
    /// Number of solution classes for small lambda.
    Count(AlphaArgs),
}

#[derive(Args, Debug, Clone)]
pub struct AlphaArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: f64,
}

#[derive(Args, Debug, Clone)]
pub struct PolygonArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: f64,
    #[arg(long)]
    pub m: usize,
}

#[derive(Args, Debug, Clone)]
pub struct CriticalArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: f64,
    #[arg(long)]
    pub m: usize,
    #[arg(long, default_value_t = 200)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Clone)]
pub struct PolyCheckArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: f64,
    #[arg(long)]
    pub m: usize,
    /// Rotation of the starting polygon.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub theta0: f64,
}

#[derive(Args, Debug, Clone)]
pub struct LimitPolyArgs {
    /// Degree of the family (3 or 4).
    #[arg(long)]
    pub p: usize,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub t: f64,
    /// Constant-term shift (degree 3 only).
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub s: f64,
}

#[derive(Args, Debug, Clone)]
pub struct RadialArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: f64,
}

#[derive(Args, Debug, Clone)]
pub struct BifurcateArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda_min: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda_max: f64,
    #[arg(long, default_value_t = 31)]
    pub steps: usize,
    /// Also locate the fold with the shooting map.
    #[arg(long)]
    pub shooting: bool,
}

#[derive(Args, Debug, Clone)]
pub struct ModesArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: f64,
    /// Coupling for the per-solution boundary values; loci only when absent.
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    /// Confirm each locus with the linearized shooting map.
    #[arg(long)]
    pub shooting: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Init {
    Minimal,
    Singular,
    Mode,
}

#[derive(Args, Debug, Clone)]
pub struct GridArgs {
    #[arg(long, default_value_t = 64)]
    pub nr: usize,
    #[arg(long, default_value_t = 64)]
    pub nt: usize,
    /// Solve on one of `sector` equal angular sectors.
    #[arg(long, default_value_t = 1)]
    pub sector: usize,
}

#[derive(Args, Debug, Clone)]
pub struct SeedArgs {
    #[arg(long, value_enum, default_value_t = Init::Minimal)]
    pub init: Init,
    /// Angular mode of the seed perturbation (init = mode).
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// Sign of the seed perturbation; selects the peak position.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub sign: f64,
}

#[derive(Args, Debug, Clone)]
pub struct SolveArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: f64,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub seed: SeedArgs,
}

#[derive(Args, Debug, Clone)]
pub struct ContinueArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda_from: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda_to: f64,
    #[arg(long, default_value_t = 31)]
    pub steps: usize,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub seed: SeedArgs,
}

#[derive(Args, Debug, Clone)]
pub struct PowerArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: f64,
    #[arg(long)]
    pub m: usize,
    #[arg(long, value_enum, default_value_t = RadialBranch::Minimal)]
    pub branch: RadialBranch,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadialBranch {
    Minimal,
    Singular,
}

fn positive(flag: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(CliError::domain(flag, format!("{flag} must be a positive finite number, got {v}")))
    }
}

fn at_least(flag: &str, v: usize, min: usize) -> Result<usize, CliError> {
    if v >= min {
        Ok(v)
    } else {
        Err(CliError::domain(flag, format!("{flag} must be at least {min}, got {v}")))
    }
}

fn params(alpha: f64) -> Result<DiskParams, CliError> {
    DiskParams::new(positive("--alpha", alpha)?).at("--alpha")
}

fn with_lambda(alpha: f64, lambda: f64, flag: &str) -> Result<DiskParams, CliError> {
    params(alpha)?.with_lambda(positive(flag, lambda)?).at(flag)
}

fn peaks(m: usize) -> Result<PeakCount, CliError> {
    PeakCount::new(at_least("--m", m, 1)?).at("--m")
}

fn grid(g: &GridArgs) -> Result<PolarGrid, CliError> {
    at_least("--nr", g.nr, 16)?;
    at_least("--nt", g.nt, 16)?;
    at_least("--sector", g.sector, 1)?;
    PolarGrid::new(g.nr, g.nt, g.sector).at("--nr")
}

fn check_seed(s: &SeedArgs) -> Result<(), CliError> {
    if !(s.sign.is_finite() && s.sign != 0.0) {
        return Err(CliError::domain("--sign", "--sign must be nonzero"));
    }
    if s.init == Init::Mode {
        at_least("--k", s.k, 1)?;
    }
    Ok(())
}

/// Checks every numeric flag before any computation starts.
pub fn validate(cmd: &Command) -> Result<(), CliError> {
    match cmd {
        Command::Critical(a) => {
            params(a.alpha)?;
            peaks(a.m)?;
            at_least("--restarts", a.restarts, 1)?;
        }
        Command::Hessian(a) => {
            params(a.alpha)?;
            peaks(a.m)?;
        }
        Command::PolyCheck(a) => {
            params(a.alpha)?;
            peaks(a.m)?;
            if !a.theta0.is_finite() {
                return Err(CliError::domain("--theta0", "--theta0 must be finite"));
            }
        }
        Command::LimitPoly(a) => {
            if a.p != 3 && a.p != 4 {
                return Err(CliError::domain("--p", format!("--p must be 3 or 4, got {}", a.p)));
            }
            if !a.t.is_finite() {
                return Err(CliError::domain("--t", "--t must be finite"));
            }
            if !a.s.is_finite() || (a.p == 4 && a.s != 0.0) {
                return Err(CliError::domain("--s", "--s must be finite and applies to p = 3 only"));
            }
        }
        Command::Radial(a) => {
            with_lambda(a.alpha, a.lambda, "--lambda")?;
        }
        Command::Bifurcate(a) => {
            params(a.alpha)?;
            positive("--lambda-min", a.lambda_min)?;
            positive("--lambda-max", a.lambda_max)?;
            if a.lambda_max <= a.lambda_min {
                return Err(CliError::domain("--lambda-max", "--lambda-max must exceed --lambda-min"));
            }
            at_least("--steps", a.steps, 2)?;
        }
        Command::Modes(a) => {
            params(a.alpha)?;
            if let Some(l) = a.lambda {
                positive("--lambda", l)?;
            }
        }
        Command::Pde2dSolve(a) => {
            with_lambda(a.alpha, a.lambda, "--lambda")?;
            grid(&a.grid)?;
            check_seed(&a.seed)?;
        }
        Command::Pde2dContinue(a) => {
            params(a.alpha)?;
            positive("--lambda-from", a.lambda_from)?;
            positive("--lambda-to", a.lambda_to)?;
            if a.lambda_to >= a.lambda_from {
                return Err(CliError::domain("--lambda-to", "--lambda-to must be below --lambda-from"));
            }
            at_least("--steps", a.steps, 2)?;
            grid(&a.grid)?;
            check_seed(&a.seed)?;
        }
        Command::PowerCheck(a) => {
            with_lambda(a.alpha, a.lambda, "--lambda")?;
            peaks(a.m)?;
            grid(&a.grid)?;
        }
        Command::Count(a) => {
            params(a.alpha)?;
        }
    }
    Ok(())
}

pub fn run(cmd: &Command) -> Result<Report, CliError> {
    validate(cmd)?;
    match cmd {
        Command::Critical(a) => critical(a),
        Command::Hessian(a) => hessian(a),
        Command::PolyCheck(a) => poly_check(a),
        Command::LimitPoly(a) => limit_poly(a),
        Command::Radial(a) => radial_cmd(a),
        Command::Bifurcate(a) => bifurcate(a),
        Command::Modes(a) => modes(a),
        Command::Pde2dSolve(a) => pde2d_solve(a),
        Command::Pde2dContinue(a) => pde2d_continue(a),
        Command::PowerCheck(a) => power_check(a),
        Command::Count(a) => count(a),
    }
}

fn complex(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn verdict_name(v: &Verdict) -> &'static str {
    match v {
        Verdict::Polygon { .. } => "polygon",
        Verdict::NonPolygon => "non_polygon",
        Verdict::NotConverged => "not_converged",
    }
}

fn critical(a: &CriticalArgs) -> Result<Report, CliError> {
    let p = params(a.alpha)?;
    let s = multistart_search(&p, peaks(a.m)?, a.restarts, a.seed);
    let mut table = Table::new(&["class", "point", "r", "theta", "residual", "verdict"]);
    for (c, rep) in s.distinct_classes.iter().enumerate() {
        for (j, z) in rep.config.points().iter().enumerate() {
            table.push(vec![n(c), n(j), f(z.norm()), f(z.arg()), f(rep.residual), verdict_name(&rep.verdict).into()]);
        }
    }
    let json = json!({"alpha": a.alpha, "m": a.m, "summary": serde_json::to_value(&s).expect("serializable")});
    Ok(Report { json, table })
}

fn hessian(a: &PolygonArgs) -> Result<Report, CliError> {
    let p = params(a.alpha)?;
    let m = peaks(a.m)?;
    let bc = spectral::assemble_blocks(&p, m).at("--m")?;
    let spec = spectral::full_spectrum(&p, m)?;
    let mut table = Table::new(&["p", "mu", "nu", "gamma", "det", "det_closed_form"]);
    let mut modes = Vec::new();
    for pm in 0..a.m {
        let mb = spectral::mode_block(&p, m, pm)?;
        let closed = 0.0 - 4.0 * (pm * pm * (a.m - pm) * (a.m - pm)) as f64 / bc.rho;
        table.push(vec![n(pm), f(mb.mu), f(mb.nu), f(mb.gamma), f(mb.det()), f(closed)]);
        modes.push(json!({
            "p": pm, "mu": mb.mu, "nu": mb.nu, "gamma": mb.gamma,
            "det": mb.det(), "det_closed_form": closed, "eigenvalues": mb.eigenvalues(),
        }));
    }
    let blocks: Vec<Value> = bc.blocks.iter().map(|c| json!([[c[(0, 0)], c[(0, 1)]], [c[(1, 0)], c[(1, 1)]]])).collect();
    let json = json!({
        "alpha": a.alpha,
        "m": a.m,
        "rho": bc.rho,
        "blocks": blocks,
        "modes": modes,
        "eigenvalues": spec.eigenvalues,
        "zero_count": spec.zero_count(),
        "zero_vector": spec.zero_vector,
        "dft_residual": spectral::dft_conjugation_residual(&p, m)?,
    });
    Ok(Report { json, table })
}

fn residual_json(r: &IdentityResidual) -> Value {
    json!({"max_abs": r.max_abs, "normalization": r.normalization, "relative": r.relative()})
}

fn coeff_rows(table: &mut Table, which: &str, coeffs: &[Complex64]) {
    for (k, c) in coeffs.iter().enumerate() {
        table.push(vec![which.into(), n(k), f(c.re), f(c.im)]);
    }
}

fn poly_check(a: &PolyCheckArgs) -> Result<Report, CliError> {
    let p = params(a.alpha)?;
    let start = polygon_config(&p, peaks(a.m)?, a.theta0).at("--m")?;
    let rep = newton_refine(&start, &p, DEFAULT_TOL, DEFAULT_MAX_ITER);
    let (pp, qq) = poly::build_pq(&rep.config);
    let res = poly::pq_identity_residual(&pp, &qq, &p)?;
    let mut table = Table::new(&["poly", "k", "re", "im"]);
    coeff_rows(&mut table, "P", pp.coeffs());
    coeff_rows(&mut table, "Q", qq.coeffs());
    coeff_rows(&mut table, "residual", &res.coeffs);
    let json = json!({
        "alpha": a.alpha,
        "m": a.m,
        "points": rep.config.points().iter().map(|z| complex(*z)).collect::<Vec<_>>(),
        "gradient_residual": rep.residual,
        "p_coeffs": pp.coeffs().iter().map(|z| complex(*z)).collect::<Vec<_>>(),
        "q_coeffs": qq.coeffs().iter().map(|z| complex(*z)).collect::<Vec<_>>(),
        "identity": residual_json(&res),
        "p_unit_circle_clearance": poly::unit_circle_clearance(&pp)?,
        "q_unit_circle_clearance": poly::unit_circle_clearance(&qq)?,
    });
    Ok(Report { json, table })
}

fn limit_poly(a: &LimitPolyArgs) -> Result<Report, CliError> {
    let pc: ComplexPoly = poly::limit_family(a.p, a.t, a.s).at("--p")?;
    let res = poly::limit_identity_residual(&pc)?;
    let rs = poly::root_structure_report(&pc)?;
    let mut roots = pc.roots()?;
    roots.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    let mut table = Table::new(&["poly", "k", "re", "im"]);
    coeff_rows(&mut table, "coeff", pc.coeffs());
    coeff_rows(&mut table, "root", &roots);
    let json = json!({
        "p": a.p,
        "t": a.t,
        "s": a.s,
        "coeffs": pc.coeffs().iter().map(|z| complex(*z)).collect::<Vec<_>>(),
        "roots": roots.iter().map(|z| complex(*z)).collect::<Vec<_>>(),
        "identity": residual_json(&res),
        "sum_re": rs.sum_re,
        "max_re": rs.max_re,
    });
    Ok(Report { json, table })
}

fn branch_name(b: Branch) -> &'static str {
    match b {
        Branch::Minimal => "minimal",
        Branch::Singular => "singular",
    }
}

fn radial_cmd(a: &RadialArgs) -> Result<Report, CliError> {
    let p = with_lambda(a.alpha, a.lambda, "--lambda")?;
    let sols = radial::radial_solutions(&p).at("--lambda")?;
    let mut table = Table::new(&["branch", "Lambda", "mass", "mass_quadrature", "sup_norm"]);
    let mut list = Vec::new();
    for s in &sols {
        let (m, mq) = (radial::mass(s.big_lambda, &p), radial::mass_by_quadrature(s));
        table.push(vec![branch_name(s.branch).into(), f(s.big_lambda), f(m), f(mq), f(s.sup_norm())]);
        list.push(json!({
            "branch": branch_name(s.branch), "Lambda": s.big_lambda, "mass": m,
            "mass_quadrature": mq, "sup_norm": s.sup_norm(),
        }));
    }
    let json = json!({
        "alpha": a.alpha,
        "lambda": a.lambda,
        "lambda_max": radial::lambda_max(&p),
        "solutions": list,
    });
    Ok(Report { json, table })
}

fn bifurcate(a: &BifurcateArgs) -> Result<Report, CliError> {
    let p = params(a.alpha)?;
    let grid: Vec<f64> = (0..a.steps)
        .map(|i| a.lambda_min + (a.lambda_max - a.lambda_min) * i as f64 / (a.steps - 1) as f64)
        .collect();
    let pts = radial::continuation(&p, &grid).at("--lambda-max")?;
    let mut table = Table::new(&["lambda", "branch", "Lambda", "mass", "sup_norm"]);
    for b in &pts {
        table.push(vec![f(b.lambda), branch_name(b.branch).into(), f(b.big_lambda), f(b.mass), f(b.sup_norm)]);
    }
    let points: Vec<Value> = pts
        .iter()
        .map(|b| {
            json!({"lambda": b.lambda, "branch": branch_name(b.branch), "Lambda": b.big_lambda,
                   "mass": b.mass, "sup_norm": b.sup_norm})
        })
        .collect();
    let mut json = json!({"alpha": a.alpha, "lambda_max": radial::lambda_max(&p), "points": points});
    if a.shooting {
        json["fold_by_shooting"] = json!(radial::fold_by_shooting(&p)?);
    }
    Ok(Report { json, table })
}

fn modes(a: &ModesArgs) -> Result<Report, CliError> {
    let p = params(a.alpha)?;
    let b = p.beta();
    let top = b.floor() as usize;
    let mut loci = Vec::new();
    for k in 0..=top {
        if (k as f64) >= b {
            continue;
        }
        let lam = radial::degeneracy_lambda(k, &p)?;
        let mut entry = json!({"k": k, "lambda": lam});
        if a.shooting {
            let found = if k == 0 {
                Some(radial::fold_by_shooting(&p)?)
            } else {
                let lo = 8.0 * b * b * 1.001;
                radial::mode_degeneracy_by_shooting(k, &p, lo, lo * 1e5, 40)?
            };
            entry["lambda_shooting"] = json!(found);
        }
        loci.push(entry);
    }
    let mut table = Table::new(&["branch", "Lambda", "k", "delta", "s_boundary", "f1_boundary", "normalized", "degenerate"]);
    let mut solutions = Vec::new();
    if let Some(lambda) = a.lambda {
        let q = p.with_lambda(lambda).at("--lambda")?;
        for s in radial::radial_solutions(&q).at("--lambda")? {
            let mut list = Vec::new();
            for k in 0..=top {
                let ma = radial::mode_boundary_value(k, s.big_lambda, &q);
                table.push(vec![
                    branch_name(s.branch).into(),
                    f(s.big_lambda),
                    n(k),
                    f(ma.delta),
                    f(ma.s_boundary),
                    f(ma.f1_boundary),
                    f(ma.normalized()),
                    ma.degenerate.to_string(),
                ]);
                list.push(json!({
                    "k": k, "delta": ma.delta, "s_boundary": ma.s_boundary, "f1_boundary": ma.f1_boundary,
                    "normalized": ma.normalized(), "degenerate": ma.degenerate,
                }));
            }
            solutions.push(json!({"branch": branch_name(s.branch), "Lambda": s.big_lambda, "modes": list}));
        }
    }
    let json = json!({"alpha": a.alpha, "lambda": a.lambda, "loci": loci, "solutions": solutions});
    Ok(Report { json, table })
}

fn radial_pick(p: &DiskParams, which: RadialBranch, flag: &str) -> Result<RadialSolution, CliError> {
    let sols = radial::radial_solutions(p).at(flag)?;
    let pick = match which {
        RadialBranch::Minimal => sols.first(),
        RadialBranch::Singular => sols.last(),
    };
    pick.copied().ok_or_else(|| CliError::domain(flag, "no radial solution at this lambda"))
}

fn initial_field(p: &DiskParams, g: &PolarGrid, s: &SeedArgs, flag: &str) -> Result<Field2D, CliError> {
    match s.init {
        Init::Minimal => Ok(Field2D::radial(g.clone(), *p, &radial_pick(p, RadialBranch::Minimal, flag)?)),
        Init::Singular => Ok(Field2D::radial(g.clone(), *p, &radial_pick(p, RadialBranch::Singular, flag)?)),
        Init::Mode => Ok(pde2d::enter_mode_branch(p, g, s.k, s.sign, &pde2d::SEED_LADDER)?.0.field),
    }
}

fn peaks_json(r: &PeakReport) -> Value {
    json!({
        "mass": r.mass,
        "residual_norm": r.residual_norm,
        "peaks": r.peaks.iter().map(|pk| json!({"r": pk.r, "theta": pk.theta, "height": pk.height})).collect::<Vec<_>>(),
    })
}

fn grid_json(g: &PolarGrid) -> Value {
    json!({"nr": g.nr(), "nt": g.nt(), "sector": g.sector_m()})
}

fn pde2d_solve(a: &SolveArgs) -> Result<Report, CliError> {
    let p = with_lambda(a.alpha, a.lambda, "--lambda")?;
    let g = grid(&a.grid)?;
    let init = initial_field(&p, &g, &a.seed, "--lambda")?;
    let out = pde2d::newton_solve(&p, &init)?;
    let report = pde2d::peak_report(&out.field)?;
    let full = out.field.unfold();
    let mut table = Table::new(&["r", "theta", "u"]);
    for i in 0..full.grid().nr() {
        for j in 0..full.grid().nt() {
            table.push(vec![f(full.grid().radii()[i]), f(full.grid().theta(j)), f(full.get(i, j))]);
        }
    }
    let json = json!({
        "alpha": a.alpha,
        "lambda": a.lambda,
        "grid": grid_json(&g),
        "iterations": out.iterations,
        "residual": out.residual,
        "max_value": out.field.max_value(),
        "angular_variation": out.field.angular_variation(),
        "report": peaks_json(&report),
    });
    Ok(Report { json, table })
}

fn pde2d_continue(a: &ContinueArgs) -> Result<Report, CliError> {
    let p = with_lambda(a.alpha, a.lambda_from, "--lambda-from")?;
    let g = grid(&a.grid)?;
    let start = pde2d::newton_solve(&p, &initial_field(&p, &g, &a.seed, "--lambda-from")?)?;
    let c = pde2d::continue_in_lambda(&p, a.lambda_from, a.lambda_to, a.steps, &start.field)?;
    let mut table = Table::new(&["lambda", "iterations", "peaks", "r_peak", "theta_peak", "height", "mass", "residual"]);
    let mut samples = Vec::new();
    for s in &c.samples {
        let top = s.report.peaks.iter().max_by(|x, y| x.height.total_cmp(&y.height));
        let (r, t, h) = top.map_or((f64::NAN, f64::NAN, f64::NAN), |pk| (pk.r, pk.theta, pk.height));
        table.push(vec![
            f(s.lambda),
            n(s.iterations),
            n(s.report.peaks.len()),
            f(r),
            f(t),
            f(h),
            f(s.report.mass),
            f(s.report.residual_norm),
        ]);
        samples.push(json!({"lambda": s.lambda, "iterations": s.iterations, "report": peaks_json(&s.report)}));
    }
    let json = json!({
        "alpha": a.alpha,
        "grid": grid_json(&g),
        "samples": samples,
        "lost_at": c.lost_at,
    });
    Ok(Report { json, table })
}

fn power_check(a: &PowerArgs) -> Result<Report, CliError> {
    let p = with_lambda(a.alpha, a.lambda, "--lambda")?;
    let g = grid(&a.grid)?;
    let sol = radial_pick(&p, a.branch, "--lambda")?;
    let field = pde2d::newton_solve(&p, &Field2D::radial(g, p, &sol))?.field;
    let study = pde2d::power_map_study(&field, a.m)?;
    let mf = a.m as f64;
    let mut table = Table::new(&["m", "residual", "reference", "ratio"]);
    table.push(vec![n(a.m), f(study.residual), f(study.reference), f(study.ratio())]);
    let json = json!({
        "alpha": a.alpha,
        "lambda": a.lambda,
        "m": a.m,
        "alpha_mapped": mf * p.beta() - 1.0,
        "lambda_mapped": mf * mf * a.lambda,
        "solver_residual": field.residual_norm()?,
        "residual": study.residual,
        "reference": study.reference,
        "ratio": study.ratio(),
    });
    Ok(Report { json, table })
}

fn count(a: &AlphaArgs) -> Result<Report, CliError> {
    let p = params(a.alpha)?;
    let mut breakdown = vec!["minimal".to_string(), "singular".to_string()];
    breakdown.extend((1..=ceil_alpha(&p)).map(|m| format!("m={m}")));
    debug_assert_eq!(breakdown.len() as i64, solution_count(&p));
    let mut table = Table::new(&["index", "class"]);
    for (i, b) in breakdown.iter().enumerate() {
        table.push(vec![n(i), b.clone()]);
    }
    let json = json!({"classes": solution_count(&p), "breakdown": breakdown});
    Ok(Report { json, table })
}
