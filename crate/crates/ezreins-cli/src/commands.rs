//! Subcommand implementations. Every command writes the resolved parameter
//! echo followed by a CSV table.

use std::fmt::Write as _;
use std::fs;
use std::process::ExitCode;

use ezreins::config::{csv_row, fmt_num, Config};
use ezreins::exact::ExactSolver;
use ezreins::logquad::{CsSolver, UnitEisSolver};
use ezreins::params::ModelParams;
use ezreins::sim::{
    empirical_condition_m, paths_csv, simulate_factor, simulate_surplus, simulate_wealth_paths, Measure, RatioTable,
    SimSpec,
};
use ezreins::solution::Solution;
use ezreins::studies::{build_solver, linspace, sweep, table2, PUBLISHED_TABLE2};
use ezreins::validate::{Mode, Severity};
use ezreins::verify::fd::{fd_solve_g, Grid2D};
use ezreins::verify::mc::mc_g;
use ezreins::verify::residual::{pde_residual, Equation};
use ezreins::verify::saddle::{hjbi_saddle_check, Aggregator, SaddleConfig};
use ezreins::verify::{CheckRow, FkDriftDiscount};
use ezreins::WMode;

use crate::{Cli, CliError, Command, MeasureArg, Suite, Target};

struct Context {
    cfg: Config,
    mode: Mode,
}

impl Context {
    fn w_mode(&self) -> WMode {
        self.cfg.cs_w.map_or(WMode::FixedPoint, WMode::Fixed)
    }

    fn params(&self) -> &ModelParams {
        &self.cfg.params
    }
}

fn load(cli: &Cli, base: Option<ModelParams>) -> Result<Context, CliError> {
    let g = &cli.global;
    let mut cfg = match &g.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|source| CliError::Read {
                path: path.clone(),
                source,
            })?;
            Config::parse(&text)?
        }
        None => {
            let mut cfg = Config::default();
            if let Some(p) = base {
                cfg.params = p;
            }
            cfg
        }
    };
    for pair in &g.overrides {
        cfg.apply_override(pair)?;
    }
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    let mode = Mode::parse(&g.mode).ok_or_else(|| {
        CliError::Usage(format!("unknown mode `{}` (expected exact, unit_eis or cs)", g.mode))
    })?;
    Ok(Context { cfg, mode })
}

fn emit(cli: &Cli, ctx: &Context, extra: &[(&str, String)], header: &str, body: &str) -> Result<(), CliError> {
    let mut out = ctx.cfg.echo();
    let _ = writeln!(out, "# mode = {}", ctx.mode.name());
    for (k, v) in extra {
        let _ = writeln!(out, "# {k} = {v}");
    }
    out.push_str(header);
    out.push('\n');
    out.push_str(body);
    match &cli.global.out {
        Some(path) => fs::write(path, out)?,
        None => print!("{out}"),
    }
    Ok(())
}

pub fn run(cli: &Cli) -> Result<ExitCode, CliError> {
    match &cli.command {
        Command::Validate => validate(cli),
        Command::Solve {
            t,
            x,
            m_min,
            m_max,
            m_steps,
        } => solve(cli, *t, *x, (*m_min, *m_max, *m_steps)),
        Command::Sweep {
            param,
            from,
            to,
            steps,
            t,
            x,
            m,
        } => run_sweep(cli, param, linspace(*from, *to, *steps), *t, *x, *m),
        Command::Table2 { m, sigmas } => run_table2(cli, *m, sigmas),
        Command::Verify {
            suite,
            points,
            paths,
            dt,
        } => verify(cli, *suite, *points, *paths, *dt),
        Command::Simulate {
            what,
            measure,
            paths,
            dt,
            x0,
            record_every,
            ell,
        } => simulate(cli, *what, *measure, *paths, *dt, *x0, *record_every, *ell),
    }
}

fn validate(cli: &Cli) -> Result<ExitCode, CliError> {
    let ctx = load(cli, None)?;
    let rep = ctx.cfg.validate(ctx.mode);
    let mut body = String::new();
    for c in &rep.checks {
        let severity = match c.severity {
            Severity::Hard => "hard",
            Severity::Warning => "warning",
            Severity::Info => "info",
        };
        let _ = writeln!(body, "{},{severity},{},\"{}\"", c.name, c.passed, c.message.replace('"', "'"));
    }
    emit(cli, &ctx, &[], "check,severity,passed,message", &body)?;
    Ok(if rep.has_hard_failure() {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    })
}

fn solve(cli: &Cli, t: Option<f64>, x: f64, (lo, hi, steps): (f64, f64, usize)) -> Result<ExitCode, CliError> {
    let ctx = load(cli, None)?;
    let p = *ctx.params();
    let t = t.unwrap_or(p.horizon.t0);
    let solver = build_solver(&p, ctx.mode, ctx.w_mode())?;
    let mut body = String::new();
    for m in linspace(lo, hi, steps) {
        let g = solver.g(t, m)?;
        let v = solver.value_function(t, x, m)?;
        let s = solver.strategy(t, x, m)?;
        let _ = writeln!(
            body,
            "{}",
            csv_row(&[t, x, m, g.g, g.g_m, v, s.pi_ratio(), s.q_ratio(), s.c_ratio(), s.xi1, s.xi2, s.xi3])
        );
    }
    emit(
        cli,
        &ctx,
        &[],
        "t,x,m,g,g_m,value,pi_ratio,q_ratio,c_ratio,xi1,xi2,xi3",
        &body,
    )?;
    Ok(ExitCode::SUCCESS)
}

fn run_sweep(cli: &Cli, key: &str, values: Vec<f64>, t: Option<f64>, x: f64, m: Option<f64>) -> Result<ExitCode, CliError> {
    let ctx = load(cli, None)?;
    let p = *ctx.params();
    let t = t.unwrap_or(p.horizon.t0);
    let m = m.unwrap_or(p.market.m0);
    let rows = sweep(&p, ctx.mode, ctx.w_mode(), key, &values, t, x, m)?;
    let mut body = String::new();
    for r in rows {
        let s = r.strategy;
        let _ = writeln!(body, "{}", csv_row(&[r.value, s.pi_ratio(), s.q_ratio(), s.c_ratio(), s.xi1, s.xi2, s.xi3]));
    }
    let header = format!("{key},pi_ratio,q_ratio,c_ratio,xi1,xi2,xi3");
    emit(cli, &ctx, &[("point", format!("t={t};x={x};m={m}"))], &header, &body)?;
    Ok(ExitCode::SUCCESS)
}

fn run_table2(cli: &Cli, m: f64, sigmas: &[f64]) -> Result<ExitCode, CliError> {
    let ctx = load(cli, Some(ModelParams::approximation_study(0.8)))?;
    let sigmas: Vec<f64> = if sigmas.is_empty() {
        PUBLISHED_TABLE2.iter().map(|r| r.0).collect()
    } else {
        sigmas.to_vec()
    };
    let rows = table2(ctx.params(), &sigmas, m, ctx.w_mode())?;
    let mut body = String::new();
    for r in rows {
        let published = PUBLISHED_TABLE2.iter().find(|p| (p.0 - r.sigma).abs() < 1e-12);
        let mut line = csv_row(&[r.sigma, r.pi_cs, r.pi_exact, r.error, r.w]);
        match published {
            Some(p) => {
                let _ = write!(line, ",{}", csv_row(&[p.1, p.2, p.3]));
            }
            None => line.push_str(",,,"),
        }
        let _ = writeln!(body, "{line}");
    }
    emit(
        cli,
        &ctx,
        &[("m", fmt_num(m))],
        "sigma,pi_cs,pi_exact,error,w,published_cs,published_exact,published_error",
        &body,
    )?;
    Ok(ExitCode::SUCCESS)
}

fn point(t: f64, m: f64) -> String {
    format!("t={};m={}", fmt_num(t), fmt_num(m))
}

fn g_of(s: &dyn Solution) -> impl Fn(f64, f64) -> f64 + Sync + '_ {
    move |t, m| s.g(t, m).map_or(f64::NAN, |v| v.g)
}

fn verify(cli: &Cli, suite: Suite, points: Option<usize>, paths: usize, dt: f64) -> Result<ExitCode, CliError> {
    let ctx = load(cli, None)?;
    let p = *ctx.params();
    let seed = ctx.cfg.seed;
    let mut rows: Vec<CheckRow> = Vec::new();
    let wants = |s: Suite| suite == s || suite == Suite::All;
    let exact = ExactSolver::new(&p)?;

    if wants(Suite::Pde) {
        let grid = Grid2D::new(p.horizon.t0, p.horizon.t_end, 10, 1.0, 10)?;
        let mut add = |name: &str, r: ezreins::verify::residual::ResidualReport, tol: f64, above: bool| {
            let pass = if above { r.max > tol } else { r.max <= tol };
            rows.push(CheckRow::new(name, format!("max@{}", point(r.at.0, r.at.1)), r.max, tol, pass));
        };
        let ge = g_of(&exact);
        add("pde_exact_linear", pde_residual(&ge, &p, Equation::LinearG, &grid)?, 1e-4, false);
        let unit = UnitEisSolver::new(&p)?;
        let gu = g_of(&unit);
        add("pde_unit_eis", pde_residual(&gu, &p, Equation::UnitEis, &grid)?, 1e-4, false);
        add("pde_negative_control", pde_residual(&gu, &p, Equation::LinearG, &grid)?, 1e-2, true);
        let cs = CsSolver::new(&p, ctx.w_mode())?;
        let gc = g_of(&cs);
        let eq = Equation::CampbellShiller { w: cs.w(), phi: cs.phi() };
        add("pde_campbell_shiller", pde_residual(&gc, &p, eq, &grid)?, 1e-4, false);
    }
    if wants(Suite::Bounds) {
        let d = *exact.coeffs();
        let (t0, t_end) = (p.horizon.t0, p.horizon.t_end);
        let n = 40;
        let (mut worst_c, mut worst_b, mut worst_a) = (f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for i in 0..n {
            let t = t0 + (t_end - t0) * i as f64 / n as f64;
            for j in 1..=n {
                let tau = (t_end - t) * j as f64 / n as f64;
                let v = exact.triple(tau);
                worst_c = worst_c.max((v.c - d.b0 * tau).max(v.c - d.c_limit()).max(-v.c));
                worst_b = worst_b.max(v.b.abs() - d.b1.abs() * tau);
                worst_a = worst_a.max(d.a1 * (t_end - t) * tau + d.a2 * tau - v.a);
            }
        }
        let pairs = format!("{}_pairs", n * n);
        rows.push(CheckRow::new("bound_c", pairs.clone(), worst_c, 1e-12, worst_c <= 1e-12));
        rows.push(CheckRow::new("bound_b_abs_b1", pairs.clone(), worst_b, 1e-12, worst_b <= 1e-12));
        rows.push(CheckRow::new("bound_a", pairs, worst_a, 1e-12, worst_a <= 1e-12));
    }
    if wants(Suite::Saddle) {
        let cfg = SaddleConfig {
            points: points.unwrap_or(100),
            seed,
            ..SaddleConfig::default()
        };
        let (sol, agg): (Box<dyn Solution>, Aggregator) = match ctx.mode {
            Mode::UnitEis => (Box::new(UnitEisSolver::new(&p)?), Aggregator::Unit),
            _ => (Box::new(ExactSolver::new(&p)?), Aggregator::NonUnit { phi: exact.coeffs().phi }),
        };
        let rep = hjbi_saddle_check(sol.as_ref(), agg, &cfg)?;
        rows.push(CheckRow::new(
            "saddle_violations",
            format!("{}x{}", rep.points, rep.perturbations),
            rep.violations.len() as f64,
            0.0,
            rep.violations.is_empty(),
        ));
        rows.push(CheckRow::new("saddle_optimum", "max".into(), rep.max_optimum, 1e-6, rep.max_optimum <= 1e-6));
        for v in rep.violations.iter().take(20) {
            let (t, x, m) = v.point;
            rows.push(CheckRow::new(
                &format!("saddle_{}", v.kind),
                format!("t={};x={};m={}", fmt_num(t), fmt_num(x), fmt_num(m)),
                v.excess,
                0.0,
                false,
            ));
        }
    }
    if wants(Suite::Fd) || wants(Suite::Mc) {
        let grid = Grid2D::over(&p, 400, 4.0, 401)?;
        let nodes = grid.sample_nodes(points.unwrap_or(20), 1.0, seed);
        let fd = if wants(Suite::Fd) { Some(fd_solve_g(&p, &grid)?) } else { None };
        let fk = FkDriftDiscount::new(&p)?;
        for (k, &(i, j)) in nodes.iter().enumerate() {
            let (t, m) = (grid.t(i), grid.m(j));
            let g = exact.g(t, m)?.g;
            if let Some(fd) = &fd {
                let rel = (fd.at(i, j) - g).abs() / g;
                rows.push(CheckRow::new("fd_relative", point(t, m), rel, 1e-4, rel <= 1e-4));
            }
            if wants(Suite::Mc) {
                let est = mc_g(&fk, t, m, paths, dt, seed.wrapping_add(k as u64));
                let z = (est.estimate - g).abs() / est.std_error;
                rows.push(CheckRow::new("mc_standard_errors", point(t, m), z, 3.0, z <= 3.0));
            }
        }
    }
    let body: String = rows.iter().map(|r| r.to_csv() + "\n").collect();
    emit(cli, &ctx, &[], CheckRow::HEADER, &body)?;
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    cli: &Cli,
    what: Target,
    measure: MeasureArg,
    n_paths: usize,
    dt: f64,
    x0: f64,
    record_every: usize,
    ell: Option<f64>,
) -> Result<ExitCode, CliError> {
    let ctx = load(cli, None)?;
    let p = *ctx.params();
    let measure = match measure {
        MeasureArg::P => Measure::P,
        MeasureArg::Qxi => Measure::QXi,
        MeasureArg::Fk => Measure::FkTilde,
    };
    let spec = SimSpec::new(dt, p.horizon.t0, p.horizon.t_end, ctx.cfg.seed)?.recording_every(record_every);
    let replay = vec![
        ("seed", ctx.cfg.seed.to_string()),
        ("dt", fmt_num(dt)),
        ("n_paths", n_paths.to_string()),
        ("measure", measure.name().to_string()),
    ];
    match what {
        Target::Surplus => {
            let mut body = String::new();
            for i in 0..n_paths as u64 {
                let s = simulate_surplus(&p, x0, &spec, i)?;
                for n in 0..s.times.len() {
                    let _ = writeln!(body, "{i},{}", csv_row(&[s.times[n], s.poisson[n], s.diffusion[n]]));
                }
            }
            emit(cli, &ctx, &replay, "path,t,poisson,diffusion", &body)?;
        }
        Target::Factor => {
            let solver = build_solver(&p, ctx.mode, ctx.w_mode())?;
            let table = RatioTable::build(solver.as_ref(), 41, 4.0, 81)?;
            let distortion = |t: f64, m: f64| table.distortion(t, m);
            let mut body = String::new();
            for i in 0..n_paths as u64 {
                let f = simulate_factor(&p, p.market.m0, measure, &distortion, &spec, i)?;
                for (t, m) in f.times.iter().zip(&f.m) {
                    let _ = writeln!(body, "{i},{}", csv_row(&[*t, *m]));
                }
            }
            emit(cli, &ctx, &replay, "path,t,m", &body)?;
        }
        Target::Wealth | Target::ConditionM => {
            let solver = build_solver(&p, ctx.mode, ctx.w_mode())?;
            let table = RatioTable::build(solver.as_ref(), 41, 4.0, 81)?;
            let strategy = |t: f64, x: f64, m: f64| table.controls(t, x, m);
            let distortion = |t: f64, m: f64| table.distortion(t, m);
            let paths = simulate_wealth_paths(&p, x0, p.market.m0, &strategy, measure, &distortion, &spec, n_paths)?;
            if what == Target::Wealth {
                let csv = paths_csv(&paths);
                let (header, body) = csv.split_once('\n').unwrap_or((&csv, ""));
                emit(cli, &ctx, &replay, header, body)?;
            } else {
                let ell = ell.unwrap_or(2.0 * p.gamma() - 1.0);
                let rep = empirical_condition_m(&paths, ell, p.k_bar, &p)?;
                let mut body = String::new();
                for n in 0..rep.times.len() {
                    let _ = writeln!(
                        body,
                        "{},{}",
                        csv_row(&[rep.times[n], rep.statistic[n], rep.k_bar_moment[n]]),
                        rep.alive[n]
                    );
                }
                let mut extra = replay;
                extra.push(("ell", fmt_num(ell)));
                extra.push(("max_statistic", fmt_num(rep.max)));
                emit(cli, &ctx, &extra, "t,statistic,k_bar_moment,alive", &body)?;
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
