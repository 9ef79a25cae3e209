//! Euler-Maruyama simulation of the factor, the insurer's wealth and the
//! surplus, plus the empirical admissibility statistics.
//!
//! Path `i` of a run seeded with `seed` always draws from ChaCha stream
//! `i`, so a run is replayable from `(seed, dt, n_paths)` alone and paths
//! under different measures share their Brownian increments.

use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma, StandardNormal};

use crate::config::{csv_row, fmt_num};
use crate::error::{Error, Result};
use crate::params::{ClaimDist, ModelParams};
use crate::quadrature::compensated_sum;
use crate::solution::{Solution, StrategyRatios};
use crate::verify::mc::{map_paths, path_rng};
use crate::verify::FkDriftDiscount;

/// Probability measure under which paths are generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    /// Reference measure.
    P,
    /// Worst-case measure induced by the distortion.
    QXi,
    /// Factor dynamics of the Feynman-Kac representation.
    FkTilde,
}

impl Measure {
    pub fn name(&self) -> &'static str {
        match self {
            Measure::P => "P",
            Measure::QXi => "Q_xi",
            Measure::FkTilde => "FK_tilde",
        }
    }

    pub fn parse(s: &str) -> Option<Measure> {
        match s {
            "P" | "p" => Some(Measure::P),
            "Q_xi" | "q" | "qxi" => Some(Measure::QXi),
            "FK_tilde" | "fk" => Some(Measure::FkTilde),
            _ => None,
        }
    }
}

/// Time step and horizon of a simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimSpec {
    pub dt: f64,
    pub start: f64,
    pub end: f64,
    pub seed: u64,
    /// Store every n-th step (the last step is always stored).
    pub record_every: usize,
}

impl SimSpec {
    pub fn new(dt: f64, start: f64, end: f64, seed: u64) -> Result<Self> {
        if !(dt > 0.0) || !(end > start) {
            return Err(Error::Precondition(format!("need dt > 0 and start < end (dt = {dt}, [{start}, {end}])")));
        }
        Ok(SimSpec {
            dt,
            start,
            end,
            seed,
            record_every: 1,
        })
    }

    pub fn recording_every(mut self, n: usize) -> Self {
        self.record_every = n.max(1);
        self
    }

    pub fn steps(&self) -> usize {
        ((self.end - self.start) / self.dt - 1e-9).ceil().max(1.0) as usize
    }

    fn step_len(&self) -> f64 {
        (self.end - self.start) / self.steps() as f64
    }

    fn records(&self, n: usize) -> bool {
        n.is_multiple_of(self.record_every) || n == self.steps()
    }
}

/// Brownian increments of one step, drawn in a fixed order.
fn shocks(rng: &mut impl Rng, root_dt: f64) -> [f64; 3] {
    let z1: f64 = rng.sample(StandardNormal);
    let z2: f64 = rng.sample(StandardNormal);
    let z3: f64 = rng.sample(StandardNormal);
    [z1 * root_dt, z2 * root_dt, z3 * root_dt]
}

fn factor_drift(p: &ModelParams, measure: Measure, fk: Option<&FkDriftDiscount>, m: f64, xi: [f64; 3]) -> f64 {
    let mk = &p.market;
    match measure {
        Measure::P => -mk.alpha * m,
        Measure::QXi => -(mk.alpha * m + mk.beta * mk.rho1 * xi[0] + mk.beta * (1.0 - mk.rho1 * mk.rho1).sqrt() * xi[1]),
        Measure::FkTilde => fk.map_or(f64::NAN, |f| f.h2(m)),
    }
}

fn factor_shock(p: &ModelParams, dw: [f64; 3]) -> f64 {
    let mk = &p.market;
    mk.beta * (mk.rho1 * dw[0] + (1.0 - mk.rho1 * mk.rho1).sqrt() * dw[1])
}

fn fk_for(p: &ModelParams, measure: Measure) -> Result<Option<FkDriftDiscount>> {
    match measure {
        Measure::FkTilde => Ok(Some(FkDriftDiscount::new(p)?)),
        _ => Ok(None),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorPath {
    pub times: Vec<f64>,
    pub m: Vec<f64>,
}

/// Simulates path `path` of the factor from `m0`.
pub fn simulate_factor(
    p: &ModelParams,
    m0: f64,
    measure: Measure,
    distortion: &(dyn Fn(f64, f64) -> [f64; 3] + Sync),
    spec: &SimSpec,
    path: u64,
) -> Result<FactorPath> {
    let fk = fk_for(p, measure)?;
    let mut rng = path_rng(spec.seed, path);
    let h = spec.step_len();
    let root = h.sqrt();
    let mut out = FactorPath {
        times: vec![spec.start],
        m: vec![m0],
    };
    let mut m = m0;
    for n in 1..=spec.steps() {
        let t = spec.start + (n - 1) as f64 * h;
        let dw = shocks(&mut rng, root);
        let xi = if measure == Measure::QXi { distortion(t, m) } else { [0.0; 3] };
        m += factor_drift(p, measure, fk.as_ref(), m, xi) * h + factor_shock(p, dw);
        if spec.records(n) {
            out.times.push(spec.start + n as f64 * h);
            out.m.push(m);
        }
    }
    Ok(out)
}

/// Terminal factor values of `n_paths` paths.
pub fn factor_terminals(
    p: &ModelParams,
    m0: f64,
    measure: Measure,
    distortion: &(dyn Fn(f64, f64) -> [f64; 3] + Sync),
    spec: &SimSpec,
    n_paths: usize,
) -> Result<Vec<f64>> {
    let thin = spec.recording_every(usize::MAX);
    map_paths(n_paths, |i| {
        simulate_factor(p, m0, measure, distortion, &thin, i).map(|f| *f.m.last().unwrap_or(&m0))
    })
    .into_iter()
    .collect()
}

/// Wealth-proportional strategy `(pi/x, q/x, c/x)` and distortion,
/// tabulated on a `(t, m)` grid from a solver and interpolated bilinearly.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioTable {
    t0: f64,
    t_end: f64,
    m_max: f64,
    n_t: usize,
    n_m: usize,
    /// Per node: `[pi, q, c, xi1, xi2, xi3]` ratios.
    nodes: Vec<[f64; 6]>,
}

impl RatioTable {
    pub fn build(sol: &dyn Solution, n_t: usize, m_max: f64, n_m: usize) -> Result<Self> {
        let h = sol.params().horizon;
        let (n_t, n_m) = (n_t.max(2), n_m.max(2));
        let rows = map_paths(n_t, |i| -> Result<Vec<[f64; 6]>> {
            let t = if i as usize + 1 == n_t {
                h.t_end
            } else {
                h.t0 + i as f64 * (h.t_end - h.t0) / (n_t - 1) as f64
            };
            (0..n_m)
                .map(|j| {
                    let m = -m_max + j as f64 * 2.0 * m_max / (n_m - 1) as f64;
                    let g = sol.g(t, m)?;
                    let r = StrategyRatios::new(sol.params(), sol.exponent(), m, g.log_slope());
                    let c = sol.consumption_ratio(t, m, &g);
                    Ok([r.pi, r.q, c, r.xi[0], r.xi[1], r.xi[2]])
                })
                .collect()
        });
        let mut nodes = Vec::with_capacity(n_t * n_m);
        for row in rows {
            nodes.extend(row?);
        }
        Ok(RatioTable {
            t0: h.t0,
            t_end: h.t_end,
            m_max,
            n_t,
            n_m,
            nodes,
        })
    }

    pub fn eval(&self, t: f64, m: f64) -> [f64; 6] {
        let u = ((t - self.t0) / (self.t_end - self.t0) * (self.n_t - 1) as f64).clamp(0.0, (self.n_t - 1) as f64);
        let v = ((m + self.m_max) / (2.0 * self.m_max) * (self.n_m - 1) as f64).clamp(0.0, (self.n_m - 1) as f64);
        let (i, j) = ((u as usize).min(self.n_t - 2), (v as usize).min(self.n_m - 2));
        let (fu, fv) = (u - i as f64, v - j as f64);
        let at = |a: usize, b: usize| &self.nodes[a * self.n_m + b];
        let mut out = [0.0; 6];
        for (k, o) in out.iter_mut().enumerate() {
            *o = (1.0 - fu) * ((1.0 - fv) * at(i, j)[k] + fv * at(i, j + 1)[k])
                + fu * ((1.0 - fv) * at(i + 1, j)[k] + fv * at(i + 1, j + 1)[k]);
        }
        out
    }

    /// `(pi, q, c)` at wealth `x`.
    pub fn controls(&self, t: f64, x: f64, m: f64) -> [f64; 3] {
        let r = self.eval(t, m);
        [r[0] * x, r[1] * x, r[2] * x]
    }

    pub fn distortion(&self, t: f64, m: f64) -> [f64; 3] {
        let r = self.eval(t, m);
        [r[3], r[4], r[5]]
    }
}

/// Simulated factor and wealth with the applied ratios.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBundle {
    pub measure: Measure,
    pub times: Vec<f64>,
    pub m: Vec<f64>,
    pub x: Vec<f64>,
    /// `(pi/x, q/x, c/x)` applied over the step starting at each time.
    pub ratios: Vec<[f64; 3]>,
    /// Time at which wealth first hit zero, if it did.
    pub truncated_at: Option<f64>,
}

/// Simulates path `path` of wealth from `x0` under `strategy`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_wealth(
    p: &ModelParams,
    x0: f64,
    m0: f64,
    strategy: &(dyn Fn(f64, f64, f64) -> [f64; 3] + Sync),
    measure: Measure,
    distortion: &(dyn Fn(f64, f64) -> [f64; 3] + Sync),
    spec: &SimSpec,
    path: u64,
) -> Result<PathBundle> {
    if !(x0 > 0.0) {
        return Err(Error::NonpositiveWealth(x0));
    }
    let fk = fk_for(p, measure)?;
    let mk = &p.market;
    let ins = &p.insurance;
    let claims = (ins.lambda * ins.mu2).sqrt();
    let mut rng = path_rng(spec.seed, path);
    let h = spec.step_len();
    let root = h.sqrt();
    let (mut x, mut m) = (x0, m0);
    let ratio = |t: f64, x: f64, m: f64| {
        let [pi, q, c] = strategy(t, x, m);
        [pi / x, q / x, c / x]
    };
    let mut out = PathBundle {
        measure,
        times: vec![spec.start],
        m: vec![m0],
        x: vec![x0],
        ratios: vec![ratio(spec.start, x0, m0)],
        truncated_at: None,
    };
    for n in 1..=spec.steps() {
        let t = spec.start + (n - 1) as f64 * h;
        let dw = shocks(&mut rng, root);
        let [pi, q, c] = strategy(t, x, m);
        let xi = if measure == Measure::QXi { distortion(t, m) } else { [0.0; 3] };
        let drift = mk.r * x + pi * (mk.sigma * m + mk.a - mk.r) + ins.lambda * ins.mu1 * ins.theta1 * q - c
            - pi * mk.sigma * xi[0]
            - q * claims * xi[2];
        x += drift * h + mk.sigma * pi * dw[0] + claims * q * dw[2];
        m += factor_drift(p, measure, fk.as_ref(), m, xi) * h + factor_shock(p, dw);
        let now = spec.start + n as f64 * h;
        if x <= 0.0 {
            out.times.push(now);
            out.m.push(m);
            out.x.push(x);
            out.ratios.push([f64::NAN; 3]);
            out.truncated_at = Some(now);
            break;
        }
        if spec.records(n) {
            out.times.push(now);
            out.m.push(m);
            out.x.push(x);
            out.ratios.push(ratio(now, x, m));
        }
    }
    Ok(out)
}

/// Runs `n_paths` wealth paths.
#[allow(clippy::too_many_arguments)]
pub fn simulate_wealth_paths(
    p: &ModelParams,
    x0: f64,
    m0: f64,
    strategy: &(dyn Fn(f64, f64, f64) -> [f64; 3] + Sync),
    measure: Measure,
    distortion: &(dyn Fn(f64, f64) -> [f64; 3] + Sync),
    spec: &SimSpec,
    n_paths: usize,
) -> Result<Vec<PathBundle>> {
    map_paths(n_paths, |i| simulate_wealth(p, x0, m0, strategy, measure, distortion, spec, i))
        .into_iter()
        .collect()
}

/// Header of [`paths_csv`].
pub const PATHS_HEADER: &str = "path,t,m,x,pi_ratio,q_ratio,c_ratio,truncated";

/// Stored paths as CSV rows (with header), in path order.
pub fn paths_csv(paths: &[PathBundle]) -> String {
    let mut out = String::from(PATHS_HEADER);
    out.push('\n');
    for (i, b) in paths.iter().enumerate() {
        let flag = b.truncated_at.map_or("0".to_string(), fmt_num);
        for n in 0..b.times.len() {
            let [pi, q, c] = b.ratios[n];
            out.push_str(&format!("{i},{},{flag}\n", csv_row(&[b.times[n], b.m[n], b.x[n], pi, q, c])));
        }
    }
    out
}

/// Compound Poisson surplus and its diffusion approximation on one mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct SurplusPath {
    pub times: Vec<f64>,
    pub jump_times: Vec<f64>,
    pub claims: Vec<f64>,
    pub poisson: Vec<f64>,
    pub diffusion: Vec<f64>,
}

fn draw_claim(dist: &ClaimDist, rng: &mut impl Rng) -> Result<f64> {
    let bad = |e: String| Error::InvalidParameter { name: "claim_dist", reason: e };
    Ok(match *dist {
        ClaimDist::Gamma { shape, scale } => Gamma::new(shape, scale).map_err(|e| bad(e.to_string()))?.sample(rng),
        ClaimDist::Exponential { mean } => Exp::new(1.0 / mean).map_err(|e| bad(e.to_string()))?.sample(rng),
        ClaimDist::Degenerate { size } => size,
    })
}

/// Simulates surplus path `path` from level `u0`. The jump part uses
/// stream `2 path`, the diffusion stream `2 path + 1`.
pub fn simulate_surplus(p: &ModelParams, u0: f64, spec: &SimSpec, path: u64) -> Result<SurplusPath> {
    let ins = &p.insurance;
    let arrivals = Exp::new(ins.lambda).map_err(|e| Error::InvalidParameter {
        name: "lambda",
        reason: e.to_string(),
    })?;
    let mut jump_rng = path_rng(spec.seed, 2 * path);
    let mut jump_times = Vec::new();
    let mut claims = Vec::new();
    let mut clock = spec.start;
    loop {
        clock += arrivals.sample(&mut jump_rng);
        if clock > spec.end {
            break;
        }
        jump_times.push(clock);
        claims.push(draw_claim(&ins.claim_dist, &mut jump_rng)?);
    }
    let mut diff_rng = path_rng(spec.seed, 2 * path + 1);
    let h = spec.step_len();
    let vol = (ins.lambda * ins.mu2).sqrt();
    let mut out = SurplusPath {
        times: vec![spec.start],
        poisson: vec![u0],
        diffusion: vec![u0],
        jump_times,
        claims,
    };
    let mut diffusion = u0;
    let mut paid = 0.0;
    let mut next_claim = 0;
    for n in 1..=spec.steps() {
        let z: f64 = diff_rng.sample(StandardNormal);
        diffusion += (ins.b - ins.lambda * ins.mu1) * h + vol * h.sqrt() * z;
        let now = spec.start + n as f64 * h;
        while next_claim < out.jump_times.len() && out.jump_times[next_claim] <= now {
            paid += out.claims[next_claim];
            next_claim += 1;
        }
        if spec.records(n) {
            out.times.push(now);
            out.poisson.push(u0 + ins.b * (now - spec.start) - paid);
            out.diffusion.push(diffusion);
        }
    }
    Ok(out)
}

/// Terminal aggregate claims `S_T` and terminal surpluses of both models.
pub struct SurplusTerminals {
    pub aggregate_claims: Vec<f64>,
    pub poisson: Vec<f64>,
    pub diffusion: Vec<f64>,
    pub no_claims: usize,
}

pub fn surplus_terminals(p: &ModelParams, u0: f64, spec: &SimSpec, n_paths: usize) -> Result<SurplusTerminals> {
    let thin = spec.recording_every(usize::MAX);
    let runs: Vec<Result<(f64, f64, f64, bool)>> = map_paths(n_paths, |i| {
        let s = simulate_surplus(p, u0, &thin, i)?;
        let claims = compensated_sum(s.claims.iter().copied());
        Ok((claims, *s.poisson.last().unwrap_or(&u0), *s.diffusion.last().unwrap_or(&u0), s.claims.is_empty()))
    });
    let mut out = SurplusTerminals {
        aggregate_claims: Vec::with_capacity(n_paths),
        poisson: Vec::with_capacity(n_paths),
        diffusion: Vec::with_capacity(n_paths),
        no_claims: 0,
    };
    for r in runs {
        let (s, up, ud, none) = r?;
        out.aggregate_claims.push(s);
        out.poisson.push(up);
        out.diffusion.push(ud);
        out.no_claims += none as usize;
    }
    Ok(out)
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

/// Sample mean and its standard error.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = compensated_sum(values.iter().copied()) / n;
    let var = compensated_sum(values.iter().map(|v| (v - mean) * (v - mean))) / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

/// Negative-moment statistic of wealth on the recorded mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionMReport {
    pub ell: f64,
    pub times: Vec<f64>,
    /// `E[X_t^-ell] (T - t)^ell` per recorded time.
    pub statistic: Vec<f64>,
    /// `E[X_t^(k_bar (1 - gamma))]` per recorded time.
    pub k_bar_moment: Vec<f64>,
    /// Paths still alive per recorded time.
    pub alive: Vec<usize>,
    pub max: f64,
}

/// Estimates the condition (M) statistic; no pass/fail threshold.
pub fn empirical_condition_m(paths: &[PathBundle], ell: f64, k_bar: f64, p: &ModelParams) -> Result<ConditionMReport> {
    let gamma = p.gamma();
    if !(ell > 2.0 * (gamma - 1.0)) {
        return Err(Error::Precondition(format!("ell = {ell} must exceed 2 (gamma - 1) = {}", 2.0 * (gamma - 1.0))));
    }
    let t_end = p.horizon.t_end;
    let times = paths.iter().map(|b| b.times.clone()).max_by_key(|t| t.len()).unwrap_or_default();
    let mut rep = ConditionMReport {
        ell,
        times: times.clone(),
        statistic: Vec::with_capacity(times.len()),
        k_bar_moment: Vec::with_capacity(times.len()),
        alive: Vec::with_capacity(times.len()),
        max: 0.0,
    };
    for (n, t) in times.iter().enumerate() {
        let xs: Vec<f64> = paths.iter().filter_map(|b| b.x.get(n).copied()).filter(|x| *x > 0.0).collect();
        let count = xs.len().max(1) as f64;
        let neg = compensated_sum(xs.iter().map(|x| x.powf(-ell))) / count;
        let stat = neg * (t_end - t).max(0.0).powf(ell);
        rep.max = rep.max.max(stat);
        rep.statistic.push(stat);
        rep.k_bar_moment.push(compensated_sum(xs.iter().map(|x| x.powf(k_bar * (1.0 - gamma)))) / count);
        rep.alive.push(xs.len());
    }
    Ok(rep)
}
