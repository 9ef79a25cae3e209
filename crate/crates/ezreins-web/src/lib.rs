//! Browser bindings for three interactive views: strategy profiles across
//! the factor, a one-parameter sweep, and a simulated wealth path.
//!
//! Parameters arrive as `key=value` pairs separated by `;` or newlines,
//! using the same keys as configuration files. Results are flat `f64`
//! arrays, one record after another, so the page can plot them directly.

use ezreins::config::Config;
use ezreins::sim::{simulate_wealth, Measure, RatioTable, SimSpec};
use ezreins::studies::{build_solver, linspace, sweep};
use ezreins::validate::Mode;
use ezreins::WMode;
use wasm_bindgen::prelude::*;

/// Record width of [`factor_profile`]: `m, pi/x, q/x, c/x, xi1`.
pub const PROFILE_WIDTH: usize = 5;
/// Record width of [`parameter_sweep`]: `value, pi/x, q/x, c/x`.
pub const SWEEP_WIDTH: usize = 4;
/// Record width of [`wealth_path`]: `t, x, m, pi/x`.
pub const PATH_WIDTH: usize = 4;

fn setup(overrides: &str, mode: &str) -> Result<(Config, Mode), String> {
    let mut cfg = Config::default();
    for pair in overrides.split([';', '\n']).map(str::trim).filter(|p| !p.is_empty()) {
        cfg.apply_override(pair).map_err(|e| e.to_string())?;
    }
    let mode = Mode::parse(mode).ok_or_else(|| format!("unknown mode `{mode}`"))?;
    let rep = cfg.validate(mode);
    if let Some(c) = rep.hard_failures().next() {
        return Err(format!("{}: {}", c.name, c.message));
    }
    Ok((cfg, mode))
}

fn w_mode(cfg: &Config) -> WMode {
    cfg.cs_w.map_or(WMode::FixedPoint, WMode::Fixed)
}

/// Strategy ratios at time `t` for `n` factor levels on `[m_lo, m_hi]`.
pub fn factor_profile(overrides: &str, mode: &str, t: f64, m_lo: f64, m_hi: f64, n: usize) -> Result<Vec<f64>, String> {
    let (cfg, mode) = setup(overrides, mode)?;
    let solver = build_solver(&cfg.params, mode, w_mode(&cfg)).map_err(|e| e.to_string())?;
    let mut out = Vec::with_capacity(n * PROFILE_WIDTH);
    for m in linspace(m_lo, m_hi, n) {
        let s = solver.strategy(t, 1.0, m).map_err(|e| e.to_string())?;
        out.extend([m, s.pi_ratio(), s.q_ratio(), s.c_ratio(), s.xi1]);
    }
    Ok(out)
}

/// Strategy ratios at `(t0, m0)` as `key` runs over `n` values on `[lo, hi]`.
pub fn parameter_sweep(overrides: &str, mode: &str, key: &str, lo: f64, hi: f64, n: usize) -> Result<Vec<f64>, String> {
    let (cfg, mode) = setup(overrides, mode)?;
    let p = cfg.params;
    let rows = sweep(&p, mode, w_mode(&cfg), key, &linspace(lo, hi, n), p.horizon.t0, 1.0, p.market.m0)
        .map_err(|e| e.to_string())?;
    Ok(rows
        .iter()
        .flat_map(|r| [r.value, r.strategy.pi_ratio(), r.strategy.q_ratio(), r.strategy.c_ratio()])
        .collect())
}

/// One wealth path from `x0` under the optimal strategy and the worst-case
/// measure, recorded every `record_every` steps of size `dt`.
pub fn wealth_path(overrides: &str, mode: &str, seed: u64, dt: f64, x0: f64, record_every: usize) -> Result<Vec<f64>, String> {
    let (cfg, mode) = setup(overrides, mode)?;
    let p = cfg.params;
    let solver = build_solver(&p, mode, w_mode(&cfg)).map_err(|e| e.to_string())?;
    let table = RatioTable::build(solver.as_ref(), 21, 3.0, 41).map_err(|e| e.to_string())?;
    let spec = SimSpec::new(dt, p.horizon.t0, p.horizon.t_end, seed)
        .map_err(|e| e.to_string())?
        .recording_every(record_every);
    let strategy = |t: f64, x: f64, m: f64| table.controls(t, x, m);
    let distortion = |t: f64, m: f64| table.distortion(t, m);
    let b = simulate_wealth(&p, x0, p.market.m0, &strategy, Measure::QXi, &distortion, &spec, 0)
        .map_err(|e| e.to_string())?;
    Ok((0..b.times.len())
        .flat_map(|n| [b.times[n], b.x[n], b.m[n], b.ratios[n][0]])
        .collect())
}

#[wasm_bindgen(js_name = factorProfile)]
pub fn factor_profile_js(overrides: &str, mode: &str, t: f64, m_lo: f64, m_hi: f64, n: usize) -> Result<Vec<f64>, JsError> {
    factor_profile(overrides, mode, t, m_lo, m_hi, n).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = parameterSweep)]
pub fn parameter_sweep_js(overrides: &str, mode: &str, key: &str, lo: f64, hi: f64, n: usize) -> Result<Vec<f64>, JsError> {
    parameter_sweep(overrides, mode, key, lo, hi, n).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = wealthPath)]
pub fn wealth_path_js(overrides: &str, mode: &str, seed: u64, dt: f64, x0: f64, record_every: usize) -> Result<Vec<f64>, JsError> {
    wealth_path(overrides, mode, seed, dt, x0, record_every).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_has_closed_form_reinsurance() {
        let v = factor_profile("", "exact", 0.5, -1.0, 1.0, 5).unwrap();
        assert_eq!(v.len(), 5 * PROFILE_WIDTH);
        assert!(v.chunks(PROFILE_WIDTH).all(|r| (r[2] - 0.08).abs() < 1e-15));
    }

    #[test]
    fn overrides_and_errors() {
        let a = parameter_sweep("Phi=0; sigma=0.3", "cs", "theta1", 0.15, 0.4, 3).unwrap();
        assert_eq!(a.len(), 3 * SWEEP_WIDTH);
        assert!(parameter_sweep("b=0.5", "exact", "alpha", 3.0, 7.0, 3).unwrap_err().contains("premium_loading"));
        assert!(factor_profile("", "nope", 0.5, -1.0, 1.0, 3).is_err());
        assert!(factor_profile("gamma=", "exact", 0.5, -1.0, 1.0, 3).is_err());
    }

    #[test]
    fn path_is_reproducible() {
        let a = wealth_path("", "exact", 3, 1e-3, 1.0, 10).unwrap();
        assert_eq!(a, wealth_path("", "exact", 3, 1e-3, 1.0, 10).unwrap());
        assert_eq!(a[0..2], [0.5, 1.0]);
        assert_eq!(a.len() % PATH_WIDTH, 0);
    }
}
