//! Solver dispatch, parameter sweeps and the investment comparison table.

use crate::error::{Error, Result};
use crate::exact::ExactSolver;
use crate::logquad::{CsSolver, UnitEisSolver, WMode};
use crate::params::ModelParams;
use crate::solution::{Solution, StrategyPoint};
use crate::validate::Mode;
use crate::verify::mc::map_paths;

/// Published `(sigma, pi_cs / x, pi_exact / x, error)` rows.
pub const PUBLISHED_TABLE2: [(f64, f64, f64, f64); 6] = [
    (0.80, 0.062880, 0.062702, 0.000178),
    (0.81, 0.061368, 0.061193, 0.000175),
    (0.82, 0.059911, 0.059737, 0.000173),
    (0.83, 0.058505, 0.058334, 0.000171),
    (0.84, 0.057150, 0.056980, 0.000169),
    (0.85, 0.055841, 0.055674, 0.000167),
];

/// Builds the solver for `mode`.
pub fn build_solver(params: &ModelParams, mode: Mode, w: WMode) -> Result<Box<dyn Solution + Send>> {
    Ok(match mode {
        Mode::Exact => Box::new(ExactSolver::new(params)?),
        Mode::UnitEis => Box::new(UnitEisSolver::new(params)?),
        Mode::CampbellShiller => Box::new(CsSolver::new(params, w)?),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Table2Row {
    pub sigma: f64,
    pub pi_cs: f64,
    pub pi_exact: f64,
    /// `pi_cs - pi_exact`, both per unit wealth.
    pub error: f64,
    /// Steady-state consumption level used by the approximation.
    pub w: f64,
}

/// Investment ratios of both solvers at `(t0, m)` for each volatility.
pub fn table2(base: &ModelParams, sigmas: &[f64], m: f64, w: WMode) -> Result<Vec<Table2Row>> {
    let rows = map_paths(sigmas.len(), |i| -> Result<Table2Row> {
        let sigma = sigmas[i as usize];
        let mut p = *base;
        p.market.sigma = sigma;
        let t = p.horizon.t0;
        let exact = ExactSolver::new(&p)?.strategy(t, 1.0, m)?;
        let cs = CsSolver::new(&p, w)?;
        let approx = cs.strategy(t, 1.0, m)?;
        Ok(Table2Row {
            sigma,
            pi_cs: approx.pi,
            pi_exact: exact.pi,
            error: approx.pi - exact.pi,
            w: cs.w(),
        })
    });
    rows.into_iter().collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub strategy: StrategyPoint,
}

/// Strategy at `(t, x, m)` as one parameter varies; rows keep input order.
#[allow(clippy::too_many_arguments)]
pub fn sweep(
    base: &ModelParams,
    mode: Mode,
    w: WMode,
    key: &str,
    values: &[f64],
    t: f64,
    x: f64,
    m: f64,
) -> Result<Vec<SweepPoint>> {
    if base.get(key).is_none() {
        return Err(Error::InvalidParameter {
            name: "sweep",
            reason: format!("unknown parameter `{key}`"),
        });
    }
    if values.is_empty() {
        return Err(Error::InvalidParameter {
            name: "sweep",
            reason: "no sweep values".into(),
        });
    }
    let rows = map_paths(values.len(), |i| -> Result<SweepPoint> {
        let value = values[i as usize];
        let mut p = *base;
        p.set(key, value)?;
        let strategy = build_solver(&p, mode, w)?.strategy(t, x, m)?;
        Ok(SweepPoint { value, strategy })
    });
    rows.into_iter().collect()
}

/// `count` evenly spaced values on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        n => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_keeps_order_and_rejects_unknown_keys() {
        let p = ModelParams::baseline();
        let values = linspace(0.15, 0.4, 4);
        let rows = sweep(&p, Mode::Exact, WMode::FixedPoint, "theta1", &values, 0.5, 1.0, 0.0).unwrap();
        assert_eq!(rows.iter().map(|r| r.value).collect::<Vec<_>>(), values);
        assert!(sweep(&p, Mode::Exact, WMode::FixedPoint, "nope", &values, 0.5, 1.0, 0.0).is_err());
        assert!(sweep(&p, Mode::Exact, WMode::FixedPoint, "theta1", &[], 0.5, 1.0, 0.0).is_err());
    }

    #[test]
    fn table_rows_are_consistent() {
        let rows = table2(&ModelParams::approximation_study(0.8), &[0.8], 0.0, WMode::FixedPoint).unwrap();
        let r = rows[0];
        assert_eq!(r.error, r.pi_cs - r.pi_exact);
        assert!(r.w > 0.0);
    }

    #[test]
    fn linspace_endpoints() {
        assert_eq!(linspace(1.0, 2.0, 3), vec![1.0, 1.5, 2.0]);
        assert_eq!(linspace(1.0, 2.0, 1), vec![1.0]);
    }
}
