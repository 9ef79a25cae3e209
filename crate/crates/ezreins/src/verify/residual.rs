//! Central-difference residuals of the governing equations, each written
//! out term by term.

use crate::error::Result;
use crate::params::{derive_k_phi, ModelParams};

use super::fd::Grid2D;

/// Equation against which a candidate `g` is tested.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Equation {
    /// Linear g equation with the consumption source.
    LinearG,
    /// Nonlinear non-unit-EIS equation before linearization.
    NonUnitEis,
    /// Log-linearized equation around consumption level `w`; `phi` as used
    /// by the approximation.
    CampbellShiller { w: f64, phi: f64 },
    /// Unit-EIS equation.
    UnitEis,
}

impl Equation {
    pub fn name(&self) -> &'static str {
        match self {
            Equation::LinearG => "linear_g",
            Equation::NonUnitEis => "non_unit_eis",
            Equation::CampbellShiller { .. } => "campbell_shiller",
            Equation::UnitEis => "unit_eis",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualReport {
    /// Largest `|R| / max(|g|, 1)` over the grid.
    pub max: f64,
    pub at: (f64, f64),
    pub points: usize,
}

/// Finite-difference step in `t` and `m`.
const STEP: f64 = 1e-3;

struct Terms {
    gamma: f64,
    amb: f64,
    total: f64,
    beta: f64,
    k: f64,
    phi: f64,
    delta: f64,
}

impl Terms {
    fn new(params: &ModelParams, phi_override: Option<f64>) -> Result<Terms> {
        let (k, phi) = derive_k_phi(params.gamma(), params.ambiguity(), params.market.rho1)?;
        Ok(Terms {
            gamma: params.gamma(),
            amb: params.ambiguity(),
            total: params.ambiguity() + params.gamma(),
            beta: params.market.beta,
            k,
            phi: phi_override.unwrap_or(phi),
            delta: params.preferences.delta,
        })
    }

    /// `(sigma m + a - r)^2 / (2 (Phi+gamma) sigma^2) + lambda theta1^2 mu1^2 / (2 (Phi+gamma) mu2) + r`.
    fn market_rate(&self, p: &ModelParams, m: f64) -> f64 {
        let mk = &p.market;
        let ins = &p.insurance;
        let premium = mk.sigma * m + mk.a - mk.r;
        premium * premium / (2.0 * self.total * mk.sigma * mk.sigma)
            + ins.lambda * ins.theta1 * ins.theta1 * ins.mu1 * ins.mu1 / (2.0 * self.total * ins.mu2)
            + mk.r
    }

    fn drift(&self, p: &ModelParams, m: f64) -> f64 {
        let mk = &p.market;
        (1.0 - self.gamma - self.amb) / (self.total * mk.sigma) * (mk.sigma * m + mk.a - mk.r) * mk.beta * mk.rho1
            - mk.alpha * m
    }

    /// Weight of `g_m^2 / g` for exponent `k` on g.
    fn gradient_weight(&self, p: &ModelParams, k: f64) -> f64 {
        let b2 = self.beta * self.beta;
        let rho1 = p.market.rho1;
        (1.0 - self.gamma - self.amb).powi(2) / (2.0 * self.total * (1.0 - self.gamma)) * k * b2 * rho1 * rho1
            - self.amb * k * b2 / (2.0 * (1.0 - self.gamma))
            + b2 * (k - 1.0) / 2.0
    }
}

/// Largest normalized residual of `equation` for `g` over the grid.
///
/// Rows at the terminal time report the terminal-condition residual
/// `|g(T, m) - 1|`.
pub fn pde_residual(
    g: &(dyn Fn(f64, f64) -> f64 + Sync),
    params: &ModelParams,
    equation: Equation,
    grid: &Grid2D,
) -> Result<ResidualReport> {
    let phi_override = match equation {
        Equation::CampbellShiller { phi, .. } => Some(phi),
        _ => None,
    };
    let terms = Terms::new(params, phi_override)?;
    let mut report = ResidualReport {
        max: 0.0,
        at: (f64::NAN, f64::NAN),
        points: 0,
    };
    for (t, m) in grid.points() {
        let normalized = normalized_residual(g, params, &terms, equation, t, m);
        report.points += 1;
        if !(normalized <= report.max) {
            report.max = normalized;
            report.at = (t, m);
        }
    }
    Ok(report)
}

/// Normalized residual `|R| / max(|g|, 1)` at one point.
pub fn point_residual(
    g: &(dyn Fn(f64, f64) -> f64 + Sync),
    params: &ModelParams,
    equation: Equation,
    t: f64,
    m: f64,
) -> Result<f64> {
    let phi_override = match equation {
        Equation::CampbellShiller { phi, .. } => Some(phi),
        _ => None,
    };
    let terms = Terms::new(params, phi_override)?;
    Ok(normalized_residual(g, params, &terms, equation, t, m))
}

fn normalized_residual(
    g: &(dyn Fn(f64, f64) -> f64 + Sync),
    params: &ModelParams,
    terms: &Terms,
    equation: Equation,
    t: f64,
    m: f64,
) -> f64 {
    let t_end = params.horizon.t_end;
    let gv = g(t, m);
    let r = if t >= t_end {
        gv - 1.0
    } else {
        let h = STEP;
        let g_t = if t + h <= t_end {
            (g(t + h, m) - g(t - h, m)) / (2.0 * h)
        } else {
            (3.0 * gv - 4.0 * g(t - h, m) + g(t - 2.0 * h, m)) / (2.0 * h)
        };
        let up = g(t, m + h);
        let dn = g(t, m - h);
        let g_m = (up - dn) / (2.0 * h);
        let g_mm = (up - 2.0 * gv + dn) / (h * h);
        operator(params, terms, equation, m, gv, g_t, g_m, g_mm)
    };
    r.abs() / gv.abs().max(1.0)
}

#[allow(clippy::too_many_arguments)]
fn operator(
    p: &ModelParams,
    s: &Terms,
    equation: Equation,
    m: f64,
    g: f64,
    g_t: f64,
    g_m: f64,
    g_mm: f64,
) -> f64 {
    let transport = g_t + 0.5 * s.beta * s.beta * g_mm + s.drift(p, m) * g_m;
    let rate = s.market_rate(p, m);
    match equation {
        Equation::LinearG => {
            let discount = (1.0 - s.gamma) / s.k * (rate - s.delta / (1.0 - 1.0 / s.phi));
            transport + s.delta.powf(s.phi) + discount * g
        }
        Equation::NonUnitEis => {
            let power = s.k * (1.0 - s.phi) / (1.0 - s.gamma) + 1.0;
            let consumption = (1.0 - s.gamma) / s.k * (1.0 / (1.0 - 1.0 / s.phi) - 1.0) * s.delta.powf(s.phi) * g.powf(power);
            let discount = (1.0 - s.gamma) / s.k * (rate - s.delta / (1.0 - 1.0 / s.phi));
            transport + consumption + discount * g + s.gradient_weight(p, s.k) * g_m * g_m / g
        }
        Equation::CampbellShiller { w, .. } => {
            let e = s.k * (1.0 - s.phi) / (1.0 - s.gamma);
            let linearized = (1.0 - s.gamma) / (s.k * (s.phi - 1.0))
                * w
                * (1.0 - w.ln() + s.phi * s.delta.ln() + e * g.ln())
                * g;
            let discount = (1.0 - s.gamma) / s.k * (rate - s.delta / (1.0 - 1.0 / s.phi));
            transport + linearized + discount * g + s.gradient_weight(p, s.k) * g_m * g_m / g
        }
        Equation::UnitEis => {
            let discount = (1.0 - s.gamma) * (rate + s.delta * (s.delta.ln() - 1.0));
            let b2 = s.beta * s.beta;
            let rho1 = p.market.rho1;
            let weight = (1.0 - s.gamma - s.amb).powi(2) * b2 * rho1 * rho1 / (2.0 * s.total * (1.0 - s.gamma))
                - s.amb * b2 / (2.0 * (1.0 - s.gamma));
            transport + discount * g - s.delta * g * g.ln() + weight * g_m * g_m / g
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn terminal_row_of_constant_one_is_zero() {
        let p = ModelParams::baseline();
        let one = |_t: f64, _m: f64| 1.0;
        for m in [-2.0, 0.0, 0.7] {
            assert_eq!(point_residual(&one, &p, Equation::LinearG, 1.0, m).unwrap(), 0.0);
        }
        // Away from the terminal row the source term makes it nonzero.
        assert!(point_residual(&one, &p, Equation::LinearG, 0.5, 0.0).unwrap() > 1e-3);
    }
}
