//! Independent numerical checks of the closed forms.
//!
//! Every oracle here is written from the equations themselves rather than
//! from the solver internals: the finite-difference solver and the Monte
//! Carlo estimator only see the drift and discount of the linear g
//! equation, the residuals spell each equation out term by term, and the
//! saddle check evaluates the raw HJBI integrand.

pub mod fd;
pub mod mc;
pub mod residual;
pub mod saddle;

use crate::error::Result;
use crate::params::{derive_k_phi, ModelParams};

pub use fd::{fd_solve_g, Boundary, FdSolution, Grid2D};
pub use mc::{mc_feynman_kac, mc_g, McEstimate};
pub use residual::{pde_residual, Equation, ResidualReport};
pub use saddle::{hjbi_saddle_check, Aggregator, SaddleConfig, SaddleReport};

/// Discount `H1(m)`, drift `H2(m)` and source of the linear g equation
/// `g_t + source + H1 g + H2 g_m + beta^2/2 g_mm = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FkDriftDiscount {
    params: ModelParams,
    k: f64,
    phi: f64,
}

impl FkDriftDiscount {
    pub fn new(params: &ModelParams) -> Result<Self> {
        let (k, phi) = derive_k_phi(params.gamma(), params.ambiguity(), params.market.rho1)?;
        Ok(FkDriftDiscount {
            params: *params,
            k,
            phi,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// `(1-gamma)/k [ (sigma m + a - r)^2 / (2 (Phi+gamma) sigma^2) + reinsurance + r - delta / (1 - 1/phi) ]`.
    pub fn h1(&self, m: f64) -> f64 {
        let p = &self.params;
        let total = p.ambiguity() + p.gamma();
        let mk = &p.market;
        let ins = &p.insurance;
        let premium = mk.sigma * m + p.excess_return();
        (1.0 - p.gamma()) / self.k
            * (premium * premium / (2.0 * total * mk.sigma * mk.sigma)
                + ins.lambda * ins.theta1 * ins.theta1 * ins.mu1 * ins.mu1 / (2.0 * total * ins.mu2)
                + mk.r
                - p.preferences.delta / (1.0 - 1.0 / self.phi))
    }

    /// `(1-gamma-Phi) beta rho1 (sigma m + a - r) / ((Phi+gamma) sigma) - alpha m`.
    pub fn h2(&self, m: f64) -> f64 {
        let p = &self.params;
        let mk = &p.market;
        (1.0 - p.gamma() - p.ambiguity()) * mk.beta * mk.rho1 * (mk.sigma * m + p.excess_return())
            / ((p.ambiguity() + p.gamma()) * mk.sigma)
            - mk.alpha * m
    }

    /// Consumption source `delta^phi`.
    pub fn source(&self) -> f64 {
        self.params.preferences.delta.powf(self.phi)
    }

    pub fn beta(&self) -> f64 {
        self.params.market.beta
    }
}

/// One row of a verification report.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub check: String,
    pub point: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckRow {
    pub fn new(check: &str, point: String, value: f64, tolerance: f64, pass: bool) -> Self {
        CheckRow {
            check: check.to_string(),
            point,
            value,
            tolerance,
            pass,
        }
    }

    pub const HEADER: &'static str = "check,point,value,tolerance,pass";

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.check,
            self.point,
            crate::config::fmt_num(self.value),
            crate::config::fmt_num(self.tolerance),
            self.pass
        )
    }
}
