//! Evaluation contract shared by the three solvers and the strategy map
//! built on top of it.

use crate::error::{Error, Result};
use crate::params::ModelParams;

/// `g` and its factor derivative at one `(t, m)` point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GValue {
    pub g: f64,
    pub g_m: f64,
}

impl GValue {
    /// Log-derivative `g_m / g`, the only state input of the hedging terms.
    pub fn log_slope(&self) -> f64 {
        self.g_m / self.g
    }
}

/// `g` with first and second factor derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GJet {
    pub g: f64,
    pub g_m: f64,
    pub g_mm: f64,
}

/// Optimal controls and worst-case distortions at `(t, x, m)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategyPoint {
    pub t: f64,
    pub x: f64,
    pub m: f64,
    pub pi: f64,
    pub q: f64,
    pub c: f64,
    pub xi1: f64,
    pub xi2: f64,
    pub xi3: f64,
}

impl StrategyPoint {
    pub fn pi_ratio(&self) -> f64 {
        self.pi / self.x
    }
    pub fn q_ratio(&self) -> f64 {
        self.q / self.x
    }
    pub fn c_ratio(&self) -> f64 {
        self.c / self.x
    }
    pub fn distortion(&self) -> [f64; 3] {
        [self.xi1, self.xi2, self.xi3]
    }
}

/// A solution of the form `v = x^(1-gamma) g^k / (1 - gamma)`.
pub trait Solution: Sync {
    fn params(&self) -> &ModelParams;

    /// Exponent of `g` in the value function.
    fn exponent(&self) -> f64;

    fn g(&self, t: f64, m: f64) -> Result<GValue>;

    fn jet(&self, t: f64, m: f64) -> Result<GJet>;

    /// Consumption-wealth ratio implied by `g`.
    fn consumption_ratio(&self, t: f64, m: f64, g: &GValue) -> f64;

    fn value_function(&self, t: f64, x: f64, m: f64) -> Result<f64> {
        if x <= 0.0 || !x.is_finite() {
            return Err(Error::NonpositiveWealth(x));
        }
        let gamma = self.params().gamma();
        let g = self.g(t, m)?.g;
        Ok(x.powf(1.0 - gamma) * g.powf(self.exponent()) / (1.0 - gamma))
    }

    fn strategy(&self, t: f64, x: f64, m: f64) -> Result<StrategyPoint> {
        if x <= 0.0 || !x.is_finite() {
            return Err(Error::NonpositiveWealth(x));
        }
        check_time(self.params(), t)?;
        let g = self.g(t, m)?;
        let ratios = StrategyRatios::new(self.params(), self.exponent(), m, g.log_slope());
        let c_ratio = self.consumption_ratio(t, m, &g);
        Ok(ratios.at(t, x, m, c_ratio))
    }
}

pub(crate) fn check_time(params: &ModelParams, t: f64) -> Result<()> {
    let t_end = params.horizon.t_end;
    if !(t <= t_end) || t < 0.0 {
        return Err(Error::TimeOutOfRange { t, lo: 0.0, hi: t_end });
    }
    Ok(())
}

/// Wealth-free part of the strategy map, given the log-slope of `g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategyRatios {
    pub pi: f64,
    pub q: f64,
    pub xi: [f64; 3],
}

impl StrategyRatios {
    pub fn new(params: &ModelParams, k: f64, m: f64, log_slope: f64) -> Self {
        let gamma = params.gamma();
        let amb = params.ambiguity();
        let total = amb + gamma;
        let mk = &params.market;
        let ins = &params.insurance;
        let premium = mk.sigma * m + params.excess_return();
        let hedge = (1.0 - gamma - amb) / (1.0 - gamma) * k * mk.beta * mk.rho1;
        let pi = (premium + hedge * mk.sigma * log_slope) / (total * mk.sigma * mk.sigma);
        let q = ins.theta1 * ins.mu1 / (total * ins.mu2);
        let xi1 = amb * premium / (total * mk.sigma)
            + amb * k * mk.beta * mk.rho1 / (total * (1.0 - gamma)) * log_slope;
        let xi2 = amb / (1.0 - gamma) * k * mk.beta * (1.0 - mk.rho1 * mk.rho1).max(0.0).sqrt() * log_slope;
        let xi3 = amb * ins.theta1 * ins.mu1 * ins.lambda.sqrt() / (total * ins.mu2.sqrt());
        StrategyRatios {
            pi,
            q,
            xi: [xi1, xi2, xi3],
        }
    }

    pub fn at(&self, t: f64, x: f64, m: f64, c_ratio: f64) -> StrategyPoint {
        StrategyPoint {
            t,
            x,
            m,
            pi: self.pi * x,
            q: self.q * x,
            c: c_ratio * x,
            xi1: self.xi[0],
            xi2: self.xi[1],
            xi3: self.xi[2],
        }
    }
}
