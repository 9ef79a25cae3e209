//! Exact solution for non-unit EIS.
//!
//! The value function is `x^(1-gamma) g^k / (1 - gamma)` with
//! `g(t, m) = delta^phi int_t^T h(t, m; s) ds + h(t, m; T)` and
//! `h = exp(A - B m - C m^2)`. The coefficients depend on `s - t` only, so
//! they are tabulated once per parameter set as functions of elapsed time:
//! `C` in closed form, `B` as a Chebyshev interpolant of its integral
//! representation, and `A` from the antiderivative of that interpolant.

use crate::error::{Error, Result};
use crate::params::{DerivedCoeffs, ModelParams};
use crate::quadrature::{integrate, integrate_n, Chebyshev, QuadratureConfig};
use crate::riccati::RiccatiProfile;
use crate::solution::{check_time, GJet, GValue, Solution};

/// `(A, B, C)` at elapsed time `s - t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientTriple {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

/// Riccati profile of the quadratic coefficient.
pub fn c_profile(d: &DerivedCoeffs, beta: f64) -> Result<RiccatiProfile> {
    RiccatiProfile::new(d.b0, 2.0 * d.kappa, 2.0 * beta * beta)
}

/// Quadratic coefficient `C(t, s)`.
pub fn coeff_c(t: f64, s: f64, d: &DerivedCoeffs, beta: f64) -> Result<f64> {
    Ok(c_profile(d, beta)?.value(s - t))
}

/// Linear coefficient `B(t, s)` by direct quadrature.
pub fn coeff_b(t: f64, s: f64, params: &ModelParams, d: &DerivedCoeffs, quad: &QuadratureConfig) -> Result<f64> {
    let prof = c_profile(d, params.market.beta)?;
    b_direct(s - t, &prof, params, d, quad)
}

/// Constant term `A(t, s)` by direct (nested) quadrature.
pub fn coeff_a(t: f64, s: f64, params: &ModelParams, d: &DerivedCoeffs, quad: &QuadratureConfig) -> Result<f64> {
    let prof = c_profile(d, params.market.beta)?;
    let beta2 = params.market.beta.powi(2);
    let tilt = tilt(params, d);
    let mut failure = None;
    let body = integrate(
        |u| match b_direct(u, &prof, params, d, quad) {
            Ok(b) => 0.5 * beta2 * b * b - tilt * b,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        0.0,
        s - t,
        quad,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(body - beta2 * prof.integral(s - t) + d.base_rate * (s - t))
}

/// Coefficient of `B` in the `A` integrand: `(1-gamma-Phi) (a-r) beta rho1 / ((Phi+gamma) sigma)`.
fn tilt(params: &ModelParams, d: &DerivedCoeffs) -> f64 {
    d.hedge_drift * params.excess_return() / params.market.sigma
}

fn b_direct(tau: f64, prof: &RiccatiProfile, params: &ModelParams, d: &DerivedCoeffs, quad: &QuadratureConfig) -> Result<f64> {
    if tau <= 0.0 || d.factor_rate == 0.0 {
        return Ok(0.0);
    }
    let beta2 = params.market.beta.powi(2);
    let total = prof.integral(tau);
    let weight = 2.0 * d.hedge_weight;
    let inner = integrate(
        |x| {
            let rest = tau - x;
            let damp = (-d.kappa * x - 2.0 * beta2 * (total - prof.integral(rest))).exp();
            (weight * prof.value(rest) - 1.0) * damp
        },
        0.0,
        tau,
        quad,
    )?;
    Ok(d.factor_rate * inner)
}

/// Exact solver with coefficient interpolants cached for one parameter set.
#[derive(Debug, Clone)]
pub struct ExactSolver {
    params: ModelParams,
    coeffs: DerivedCoeffs,
    quad: QuadratureConfig,
    c_prof: RiccatiProfile,
    b_table: Chebyshev,
    a_body: Chebyshev,
    span: f64,
}

impl ExactSolver {
    pub fn new(params: &ModelParams) -> Result<Self> {
        Self::with_quadrature(params, QuadratureConfig::default())
    }

    pub fn with_quadrature(params: &ModelParams, quad: QuadratureConfig) -> Result<Self> {
        let coeffs = DerivedCoeffs::new(params)?;
        if (coeffs.phi - 1.0).abs() <= 1e-9 {
            return Err(Error::UnitEisRequired { phi: coeffs.phi });
        }
        let c_prof = c_profile(&coeffs, params.market.beta)?;
        let span = params.horizon.t_end.max(1e-12);
        let mut failure = None;
        let b_table = Chebyshev::fit(
            |tau| match b_direct(tau, &c_prof, params, &coeffs, &quad) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            },
            0.0,
            span,
            1e-13,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        let beta2 = params.market.beta.powi(2);
        let tilt = tilt(params, &coeffs);
        let a_body = Chebyshev::fit(
            |tau| {
                let b = b_table.eval(tau);
                0.5 * beta2 * b * b - tilt * b
            },
            0.0,
            span,
            1e-13,
        )
        .antiderivative();
        Ok(ExactSolver {
            params: *params,
            coeffs,
            quad,
            c_prof,
            b_table,
            a_body,
            span,
        })
    }

    pub fn coeffs(&self) -> &DerivedCoeffs {
        &self.coeffs
    }

    pub fn quadrature(&self) -> &QuadratureConfig {
        &self.quad
    }

    /// `(A, B, C)` at elapsed time `tau = s - t`.
    pub fn triple(&self, tau: f64) -> CoefficientTriple {
        if tau <= 0.0 {
            return CoefficientTriple { a: 0.0, b: 0.0, c: 0.0 };
        }
        if tau > self.span {
            return self.triple_direct(tau).unwrap_or(CoefficientTriple {
                a: f64::NAN,
                b: f64::NAN,
                c: f64::NAN,
            });
        }
        let beta2 = self.params.market.beta.powi(2);
        CoefficientTriple {
            a: self.a_body.eval(tau) - beta2 * self.c_prof.integral(tau) + self.coeffs.base_rate * tau,
            b: self.b_table.eval(tau),
            c: self.c_prof.value(tau),
        }
    }

    /// `(A, B, C)` by direct quadrature without the cache.
    pub fn triple_direct(&self, tau: f64) -> Result<CoefficientTriple> {
        let d = &self.coeffs;
        Ok(CoefficientTriple {
            a: coeff_a(0.0, tau, &self.params, d, &self.quad)?,
            b: b_direct(tau, &self.c_prof, &self.params, d, &self.quad)?,
            c: self.c_prof.value(tau),
        })
    }

    /// `h(t, m; s)`.
    pub fn h(&self, t: f64, m: f64, s: f64) -> f64 {
        let CoefficientTriple { a, b, c } = self.triple(s - t);
        (a - b * m - c * m * m).exp()
    }

    fn integrate_h(&self, t: f64, m: f64) -> Result<[f64; 3]> {
        let tau_max = self.params.horizon.t_end - t;
        let weight = self.params.preferences.delta.powf(self.coeffs.phi);
        let jet = |tau: f64| {
            let CoefficientTriple { a, b, c } = self.triple(tau);
            let h = (a - b * m - c * m * m).exp();
            let slope = -b - 2.0 * c * m;
            [h, h * slope, h * (slope * slope - 2.0 * c)]
        };
        let body = integrate_n(jet, 0.0, tau_max, &self.quad)?;
        let end = jet(tau_max);
        Ok([
            weight * body[0] + end[0],
            weight * body[1] + end[1],
            weight * body[2] + end[2],
        ])
    }
}

impl Solution for ExactSolver {
    fn params(&self) -> &ModelParams {
        &self.params
    }

    fn exponent(&self) -> f64 {
        self.coeffs.k
    }

    fn g(&self, t: f64, m: f64) -> Result<GValue> {
        let j = self.jet(t, m)?;
        Ok(GValue { g: j.g, g_m: j.g_m })
    }

    fn jet(&self, t: f64, m: f64) -> Result<GJet> {
        check_time(&self.params, t)?;
        let [g, g_m, g_mm] = self.integrate_h(t, m)?;
        Ok(GJet { g, g_m, g_mm })
    }

    fn consumption_ratio(&self, _t: f64, _m: f64, g: &GValue) -> f64 {
        self.params.preferences.delta.powf(self.coeffs.phi) / g.g
    }
}
