//! Solutions of the form `g = exp(G(t) m^2 + L(t) m + H(t))`.
//!
//! Both the unit-EIS solution and the Campbell-Shiller approximation reduce
//! to the same semilinear equation for `y = ln g`:
//!
//! ```text
//! y_t + beta^2/2 (y_mm + y_m^2) + (drift0 - kappa m) y_m + Q y_m^2
//!     + S2 m^2 + S1 m + S0 - rho y = 0,   y(T, m) = 0
//! ```
//!
//! Matching powers of `m` gives a Riccati equation for `G` and linear
//! equations for `L` and `H`, integrated here in elapsed time `T - t`.

use crate::error::{Error, Result};
use crate::params::{derive_k_phi, premium_rate_term, ModelParams};
use crate::quadrature::{integrate, normal_expectation, Chebyshev, QuadratureConfig};
use crate::riccati::RiccatiProfile;
use crate::solution::{check_time, GJet, GValue, Solution};

/// Which closed form to use for the constant term `H`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HForm {
    /// Discounting at `exp(-rho (s - t))`, consistent with the equation.
    #[default]
    Consistent,
    /// The historical display: growth factor `exp(+delta (s - t))` in the
    /// integral and an affine factor `(exp(rho (T - t)) - 1)` whose divisor
    /// is `delta` for unit EIS and absent for the approximation.
    Historical,
}

/// Coefficients of the reduced equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogQuadCoeffs {
    /// Discount on `ln g`.
    pub rho: f64,
    /// Extra weight on `g_m^2 / g`.
    pub q: f64,
    pub s2: f64,
    pub s1: f64,
    pub s0: f64,
    pub kappa: f64,
    /// Constant part of the factor drift.
    pub drift0: f64,
    pub beta: f64,
}

impl LogQuadCoeffs {
    /// Riccati coefficients `(G1, G2, G3)` with `G' = G1 G^2 + G2 G + G3`.
    pub fn riccati(&self) -> (f64, f64, f64) {
        (
            -2.0 * (self.beta * self.beta + 2.0 * self.q),
            2.0 * self.kappa + self.rho,
            -self.s2,
        )
    }
}

fn factor_shift(params: &ModelParams) -> (f64, f64) {
    let gamma = params.gamma();
    let amb = params.ambiguity();
    let mk = &params.market;
    let shift = (1.0 - gamma - amb) * mk.beta * mk.rho1 / (amb + gamma);
    (mk.alpha - shift, shift * params.excess_return() / mk.sigma)
}

/// Reduced coefficients for the unit-EIS aggregator.
pub fn unit_eis_coeffs(params: &ModelParams) -> LogQuadCoeffs {
    let gamma = params.gamma();
    let amb = params.ambiguity();
    let total = amb + gamma;
    let mk = &params.market;
    let delta = params.preferences.delta;
    let (kappa, drift0) = factor_shift(params);
    let beta2 = mk.beta * mk.beta;
    LogQuadCoeffs {
        rho: delta,
        q: (1.0 - gamma - amb).powi(2) * beta2 * mk.rho1 * mk.rho1 / (2.0 * total * (1.0 - gamma))
            - amb * beta2 / (2.0 * (1.0 - gamma)),
        s2: (1.0 - gamma) / (2.0 * total),
        s1: (1.0 - gamma) * params.excess_return() / (total * mk.sigma),
        s0: (1.0 - gamma) * (mk.r + premium_rate_term(params) + delta * (delta.ln() - 1.0)),
        kappa,
        drift0,
        beta: mk.beta,
    }
}

/// Reduced coefficients for the Campbell-Shiller approximation at level `w`.
pub fn cs_coeffs(params: &ModelParams, k: f64, phi: f64, w: f64) -> LogQuadCoeffs {
    let gamma = params.gamma();
    let amb = params.ambiguity();
    let total = amb + gamma;
    let mk = &params.market;
    let delta = params.preferences.delta;
    let (kappa, drift0) = factor_shift(params);
    let beta2 = mk.beta * mk.beta;
    LogQuadCoeffs {
        rho: w,
        q: (1.0 - gamma - amb).powi(2) * k * beta2 * mk.rho1 * mk.rho1 / (2.0 * total * (1.0 - gamma))
            - amb * k * beta2 / (2.0 * (1.0 - gamma))
            + beta2 * (k - 1.0) / 2.0,
        s2: (1.0 - gamma) / (2.0 * k * total),
        s1: (1.0 - gamma) * params.excess_return() / (k * total * mk.sigma),
        s0: (1.0 - gamma) / k
            * (w * (1.0 - w.ln() + phi * delta.ln()) / (phi - 1.0) + mk.r - delta / (1.0 - 1.0 / phi)
                + premium_rate_term(params)),
        kappa,
        drift0,
        beta: mk.beta,
    }
}

/// `G`, `L`, `H` for one coefficient set, tabulated in elapsed time.
#[derive(Debug, Clone)]
pub struct LogQuadSolution {
    coeffs: LogQuadCoeffs,
    g_prof: RiccatiProfile,
    l_table: Chebyshev,
    h_table: Chebyshev,
    t_end: f64,
}

impl LogQuadSolution {
    pub fn new(coeffs: LogQuadCoeffs, t_end: f64, form: HForm, historical: HistoricalH, quad: &QuadratureConfig) -> Result<Self> {
        let (g1, g2, g3) = coeffs.riccati();
        let g_prof = RiccatiProfile::new(-g3, g2, g1)?;
        let span = t_end.max(1e-12);
        let mut failure = None;
        let mut record = |r: Result<f64>| match r {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        };
        let l_table = Chebyshev::fit(|tau| record(l_direct(&coeffs, &g_prof, tau, quad)), 0.0, span, 1e-13);
        let h_table = Chebyshev::fit(
            |tau| record(h_direct(&coeffs, &g_prof, &l_table, tau, form, historical, quad)),
            0.0,
            span,
            1e-13,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(LogQuadSolution {
            coeffs,
            g_prof,
            l_table,
            h_table,
            t_end,
        })
    }

    pub fn coeffs(&self) -> &LogQuadCoeffs {
        &self.coeffs
    }

    /// `(G, L, H)` at time `t`.
    pub fn glh(&self, t: f64) -> (f64, f64, f64) {
        let tau = self.t_end - t;
        if tau <= 0.0 {
            return (0.0, 0.0, 0.0);
        }
        (self.g_prof.value(tau), self.l_table.eval(tau), self.h_table.eval(tau))
    }

    /// `ln g` at `(t, m)`.
    pub fn log_g(&self, t: f64, m: f64) -> f64 {
        let (g, l, h) = self.glh(t);
        g * m * m + l * m + h
    }

    pub fn jet(&self, t: f64, m: f64) -> GJet {
        let (gq, l, h) = self.glh(t);
        let g = (gq * m * m + l * m + h).exp();
        let slope = 2.0 * gq * m + l;
        GJet {
            g,
            g_m: g * slope,
            g_mm: g * (slope * slope + 2.0 * gq),
        }
    }
}

/// `L` in elapsed time by quadrature of its integral representation.
fn l_direct(c: &LogQuadCoeffs, g_prof: &RiccatiProfile, tau: f64, quad: &QuadratureConfig) -> Result<f64> {
    if tau <= 0.0 || (c.s1 == 0.0 && c.drift0 == 0.0) {
        return Ok(0.0);
    }
    let (g1, _, _) = c.riccati();
    let total = g_prof.integral(tau);
    integrate(
        |u| {
            // u is elapsed time at s; the damping integrates G over [t, s].
            let gs = g_prof.value(u);
            let damp = (-(c.kappa + c.rho) * (tau - u) - g1 * (total - g_prof.integral(u))).exp();
            (2.0 * c.drift0 * gs + c.s1) * damp
        },
        0.0,
        tau,
        quad,
    )
}

/// `H` in elapsed time given a tabulated `L`.
fn h_direct(
    c: &LogQuadCoeffs,
    g_prof: &RiccatiProfile,
    l_table: &Chebyshev,
    tau: f64,
    form: HForm,
    historical: HistoricalH,
    quad: &QuadratureConfig,
) -> Result<f64> {
    if tau <= 0.0 {
        return Ok(0.0);
    }
    let beta2 = c.beta * c.beta;
    let source = |u: f64| {
        let l = l_table.eval(u);
        0.5 * (beta2 + 2.0 * c.q) * l * l + c.drift0 * l + beta2 * g_prof.value(u)
    };
    match form {
        HForm::Consistent => {
            let body = integrate(|u| source(u) * (-c.rho * (tau - u)).exp(), 0.0, tau, quad)?;
            let affine = if c.rho.abs() < 1e-12 {
                tau
            } else {
                -(-c.rho * tau).exp_m1() / c.rho
            };
            Ok(body + c.s0 * affine)
        }
        HForm::Historical => {
            let body = integrate(|u| source(u) * (historical.rate * (tau - u)).exp(), 0.0, tau, quad)?;
            Ok(body + c.s0 * (c.rho * tau).exp_m1() / historical.divisor)
        }
    }
}

/// Constants of the historical `H` display.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoricalH {
    /// Growth rate inside the integral.
    pub rate: f64,
    /// Divisor of the affine term.
    pub divisor: f64,
}

/// Unit-EIS solver: `v = x^(1-gamma) g / (1 - gamma)`, `c / x = delta`.
#[derive(Debug, Clone)]
pub struct UnitEisSolver {
    params: ModelParams,
    solution: LogQuadSolution,
}

impl UnitEisSolver {
    pub fn new(params: &ModelParams) -> Result<Self> {
        Self::with_form(params, HForm::Consistent, QuadratureConfig::default())
    }

    pub fn with_form(params: &ModelParams, form: HForm, quad: QuadratureConfig) -> Result<Self> {
        let coeffs = unit_eis_coeffs(params);
        let delta = params.preferences.delta;
        let historical = HistoricalH { rate: delta, divisor: delta };
        let solution = LogQuadSolution::new(coeffs, params.horizon.t_end, form, historical, &quad)?;
        Ok(UnitEisSolver {
            params: *params,
            solution,
        })
    }

    pub fn solution(&self) -> &LogQuadSolution {
        &self.solution
    }
}

impl Solution for UnitEisSolver {
    fn params(&self) -> &ModelParams {
        &self.params
    }

    fn exponent(&self) -> f64 {
        1.0
    }

    fn g(&self, t: f64, m: f64) -> Result<GValue> {
        let j = self.jet(t, m)?;
        Ok(GValue { g: j.g, g_m: j.g_m })
    }

    fn jet(&self, t: f64, m: f64) -> Result<GJet> {
        check_time(&self.params, t)?;
        Ok(self.solution.jet(t, m))
    }

    fn consumption_ratio(&self, _t: f64, _m: f64, _g: &GValue) -> f64 {
        self.params.preferences.delta
    }
}

/// How the steady-state consumption-wealth level `w` is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WMode {
    Fixed(f64),
    /// Damped iteration on `ln w = E[ln(c/x)(t0, m_inf)]` with `m_inf`
    /// stationary under the baseline measure.
    FixedPoint,
}

/// Settings of the fixed-point search for `w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointConfig {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub nodes: usize,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        FixedPointConfig {
            damping: 0.5,
            tol: 1e-10,
            max_iter: 200,
            nodes: 64,
        }
    }
}

/// Campbell-Shiller solver: `v = x^(1-gamma) g^k / (1 - gamma)`.
#[derive(Debug, Clone)]
pub struct CsSolver {
    params: ModelParams,
    k: f64,
    phi: f64,
    w: f64,
    iterations: usize,
    solution: LogQuadSolution,
}

impl CsSolver {
    pub fn new(params: &ModelParams, mode: WMode) -> Result<Self> {
        Self::with_options(params, mode, HForm::Consistent, &FixedPointConfig::default(), QuadratureConfig::default())
    }

    pub fn with_options(
        params: &ModelParams,
        mode: WMode,
        form: HForm,
        fp: &FixedPointConfig,
        quad: QuadratureConfig,
    ) -> Result<Self> {
        let (k, phi_derived) = derive_k_phi(params.gamma(), params.ambiguity(), params.market.rho1)?;
        let phi = params.preferences.phi_eis.unwrap_or(phi_derived);
        if (phi - 1.0).abs() <= 1e-9 {
            return Err(Error::UnitEisRequired { phi });
        }
        let build = |w: f64| -> Result<CsSolver> {
            let coeffs = cs_coeffs(params, k, phi, w);
            let historical = HistoricalH {
                rate: params.preferences.delta,
                divisor: 1.0,
            };
            let solution = LogQuadSolution::new(coeffs, params.horizon.t_end, form, historical, &quad)?;
            Ok(CsSolver {
                params: *params,
                k,
                phi,
                w,
                iterations: 0,
                solution,
            })
        };
        match mode {
            WMode::Fixed(w) => {
                if !(w > 0.0 && w.is_finite()) {
                    return Err(Error::InvalidParameter {
                        name: "cs_w",
                        reason: format!("w = {w} must be positive"),
                    });
                }
                build(w)
            }
            WMode::FixedPoint => {
                let mut w = params.preferences.delta;
                let mut last = f64::INFINITY;
                for it in 1..=fp.max_iter {
                    let s = build(w)?;
                    let target = s.mean_log_consumption(fp.nodes).exp();
                    let next = (1.0 - fp.damping) * w + fp.damping * target;
                    last = (next - w).abs();
                    if !next.is_finite() || next <= 0.0 {
                        break;
                    }
                    w = next;
                    if last < fp.tol {
                        let mut s = build(w)?;
                        s.iterations = it;
                        return Ok(s);
                    }
                }
                Err(Error::FixedPointDivergence {
                    iterations: fp.max_iter,
                    last_step: last,
                })
            }
        }
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn solution(&self) -> &LogQuadSolution {
        &self.solution
    }

    /// Exponent of `g` in `c / x = delta^phi g^e`.
    pub fn consumption_exponent(&self) -> f64 {
        self.k * (1.0 - self.phi) / (1.0 - self.params.gamma())
    }

    /// `E[ln(c/x)(t0, m_inf)]` with `m_inf ~ Normal(0, beta^2 / (2 alpha))`.
    pub fn mean_log_consumption(&self, nodes: usize) -> f64 {
        let mk = &self.params.market;
        let sd = (mk.beta * mk.beta / (2.0 * mk.alpha)).sqrt();
        let t0 = self.params.horizon.t0;
        let base = self.phi * self.params.preferences.delta.ln();
        let e = self.consumption_exponent();
        normal_expectation(|m| base + e * self.solution.log_g(t0, m), 0.0, sd, nodes)
    }
}

impl Solution for CsSolver {
    fn params(&self) -> &ModelParams {
        &self.params
    }

    fn exponent(&self) -> f64 {
        self.k
    }

    fn g(&self, t: f64, m: f64) -> Result<GValue> {
        let j = self.jet(t, m)?;
        Ok(GValue { g: j.g, g_m: j.g_m })
    }

    fn jet(&self, t: f64, m: f64) -> Result<GJet> {
        check_time(&self.params, t)?;
        Ok(self.solution.jet(t, m))
    }

    fn consumption_ratio(&self, _t: f64, _m: f64, g: &GValue) -> f64 {
        self.params.preferences.delta.powf(self.phi) * g.g.powf(self.consumption_exponent())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent `(L, H)` at `t` by RK4 on the coupled system for
    /// `(G, L, H)` in calendar time, integrated backward from zero.
    fn oracle_lh(p: &ModelParams, t: f64) -> (f64, f64) {
        let c = unit_eis_coeffs(p);
        let (g1, g2, g3) = c.riccati();
        let beta2 = c.beta * c.beta;
        let rhs = |y: [f64; 3]| {
            let [g, l, h] = y;
            [
                g1 * g * g + g2 * g + g3,
                (g1 * g + c.kappa + c.rho) * l - 2.0 * c.drift0 * g - c.s1,
                c.rho * h - beta2 * g - 0.5 * (beta2 + 2.0 * c.q) * l * l - c.drift0 * l - c.s0,
            ]
        };
        let n = 20_000;
        let step = -(p.horizon.t_end - t) / n as f64;
        let add = |y: [f64; 3], k: [f64; 3], f: f64| [y[0] + f * k[0], y[1] + f * k[1], y[2] + f * k[2]];
        let mut y = [0.0; 3];
        for _ in 0..n {
            let k1 = rhs(y);
            let k2 = rhs(add(y, k1, 0.5 * step));
            let k3 = rhs(add(y, k2, 0.5 * step));
            let k4 = rhs(add(y, k3, step));
            for i in 0..3 {
                y[i] += step / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        (y[1], y[2])
    }

    #[test]
    fn unit_eis_matches_ode_oracle() {
        let p = ModelParams::baseline();
        let s = UnitEisSolver::new(&p).unwrap();
        let (_, l, h) = s.solution().glh(0.5);
        let (lo, ho) = oracle_lh(&p, 0.5);
        assert!((l - lo).abs() < 1e-8, "{l} vs {lo}");
        assert!((h - ho).abs() < 1e-8, "{h} vs {ho}");
    }

    #[test]
    fn riccati_g_solves_its_equation() {
        let p = ModelParams::baseline();
        let s = UnitEisSolver::new(&p).unwrap();
        let (g1, g2, g3) = s.solution().coeffs().riccati();
        let step = 1e-4;
        for t in [0.5, 0.7, 0.95] {
            let g = |t: f64| s.solution().glh(t).0;
            let dg = (g(t + step) - g(t - step)) / (2.0 * step);
            let gv = g(t);
            assert!((dg - (g1 * gv * gv + g2 * gv + g3)).abs() < 1e-8);
        }
    }

    #[test]
    fn terminal_and_degenerate_cases() {
        let p = ModelParams::baseline();
        let s = UnitEisSolver::new(&p).unwrap();
        assert_eq!(s.solution().glh(1.0), (0.0, 0.0, 0.0));
        assert_eq!(s.g(1.0, 0.3).unwrap().g, 1.0);
        let mut flat = p;
        flat.market.a = flat.market.r;
        let s = UnitEisSolver::new(&flat).unwrap();
        assert_eq!(s.solution().glh(0.5).1, 0.0);
        let cs = CsSolver::new(&ModelParams::approximation_study(0.8), WMode::Fixed(0.05)).unwrap();
        assert_eq!(cs.g(1.0, -0.4).unwrap().g, 1.0);
    }

    #[test]
    fn unit_eis_consumption_is_delta() {
        let s = UnitEisSolver::new(&ModelParams::baseline()).unwrap();
        for (t, m) in [(0.5, 0.0), (0.8, 1.3), (0.99, -2.0)] {
            assert_eq!(s.strategy(t, 3.0, m).unwrap().c_ratio(), 0.08);
        }
    }

    #[test]
    fn cs_with_derived_k_has_no_quadratic_gradient_term() {
        let p = ModelParams::approximation_study(0.8);
        let (k, phi) = derive_k_phi(1.3, 0.0, -0.5).unwrap();
        assert!(cs_coeffs(&p, k, phi, 0.1).q.abs() < 1e-15);
    }

    #[test]
    fn fixed_w_is_used_verbatim() {
        let s = CsSolver::new(&ModelParams::approximation_study(0.8), WMode::Fixed(0.08)).unwrap();
        assert_eq!(s.w(), 0.08);
    }

    #[test]
    fn fixed_point_is_self_consistent() {
        let s = CsSolver::new(&ModelParams::approximation_study(0.8), WMode::FixedPoint).unwrap();
        let w = s.w();
        assert!((s.mean_log_consumption(64).exp() - w).abs() < 1e-9);
        assert!((s.mean_log_consumption(128) - s.mean_log_consumption(64)).abs() < 1e-9);
    }

    #[test]
    fn zero_factor_noise_collapses_expectation() {
        let mut p = ModelParams::approximation_study(0.8);
        p.market.beta = 0.0;
        let s = CsSolver::new(&p, WMode::Fixed(0.1)).unwrap();
        let point = s.preferences_point();
        assert!((s.mean_log_consumption(64) - point).abs() < 1e-13);
    }

    impl CsSolver {
        fn preferences_point(&self) -> f64 {
            self.phi * self.params.preferences.delta.ln()
                + self.consumption_exponent() * self.solution.log_g(self.params.horizon.t0, 0.0)
        }
    }
}
