//! Parameter records and the structural coefficients derived from them.
//!
//! Defaults reproduce the baseline calibration used throughout the crate:
//! a market with an OU-driven drift, a Cramér-Lundberg insurer buying
//! proportional reinsurance, and an ambiguity-averse Epstein-Zin agent.

use std::fmt;

use crate::error::{Error, Result};

/// Claim-size law of the compound Poisson surplus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClaimDist {
    Gamma { shape: f64, scale: f64 },
    Exponential { mean: f64 },
    Degenerate { size: f64 },
}

impl ClaimDist {
    pub fn mean(&self) -> f64 {
        match *self {
            ClaimDist::Gamma { shape, scale } => shape * scale,
            ClaimDist::Exponential { mean } => mean,
            ClaimDist::Degenerate { size } => size,
        }
    }

    pub fn second_moment(&self) -> f64 {
        match *self {
            ClaimDist::Gamma { shape, scale } => shape * (shape + 1.0) * scale * scale,
            ClaimDist::Exponential { mean } => 2.0 * mean * mean,
            ClaimDist::Degenerate { size } => size * size,
        }
    }

    /// Parses `gamma(shape,scale)`, `exp(mean)` or `fixed(size)`.
    pub fn parse(text: &str) -> Option<ClaimDist> {
        let text = text.trim();
        let open = text.find('(')?;
        let close = text.rfind(')')?;
        if close != text.len() - 1 || close < open {
            return None;
        }
        let args: Vec<f64> = text[open + 1..close]
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .ok()?;
        let dist = match (&text[..open], args.as_slice()) {
            ("gamma", [shape, scale]) => ClaimDist::Gamma { shape: *shape, scale: *scale },
            ("exp", [mean]) => ClaimDist::Exponential { mean: *mean },
            ("fixed", [size]) => ClaimDist::Degenerate { size: *size },
            _ => return None,
        };
        let ok = match dist {
            ClaimDist::Gamma { shape, scale } => shape > 0.0 && scale > 0.0,
            ClaimDist::Exponential { mean } => mean > 0.0,
            ClaimDist::Degenerate { size } => size > 0.0,
        };
        ok.then_some(dist)
    }
}

impl fmt::Display for ClaimDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ClaimDist::Gamma { shape, scale } => write!(f, "gamma({shape},{scale})"),
            ClaimDist::Exponential { mean } => write!(f, "exp({mean})"),
            ClaimDist::Degenerate { size } => write!(f, "fixed({size})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketParams {
    pub r: f64,
    pub a: f64,
    pub sigma: f64,
    pub beta: f64,
    pub alpha: f64,
    pub rho1: f64,
    pub m0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InsuranceParams {
    /// Premium rate.
    pub b: f64,
    /// Reinsurer safety loading.
    pub theta1: f64,
    pub lambda: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub claim_dist: ClaimDist,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreferenceParams {
    /// Relative risk aversion.
    pub gamma: f64,
    /// Time preference rate.
    pub delta: f64,
    /// User-supplied elasticity of intertemporal substitution, if any.
    pub phi_eis: Option<f64>,
    /// Ambiguity aversion.
    pub ambiguity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Horizon {
    pub t0: f64,
    pub t_end: f64,
}

/// Full parameter record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub market: MarketParams,
    pub insurance: InsuranceParams,
    pub preferences: PreferenceParams,
    pub horizon: Horizon,
    /// Auxiliary exponent used by the admissibility conditions.
    pub k_bar: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            market: MarketParams {
                r: 0.02,
                a: 0.07,
                sigma: 0.2,
                beta: 0.25,
                alpha: 5.0,
                rho1: -0.5,
                m0: 0.0,
            },
            insurance: InsuranceParams {
                b: 1.1,
                theta1: 0.2,
                lambda: 1.0,
                mu1: 1.0,
                mu2: 1.25,
                claim_dist: ClaimDist::Gamma { shape: 4.0, scale: 0.25 },
            },
            preferences: PreferenceParams {
                gamma: 1.2,
                delta: 0.08,
                phi_eis: None,
                ambiguity: 0.8,
            },
            horizon: Horizon { t0: 0.5, t_end: 1.0 },
            k_bar: 2.1,
        }
    }
}

/// Every scalar configuration key, in echo order.
pub const SCALAR_KEYS: [&str; 19] = [
    "r", "a", "sigma", "beta", "alpha", "rho1", "m0", "b", "theta1", "lambda", "mu1", "mu2",
    "gamma", "delta", "phi_eis", "Phi", "t0", "T", "k_bar",
];

impl ModelParams {
    /// Baseline calibration.
    pub fn baseline() -> Self {
        Self::default()
    }

    /// Calibration of the approximation study: no ambiguity, stronger
    /// reversion and risk aversion, the requested risky volatility.
    pub fn approximation_study(sigma: f64) -> Self {
        let mut p = Self::default();
        p.preferences.gamma = 1.3;
        p.preferences.ambiguity = 0.0;
        p.market.alpha = 7.0;
        p.market.sigma = sigma;
        p
    }

    pub fn gamma(&self) -> f64 {
        self.preferences.gamma
    }

    pub fn ambiguity(&self) -> f64 {
        self.preferences.ambiguity
    }

    pub fn excess_return(&self) -> f64 {
        self.market.a - self.market.r
    }

    /// Scalar parameter lookup by configuration key.
    pub fn get(&self, key: &str) -> Option<f64> {
        let m = &self.market;
        let i = &self.insurance;
        let p = &self.preferences;
        Some(match key {
            "r" => m.r,
            "a" => m.a,
            "sigma" => m.sigma,
            "beta" => m.beta,
            "alpha" => m.alpha,
            "rho1" => m.rho1,
            "m0" => m.m0,
            "b" => i.b,
            "theta1" => i.theta1,
            "lambda" => i.lambda,
            "mu1" => i.mu1,
            "mu2" => i.mu2,
            "gamma" => p.gamma,
            "delta" => p.delta,
            "phi_eis" => p.phi_eis?,
            "Phi" => p.ambiguity,
            "t0" => self.horizon.t0,
            "T" => self.horizon.t_end,
            "k_bar" => self.k_bar,
            _ => return None,
        })
    }

    /// Scalar parameter update by configuration key.
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::InvalidParameter {
                name: "value",
                reason: format!("`{key}` must be finite"),
            });
        }
        let m = &mut self.market;
        let i = &mut self.insurance;
        let p = &mut self.preferences;
        match key {
            "r" => m.r = value,
            "a" => m.a = value,
            "sigma" => m.sigma = value,
            "beta" => m.beta = value,
            "alpha" => m.alpha = value,
            "rho1" => m.rho1 = value,
            "m0" => m.m0 = value,
            "b" => i.b = value,
            "theta1" => i.theta1 = value,
            "lambda" => i.lambda = value,
            "mu1" => i.mu1 = value,
            "mu2" => i.mu2 = value,
            "gamma" => p.gamma = value,
            "delta" => p.delta = value,
            "phi_eis" => p.phi_eis = Some(value),
            "Phi" => p.ambiguity = value,
            "t0" => self.horizon.t0 = value,
            "T" => self.horizon.t_end = value,
            "k_bar" => self.k_bar = value,
            _ => {
                return Err(Error::InvalidParameter {
                    name: "key",
                    reason: format!("unknown key `{key}`"),
                })
            }
        }
        Ok(())
    }
}

/// Exponent on g and the EIS that makes the linear reduction exact.
///
/// The pair satisfies `k (1 - phi) / (1 - gamma) = -1`.
pub fn derive_k_phi(gamma: f64, ambiguity: f64, rho1: f64) -> Result<(f64, f64)> {
    if gamma == 1.0 {
        return Err(Error::InvalidParameter {
            name: "gamma",
            reason: "gamma = 1 is excluded; use the unit-EIS solver".into(),
        });
    }
    let total = ambiguity + gamma;
    if total <= 1e-12 {
        return Err(Error::InvalidParameter {
            name: "Phi",
            reason: format!("Phi + gamma = {total} must be positive"),
        });
    }
    let hedge = (1.0 - gamma - ambiguity).powi(2) * rho1 * rho1 / total;
    let denominator = 1.0 - ambiguity / (1.0 - gamma) + hedge / (1.0 - gamma);
    if denominator.abs() <= 1e-14 {
        return Err(Error::DegenerateK { denominator });
    }
    let k = 1.0 / denominator;
    let phi = 2.0 - gamma - ambiguity + hedge;
    let identity = k * (1.0 - phi) / (1.0 - gamma) + 1.0;
    debug_assert!(
        identity.abs() <= 1e-12 * (1.0 + k.abs() * (1.0 - phi).abs() / (1.0 - gamma).abs()),
        "linearization identity off by {identity:e}"
    );
    Ok((k, phi))
}

/// Structural coefficients computed once per parameter set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedCoeffs {
    pub k: f64,
    pub phi: f64,
    /// Effective mean-reversion speed of the factor in the g equation.
    pub kappa: f64,
    /// `2 sqrt(kappa^2 + 2 beta^2 b0)`.
    pub discriminant: f64,
    /// Source of the quadratic coefficient's Riccati equation.
    pub b0: f64,
    /// Growth rate bounding the linear coefficient.
    pub b1: f64,
    pub a1: f64,
    pub a2: f64,
    /// `(1 - gamma - Phi) beta rho1 / (Phi + gamma)`: factor drift shift from hedging.
    pub hedge_drift: f64,
    /// Constant part of the discount rate in the linear g equation.
    pub base_rate: f64,
    /// Linear-in-m part of the discount rate.
    pub factor_rate: f64,
    /// Weight of g_m / g in the hedging demand.
    pub hedge_weight: f64,
}

impl DerivedCoeffs {
    /// Derives all coefficients with `phi` tied to `(gamma, Phi, rho1)`.
    pub fn new(params: &ModelParams) -> Result<Self> {
        let gamma = params.gamma();
        let ambiguity = params.ambiguity();
        let (k, phi) = derive_k_phi(gamma, ambiguity, params.market.rho1)?;
        Self::with_k_phi(params, k, phi)
    }

    pub(crate) fn with_k_phi(params: &ModelParams, k: f64, phi: f64) -> Result<Self> {
        let MarketParams {
            r,
            sigma,
            beta,
            alpha,
            rho1,
            ..
        } = params.market;
        let gamma = params.gamma();
        let ambiguity = params.ambiguity();
        let total = ambiguity + gamma;
        let excess = params.excess_return();
        let hedge_drift = (1.0 - gamma - ambiguity) * beta * rho1 / total;
        let kappa = alpha - hedge_drift;
        let b0 = -(1.0 - gamma) / (2.0 * k * total);
        let radicand = kappa * kappa + 2.0 * beta * beta * b0;
        if radicand < 0.0 {
            return Err(Error::ComplexDiscriminant {
                what: "kappa^2 + 2 beta^2 b0",
                value: radicand,
            });
        }
        let discriminant = 2.0 * radicand.sqrt();
        let factor_rate = (1.0 - gamma) * excess / (k * total * sigma);
        let hedge_weight = (1.0 - gamma - ambiguity) / (1.0 - gamma) * k * beta * rho1;
        let b1 = factor_rate * (2.0 * hedge_weight * 2.0 * b0 / (2.0 * kappa + discriminant) - 1.0);
        let a1 = -hedge_drift * excess / sigma * b1;
        let premium = premium_rate_term(params);
        let base_rate = (1.0 - gamma) / k * (r + premium - params.preferences.delta / (1.0 - 1.0 / phi));
        let a2 = base_rate - 2.0 * b0 * beta * beta / (2.0 * kappa + discriminant);
        Ok(DerivedCoeffs {
            k,
            phi,
            kappa,
            discriminant,
            b0,
            b1,
            a1,
            a2,
            hedge_drift,
            base_rate,
            factor_rate,
            hedge_weight,
        })
    }

    /// Long-horizon limit of the quadratic coefficient.
    pub fn c_limit(&self) -> f64 {
        2.0 * self.b0 / (2.0 * self.kappa + self.discriminant)
    }

    /// Discount rate of the linear g equation at factor level `m`.
    pub fn discount(&self, m: f64) -> f64 {
        self.base_rate + self.factor_rate * m - self.b0 * m * m
    }

    /// Factor drift of the linear g equation at level `m`.
    pub fn fk_drift(&self, params: &ModelParams, m: f64) -> f64 {
        -self.kappa * m + self.hedge_drift * params.excess_return() / params.market.sigma
    }
}

/// Squared Sharpe ratio and reinsurance terms shared by all equations:
/// `(a - r)^2 / (2 (Phi + gamma) sigma^2) + lambda theta1^2 mu1^2 / (2 (Phi + gamma) mu2)`.
pub(crate) fn premium_rate_term(params: &ModelParams) -> f64 {
    let total = params.ambiguity() + params.gamma();
    let sigma = params.market.sigma;
    let ins = &params.insurance;
    params.excess_return().powi(2) / (2.0 * total * sigma * sigma)
        + ins.lambda * ins.theta1.powi(2) * ins.mu1.powi(2) / (2.0 * total * ins.mu2)
}

/// Transformed wealth: surplus plus the present value of net premium income.
pub fn wealth_offset(surplus: f64, t: f64, params: &ModelParams) -> f64 {
    let ins = &params.insurance;
    let net = ins.b - (1.0 + ins.theta1) * ins.lambda * ins.mu1;
    let tau = params.horizon.t_end - t;
    let r = params.market.r;
    let annuity = if r.abs() < 1e-12 {
        tau
    } else {
        -(-r * tau).exp_m1() / r
    };
    surplus + net * annuity
}

/// Ambiguity scaling `Phi / ((1 - gamma) v)`.
pub fn psi_eval(v: f64, params: &ModelParams) -> Result<f64> {
    let scaled = (1.0 - params.gamma()) * v;
    if scaled <= 0.0 || !scaled.is_finite() {
        return Err(Error::NonadmissibleValueSign(v));
    }
    Ok(params.ambiguity() / scaled)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn k_phi_baseline() {
        let (k, phi) = derive_k_phi(1.2, 0.8, -0.5).unwrap();
        assert!(close(k, 8.0 / 35.0, 1e-14));
        assert!(close(phi, 0.125, 1e-14));
    }

    #[test]
    fn k_phi_no_ambiguity_no_correlation() {
        let (k, phi) = derive_k_phi(1.2, 0.0, 0.0).unwrap();
        assert_eq!(k, 1.0);
        assert_eq!(phi, 2.0 - 1.2);
    }

    #[test]
    fn k_phi_approximation_study() {
        let (k, phi) = derive_k_phi(1.3, 0.0, -0.5).unwrap();
        assert!(close(k, 1.0612245, 1e-7));
        assert!(close(phi, 0.7173077, 1e-7));
    }

    #[test]
    fn k_phi_rejects_unit_gamma() {
        assert!(derive_k_phi(1.0, 0.8, -0.5).is_err());
    }

    #[test]
    fn coefficients_baseline() {
        let d = DerivedCoeffs::new(&ModelParams::baseline()).unwrap();
        assert!(close(d.kappa, 4.9375, 1e-14));
        assert!(close(d.b0, 0.21875, 1e-14));
        assert!(close(d.discriminant, 9.880536422, 1e-8));
    }

    #[test]
    fn coefficients_degenerate_cases() {
        let mut p = ModelParams::baseline();
        p.market.rho1 = 0.0;
        assert_eq!(DerivedCoeffs::new(&p).unwrap().kappa, p.market.alpha);
        let mut p = ModelParams::baseline();
        p.market.beta = 0.0;
        let d = DerivedCoeffs::new(&p).unwrap();
        assert_eq!(d.discriminant, 2.0 * d.kappa);
    }

    #[test]
    fn wealth_offset_cases() {
        let p = ModelParams::baseline();
        assert_eq!(wealth_offset(5.0, 1.0, &p), 5.0);
        let p0 = {
            let mut p = ModelParams::baseline();
            p.horizon.t_end = 1.0;
            p
        };
        let expected = 5.0 - 0.1 * (1.0 - (-0.02f64).exp()) / 0.02;
        assert!(close(wealth_offset(5.0, 0.0, &p0), expected, 1e-13));
        let mut p = ModelParams::baseline();
        p.market.r = 0.0;
        assert!(close(wealth_offset(5.0, 0.5, &p), 5.0 - 0.1 * 0.5, 1e-14));
    }

    #[test]
    fn psi_cases() {
        let p = ModelParams::baseline();
        assert!(close(psi_eval(-5.0, &p).unwrap(), 0.8, 1e-14));
        assert!(psi_eval(5.0, &p).is_err());
        let mut p0 = p;
        p0.preferences.ambiguity = 0.0;
        assert_eq!(psi_eval(-3.0, &p0).unwrap(), 0.0);
    }

    #[test]
    fn claim_dist_parse_and_moments() {
        let d = ClaimDist::parse("gamma(4, 0.25)").unwrap();
        assert!(close(d.mean(), 1.0, 1e-15));
        assert!(close(d.second_moment(), 1.25, 1e-15));
        assert_eq!(ClaimDist::parse(&d.to_string()), Some(d));
        assert!(ClaimDist::parse("gamma(4)").is_none());
        assert!(ClaimDist::parse("weibull(1,2)").is_none());
    }

    #[test]
    fn key_roundtrip() {
        let mut p = ModelParams::baseline();
        for key in SCALAR_KEYS {
            p.set(key, 0.37).unwrap();
            assert_eq!(p.get(key), Some(0.37), "{key}");
        }
        assert!(p.set("nope", 1.0).is_err());
    }
}
