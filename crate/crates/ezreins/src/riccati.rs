//! Scalar Riccati equation `y' = source - linear y - quadratic y^2`, `y(0) = 0`.
//!
//! Solved in closed form in elapsed time `tau`, written with `exp(-D tau)`
//! only so that long horizons never overflow.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiccatiProfile {
    source: f64,
    linear: f64,
    quadratic: f64,
    root: f64,
}

/// `ln(1 + y) / y`, continuous at zero.
fn log1p_ratio(y: f64) -> f64 {
    if y.abs() < 1e-4 {
        1.0 - y / 2.0 + y * y / 3.0 - y * y * y / 4.0
    } else {
        y.ln_1p() / y
    }
}

impl RiccatiProfile {
    pub fn new(source: f64, linear: f64, quadratic: f64) -> Result<Self> {
        let radicand = linear * linear + 4.0 * quadratic * source;
        if radicand < 0.0 {
            return Err(Error::ComplexDiscriminant {
                what: "linear^2 + 4 quadratic source",
                value: radicand,
            });
        }
        Ok(RiccatiProfile {
            source,
            linear,
            quadratic,
            root: radicand.sqrt(),
        })
    }

    pub fn root(&self) -> f64 {
        self.root
    }

    /// `(1 - exp(-D tau)) / D`, equal to `tau` when `D = 0`.
    fn ramp(&self, tau: f64) -> f64 {
        if self.root * tau < 1e-300 {
            tau
        } else {
            -(-self.root * tau).exp_m1() / self.root
        }
    }

    /// Solution after elapsed time `tau >= 0`.
    pub fn value(&self, tau: f64) -> f64 {
        if tau <= 0.0 || self.source == 0.0 {
            return 0.0;
        }
        let r = self.ramp(tau);
        let decay = (-self.root * tau).exp();
        2.0 * self.source * r / (self.linear * r + 1.0 + decay)
    }

    /// Derivative of the solution in `tau`, from the equation itself.
    pub fn slope(&self, tau: f64) -> f64 {
        let y = self.value(tau);
        self.source - self.linear * y - self.quadratic * y * y
    }

    /// Limit as `tau` grows without bound, when the root is positive.
    pub fn limit(&self) -> f64 {
        2.0 * self.source / (self.linear + self.root)
    }

    /// `int_0^tau value(x) dx` in closed form.
    pub fn integral(&self, tau: f64) -> f64 {
        if tau <= 0.0 || self.source == 0.0 {
            return 0.0;
        }
        let p = self.linear + self.root;
        let q = self.linear - self.root;
        if p.abs() < 1e-12 * (1.0 + self.root) {
            // Finite-time blow-up branch or a vanishing root: integrate numerically.
            return crate::quadrature::integrate(
                |x| self.value(x),
                0.0,
                tau,
                &crate::quadrature::QuadratureConfig::default(),
            )
            .unwrap_or(f64::NAN);
        }
        let r = self.ramp(tau);
        2.0 * self.source / p * (tau - r * log1p_ratio(0.5 * q * r))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate, QuadratureConfig};

    fn rk4(p: &RiccatiProfile, tau: f64, steps: usize) -> f64 {
        let f = |y: f64| p.source - p.linear * y - p.quadratic * y * y;
        let h = tau / steps as f64;
        let mut y = 0.0;
        for _ in 0..steps {
            let k1 = f(y);
            let k2 = f(y + 0.5 * h * k1);
            let k3 = f(y + 0.5 * h * k2);
            let k4 = f(y + h * k3);
            y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        y
    }

    #[test]
    fn matches_rk4_for_several_sign_patterns() {
        for (b, l, q) in [
            (0.21875, 9.875, 0.125),
            (-0.05, 9.955, -0.547),
            (0.3, 0.0, 0.0),
            (0.2, 1.5, -0.3),
            (0.0, 3.0, 1.0),
        ] {
            let p = RiccatiProfile::new(b, l, q).unwrap();
            for tau in [0.0, 0.1, 0.5, 1.0, 3.0] {
                let exact = rk4(&p, tau, 20_000);
                assert!((p.value(tau) - exact).abs() < 1e-12, "({b},{l},{q}) tau={tau}");
            }
        }
    }

    #[test]
    fn integral_matches_quadrature() {
        let cfg = QuadratureConfig::default();
        for (b, l, q) in [(0.21875, 9.875, 0.125), (-0.05, 9.955, -0.547), (0.3, 0.0, 0.0), (0.2, 1e-9, 1e-7)] {
            let p = RiccatiProfile::new(b, l, q).unwrap();
            for tau in [1e-6, 0.3, 2.0] {
                let num = integrate(|x| p.value(x), 0.0, tau, &cfg).unwrap();
                assert!((p.integral(tau) - num).abs() < 1e-12, "({b},{l},{q}) tau={tau}");
            }
        }
    }

    #[test]
    fn long_horizon_is_finite_and_at_limit() {
        let p = RiccatiProfile::new(0.21875, 9.875, 0.125).unwrap();
        let v = p.value(1e4);
        assert!(v.is_finite());
        assert!((v - p.limit()).abs() < 1e-15);
    }

    #[test]
    fn complex_root_rejected() {
        assert!(RiccatiProfile::new(1.0, 0.1, -1.0).is_err());
    }
}
