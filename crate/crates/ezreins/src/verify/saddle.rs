//! Saddle-point check of the HJBI integrand at the closed-form optimum.
//!
//! The integrand is concave in `(pi, q, c)` and convex in the distortion
//! `xi`; at the optimum it must vanish. Derivatives of `v` in `x` are
//! analytic, those in `m` come from the solver's jet, and `v_t` from a
//! central difference in time.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::params::ModelParams;
use crate::solution::{Solution, StrategyPoint};

/// Intertemporal aggregator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Aggregator {
    NonUnit { phi: f64 },
    Unit,
}

/// Value function and its partial derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueDerivs {
    pub v: f64,
    pub v_t: f64,
    pub v_x: f64,
    pub v_xx: f64,
    pub v_m: f64,
    pub v_mm: f64,
    pub v_xm: f64,
}

const TIME_STEP: f64 = 1e-4;

pub fn value_derivs(sol: &dyn Solution, t: f64, x: f64, m: f64) -> Result<ValueDerivs> {
    let gamma = sol.params().gamma();
    let k = sol.exponent();
    let t_end = sol.params().horizon.t_end;
    let jet = sol.jet(t, m)?;
    let g_at = |s: f64| sol.g(s, m).map(|v| v.g);
    let h = TIME_STEP;
    let g_t = if t + h <= t_end {
        (g_at(t + h)? - g_at(t - h)?) / (2.0 * h)
    } else {
        (3.0 * jet.g - 4.0 * g_at(t - h)? + g_at(t - 2.0 * h)?) / (2.0 * h)
    };
    let v = x.powf(1.0 - gamma) * jet.g.powf(k) / (1.0 - gamma);
    let slope = jet.g_m / jet.g;
    Ok(ValueDerivs {
        v,
        v_t: k * v * g_t / jet.g,
        v_x: (1.0 - gamma) * v / x,
        v_xx: -gamma * (1.0 - gamma) * v / (x * x),
        v_m: k * v * slope,
        v_mm: k * v * ((k - 1.0) * slope * slope + jet.g_mm / jet.g),
        v_xm: (1.0 - gamma) * k * v * slope / x,
    })
}

/// Controls `(pi, q, c)` and distortion `xi` entering the integrand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Play {
    pub pi: f64,
    pub q: f64,
    pub c: f64,
    pub xi: [f64; 3],
}

impl From<&StrategyPoint> for Play {
    fn from(s: &StrategyPoint) -> Self {
        Play {
            pi: s.pi,
            q: s.q,
            c: s.c,
            xi: s.distortion(),
        }
    }
}

/// The bracketed HJBI integrand.
pub fn hjbi_integrand(p: &ModelParams, agg: Aggregator, d: &ValueDerivs, x: f64, m: f64, play: &Play) -> f64 {
    let gamma = p.gamma();
    let amb = p.ambiguity();
    let mk = &p.market;
    let ins = &p.insurance;
    let delta = p.preferences.delta;
    let Play { pi, q, c, xi } = *play;
    let scaled = (1.0 - gamma) * d.v;
    let felicity = match agg {
        Aggregator::NonUnit { phi } => {
            let certainty = scaled.powf(1.0 / (1.0 - gamma));
            delta / (1.0 - 1.0 / phi) * scaled * ((c / certainty).powf(1.0 - 1.0 / phi) - 1.0)
        }
        Aggregator::Unit => delta * scaled * (c.ln() - scaled.ln() / (1.0 - gamma)),
    };
    let claims = (ins.lambda * ins.mu2).sqrt();
    let wealth_drift = mk.r * x + (mk.sigma * m + mk.a - mk.r) * pi + ins.lambda * ins.mu1 * ins.theta1 * q - c
        - mk.sigma * xi[0] * pi
        - claims * xi[2] * q;
    let factor_drift = -(mk.alpha * m + mk.beta * mk.rho1 * xi[0] + mk.beta * (1.0 - mk.rho1 * mk.rho1).max(0.0).sqrt() * xi[1]);
    let norm2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
    let penalty = if amb > 0.0 {
        scaled * norm2 / (2.0 * amb)
    } else if norm2 == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    felicity
        + d.v_t
        + d.v_x * wealth_drift
        + d.v_m * factor_drift
        + 0.5 * d.v_xx * (mk.sigma * mk.sigma * pi * pi + ins.lambda * ins.mu2 * q * q)
        + 0.5 * mk.beta * mk.beta * d.v_mm
        + d.v_xm * mk.sigma * mk.beta * mk.rho1 * pi
        + penalty
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddleConfig {
    pub points: usize,
    pub samples: usize,
    /// Perturbation size: absolute for `xi`, relative to `x` for `pi` and
    /// `q`, relative to `c` for consumption.
    pub radius: f64,
    pub seed: u64,
}

impl Default for SaddleConfig {
    fn default() -> Self {
        SaddleConfig {
            points: 100,
            samples: 20,
            radius: 0.05,
            seed: crate::config::DEFAULT_SEED,
        }
    }
}

/// One detected violation.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub point: (f64, f64, f64),
    pub kind: &'static str,
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaddleReport {
    pub points: usize,
    pub perturbations: usize,
    /// Largest `|integrand(optimum)| / (1 + |v|)`.
    pub max_optimum: f64,
    pub violations: Vec<Violation>,
    pub seed: u64,
}

/// Checks the saddle property at one point with `samples` perturbations.
pub fn check_point(
    sol: &dyn Solution,
    agg: Aggregator,
    point: (f64, f64, f64),
    radius: f64,
    samples: usize,
    rng: &mut impl Rng,
) -> Result<(f64, Vec<Violation>)> {
    let (t, x, m) = point;
    let p = sol.params();
    let d = value_derivs(sol, t, x, m)?;
    let best = Play::from(&sol.strategy(t, x, m)?);
    let at_best = hjbi_integrand(p, agg, &d, x, m, &best);
    let tol = 1e-6 * (1.0 + d.v.abs());
    let mut violations = Vec::new();
    if at_best.abs() > tol {
        violations.push(Violation {
            point,
            kind: "optimum_nonzero",
            excess: at_best.abs() - tol,
        });
    }
    for _ in 0..samples {
        let mut nature = best;
        for xi in &mut nature.xi {
            *xi += radius * rng.random_range(-1.0..=1.0);
        }
        let value = hjbi_integrand(p, agg, &d, x, m, &nature);
        if value < at_best - tol {
            violations.push(Violation {
                point,
                kind: "distortion_decreases",
                excess: at_best - tol - value,
            });
        }
        let mut insurer = best;
        insurer.pi += radius * x * rng.random_range(-1.0..=1.0);
        insurer.q = (insurer.q + radius * x * rng.random_range(-1.0..=1.0)).max(0.0);
        insurer.c *= 1.0 + radius * rng.random_range(-1.0..=1.0);
        let value = hjbi_integrand(p, agg, &d, x, m, &insurer);
        if value > at_best + tol {
            violations.push(Violation {
                point,
                kind: "control_increases",
                excess: value - at_best - tol,
            });
        }
    }
    Ok((at_best.abs() / (1.0 + d.v.abs()), violations))
}

/// Runs the check at random interior points `t in [t0, T - 0.05 (T - t0)]`,
/// `x in [0.5, 5]`, `m in [-1, 1]`.
pub fn hjbi_saddle_check(sol: &dyn Solution, agg: Aggregator, cfg: &SaddleConfig) -> Result<SaddleReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let h = &sol.params().horizon;
    let t_hi = h.t_end - 0.05 * (h.t_end - h.t0);
    let mut report = SaddleReport {
        points: cfg.points,
        perturbations: cfg.samples,
        max_optimum: 0.0,
        violations: Vec::new(),
        seed: cfg.seed,
    };
    for _ in 0..cfg.points {
        let point = (
            rng.random_range(h.t0..t_hi),
            rng.random_range(0.5..5.0),
            rng.random_range(-1.0..1.0),
        );
        let (opt, mut v) = check_point(sol, agg, point, cfg.radius, cfg.samples, &mut rng)?;
        report.max_optimum = report.max_optimum.max(opt);
        report.violations.append(&mut v);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::ExactSolver;
    use crate::logquad::UnitEisSolver;

    #[test]
    fn exact_optimum_is_a_saddle() {
        let p = ModelParams::baseline();
        let s = ExactSolver::new(&p).unwrap();
        let agg = Aggregator::NonUnit { phi: s.coeffs().phi };
        let cfg = SaddleConfig {
            points: 10,
            ..Default::default()
        };
        let rep = hjbi_saddle_check(&s, agg, &cfg).unwrap();
        assert!(rep.violations.is_empty(), "{:?}", rep.violations.first());
    }

    #[test]
    fn unit_eis_optimum_is_a_saddle() {
        let p = ModelParams::baseline();
        let s = UnitEisSolver::new(&p).unwrap();
        let cfg = SaddleConfig {
            points: 10,
            ..Default::default()
        };
        let rep = hjbi_saddle_check(&s, Aggregator::Unit, &cfg).unwrap();
        assert!(rep.violations.is_empty(), "{:?}", rep.violations.first());
    }

    #[test]
    fn directional_responses() {
        let p = ModelParams::baseline();
        let s = ExactSolver::new(&p).unwrap();
        let agg = Aggregator::NonUnit { phi: s.coeffs().phi };
        let (t, x, m) = (0.6, 2.0, 0.3);
        let d = value_derivs(&s, t, x, m).unwrap();
        let best = Play::from(&s.strategy(t, x, m).unwrap());
        let base = hjbi_integrand(&p, agg, &d, x, m, &best);
        let mut up = best;
        up.xi[2] += 0.01;
        assert!(hjbi_integrand(&p, agg, &d, x, m, &up) > base);
        for f in [0.99, 1.01] {
            let mut c = best;
            c.c *= f;
            assert!(hjbi_integrand(&p, agg, &d, x, m, &c) < base);
        }
    }
}
