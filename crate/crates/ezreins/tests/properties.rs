//! Property tests over randomly drawn parameter sets.

use ezreins::exact::ExactSolver;
use ezreins::logquad::{CsSolver, WMode};
use ezreins::params::{derive_k_phi, ModelParams};
use ezreins::solution::{Solution, StrategyRatios};
use ezreins::validate::validate;
use proptest::prelude::*;

/// Risk-averse draws with non-positive correlation, the regime in which the
/// coefficient bounds are stated.
fn averse_params() -> impl Strategy<Value = ModelParams> {
    (1.05f64..2.5, 0.0f64..1.2, -1.0f64..0.0, 2.0f64..9.0, 0.1f64..0.4, 0.15f64..0.9).prop_map(
        |(gamma, amb, rho1, alpha, beta, sigma)| {
            let mut p = ModelParams::baseline();
            p.preferences.gamma = gamma;
            p.preferences.ambiguity = amb;
            p.market.rho1 = rho1;
            p.market.alpha = alpha;
            p.market.beta = beta;
            p.market.sigma = sigma;
            p
        },
    )
}

fn any_f64() -> impl Strategy<Value = f64> {
    prop_oneof![
        -10.0f64..10.0,
        Just(0.0),
        Just(1.0),
        Just(f64::NAN),
        Just(f64::INFINITY),
        Just(f64::NEG_INFINITY),
        Just(1e-300),
        Just(-1e300),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn linearization_identity(gamma in 0.05f64..5.0, amb in 0.0f64..3.0, rho1 in -1.0f64..1.0) {
        prop_assume!((gamma - 1.0).abs() > 1e-3);
        if let Ok((k, phi)) = derive_k_phi(gamma, amb, rho1) {
            let lhs = k * (1.0 - phi) / (1.0 - gamma);
            prop_assert!((lhs + 1.0).abs() <= 1e-12 * k.abs().max(1.0), "identity off by {}", lhs + 1.0);
        }
    }

    #[test]
    fn no_ambiguity_no_correlation_is_exact(gamma in 0.05f64..5.0) {
        prop_assume!((gamma - 1.0).abs() > 1e-6);
        let (k, phi) = derive_k_phi(gamma, 0.0, 0.0).unwrap();
        prop_assert_eq!(k, 1.0);
        prop_assert_eq!(phi, 2.0 - gamma);
    }

    #[test]
    fn validate_is_total(values in proptest::collection::vec(any_f64(), 19)) {
        let mut p = ModelParams::baseline();
        for (key, v) in ezreins::params::SCALAR_KEYS.iter().zip(&values) {
            let _ = p.set(key, *v);
        }
        let rep = validate(&p);
        prop_assert!(rep.get("finite").is_some());
        prop_assert!(rep.get("premium_loading").is_some());
    }

    #[test]
    fn premium_check_matches_loading_band(b in 0.0f64..3.0, lambda in 0.1f64..3.0, mu1 in 0.1f64..2.0, theta1 in 0.01f64..1.0) {
        let mut p = ModelParams::baseline();
        p.insurance.b = b;
        p.insurance.lambda = lambda;
        p.insurance.mu1 = mu1;
        p.insurance.mu2 = mu1 * mu1 * 1.25;
        p.insurance.theta1 = theta1;
        let slack = b - lambda * mu1;
        let expected = 0.0 < slack && slack < theta1 * lambda * mu1;
        let check = validate(&p);
        prop_assert_eq!(check.get("premium_loading").unwrap().passed, expected);
    }

    #[test]
    fn ambiguity_free_distortions_vanish(k in 0.1f64..3.0, m in -5.0f64..5.0, slope in -10.0f64..10.0, rho1 in -1.0f64..1.0) {
        let mut p = ModelParams::baseline();
        p.preferences.ambiguity = 0.0;
        p.market.rho1 = rho1;
        let r = StrategyRatios::new(&p, k, m, slope);
        prop_assert_eq!(r.xi, [0.0; 3]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn coefficient_bounds(p in averse_params(), frac in 0.0f64..1.0, t in 0.0f64..0.99) {
        let solver = ExactSolver::new(&p).unwrap();
        let d = *solver.coeffs();
        let t_end = p.horizon.t_end;
        let tau = frac * (t_end - t);
        let c = solver.triple(tau);
        prop_assert!(c.c >= 0.0);
        prop_assert!(c.c <= d.b0 * tau * (1.0 + 1e-12) + 1e-15);
        prop_assert!(c.c <= d.c_limit() * (1.0 + 1e-12));
        prop_assert!(c.b.abs() <= d.b1.abs() * tau * (1.0 + 1e-9) + 1e-15);
        let floor = d.a1 * (t_end - t) * tau + d.a2 * tau;
        prop_assert!(c.a >= floor - 1e-12, "A = {} below {}", c.a, floor);
    }

    #[test]
    fn coefficients_solve_their_odes(p in averse_params(), tau in 0.01f64..1.0) {
        let solver = ExactSolver::new(&p).unwrap();
        let d = *solver.coeffs();
        let beta2 = p.market.beta.powi(2);
        let tilt = d.hedge_drift * p.excess_return() / p.market.sigma;
        let h = 1e-5;
        let (lo, mid, hi) = (solver.triple(tau - h), solver.triple(tau), solver.triple(tau + h));
        let dc = (hi.c - lo.c) / (2.0 * h);
        let db = (hi.b - lo.b) / (2.0 * h);
        let da = (hi.a - lo.a) / (2.0 * h);
        let rc = d.b0 - 2.0 * d.kappa * mid.c - 2.0 * beta2 * mid.c * mid.c;
        let rb = -((d.kappa + 2.0 * beta2 * mid.c) * mid.b + d.factor_rate - 2.0 * tilt * mid.c);
        let ra = 0.5 * beta2 * mid.b * mid.b - beta2 * mid.c - tilt * mid.b + d.base_rate;
        for (num, exact) in [(dc, rc), (db, rb), (da, ra)] {
            prop_assert!((num - exact).abs() <= 1e-4 * exact.abs().max(1.0), "{num} vs {exact}");
        }
    }

    #[test]
    fn strategy_ratios_are_wealth_free(p in averse_params(), t in 0.5f64..1.0, m in -2.0f64..2.0, x in 0.1f64..50.0) {
        let solver = ExactSolver::new(&p).unwrap();
        let a = solver.strategy(t, x, m).unwrap();
        let b = solver.strategy(t, 2.5 * x, m).unwrap();
        for (u, v) in [(a.pi_ratio(), b.pi_ratio()), (a.q_ratio(), b.q_ratio()), (a.c_ratio(), b.c_ratio())] {
            prop_assert!((u - v).abs() <= 1e-14 * u.abs().max(1e-300));
        }
    }

    #[test]
    fn approximation_shares_reinsurance(p in averse_params(), t in 0.5f64..1.0, m in -2.0f64..2.0) {
        let exact = ExactSolver::new(&p).unwrap();
        let cs = CsSolver::new(&p, WMode::Fixed(0.1)).unwrap();
        prop_assert_eq!(exact.strategy(t, 1.0, m).unwrap().q, cs.strategy(t, 1.0, m).unwrap().q);
    }

    #[test]
    fn approximate_investment_ignores_loading(p in averse_params(), theta1 in 0.05f64..0.6, t in 0.5f64..0.99, m in -1.0f64..1.0) {
        let mut other = p;
        other.insurance.theta1 = theta1;
        other.insurance.b = other.insurance.lambda * other.insurance.mu1 * (1.0 + theta1 / 2.0);
        let a = CsSolver::new(&p, WMode::Fixed(0.1)).unwrap().strategy(t, 1.0, m).unwrap();
        let b = CsSolver::new(&other, WMode::Fixed(0.1)).unwrap().strategy(t, 1.0, m).unwrap();
        prop_assert!((a.pi - b.pi).abs() <= 1e-12 * a.pi.abs().max(1.0));
    }
}

#[test]
fn exact_investment_depends_on_loading() {
    let p = ModelParams::baseline();
    let mut other = p;
    other.insurance.theta1 = 0.4;
    other.insurance.b = 1.2;
    let a = ExactSolver::new(&p).unwrap().strategy(0.5, 1.0, 0.5).unwrap();
    let b = ExactSolver::new(&other).unwrap().strategy(0.5, 1.0, 0.5).unwrap();
    assert!((a.pi - b.pi).abs() > 1e-9);
}

#[test]
fn log_slope_decays_like_inverse_factor() {
    let p = ModelParams::baseline();
    let s = ExactSolver::new(&p).unwrap();
    let weighted = |m: f64| m.abs() * s.g(0.5, m).unwrap().log_slope().abs();
    let grid: Vec<f64> = (0..=90).map(|i| 5.0 + 0.5 * i as f64).flat_map(|m| [m, -m]).collect();
    let bound = 1.5 * grid.iter().map(|&m| weighted(m)).fold(0.0, f64::max);
    assert!(bound.is_finite() && bound > 0.0);
    for m in [60.0, 80.0, 100.0, -60.0, -80.0, -100.0, 7.25, -13.75] {
        assert!(weighted(m) <= bound, "|m| |g_m/g| = {} at m = {m} exceeds {bound}", weighted(m));
    }
}
