//! Assumption checks collected into a report that never fails to build.

use std::fmt;

use crate::params::{derive_k_phi, DerivedCoeffs, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    /// Formula evaluation is impossible or meaningless.
    Hard,
    /// A sufficient condition of the verification argument.
    Warning,
    /// Informational only (defaults applied, classifications).
    Info,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub severity: Severity,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn push(&mut self, name: &str, passed: bool, severity: Severity, message: String) {
        self.checks.push(Check {
            name: name.to_string(),
            passed,
            severity,
            message,
        });
    }

    pub fn hard_failures(&self) -> impl Iterator<Item = &Check> {
        self.checks
            .iter()
            .filter(|c| !c.passed && c.severity == Severity::Hard)
    }

    pub fn has_hard_failure(&self) -> bool {
        self.hard_failures().next().is_some()
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let status = match (c.passed, c.severity) {
                (true, _) => "ok",
                (false, Severity::Hard) => "FAIL",
                (false, Severity::Warning) => "warn",
                (false, Severity::Info) => "note",
            };
            writeln!(f, "{status:>4}  {:<22} {}", c.name, c.message)?;
        }
        Ok(())
    }
}

/// Solver whose assumptions are being validated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Exact,
    UnitEis,
    CampbellShiller,
}

impl Mode {
    pub fn parse(s: &str) -> Option<Mode> {
        match s {
            "exact" => Some(Mode::Exact),
            "unit_eis" => Some(Mode::UnitEis),
            "cs" => Some(Mode::CampbellShiller),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Mode::Exact => "exact",
            Mode::UnitEis => "unit_eis",
            Mode::CampbellShiller => "cs",
        }
    }
}

/// Classifies a `(gamma, phi)` pair into the admissible preference cases.
pub fn preference_case(gamma: f64, phi: f64) -> Option<&'static str> {
    if gamma > 1.0 && phi > 1.0 {
        Some("i")
    } else if gamma > 1.0 && phi < 1.0 && gamma * phi <= 1.0 {
        Some("ii")
    } else if gamma < 1.0 && phi < 1.0 {
        Some("iii")
    } else if gamma < 1.0 && phi > 1.0 && gamma * phi >= 1.0 {
        Some("iv")
    } else {
        None
    }
}

/// Validates `params` for the exact solver.
pub fn validate(params: &ModelParams) -> ValidationReport {
    validate_for(params, Mode::Exact)
}

/// Validates `params` for the given solver mode. Total: never panics.
pub fn validate_for(params: &ModelParams, mode: Mode) -> ValidationReport {
    let mut rep = ValidationReport::default();
    let m = &params.market;
    let ins = &params.insurance;
    let pref = &params.preferences;
    let h = &params.horizon;
    let finite = crate::params::SCALAR_KEYS
        .iter()
        .filter_map(|k| params.get(k).map(|v| (k, v)))
        .find(|(_, v)| !v.is_finite());
    rep.push(
        "finite",
        finite.is_none(),
        Severity::Hard,
        match finite {
            Some((k, v)) => format!("{k} = {v} is not finite"),
            None => "all parameters finite".into(),
        },
    );

    let range = |rep: &mut ValidationReport, name: &str, ok: bool, what: String| {
        rep.push(name, ok, Severity::Hard, what);
    };
    range(&mut rep, "sigma>0", m.sigma > 0.0, format!("sigma = {}", m.sigma));
    range(&mut rep, "beta>=0", m.beta >= 0.0, format!("beta = {}", m.beta));
    range(&mut rep, "alpha>0", m.alpha > 0.0, format!("alpha = {}", m.alpha));
    range(&mut rep, "a>=r", m.a >= m.r, format!("a - r = {}", m.a - m.r));
    range(&mut rep, "|rho1|<=1", m.rho1.abs() <= 1.0, format!("rho1 = {}", m.rho1));
    range(&mut rep, "theta1>0", ins.theta1 > 0.0, format!("theta1 = {}", ins.theta1));
    range(&mut rep, "lambda>0", ins.lambda > 0.0, format!("lambda = {}", ins.lambda));
    range(
        &mut rep,
        "mu2>=mu1^2>0",
        ins.mu1 > 0.0 && ins.mu2 >= ins.mu1 * ins.mu1,
        format!("mu1 = {}, mu2 = {}", ins.mu1, ins.mu2),
    );
    let (dm1, dm2) = (ins.claim_dist.mean(), ins.claim_dist.second_moment());
    rep.push(
        "claim_moments",
        (dm1 - ins.mu1).abs() <= 1e-9 * ins.mu1.abs().max(1.0)
            && (dm2 - ins.mu2).abs() <= 1e-9 * ins.mu2.abs().max(1.0),
        Severity::Warning,
        format!(
            "{} has moments ({dm1}, {dm2}) vs mu1 = {}, mu2 = {}",
            ins.claim_dist, ins.mu1, ins.mu2
        ),
    );
    let lo = ins.lambda * ins.mu1;
    let hi = (1.0 + ins.theta1) * lo;
    rep.push(
        "premium_loading",
        lo < ins.b && ins.b < hi,
        Severity::Hard,
        format!("lambda mu1 = {lo} < b = {} < (1 + theta1) lambda mu1 = {hi}", ins.b),
    );
    range(&mut rep, "gamma>0", pref.gamma > 0.0, format!("gamma = {}", pref.gamma));
    rep.push(
        "gamma!=1",
        pref.gamma != 1.0,
        Severity::Hard,
        if pref.gamma == 1.0 {
            "gamma = 1 is excluded; use --mode unit_eis with a separate risk aversion".into()
        } else {
            format!("gamma = {}", pref.gamma)
        },
    );
    range(&mut rep, "delta>0", pref.delta > 0.0, format!("delta = {}", pref.delta));
    range(&mut rep, "Phi>=0", pref.ambiguity >= 0.0, format!("Phi = {}", pref.ambiguity));
    range(
        &mut rep,
        "Phi+gamma>0",
        pref.ambiguity + pref.gamma > 1e-12,
        format!("Phi + gamma = {}", pref.ambiguity + pref.gamma),
    );
    range(
        &mut rep,
        "horizon",
        0.0 <= h.t0 && h.t0 < h.t_end && h.t_end.is_finite(),
        format!("0 <= t0 = {} < T = {}", h.t0, h.t_end),
    );
    if rep.has_hard_failure() {
        return rep;
    }

    let (k, phi_derived) = match derive_k_phi(pref.gamma, pref.ambiguity, m.rho1) {
        Ok(pair) => {
            rep.push("k_finite", true, Severity::Hard, format!("k = {}, derived phi = {}", pair.0, pair.1));
            pair
        }
        Err(e) => {
            rep.push("k_finite", false, Severity::Hard, e.to_string());
            return rep;
        }
    };
    let phi = match mode {
        Mode::Exact => {
            if let Some(user) = pref.phi_eis {
                rep.push(
                    "phi_consistent",
                    (user - phi_derived).abs() <= 1e-9,
                    Severity::Warning,
                    format!("user phi = {user} replaced by derived phi = {phi_derived}"),
                );
            }
            rep.push(
                "phi!=1",
                (phi_derived - 1.0).abs() > 1e-9,
                Severity::Hard,
                format!("phi = {phi_derived}; values at 1 need the unit-EIS solver"),
            );
            phi_derived
        }
        Mode::UnitEis => 1.0,
        Mode::CampbellShiller => {
            let phi = pref.phi_eis.unwrap_or(phi_derived);
            rep.push(
                "phi!=1",
                (phi - 1.0).abs() > 1e-9,
                Severity::Hard,
                format!("phi = {phi}; values at 1 need the unit-EIS solver"),
            );
            phi
        }
    };
    let case = preference_case(pref.gamma, phi);
    rep.push(
        "preference_case",
        case.is_some(),
        Severity::Warning,
        match case {
            Some(c) => format!("case ({c}) with gamma = {}, phi = {phi}, gamma phi = {}", pref.gamma, pref.gamma * phi),
            None => format!("no admissible case for gamma = {}, phi = {phi}", pref.gamma),
        },
    );

    match DerivedCoeffs::new(params) {
        Ok(d) => {
            rep.push(
                "discriminant_real",
                true,
                Severity::Hard,
                format!("kappa = {}, b0 = {}, Delta = {}", d.kappa, d.b0, d.discriminant),
            );
            push_admissibility(&mut rep, params, k);
        }
        Err(e) => rep.push("discriminant_real", false, Severity::Hard, e.to_string()),
    }
    rep
}

fn push_admissibility(rep: &mut ValidationReport, params: &ModelParams, k: f64) {
    let g = params.gamma();
    let amb = params.ambiguity();
    let kb = params.k_bar;
    let m = &params.market;
    let t_end = params.horizon.t_end;
    let h1_upper = (k + 1.5).min(1.0 / kb + 1.0);
    rep.push(
        "H1",
        1.0 < g && g < h1_upper && kb > 2.0 && m.rho1 <= 0.0,
        Severity::Warning,
        format!("1 < gamma = {g} < {h1_upper}, k_bar = {kb} > 2, rho1 = {} <= 0", m.rho1),
    );
    let lhs = m.alpha * (amb + g).powi(2);
    let rhs = 8.0 * m.beta.powi(2) * t_end * (amb * amb).max(kb * kb * (g - 1.0).powi(2));
    rep.push("H2", lhs > rhs, Severity::Warning, format!("{lhs} > {rhs}"));
    let total = amb + g;
    let rhs = 16.0 * kb * (g - 1.0) * m.beta.powi(2) * t_end
        * ((2.0 * k + (g - 1.0) * m.sigma) / (k * total * m.sigma)
            + (2.0 * amb + kb * (g - 1.0) + 1.0) / (total * total))
        + (kb * (1.0 - g) - amb) * m.beta * m.rho1 / total;
    rep.push("H3", m.alpha > rhs, Severity::Warning, format!("alpha = {} > {rhs}", m.alpha));
}
