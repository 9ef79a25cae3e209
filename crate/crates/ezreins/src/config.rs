//! Line-oriented `key = value` configuration and CSV helpers.
//!
//! Unknown keys are errors; missing keys take baseline values and the
//! fallback is recorded so that validation reports can list it.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::params::{ClaimDist, ModelParams, SCALAR_KEYS};
use crate::validate::{validate_for, Mode, Severity, ValidationReport};

pub const DEFAULT_SEED: u64 = 20240601;

/// Every accepted configuration key.
pub fn known_keys() -> impl Iterator<Item = &'static str> {
    SCALAR_KEYS.iter().copied().chain(["claim_dist", "cs_w", "seed"])
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub params: ModelParams,
    /// Pinned steady-state consumption level; `None` means fixed point.
    pub cs_w: Option<f64>,
    pub seed: u64,
    /// Keys that were not given and fell back to their defaults.
    pub defaulted: Vec<&'static str>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            params: ModelParams::baseline(),
            cs_w: None,
            seed: DEFAULT_SEED,
            defaulted: known_keys().filter(|k| !matches!(*k, "phi_eis" | "cs_w")).collect(),
        }
    }
}

impl Config {
    /// Parses configuration text on top of the baseline.
    pub fn parse(text: &str) -> Result<Config> {
        let mut cfg = Config::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
                line: idx + 1,
                reason: format!("expected `key = value`, got `{line}`"),
            })?;
            cfg.set(key.trim(), value.trim()).map_err(|e| Error::Config {
                line: idx + 1,
                reason: e.to_string(),
            })?;
        }
        Ok(cfg)
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, pair: &str) -> Result<()> {
        let (key, value) = pair.split_once('=').ok_or_else(|| Error::Config {
            line: 0,
            reason: format!("override `{pair}` is not `key=value`"),
        })?;
        self.set(key.trim(), value.trim())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |reason: String| Error::InvalidParameter { name: "value", reason };
        match key {
            "claim_dist" => {
                self.params.insurance.claim_dist =
                    ClaimDist::parse(value).ok_or_else(|| bad(format!("cannot parse claim_dist `{value}`")))?;
            }
            "cs_w" => {
                self.cs_w = match value {
                    "fixed_point" | "auto" => None,
                    v => Some(v.parse().map_err(|_| bad(format!("cs_w `{v}` is not a number")))?),
                };
            }
            "seed" => {
                self.seed = value.parse().map_err(|_| bad(format!("seed `{value}` is not a u64")))?;
            }
            _ => {
                if !SCALAR_KEYS.contains(&key) {
                    return Err(Error::InvalidParameter {
                        name: "key",
                        reason: format!("unknown key `{key}`"),
                    });
                }
                let v: f64 = value.parse().map_err(|_| bad(format!("`{key}` = `{value}` is not a number")))?;
                self.params.set(key, v)?;
            }
        }
        self.defaulted.retain(|k| *k != key);
        Ok(())
    }

    /// Validation report for `mode`, listing every defaulted key.
    pub fn validate(&self, mode: Mode) -> ValidationReport {
        let mut rep = validate_for(&self.params, mode);
        for key in &self.defaulted {
            rep.push(
                "default",
                true,
                Severity::Info,
                format!("{key} not set, using {}", self.value_text(key)),
            );
        }
        if self.defaulted.contains(&"b") {
            rep.push(
                "default_b",
                true,
                Severity::Info,
                "premium rate b = 1.1 is an artifact choice satisfying the loading condition".into(),
            );
        }
        rep
    }

    fn value_text(&self, key: &str) -> String {
        match key {
            "claim_dist" => self.params.insurance.claim_dist.to_string(),
            "cs_w" => self.cs_w.map_or("fixed_point".into(), fmt_num),
            "seed" => self.seed.to_string(),
            _ => self.params.get(key).map_or("derived".into(), fmt_num),
        }
    }

    /// Resolved parameter set as a `# key = value` comment block.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        for key in known_keys() {
            let _ = writeln!(out, "# {key} = {}", self.value_text(key));
        }
        out
    }
}

/// Formats a number with nine significant digits.
pub fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let exp = v.abs().log10().floor() as i32;
    if (-5..=9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        let s = format!("{v:.decimals$}");
        let s = if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        };
        if s == "-0" {
            "0".into()
        } else {
            s
        }
    } else {
        format!("{v:.8e}")
    }
}

/// Joins numbers into a CSV row.
pub fn csv_row(values: &[f64]) -> String {
    values.iter().map(|v| fmt_num(*v)).collect::<Vec<_>>().join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_baseline_with_fallbacks() {
        let c = Config::parse("# nothing\n\n").unwrap();
        assert_eq!(c.params, ModelParams::baseline());
        assert!(c.defaulted.contains(&"b"));
        let rep = c.validate(Mode::Exact);
        assert!(rep.checks.iter().any(|ch| ch.message.starts_with("b not set")));
    }

    #[test]
    fn keys_and_comments() {
        let c = Config::parse("gamma = 1.3  # risk aversion\nclaim_dist = exp(1)\ncs_w = 0.05\nseed=7\nPhi=0\n").unwrap();
        assert_eq!(c.params.preferences.gamma, 1.3);
        assert_eq!(c.params.preferences.ambiguity, 0.0);
        assert_eq!(c.cs_w, Some(0.05));
        assert_eq!(c.seed, 7);
        assert!(!c.defaulted.contains(&"gamma"));
    }

    #[test]
    fn unknown_key_is_error() {
        let e = Config::parse("gamma = 1.3\nfoo = 2\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 2, .. }));
        assert!(Config::parse("gamma 1.3").is_err());
        assert!(Config::parse("gamma = x").is_err());
    }

    #[test]
    fn echo_roundtrips() {
        let mut c = Config::default();
        c.apply_override("sigma=0.35").unwrap();
        c.apply_override("phi_eis=0.5").unwrap();
        let text: String = c.echo().lines().map(|l| l.trim_start_matches("# ").to_string() + "\n").collect();
        let back = Config::parse(&text.replace("cs_w = fixed_point", "")).unwrap();
        assert_eq!(back.params, c.params);
    }

    #[test]
    fn number_format() {
        assert_eq!(fmt_num(0.0627022), "0.0627022");
        assert_eq!(fmt_num(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt_num(123456.789012), "123456.789");
        assert_eq!(fmt_num(-2.5e-12), "-2.50000000e-12");
        assert_eq!(fmt_num(0.08), "0.08");
        assert_eq!(fmt_num(5.0), "5");
    }
}
