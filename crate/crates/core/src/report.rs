//! Check reports and their JSON-lines / CSV serializations.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::ser::{SerializeMap, Serializer};
use serde::Serialize;
use serde_json::value::RawValue;
use sha2::{Digest, Sha256};

use crate::geometry::BodySpec;

/// A float written with 17 significant digits (`null` when not finite).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sig17(pub f64);

impl Sig17 {
    pub fn format(x: f64) -> String {
        if x.is_finite() {
            // -0.0 prints as 0
            format!("{:.16e}", x + 0.0)
        } else {
            "null".to_string()
        }
    }
}

impl Serialize for Sig17 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            let raw = RawValue::from_string(Self::format(self.0)).map_err(serde::ser::Error::custom)?;
            raw.serialize(s)
        } else {
            s.serialize_none()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    DiscrepancyDocumented,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::DiscrepancyDocumented => "discrepancy-documented",
        }
    }
}

/// One configuration entry of a check.
#[derive(Debug, Clone, PartialEq)]
pub enum ConfigValue {
    Int(i64),
    Real(f64),
    Text(String),
    Body(BodySpec),
}

impl Serialize for ConfigValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ConfigValue::Int(v) => s.serialize_i64(*v),
            ConfigValue::Real(v) => Sig17(*v).serialize(s),
            ConfigValue::Text(v) => s.serialize_str(v),
            ConfigValue::Body(b) => b.serialize(s),
        }
    }
}

pub type Config = BTreeMap<String, ConfigValue>;

/// Either side of a check: a float or an exact canonical string.
#[derive(Debug, Clone, PartialEq)]
pub enum Side {
    Real(f64),
    Exact(String),
}

impl Serialize for Side {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Side::Real(v) => Sig17(*v).serialize(s),
            Side::Exact(v) => s.serialize_str(v),
        }
    }
}

/// Replay data of a Monte Carlo side.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McRecord {
    pub seed: u64,
    pub samples: u64,
    pub mean: Sig17,
    pub standard_error: Sig17,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub check_id: String,
    pub config: Config,
    pub lhs: Side,
    pub rhs: Side,
    pub abs_error: f64,
    pub rel_error: f64,
    /// Human-readable tolerance, e.g. `exact`, `rel 1e-8`, `4 sigma`.
    pub tolerance: String,
    pub verdict: Verdict,
    /// `lhs - rhs` in closed form when both sides are exactly known.
    pub exact_residual: Option<String>,
    pub monte_carlo: Option<McRecord>,
    pub note: Option<String>,
}

impl Serialize for CheckReport {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(None)?;
        map.serialize_entry("check_id", &self.check_id)?;
        map.serialize_entry("config", &self.config)?;
        map.serialize_entry("lhs", &self.lhs)?;
        map.serialize_entry("rhs", &self.rhs)?;
        map.serialize_entry("abs_error", &Sig17(self.abs_error))?;
        map.serialize_entry("rel_error", &Sig17(self.rel_error))?;
        map.serialize_entry("tolerance", &self.tolerance)?;
        map.serialize_entry("verdict", &self.verdict)?;
        if let Some(r) = &self.exact_residual {
            map.serialize_entry("exact_residual", r)?;
        }
        if let Some(mc) = &self.monte_carlo {
            map.serialize_entry("monte_carlo", mc)?;
        }
        if let Some(note) = &self.note {
            map.serialize_entry("note", note)?;
        }
        map.end()
    }
}

/// `|a-b|` and `|a-b| / max(|a|,|b|)` (relative error 0 when both vanish).
pub fn errors(a: f64, b: f64) -> (f64, f64) {
    let abs = (a - b).abs();
    let scale = a.abs().max(b.abs());
    (abs, if scale > 0.0 { abs / scale } else { abs })
}

impl CheckReport {
    pub fn config_json(&self) -> String {
        serde_json::to_string(&self.config).expect("config serializes")
    }

    /// First 16 hex digits of the SHA-256 of the canonical config JSON.
    pub fn config_hash(&self) -> String {
        let digest = Sha256::digest(self.config_json().as_bytes());
        digest.iter().take(8).fold(String::new(), |mut acc, b| {
            let _ = write!(acc, "{b:02x}");
            acc
        })
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }

    /// Ordering key used before any serialization.
    pub fn sort_key(&self) -> (String, String) {
        (self.check_id.clone(), self.config_json())
    }

    pub fn is_unexpected_failure(&self) -> bool {
        self.verdict == Verdict::Fail
    }
}

pub const CSV_HEADER: &str = "check_id,config_hash,verdict,rel_error";

pub fn to_jsonl(reports: &[CheckReport]) -> String {
    reports.iter().map(|r| r.to_json_line() + "\n").collect()
}

pub fn to_csv(reports: &[CheckReport]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in reports {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.check_id,
            r.config_hash(),
            r.verdict.as_str(),
            Sig17::format(r.rel_error)
        );
    }
    out
}

/// Plain-text table, one line per report.
pub fn to_text(reports: &[CheckReport]) -> String {
    let mut out = String::new();
    for r in reports {
        let side = |s: &Side| match s {
            Side::Real(v) => Sig17::format(*v),
            Side::Exact(v) => v.clone(),
        };
        let _ = writeln!(
            out,
            "{:<24} {:<22} lhs={} rhs={} abs={} rel={} [{}] {}",
            r.check_id,
            r.verdict.as_str(),
            side(&r.lhs),
            side(&r.rhs),
            Sig17::format(r.abs_error),
            Sig17::format(r.rel_error),
            r.tolerance,
            r.config_json(),
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CheckReport {
        CheckReport {
            check_id: "demo".into(),
            config: Config::from([
                ("n".to_string(), ConfigValue::Int(2)),
                ("rho".to_string(), ConfigValue::Real(0.5)),
            ]),
            lhs: Side::Real(std::f64::consts::PI),
            rhs: Side::Exact("pi".into()),
            abs_error: 0.0,
            rel_error: 0.0,
            tolerance: "exact".into(),
            verdict: Verdict::Pass,
            exact_residual: None,
            monte_carlo: None,
            note: None,
        }
    }

    #[test]
    fn seventeen_digit_numbers() {
        assert_eq!(Sig17::format(std::f64::consts::PI), "3.1415926535897931e0");
        let back: f64 = Sig17::format(0.1).parse().unwrap();
        assert_eq!(back, 0.1);
        assert_eq!(Sig17::format(f64::NAN), "null");
    }

    #[test]
    fn json_line_layout() {
        let line = sample().to_json_line();
        assert_eq!(
            line,
            r#"{"check_id":"demo","config":{"n":2,"rho":5.0000000000000000e-1},"lhs":3.1415926535897931e0,"rhs":"pi","abs_error":0.0000000000000000e0,"rel_error":0.0000000000000000e0,"tolerance":"exact","verdict":"pass"}"#
        );
        let parsed: serde_json::Value = serde_json::from_str(&line).unwrap();
        assert_eq!(parsed["verdict"], "pass");
    }

    #[test]
    fn csv_layout() {
        let csv = to_csv(&[sample()]);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row[0], "demo");
        assert_eq!(row[1].len(), 16);
        assert_eq!(row[2], "pass");
    }

    #[test]
    fn relative_errors() {
        assert_eq!(errors(0.0, 0.0), (0.0, 0.0));
        let (a, r) = errors(2.0, 1.0);
        assert_eq!(a, 1.0);
        assert_eq!(r, 0.5);
    }
}
