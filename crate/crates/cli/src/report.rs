//! Verification reports and their JSON/CSV serialization.
//!
//! JSON layout, schema version 1:
//!
//! ```text
//! {
//!   "schema_version": 1,
//!   "fingerprint": {"version", "threads", "seed", "fast", "suites", "seconds"},
//!   "summaries": [{"suite", "checks", "passed", "failed", "errors"}],
//!   "checks": [{"id", "suite", "anchor", "relation", "computed", "expected",
//!               "abs_err", "rel_err", "tolerance": {"abs", "rel"}, "pass", "error"}]
//! }
//! ```
//!
//! Finite floats are written with 17 significant digits; non-finite values
//! as the strings "NaN", "inf" and "-inf". `relation` is `eq`, `le`
//! (computed ≤ expected) or `ge`; for the one-sided relations `abs_err` is
//! the amount of violation. A check passes iff it has no error and
//! `abs_err ≤ tolerance.abs` or `rel_err ≤ tolerance.rel`.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::config::Format;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Eq,
    Le,
    Ge,
}

impl Relation {
    fn name(self) -> &'static str {
        match self {
            Relation::Eq => "eq",
            Relation::Le => "le",
            Relation::Ge => "ge",
        }
    }
}

/// Formats a float with 17 significant digits.
pub fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

fn parse_float(s: &str) -> Result<f64, String> {
    match s {
        "NaN" => Ok(f64::NAN),
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => s.parse().map_err(|_| format!("bad float '{s}'")),
    }
}

mod float17 {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            let raw = serde_json::value::RawValue::from_string(fmt_float(*v)).map_err(serde::ser::Error::custom)?;
            raw.serialize(s)
        } else {
            s.serialize_str(&fmt_float(*v))
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) => parse_float(&s).map_err(de::Error::custom),
        }
    }
}

mod opt_float17 {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) => float17::serialize(x, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        #[derive(Deserialize)]
        struct Wrap(#[serde(with = "float17")] f64);
        Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    #[serde(with = "opt_float17")]
    pub abs: Option<f64>,
    #[serde(with = "opt_float17")]
    pub rel: Option<f64>,
}

impl Tolerance {
    pub fn abs(t: f64) -> Tolerance {
        Tolerance { abs: Some(t), rel: None }
    }

    pub fn rel(t: f64) -> Tolerance {
        Tolerance { abs: None, rel: Some(t) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub id: String,
    pub suite: String,
    pub anchor: String,
    pub relation: Relation,
    #[serde(with = "float17")]
    pub computed: f64,
    #[serde(with = "float17")]
    pub expected: f64,
    #[serde(with = "float17")]
    pub abs_err: f64,
    #[serde(with = "float17")]
    pub rel_err: f64,
    pub tolerance: Tolerance,
    pub pass: bool,
    pub error: Option<String>,
}

impl CheckRecord {
    pub fn new(
        suite: &str,
        id: impl Into<String>,
        anchor: &str,
        relation: Relation,
        computed: f64,
        expected: f64,
        tolerance: Tolerance,
    ) -> CheckRecord {
        let mut r = CheckRecord {
            id: id.into(),
            suite: suite.into(),
            anchor: anchor.into(),
            relation,
            computed,
            expected,
            abs_err: f64::NAN,
            rel_err: f64::NAN,
            tolerance,
            pass: false,
            error: None,
        };
        r.evaluate();
        r
    }

    /// A check whose computation failed; it never passes.
    pub fn failed(
        suite: &str,
        id: impl Into<String>,
        anchor: &str,
        relation: Relation,
        expected: f64,
        tolerance: Tolerance,
        error: String,
    ) -> CheckRecord {
        let mut r = CheckRecord::new(suite, id, anchor, relation, f64::NAN, expected, tolerance);
        r.error = Some(error);
        r.evaluate();
        r
    }

    /// Recomputes the errors and the verdict from the recorded fields.
    pub fn evaluate(&mut self) {
        let d = self.computed - self.expected;
        self.abs_err = match self.relation {
            Relation::Eq => d.abs(),
            Relation::Le => d.max(0.0),
            Relation::Ge => (-d).max(0.0),
        };
        if self.computed.is_nan() {
            self.abs_err = f64::NAN;
        }
        self.rel_err = if self.abs_err == 0.0 { 0.0 } else { self.abs_err / self.expected.abs() };
        let ok = |err: f64, tol: Option<f64>| tol.is_some_and(|t| err <= t);
        self.pass = self.error.is_none() && (ok(self.abs_err, self.tolerance.abs) || ok(self.rel_err, self.tolerance.rel));
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub version: String,
    pub threads: usize,
    pub seed: u64,
    pub fast: bool,
    pub suites: Vec<String>,
    /// Wall-clock seconds per suite.
    pub seconds: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub suite: String,
    pub checks: usize,
    pub passed: usize,
    pub failed: usize,
    pub errors: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub fingerprint: Fingerprint,
    pub summaries: Vec<SuiteSummary>,
    pub checks: Vec<CheckRecord>,
}

impl Report {
    pub fn new(fingerprint: Fingerprint, checks: Vec<CheckRecord>) -> Report {
        let mut summaries: Vec<SuiteSummary> = Vec::new();
        for c in &checks {
            let s = match summaries.iter_mut().find(|s| s.suite == c.suite) {
                Some(s) => s,
                None => {
                    summaries.push(SuiteSummary { suite: c.suite.clone(), checks: 0, passed: 0, failed: 0, errors: 0 });
                    summaries.last_mut().unwrap()
                }
            };
            s.checks += 1;
            if c.pass {
                s.passed += 1;
            } else {
                s.failed += 1;
            }
            if c.error.is_some() {
                s.errors += 1;
            }
        }
        Report { schema_version: SCHEMA_VERSION, fingerprint, summaries, checks }
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Report, String> {
        let r: Report = serde_json::from_str(text).map_err(|e| e.to_string())?;
        if r.schema_version != SCHEMA_VERSION {
            return Err(format!("unsupported schema version {}", r.schema_version));
        }
        Ok(r)
    }

    pub fn write(&self, format: Format, out: &mut dyn Write) -> std::io::Result<()> {
        match format {
            Format::Json => {
                out.write_all(self.to_json().as_bytes())?;
                out.write_all(b"\n")
            }
            Format::Csv => write_csv(&self.checks, out),
        }
    }
}

pub const CSV_HEADER: [&str; 12] =
    ["id", "suite", "anchor", "relation", "computed", "expected", "abs_err", "rel_err", "tol_abs", "tol_rel", "pass", "error"];

/// One row per check after a header row.
pub fn write_csv(checks: &[CheckRecord], out: &mut dyn Write) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    let opt = |v: Option<f64>| v.map(fmt_float).unwrap_or_default();
    for c in checks {
        w.write_record([
            c.id.clone(),
            c.suite.clone(),
            c.anchor.clone(),
            c.relation.name().to_string(),
            fmt_float(c.computed),
            fmt_float(c.expected),
            fmt_float(c.abs_err),
            fmt_float(c.rel_err),
            opt(c.tolerance.abs),
            opt(c.tolerance.rel),
            c.pass.to_string(),
            c.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()
}

pub fn read_csv(input: &mut dyn Read) -> Result<Vec<CheckRecord>, String> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers().map_err(|e| e.to_string())?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(format!("unexpected header {header:?}"));
    }
    let opt = |s: &str| if s.is_empty() { Ok(None) } else { parse_float(s).map(Some) };
    let mut out = Vec::new();
    for row in r.records() {
        let row = row.map_err(|e| e.to_string())?;
        let relation = match &row[3] {
            "eq" => Relation::Eq,
            "le" => Relation::Le,
            "ge" => Relation::Ge,
            other => return Err(format!("bad relation '{other}'")),
        };
        out.push(CheckRecord {
            id: row[0].to_string(),
            suite: row[1].to_string(),
            anchor: row[2].to_string(),
            relation,
            computed: parse_float(&row[4])?,
            expected: parse_float(&row[5])?,
            abs_err: parse_float(&row[6])?,
            rel_err: parse_float(&row[7])?,
            tolerance: Tolerance { abs: opt(&row[8])?, rel: opt(&row[9])? },
            pass: row[10].parse().map_err(|_| format!("bad pass flag '{}'", &row[10]))?,
            error: if row[11].is_empty() { None } else { Some(row[11].to_string()) },
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdicts_follow_the_recorded_fields() {
        let eq = CheckRecord::new("s", "a", "x", Relation::Eq, 1.0 + 1e-9, 1.0, Tolerance::abs(1e-8));
        assert!(eq.pass && (eq.abs_err - 1e-9).abs() < 1e-15);
        let le = CheckRecord::new("s", "b", "x", Relation::Le, 3e-9, 1e-8, Tolerance::abs(0.0));
        assert!(le.pass && le.abs_err == 0.0);
        let ge = CheckRecord::new("s", "c", "x", Relation::Ge, -2e-9, 0.0, Tolerance::abs(1e-9));
        assert!(!ge.pass && ge.abs_err == 2e-9 && ge.rel_err.is_infinite());
        let rel = CheckRecord::new("s", "d", "x", Relation::Eq, 101.0, 100.0, Tolerance::rel(0.02));
        assert!(rel.pass);
        let err = CheckRecord::failed("s", "e", "x", Relation::Eq, 0.0, Tolerance::abs(1.0), "boom".into());
        assert!(!err.pass && err.computed.is_nan());
    }

    #[test]
    fn floats_have_seventeen_digits() {
        assert_eq!(fmt_float(std::f64::consts::PI), "3.1415926535897931e0");
        assert_eq!(parse_float(&fmt_float(0.1)).unwrap(), 0.1);
        assert!(parse_float("NaN").unwrap().is_nan());
    }
}
