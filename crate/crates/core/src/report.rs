//! Check records and the JSON report.
//!
//! Floats are written in scientific notation with 17 significant digits so
//! the report is stable across platforms and parses back bit-exactly.

use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::ser::Serialize;
use serde::{Deserialize, Serialize as SerializeDerive};
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::Value;

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, SerializeDerive, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Info,
}

impl Verdict {
    pub fn from_pass(pass: bool) -> Self {
        if pass {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Info => "info",
        }
    }
}

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckRecord {
    pub suite: String,
    pub check: String,
    pub anchor: String,
    pub parameters: BTreeMap<String, Value>,
    /// Headline measurement; `None` when the check produced no finite value.
    pub measured: Option<f64>,
    /// Reference value or bound shape, in words.
    pub reference: String,
    pub tolerance: Option<f64>,
    pub verdict: Verdict,
    pub diagnostics: Option<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, SerializeDerive, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Summary {
    pub total: usize,
    pub pass: usize,
    pub fail: usize,
    pub info: usize,
}

impl Summary {
    pub fn of(records: &[CheckRecord]) -> Self {
        let mut s = Summary {
            total: records.len(),
            ..Summary::default()
        };
        for r in records {
            match r.verdict {
                Verdict::Pass => s.pass += 1,
                Verdict::Fail => s.fail += 1,
                Verdict::Info => s.info += 1,
            }
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerificationReport {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub config: Value,
    pub records: Vec<CheckRecord>,
    pub summary: Summary,
}

impl VerificationReport {
    pub fn new(seed: u64, config: Value, records: Vec<CheckRecord>) -> Self {
        let summary = Summary::of(&records);
        VerificationReport {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config,
            records,
            summary,
        }
    }

    pub fn all_passed(&self) -> bool {
        self.summary.fail == 0
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(to_json_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// `summary` agrees with the records.
    pub fn is_consistent(&self) -> bool {
        self.summary == Summary::of(&self.records)
    }
}

/// Pretty printer that writes every float as `{:.16e}`.
struct FixedDigits<'a>(PrettyFormatter<'a>);

impl Formatter for FixedDigits<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        write!(w, "{:.16e}", value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Pretty JSON with 17-significant-digit floats and a trailing newline.
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedDigits(PrettyFormatter::with_indent(b"  ")));
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(String::from_utf8(out).expect("serde_json emits UTF-8"))
}

/// `{:.16e}`, or an empty field for non-finite values.
pub fn csv_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        String::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(verdict: Verdict, measured: Option<f64>) -> CheckRecord {
        let mut parameters = BTreeMap::new();
        parameters.insert("n".into(), Value::from(256u64));
        parameters.insert("eps".into(), Value::from(0.1 / 3.0));
        CheckRecord {
            suite: "poincare".into(),
            check: "spectral_gap".into(),
            anchor: "anchor".into(),
            parameters,
            measured,
            reference: "pi^2".into(),
            tolerance: Some(1e-4),
            verdict,
            diagnostics: None,
        }
    }

    #[test]
    fn floats_have_seventeen_digits() {
        let s = to_json_string(&[1.0f64, 0.1]).unwrap();
        assert!(s.contains("1.0000000000000000e0"), "{s}");
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
    }

    #[test]
    fn round_trip() {
        let recs = vec![
            record(Verdict::Pass, Some(std::f64::consts::PI)),
            record(Verdict::Fail, None),
            record(Verdict::Info, Some(1e-300)),
        ];
        let rep = VerificationReport::new(7, serde_json::json!({"seed": 7, "x": 0.3}), recs);
        assert_eq!(
            rep.summary,
            Summary {
                total: 3,
                pass: 1,
                fail: 1,
                info: 1
            }
        );
        let text = rep.to_json().unwrap();
        let back = VerificationReport::from_json(&text).unwrap();
        assert_eq!(back, rep);
        assert_eq!(back.to_json().unwrap(), text);
    }
}
