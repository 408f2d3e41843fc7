//! Pass/fail records shared by the symbolic and numeric checks.

use std::fmt;

use serde_json::{json, Value};

use crate::expr::NormalForm;
use crate::invariance::Verification;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Status {
    Pass,
    Fail,
}

impl Status {
    pub fn from_bool(ok: bool) -> Status {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Status::Pass
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
        })
    }
}

/// One check on one subject. `residuals` lists every labelled symbolic
/// residual that did not normalize to zero.
#[derive(Clone, Debug)]
pub struct VerificationReport {
    pub subject: String,
    pub check: String,
    pub status: Status,
    pub residuals: Vec<(String, NormalForm)>,
    pub numeric_max: Option<f64>,
    pub details: String,
}

impl VerificationReport {
    pub fn new(subject: &str, check: &str) -> VerificationReport {
        VerificationReport {
            subject: subject.to_string(),
            check: check.to_string(),
            status: Status::Pass,
            residuals: Vec::new(),
            numeric_max: None,
            details: String::new(),
        }
    }

    /// Record a residual; a nonzero one fails the report.
    pub fn residual(&mut self, label: impl Into<String>, r: NormalForm) {
        if !r.is_zero() {
            self.status = Status::Fail;
            self.residuals.push((label.into(), r));
        }
    }

    pub fn fail(&mut self, why: impl Into<String>) {
        self.status = Status::Fail;
        self.note(why);
    }

    pub fn note(&mut self, text: impl Into<String>) {
        if !self.details.is_empty() {
            self.details.push_str("; ");
        }
        self.details.push_str(&text.into());
    }

    /// Numeric worst case against a tolerance.
    pub fn numeric(&mut self, max: f64, tol: f64) {
        self.numeric_max = Some(self.numeric_max.map_or(max, |m| m.max(max)));
        if max.is_nan() || max >= tol {
            self.status = Status::Fail;
        }
    }

    pub fn passed(&self) -> bool {
        self.status.passed()
    }

    pub fn to_json(&self) -> Value {
        let residuals: serde_json::Map<String, Value> = self
            .residuals
            .iter()
            .map(|(l, r)| (l.clone(), Value::String(r.to_string())))
            .collect();
        json!({
            "subject": self.subject,
            "check": self.check,
            "status": self.status.to_string(),
            "residuals": residuals,
            "numeric_max": self.numeric_max,
            "details": self.details,
        })
    }

    pub fn csv_header() -> &'static str {
        "subject,check,status,nonzero_residuals,numeric_max,details"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.subject,
            self.check,
            self.status,
            self.residuals.len(),
            self.numeric_max.map(|m| format!("{m:.6e}")).unwrap_or_default(),
            csv_quote(&self.details)
        )
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.status, self.subject, self.check)?;
        if let Some(m) = self.numeric_max {
            write!(f, " (numeric max {m:.3e})")?;
        }
        if !self.details.is_empty() {
            write!(f, " [{}]", self.details)?;
        }
        for (l, r) in &self.residuals {
            write!(f, "\n    {l}: {r}")?;
        }
        Ok(())
    }
}

impl From<&Verification> for VerificationReport {
    fn from(v: &Verification) -> Self {
        let mut r = VerificationReport::new(&v.name, &format!("invariance p={}", v.order));
        if let Some(e) = &v.error {
            r.fail(e.clone());
        }
        for (k, eqs) in v.determining.per_order.iter().enumerate() {
            for e in eqs {
                r.residual(format!("eps^{k} [{}] {}", e.equation, e.monomial), e.coefficient.clone());
            }
        }
        if !v.passed {
            r.status = Status::Fail;
        }
        r
    }
}

pub(crate) fn csv_quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nonzero_residual_fails() {
        let mut r = VerificationReport::new("s", "c");
        r.residual("zero", NormalForm::zero());
        assert!(r.passed());
        r.residual("one", NormalForm::one());
        assert!(!r.passed());
        assert_eq!(r.residuals.len(), 1);
        assert!(r.to_string().starts_with("FAIL s c"));
    }

    #[test]
    fn numeric_tolerance() {
        let mut r = VerificationReport::new("s", "c");
        r.numeric(1e-12, 1e-9);
        assert!(r.passed());
        r.numeric(f64::NAN, 1e-9);
        assert!(!r.passed());
        assert_eq!(csv_quote("a,b"), "\"a,b\"");
    }
}
