//! Audit verdicts and the bit-exact output contract: CSV with '.' decimals,
//! LF line endings and a header row; one JSON summary per run.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use serde::Serialize;

/// One audit verdict in the JSON summary.
#[derive(Debug, Clone, Serialize)]
pub struct AuditOutcome {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level: Option<String>,
    pub estimate: f64,
    pub stderr: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl AuditOutcome {
    pub fn new(name: &str, estimate: f64, stderr: f64, threshold: f64, pass: bool) -> Self {
        Self {
            name: name.to_string(),
            level: None,
            estimate,
            stderr,
            threshold,
            pass,
        }
    }

    pub fn with_level(mut self, level: impl Into<String>) -> Self {
        self.level = Some(level.into());
        self
    }
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub command: String,
    pub audits: Vec<AuditOutcome>,
    pub all_pass: bool,
}

impl Summary {
    pub fn new(command: &str, audits: Vec<AuditOutcome>) -> Self {
        let all_pass = audits.iter().all(|a| a.pass);
        Self {
            command: command.to_string(),
            audits,
            all_pass,
        }
    }

    pub fn write_json(&self, dir: &Path) -> io::Result<()> {
        let mut text = serde_json::to_string_pretty(self).expect("summary serializes");
        text.push('\n');
        std::fs::write(dir.join("audits.json"), text)
    }

    pub fn print(&self) {
        for a in &self.audits {
            let level = a
                .level
                .as_deref()
                .map(|l| format!(" [{l}]"))
                .unwrap_or_default();
            println!(
                "{}: {}{} (estimate {:.6e}, threshold {:.6e})",
                if a.pass { "PASS" } else { "FAIL" },
                a.name,
                level,
                a.estimate,
                a.threshold
            );
        }
        println!(
            "{}: {} of {} audits passed",
            if self.all_pass { "OK" } else { "FAILED" },
            self.audits.iter().filter(|a| a.pass).count(),
            self.audits.len()
        );
    }
}

/// Minimal CSV writer honoring the output contract.
pub struct Csv {
    buf: String,
    columns: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut buf = String::new();
        buf.push_str(&header.join(","));
        buf.push('\n');
        Self {
            buf,
            columns: header.len(),
        }
    }

    pub fn row(&mut self, fields: &[CsvField]) {
        assert_eq!(fields.len(), self.columns, "row width mismatch");
        for (i, f) in fields.iter().enumerate() {
            if i > 0 {
                self.buf.push(',');
            }
            match f {
                CsvField::Uint(v) => {
                    let _ = write!(self.buf, "{v}");
                }
                CsvField::Float(v) => {
                    let _ = write!(self.buf, "{v}");
                }
                CsvField::Str(v) => {
                    let _ = write!(self.buf, "{v}");
                }
                CsvField::Bool(v) => {
                    let _ = write!(self.buf, "{v}");
                }
            }
        }
        self.buf.push('\n');
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        std::fs::write(path, &self.buf)
    }
}

pub enum CsvField<'a> {
    Uint(u64),
    Float(f64),
    Str(&'a str),
    Bool(bool),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_formats_are_locale_free() {
        let mut csv = Csv::new(&["a", "b"]);
        csv.row(&[CsvField::Float(0.5), CsvField::Float(1e-9)]);
        csv.row(&[CsvField::Float(f64::NAN), CsvField::Uint(3)]);
        assert_eq!(csv.buf, "a,b\n0.5,0.000000001\nNaN,3\n");
    }
}
