//! Structured verification reports: a flat list of verdicts, witnesses and
//! info lines, rendered both human-readable and as line-delimited records.
//! Exit codes: 0 iff every verdict is true; 1 when some verdict is false or
//! vacuous; 2 is reserved for malformed input and never produced here.

use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerdictValue {
    True,
    False,
    Vacuous,
}

impl VerdictValue {
    pub fn from_bool(b: bool) -> Self {
        if b {
            VerdictValue::True
        } else {
            VerdictValue::False
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            VerdictValue::True => "true",
            VerdictValue::False => "false",
            VerdictValue::Vacuous => "vacuous",
        }
    }
}

#[derive(Debug, Clone)]
pub enum Record {
    Verdict { key: String, value: VerdictValue },
    Witness { key: String, text: String },
    Info { key: String, text: String },
}

#[derive(Debug, Clone, Default)]
pub struct Report {
    pub records: Vec<Record>,
}

impl Report {
    pub fn new() -> Self {
        Report::default()
    }

    pub fn verdict(&mut self, key: &str, value: bool) {
        self.records.push(Record::Verdict {
            key: key.to_string(),
            value: VerdictValue::from_bool(value),
        });
    }

    pub fn verdict_value(&mut self, key: &str, value: VerdictValue) {
        self.records.push(Record::Verdict { key: key.to_string(), value });
    }

    pub fn witness(&mut self, key: &str, text: impl Into<String>) {
        self.records.push(Record::Witness { key: key.to_string(), text: text.into() });
    }

    pub fn info(&mut self, key: &str, text: impl Into<String>) {
        self.records.push(Record::Info { key: key.to_string(), text: text.into() });
    }

    pub fn all_true(&self) -> bool {
        self.records.iter().all(|r| match r {
            Record::Verdict { value, .. } => *value == VerdictValue::True,
            _ => true,
        })
    }

    pub fn exit_code(&self) -> i32 {
        if self.all_true() {
            0
        } else {
            1
        }
    }

    /// Human-readable rendering.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            match r {
                Record::Verdict { key, value } => {
                    let _ = writeln!(out, "[{}] {}", value.as_str(), key);
                }
                Record::Witness { key, text } => {
                    let _ = writeln!(out, "  witness {}: {}", key, text);
                }
                Record::Info { key, text } => {
                    let _ = writeln!(out, "  {}: {}", key, text);
                }
            }
        }
        out
    }

    /// Machine-readable line records (one verdict per line), ending with the
    /// exit code.
    pub fn render_records(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            match r {
                Record::Verdict { key, value } => {
                    let _ = writeln!(out, "verdict {} {}", key, value.as_str());
                }
                Record::Witness { key, text } => {
                    let _ = writeln!(out, "witness {} {}", key, text);
                }
                Record::Info { key, text } => {
                    let _ = writeln!(out, "info {} {}", key, text);
                }
            }
        }
        let _ = writeln!(out, "exit {}", self.exit_code());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_verdicts() {
        let mut r = Report::new();
        r.verdict("a", true);
        assert_eq!(r.exit_code(), 0);
        r.verdict_value("b", VerdictValue::Vacuous);
        assert_eq!(r.exit_code(), 1);
        let mut r2 = Report::new();
        r2.verdict("a", false);
        r2.witness("a", "x y z");
        assert_eq!(r2.exit_code(), 1);
        assert!(r2.render_records().contains("verdict a false"));
        assert!(r2.render_records().ends_with("exit 1\n"));
    }
}
