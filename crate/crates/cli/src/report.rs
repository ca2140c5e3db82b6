use std::io::Write;

use serde::Serialize;

/// One pass/fail line. Every record names the identity or property it certifies.
#[derive(Debug, Clone, Serialize)]
pub struct Record {
    pub name: String,
    pub anchor: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<serde_json::Value>,
}

impl Record {
    fn new(name: impl Into<String>, anchor: &str) -> Self {
        assert!(!anchor.trim().is_empty(), "records must carry an anchor");
        Self { name: name.into(), anchor: anchor.to_string(), residual: None, verdict: None, tolerance: None, pass: false, detail: None }
    }

    /// `residual ≤ tolerance`.
    pub fn below(name: impl Into<String>, anchor: &str, residual: f64, tolerance: f64) -> Self {
        let pass = residual <= tolerance;
        Self { residual: Some(residual), tolerance: Some(tolerance), pass, ..Self::new(name, anchor) }
    }

    /// `residual ≥ tolerance`, for negative controls that must stay visibly large.
    pub fn above(name: impl Into<String>, anchor: &str, residual: f64, tolerance: f64) -> Self {
        let pass = residual >= tolerance;
        Self { residual: Some(residual), tolerance: Some(tolerance), pass, ..Self::new(name, anchor) }
    }

    pub fn verdict(name: impl Into<String>, anchor: &str, verdict: impl Into<String>, pass: bool) -> Self {
        Self { verdict: Some(verdict.into()), pass, ..Self::new(name, anchor) }
    }

    pub fn with_detail(mut self, detail: impl Serialize) -> Self {
        self.detail = Some(serde_json::to_value(detail).expect("serializable detail"));
        self
    }

    /// Replace the tolerance of a `below` record and re-judge.
    fn retolerance(&mut self, tol: f64) {
        if let (Some(r), Some(_)) = (self.residual, self.tolerance) {
            self.tolerance = Some(tol);
            self.pass = r <= tol;
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Sequence {
    pub name: String,
    pub first_degree: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report<C: Serialize> {
    pub command: String,
    pub config: C,
    pub records: Vec<Record>,
    pub sequences: Vec<Sequence>,
    pub summary: Summary,
}

/// Accumulates records before the report is sealed.
#[derive(Debug, Default)]
pub struct Collector {
    records: Vec<(Record, bool)>,
    sequences: Vec<Sequence>,
}

impl Collector {
    pub fn push(&mut self, r: Record) {
        self.records.push((r, true));
    }

    /// A negative control judged by `residual ≥ tolerance`.
    pub fn push_control(&mut self, r: Record) {
        self.records.push((r, false));
    }

    pub fn sequence(&mut self, name: impl Into<String>, first_degree: usize, values: Vec<f64>) {
        self.sequences.push(Sequence { name: name.into(), first_degree, values });
    }

    pub fn seal<C: Serialize>(self, command: &str, config: C, tol: Option<f64>) -> Report<C> {
        let records: Vec<Record> = self
            .records
            .into_iter()
            .map(|(mut r, overridable)| {
                if let (Some(t), true) = (tol, overridable) {
                    r.retolerance(t);
                }
                r
            })
            .collect();
        let passed = records.iter().filter(|r| r.pass).count();
        let summary = Summary { total: records.len(), passed, failed: records.len() - passed };
        Report { command: command.to_string(), config, records, sequences: self.sequences, summary }
    }
}

impl<C: Serialize> Report<C> {
    pub fn all_pass(&self) -> bool {
        self.summary.failed == 0
    }

    pub fn write_json(&self, out: &mut dyn Write) -> std::io::Result<()> {
        serde_json::to_writer_pretty(&mut *out, self)?;
        writeln!(out)
    }

    /// Sequence export with columns `sequence, degree, value`.
    pub fn write_csv(&self, out: &mut dyn Write) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["sequence", "degree", "value"])?;
        for s in &self.sequences {
            for (k, v) in s.values.iter().enumerate() {
                w.write_record([s.name.clone(), (s.first_degree + k).to_string(), format!("{v:e}")])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// One line per record on stderr.
    pub fn print_summary(&self) {
        for r in &self.records {
            let value = match (&r.residual, &r.verdict) {
                (Some(x), _) => format!("{x:.3e}"),
                (None, Some(v)) => v.clone(),
                _ => String::new(),
            };
            eprintln!("{} {:<44} {}", if r.pass { "PASS" } else { "FAIL" }, r.name, value);
        }
        eprintln!("{}: {} passed, {} failed", self.command, self.summary.passed, self.summary.failed);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_override_rejudges() {
        let mut c = Collector::default();
        c.push(Record::below("a", "x = y", 1e-12, 1e-8));
        c.push_control(Record::above("b", "x ≠ y", 1.0, 1e-4));
        let r = c.seal("t", (), Some(1e-15));
        assert!(!r.records[0].pass);
        assert!(r.records[1].pass);
        assert_eq!(r.summary.failed, 1);
    }

    #[test]
    #[should_panic(expected = "anchor")]
    fn anchorless_record_rejected() {
        let _ = Record::below("a", " ", 0.0, 1.0);
    }
}
