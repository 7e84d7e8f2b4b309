//! Experiment reports: a `key = value` text file plus CSV series.

use std::fmt::Write as _;
use std::path::Path;

use crate::analysis::{AbsoluteConstants, BoundConstants, ConditionReport, InterpolantConstants};
use crate::error::Result;
use crate::schemes::{write_atomic, AtomicCsv};
use crate::spectral::write_snapshot;

pub const CSV_HEADER: [&str; 9] = [
    "step", "time", "norm_H", "norm_V", "norm_DA", "err_H", "err_V", "envelope_H", "envelope_V",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    /// Hypotheses not met; the check was not run.
    Skipped,
}

impl Status {
    pub fn from_bool(pass: bool) -> Self {
        if pass {
            Self::Pass
        } else {
            Self::Fail
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Pass => "PASS",
            Self::Fail => "FAIL",
            Self::Skipped => "SKIP",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Criterion {
    pub name: String,
    pub status: Status,
    pub detail: String,
}

/// One CSV row; unavailable quantities are NaN.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesRow {
    pub step: usize,
    pub time: f64,
    pub norm_h: f64,
    pub norm_v: f64,
    pub norm_da: f64,
    pub err_h: f64,
    pub err_v: f64,
    pub envelope_h: f64,
    pub envelope_v: f64,
}

impl SeriesRow {
    pub fn new(step: usize, time: f64) -> Self {
        Self {
            step,
            time,
            norm_h: f64::NAN,
            norm_v: f64::NAN,
            norm_da: f64::NAN,
            err_h: f64::NAN,
            err_v: f64::NAN,
            envelope_h: f64::NAN,
            envelope_v: f64::NAN,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SeriesTable {
    /// File stem of the CSV.
    pub name: String,
    pub rows: Vec<SeriesRow>,
}

impl SeriesTable {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            rows: Vec::new(),
        }
    }
}

/// Constants and conditions behind every number of a report.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantsBlock {
    pub absolute: AbsoluteConstants,
    pub bounds: BoundConstants,
    pub interpolant: InterpolantConstants,
    pub conditions: ConditionReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub name: String,
    pub seed: u64,
    pub scheme: String,
    /// Absent only for self-checks that involve no physical configuration.
    pub constants: Option<ConstantsBlock>,
    /// Fitted rates, slopes and other measured values, in insertion order.
    pub values: Vec<(String, f64)>,
    pub notes: Vec<String>,
    pub criteria: Vec<Criterion>,
    pub series: Vec<SeriesTable>,
    /// States dumped for inspection, written as snapshots.
    pub snapshots: Vec<(String, crate::spectral::SpectralField)>,
}

impl ExperimentReport {
    pub fn new(name: impl Into<String>, seed: u64, scheme: impl Into<String>, constants: Option<ConstantsBlock>) -> Self {
        Self {
            name: name.into(),
            seed,
            scheme: scheme.into(),
            constants,
            values: Vec::new(),
            notes: Vec::new(),
            criteria: Vec::new(),
            series: Vec::new(),
            snapshots: Vec::new(),
        }
    }

    pub fn value(&mut self, key: impl Into<String>, v: f64) {
        self.values.push((key.into(), v));
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.values.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn criterion(&mut self, name: impl Into<String>, status: Status, detail: impl Into<String>) {
        self.criteria.push(Criterion {
            name: name.into(),
            status,
            detail: detail.into(),
        });
    }

    pub fn check(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.criterion(name, Status::from_bool(pass), detail);
    }

    pub fn criterion_status(&self, name: &str) -> Option<Status> {
        self.criteria.iter().find(|c| c.name == name).map(|c| c.status)
    }

    /// No criterion failed; skipped criteria are not enabled.
    pub fn passed(&self) -> bool {
        self.criteria.iter().all(|c| c.status != Status::Fail)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[experiment]");
        let _ = writeln!(s, "name = {}", self.name);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "scheme = {}", self.scheme);
        let _ = writeln!(s, "passed = {}", self.passed());
        if let Some(block) = &self.constants {
            let _ = writeln!(s, "\n[absolute_constants]");
            let a = &block.absolute;
            for (k, v) in [
                ("c_beta", a.c_beta),
                ("c4", a.c4),
                ("c_tail", a.c_tail),
                ("c_alpha", a.c_alpha),
                ("alpha", a.alpha),
            ] {
                let _ = writeln!(s, "{k} = {v:e}");
            }
            let _ = writeln!(s, "\n[bound_constants]");
            for (k, v) in block.bounds.entries() {
                let _ = writeln!(s, "{k} = {v:e}");
            }
            let _ = writeln!(s, "\n[interpolant_constants]");
            let _ = writeln!(s, "c0 = {:e}", block.interpolant.c0);
            let _ = writeln!(s, "c_minus1 = {:e}", block.interpolant.c_minus1);
            let _ = writeln!(s, "\n[conditions]");
            for c in &block.conditions.checks {
                let _ = writeln!(
                    s,
                    "{} = {:e} {} {:e} ({})",
                    c.name,
                    c.lhs,
                    c.relation,
                    c.rhs,
                    if c.pass { "holds" } else { "violated" }
                );
            }
        }
        let _ = writeln!(s, "\n[values]");
        for (k, v) in &self.values {
            let _ = writeln!(s, "{k} = {v:e}");
        }
        let _ = writeln!(s, "\n[criteria]");
        for c in &self.criteria {
            let _ = writeln!(s, "{} = {} ; {}", c.name, c.status.label(), c.detail);
        }
        if !self.series.is_empty() || !self.snapshots.is_empty() {
            let _ = writeln!(s, "\n[files]");
            for t in &self.series {
                let _ = writeln!(s, "{} = {}.csv", t.name, t.name);
            }
            for (name, _) in &self.snapshots {
                let _ = writeln!(s, "{name} = {name}.nnsf");
            }
        }
        if !self.notes.is_empty() {
            let _ = writeln!(s, "\n[notes]");
            for (i, n) in self.notes.iter().enumerate() {
                let _ = writeln!(s, "note{i} = {n}");
            }
        }
        s
    }

    /// One line per criterion.
    pub fn summary_lines(&self) -> Vec<String> {
        self.criteria
            .iter()
            .map(|c| format!("[{}] {}: {}", c.status.label(), c.name, c.detail))
            .collect()
    }
}

fn fmt_num(v: f64) -> String {
    format!("{v:.17e}")
}

pub fn write_series_csv(table: &SeriesTable, path: &Path) -> Result<()> {
    let mut csv = AtomicCsv::create(path)?;
    csv.write_record(CSV_HEADER)?;
    for r in &table.rows {
        csv.write_record([
            r.step.to_string(),
            fmt_num(r.time),
            fmt_num(r.norm_h),
            fmt_num(r.norm_v),
            fmt_num(r.norm_da),
            fmt_num(r.err_h),
            fmt_num(r.err_v),
            fmt_num(r.envelope_h),
            fmt_num(r.envelope_v),
        ])?;
    }
    csv.finish()
}

/// Writes `report.txt` and one CSV per series into `dir`, each atomically.
pub fn write_report(report: &ExperimentReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for t in &report.series {
        write_series_csv(t, &dir.join(format!("{}.csv", t.name)))?;
    }
    for (name, field) in &report.snapshots {
        let mut bytes = Vec::new();
        write_snapshot(&mut bytes, field, f64::INFINITY)?;
        write_atomic(&dir.join(format!("{name}.nnsf")), &bytes)?;
    }
    write_atomic(&dir.join("report.txt"), report.to_text().as_bytes())
}
