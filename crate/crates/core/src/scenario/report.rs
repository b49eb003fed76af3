use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::divisor::{CrossCheck, Verdict, Witness, WitnessCheck};
use crate::function_spaces::{AtomicWitness, MultRow, ZeroLocation};
use crate::rational::{Rational, Sig12};
use crate::tdz::{ConvergenceTable, StrongCheck};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskStatus {
    Ok,
    Failed,
    Error,
}

impl std::fmt::Display for TaskStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TaskStatus::Ok => "ok",
            TaskStatus::Failed => "failed",
            TaskStatus::Error => "error",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictEntry {
    /// `left`, `right` or `zd`.
    pub question: String,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessEntry {
    pub witness: Witness,
    pub check: WitnessCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormEntry {
    pub n: u64,
    pub lower: Sig12,
    pub upper: Sig12,
    pub method: String,
}

/// Topological-divisor facts about a function on an atomic space or a grid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TdzSummary {
    pub is_tdz: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<ZeroLocation>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub zero_atoms: Vec<String>,
    /// `p(x) = x − alpha`.
    pub poly_alpha: Rational,
    pub poly_evidence: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub mult_rows: Vec<MultRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskReport {
    /// 1-based position in the task list.
    pub index: usize,
    pub line: usize,
    pub kind: String,
    pub status: TaskStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub verdicts: Vec<VerdictEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub witnesses: Vec<WitnessEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub atomic_witnesses: Vec<AtomicWitness>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub norms: Vec<NormEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cross_checks: Vec<CrossCheck>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tdz: Option<TdzSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strong_check: Option<StrongCheck>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tables: Vec<ConvergenceTable>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock_ms: Option<Sig12>,
}

impl TaskReport {
    pub(crate) fn new(index: usize, line: usize, kind: &str) -> Self {
        TaskReport {
            index,
            line,
            kind: kind.to_string(),
            status: TaskStatus::Ok,
            error: None,
            verdicts: Vec::new(),
            witnesses: Vec::new(),
            atomic_witnesses: Vec::new(),
            norms: Vec::new(),
            cross_checks: Vec::new(),
            tdz: None,
            strong_check: None,
            tables: Vec::new(),
            notes: Vec::new(),
            wall_clock_ms: None,
        }
    }

    /// Marks the task failed, keeping the first error status.
    pub(crate) fn fail(&mut self, reason: impl Into<String>) {
        if self.status == TaskStatus::Ok {
            self.status = TaskStatus::Failed;
        }
        self.notes.push(format!("FAILED: {}", reason.into()));
    }

    pub fn is_ok(&self) -> bool {
        self.status == TaskStatus::Ok
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub scenario: String,
    pub passed: bool,
    #[serde(default)]
    pub tasks: Vec<TaskReport>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    /// Human-readable text.
    Table,
    /// One CSV file per convergence table plus a task summary.
    Csv,
    /// TOML that [`parse_report`] reads back.
    Structured,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table" => Ok(Format::Table),
            "csv" => Ok(Format::Csv),
            "structured" | "toml" => Ok(Format::Structured),
            other => Err(format!("unknown format {other:?}; expected table, csv or structured")),
        }
    }
}

/// One output file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Emitted {
    pub name: String,
    pub content: String,
}

fn slug(s: &str) -> String {
    let mut out = String::new();
    for c in s.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('_') && !out.is_empty() {
            out.push('_');
        }
    }
    out.trim_end_matches('_').to_string()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn emit_report(report: &Report, format: Format) -> Vec<Emitted> {
    let id = slug(&report.scenario);
    match format {
        Format::Table => vec![Emitted {
            name: format!("{id}.txt"),
            content: render_text(report),
        }],
        Format::Structured => vec![Emitted {
            name: format!("{id}.toml"),
            content: toml::to_string(report).expect("reports are TOML-representable"),
        }],
        Format::Csv => {
            let mut summary = String::from("index,kind,status,question,verdict,rule,witness_verified\n");
            let mut files = Vec::new();
            for t in &report.tasks {
                let verified = |i: usize| {
                    t.witnesses
                        .get(i)
                        .map(|w| w.check.verified)
                        .or_else(|| t.atomic_witnesses.get(i).map(|w| w.verified))
                        .map(|v| v.to_string())
                        .unwrap_or_default()
                };
                if t.verdicts.is_empty() {
                    let _ = writeln!(summary, "{},{},{},,,,", t.index, t.kind, t.status);
                }
                let mut yes = 0;
                for v in &t.verdicts {
                    let w = if v.verdict.is_yes() {
                        yes += 1;
                        verified(yes - 1)
                    } else {
                        String::new()
                    };
                    let _ = writeln!(
                        summary,
                        "{},{},{},{},{},{},{}",
                        t.index,
                        t.kind,
                        t.status,
                        v.question,
                        v.verdict.status,
                        v.verdict.rule.map(|r| r.id()).unwrap_or_default(),
                        w
                    );
                }
                for (k, table) in t.tables.iter().enumerate() {
                    files.push(Emitted {
                        name: format!("{id}-task{}-{}-{}.csv", t.index, k + 1, slug(&table.label)),
                        content: table.to_csv(),
                    });
                }
                if !t.norms.is_empty() {
                    let mut c = String::from("n,lower,upper,method\n");
                    for e in &t.norms {
                        let _ = writeln!(c, "{},{},{},{}", e.n, e.lower, e.upper, csv_field(&e.method));
                    }
                    files.push(Emitted {
                        name: format!("{id}-task{}-norms.csv", t.index),
                        content: c,
                    });
                }
            }
            files.insert(
                0,
                Emitted {
                    name: format!("{id}-summary.csv"),
                    content: summary,
                },
            );
            files
        }
    }
}

pub fn parse_report(text: &str) -> Result<Report, toml::de::Error> {
    toml::from_str(text)
}

fn render_text(report: &Report) -> String {
    let mut out = format!(
        "scenario {}: {}\n",
        report.scenario,
        if report.passed { "all tasks ok" } else { "some tasks not ok" }
    );
    for t in &report.tasks {
        let _ = writeln!(out, "\ntask {} (line {}): {} [{}]", t.index, t.line, t.kind, t.status);
        if let Some(e) = &t.error {
            let _ = writeln!(out, "  error: {e}");
        }
        for v in &t.verdicts {
            let _ = writeln!(out, "  {:<5} {}", v.question, v.verdict);
        }
        for w in &t.witnesses {
            let _ = writeln!(out, "  witness {}", w.witness);
            let _ = writeln!(
                out,
                "    verified: {} (window {}, product zero {}, tail certificate {}){}",
                w.check.verified,
                w.check.window,
                w.check.product_zero,
                w.check.tail_certificate,
                w.check
                    .failing
                    .map(|(r, c)| format!(", first nonzero entry ({r}, {c})"))
                    .unwrap_or_default()
            );
        }
        for a in &t.atomic_witnesses {
            let _ = writeln!(
                out,
                "  witness: projection onto atom {} (preimage {{{}}}), verified: {}",
                a.atom,
                a.preimage.join(", "),
                a.verified
            );
        }
        if !t.norms.is_empty() {
            let _ = writeln!(out, "  {:>6}  {:>18}  {:>18}  method", "n", "lower", "upper");
            for e in &t.norms {
                let _ = writeln!(out, "  {:>6}  {:>18}  {:>18}  {}", e.n, e.lower.to_string(), e.upper.to_string(), e.method);
            }
        }
        for c in &t.cross_checks {
            let _ = writeln!(
                out,
                "  oracle {} n={} window={} {:?}: {}{}",
                c.side,
                c.n,
                c.window,
                c.expectation,
                if c.passed { "pass" } else { "FAIL" },
                c.failing_coordinate
                    .map(|k| format!(" at coordinate {k}"))
                    .unwrap_or_default()
            );
        }
        if let Some(s) = &t.tdz {
            let _ = writeln!(out, "  tdz: {}", s.is_tdz);
            if let Some(l) = &s.location {
                let _ = writeln!(out, "  zero at index {} (x = {}, exact {})", l.index, l.x, l.exact);
            }
            if !s.zero_atoms.is_empty() {
                let _ = writeln!(out, "  vanishes on atoms {{{}}}", s.zero_atoms.join(", "));
            }
            let _ = writeln!(out, "  p(x) = x - {}: p(h) is a TDZ: {}", s.poly_alpha, s.poly_evidence);
        }
        if let Some(c) = &t.strong_check {
            let _ = writeln!(
                out,
                "  TDZ implies strongly TDZ along the probes: {}{}",
                c.holds,
                c.threshold_reached_at
                    .map(|n| format!(" (threshold reached at n = {n})"))
                    .unwrap_or_default()
            );
            for v in &c.violations {
                let _ = writeln!(out, "    {v}");
            }
        }
        for table in &t.tables {
            for line in table.to_text().lines() {
                let _ = writeln!(out, "  {line}");
            }
        }
        for n in &t.notes {
            let _ = writeln!(out, "  note: {n}");
        }
        if let Some(ms) = t.wall_clock_ms {
            let _ = writeln!(out, "  wall clock: {ms} ms");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{parse_scenario, run};

    fn report(text: &str) -> Report {
        run(&parse_scenario(text).unwrap())
    }

    #[test]
    fn structured_form_round_trips() {
        for text in [
            include_str!("../../scenarios/right-collision.toml"),
            include_str!("../../scenarios/atomic-left.toml"),
            include_str!("../../scenarios/identity-strong.toml"),
        ] {
            let r = report(text);
            let emitted = emit_report(&r, Format::Structured);
            assert_eq!(parse_report(&emitted[0].content).unwrap(), r);
        }
    }

    #[test]
    fn table_rows_carry_rule_ids() {
        let r = report(include_str!("../../scenarios/right-collision.toml"));
        let text = &emit_report(&r, Format::Table)[0].content;
        assert!(text.lines().any(|l| l.contains("Yes") && l.contains("Thm-Anurag31")));
    }

    #[test]
    fn csv_has_one_file_per_table() {
        let r = report(include_str!("../../scenarios/diagonal-c0.toml"));
        let files = emit_report(&r, Format::Csv);
        let tables: usize = r.tasks.iter().map(|t| t.tables.len()).sum();
        assert_eq!(files.len(), tables + 1);
        assert!(files[1..].iter().all(|f| f.content.starts_with("n,value,bound,exact_zero\n")));
        assert!(files[0].content.starts_with("index,kind,status"));
    }

    #[test]
    fn csv_summary_marks_yes_verdicts_verified() {
        let r = report(include_str!("../../scenarios/atomic-left.toml"));
        let summary = &emit_report(&r, Format::Csv)[0].content;
        for line in summary.lines().filter(|l| l.contains(",Yes,")) {
            assert!(line.ends_with(",true"), "{line}");
        }
    }

    #[test]
    fn slugs_are_file_safe() {
        assert_eq!(slug("|T T_n x|, x = e1"), "t_t_n_x_x_e1");
    }
}
