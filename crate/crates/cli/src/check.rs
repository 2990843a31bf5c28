//! Conformance of a trace and an algebra against a resolved bundle.

use std::fmt::Write;

use archtrace_core::algebra::{failing_axioms, Algebra};
use archtrace_core::constraints::{check_trace_assertion, Mode, TraceAssertion, VerdictValue};
use archtrace_core::interface::{check_spec_interpretation, SpecInterpretation};
use archtrace_core::model::ConfigurationTrace;
use archtrace_dsl::Bundle;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Satisfied,
    Violated,
    Inconclusive,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Satisfied => 0,
            Status::Violated => 1,
            Status::Inconclusive => 2,
        }
    }
}

/// Exit code for usage and parse errors.
pub const EXIT_USAGE: i32 = 3;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Phase {
    pub name: &'static str,
    pub ok: bool,
    pub messages: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AssertionResult {
    pub label: String,
    pub verdict: VerdictValue,
    pub witness: Option<usize>,
    pub assignment: Vec<(String, String)>,
    pub explanation: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CheckReport {
    pub mode: Mode,
    pub steps: usize,
    pub phases: Vec<Phase>,
    pub assertions: Vec<AssertionResult>,
    pub notes: Vec<String>,
    pub status: Status,
}

pub struct CheckOptions {
    pub mode: Mode,
    pub max_assignments: u128,
}

/// Verdict of one assertion; evaluation errors are reported as inconclusive.
pub fn check_assertion(
    alg: &Algebra,
    j: &SpecInterpretation,
    trace: &ConfigurationTrace,
    a: &TraceAssertion,
    opts: &CheckOptions,
) -> AssertionResult {
    match check_trace_assertion(alg, j, trace, a, opts.mode, opts.max_assignments) {
        Ok(v) => AssertionResult {
            label: a.label.clone(),
            verdict: v.value,
            witness: v.witness,
            assignment: v.assignment,
            explanation: v.explanation,
        },
        Err(e) => AssertionResult {
            label: a.label.clone(),
            verdict: VerdictValue::Inconclusive,
            witness: None,
            assignment: vec![],
            explanation: Some(format!("not evaluated: {e}")),
        },
    }
}

/// Runs the phases in order: the algebra against the datatype axioms, the
/// trace against the snapshot model, the interpretation against the interface
/// assertions, then every constraint and diagram assertion.
pub fn check(
    bundle: &Bundle,
    alg: &Algebra,
    trace: &ConfigurationTrace,
    j: &SpecInterpretation,
    assertions: &[TraceAssertion],
    opts: &CheckOptions,
) -> CheckReport {
    let mut phases = Vec::new();
    let datatype = match failing_axioms(alg, &bundle.datatype) {
        Ok(fails) => fails
            .into_iter()
            .map(|f| {
                let asg: Vec<String> = f.assignment.iter().map(|(v, x)| format!("{v} = {x}")).collect();
                if asg.is_empty() {
                    format!("axiom {} fails", f.label)
                } else {
                    format!("axiom {} fails at {}", f.label, asg.join(", "))
                }
            })
            .collect(),
        Err(e) => vec![format!("axioms not evaluated: {e}")],
    };
    phases.push(Phase { name: "datatype", ok: datatype.is_empty(), messages: datatype });

    let mut universe = trace.universe();
    for s in j.universe().snapshots() {
        universe.insert(s.clone());
    }
    let config: Vec<String> = trace.check_trace(&universe).violations.iter().map(|v| v.to_string()).collect();
    phases.push(Phase { name: "configuration", ok: config.is_empty(), messages: config });

    let interp: Vec<String> =
        check_spec_interpretation(alg, &bundle.interfaces, j).iter().map(|v| v.to_string()).collect();
    phases.push(Phase { name: "interpretation", ok: interp.is_empty(), messages: interp });

    let results: Vec<AssertionResult> = assertions.iter().map(|a| check_assertion(alg, j, trace, a, opts)).collect();
    let status = if phases.iter().any(|p| !p.ok) || results.iter().any(|r| r.verdict == VerdictValue::Violated) {
        Status::Violated
    } else if results.iter().any(|r| r.verdict == VerdictValue::Inconclusive) {
        Status::Inconclusive
    } else {
        Status::Satisfied
    };
    CheckReport {
        mode: opts.mode,
        steps: trace.len(),
        phases,
        assertions: results,
        notes: bundle.notes.clone(),
        status,
    }
}

impl CheckReport {
    pub fn render_human(&self) -> String {
        let mut out = String::new();
        let mode = match self.mode {
            Mode::Open => "open",
            Mode::Closed => "closed",
        };
        let _ = writeln!(out, "trace of {} steps, {mode} mode", self.steps);
        for p in &self.phases {
            let _ = writeln!(out, "{}: {}", p.name, if p.ok { "ok" } else { "failed" });
            for m in &p.messages {
                let _ = writeln!(out, "  {m}");
            }
        }
        for a in &self.assertions {
            let _ = write!(out, "{}: {}", a.label, a.verdict);
            if a.verdict == VerdictValue::Satisfied {
                out.push('\n');
                continue;
            }
            if let Some(w) = a.witness {
                let _ = write!(out, " at step {w}");
            }
            if !a.assignment.is_empty() {
                let asg: Vec<String> = a.assignment.iter().map(|(v, x)| format!("{v} = {x}")).collect();
                let _ = write!(out, " with {}", asg.join(", "));
            }
            if let Some(e) = &a.explanation {
                let _ = write!(out, " ({e})");
            }
            out.push('\n');
        }
        for n in &self.notes {
            let _ = writeln!(out, "note: {n}");
        }
        let status = match self.status {
            Status::Satisfied => "SATISFIED",
            Status::Violated => "VIOLATED",
            Status::Inconclusive => "INCONCLUSIVE",
        };
        let _ = writeln!(out, "{status}");
        out
    }

    pub fn render_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn verdict(&self, label: &str) -> Option<VerdictValue> {
        self.assertions.iter().find(|a| a.label == label).map(|a| a.verdict)
    }
}
