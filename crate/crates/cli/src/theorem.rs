//! Randomized check of the Blackboard guarantee: on simulated runs that meet
//! every premise and the activation assumption, the original problem is solved.

use archtrace_core::constraints::{Mode, TraceAssertion, VerdictValue};
use archtrace_core::interface::check_spec_interpretation;
use archtrace_dsl::{print_unit, Bundle};
use serde::Serialize;

use crate::blackboard::{ASSUMPTION_UNIT, GUARANTEE_UNIT};
use crate::check::{check_assertion, AssertionResult, CheckOptions};
use crate::sim::{simulate, Mutation, Scenario};

pub const MAX_PROBLEMS: usize = 6;
pub const MAX_DEPTH: usize = 3;

#[derive(Clone, Debug)]
pub struct TheoremOptions {
    pub trials: usize,
    pub seed: u64,
    pub horizon: usize,
    pub mutation: Option<Mutation>,
    pub max_assignments: u128,
}

#[derive(Clone, Debug, Serialize)]
pub struct Trial {
    pub seed: u64,
    pub problems: usize,
    pub sources: usize,
    pub steps: usize,
    pub root_solved: bool,
    pub warnings: Vec<String>,
    /// Interface assertions and port typing of the interpretation.
    pub interpretation: Vec<String>,
    pub premises: Vec<AssertionResult>,
    pub assumption: Vec<AssertionResult>,
    /// Present only when the assumption holds.
    pub guarantee: Option<Vec<AssertionResult>>,
}

fn all_satisfied(rs: &[AssertionResult]) -> bool {
    rs.iter().all(|r| r.verdict == VerdictValue::Satisfied)
}

impl Trial {
    pub fn premises_hold(&self) -> bool {
        self.interpretation.is_empty() && all_satisfied(&self.premises)
    }

    pub fn premise_violated(&self) -> bool {
        !self.interpretation.is_empty() || self.premises.iter().any(|r| r.verdict == VerdictValue::Violated)
    }

    pub fn assumption_holds(&self) -> bool {
        all_satisfied(&self.assumption)
    }

    pub fn guarantee_holds(&self) -> bool {
        self.guarantee.as_deref().is_some_and(all_satisfied)
    }

    /// What the trial was meant to show did not happen.
    pub fn failed(&self, mutation: Option<Mutation>) -> bool {
        match mutation {
            None => !(self.premises_hold() && self.assumption_holds() && self.guarantee_holds()),
            Some(_) => !self.premise_violated(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Failure {
    pub seed: u64,
    pub reasons: Vec<String>,
    pub trace: String,
    pub algebra: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct TheoremReport {
    pub mutation: Option<Mutation>,
    pub trials: usize,
    pub premises_satisfied: usize,
    pub premise_violated: usize,
    pub assumption_satisfied: usize,
    pub guarantee_satisfied: usize,
    pub failures: Vec<Failure>,
    pub runs: Vec<Trial>,
}

impl TheoremReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn render_human(&self) -> String {
        let mut out = String::new();
        let what = match self.mutation {
            None => "unmodified".to_string(),
            Some(m) => format!("mutation {m}"),
        };
        out.push_str(&format!("{} trials, {what}\n", self.trials));
        out.push_str(&format!("premises satisfied: {}/{}\n", self.premises_satisfied, self.trials));
        out.push_str(&format!("premise violated: {}/{}\n", self.premise_violated, self.trials));
        out.push_str(&format!("assumption satisfied: {}/{}\n", self.assumption_satisfied, self.trials));
        out.push_str(&format!("guarantee satisfied: {}/{}\n", self.guarantee_satisfied, self.trials));
        for f in &self.failures {
            out.push_str(&format!("\nFAILED seed {}\n", f.seed));
            for r in &f.reasons {
                out.push_str(&format!("  {r}\n"));
            }
            out.push_str(&f.algebra);
            out.push_str(&f.trace);
        }
        out.push_str(if self.passed() { "PASSED\n" } else { "FAILED\n" });
        out
    }
}

/// Premise, assumption and guarantee assertions of a bundle that includes the
/// assumption and guarantee units.
pub fn split_assertions(bundle: &Bundle) -> (Vec<TraceAssertion>, Vec<TraceAssertion>, Vec<TraceAssertion>) {
    let mut premises = Vec::new();
    let mut assumption = Vec::new();
    let mut guarantee = Vec::new();
    for a in bundle.all_assertions() {
        let unit = a.label.split(':').next().unwrap_or_default().to_string();
        if unit == ASSUMPTION_UNIT {
            assumption.push(a);
        } else if unit == GUARANTEE_UNIT {
            guarantee.push(a);
        } else {
            premises.push(a);
        }
    }
    (premises, assumption, guarantee)
}

fn reasons(t: &Trial, mutation: Option<Mutation>) -> Vec<String> {
    let mut out: Vec<String> = t.interpretation.clone();
    let mut bad = |group: &str, rs: &[AssertionResult]| {
        for r in rs.iter().filter(|r| r.verdict != VerdictValue::Satisfied) {
            let why = r.explanation.as_deref().unwrap_or("");
            out.push(format!("{group} {} {} {why}", r.label, r.verdict).trim_end().to_string());
        }
    };
    bad("premise", &t.premises);
    bad("assumption", &t.assumption);
    if let Some(g) = &t.guarantee {
        bad("guarantee", g);
    }
    if mutation.is_some() && !t.premise_violated() {
        out.push("the mutation went unnoticed: no premise is violated".into());
    }
    out
}

/// Runs `trials` simulations with seeds `seed, seed + 1, ...`. Everything is
/// checked in closed mode, since each run ends in a settled state.
pub fn verify(bundle: &Bundle, opts: &TheoremOptions) -> Result<TheoremReport, String> {
    if opts.trials == 0 {
        return Err("trials must be at least 1".into());
    }
    let (premises, assumption, guarantee) = split_assertions(bundle);
    if assumption.is_empty() || guarantee.is_empty() {
        return Err("the bundle has no assumption or no guarantee unit".into());
    }
    let copts = CheckOptions { mode: Mode::Closed, max_assignments: opts.max_assignments };
    let mut report = TheoremReport {
        mutation: opts.mutation,
        trials: opts.trials,
        premises_satisfied: 0,
        premise_violated: 0,
        assumption_satisfied: 0,
        guarantee_satisfied: 0,
        failures: vec![],
        runs: vec![],
    };
    for i in 0..opts.trials {
        let seed = opts.seed.wrapping_add(i as u64);
        let scenario = Scenario::random(seed, MAX_PROBLEMS, MAX_DEPTH, opts.horizon);
        let sim = simulate(&scenario, opts.mutation);
        let (alg, trace, j) = sim.load(bundle).map_err(|d| {
            let msgs: Vec<String> = d.iter().map(|d| d.to_string()).collect();
            format!("seed {seed}: simulated run does not load: {}", msgs.join("; "))
        })?;
        let run = |xs: &[TraceAssertion]| -> Vec<AssertionResult> {
            xs.iter().map(|a| check_assertion(&alg, &j, &trace, a, &copts)).collect()
        };
        let mut t = Trial {
            seed,
            problems: scenario.problems().len(),
            sources: scenario.sources().len(),
            steps: trace.len(),
            root_solved: sim.root_solved,
            warnings: sim.warnings.clone(),
            interpretation: check_spec_interpretation(&alg, &bundle.interfaces, &j)
                .iter()
                .map(|v| v.to_string())
                .collect(),
            premises: run(&premises),
            assumption: run(&assumption),
            guarantee: None,
        };
        if t.assumption_holds() {
            t.guarantee = Some(run(&guarantee));
        }
        report.premises_satisfied += t.premises_hold() as usize;
        report.premise_violated += t.premise_violated() as usize;
        report.assumption_satisfied += t.assumption_holds() as usize;
        report.guarantee_satisfied += t.guarantee_holds() as usize;
        if t.failed(opts.mutation) {
            report.failures.push(Failure {
                seed,
                reasons: reasons(&t, opts.mutation),
                trace: print_unit(&sim.trace),
                algebra: print_unit(&sim.algebra),
            });
        }
        report.runs.push(t);
    }
    Ok(report)
}
