//! Acceptance run: one line per criterion with its measured time and limit.

#[path = "../../core/tests/support/mod.rs"]
mod core_support;
#[path = "../../dsl/tests/support/mod.rs"]
mod dsl_support;

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use archtrace_cli::blackboard;
use archtrace_cli::sim::Mutation;
use archtrace_cli::theorem::{verify, TheoremOptions};
use archtrace_core::constraints::{check_trace_assertion, trace_holds, Mode, VerdictValue, DEFAULT_MAX_ASSIGNMENTS};
use archtrace_core::diagrams::{check_full_homomorphism, desugar_minmax, desugar_required_conn, desugar_rigid};
use archtrace_core::fixtures::{component_c2, configuration_k0, trace_k0_k2};
use archtrace_core::model::{ArchConfiguration, ComponentUniverse, ViolationKind};
use archtrace_core::value::Value;
use archtrace_dsl::{parse_unit, print_unit};
use core_support::*;
use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::TestRunner;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome { ok, detail: detail.into() }
}

fn sample<S: Strategy>(s: &S, runner: &mut TestRunner) -> S::Value {
    s.new_tree(runner).expect("strategy yields a value").current()
}

fn verdict(x: Option<bool>) -> VerdictValue {
    match x {
        Some(true) => VerdictValue::Satisfied,
        Some(false) => VerdictValue::Violated,
        None => VerdictValue::Inconclusive,
    }
}

#[derive(Default)]
struct Tally(BTreeMap<String, usize>);

impl Tally {
    fn add(&mut self, v: VerdictValue) {
        *self.0.entry(format!("{v:?}").to_lowercase()).or_default() += 1;
    }

    fn show(&self) -> String {
        self.0.iter().map(|(k, n)| format!("{k}={n}")).collect::<Vec<_>>().join(" ")
    }
}

fn fixtures() -> Outcome {
    let c2 = ComponentUniverse::new([component_c2()]);
    let (u3, k0) = configuration_k0();
    let (u4, t) = trace_k0_k2();
    let counts = [
        c2.check_healthy().violations.len(),
        u3.check_healthy().violations.len(),
        k0.check_configuration(&u3).violations.len(),
        u4.check_healthy().violations.len(),
        t.check_trace(&u4).violations.len(),
    ];
    if counts.iter().any(|&n| n != 0) {
        return outcome(false, format!("violations on fixtures: {counts:?}"));
    }
    let bad = component_c2().with_value("i1", Arc::new([Value::atom("B")].into())).unwrap();
    let active: Vec<_> = k0.active().iter().map(|s| if s.id() == "c2" { bad.clone() } else { s.clone() }).collect();
    let mutated = ArchConfiguration::new(active.clone(), k0.connections().clone());
    let r = mutated.check_configuration(&ComponentUniverse::new(active));
    let hit = matches!(
        r.violations.as_slice(),
        [v] if matches!(&v.kind, ViolationKind::Inconsistent { id, port, .. } if id == "c2" && port == "i1")
    );
    let shown: Vec<String> = r.violations.iter().map(|v| v.to_string()).collect();
    outcome(hit, format!("fixtures clean; mutation gives {} violation(s): {}", shown.len(), shown.join("; ")))
}

fn healthy_subsets() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut failures = 0;
    for _ in 0..1000 {
        let snaps = healthy_universe(&mut rng, 8, 5);
        if !ComponentUniverse::new(snaps.clone()).check_healthy().is_ok() {
            failures += 1;
            continue;
        }
        let sub = snaps.into_iter().filter(|_| rng.gen_bool(0.5));
        if !ComponentUniverse::new(sub).check_healthy().is_ok() {
            failures += 1;
        }
    }
    outcome(failures == 0, format!("1000 universes, {failures} unhealthy subsets"))
}

fn expansion_agreement() -> Outcome {
    let mut runner = TestRunner::deterministic();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let strategy = trace_formula(4);
    let (mut checked, mut wrong) = (0usize, Vec::new());
    let mut tally = Tally::default();
    for _ in 0..500 {
        let f = sample(&strategy, &mut runner);
        let w = random_world(&mut rng, 1, 4, 3, 5, None);
        for env in environments(&w) {
            for mode in [Mode::Open, Mode::Closed] {
                let reference = Expansion { alg: &w.alg, j: &w.j, steps: w.trace.steps(), mode };
                for n in 0..w.trace.len() {
                    let got = trace_holds(&w.alg, &w.j, &env, &w.trace, n, &f, mode).map(|v| v.value);
                    let want = verdict(reference.eval(&f, n, &env));
                    checked += 1;
                    match got {
                        Ok(v) if v == want => tally.add(v),
                        other => wrong.push(format!("{f} at {n} in {mode:?}: {other:?} vs {want:?}")),
                    }
                }
            }
        }
    }
    let first = wrong.first().map(|s| format!(": {s}")).unwrap_or_default();
    outcome(
        wrong.is_empty(),
        format!("500 formulas, {checked} evaluations ({}), {} mismatches{first}", tally.show(), wrong.len()),
    )
}

fn desugaring() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut wrong = Vec::new();
    let mut tally = Tally::default();
    for i in 0..200 {
        let n = rng.gen_range(1..=3);
        let (got, want) = match i % 3 {
            0 => {
                let ann = random_minmax(&mut rng, n);
                let w = random_world(&mut rng, n, 4, 2, 5, None);
                let v = check_trace_assertion(
                    &w.alg,
                    &w.j,
                    &w.trace,
                    &desugar_minmax(&ann),
                    Mode::Closed,
                    DEFAULT_MAX_ASSIGNMENTS,
                );
                (v.map(|v| v.value), minmax_direct(&w, &ann))
            }
            1 => {
                let ann = random_rigid(&mut rng, n);
                let w = random_world(&mut rng, n, 4, 2, 5, None);
                let a = desugar_rigid(&ann).unwrap();
                let v = check_trace_assertion(&w.alg, &w.j, &w.trace, &a, Mode::Closed, DEFAULT_MAX_ASSIGNMENTS);
                (v.map(|v| v.value), rigid_direct(&w, &ann))
            }
            _ => {
                let ann = random_required(&mut rng, n);
                let w = random_world(&mut rng, n, 4, 2, 5, Some(&ann));
                let a = desugar_required_conn(&ann, &w.spec).unwrap();
                let v = check_trace_assertion(&w.alg, &w.j, &w.trace, &a, Mode::Closed, DEFAULT_MAX_ASSIGNMENTS);
                (v.map(|v| v.value), check_full_homomorphism(&w.trace, &ann, &w.spec, &w.j).unwrap())
            }
        };
        match got {
            Ok(v) if (v == VerdictValue::Satisfied) == want && v != VerdictValue::Inconclusive => tally.add(v),
            other => wrong.push(format!("annotation {i}: {other:?} vs direct {want}")),
        }
    }
    let first = wrong.first().map(|s| format!(": {s}")).unwrap_or_default();
    outcome(wrong.is_empty(), format!("200 annotations ({}), {} mismatches{first}", tally.show(), wrong.len()))
}

fn open_monotonicity() -> Outcome {
    let mut runner = TestRunner::deterministic();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let strategy = trace_formula(4);
    let (mut finals, mut revised) = (0usize, Vec::new());
    for _ in 0..500 {
        let f = sample(&strategy, &mut runner);
        let w = random_world(&mut rng, 1, 4, 3, 6, None);
        let cut = rng.gen_range(1..=w.trace.len());
        let prefix = w.trace.prefix(cut).unwrap();
        for env in environments(&w) {
            let before = trace_holds(&w.alg, &w.j, &env, &prefix, 0, &f, Mode::Open).unwrap();
            if !before.is_final() {
                continue;
            }
            finals += 1;
            let after = trace_holds(&w.alg, &w.j, &env, &w.trace, 0, &f, Mode::Open).unwrap();
            if after.value != before.value {
                revised.push(format!("{f}: {:?} became {:?}", before.value, after.value));
            }
        }
    }
    let first = revised.first().map(|s| format!(": {s}")).unwrap_or_default();
    outcome(revised.is_empty(), format!("500 triples, {finals} final verdicts, {} revised{first}", revised.len()))
}

fn theorem() -> Outcome {
    let (bundle, diags) = blackboard::theorem();
    let Some(bundle) = bundle else {
        return outcome(false, format!("bundle does not resolve: {diags:?}"));
    };
    let opts = |mutation| TheoremOptions {
        trials: 100,
        seed: 0,
        horizon: 50,
        mutation,
        max_assignments: DEFAULT_MAX_ASSIGNMENTS,
    };
    let mut parts = Vec::new();
    let mut ok = true;
    match verify(&bundle, &opts(None)) {
        Ok(r) => {
            ok &= r.premises_satisfied == 100 && r.guarantee_satisfied == 100 && r.passed();
            parts.push(format!(
                "premises {}/100, assumption {}/100, guarantee {}/100",
                r.premises_satisfied, r.assumption_satisfied, r.guarantee_satisfied
            ));
        }
        Err(e) => return outcome(false, e),
    }
    for m in [Mutation::NoForwarding, Mutation::NoActivation] {
        match verify(&bundle, &opts(Some(m))) {
            Ok(r) => {
                ok &= r.premise_violated == 100;
                parts.push(format!("{m}: premise violated {}/100", r.premise_violated));
            }
            Err(e) => return outcome(false, e),
        }
    }
    outcome(ok, parts.join("; "))
}

fn dsl() -> Outcome {
    let mut runner = TestRunner::deterministic();
    let mut bad = Vec::new();
    for kind in dsl_support::KINDS {
        let s = dsl_support::unit(kind);
        for _ in 0..300 {
            let u = sample(&s, &mut runner);
            let text = print_unit(&u);
            match parse_unit(&text) {
                (Some(p), d) if d.is_empty() && p.unit == u => {}
                (_, d) => bad.push(format!("{kind:?}: {d:?}")),
            }
        }
    }
    let (bundle, diags) = blackboard::pattern();
    let errors = diags.iter().filter(|d| d.is_error()).count();
    let warnings: Vec<String> = diags.iter().filter(|d| !d.is_error()).map(|d| d.to_string()).collect();
    let repair = warnings.len() == 1 && diags.iter().any(|d| d.code == "repair" && d.message.contains("ks"));
    outcome(
        bad.is_empty() && bundle.is_some() && errors == 0 && repair,
        format!(
            "{} of 2100 units failed to round-trip; Blackboard: {errors} errors, {} warning(s): {}",
            bad.len(),
            warnings.len(),
            warnings.join("; ")
        ),
    )
}

fn well_foundedness() -> Outcome {
    let mut wrong = 0;
    let mut relations = 0;
    for n in 1..=4usize {
        for bits in 0..(1u64 << (n * n)) {
            let rel = relation_from_bits(n, bits);
            relations += 1;
            if relation_algebra(n, &rel).check_well_founded("r").unwrap() != well_founded_by_chains(n, &rel) {
                wrong += 1;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..5000 {
        let rel = relation_from_bits(5, rng.gen_range(0..1u64 << 25));
        relations += 1;
        if relation_algebra(5, &rel).check_well_founded("r").unwrap() != well_founded_by_chains(5, &rel) {
            wrong += 1;
        }
    }
    outcome(wrong == 0, format!("{relations} relations (all up to 4 elements, 5000 on 5), {wrong} mismatches"))
}

type Criterion = (&'static str, &'static str, u64, fn() -> Outcome);

const CRITERIA: [Criterion; 8] = [
    ("AC1", "fixtures are consistent and the i1 mutation is caught", 1, fixtures),
    ("AC2", "subsets of healthy universes are healthy", 5, healthy_subsets),
    ("AC3", "trace semantics agrees with the expansion laws", 60, expansion_agreement),
    ("AC4", "desugared annotations agree with direct checks", 30, desugaring),
    ("AC5", "open-mode final verdicts survive extension", 30, open_monotonicity),
    ("AC6", "Blackboard guarantee and mutation detection", 30, theorem),
    ("AC7", "units round-trip and the Blackboard pattern resolves", 10, dsl),
    ("AC8", "well-foundedness agrees with the chain oracle", 20, well_foundedness),
];

fn main() -> ExitCode {
    let mut failed = 0;
    for (id, name, limit, run) in CRITERIA {
        let start = Instant::now();
        let o = run();
        let took = start.elapsed();
        let in_time = took <= Duration::from_secs(limit);
        let pass = o.ok && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "{} {id} {name}: {} [{:.2}s, limit {limit}s{}]",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            took.as_secs_f64(),
            if in_time { "" } else { ", too slow" }
        );
    }
    println!("{} of {} criteria passed", CRITERIA.len() - failed, CRITERIA.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
