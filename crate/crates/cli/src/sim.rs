//! Executable Blackboard: one blackboard `bb` and a roster of knowledge
//! sources cooperating on a problem decomposition.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use archtrace_core::algebra::Algebra;
use archtrace_core::interface::SpecInterpretation;
use archtrace_core::model::ConfigurationTrace;
use archtrace_core::syntax::PortRef;
use archtrace_core::value::Value;
use archtrace_dsl::ast::{
    ActiveEntry, AlgebraUnit, Body, ParsedUnit, SourceUnit, TraceComponent, TraceStep, TraceUnit,
};
use archtrace_dsl::{load_algebra, load_trace, Bundle, Diagnostic};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const BLACKBOARD_ID: &str = "bb";

/// Deliberate faults used to show that premises are not vacuous.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mutation {
    /// The blackboard drops every solution it receives.
    NoForwarding,
    /// A knowledge source stays inactive once a subproblem of one of its
    /// requests is solved.
    NoActivation,
}

impl fmt::Display for Mutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mutation::NoForwarding => "no-forwarding",
            Mutation::NoActivation => "no-activation",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ScenarioError {
    UnknownProblem(String),
    Cycle(Vec<String>),
    Uncovered(String),
    DuplicateSource(String),
    ReservedId,
    NoSources,
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioError::UnknownProblem(p) => write!(f, "unknown problem {p}"),
            ScenarioError::Cycle(c) => write!(f, "subproblem cycle: {}", c.join(" -> ")),
            ScenarioError::Uncovered(p) => {
                write!(f, "no knowledge source can solve {p}, which the root depends on")
            }
            ScenarioError::DuplicateSource(k) => write!(f, "knowledge source {k} listed twice"),
            ScenarioError::ReservedId => write!(f, "{BLACKBOARD_ID} is reserved for the blackboard"),
            ScenarioError::NoSources => write!(f, "the roster is empty"),
        }
    }
}

impl std::error::Error for ScenarioError {}

/// A problem decomposition with a roster of knowledge sources.
///
/// `subs[p]` are the subproblems of `p`, so `q` precedes `p` iff `q` is in `subs[p]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scenario {
    problems: BTreeSet<String>,
    subs: BTreeMap<String, BTreeSet<String>>,
    sources: Vec<(String, BTreeSet<String>)>,
    root: String,
    pub horizon: usize,
    pub seed: u64,
}

impl Scenario {
    pub fn new(
        problems: impl IntoIterator<Item = String>,
        subs: BTreeMap<String, BTreeSet<String>>,
        sources: Vec<(String, BTreeSet<String>)>,
        root: &str,
        horizon: usize,
        seed: u64,
    ) -> Result<Self, ScenarioError> {
        let problems: BTreeSet<String> = problems.into_iter().collect();
        let known = |p: &String| {
            if problems.contains(p) {
                Ok(())
            } else {
                Err(ScenarioError::UnknownProblem(p.clone()))
            }
        };
        known(&root.to_string())?;
        for (p, qs) in &subs {
            known(p)?;
            qs.iter().try_for_each(known)?;
        }
        if sources.is_empty() {
            return Err(ScenarioError::NoSources);
        }
        let mut ids = BTreeSet::new();
        for (k, prob) in &sources {
            if k == BLACKBOARD_ID {
                return Err(ScenarioError::ReservedId);
            }
            if !ids.insert(k) {
                return Err(ScenarioError::DuplicateSource(k.clone()));
            }
            prob.iter().try_for_each(known)?;
        }
        let s = Scenario { problems, subs, sources, root: root.to_string(), horizon, seed };
        if let Some(c) = s.find_cycle() {
            return Err(ScenarioError::Cycle(c));
        }
        for p in s.needed() {
            if !s.sources.iter().any(|(_, prob)| prob.contains(&p)) {
                return Err(ScenarioError::Uncovered(p));
            }
        }
        Ok(s)
    }

    /// The three-problem example: `pA` splits into `pB` and `pC`.
    pub fn example(horizon: usize, seed: u64) -> Self {
        let set = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<BTreeSet<_>>();
        Scenario::new(
            set(&["pA", "pB", "pC"]),
            BTreeMap::from([("pA".to_string(), set(&["pB", "pC"]))]),
            vec![("ks1".into(), set(&["pA"])), ("ks2".into(), set(&["pB", "pC"]))],
            "pA",
            horizon,
            seed,
        )
        .expect("example scenario is valid")
    }

    /// Random decomposition of 2 to `max_problems` problems, at most `max_depth`
    /// levels below the root, and a roster of 1 to 4 sources covering all of them.
    pub fn random(seed: u64, max_problems: usize, max_depth: usize, horizon: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..=max_problems.max(2));
        let names: Vec<String> = (0..n).map(|i| format!("p{i}")).collect();
        let mut level = vec![0usize];
        let mut subs: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for i in 1..n {
            let top = level.iter().max().copied().unwrap_or(0);
            let l = if i == 1 { 1 } else { rng.gen_range(1..=(top + 1).min(max_depth.max(1))) };
            level.push(l);
            let parents: Vec<usize> = (0..i).filter(|&j| level[j] == l - 1).collect();
            let parent = *parents.choose(&mut rng).expect("a problem one level up exists");
            subs.entry(names[parent].clone()).or_default().insert(names[i].clone());
            for j in 0..i {
                if j != parent && level[j] < l && rng.gen_bool(0.2) {
                    subs.entry(names[j].clone()).or_default().insert(names[i].clone());
                }
            }
        }
        let k = rng.gen_range(1..=4usize.min(n));
        let mut owners: Vec<usize> = (0..n).map(|i| if i < k { i } else { rng.gen_range(0..k) }).collect();
        owners.shuffle(&mut rng);
        let mut sources: Vec<(String, BTreeSet<String>)> =
            (0..k).map(|j| (format!("ks{}", j + 1), BTreeSet::new())).collect();
        for (i, &o) in owners.iter().enumerate() {
            sources[o].1.insert(names[i].clone());
            if rng.gen_bool(0.15) {
                let extra = rng.gen_range(0..k);
                sources[extra].1.insert(names[i].clone());
            }
        }
        Scenario::new(names.clone(), subs, sources, &names[0], horizon, seed).expect("generated scenario is valid")
    }

    pub fn root(&self) -> &str {
        &self.root
    }

    pub fn problems(&self) -> &BTreeSet<String> {
        &self.problems
    }

    pub fn sources(&self) -> &[(String, BTreeSet<String>)] {
        &self.sources
    }

    pub fn subs(&self, p: &str) -> BTreeSet<String> {
        self.subs.get(p).cloned().unwrap_or_default()
    }

    /// Longest chain of subproblems below the root.
    pub fn depth(&self) -> usize {
        fn go(s: &Scenario, p: &str) -> usize {
            s.subs(p).iter().map(|q| 1 + go(s, q)).max().unwrap_or(0)
        }
        go(self, &self.root)
    }

    pub fn solution(p: &str) -> String {
        format!("s_{p}")
    }

    fn find_cycle(&self) -> Option<Vec<String>> {
        fn visit(s: &Scenario, p: &String, path: &mut Vec<String>, done: &mut BTreeSet<String>) -> Option<Vec<String>> {
            if let Some(i) = path.iter().position(|x| x == p) {
                let mut c = path[i..].to_vec();
                c.push(p.clone());
                return Some(c);
            }
            if done.contains(p) {
                return None;
            }
            path.push(p.clone());
            for q in s.subs.get(p).into_iter().flatten() {
                if let Some(c) = visit(s, q, path, done) {
                    return Some(c);
                }
            }
            path.pop();
            done.insert(p.clone());
            None
        }
        let mut done = BTreeSet::new();
        self.problems.iter().find_map(|p| visit(self, p, &mut Vec::new(), &mut done))
    }

    fn needed(&self) -> BTreeSet<String> {
        let mut seen = BTreeSet::new();
        let mut todo = vec![self.root.clone()];
        while let Some(p) = todo.pop() {
            if seen.insert(p.clone()) {
                todo.extend(self.subs(&p));
            }
        }
        seen
    }

    /// Algebra of the `ProbSol` datatype: one solution per problem and the
    /// subproblem relation as `prec`.
    pub fn algebra_unit(&self) -> SourceUnit {
        let atoms = |xs: &mut dyn Iterator<Item = String>| xs.map(|x| Value::atom(&x)).collect::<Vec<_>>();
        let mut a = AlgebraUnit::default();
        a.carriers.push(("PROB".into(), atoms(&mut self.problems.iter().cloned())));
        a.carriers.push(("SOL".into(), atoms(&mut self.problems.iter().map(|p| Scenario::solution(p)))));
        for p in &self.problems {
            a.functions.push(("solve".into(), vec![Value::atom(p)], Value::atom(&Scenario::solution(p))));
        }
        for (p, qs) in &self.subs {
            for q in qs {
                a.predicates.push(("prec".into(), vec![Value::atom(q), Value::atom(p)]));
            }
        }
        SourceUnit { name: "Solutions".into(), imports: vec!["ProbSol".into()], body: Body::Algebra(a) }
    }
}

/// Result of one run.
#[derive(Clone, Debug)]
pub struct Simulation {
    pub trace: SourceUnit,
    pub algebra: SourceUnit,
    pub root_solved: bool,
    /// The run stopped at a step that changed nothing with every eligible source active.
    pub complete: bool,
    pub warnings: Vec<String>,
}

impl Simulation {
    pub fn steps(&self) -> usize {
        match &self.trace.body {
            Body::Trace(t) => t.steps.len(),
            _ => 0,
        }
    }

    /// Algebra, trace and interpretation as the checker sees them.
    pub fn load(&self, bundle: &Bundle) -> Result<(Algebra, ConfigurationTrace, SpecInterpretation), Vec<Diagnostic>> {
        let alg = load_algebra(&ParsedUnit::bare(self.algebra.clone()), &bundle.signature)?;
        let (trace, j) = load_trace(&ParsedUnit::bare(self.trace.clone()), bundle)?;
        Ok((alg, trace, j))
    }
}

fn pair(a: &str, b: Value) -> Value {
    Value::pair(Value::atom(a), b)
}

fn atom_set<'a>(xs: impl IntoIterator<Item = &'a String>) -> Value {
    Value::set(xs.into_iter().map(|x| Value::atom(x)))
}

fn entry(port: &str, vals: Vec<Value>) -> Option<(String, Vec<Value>)> {
    (!vals.is_empty()).then(|| (port.to_string(), vals))
}

/// Runs the scenario.
///
/// The blackboard keeps the open problems on `op` and the solved ones on
/// `os`. Every active source reads both, requests the subproblems of the open
/// problems it can solve, and posts a solution once all subproblems are solved.
/// Sources are activated at random, but always when they have something to do
/// or have been idle for two steps. Once the root is solved every source is
/// active; the run ends with a step that changes nothing.
pub fn simulate(s: &Scenario, mutation: Option<Mutation>) -> Simulation {
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed ^ 0x5eed_b1ac_b0a2_d000);
    let mut open: BTreeSet<String> = BTreeSet::from([s.root.clone()]);
    let mut solved: BTreeSet<String> = BTreeSet::new();
    let mut idle: BTreeMap<&str, usize> = s.sources.iter().map(|(k, _)| (k.as_str(), 0)).collect();
    let mut requested: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
    let mut steps = Vec::new();
    let mut complete = false;

    let subs_of = |p: &String| s.subs(p);
    while steps.len() < s.horizon {
        let blocked = |k: &str| {
            mutation == Some(Mutation::NoActivation)
                && requested.get(k).is_some_and(|qs| qs.iter().any(|q| solved.contains(q)))
        };
        let can_act = |prob: &BTreeSet<String>| {
            prob.iter().filter(|p| open.contains(*p)).any(|p| {
                let qs = subs_of(p);
                !qs.is_subset(&open) || (!solved.contains(p) && qs.is_subset(&solved))
            })
        };
        let eligible: Vec<&(String, BTreeSet<String>)> = s.sources.iter().filter(|(k, _)| !blocked(k)).collect();
        let settle = solved.contains(&s.root) || !eligible.iter().any(|(_, prob)| can_act(prob));
        let active: Vec<&(String, BTreeSet<String>)> = eligible
            .iter()
            .copied()
            .filter(|(k, prob)| settle || can_act(prob) || idle[k.as_str()] >= 2 || rng.gen_bool(0.5))
            .collect();

        let mut step = TraceStep { index: steps.len(), active: vec![], conns: vec![] };
        let mut bb_ip = BTreeSet::new();
        let mut bb_is = BTreeSet::new();
        let bb_op: Vec<Value> = open.iter().map(|p| Value::atom(p)).collect();
        let bb_os: Vec<Value> = solved.iter().map(|p| pair(p, Value::atom(&Scenario::solution(p)))).collect();
        for (k, prob) in &active {
            let mine: Vec<&String> = prob.iter().filter(|p| open.contains(*p)).collect();
            let op: Vec<Value> = mine.iter().map(|p| pair(p, atom_set(&subs_of(p)))).collect();
            let os: Vec<Value> = mine
                .iter()
                .filter(|p| subs_of(p).is_subset(&solved))
                .map(|p| pair(p, Value::atom(&Scenario::solution(p))))
                .collect();
            for p in &mine {
                let qs = subs_of(p);
                bb_ip.insert((p.to_string(), qs.clone()));
                requested.entry(k.as_str()).or_default().extend(qs);
            }
            bb_is.extend(os.iter().cloned());
            let values = [entry("ip", bb_op.clone()), entry("is", bb_os.clone()), entry("op", op), entry("os", os)];
            step.active.push(ActiveEntry { id: k.clone(), values: values.into_iter().flatten().collect() });
            for (inp, out) in [("ip", "op"), ("is", "os")] {
                step.conns.push((PortRef::new(k, inp), PortRef::new(BLACKBOARD_ID, out)));
                step.conns.push((PortRef::new(BLACKBOARD_ID, inp), PortRef::new(k, out)));
            }
        }
        let bb_values = [
            entry("ip", bb_ip.iter().map(|(p, qs)| pair(p, atom_set(qs))).collect()),
            entry("is", bb_is.iter().cloned().collect()),
            entry("op", bb_op),
            entry("os", bb_os),
        ];
        step.active
            .insert(0, ActiveEntry { id: BLACKBOARD_ID.into(), values: bb_values.into_iter().flatten().collect() });
        step.conns.sort();
        steps.push(step);

        let before = (open.len(), solved.len());
        for (_, qs) in &bb_ip {
            open.extend(qs.iter().cloned());
        }
        if mutation != Some(Mutation::NoForwarding) {
            for v in &bb_is {
                if let Value::Pair(p) = v {
                    solved.insert(p.0.to_string());
                }
            }
        }
        for (k, _) in &s.sources {
            let on = active.iter().any(|(a, _)| a == k);
            let c = idle.get_mut(k.as_str()).expect("every source has an idle counter");
            *c = if on { 0 } else { *c + 1 };
        }
        if settle && active.len() == eligible.len() && before == (open.len(), solved.len()) {
            complete = true;
            break;
        }
    }

    let root_solved = solved.contains(&s.root);
    let mut warnings = Vec::new();
    if !complete {
        warnings.push(format!("horizon {} reached before the run settled; the trace is partial", s.horizon));
    }
    if !root_solved {
        warnings.push(format!("root problem {} was not solved", s.root));
    }
    let mut comps = vec![TraceComponent {
        id: BLACKBOARD_ID.into(),
        iface: Some("BB".into()),
        local: vec![],
        input: vec![],
        output: vec![],
        renames: vec![],
    }];
    for (k, prob) in &s.sources {
        comps.push(TraceComponent {
            id: k.clone(),
            iface: Some("KS".into()),
            local: vec![("prob".into(), prob.iter().map(|p| Value::atom(p)).collect())],
            input: vec![],
            output: vec![],
            renames: vec![],
        });
    }
    Simulation {
        trace: SourceUnit {
            name: "Run".into(),
            imports: vec![],
            body: Body::Trace(TraceUnit { components: comps, steps }),
        },
        algebra: s.algebra_unit(),
        root_solved,
        complete,
        warnings,
    }
}
