use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use archtrace_cli::blackboard::{self, parse_sources};
use archtrace_cli::check::{check, CheckOptions, EXIT_USAGE};
use archtrace_cli::desugar::constraints_unit;
use archtrace_cli::sim::{simulate, Mutation, Scenario};
use archtrace_cli::theorem::{verify, TheoremOptions};
use archtrace_core::constraints::{Mode, DEFAULT_MAX_ASSIGNMENTS};
use archtrace_dsl::ast::UnitKind;
use archtrace_dsl::{load_algebra, load_trace, print_unit, resolve, Bundle, Diagnostic, ParsedUnit};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "archtrace", version, about = "Check traces of dynamic architectures against their specifications")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Open,
    Closed,
}

#[derive(Clone, Copy, ValueEnum)]
enum MutationArg {
    NoForwarding,
    NoActivation,
}

#[derive(Subcommand)]
enum Command {
    /// Check an algebra and a trace against specification units.
    Check {
        /// Specification units plus exactly one algebra and one trace unit.
        files: Vec<PathBuf>,
        /// Add the bundled Blackboard units.
        #[arg(long)]
        blackboard: bool,
        #[arg(long, value_enum, default_value = "open")]
        mode: ModeArg,
        #[arg(long)]
        json: bool,
        #[arg(long, default_value_t = DEFAULT_MAX_ASSIGNMENTS)]
        max_assignments: u128,
    },
    /// Print the annotations of every diagram as a constraints unit.
    Desugar {
        files: Vec<PathBuf>,
        #[arg(long)]
        blackboard: bool,
    },
    /// Run the Blackboard simulator and print the algebra and trace units.
    SimulateBlackboard {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        horizon: usize,
        /// Random decomposition and roster instead of the three-problem example.
        #[arg(long)]
        random: bool,
        #[arg(long, value_enum)]
        mutation: Option<MutationArg>,
        /// Write `solutions.arch` and `run.arch` here instead of printing.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the Blackboard guarantee on random simulated runs.
    VerifyTheorem {
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        horizon: usize,
        #[arg(long, value_enum)]
        mutation: Option<MutationArg>,
        #[arg(long)]
        json: bool,
        #[arg(long, default_value_t = DEFAULT_MAX_ASSIGNMENTS)]
        max_assignments: u128,
    },
    /// Parse and resolve units, reporting diagnostics.
    Parse {
        files: Vec<PathBuf>,
        /// Print each unit in canonical form.
        #[arg(long)]
        print: bool,
        #[arg(long)]
        json: bool,
    },
}

fn mutation(m: Option<MutationArg>) -> Option<Mutation> {
    m.map(|m| match m {
        MutationArg::NoForwarding => Mutation::NoForwarding,
        MutationArg::NoActivation => Mutation::NoActivation,
    })
}

/// Writes to stdout; a closed pipe ends the output quietly.
fn emit(text: &str) {
    let _ = std::io::stdout().write_all(text.as_bytes());
}

fn usage(msg: impl std::fmt::Display) -> i32 {
    eprintln!("error: {msg}");
    EXIT_USAGE
}

fn report(diags: &[Diagnostic]) {
    for d in diags {
        eprintln!("{d}");
    }
}

fn read_units(files: &[PathBuf], with_blackboard: bool) -> Result<Vec<ParsedUnit>, i32> {
    let mut texts = Vec::new();
    for f in files {
        match std::fs::read_to_string(f) {
            Ok(t) => texts.push((f.display().to_string(), t)),
            Err(e) => return Err(usage(format!("{}: {e}", f.display()))),
        }
    }
    let mut sources: Vec<(&str, &str)> = texts.iter().map(|(n, t)| (n.as_str(), t.as_str())).collect();
    if with_blackboard {
        sources.extend(blackboard::PATTERN);
        sources.push(blackboard::ASSUMPTION);
        sources.push(blackboard::GUARANTEE);
    }
    parse_sources(&sources).map_err(|d| {
        report(&d);
        EXIT_USAGE
    })
}

fn resolve_spec(units: &[ParsedUnit]) -> Result<Bundle, i32> {
    let (bundle, diags) = resolve(units);
    report(&diags);
    bundle.ok_or(EXIT_USAGE)
}

fn is_data(u: &ParsedUnit) -> bool {
    matches!(u.unit.kind(), UnitKind::Algebra | UnitKind::Trace)
}

fn cmd_check(files: &[PathBuf], bb: bool, mode: ModeArg, json: bool, max: u128) -> i32 {
    let units = match read_units(files, bb) {
        Ok(u) => u,
        Err(c) => return c,
    };
    let (data, spec): (Vec<ParsedUnit>, Vec<ParsedUnit>) = units.into_iter().partition(is_data);
    let of = |k: UnitKind| data.iter().filter(|u| u.unit.kind() == k).collect::<Vec<_>>();
    let (algs, traces) = (of(UnitKind::Algebra), of(UnitKind::Trace));
    if algs.len() != 1 || traces.len() != 1 {
        return usage(format!(
            "check needs exactly one algebra unit and one trace unit, got {} and {}",
            algs.len(),
            traces.len()
        ));
    }
    let bundle = match resolve_spec(&spec) {
        Ok(b) => b,
        Err(c) => return c,
    };
    let alg = match load_algebra(algs[0], &bundle.signature) {
        Ok(a) => a,
        Err(d) => {
            report(&d);
            return EXIT_USAGE;
        }
    };
    let (trace, j) = match load_trace(traces[0], &bundle) {
        Ok(x) => x,
        Err(d) => {
            report(&d);
            return EXIT_USAGE;
        }
    };
    let mode = match mode {
        ModeArg::Open => Mode::Open,
        ModeArg::Closed => Mode::Closed,
    };
    let r = check(&bundle, &alg, &trace, &j, &bundle.all_assertions(), &CheckOptions { mode, max_assignments: max });
    if json {
        emit(&format!("{}\n", r.render_json()));
    } else {
        emit(&r.render_human());
    }
    r.status.exit_code()
}

fn cmd_desugar(files: &[PathBuf], bb: bool) -> i32 {
    let units = match read_units(files, bb) {
        Ok(u) => u,
        Err(c) => return c,
    };
    let bundle = match resolve_spec(&units) {
        Ok(b) => b,
        Err(c) => return c,
    };
    if bundle.diagrams.is_empty() {
        return usage("no diagram unit given");
    }
    let mut texts = Vec::new();
    for d in &bundle.diagrams {
        match constraints_unit(d) {
            Ok(u) => texts.push(print_unit(&u)),
            Err(e) => return usage(format!("{}: {e}", d.name)),
        }
    }
    emit(&texts.join("\n"));
    0
}

fn cmd_simulate(seed: u64, horizon: usize, random: bool, m: Option<MutationArg>, out: Option<PathBuf>) -> i32 {
    if horizon == 0 {
        return usage("horizon must be at least 1");
    }
    let s = if random {
        Scenario::random(seed, archtrace_cli::theorem::MAX_PROBLEMS, archtrace_cli::theorem::MAX_DEPTH, horizon)
    } else {
        Scenario::example(horizon, seed)
    };
    let sim = simulate(&s, mutation(m));
    for w in &sim.warnings {
        eprintln!("warning: {w}");
    }
    let (alg, trace) = (print_unit(&sim.algebra), print_unit(&sim.trace));
    match out {
        Some(dir) => {
            let write = |name: &str, text: &str| std::fs::write(dir.join(name), text);
            if let Err(e) = std::fs::create_dir_all(&dir)
                .and_then(|_| write("solutions.arch", &alg))
                .and_then(|_| write("run.arch", &trace))
            {
                return usage(format!("{}: {e}", dir.display()));
            }
        }
        None => emit(&format!("{alg}\n{trace}")),
    }
    0
}

fn cmd_verify(opts: TheoremOptions, json: bool) -> i32 {
    if opts.trials == 0 {
        return usage("--trials must be at least 1");
    }
    let (bundle, diags) = blackboard::theorem();
    let Some(bundle) = bundle else {
        report(&diags);
        return EXIT_USAGE;
    };
    match verify(&bundle, &opts) {
        Ok(r) => {
            if json {
                emit(&format!("{}\n", serde_json::to_string_pretty(&r).expect("reports serialize")));
            } else {
                emit(&r.render_human());
            }
            if r.passed() {
                0
            } else {
                1
            }
        }
        Err(e) => usage(e),
    }
}

fn cmd_parse(files: &[PathBuf], print: bool, json: bool) -> i32 {
    if files.is_empty() {
        return usage("no input files");
    }
    let units = match read_units(files, false) {
        Ok(u) => u,
        Err(c) => return c,
    };
    let spec: Vec<ParsedUnit> = units.iter().filter(|u| !is_data(u)).cloned().collect();
    let diags = if spec.is_empty() { vec![] } else { resolve(&spec).1 };
    if json {
        emit(&format!("{}\n", serde_json::to_string_pretty(&diags).expect("diagnostics serialize")));
    } else {
        report(&diags);
    }
    if print {
        for u in &units {
            emit(&print_unit(&u.unit));
        }
    }
    if diags.iter().any(|d| d.is_error()) {
        EXIT_USAGE
    } else {
        0
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let code = match cli.command {
        Command::Check { files, blackboard, mode, json, max_assignments } => {
            cmd_check(&files, blackboard, mode, json, max_assignments)
        }
        Command::Desugar { files, blackboard } => cmd_desugar(&files, blackboard),
        Command::SimulateBlackboard { seed, horizon, random, mutation, out } => {
            cmd_simulate(seed, horizon, random, mutation, out)
        }
        Command::VerifyTheorem { trials, seed, horizon, mutation: m, json, max_assignments } => {
            cmd_verify(TheoremOptions { trials, seed, horizon, mutation: mutation(m), max_assignments }, json)
        }
        Command::Parse { files, print, json } => cmd_parse(&files, print, json),
    };
    ExitCode::from(code as u8)
}
