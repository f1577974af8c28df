use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use dps_core::engine::{self, GuidanceMode, Options, Refinement, Status};
use dps_core::explicit::{self, Arbitration, BadKind, DEFAULT_STATE_CAP};
use dps_core::generators::{self, MulticoreArch, PhilosopherArch};
use dps_core::model::{parse_system, Model, Priority, PrioritySet, System};
use dps_core::random;
use dps_core::refine;

const EXIT_OK: u8 = 0;
const EXIT_NEGATIVE: u8 = 1;
const EXIT_EXHAUSTED: u8 = 2;
const EXIT_INPUT: u8 = 3;

#[derive(Parser)]
#[command(name = "dps", version, about = "Synthesize deployable priorities for systems of interacting components")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search for new priorities making the model deadlock- and risk-free.
    Synthesize(SynthesizeArgs),
    /// Explicit safety check of the model as given.
    Check(CheckArgs),
    /// Re-check a synthesis result against its model.
    Validate(ValidateArgs),
    /// Run the distributed semantics and print one JSON line per step.
    Simulate(SimulateArgs),
    /// Emit a benchmark model document.
    #[command(subcommand)]
    Gen(Gen),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Clone, Copy, ValueEnum)]
enum RefineArg {
    Off,
    Lazy,
    Eager,
}

#[derive(Clone, Copy, ValueEnum)]
enum GuidanceArg {
    Off,
    Rp1,
    Rp2,
}

#[derive(Args)]
struct Output {
    /// Write the main output here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthesizeArgs {
    model: PathBuf,
    /// Over-approximate the attractor before fixing.
    #[arg(long)]
    overapprox: bool,
    #[arg(long, value_enum, default_value = "off")]
    refine: RefineArg,
    #[arg(long, value_enum, default_value = "off")]
    guidance: GuidanceArg,
    /// Explicit state cap used by validation.
    #[arg(long, default_value_t = DEFAULT_STATE_CAP)]
    cap: usize,
    /// Time budget in seconds; 0 for none.
    #[arg(long, default_value_t = 150)]
    budget: u64,
    /// Accepted for symmetry with `simulate`; synthesis is deterministic.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Include wall-clock time in the result.
    #[arg(long)]
    timing: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct CheckArgs {
    model: PathBuf,
    #[arg(long, default_value_t = DEFAULT_STATE_CAP)]
    cap: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct ValidateArgs {
    model: PathBuf,
    /// Result JSON written by `synthesize`.
    result: PathBuf,
    #[arg(long, default_value_t = DEFAULT_STATE_CAP)]
    cap: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct SimulateArgs {
    model: PathBuf,
    /// Apply the priorities of this result first.
    #[arg(long)]
    result: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    steps: usize,
    /// Random arbitration with this seed; lexicographic otherwise.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    output: Output,
}

#[derive(Subcommand)]
enum Gen {
    /// `n` philosophers and `n` forks.
    Philosophers {
        n: usize,
        /// none, cw, ccw or full.
        #[arg(long, default_value = "ccw")]
        arch: PhilosopherArch,
        #[command(flatten)]
        output: Output,
    },
    /// CPUs sharing memory banks.
    Multicore {
        #[arg(long, default_value_t = 4)]
        cpus: usize,
        #[arg(long)]
        banks: Option<usize>,
        /// broadcast-X for a CPU letter X, or local.
        #[arg(long, default_value = "broadcast-A")]
        arch: MulticoreArch,
        #[command(flatten)]
        output: Output,
    },
    /// Robots on a three-row grid.
    Robots {
        n: usize,
        cells: usize,
        #[command(flatten)]
        output: Output,
    },
    /// A small random model.
    Random {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
}

struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

type Run = Result<u8, Failure>;

fn read_model(path: &Path) -> Result<Model, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    let m = parse_system(&text).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    if !m.architecture.is_deployable(&m.system) {
        let v = m.architecture.deployability_violations(&m.system);
        return Err(Failure(format!("{}: architecture is not deployable: {v:?}", path.display())));
    }
    Ok(m)
}

fn emit(output: &Output, text: &str) -> Result<(), Failure> {
    match &output.out {
        Some(p) => fs::write(p, text).map_err(|e| Failure(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn synthesize(a: SynthesizeArgs) -> Run {
    let m = read_model(&a.model)?;
    let opts = Options {
        overapprox: a.overapprox,
        refine: match a.refine {
            RefineArg::Off => Refinement::Off,
            RefineArg::Lazy => Refinement::Lazy,
            RefineArg::Eager => Refinement::Eager,
        },
        guidance: match a.guidance {
            GuidanceArg::Off => GuidanceMode::Off,
            GuidanceArg::Rp1 => GuidanceMode::Rp1,
            GuidanceArg::Rp2 => GuidanceMode::Rp2,
        },
        state_cap: a.cap,
        budget: (a.budget > 0).then(|| Duration::from_secs(a.budget)),
        ..Options::default()
    };
    let r = engine::synthesize(&m.system, &m.architecture, &m.risk, &opts)?;
    let text = match a.format {
        Format::Json => format!("{}\n", serde_json::to_string_pretty(&r.to_json(a.timing))?),
        Format::Table => r.to_table(),
    };
    emit(&a.output, &text)?;
    if r.status == Status::Success && a.format == Format::Json {
        eprint!("{}", r.to_table());
    }
    Ok(match r.status {
        Status::Success => EXIT_OK,
        Status::Infeasible => EXIT_NEGATIVE,
        Status::Exhausted => EXIT_EXHAUSTED,
    })
}

impl PartialEq for Format {
    fn eq(&self, other: &Self) -> bool {
        matches!((self, other), (Format::Json, Format::Json) | (Format::Table, Format::Table))
    }
}

fn witness_json(s: &System, w: &[explicit::WitnessStep]) -> Value {
    Value::Array(
        w.iter()
            .map(|st| json!({ "via": st.via.map(|a| s.interaction_name(a).to_string()), "config": st.config.describe(s) }))
            .collect(),
    )
}

fn check(a: CheckArgs) -> Run {
    let m = read_model(&a.model)?;
    let v = explicit::check_safe(&m.system, &m.risk, a.cap)?;
    let kind = v.kind.map(|k| match k {
        BadKind::Deadlock => "deadlock",
        BadKind::Risk => "risk",
    });
    let out = json!({ "safe": v.safe, "kind": kind, "explored": v.explored, "witness": witness_json(&m.system, &v.witness) });
    emit(&a.output, &format!("{}\n", serde_json::to_string_pretty(&out)?))?;
    Ok(if v.safe { EXIT_OK } else { EXIT_NEGATIVE })
}

/// The system a result refers to, and its priorities.
fn read_result(m: &Model, path: &Path) -> Result<(System, PrioritySet), Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    let s = match v.get("refined").and_then(Value::as_array) {
        None => m.system.clone(),
        Some(names) => {
            let names: BTreeSet<&str> = names.iter().filter_map(Value::as_str).collect();
            let targets = m.system.interactions().filter(|&a| !names.contains(m.system.interaction_name(a))).collect();
            let r = refine::refine_alphabet(&m.system, &targets)?;
            let got: BTreeSet<&str> = r.system.interaction_names().iter().map(String::as_str).collect();
            if got != names {
                return Err(Failure(format!("{}: refined interactions do not match the model", path.display())));
            }
            r.system
        }
    };
    let mut p = PrioritySet::new();
    for pair in v.get("priorities").and_then(Value::as_array).ok_or_else(|| Failure(format!("{}: no `priorities` array", path.display())))? {
        let name = |k: usize| -> Result<_, Failure> {
            let n = pair.get(k).and_then(Value::as_str).ok_or_else(|| Failure(format!("{}: malformed priority {pair}", path.display())))?;
            s.interaction_index(n).ok_or_else(|| Failure(format!("{}: unknown interaction `{n}`", path.display())))
        };
        p.insert(Priority::new(name(0)?, name(1)?));
    }
    Ok((s, p))
}

fn validate(a: ValidateArgs) -> Run {
    let m = read_model(&a.model)?;
    let (s, p) = read_result(&m, &a.result)?;
    let v = engine::validate_result(&s, &m.architecture, &m.risk, &p, a.cap);
    let violations: Vec<Value> = v
        .architecture_violations
        .iter()
        .map(|&q| {
            let (l, h) = s.priority_name(q);
            json!([l, h])
        })
        .collect();
    let out = json!({
        "ok": v.ok(),
        "acyclic": v.acyclic,
        "architectureViolations": violations,
        "safe": v.safe,
        "symbolic": v.symbolic,
        "simulation": v.simulation,
        "witness": witness_json(&s, &v.witness),
    });
    emit(&a.output, &format!("{}\n", serde_json::to_string_pretty(&out)?))?;
    Ok(if v.ok() { EXIT_OK } else { EXIT_NEGATIVE })
}

fn simulate(a: SimulateArgs) -> Run {
    let m = read_model(&a.model)?;
    let s = match &a.result {
        None => m.system.clone(),
        Some(path) => {
            let (s, p) = read_result(&m, path)?;
            s.with_priorities(&p)?
        }
    };
    let arb = a.seed.map_or(Arbitration::Lexicographic, Arbitration::Seeded);
    let trace = explicit::simulate_distributed(&s, &m.architecture, &m.risk, a.steps, arb);
    emit(&a.output, &trace.to_json_lines(&s))?;
    Ok(match trace.outcome {
        explicit::SimulationOutcome::Completed => EXIT_OK,
        _ => EXIT_NEGATIVE,
    })
}

fn generate(g: Gen) -> Run {
    let (m, output) = match g {
        Gen::Philosophers { n, arch, output } => {
            if n < 2 {
                return Err(Failure("at least two philosophers".into()));
            }
            (generators::philosophers(n, arch), output)
        }
        Gen::Multicore { cpus, banks, arch, output } => {
            let banks = banks.unwrap_or(cpus);
            if !(2..=10).contains(&cpus) || banks < 3 {
                return Err(Failure("2 to 10 CPUs and at least 3 banks".into()));
            }
            if let MulticoreArch::Broadcast(x) = arch {
                if x >= cpus {
                    return Err(Failure(format!("no CPU {}", char::from(b'A' + x as u8))));
                }
            }
            (generators::multicore(cpus, banks, arch), output)
        }
        Gen::Robots { n, cells, output } => {
            if n < 2 || cells < n || !cells.is_multiple_of(3) {
                return Err(Failure("need n >= 2, cells >= n and cells a multiple of 3".into()));
            }
            (generators::robots(n, cells), output)
        }
        Gen::Random { seed, output } => (random::random_model(seed, random::Limits::default()), output),
    };
    emit(&output, &format!("{}\n", m.to_json()))?;
    Ok(EXIT_OK)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT } else { EXIT_OK });
        }
    };
    let r = match cli.command {
        Command::Synthesize(a) => synthesize(a),
        Command::Check(a) => check(a),
        Command::Validate(a) => validate(a),
        Command::Simulate(a) => simulate(a),
        Command::Gen(g) => generate(g),
    };
    match r {
        Ok(code) => ExitCode::from(code),
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}
