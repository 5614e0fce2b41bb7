use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bell_core::classical::{
    canonicalize_with_reference, cglmp_inequality_uniform, enumerate_vertices, ghz_inequality, ladder_inequality,
    ladder_settings, vertex_count, BellInequality, InequalityFile, LadderPolicy,
};
use bell_core::experiments::{chsh_law, prepare, Named, Prepared, SchmidtChoice};
use bell_core::quantum::{born_law, ghz_settings, ModelFile};
use bell_core::scenario::Scenario;
use bell_core::strength::{
    discounted_strength, extract_face, inf_divergence, StrengthReport, StrengthResult, DEFAULT_EPSILON,
    MAX_INNER_ITERATIONS,
};
use bell_core::{Error, ProbabilityLaw};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

mod sweep;

#[derive(Parser)]
#[command(name = "bell", version, about = "Statistical strength of Bell experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Divergence from a quantum law to the local polytope.
    Strength(StrengthArgs),
    /// Evaluate an inequality on a law.
    Check { law: PathBuf, inequality: PathBuf },
    /// CSV table over a parameter grid.
    Sweep(sweep::SweepArgs),
    /// Count (and optionally list) the deterministic vertices of a scenario.
    Vertices {
        #[arg(long)]
        parties: usize,
        #[arg(long)]
        settings: usize,
        #[arg(long)]
        outcomes: usize,
        #[arg(long)]
        list: bool,
    },
    /// Rewrite an inequality file in canonical form.
    Canonicalize {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        reference: usize,
    },
    /// Dump the law of a named experiment or model file.
    Law(ExperimentArgs),
    /// Dump a built-in inequality.
    Inequality {
        #[arg(value_enum)]
        family: Family,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 1)]
        rungs: usize,
        #[arg(long, value_enum, default_value_t = Policy::Surviving)]
        policy: Policy,
        #[arg(long)]
        canonical: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum NamedKind {
    Chsh,
    Ghz,
    Cglmp,
    Ladder,
    Ch,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Cglmp,
    Ladder,
    Ghz,
}

#[derive(Clone, Copy, ValueEnum)]
enum Policy {
    Surviving,
    All,
}

impl From<Policy> for LadderPolicy {
    fn from(p: Policy) -> Self {
        match p {
            Policy::Surviving => LadderPolicy::Surviving,
            Policy::All => LadderPolicy::All,
        }
    }
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long, value_enum, conflicts_with = "model")]
    named: Option<NamedKind>,
    /// Model JSON (explicit or named shorthand).
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    d: usize,
    /// `maxent`, `optimize`, or a JSON file holding the coefficient list.
    #[arg(long, default_value = "maxent")]
    schmidt: String,
    #[arg(long, default_value_t = 4)]
    rungs: usize,
    #[arg(long, value_enum, default_value_t = Policy::Surviving)]
    policy: Policy,
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    #[command(flatten)]
    tuning: Tuning,
}

#[derive(Args, Clone)]
pub struct Tuning {
    /// KKT slack tolerance of the inner solver.
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    #[arg(long, default_value_t = MAX_INNER_ITERATIONS)]
    max_iterations: usize,
    /// Seed of the multi-start optimisers.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl Tuning {
    pub fn outer(&self) -> bell_core::strength::OuterConfig {
        let solver = bell_core::strength::SolverConfig {
            epsilon: self.epsilon,
            max_iterations: self.max_iterations,
            ..Default::default()
        };
        bell_core::strength::OuterConfig { solver, seed: self.seed, ..Default::default() }
    }
}

#[derive(Args)]
struct StrengthArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Also report the supporting face.
    #[arg(long)]
    face: bool,
    /// `pairs=N,acceptance=A`
    #[arg(long)]
    discount: Option<String>,
}

/// Failures, split by exit code.
pub enum Failure {
    Input(String),
    NotConverged(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::IterationCapExceeded { .. } => Failure::NotConverged(e.to_string()),
            e => Failure::Input(e.to_string()),
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = configure_threads() {
        eprintln!("bell: {msg}");
        return ExitCode::from(1);
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("bell: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::NotConverged(msg)) => {
            eprintln!("bell: {msg}");
            ExitCode::from(2)
        }
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("BELL_THREADS") else { return Ok(()) };
    let n: usize = v.parse().map_err(|_| format!("BELL_THREADS must be a positive integer, got {v:?}"))?;
    if n == 0 {
        return Err("BELL_THREADS must be positive".into());
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn run(command: Command) -> Outcome<()> {
    match command {
        Command::Strength(args) => cmd_strength(&args),
        Command::Check { law, inequality } => cmd_check(&law, &inequality),
        Command::Sweep(args) => sweep::run(&args),
        Command::Vertices { parties, settings, outcomes, list } => cmd_vertices(parties, settings, outcomes, list),
        Command::Canonicalize { input, output, reference } => cmd_canonicalize(&input, output.as_deref(), reference),
        Command::Law(args) => {
            let prepared = prepare_experiment(&args)?;
            println!("{}", prepared.law.to_json());
            Ok(())
        }
        Command::Inequality { family, d, rungs, policy, canonical } => {
            let ineq = match family {
                Family::Cglmp => cglmp_inequality_uniform(d)?,
                Family::Ladder => ladder_inequality(rungs, &ladder_settings(rungs, policy.into())?)?,
                Family::Ghz => ghz_inequality(&ghz_settings())?,
            };
            let ineq = if canonical { canonicalize_with_reference(&ineq, 0)? } else { ineq };
            println!("{}", ineq.to_json());
            Ok(())
        }
    }
}

fn read(path: &Path) -> Outcome<String> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("JSON value serialises"));
}

fn parse_schmidt(arg: &str) -> Outcome<SchmidtChoice> {
    Ok(match arg {
        "maxent" => SchmidtChoice::MaximallyEntangled,
        "optimize" => SchmidtChoice::Optimize,
        path => {
            let c: Vec<f64> = serde_json::from_str(&read(Path::new(path))?)
                .map_err(|e| Failure::Input(format!("{path}: expected a JSON list of coefficients: {e}")))?;
            SchmidtChoice::Given(c)
        }
    })
}

fn prepare_experiment(args: &ExperimentArgs) -> Outcome<Prepared> {
    let cfg = args.tuning.outer();
    if let Some(path) = &args.model {
        return match ModelFile::from_json(&read(path)?)? {
            ModelFile::Named(named) => Ok(prepare(&named.into(), &cfg)?),
            ModelFile::Explicit(explicit) => {
                let (model, pi) = explicit.to_model()?;
                Ok(Prepared { law: born_law(&model, &pi)?, result: None, details: json!({"experiment": "model"}) })
            }
        };
    }
    let named = match args.named {
        None => return Err(Failure::Input("give --named or --model".into())),
        Some(NamedKind::Chsh) => Named::Chsh,
        Some(NamedKind::Ghz) => Named::Ghz,
        Some(NamedKind::Cglmp) => Named::Cglmp { d: args.d, schmidt: parse_schmidt(&args.schmidt)? },
        Some(NamedKind::Ladder) => Named::Ladder { rungs: args.rungs, policy: args.policy.into() },
        Some(NamedKind::Ch) => Named::Ch { eta: args.eta },
    };
    Ok(prepare(&named, &cfg)?)
}

fn parse_discount(arg: &str) -> Outcome<(u32, f64)> {
    let bad = || Failure::Input(format!("--discount expects pairs=N,acceptance=A, got {arg:?}"));
    let (mut pairs, mut acceptance) = (None, None);
    for part in arg.split(',') {
        let (key, value) = part.split_once('=').ok_or_else(bad)?;
        match key.trim() {
            "pairs" => pairs = Some(value.trim().parse().map_err(|_| bad())?),
            "acceptance" => acceptance = Some(value.trim().parse().map_err(|_| bad())?),
            _ => return Err(bad()),
        }
    }
    Ok((pairs.ok_or_else(bad)?, acceptance.unwrap_or(1.0)))
}

pub fn solve(law: &ProbabilityLaw, tuning: &Tuning) -> Outcome<StrengthResult> {
    Ok(inf_divergence(law, &tuning.outer().solver)?)
}

fn cmd_strength(args: &StrengthArgs) -> Outcome<()> {
    let discount = args.discount.as_deref().map(parse_discount).transpose()?;
    let prepared = prepare_experiment(&args.experiment)?;
    let result = match prepared.result {
        Some(r) => r,
        None => solve(&prepared.law, &args.experiment.tuning)?,
    };
    let face = if args.face && result.converged { Some(extract_face(&prepared.law, &result)?) } else { None };
    let mut report = serde_json::to_value(StrengthReport::new(&result, face.as_ref())).expect("report serialises");
    let obj = report.as_object_mut().expect("report is an object");
    obj.insert("experiment".into(), prepared.details);
    if let Some((pairs, acceptance)) = discount {
        obj.insert(
            "discounted_bits".into(),
            json!(discounted_strength(result.divergence, pairs, acceptance)?),
        );
    }
    print_json(&report);
    if result.converged {
        Ok(())
    } else {
        Err(result.require_converged().unwrap_err().into())
    }
}

fn cmd_check(law_path: &Path, ineq_path: &Path) -> Outcome<()> {
    let law = ProbabilityLaw::from_json(&read(law_path)?)?;
    let ineq = BellInequality::from_json(&read(ineq_path)?)?;
    if law.scenario() != ineq.scenario() {
        return Err(Failure::Input(format!(
            "scenario mismatch: law is {:?}, inequality is {:?}",
            law.scenario(),
            ineq.scenario()
        )));
    }
    let value = ineq.evaluate(&law)?;
    let bound = ineq.bound();
    let violated = value > bound + 1e-12 * (1.0 + bound.abs());
    print_json(&json!({"value": value, "bound": bound, "violated": violated}));
    Ok(())
}

fn cmd_vertices(parties: usize, settings: usize, outcomes: usize, list: bool) -> Outcome<()> {
    let s = Scenario::new(parties, settings, outcomes)?;
    let count = vertex_count(s);
    // JSON numbers stop at u64; larger counts go out as decimal strings.
    let count = u64::try_from(count).map_or_else(|_| json!(count.to_string()), |c| json!(c));
    let mut out = json!({"scenario": s, "count": count});
    if list {
        let vertices: Vec<Value> = enumerate_vertices(s)?
            .map(|v| json!({"index": v.index(), "assignment": v.assignment()}))
            .collect();
        out["vertices"] = Value::Array(vertices);
    }
    print_json(&out);
    Ok(())
}

fn cmd_canonicalize(input: &Path, output: Option<&Path>, reference: usize) -> Outcome<()> {
    let ineq = BellInequality::from_json(&read(input)?)?;
    let canonical = canonicalize_with_reference(&ineq, reference)?;
    let text = serde_json::to_string_pretty(&InequalityFile::from(&canonical)).expect("inequality serialises");
    match output {
        Some(path) => fs::write(path, text + "\n").map_err(|e| Failure::Input(format!("{}: {e}", path.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

pub fn chsh() -> Outcome<ProbabilityLaw> {
    Ok(chsh_law()?)
}
