//! Command-line front end: yield bounds, parameter sweeps, embeddability
//! classification, reachability checks and the verification suites.
//!
//! Exit codes: 0 success or affirmative verdict, 1 negative verdict,
//! 2 usage error, 3 I/O error, 4 undetermined verdict.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use photoiso_core::bounds::{report, YieldReport};
use photoiso_core::checks;
use photoiso_core::gibbs::{embeddability_check, MatrixFile, Verdict};
use photoiso_core::markov::{ctm_reachable, ReachGoal, ReachOptions};
use photoiso_core::thermo::YIELD_LEVEL;
use photoiso_core::{PhotoisomerInstance, PopulationVector, ThermalSystem};

const EXIT_NEGATIVE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_UNDETERMINED: u8 = 4;

#[derive(Parser)]
#[command(
    name = "photoiso",
    version,
    about = "Bounds on photoisomerization yield under thermal, Markovian and embeddable thermal operations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute all yield bounds for one instance
    Bounds(BoundsArgs),
    /// Sweep the gap and write the bounds as CSV
    Sweep(SweepArgs),
    /// Classify a Gibbs-stochastic matrix file as embeddable or not
    CheckEmbeddable {
        /// JSON file with {"energies": [...], "matrix": [[...], ...]}
        matrix: PathBuf,
    },
    /// Search for a sequence of partial thermalizations reaching a target
    CheckCtm(CheckCtmArgs),
    /// Run a verification suite and report per-check deviations
    Verify {
        #[arg(value_enum)]
        suite: Suite,
    },
}

#[derive(Args)]
struct BoundsArgs {
    /// Cis-trans gap (dimensionless, in units of inverse temperature)
    #[arg(long)]
    delta: f64,
    /// Photoexcited level; pass `inf` for the infinite limit
    #[arg(long, value_parser = parse_energy)]
    w: f64,
    /// Photoexcitation factor in [0, 1]
    #[arg(long)]
    q: f64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    delta_min: f64,
    #[arg(long)]
    delta_max: f64,
    /// Number of gap values, endpoints included
    #[arg(long)]
    steps: usize,
    /// Comma-separated photoexcitation factors
    #[arg(long, value_delimiter = ',', required = true)]
    q_list: Vec<f64>,
    /// Photoexcited level; pass `inf` for the infinite limit
    #[arg(long, value_parser = parse_energy)]
    w: f64,
    /// Columns to fill (default: all that are defined for the given w)
    #[arg(long, value_enum, value_delimiter = ',')]
    outputs: Option<Vec<OutputColumn>>,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CheckCtmArgs {
    /// JSON file with {"energies": [...]}
    #[arg(long)]
    system: PathBuf,
    /// JSON file with {"probs": [...]}
    #[arg(long)]
    initial: PathBuf,
    /// JSON file with {"probs": [...]}
    #[arg(long)]
    target: PathBuf,
    #[arg(long, default_value_t = 6)]
    max_steps: usize,
    #[arg(long, default_value_t = 0.01)]
    lambda_step: f64,
    /// `l1`: match the target in L1; `yield`: reach its yield coordinate
    #[arg(long, value_enum, default_value_t = Mode::L1)]
    mode: Mode,
    /// Level index compared in `yield` mode
    #[arg(long, default_value_t = YIELD_LEVEL)]
    yield_level: usize,
    /// Write the result JSON here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    L1,
    Yield,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputColumn {
    GammaStar,
    GammaMarkov,
    GammaEmbed,
    GammaTh,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    Gs3,
    Gs4,
    Markov,
    Embed,
    Curves,
    All,
}

impl Suite {
    fn key(self) -> &'static str {
        match self {
            Suite::Gs3 => "gs3",
            Suite::Gs4 => "gs4",
            Suite::Markov => "markov",
            Suite::Embed => "embed",
            Suite::Curves => "curves",
            Suite::All => "all",
        }
    }
}

fn parse_energy(s: &str) -> Result<f64, String> {
    let value: f64 = s
        .parse()
        .map_err(|_| format!("`{s}` is not a number or `inf`"))?;
    if value.is_nan() {
        return Err("energy must not be NaN".to_string());
    }
    Ok(value)
}

enum CliError {
    Usage(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

fn usage<E: fmt::Display>(err: E) -> CliError {
    CliError::Usage(err.to_string())
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.code())
        }
    }
}

fn run(command: Command) -> Result<u8, CliError> {
    match command {
        Command::Bounds(args) => cmd_bounds(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::CheckEmbeddable { matrix } => cmd_check_embeddable(&matrix),
        Command::CheckCtm(args) => cmd_check_ctm(args),
        Command::Verify { suite } => cmd_verify(suite),
    }
}

#[derive(Serialize)]
struct BoundsOutput {
    delta: f64,
    #[serde(with = "photoiso_core::json::energy")]
    w: f64,
    q: f64,
    #[serde(flatten)]
    report: YieldReport,
}

fn cmd_bounds(args: BoundsArgs) -> Result<u8, CliError> {
    let instance = PhotoisomerInstance::new(args.delta, args.w, args.q).map_err(usage)?;
    let rep = report(&instance).map_err(usage)?;
    match args.format {
        Format::Json => {
            let out = BoundsOutput {
                delta: args.delta,
                w: args.w,
                q: args.q,
                report: rep,
            };
            println!("{}", serde_json::to_string_pretty(&out).expect("serializable"));
        }
        Format::Text => {
            println!("delta        = {}", args.delta);
            println!("w            = {}", args.w);
            println!("q            = {}", args.q);
            println!("q_tilde      = {}", rep.q_tilde);
            println!("branch       = {}", if rep.branch_high_q { "q >= q_tilde" } else { "q < q_tilde" });
            println!("gamma_star   = {}", rep.gamma_star);
            println!("gamma_markov = {}", rep.gamma_markov);
            match rep.gamma_embed {
                Some(ge) => println!("gamma_embed  = {ge}"),
                None => println!("gamma_embed  = (defined for w = inf only)"),
            }
            println!("gamma_th     = {}", rep.gamma_th);
            println!("gap star-markov = {}", rep.gap_star_markov);
        }
    }
    Ok(0)
}

const CSV_HEADER: &str = "delta,q,w,gamma_star,gamma_markov,gamma_embed,gamma_th";

fn cmd_sweep(args: SweepArgs) -> Result<u8, CliError> {
    if args.steps < 2 {
        return Err(CliError::Usage("steps must be at least 2".to_string()));
    }
    if !(args.delta_min.is_finite() && args.delta_max.is_finite())
        || args.delta_min < 0.0
        || args.delta_min > args.delta_max
    {
        return Err(CliError::Usage(
            "need 0 <= delta-min <= delta-max, both finite".to_string(),
        ));
    }
    if args.q_list.is_empty() || args.q_list.iter().any(|q| !(0.0..=1.0).contains(q)) {
        return Err(CliError::Usage(
            "q-list entries must lie in [0, 1]".to_string(),
        ));
    }
    let columns = match &args.outputs {
        Some(cols) => cols.clone(),
        None => {
            let mut cols = vec![
                OutputColumn::GammaStar,
                OutputColumn::GammaMarkov,
            ];
            if args.w.is_infinite() {
                cols.push(OutputColumn::GammaEmbed);
            }
            cols.push(OutputColumn::GammaTh);
            cols
        }
    };
    let wants = |c: OutputColumn| columns.contains(&c);
    if wants(OutputColumn::GammaEmbed) && !args.w.is_infinite() {
        return Err(CliError::Usage(
            "gamma_embed is defined for w = inf only".to_string(),
        ));
    }

    let mut body = String::new();
    body.push_str(CSV_HEADER);
    body.push('\n');
    for i in 0..args.steps {
        let delta = args.delta_min
            + (args.delta_max - args.delta_min) * i as f64 / (args.steps - 1) as f64;
        for &q in &args.q_list {
            let instance = PhotoisomerInstance::new(delta, args.w, q).map_err(usage)?;
            let rep = report(&instance).map_err(usage)?;
            let cell = |on: bool, v: f64| if on { v.to_string() } else { String::new() };
            let embed_cell = match (wants(OutputColumn::GammaEmbed), rep.gamma_embed) {
                (true, Some(ge)) => ge.to_string(),
                _ => String::new(),
            };
            body.push_str(&format!(
                "{delta},{q},{w},{star},{markov},{embed},{th}\n",
                w = args.w,
                star = cell(wants(OutputColumn::GammaStar), rep.gamma_star),
                markov = cell(wants(OutputColumn::GammaMarkov), rep.gamma_markov),
                embed = embed_cell,
                th = cell(wants(OutputColumn::GammaTh), rep.gamma_th),
            ));
        }
    }
    fs::write(&args.out, body)
        .map_err(|e| CliError::Io(format!("{}: {e}", args.out.display())))?;
    Ok(0)
}

fn cmd_check_embeddable(path: &Path) -> Result<u8, CliError> {
    let text = read_file(path)?;
    let file: MatrixFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("malformed matrix file: {e}")))?;
    if file.energies.len() != 3 {
        return Err(CliError::Usage(
            "embeddability classification needs a three-level system".to_string(),
        ));
    }
    let matrix = file
        .into_matrix()
        .map_err(|e| CliError::Usage(format!("not a Gibbs-stochastic matrix: {e}")))?;
    let verdict = embeddability_check(&matrix).map_err(usage)?;
    println!("verdict:  {}", verdict.verdict);
    println!("reason:   {}", verdict.reason);
    println!("spectrum: {}", verdict.spectrum);
    Ok(match verdict.verdict {
        Verdict::Embeddable => 0,
        Verdict::NotEmbeddable => EXIT_NEGATIVE,
        Verdict::Undetermined => EXIT_UNDETERMINED,
    })
}

#[derive(Deserialize)]
struct SystemFile {
    #[serde(with = "photoiso_core::json::energy_vec")]
    energies: Vec<f64>,
}

#[derive(Serialize)]
struct CtmOutput<'a> {
    reachable: bool,
    witness: &'a Option<Vec<photoiso_core::ThermalizationStep>>,
    achieved: &'a [f64],
    max_steps: usize,
    lambda_step: f64,
}

fn cmd_check_ctm(args: CheckCtmArgs) -> Result<u8, CliError> {
    let system: SystemFile = serde_json::from_str(&read_file(&args.system)?)
        .map_err(|e| CliError::Usage(format!("malformed system file: {e}")))?;
    let system = ThermalSystem::new(system.energies).map_err(usage)?;
    let initial: PopulationVector = serde_json::from_str(&read_file(&args.initial)?)
        .map_err(|e| CliError::Usage(format!("malformed initial state: {e}")))?;
    let target: PopulationVector = serde_json::from_str(&read_file(&args.target)?)
        .map_err(|e| CliError::Usage(format!("malformed target state: {e}")))?;
    let options = ReachOptions {
        max_steps: args.max_steps,
        lambda_step: args.lambda_step,
        goal: match args.mode {
            Mode::L1 => ReachGoal::MatchL1,
            Mode::Yield => ReachGoal::DominateYield {
                level: args.yield_level,
            },
        },
    };
    let result = ctm_reachable(&initial, &target, &system, &options).map_err(usage)?;
    let rendered = serde_json::to_string_pretty(&CtmOutput {
        reachable: result.reachable,
        witness: &result.witness,
        achieved: result.achieved.probs(),
        max_steps: result.max_steps,
        lambda_step: result.lambda_step,
    })
    .expect("serializable");
    match &args.out {
        Some(path) => fs::write(path, rendered + "\n")
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?,
        None => println!("{rendered}"),
    }
    if result.reachable {
        Ok(0)
    } else {
        println!(
            "not found at resolution lambda_step = {}, max_steps = {}",
            result.lambda_step, result.max_steps
        );
        Ok(EXIT_NEGATIVE)
    }
}

fn cmd_verify(suite: Suite) -> Result<u8, CliError> {
    let outcomes = checks::suite(suite.key()).expect("suite names come from the enum");
    let mut all_passed = true;
    for outcome in &outcomes {
        println!("{}", outcome.line());
        all_passed &= outcome.passed;
    }
    println!(
        "{}: {} of {} checks passed",
        if all_passed { "OK" } else { "FAILED" },
        outcomes.iter().filter(|o| o.passed).count(),
        outcomes.len()
    );
    Ok(if all_passed { 0 } else { EXIT_NEGATIVE })
}
