mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use crn_cex::crn::parse_crn;
use crn_cex::engine::{generate_counterexample, CexOutcome, EngineConfig};
use crn_cex::oracle::{enumerate_witnesses, expm_reach_probability};
use crn_cex::smt::SOLVER_ENV;
use crn_cex::witness::finite_ctmc_from_json;
use crn_cex::{format_sig, models, Crn, Property, SolverConfig};

use report::{ConfigEcho, InputEcho, RunReport};

const EXIT_BUDGET: u8 = 2;

#[derive(Parser)]
#[command(name = "crn-cex", version, about = "Counterexamples for time-bounded reachability in chemical reaction networks")]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search for a counterexample to P<=p [ true U<=T S=θ ].
    Check(CheckArgs),
    /// Brute-force references for cross-checking small instances.
    #[command(subcommand)]
    Oracle(OracleCommand),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Artifact {
    Dot,
    Json,
    Prism,
}

#[derive(Args)]
struct CheckArgs {
    /// Model file; `models/<name>.crn` also resolves to the bundled copy.
    model: PathBuf,
    /// Target as <species>=<population>.
    #[arg(long)]
    target: String,
    /// Time bound T.
    #[arg(long)]
    time: f64,
    /// Probability threshold p.
    #[arg(long)]
    prob: f64,
    /// Divide-and-conquer step (0 disables).
    #[arg(long, default_value_t = 0)]
    dnc: u64,
    /// Largest bound for one divide-and-conquer segment [default: 8 * step].
    #[arg(long)]
    dnc_cap: Option<usize>,
    /// Witnesses between scaffold rounds (0 disables scaffolding).
    #[arg(long, default_value_t = 3)]
    scaffold_trigger: usize,
    /// Longest scaffold fragment.
    #[arg(long = "scaffold-j", default_value_t = 3)]
    scaffold_j: usize,
    /// Fragments per scaffold round.
    #[arg(long, default_value_t = 50)]
    scaffold_count: usize,
    /// Graph growth (states + transitions) between probability evaluations.
    #[arg(long, default_value_t = 25)]
    recheck_growth: usize,
    #[arg(long, default_value_t = 500)]
    max_bound: usize,
    /// Wall-clock budget in seconds.
    #[arg(long, default_value_t = 1800)]
    budget_secs: u64,
    /// Solver command line; the CRN_CEX_SOLVER environment variable takes precedence.
    #[arg(long, default_value = "z3 -in")]
    solver: String,
    /// Limit for a single solver check, in seconds.
    #[arg(long, default_value_t = 300)]
    solver_timeout: u64,
    /// Output directory for the report and exported artifacts.
    #[arg(long, default_value = "crn-cex-out")]
    out: PathBuf,
    /// Artifacts to write besides report.json.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "dot,json")]
    emit: Vec<Artifact>,
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Count loop-free witnesses of exactly k transitions.
    Paths {
        model: PathBuf,
        #[arg(long)]
        target: String,
        #[arg(long)]
        k: usize,
    },
    /// Reachability probability of an exported witness CTMC (dense exponential).
    Prob {
        json: PathBuf,
        #[arg(long)]
        time: f64,
    },
}

fn load_model(path: &Path) -> Result<(Crn, String)> {
    match fs::read_to_string(path) {
        Ok(text) => {
            let crn = parse_crn(&text).with_context(|| format!("parsing {}", path.display()))?;
            Ok((crn, text))
        }
        Err(e) => {
            let bundled = path
                .file_stem()
                .and_then(|s| s.to_str())
                .filter(|_| path.extension().is_some_and(|x| x == "crn"))
                .and_then(|stem| bundled_text(stem).map(|t| (stem, t)));
            match bundled {
                Some((stem, text)) => {
                    log::info!("{} not found; using bundled model {stem}", path.display());
                    let crn = models::by_name(stem).expect("bundled model");
                    Ok((crn, text.to_string()))
                }
                None => Err(e).with_context(|| format!("reading {}", path.display())),
            }
        }
    }
}

fn bundled_text(stem: &str) -> Option<&'static str> {
    match stem {
        "single_species" => Some(models::SINGLE_SPECIES),
        "futile_cycle" => Some(models::FUTILE_CYCLE),
        "yeast" => Some(models::YEAST),
        "motility" => Some(models::MOTILITY),
        _ => None,
    }
}

fn solver_command(flag: &str) -> String {
    match std::env::var(SOLVER_ENV) {
        Ok(v) if !v.trim().is_empty() => v,
        _ => flag.to_string(),
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn check(args: CheckArgs) -> Result<ExitCode> {
    let (crn, text) = load_model(&args.model)?;
    let target = Property::parse_target(&crn, &args.target)?;
    let prop = Property::new(target, args.time, args.prob)?;
    let solver = SolverConfig::from_command_line(&solver_command(&args.solver))
        .with_timeout(Duration::from_secs(args.solver_timeout));
    if solver.command.is_empty() {
        bail!("empty solver command");
    }
    let config = EngineConfig {
        delta: args.dnc,
        scaffold_trigger: args.scaffold_trigger,
        scaffold_j_max: args.scaffold_j,
        scaffold_count: args.scaffold_count,
        recheck_growth: args.recheck_growth,
        max_bound: args.max_bound,
        budget: Duration::from_secs(args.budget_secs),
        dnc_segment_cap: args.dnc_cap,
        solver,
        ..EngineConfig::default()
    };

    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let mut report = RunReport::new(
        InputEcho {
            model: args.model.display().to_string(),
            sha256: hex::encode(Sha256::digest(text.as_bytes())),
            target: args.target.clone(),
            time_bound: args.time,
            threshold: args.prob,
        },
        ConfigEcho::from(&config),
    );
    let report_path = args.out.join("report.json");

    let outcome = match generate_counterexample(&crn, &prop, &config) {
        Ok(o) => o,
        Err(e) => {
            report.fail(e.to_string());
            write(&report_path, &serde_json::to_string_pretty(&report)?)?;
            return Err(e.into());
        }
    };
    report.record(&outcome);
    let result = outcome.result();
    for artifact in &args.emit {
        match artifact {
            Artifact::Dot => write(&args.out.join("cex.dot"), &result.ctmc.export_dot())?,
            Artifact::Json => write(&args.out.join("cex.json"), &result.ctmc.export_json())?,
            Artifact::Prism => write(&args.out.join("cex.sm"), &result.ctmc.export_prism(args.time))?,
        }
    }
    write(&report_path, &serde_json::to_string_pretty(&report)?)?;

    let verdict = match outcome {
        CexOutcome::Counterexample(_) => "counterexample found",
        CexOutcome::BudgetExhausted(_) => "no counterexample within budget",
    };
    println!("{verdict}");
    println!("probability: {}", format_sig(result.probability, 6));
    println!(
        "cex size: {} ({} states, {} transitions; {} with sink)",
        result.ctmc.cex_size(),
        result.ctmc.node_count(),
        result.ctmc.edge_count(),
        result.ctmc.cex_size_with_sink()
    );
    println!(
        "witnesses: {} (+{} scaffold fragments), longest {}",
        result.witness_count,
        result.scaffold_fragments,
        result.longest_witness()
    );
    println!("time: {:.2} s", result.elapsed.as_secs_f64());
    println!("report: {}", report_path.display());
    Ok(if outcome.is_counterexample() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_BUDGET)
    })
}

fn oracle(cmd: OracleCommand) -> Result<ExitCode> {
    match cmd {
        OracleCommand::Paths { model, target, k } => {
            let (crn, _) = load_model(&model)?;
            let target = Property::parse_target(&crn, &target)?;
            let paths = enumerate_witnesses(&crn, target, k)?;
            println!("{}", paths.len());
        }
        OracleCommand::Prob { json, time } => {
            let text = fs::read_to_string(&json).with_context(|| format!("reading {}", json.display()))?;
            let ctmc = finite_ctmc_from_json(&text)?;
            let p = expm_reach_probability(&ctmc, time)?;
            println!("{}", format_sig(p, 6));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::Check(args) => check(args),
        Command::Oracle(cmd) => oracle(cmd),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
