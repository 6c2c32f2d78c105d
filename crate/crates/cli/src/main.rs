use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use replenish::harness::{self, BenchConfig, GenConfig, NonUniformParams, Range};
use replenish::instance::{read_instance, read_schedule, validate, write_instance, write_schedule, Instance, ViolationKind};
use replenish::oracle::{self, Algorithm};

#[derive(Parser)]
#[command(name = "replenish", version, about = "Lot-sizing and joint replenishment solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one algorithm and print its cost breakdown.
    Solve {
        #[arg(long, value_parser = parse_algorithm)]
        alg: Algorithm,
        #[arg(long)]
        input: PathBuf,
        /// Write the event trace here, one JSON object per line.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        schedule_out: Option<PathBuf>,
    },
    /// Print the exact optimum.
    Oracle {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = oracle::DEFAULT_MAX_HORIZON)]
        max_horizon: usize,
    },
    /// Check a schedule against an instance and print its cost.
    Verify {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        schedule: PathBuf,
    },
    /// Write a generated instance.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
    },
    /// Run a benchmark config and write one CSV row per run.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_csv: PathBuf,
    },
}

#[derive(Args)]
struct GenCommon {
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum GenKind {
    Random {
        #[command(flatten)]
        common: GenCommon,
        #[arg(long, default_value_t = 10)]
        horizon: usize,
        #[arg(long, default_value_t = 1)]
        items: usize,
        #[arg(long, default_value_t = 6)]
        demands: usize,
        /// Range `LO:HI` (or a single value) for K0.
        #[arg(long, value_parser = parse_range, default_value = "1:20")]
        general_cost: Range,
        #[arg(long, value_parser = parse_range, default_value = "0:20")]
        item_cost: Range,
        #[arg(long, value_parser = parse_range, default_value = "0:6")]
        delay_slope: Range,
        #[arg(long, value_parser = parse_range, default_value = "0:6")]
        holding_slope: Range,
        #[arg(long, default_value_t = 0.2)]
        plateau: f64,
    },
    /// Set-cover reduction over random sets.
    Setcover {
        #[command(flatten)]
        common: GenCommon,
        #[arg(long, default_value_t = 4)]
        elements: usize,
        #[arg(long, default_value_t = 4)]
        sets: usize,
    },
    /// Single-item instance with linear slopes, one side cheap and one steep.
    Nonuniform {
        #[command(flatten)]
        common: GenCommon,
        #[arg(long, default_value_t = 12)]
        horizon: usize,
        #[arg(long, default_value_t = 8)]
        demands: usize,
        #[arg(long, default_value_t = 20)]
        general_cost: u64,
        #[arg(long, default_value_t = 10)]
        item_cost: u64,
        #[arg(long, value_parser = parse_range, default_value = "1:3")]
        low: Range,
        #[arg(long, value_parser = parse_range, default_value = "200:1000")]
        high: Range,
    },
}

/// Exit status 2 is for unreadable input, 1 for everything else.
enum Failure {
    Input(anyhow::Error),
    Violation(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Violation(e)
    }
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    Algorithm::parse(s).ok_or_else(|| {
        let names: Vec<&str> = Algorithm::ALL.iter().map(|a| a.name()).collect();
        format!("unknown algorithm {s:?}; expected one of {}", names.join(", "))
    })
}

fn parse_range(s: &str) -> Result<Range, String> {
    let num = |t: &str| t.trim().parse::<u64>().map_err(|e| format!("{t:?}: {e}"));
    let r = match s.split_once(':') {
        Some((lo, hi)) => Range::new(num(lo)?, num(hi)?),
        None => {
            let v = num(s)?;
            Range::new(v, v)
        }
    };
    if r.lo > r.hi {
        return Err(format!("empty range {s}"));
    }
    Ok(r)
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).with_context(|| format!("reading {}", path.display())).map_err(Failure::Input)
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), Failure> {
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Defects that make an instance meaningless. Curve shape is left to the
/// solvers: some accept any curve, others refuse.
const STRUCTURAL: [ViolationKind; 6] = [
    ViolationKind::EmptyHorizon,
    ViolationKind::DuplicateDemandId,
    ViolationKind::UnknownItem,
    ViolationKind::TimeOutOfRange,
    ViolationKind::ArrivalAfterDue,
    ViolationKind::CurveLength,
];

fn load_instance(path: &Path) -> Result<Instance, Failure> {
    let inst = read_instance(&read(path)?)
        .map_err(|e| Failure::Input(anyhow!(e).context(format!("in {}", path.display()))))?;
    let mut report = validate(&inst);
    report.violations.retain(|v| STRUCTURAL.contains(&v.kind));
    if !report.is_ok() {
        return Err(Failure::Input(anyhow!("invalid instance {}: {report}", path.display())));
    }
    Ok(inst)
}

fn print_json(value: &impl serde::Serialize) -> Result<(), Failure> {
    println!("{}", serde_json::to_string_pretty(value).context("encoding output")?);
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Solve { alg, input, trace, schedule_out } => {
            let inst = load_instance(&input)?;
            let run = oracle::run_algorithm(&inst, alg, trace.is_some()).map_err(|e| anyhow!(e).context(alg.name()))?;
            if let Some(path) = &trace {
                write(path, run.trace.to_jsonl())?;
            }
            if let Some(path) = &schedule_out {
                write(path, write_schedule(&run.schedule))?;
            }
            let cost = replenish::instance::cost_of(&inst, &run.schedule).map_err(|e| anyhow!(e))?;
            print_json(&serde_json::json!({ "algorithm": alg.name(), "orders": run.schedule.n_orders(), "cost": cost }))?;
            if let Some(m) = run.invariant_failure {
                return Err(Failure::Violation(anyhow!("invariant violated: {m}")));
            }
            Ok(())
        }
        Command::Oracle { input, max_horizon } => {
            let inst = load_instance(&input)?;
            let opt = oracle::optimum(&inst, max_horizon).map_err(|e| anyhow!(e))?;
            print_json(&serde_json::json!({ "optimum": opt }))
        }
        Command::Verify { input, schedule } => {
            let inst = load_instance(&input)?;
            let sched = read_schedule(&read(&schedule)?)
                .map_err(|e| Failure::Input(anyhow!(e).context(format!("in {}", schedule.display()))))?;
            match oracle::verify_schedule(&inst, &sched) {
                Ok(cost) => print_json(&cost),
                Err(violations) => {
                    for v in &violations {
                        eprintln!("{v}");
                    }
                    Err(Failure::Violation(anyhow!("{} violation(s)", violations.len())))
                }
            }
        }
        Command::Gen { kind } => {
            let (inst, out) = match kind {
                GenKind::Random {
                    common,
                    horizon,
                    items,
                    demands,
                    general_cost,
                    item_cost,
                    delay_slope,
                    holding_slope,
                    plateau,
                } => {
                    let cfg = GenConfig {
                        seed: common.seed,
                        horizon,
                        items,
                        demands,
                        general_cost,
                        item_cost,
                        delay_slope,
                        holding_slope,
                        plateau,
                    };
                    (harness::gen_random(&cfg).map_err(|e| anyhow!(e))?, common.out)
                }
                GenKind::Setcover { common, elements, sets } => {
                    let (n, family) = harness::random_cover(common.seed, elements, sets);
                    (harness::gen_setcover(n, &family).map_err(|e| anyhow!(e))?, common.out)
                }
                GenKind::Nonuniform { common, horizon, demands, general_cost, item_cost, low, high } => {
                    let p = NonUniformParams { seed: common.seed, horizon, demands, general_cost, item_cost, low, high };
                    (harness::gen_nonuniform_linear(&p).map_err(|e| anyhow!(e))?, common.out)
                }
            };
            write(&out, write_instance(&inst))
        }
        Command::Bench { config, out_csv } => {
            let cfg: BenchConfig = serde_json::from_slice(&read(&config)?)
                .map_err(|e| Failure::Input(anyhow!(e).context(format!("in {}", config.display()))))?;
            let report = harness::run_bench(&cfg).map_err(|e| match e {
                harness::HarnessError::Config(_) => Failure::Input(anyhow!(e)),
                e => Failure::Violation(anyhow!(e)),
            })?;
            write(&out_csv, report.to_csv().map_err(|e| anyhow!(e))?)?;
            print_json(&report.summary)?;
            if !report.is_clean() {
                for f in &report.failures {
                    eprintln!("{f}");
                }
                return Err(Failure::Violation(anyhow!("{} failure(s)", report.failures.len())));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Violation(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
