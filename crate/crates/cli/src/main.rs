//! Command-line entry point: configuration loading, single-run and factorial
//! execution, report emission.
//!
//! Exit codes: 0 success, 1 config error, 2 run failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use camsim::experiment::{
    emit_report, run_factorial, write_trade_log, FactorialSpec, ReportFormat, RunDocument,
};
use camsim::sim::{run_simulation, AgentMode, SimConfig};
use camsim::CaseId;

/// Configuration file: every field optional, missing keys fall back to the
/// model defaults, unknown keys are rejected.
#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct CliConfig {
    sim: SimConfig,
    seeds: Vec<u64>,
    workers: Option<usize>,
    out: Option<PathBuf>,
    trade_log: bool,
}

#[derive(Debug, Parser)]
#[command(name = "camsim", disable_version_flag = true)]
struct Cli {
    /// Print version and the default parameter table
    #[arg(long, global = true)]
    version: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Execute a single simulation run and write its metrics document
    Run(RunArgs),
    /// Execute the full 2x2 existence factorial over many seeds
    Factorial(FactorialArgs),
}

#[derive(Debug, Args, Default)]
struct CommonArgs {
    /// JSON configuration file; flags take precedence over file values
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    t_end: Option<i64>,
    /// Order-cycle period (must be even)
    #[arg(long)]
    dt: Option<i64>,
    /// Trend-entry lookback
    #[arg(long)]
    dt1: Option<i64>,
    /// Trend-exit / reversal-entry lookback
    #[arg(long)]
    dt2: Option<i64>,
    /// Reversal-exit lookback
    #[arg(long)]
    dt3: Option<i64>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write per-trade CSV logs
    #[arg(long)]
    trade_log: bool,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    seed: Option<u64>,
    /// CTAA participation: real, shadow, or absent
    #[arg(long)]
    ctaa: Option<String>,
    /// STRTA participation: real, shadow, or absent
    #[arg(long)]
    strta: Option<String>,
}

#[derive(Debug, Args)]
struct FactorialArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Seed set: "a..b" (half-open) or a comma-separated list
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    workers: Option<usize>,
}

fn version_text() -> String {
    let defaults = SimConfig::default();
    let mut out = format!(
        "camsim {} ({} build)\n\ndefault parameters:\n",
        env!("CARGO_PKG_VERSION"),
        if cfg!(debug_assertions) { "debug" } else { "release" },
    );
    out.push_str(&serde_json::to_string_pretty(&defaults).unwrap());
    out.push('\n');
    out
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Run(String),
}

impl CliError {
    fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) => ExitCode::from(1),
            CliError::Run(_) => ExitCode::from(2),
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<CliConfig, CliError> {
    let Some(path) = path else {
        return Ok(CliConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("bad config {}: {e}", path.display())))
}

fn apply_common(config: &mut CliConfig, args: &CommonArgs) {
    if let Some(t_end) = args.t_end {
        config.sim.t_end = t_end;
    }
    if let Some(dt) = args.dt {
        config.sim.windows.dt = dt;
    }
    if let Some(dt1) = args.dt1 {
        config.sim.windows.dt1 = dt1;
    }
    if let Some(dt2) = args.dt2 {
        config.sim.windows.dt2 = dt2;
    }
    if let Some(dt3) = args.dt3 {
        config.sim.windows.dt3 = dt3;
    }
    if let Some(out) = &args.out {
        config.out = Some(out.clone());
    }
    if args.trade_log {
        config.trade_log = true;
    }
}

fn parse_mode(text: &str) -> Result<AgentMode, CliError> {
    match text {
        "real" => Ok(AgentMode::Real),
        "shadow" => Ok(AgentMode::Shadow),
        "absent" => Ok(AgentMode::Absent),
        other => Err(CliError::Config(format!(
            "invalid agent mode `{other}` (expected real, shadow, or absent)"
        ))),
    }
}

fn parse_seeds(text: &str) -> Result<Vec<u64>, CliError> {
    let bad = |_| CliError::Config(format!("invalid seed spec `{text}`"));
    if let Some((lo, hi)) = text.split_once("..") {
        let lo: u64 = lo.trim().parse().map_err(bad)?;
        let hi: u64 = hi.trim().parse().map_err(bad)?;
        if lo >= hi {
            return Err(CliError::Config(format!("empty seed range `{text}`")));
        }
        return Ok((lo..hi).collect());
    }
    text.split(',')
        .map(|s| s.trim().parse().map_err(bad))
        .collect()
}

fn cmd_run(args: &RunArgs) -> Result<(), CliError> {
    let mut config = load_config(args.common.config.as_deref())?;
    apply_common(&mut config, &args.common);
    if let Some(seed) = args.seed {
        config.sim.seed = seed;
    }
    if let Some(mode) = &args.ctaa {
        config.sim.ctaa_mode = parse_mode(mode)?;
    }
    if let Some(mode) = &args.strta {
        config.sim.strta_mode = parse_mode(mode)?;
    }
    config
        .sim
        .validate()
        .map_err(|e| CliError::Config(e.to_string()))?;

    let result = run_simulation(&config.sim).map_err(|e| CliError::Run(e.to_string()))?;

    let out_dir = config.out.unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::Run(format!("cannot create {}: {e}", out_dir.display())))?;

    let trade_log_path = if config.trade_log {
        let path = out_dir.join(format!("trades_seed{}.csv", config.sim.seed));
        write_trade_log(&result.trades, config.sim.delta_p, &path)
            .map_err(|e| CliError::Run(e.to_string()))?;
        Some(path.display().to_string())
    } else {
        None
    };

    let exists = |mode| mode != AgentMode::Shadow && mode != AgentMode::Absent;
    let case = match (exists(config.sim.ctaa_mode), exists(config.sim.strta_mode)) {
        (true, true) => CaseId::BothExist,
        (true, false) => CaseId::CtaaOnly,
        (false, true) => CaseId::StrtaOnly,
        (false, false) => CaseId::NeitherExist,
    };
    let doc = RunDocument::from_result(&result, case, trade_log_path)
        .map_err(|e| CliError::Run(e.to_string()))?;
    let path = out_dir.join(format!("run_seed{}.json", config.sim.seed));
    std::fs::write(&path, serde_json::to_string_pretty(&doc).unwrap())
        .map_err(|e| CliError::Run(e.to_string()))?;

    println!(
        "seed {}: {} trades, final mid {:.2}, ctaa {:.1}% / {} fills, strta {:.1}% / {} fills",
        config.sim.seed,
        doc.trade_count,
        doc.final_mid,
        doc.metrics.ctaa_return_pct,
        doc.metrics.ctaa_volume,
        doc.metrics.strta_return_pct,
        doc.metrics.strta_volume,
    );
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_factorial(args: &FactorialArgs) -> Result<(), CliError> {
    let mut config = load_config(args.common.config.as_deref())?;
    apply_common(&mut config, &args.common);
    if let Some(spec) = &args.seeds {
        config.seeds = parse_seeds(spec)?;
    }
    if let Some(workers) = args.workers {
        config.workers = Some(workers);
    }
    config
        .sim
        .validate()
        .map_err(|e| CliError::Config(e.to_string()))?;

    let spec = FactorialSpec {
        base: config.sim,
        seeds: if config.seeds.is_empty() {
            FactorialSpec::default().seeds
        } else {
            config.seeds
        },
        workers: config.workers.unwrap_or(1),
    };
    let report = run_factorial(&spec).map_err(|e| CliError::Run(e.to_string()))?;

    let out_dir = config.out.unwrap_or_else(|| PathBuf::from("out"));
    for format in [ReportFormat::Csv, ReportFormat::Json, ReportFormat::Text] {
        emit_report(&report, &out_dir, format).map_err(|e| CliError::Run(e.to_string()))?;
    }

    if config.trade_log {
        for case in CaseId::ALL {
            for &seed in &spec.seeds {
                let result = run_simulation(&case.config(&spec.base, seed))
                    .map_err(|e| CliError::Run(e.to_string()))?;
                let path = out_dir
                    .join("runs")
                    .join(format!("trades_{}_{}.csv", case.label(), seed));
                write_trade_log(&result.trades, spec.base.delta_p, &path)
                    .map_err(|e| CliError::Run(e.to_string()))?;
            }
        }
    }

    print!("{}", camsim::experiment::render_text(&report));
    println!("\nreport written to {}", out_dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.version {
        print!("{}", version_text());
        return ExitCode::SUCCESS;
    }
    let Some(command) = &cli.command else {
        eprintln!("no command given; try `camsim run` or `camsim factorial`");
        return ExitCode::from(1);
    };
    let result = match command {
        Command::Run(args) => cmd_run(args),
        Command::Factorial(args) => cmd_factorial(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            match &err {
                CliError::Config(msg) => eprintln!("config error: {msg}"),
                CliError::Run(msg) => eprintln!("run error: {msg}"),
            }
            err.exit_code()
        }
    }
}
