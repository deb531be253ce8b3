//! The 2x2 existence factorial with common random numbers across many seeds,
//! aggregated into the report tables.
//!
//! "Not exist" is realized as shadow mode: the agent trades virtually against
//! best quotes so its figures can still be estimated, but it never touches
//! the book.

use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::book::Trade;
use crate::sim::{run_simulation, AgentMode, ConfigError, RunResult, SimConfig};
use crate::stats::{
    excess_kurtosis, final_return, return_series, squared_return_autocorr, stdev_returns,
    trading_volume, StatsError,
};

pub const SHORT_INTERVAL: i64 = 100;
pub const LONG_INTERVAL: i64 = 20_000;
pub const ACF_LAGS: usize = 5;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("run failed for case {case} seed {seed}: {source}")]
    Run {
        case: &'static str,
        seed: u64,
        source: ConfigError,
    },
    #[error("metrics failed for case {case} seed {seed}: {source}")]
    Metrics {
        case: &'static str,
        seed: u64,
        source: StatsError,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// One cell of the existence factorial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseId {
    BothExist,
    CtaaOnly,
    StrtaOnly,
    NeitherExist,
}

impl CaseId {
    pub const ALL: [CaseId; 4] = [
        CaseId::BothExist,
        CaseId::CtaaOnly,
        CaseId::StrtaOnly,
        CaseId::NeitherExist,
    ];

    pub fn label(self) -> &'static str {
        match self {
            CaseId::BothExist => "both_exist",
            CaseId::CtaaOnly => "ctaa_only",
            CaseId::StrtaOnly => "strta_only",
            CaseId::NeitherExist => "neither_exist",
        }
    }

    pub fn ctaa_exists(self) -> bool {
        matches!(self, CaseId::BothExist | CaseId::CtaaOnly)
    }

    pub fn strta_exists(self) -> bool {
        matches!(self, CaseId::BothExist | CaseId::StrtaOnly)
    }

    pub fn modes(self) -> (AgentMode, AgentMode) {
        let mode = |exists| if exists { AgentMode::Real } else { AgentMode::Shadow };
        (mode(self.ctaa_exists()), mode(self.strta_exists()))
    }

    pub fn config(self, base: &SimConfig, seed: u64) -> SimConfig {
        let (ctaa_mode, strta_mode) = self.modes();
        SimConfig {
            ctaa_mode,
            strta_mode,
            seed,
            ..base.clone()
        }
    }
}

/// Per-run metrics record, one line of `runs/metrics.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub case: CaseId,
    pub seed: u64,
    pub ctaa_return_pct: f64,
    pub ctaa_volume: u64,
    pub strta_return_pct: f64,
    pub strta_volume: u64,
    pub stdev_100: f64,
    pub stdev_20000: f64,
    pub excess_kurtosis_100: f64,
    pub acf_sq: [f64; ACF_LAGS],
}

pub fn compute_metrics(
    result: &RunResult,
    case: CaseId,
    seed: u64,
) -> Result<RunMetrics, StatsError> {
    let config = &result.config;
    let final_mid = result.final_mid();
    let short = return_series(&result.mids, config.t_c, config.t_end, SHORT_INTERVAL);
    let long = return_series(&result.mids, config.t_c, config.t_end, LONG_INTERVAL);
    let acf = squared_return_autocorr(&short, ACF_LAGS)?;

    let ledger_stats = |ledger: Option<&crate::stats::Ledger>| match ledger {
        Some(l) => (final_return(l, final_mid, config.p_f), trading_volume(l) as u64),
        None => (0.0, 0),
    };
    let (ctaa_return_pct, ctaa_volume) = ledger_stats(result.ctaa.as_ref());
    let (strta_return_pct, strta_volume) = ledger_stats(result.strta.as_ref());

    Ok(RunMetrics {
        case,
        seed,
        ctaa_return_pct,
        ctaa_volume,
        strta_return_pct,
        strta_volume,
        stdev_100: stdev_returns(&short)?,
        stdev_20000: stdev_returns(&long)?,
        excess_kurtosis_100: excess_kurtosis(&short)?,
        acf_sq: acf.try_into().expect("fixed lag count"),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorialSpec {
    pub base: SimConfig,
    pub seeds: Vec<u64>,
    pub workers: usize,
}

impl Default for FactorialSpec {
    fn default() -> Self {
        Self {
            base: SimConfig::default(),
            seeds: (0..100).collect(),
            workers: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub mean: f64,
    pub stderr: f64,
}

/// A 2x2 table: rows CTAA exist / not exist, columns STRTA exist / not exist.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    /// Indexed `[ctaa_exists as row][strta_exists as col]` with exist first.
    pub cells: [[Cell; 2]; 2],
}

impl Table {
    pub fn cell(&self, ctaa_exists: bool, strta_exists: bool) -> Cell {
        self.cells[usize::from(!ctaa_exists)][usize::from(!strta_exists)]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StylizedFactsRow {
    pub case: CaseId,
    pub excess_kurtosis_100: f64,
    pub acf_sq: [f64; ACF_LAGS],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorialReport {
    pub base_config: SimConfig,
    pub seeds: Vec<u64>,
    /// In order: CTAA return, CTAA volume, STRTA return, STRTA volume,
    /// stdev of 100-tick returns, stdev of 20000-tick returns.
    pub tables: Vec<Table>,
    pub stylized_facts: Vec<StylizedFactsRow>,
    pub runs: Vec<RunMetrics>,
}

fn mean_stderr(values: &[f64]) -> Cell {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let stderr = if values.len() < 2 {
        0.0
    } else {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    };
    Cell { mean, stderr }
}

fn aggregate_table(
    runs: &[RunMetrics],
    name: &str,
    value: impl Fn(&RunMetrics) -> f64,
) -> Table {
    let mut cells = [[Cell { mean: 0.0, stderr: 0.0 }; 2]; 2];
    for case in CaseId::ALL {
        let values: Vec<f64> = runs
            .iter()
            .filter(|r| r.case == case)
            .map(&value)
            .collect();
        let row = usize::from(!case.ctaa_exists());
        let col = usize::from(!case.strta_exists());
        cells[row][col] = mean_stderr(&values);
    }
    Table { name: name.to_string(), cells }
}

/// Run all four cases over all seeds and aggregate. Deterministic given the
/// spec: results are sorted by (case, seed) before aggregation, so the
/// worker count never affects the report.
pub fn run_factorial(spec: &FactorialSpec) -> Result<FactorialReport, ExperimentError> {
    let jobs: Vec<(CaseId, u64)> = CaseId::ALL
        .iter()
        .flat_map(|&case| spec.seeds.iter().map(move |&seed| (case, seed)))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers.max(1))
        .build()
        .expect("thread pool");

    let mut runs: Vec<RunMetrics> = pool.install(|| {
        jobs.par_iter()
            .map(|&(case, seed)| {
                let config = case.config(&spec.base, seed);
                let result = run_simulation(&config).map_err(|source| ExperimentError::Run {
                    case: case.label(),
                    seed,
                    source,
                })?;
                compute_metrics(&result, case, seed).map_err(|source| {
                    ExperimentError::Metrics { case: case.label(), seed, source }
                })
            })
            .collect::<Result<Vec<_>, _>>()
    })?;
    runs.sort_by_key(|r| (r.case, r.seed));

    Ok(aggregate(&spec.base, &spec.seeds, runs))
}

/// Aggregate per-run metrics into the report; exposed so a report can be
/// re-derived from a persisted `metrics.jsonl` without re-simulation.
pub fn aggregate(base: &SimConfig, seeds: &[u64], runs: Vec<RunMetrics>) -> FactorialReport {
    let tables = vec![
        aggregate_table(&runs, "ctaa_return_pct", |r| r.ctaa_return_pct),
        aggregate_table(&runs, "ctaa_volume", |r| r.ctaa_volume as f64),
        aggregate_table(&runs, "strta_return_pct", |r| r.strta_return_pct),
        aggregate_table(&runs, "strta_volume", |r| r.strta_volume as f64),
        aggregate_table(&runs, "stdev_100", |r| r.stdev_100),
        aggregate_table(&runs, "stdev_20000", |r| r.stdev_20000),
    ];
    let stylized_facts = CaseId::ALL
        .iter()
        .map(|&case| {
            let subset: Vec<&RunMetrics> = runs.iter().filter(|r| r.case == case).collect();
            let n = subset.len() as f64;
            let mut acf = [0.0; ACF_LAGS];
            for lag in 0..ACF_LAGS {
                acf[lag] = subset.iter().map(|r| r.acf_sq[lag]).sum::<f64>() / n;
            }
            StylizedFactsRow {
                case,
                excess_kurtosis_100: subset.iter().map(|r| r.excess_kurtosis_100).sum::<f64>() / n,
                acf_sq: acf,
            }
        })
        .collect();
    FactorialReport {
        base_config: base.clone(),
        seeds: seeds.to_vec(),
        tables,
        stylized_facts,
        runs,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
    Text,
}

/// Write the report under `out_dir`: `report/table{1..6}.csv` plus
/// `report/stylized_facts.csv` and `runs/metrics.jsonl` for CSV,
/// `report.json` for JSON, `report.txt` for the text rendering.
pub fn emit_report(
    report: &FactorialReport,
    out_dir: &Path,
    format: ReportFormat,
) -> Result<(), ExperimentError> {
    match format {
        ReportFormat::Csv => {
            let report_dir = out_dir.join("report");
            fs::create_dir_all(&report_dir)?;
            for (i, table) in report.tables.iter().enumerate() {
                let mut w = csv::Writer::from_path(report_dir.join(format!("table{}.csv", i + 1)))?;
                w.write_record(["metric", "ctaa", "strta", "mean", "stderr"])
                    ?;
                for case in CaseId::ALL {
                    let cell = table.cell(case.ctaa_exists(), case.strta_exists());
                    w.write_record([
                        table.name.as_str(),
                        existence(case.ctaa_exists()),
                        existence(case.strta_exists()),
                        &cell.mean.to_string(),
                        &cell.stderr.to_string(),
                    ])
                    ?;
                }
                w.flush()?;
            }
            let mut w = csv::Writer::from_path(report_dir.join("stylized_facts.csv"))?;
            w.write_record(["case", "excess_kurtosis_100", "acf1", "acf2", "acf3", "acf4", "acf5"])
                ?;
            for row in &report.stylized_facts {
                let mut record = vec![row.case.label().to_string(), row.excess_kurtosis_100.to_string()];
                record.extend(row.acf_sq.iter().map(|v| v.to_string()));
                w.write_record(&record)?;
            }
            w.flush()?;

            let runs_dir = out_dir.join("runs");
            fs::create_dir_all(&runs_dir)?;
            let mut f = fs::File::create(runs_dir.join("metrics.jsonl"))?;
            for run in &report.runs {
                serde_json::to_writer(&mut f, run)?;
                f.write_all(b"\n")?;
            }
        }
        ReportFormat::Json => {
            fs::create_dir_all(out_dir)?;
            let f = fs::File::create(out_dir.join("report.json"))?;
            serde_json::to_writer_pretty(f, report)?;
        }
        ReportFormat::Text => {
            fs::create_dir_all(out_dir)?;
            fs::write(out_dir.join("report.txt"), render_text(report))?;
        }
    }
    Ok(())
}


fn existence(exists: bool) -> &'static str {
    if exists {
        "exist"
    } else {
        "not_exist"
    }
}

/// Human-readable rendering: one 2x2 grid per table, rows CTAA, columns
/// STRTA, plus the stylized-facts block.
pub fn render_text(report: &FactorialReport) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let w = &report.base_config.windows;
    writeln!(
        out,
        "factorial over {} seeds, t_end = {}, windows dt={} dt1={} dt2={} dt3={}",
        report.seeds.len(),
        report.base_config.t_end,
        w.dt, w.dt1, w.dt2, w.dt3
    )
    .unwrap();
    let titles = [
        ("Returns of CTAA", "%", 0),
        ("Trading volume of CTAA", "", 0),
        ("Returns of STRTA", "%", 0),
        ("Trading volume of STRTA", "", 0),
        ("Stdev of returns, 100 ticks", "%", 3),
        ("Stdev of returns, 20000 ticks", "%", 2),
    ];
    for (table, (title, unit, decimals)) in report.tables.iter().zip(titles) {
        writeln!(out, "\n{title}").unwrap();
        writeln!(out, "{:>18} {:>16} {:>16}", "STRTA:", "exist", "not exist").unwrap();
        for ctaa in [true, false] {
            let row_label = if ctaa { "CTAA exist" } else { "CTAA not exist" };
            write!(out, "{row_label:>18}").unwrap();
            for strta in [true, false] {
                let cell = table.cell(ctaa, strta);
                write!(out, " {:>13.*}{:<2}", decimals, cell.mean, unit).unwrap();
            }
            writeln!(out).unwrap();
        }
    }
    writeln!(out, "\nStylized facts (100-tick returns)").unwrap();
    writeln!(
        out,
        "{:>14} {:>12} {:>8} {:>8} {:>8} {:>8} {:>8}",
        "case", "kurtosis", "acf1", "acf2", "acf3", "acf4", "acf5"
    )
    .unwrap();
    for row in &report.stylized_facts {
        write!(out, "{:>14} {:>12.2}", row.case.label(), row.excess_kurtosis_100).unwrap();
        for v in row.acf_sq {
            write!(out, " {v:>8.3}").unwrap();
        }
        writeln!(out).unwrap();
    }
    out
}

/// Trade-log CSV: one row per trade.
pub fn write_trade_log(
    trades: &[Trade],
    delta_p: f64,
    path: &Path,
) -> Result<(), ExperimentError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["tick", "price", "buy_agent", "sell_agent", "aggressor"])
        ?;
    for t in trades {
        w.write_record([
            t.tick.to_string(),
            format!("{:.2}", t.price.currency(delta_p)),
            t.buy_agent.to_string(),
            t.sell_agent.to_string(),
            match t.aggressor {
                crate::book::Side::Buy => "buy".to_string(),
                crate::book::Side::Sell => "sell".to_string(),
            },
        ])
        ?;
    }
    w.flush()?;
    Ok(())
}

/// Single-run JSON document: config echo plus summary scalars.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunDocument {
    pub config: SimConfig,
    pub metrics: RunMetrics,
    pub final_mid: f64,
    pub trade_count: u64,
    pub diagnostics: crate::sim::Diagnostics,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trade_log_path: Option<String>,
}

impl RunDocument {
    pub fn from_result(
        result: &RunResult,
        case: CaseId,
        trade_log_path: Option<String>,
    ) -> Result<Self, StatsError> {
        Ok(Self {
            config: result.config.clone(),
            metrics: compute_metrics(result, case, result.config.seed)?,
            final_mid: result.final_mid(),
            trade_count: result.trades.len() as u64,
            diagnostics: result.diagnostics,
            trade_log_path,
        })
    }
}
