//! Front end for the `dimwit` binary.

pub mod analysis;
pub mod config;
pub mod error;
pub mod output;
pub mod sweep;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde_json::{json, Map, Value};

use dimwit_core::retro::LpConfig;
use dimwit_core::verify::{run_checks, Check};
use dimwit_lp::SolveOptions;

use crate::analysis::{behavior_json, AnalysisRegistry, Context, Stage};
use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::output::{cell, csv_bytes, flatten, quantize_json, write_output, Format};
use crate::sweep::{run_sweep, VALUE_COLUMNS};

pub const PIVOT_ENV: &str = "DIMWIT_LP_MAX_PIVOTS";

pub const CONVENTION: &str = "outcome d = 0 is a click at detector E, the port whose click \
probability carries +cos(phi_x - sigma_y); d = 1 is any other event; tables are nested [d][x][y]";

#[derive(Debug, Parser)]
#[command(name = "dimwit", version, about = "Dimension witnesses and retrocausal models for delayed-choice interferometers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file (default: standard output).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Run only verification checks whose id contains this string.
    #[arg(long, global = true)]
    pub filter: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Simulate the configured experiment and write its statistics.
    Simulate,
    /// Evaluate dimension witnesses and classical membership.
    Witness,
    /// Minimal retrocausality needed to reproduce the behavior.
    Retro,
    /// Evaluate witnesses over a parameter grid.
    Sweep,
    /// Recompute the headline numbers and compare with their expected values.
    Verify,
}

pub fn lp_config_from_env() -> Result<LpConfig> {
    let mut lp = LpConfig::default();
    if let Ok(raw) = std::env::var(PIVOT_ENV) {
        let max_pivots = raw
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::Config(format!("{PIVOT_ENV}={raw:?} is not a pivot count")))?;
        lp.solve = SolveOptions { max_pivots };
    }
    Ok(lp)
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config <path> is required for this command".into()))?;
    RunConfig::load(path)
}

fn metadata(config: &RunConfig) -> Value {
    json!({
        "experiment": config.experiment,
        "behavior_source": if config.behavior.is_some() { "inline" } else { "experiment" },
        "k": config.k,
        "shared_randomness": config.shared_randomness,
        "convention": CONVENTION,
    })
}

/// Runs the analyses of one stage and assembles the report.
pub fn stage_report(stage: Stage, config: &RunConfig, lp: LpConfig) -> Result<Value> {
    let registry = AnalysisRegistry::builtin();
    let ctx = Context { config, lp };
    let mut results = Map::new();
    for a in registry.select(stage, &ctx)? {
        results.insert(a.name().to_string(), a.run(&ctx)?);
    }
    let mut report = json!({
        "command": stage.name(),
        "metadata": metadata(config),
        "results": results,
    });
    if stage == Stage::Simulate && config.behavior.is_none() {
        if let Ok(b) = analysis::quantized_binary(ctx.experiment()?, config.k) {
            report["behavior"] = behavior_json(&b);
        }
    }
    quantize_json(&mut report);
    Ok(report)
}

fn report_bytes(report: &Value, format: Format) -> Result<Vec<u8>> {
    match format {
        Format::Json => Ok(format!("{}\n", serde_json::to_string_pretty(report).expect("json")).into_bytes()),
        Format::Csv => {
            let mut rows = Vec::new();
            if let Some(results) = report["results"].as_object() {
                for (name, value) in results {
                    let mut cells = Vec::new();
                    flatten("", value, &mut cells);
                    rows.extend(cells.into_iter().map(|(k, v)| vec![name.clone(), k, v]));
                }
            }
            csv_bytes(&["analysis", "field", "value"], &rows)
        }
    }
}

fn verify_bytes(checks: &[Check], format: Option<Format>) -> Result<Vec<u8>> {
    match format {
        Some(Format::Json) => Ok(format!("{}\n", serde_json::to_string_pretty(checks).expect("json")).into_bytes()),
        Some(Format::Csv) => {
            let rows: Vec<Vec<String>> = checks
                .iter()
                .map(|c| {
                    vec![
                        c.id.to_string(),
                        c.passed.to_string(),
                        c.computed.to_string(),
                        c.expected.to_string(),
                        c.tolerance.to_string(),
                        c.claim.to_string(),
                    ]
                })
                .collect();
            csv_bytes(&["id", "passed", "computed", "expected", "tolerance", "claim"], &rows)
        }
        None => {
            let mut s = String::new();
            for c in checks {
                s.push_str(&format!(
                    "{} {:<24} computed {:<16.12} expected {:<16.12} tol {:e}  {}\n",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.id,
                    c.computed,
                    c.expected,
                    c.tolerance,
                    c.claim
                ));
            }
            let passed = checks.iter().filter(|c| c.passed).count();
            s.push_str(&format!("{passed} of {} checks passed\n", checks.len()));
            Ok(s.into_bytes())
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let out = cli.out.as_deref();
    match cli.command {
        Command::Simulate | Command::Witness | Command::Retro => {
            let stage = match cli.command {
                Command::Simulate => Stage::Simulate,
                Command::Witness => Stage::Witness,
                _ => Stage::Retro,
            };
            let config = load_config(cli)?;
            let report = stage_report(stage, &config, lp_config_from_env()?)?;
            write_output(out, &report_bytes(&report, cli.format.unwrap_or(Format::Json))?)
        }
        Command::Sweep => {
            let config = load_config(cli)?;
            let sweep = run_sweep(&config, &lp_config_from_env()?)?;
            let bytes = match cli.format.unwrap_or(Format::Csv) {
                Format::Csv => {
                    let header: Vec<&str> = sweep
                        .columns
                        .iter()
                        .map(String::as_str)
                        .chain(VALUE_COLUMNS)
                        .collect();
                    let rows: Vec<Vec<String>> = sweep
                        .rows
                        .iter()
                        .map(|r| {
                            r.params
                                .iter()
                                .map(|&v| cell(Some(v)))
                                .chain([cell(r.detw), cell(r.idw), cell(r.retro_min)])
                                .collect()
                        })
                        .collect();
                    csv_bytes(&header, &rows)?
                }
                Format::Json => {
                    let rows: Vec<Value> = sweep
                        .rows
                        .iter()
                        .map(|r| {
                            let mut m = Map::new();
                            for (name, v) in sweep.columns.iter().zip(&r.params) {
                                m.insert(name.clone(), json!(v));
                            }
                            m.insert("detw".into(), json!(r.detw));
                            m.insert("idw".into(), json!(r.idw));
                            m.insert("retro_min".into(), json!(r.retro_min));
                            Value::Object(m)
                        })
                        .collect();
                    let mut v = json!({"metadata": metadata(&config), "rows": rows});
                    quantize_json(&mut v);
                    format!("{}\n", serde_json::to_string_pretty(&v).expect("json")).into_bytes()
                }
            };
            write_output(out, &bytes)
        }
        Command::Verify => {
            let checks = run_checks(cli.filter.as_deref());
            if checks.is_empty() {
                return Err(CliError::Config(format!(
                    "no check id contains {:?}",
                    cli.filter.as_deref().unwrap_or_default()
                )));
            }
            write_output(out, &verify_bytes(&checks, cli.format)?)?;
            let failed = checks.iter().filter(|c| !c.passed).count();
            if failed > 0 {
                return Err(CliError::VerifyFailed(failed));
            }
            Ok(())
        }
    }
}
