//! `udw`: transition rates, response functions, detector populations and
//! teleportation fidelities as plot-ready CSV or JSON.
//!
//! Exit codes: 0 on success, 2 on a configuration error, 3 on a numerical
//! failure (or a sweep in which every point failed).

mod config;
mod observables;
mod output;

use std::io::Write;
use std::process::ExitCode;

use rayon::prelude::*;
use serde_json::{json, Map, Value};

use config::{parse_config, RunConfig};
use output::{Cell, Row, Table};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("output error: {0}")]
    Output(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) | CliError::Output(_) => 3,
        }
    }
}

const USAGE: &str = "\
usage: udw <rate|probability|rho11|teleport> [--config FILE] [--key value]...
       udw sweep --of <observable> [--config FILE] [--key v1,v2,... | --key start:stop:count]...

Keys come from defaults, then the config file (flat `key = value` lines),
then flags; later sources win. Up to three scalar keys may hold lists in a
sweep; rows follow the swept keys in alphabetical, row-major order.
Output: --format csv|json, --output PATH (default stdout).";

/// Errors from bad inputs are configuration errors; the rest are numerical.
fn classify(e: udw::Error) -> CliError {
    use udw::Error::*;
    match e {
        InvalidParameter { .. } | InvalidScenario(_) | UnsupportedDimension(..) | DimensionMismatch(..) => CliError::Config(e.to_string()),
        _ => CliError::Numerical(e.to_string()),
    }
}

fn meta(cfg: &RunConfig, notes: Vec<Value>) -> Map<String, Value> {
    let config: Map<String, Value> = cfg
        .entries
        .iter()
        .map(|(k, e)| (k.clone(), json!({ "value": e.raw, "source": e.source.to_string() })))
        .collect();
    let overrides: Vec<Value> = cfg.overrides.iter().map(|o| json!({ "key": o.key, "file": o.file, "flag": o.flag })).collect();
    let mut m = Map::new();
    m.insert("artifact".into(), json!({ "name": "udw", "version": env!("CARGO_PKG_VERSION") }));
    m.insert("subcommand".into(), json!(cfg.subcommand));
    m.insert("observable".into(), json!(cfg.observable.name()));
    m.insert("config_file".into(), json!(cfg.config_file));
    m.insert("config".into(), Value::Object(config));
    m.insert("flag_overrides".into(), Value::Array(overrides));
    m.insert("axes".into(), json!(cfg.axes.iter().map(|(k, _)| k).collect::<Vec<_>>()));
    m.insert("conventions".into(), observables::conventions(cfg));
    if !notes.is_empty() {
        m.insert("point_notes".into(), Value::Array(notes));
    }
    m
}

/// Evaluate every point concurrently and assemble rows in point order.
fn execute(cfg: &RunConfig) -> Result<(Map<String, Value>, Table), CliError> {
    let points = cfg.points();
    let results: Vec<_> = points.par_iter().map(|p| observables::evaluate(cfg, p)).collect();
    let sweeping = cfg.subcommand == "sweep";
    let observable_cols = observables::columns(cfg.observable);
    let mut columns: Vec<String> = cfg.axes.iter().map(|(k, _)| k.clone()).collect();
    columns.extend(observable_cols.iter().cloned());

    let mut rows = Vec::new();
    let mut notes = Vec::new();
    let mut failures = 0;
    for (p, r) in points.iter().zip(results) {
        let axis_cells: Vec<Cell> = p.axes.iter().map(|(_, v)| Cell::Num(*v)).collect();
        match r {
            Ok(eval) => {
                for cells in eval.rows {
                    rows.push(Row {
                        cells: axis_cells.iter().cloned().chain(cells).collect(),
                        failure: None,
                    });
                }
                if let Some(note) = eval.note {
                    let at: Map<String, Value> = p.axes.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
                    notes.push(json!({ "point": at, "markers": note }));
                }
            }
            Err(e) if !sweeping => return Err(classify(e)),
            Err(e) => {
                failures += 1;
                rows.push(Row {
                    cells: axis_cells.into_iter().chain(observable_cols.iter().map(|_| Cell::Empty)).collect(),
                    failure: Some(e.to_string()),
                });
            }
        }
    }
    if failures == points.len() {
        return Err(CliError::Numerical(format!("all {failures} sweep points failed; first: {}", rows[0].failure.clone().unwrap_or_default())));
    }
    Ok((meta(cfg, notes), Table { columns, rows }))
}

fn render(cfg: &RunConfig, meta: Map<String, Value>, table: &Table) -> Result<Vec<u8>, CliError> {
    match cfg.raw("format") {
        "json" => Ok(output::to_json(meta, table)),
        _ => output::to_csv(&meta, table).map_err(|e| CliError::Output(e.to_string())),
    }
}

fn run(args: &[String]) -> Result<(), CliError> {
    let cfg = parse_config(args)?;
    let (meta, table) = execute(&cfg)?;
    let bytes = render(&cfg, meta, &table)?;
    match cfg.raw("output") {
        "-" => std::io::stdout().write_all(&bytes).map_err(|e| CliError::Output(e.to_string())),
        path => std::fs::write(path, &bytes).map_err(|e| CliError::Output(format!("{path}: {e}"))),
    }
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.is_empty() || args[0] == "--help" || args[0] == "-h" || args[0] == "help" {
        println!("{USAGE}");
        return ExitCode::from(if args.is_empty() { 2 } else { 0 });
    }
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("udw: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
