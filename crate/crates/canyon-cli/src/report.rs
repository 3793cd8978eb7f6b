//! `canyon report`: one summary table from the artifacts of an analyze run.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::config::{self, CliError, RunConfig};
use crate::Cli;

#[derive(Debug, clap::Args)]
pub(crate) struct Args {
    /// Directory holding the artifacts of a previous `canyon analyze` run.
    pub input: PathBuf,
}

struct ReportRow {
    band: String,
    rx_id: String,
    pl_db: f64,
    ds_ns: f64,
    asd_deg: f64,
    asa_deg: f64,
    kf_db: Option<f64>,
    clusters: Option<u64>,
}

pub(crate) fn run(cli: &Cli, args: &Args) -> Result<(), CliError> {
    config::reject_params(cli, "report")?;
    let rows = collect_rows(cli, &args.input)?;

    let mut csv = String::from("band,rx_id,pl_db,ds_ns,asd_deg,asa_deg,kf_db,clusters\n");
    for row in &rows {
        let kf = row.kf_db.map(|v| v.to_string()).unwrap_or_default();
        let clusters = row.clusters.map(|v| v.to_string()).unwrap_or_default();
        csv.push_str(&format!(
            "{},{},{},{},{},{},{kf},{clusters}\n",
            row.band, row.rx_id, row.pl_db, row.ds_ns, row.asd_deg, row.asa_deg
        ));
        println!(
            "{} {}: PL {:.2} dB, DS {:.2} ns, ASD {:.2} deg, ASA {:.2} deg",
            row.band, row.rx_id, row.pl_db, row.ds_ns, row.asd_deg, row.asa_deg
        );
    }

    fs::create_dir_all(&cli.out_dir)
        .map_err(|e| CliError::input(format!("cannot create {}: {e}", cli.out_dir.display())))?;
    let path = cli.out_dir.join("report.csv");
    fs::write(&path, csv).map_err(|e| canyon_core::Error::Io { path: path.clone(), source: e })?;

    let run = RunConfig::Report {
        band: cli.band.name().into(),
        out_dir: cli.out_dir.clone(),
        input: args.input.clone(),
    };
    config::write_run_json(&cli.out_dir, &run)?;
    println!("wrote report.csv and run.json to {}", cli.out_dir.display());
    Ok(())
}

/// Finds every `{rx}_lsp_{band}.json` under `dir` and joins it with the
/// receiver's cluster report.
fn collect_rows(cli: &Cli, dir: &Path) -> Result<Vec<ReportRow>, CliError> {
    let entries = fs::read_dir(dir)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", dir.display())))?;

    let mut rows: BTreeMap<(String, String), ReportRow> = BTreeMap::new();
    for entry in entries {
        let entry = entry.map_err(|e| CliError::input(format!("cannot scan {}: {e}", dir.display())))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        let Some((rx_id, band)) = split_lsp_name(&name) else { continue };
        if !cli.band.accepts(&band) {
            continue;
        }
        let lsp = read_json(&entry.path())?;
        let field = |key: &str| {
            lsp.get(key).and_then(Value::as_f64).ok_or_else(|| {
                CliError::input(format!("{name}: missing numeric field `{key}`"))
            })
        };
        let clusters = read_json(&dir.join(format!("{rx_id}_clusters.json")))
            .ok()
            .and_then(|v| v.get("k").and_then(Value::as_u64));
        rows.insert(
            (band.clone(), rx_id.clone()),
            ReportRow {
                pl_db: field("pl_db")?,
                ds_ns: field("ds_ns")?,
                asd_deg: field("asd_deg")?,
                asa_deg: field("asa_deg")?,
                kf_db: lsp.get("kf_db").and_then(Value::as_f64),
                clusters,
                band,
                rx_id,
            },
        );
    }
    if rows.is_empty() {
        return Err(CliError::input(format!(
            "no `*_lsp_*.json` artifacts under {}",
            dir.display()
        )));
    }
    Ok(rows.into_values().collect())
}

fn split_lsp_name(name: &str) -> Option<(String, String)> {
    let stem = name.strip_suffix(".json")?;
    let (rx_id, band) = stem.split_once("_lsp_")?;
    if rx_id.is_empty() || band.is_empty() {
        return None;
    }
    Some((rx_id.to_string(), band.to_string()))
}

fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::input(format!("{} is not valid JSON: {e}", path.display())))
}
