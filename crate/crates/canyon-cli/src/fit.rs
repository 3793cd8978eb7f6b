//! `canyon fit`: close-in and floating-intercept regression over a
//! path-loss table.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use canyon_core::lsp::{fit_ci, fit_fi, PathLossSample, Scenario};
use canyon_core::FitModel;
use clap::ValueEnum;
use serde::Serialize;

use crate::config::{self, CliError, RunConfig};
use crate::Cli;

const HEADER: &str = "band,rx_id,distance_m,pl_db";

#[derive(Debug, clap::Args)]
pub(crate) struct Args {
    /// CSV table with header `band,rx_id,distance_m,pl_db`, as written by
    /// `canyon analyze`, or `band,scenario,distance_m,pl_db` for labeled
    /// campaigns.
    pub input: PathBuf,

    /// Which model family to fit.
    #[arg(long, value_enum, default_value_t = ModelChoice::Both)]
    pub model: ModelChoice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub(crate) enum ModelChoice {
    Ci,
    Fi,
    Both,
}

impl ModelChoice {
    fn name(self) -> &'static str {
        match self {
            ModelChoice::Ci => "ci",
            ModelChoice::Fi => "fi",
            ModelChoice::Both => "both",
        }
    }
}

#[derive(Debug, Serialize)]
struct FitRow {
    band: String,
    scenario: Scenario,
    model: FitModel,
    exponent: f64,
    intercept_db: f64,
    sigma_db: f64,
    samples: usize,
}

pub(crate) fn run(cli: &Cli, args: &Args) -> Result<(), CliError> {
    config::reject_params(cli, "fit")?;
    let samples = read_samples(args)?;

    let mut groups: BTreeMap<(String, Scenario), Vec<PathLossSample>> = BTreeMap::new();
    for sample in samples {
        if cli.band.accepts(&sample.band) {
            groups
                .entry((sample.band.clone(), sample.scenario))
                .or_default()
                .push(sample);
        }
    }
    if groups.is_empty() {
        return Err(CliError::input(format!(
            "no row in {} matches band selection `{}`",
            args.input.display(),
            cli.band.name()
        )));
    }

    let mut rows = Vec::new();
    for ((band, scenario), group) in &groups {
        let f_c_hz = carrier_hz(band)?;
        if matches!(args.model, ModelChoice::Ci | ModelChoice::Both) {
            let fit = fit_ci(group, f_c_hz)?;
            rows.push(FitRow {
                band: band.clone(),
                scenario: *scenario,
                model: fit.model,
                exponent: fit.exponent,
                intercept_db: fit.intercept_db,
                sigma_db: fit.sigma_db,
                samples: group.len(),
            });
        }
        if matches!(args.model, ModelChoice::Fi | ModelChoice::Both) {
            let fit = fit_fi(group)?;
            rows.push(FitRow {
                band: band.clone(),
                scenario: *scenario,
                model: fit.model,
                exponent: fit.exponent,
                intercept_db: fit.intercept_db,
                sigma_db: fit.sigma_db,
                samples: group.len(),
            });
        }
    }

    let mut written = Vec::new();
    fs::create_dir_all(&cli.out_dir)
        .map_err(|e| CliError::input(format!("cannot create {}: {e}", cli.out_dir.display())))?;
    let path = cli.out_dir.join("fits.json");
    let mut text = serde_json::to_string_pretty(&rows).expect("fit rows serialize");
    text.push('\n');
    fs::write(&path, text).map_err(|e| canyon_core::Error::Io { path: path.clone(), source: e })?;
    written.push(path);

    let run = RunConfig::Fit {
        band: cli.band.name().into(),
        out_dir: cli.out_dir.clone(),
        input: args.input.clone(),
        model: args.model.name().into(),
    };
    written.push(config::write_run_json(&cli.out_dir, &run)?);

    for row in &rows {
        println!(
            "{} {:?} {:?}: exponent {:.3}, intercept {:.2} dB, sigma {:.2} dB ({} samples)",
            row.band, row.scenario, row.model, row.exponent, row.intercept_db, row.sigma_db,
            row.samples
        );
    }
    println!("wrote {} files to {}", written.len(), cli.out_dir.display());
    Ok(())
}

/// Reads the path-loss table. The second column is either a scenario label
/// (`los`/`nlos`) or a receiver id; receiver ids fall under `los` so that
/// `canyon analyze` output fits without editing.
fn read_samples(args: &Args) -> Result<Vec<PathLossSample>, CliError> {
    let text = fs::read_to_string(&args.input)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", args.input.display())))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::input(format!("{} is empty", args.input.display())))?
        .trim();
    if header != HEADER && header != "band,scenario,distance_m,pl_db" {
        return Err(CliError::input(format!(
            "unexpected header `{header}` in {}; expected `{HEADER}`",
            args.input.display()
        )));
    }

    let mut samples = Vec::new();
    for (index, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let bad = |what: &str| {
            CliError::input(format!(
                "{} line {}: {what} in `{line}`",
                args.input.display(),
                index + 2
            ))
        };
        if fields.len() != 4 {
            return Err(bad("expected 4 columns"));
        }
        let scenario = match fields[1].trim() {
            "nlos" => Scenario::Nlos,
            _ => Scenario::Los,
        };
        let distance_m: f64 = fields[2].trim().parse().map_err(|_| bad("bad distance"))?;
        let pl_db: f64 = fields[3].trim().parse().map_err(|_| bad("bad path loss"))?;
        samples.push(PathLossSample {
            distance_m,
            pl_db,
            band: fields[0].trim().to_string(),
            scenario,
        });
    }
    if samples.is_empty() {
        return Err(CliError::input(format!("{} has no data rows", args.input.display())));
    }
    Ok(samples)
}

/// Carrier frequency from a band label such as `154ghz`.
fn carrier_hz(band: &str) -> Result<f64, CliError> {
    band.strip_suffix("ghz")
        .and_then(|v| v.parse::<f64>().ok())
        .filter(|v| *v > 0.0)
        .map(|v| v * 1e9)
        .ok_or_else(|| CliError::input(format!("band `{band}` is not of the form `<number>ghz`")))
}
