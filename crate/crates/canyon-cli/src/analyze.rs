//! `canyon analyze`: container directories in, per-link and campaign
//! artifacts out.

use std::collections::BTreeMap;
use std::path::PathBuf;

use canyon_core::pipeline::{
    analyze_campaign, band_label, write_campaign_artifacts, write_link_artifacts,
};
use canyon_core::{AnalyzeParams, Error, MeasurementGrid};

use crate::config::{self, CliError, RunConfig};
use crate::Cli;

#[derive(Debug, clap::Args)]
pub(crate) struct Args {
    /// Grid container directories, one measured band per directory.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,

    /// Analyze receivers that contribute one band, either because only one
    /// was recorded or because `--band` filtered the other out.
    #[arg(long)]
    pub single_band: bool,
}

pub(crate) fn run(cli: &Cli, args: &Args) -> Result<(), CliError> {
    let params = resolved_params(cli)?;
    let grids = load_grids(cli, &args.inputs)?;
    let pairs = pair_by_receiver(grids, args.single_band)?;
    let links = analyze_campaign(&pairs, &params)?;

    let mut written = Vec::new();
    for link in &links {
        written.extend(write_link_artifacts(&cli.out_dir, link)?);
    }
    written.extend(write_campaign_artifacts(&cli.out_dir, &links)?);
    let run = RunConfig::Analyze {
        band: cli.band.name().into(),
        out_dir: cli.out_dir.clone(),
        inputs: args.inputs.clone(),
        single_band: args.single_band,
        params,
    };
    written.push(config::write_run_json(&cli.out_dir, &run)?);

    for link in &links {
        let f2 = link
            .f2
            .as_ref()
            .map(|b| format!(" + {} in {}", b.mpc_count, b.label))
            .unwrap_or_default();
        println!(
            "{}: {} components in {}{}, {} clusters",
            link.rx_id, link.f1.mpc_count, link.f1.label, f2, link.clusters.k
        );
    }
    println!("wrote {} files to {}", written.len(), cli.out_dir.display());
    Ok(())
}

fn resolved_params(cli: &Cli) -> Result<AnalyzeParams, CliError> {
    let base = AnalyzeParams { cluster_seed: cli.seed, ..AnalyzeParams::default() };
    match &cli.params {
        None => Ok(base),
        Some(path) => config::apply_overrides(&base, path),
    }
}

fn load_grids(cli: &Cli, inputs: &[PathBuf]) -> Result<Vec<MeasurementGrid>, CliError> {
    let mut grids = Vec::new();
    for dir in inputs {
        let grid = MeasurementGrid::load(dir).map_err(|e| Error::Stage {
            stage: "load",
            grid: dir.display().to_string(),
            source: Box::new(e),
        })?;
        if cli.band.accepts(&band_label(&grid.band)) {
            grids.push(grid);
        }
    }
    if grids.is_empty() {
        return Err(CliError::input(format!(
            "no input grid matches band selection `{}`",
            cli.band.name()
        )));
    }
    Ok(grids)
}

/// Groups loaded grids into per-receiver band pairs, lower carrier first.
fn pair_by_receiver(
    grids: Vec<MeasurementGrid>,
    single_band: bool,
) -> Result<Vec<(MeasurementGrid, Option<MeasurementGrid>)>, CliError> {
    let mut groups: BTreeMap<String, Vec<MeasurementGrid>> = BTreeMap::new();
    for grid in grids {
        groups.entry(grid.rx_id.clone()).or_default().push(grid);
    }

    let mut pairs = Vec::new();
    for (rx, mut group) in groups {
        group.sort_by(|a, b| {
            a.band
                .center_frequency_hz
                .partial_cmp(&b.band.center_frequency_hz)
                .unwrap()
        });
        match group.len() {
            1 => {
                if !single_band {
                    return Err(CliError::input(format!(
                        "receiver `{rx}` has a single band; pass --single-band to analyze it alone"
                    )));
                }
                pairs.push((group.pop().unwrap(), None));
            }
            2 => {
                let hi = group.pop().unwrap();
                let lo = group.pop().unwrap();
                if lo.band.center_frequency_hz == hi.band.center_frequency_hz {
                    return Err(CliError::input(format!(
                        "receiver `{rx}` has two grids of the same band"
                    )));
                }
                pairs.push((lo, Some(hi)));
            }
            n => {
                return Err(CliError::input(format!(
                    "receiver `{rx}` has {n} grids; expected one or two"
                )))
            }
        }
    }
    Ok(pairs)
}
