//! `canyon synthesize`: seeded realizations of the two-wall canyon model
//! plus rendered-PDP and summary artifacts.

use canyon_core::geometry::Site;
use canyon_core::pipeline::{band_label, summarize_realizations, write_synth_artifacts};
use canyon_core::qd::synthesize_many;
use canyon_core::{AngleGrid, BandConfig, GeometryScene, QdModelParams};

use crate::config::{self, CliError, RunConfig, SynthBand};
use crate::{BandChoice, Cli};

#[derive(Debug, clap::Args)]
pub(crate) struct Args {
    /// Number of realizations per band.
    #[arg(long, default_value_t = 100)]
    pub count: usize,

    /// Street-canyon width [m].
    #[arg(long, default_value_t = 20.0)]
    pub width: f64,

    /// Transmitter site as `x,y,height` [m]; preset position when omitted.
    #[arg(long, value_parser = parse_site)]
    pub tx: Option<Site>,

    /// Receiver site as `x,y,height` [m]; preset position when omitted.
    #[arg(long, value_parser = parse_site)]
    pub rx: Option<Site>,
}

pub(crate) fn run(cli: &Cli, args: &Args) -> Result<(), CliError> {
    if args.count == 0 {
        return Err(CliError::input("--count must be at least 1"));
    }
    let scene = build_scene(args)?;
    let angles = AngleGrid::preset_scan();

    let mut bands = Vec::new();
    let mut written = Vec::new();
    for (index, (band, preset)) in selected_bands(cli.band).into_iter().enumerate() {
        let model = match &cli.params {
            None => preset,
            Some(path) => config::apply_overrides(&preset, path)?,
        };
        model.validate().map_err(|e| CliError::input(e.to_string()))?;
        let seed = cli.seed.wrapping_add(index as u64);
        let label = band_label(&band);

        let realizations = synthesize_many(&scene, &band, &model, args.count, seed)?;
        written.extend(write_synth_artifacts(&cli.out_dir, &band, &angles, &realizations)?);
        let summary = summarize_realizations(&realizations)?;
        println!(
            "{label}: {} realizations, wall presence {:.3}/{:.3}, mean interarrival {:.2} ns",
            summary.count,
            summary.nw_presence_fraction,
            summary.sw_presence_fraction,
            summary.mean_interarrival_ns
        );
        bands.push(SynthBand { label, seed, model });
    }

    let run = RunConfig::Synthesize {
        band: cli.band.name().into(),
        out_dir: cli.out_dir.clone(),
        count: args.count,
        width_m: args.width,
        tx: scene.tx,
        rx: scene.rx,
        bands,
    };
    written.push(config::write_run_json(&cli.out_dir, &run)?);
    println!("wrote {} files to {}", written.len(), cli.out_dir.display());
    Ok(())
}

fn build_scene(args: &Args) -> Result<GeometryScene, CliError> {
    let mut scene = GeometryScene::street_canyon_preset(args.width)
        .map_err(|e| CliError::input(e.to_string()))?;
    if let Some(tx) = args.tx {
        scene.tx = tx;
    }
    if let Some(rx) = args.rx {
        scene.rx = rx;
    }
    scene.validate().map_err(|e| CliError::input(e.to_string()))?;
    Ok(scene)
}

fn selected_bands(choice: BandChoice) -> Vec<(BandConfig, QdModelParams)> {
    let lower = (BandConfig::preset_154ghz(), QdModelParams::preset_154ghz());
    let upper = (BandConfig::preset_300ghz(), QdModelParams::preset_300ghz());
    match choice {
        BandChoice::Lower => vec![lower],
        BandChoice::Upper => vec![upper],
        BandChoice::Both => vec![lower, upper],
    }
}

fn parse_site(raw: &str) -> Result<Site, String> {
    let parts: Vec<&str> = raw.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected `x,y,height`, got `{raw}`"));
    }
    let mut values = [0.0f64; 3];
    for (slot, part) in values.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse()
            .map_err(|_| format!("`{part}` is not a number"))?;
    }
    Ok(Site::new(values[0], values[1], values[2]))
}
