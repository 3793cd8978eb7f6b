//! End-to-end orchestration: measured grid pairs through noise filtering,
//! extraction, clustering and large-scale parameters, plus the synthesis
//! summary path. Also owns the on-disk artifact layout.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{AngleGrid, BandConfig, MeasurementGrid, SPEED_OF_LIGHT};
use crate::lsp::{
    acceptance_filter_pap, acceptance_filter_pdp, angular_spread, beam_overlap_gain, delay_spread,
    k_factor, omni_path_loss, LspReport,
};
use crate::mpc::{
    band_power_shift_db, cluster_kpm, cluster_stats, extract_mpcs, merge_bands, mpcs_to_csv,
    split_bands, BandTag, ClusterReport, ClusterSet, ExtractConfig, McdConfig, Mpc,
};
use crate::noise::{
    apply_threshold, dual_band_thresholds, estimate_noise, noise_report, NoiseReport,
    ThresholdProfile,
};
use crate::geometry::PathKind;
use crate::qd::{realizations_to_csv, render_pdp, CirRealization};
use crate::spectra::{compute_ddadps, Pap, Pdp, PowerGrid, Side};

/// Tuning knobs for the measured-data pipeline, all serializable so a run
/// can be reproduced from its echoed configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalyzeParams {
    /// False-alarm control for the common noise threshold.
    pub nu: u32,
    /// Dual-band refinement step [dB].
    pub margin_db: f64,
    /// Extraction cap per band.
    pub max_paths: usize,
    /// Offset of the extraction stop floor relative to the common detection
    /// threshold [dB]; zero stops exactly where detection stops.
    pub stop_db: f64,
    /// Cluster count handed to the power-weighted K-means stage; capped at
    /// the number of extracted components.
    pub k_clusters: usize,
    /// Delay weight in the component-distance metric.
    pub mcd_zeta: f64,
    /// Seed for the clustering initialization.
    pub cluster_seed: u64,
    /// Dynamic-range window below the peak [dB], applied both as the
    /// profile acceptance filter and as the extraction stop window.
    pub window_db: f64,
    /// Report the diffuse-over-direct power ratio instead of the default
    /// direct-over-diffuse.
    pub invert_k: bool,
}

impl Default for AnalyzeParams {
    fn default() -> Self {
        AnalyzeParams {
            nu: 10,
            margin_db: 1.0,
            max_paths: 25,
            stop_db: 0.0,
            k_clusters: 4,
            mcd_zeta: 8.0,
            cluster_seed: 0,
            window_db: 20.0,
            invert_k: false,
        }
    }
}

/// Everything the pipeline derived for one band of one link.
#[derive(Debug, Clone, Serialize)]
pub struct BandAnalysis {
    pub label: String,
    pub noise: NoiseReport,
    pub lsp: LspReport,
    pub mpc_count: usize,
    #[serde(skip)]
    pub pdp: Pdp,
    #[serde(skip)]
    pub pap_tx: Pap,
    #[serde(skip)]
    pub pap_rx: Pap,
}

/// Full analysis of one Tx/Rx link, one or two bands.
#[derive(Debug, Clone, Serialize)]
pub struct LinkAnalysis {
    pub rx_id: String,
    pub distance_m: f64,
    pub f1: BandAnalysis,
    pub f2: Option<BandAnalysis>,
    pub clusters: ClusterReport,
    /// Labeled components with native per-band powers.
    #[serde(skip)]
    pub mpcs: Vec<Mpc>,
}

/// Short band name derived from the carrier, e.g. `154ghz`.
pub fn band_label(band: &BandConfig) -> String {
    format!("{:.0}ghz", band.center_frequency_hz / 1e9)
}

/// Runs one link through the full chain. When both grids are given they may
/// arrive in either order; the lower carrier is treated as the reference
/// band. Errors carry the stage name and the receiver id.
pub fn analyze_link(
    first: &MeasurementGrid,
    second: Option<&MeasurementGrid>,
    params: &AnalyzeParams,
) -> Result<LinkAnalysis> {
    let rx_id = first.rx_id.clone();
    let tag = |stage: &'static str| {
        let rx = rx_id.clone();
        move |e: Error| Error::stage(stage, rx, e)
    };

    first.validate().map_err(tag("load"))?;
    if let Some(second) = second {
        second.validate().map_err(tag("load"))?;
        if second.rx_id != first.rx_id {
            return Err(Error::stage(
                "load",
                rx_id.clone(),
                Error::InvalidParams(format!(
                    "band pair mixes receivers `{}` and `{}`",
                    first.rx_id, second.rx_id
                )),
            ));
        }
    }
    let (lo, hi) = match second {
        Some(second) if second.band.center_frequency_hz < first.band.center_frequency_hz => {
            (second, Some(first))
        }
        Some(second) => (first, Some(second)),
        None => (first, None),
    };

    let power_of = |grid: &MeasurementGrid| -> Result<PowerGrid> {
        let cir = grid.ctf_to_cir().map_err(tag("transform"))?;
        compute_ddadps(std::slice::from_ref(&cir)).map_err(tag("spectra"))
    };
    let p1 = power_of(lo)?;
    let est1 = estimate_noise(&p1, params.nu).map_err(tag("noise"))?;

    let (filtered1, report1, band2) = match hi {
        Some(hi) => {
            let p2 = power_of(hi)?;
            let est2 = estimate_noise(&p2, params.nu).map_err(tag("noise"))?;
            let (prof1, prof2) = dual_band_thresholds(&p1, &p2, &est1, &est2, params.margin_db)
                .map_err(tag("noise"))?;
            let f1 = apply_threshold(&p1, &prof1).map_err(tag("filter"))?;
            let f2 = apply_threshold(&p2, &prof2).map_err(tag("filter"))?;
            let r1 = noise_report(&p1, &est1, Some(&prof1));
            let r2 = noise_report(&p2, &est2, Some(&prof2));
            (f1, r1, Some((hi, f2, est2, r2)))
        }
        None => {
            let prof1 =
                ThresholdProfile::uniform(est1.zeta_common, p1.delay_axis_s.len(), params.margin_db);
            let f1 = apply_threshold(&p1, &prof1).map_err(tag("filter"))?;
            let r1 = noise_report(&p1, &est1, Some(&prof1));
            (f1, r1, None)
        }
    };

    let extract = |filtered: &PowerGrid,
                   band: &BandConfig,
                   band_tag: BandTag,
                   zeta_common: f64|
     -> Result<Vec<Mpc>> {
        let config = ExtractConfig {
            max_paths: params.max_paths,
            stop_db: params.stop_db,
            noise_power: zeta_common,
            window_db: params.window_db,
        };
        extract_mpcs(filtered, band, band_tag, &config).map_err(tag("extract"))
    };
    let mpcs1 = extract(&filtered1, &lo.band, BandTag::F1, est1.zeta_common)?;

    let (merged, shift_db) = match &band2 {
        Some((hi, filtered2, est2, _)) => {
            let mpcs2 = extract(filtered2, &hi.band, BandTag::F2, est2.zeta_common)?;
            let shift =
                band_power_shift_db(lo.band.center_frequency_hz, hi.band.center_frequency_hz)
                    .map_err(tag("merge"))?;
            (merge_bands(&mpcs1, &mpcs2, shift).map_err(tag("merge"))?, shift)
        }
        None => (mpcs1, 0.0),
    };

    let k = params.k_clusters.min(merged.len());
    let mcd = McdConfig { zeta: params.mcd_zeta };
    let clustered =
        cluster_kpm(&merged, k, params.cluster_seed, &mcd).map_err(tag("cluster"))?;
    let reference_delay = lo.distance_m / SPEED_OF_LIGHT;
    let clusters =
        cluster_stats(&clustered, shift_db, Some(reference_delay)).map_err(tag("cluster"))?;

    let (set1, set2) = if band2.is_some() {
        let (a, b) = split_bands(&clustered, shift_db);
        (a, Some(b))
    } else {
        (clustered, None)
    };

    let band_analysis = |grid: &MeasurementGrid,
                         filtered: &PowerGrid,
                         report: NoiseReport,
                         set: &ClusterSet|
     -> Result<BandAnalysis> {
        let ga = beam_overlap_gain(&grid.angles, &grid.band).map_err(tag("lsp"))?;
        let pl = omni_path_loss(filtered, ga).map_err(tag("lsp"))?;
        let floor_db = report.zeta_common_db;
        let pdp = acceptance_filter_pdp(&filtered.pdp(), params.window_db, floor_db);
        let pap_tx = acceptance_filter_pap(&filtered.pap(Side::Tx), params.window_db, floor_db);
        let pap_rx = acceptance_filter_pap(&filtered.pap(Side::Rx), params.window_db, floor_db);
        let ds = delay_spread(&pdp).map_err(tag("lsp"))?;
        let asd = angular_spread(&pap_tx).map_err(tag("lsp"))?;
        let asa = angular_spread(&pap_rx).map_err(tag("lsp"))?;
        let kf = k_factor(set, params.invert_k).map_err(tag("lsp"))?;
        Ok(BandAnalysis {
            label: band_label(&grid.band),
            noise: report,
            lsp: LspReport::new(pl, ds, asd, asa, kf),
            mpc_count: set.mpcs.len(),
            pdp,
            pap_tx,
            pap_rx,
        })
    };

    let f1 = band_analysis(lo, &filtered1, report1, &set1)?;
    let f2 = match (&band2, &set2) {
        (Some((hi, filtered2, _, report2)), Some(set2)) => {
            Some(band_analysis(hi, filtered2, report2.clone(), set2)?)
        }
        _ => None,
    };

    let mut mpcs = set1.mpcs;
    if let Some(set2) = set2 {
        mpcs.extend(set2.mpcs);
    }

    Ok(LinkAnalysis { rx_id, distance_m: lo.distance_m, f1, f2, clusters, mpcs })
}

/// Analyzes every link in parallel, preserving input order.
pub fn analyze_campaign(
    links: &[(MeasurementGrid, Option<MeasurementGrid>)],
    params: &AnalyzeParams,
) -> Result<Vec<LinkAnalysis>> {
    links
        .par_iter()
        .map(|(first, second)| analyze_link(first, second.as_ref(), params))
        .collect()
}

// ---------------------------------------------------------------------------
// Synthesis summary
// ---------------------------------------------------------------------------

/// Aggregate statistics over a batch of synthesized realizations.
#[derive(Debug, Clone, Serialize)]
pub struct SynthSummary {
    pub count: usize,
    /// Fraction of realizations containing the north-wall bounce.
    pub nw_presence_fraction: f64,
    /// Fraction of realizations containing the south-wall bounce.
    pub sw_presence_fraction: f64,
    pub mean_los_gain_db: f64,
    pub mean_interarrival_ns: f64,
    pub mean_random_count: f64,
}

pub fn summarize_realizations(realizations: &[CirRealization]) -> Result<SynthSummary> {
    if realizations.is_empty() {
        return Err(Error::EmptyInput("no realizations to summarize".into()));
    }
    let count = realizations.len();
    let mut nw = 0usize;
    let mut sw = 0usize;
    let mut los_gain_sum = 0.0;
    let mut random_total = 0usize;
    let mut gap_sum = 0.0;
    let mut gap_count = 0usize;
    for real in realizations {
        let los = real
            .los_path()
            .ok_or_else(|| Error::InvalidParams("realization lacks a line-of-sight path".into()))?;
        los_gain_sum += los.gain_db;
        if real.paths.iter().any(|p| p.kind == PathKind::SbNw) {
            nw += 1;
        }
        if real.paths.iter().any(|p| p.kind == PathKind::SbSw) {
            sw += 1;
        }
        let mut previous = los.delay_s;
        for path in real.paths.iter().filter(|p| p.kind == PathKind::Random) {
            gap_sum += path.delay_s - previous;
            gap_count += 1;
            previous = path.delay_s;
            random_total += 1;
        }
    }
    Ok(SynthSummary {
        count,
        nw_presence_fraction: nw as f64 / count as f64,
        sw_presence_fraction: sw as f64 / count as f64,
        mean_los_gain_db: los_gain_sum / count as f64,
        mean_interarrival_ns: if gap_count == 0 {
            0.0
        } else {
            gap_sum / gap_count as f64 * 1e9
        },
        mean_random_count: random_total as f64 / count as f64,
    })
}

/// Linear mean of the rendered power delay profiles across realizations.
pub fn mean_rendered_pdp(
    realizations: &[CirRealization],
    band: &BandConfig,
    angles: &AngleGrid,
) -> Result<Pdp> {
    if realizations.is_empty() {
        return Err(Error::EmptyInput("no realizations to render".into()));
    }
    let rendered: Vec<Pdp> = realizations
        .par_iter()
        .map(|real| render_pdp(real, band, angles))
        .collect();
    let mut mean = rendered[0].clone();
    for pdp in &rendered[1..] {
        for (acc, p) in mean.power.iter_mut().zip(&pdp.power) {
            *acc += p;
        }
    }
    let scale = 1.0 / realizations.len() as f64;
    for p in mean.power.iter_mut() {
        *p *= scale;
    }
    Ok(mean)
}

// ---------------------------------------------------------------------------
// Artifacts
// ---------------------------------------------------------------------------

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::InvalidParams(format!("serialization failed: {e}")))?;
    text.push('\n');
    write_text(path, &text)
}

fn emit_text(dir: &Path, name: String, text: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    write_text(&path, text)?;
    written.push(path);
    Ok(())
}

fn emit_json<T: Serialize>(
    dir: &Path,
    name: String,
    value: &T,
    written: &mut Vec<PathBuf>,
) -> Result<()> {
    let path = dir.join(name);
    write_json(&path, value)?;
    written.push(path);
    Ok(())
}

/// Writes the per-link artifact set and returns the created paths.
pub fn write_link_artifacts(dir: &Path, link: &LinkAnalysis) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let rx = &link.rx_id;
    let mut written = Vec::new();

    let f2_label = link.f2.as_ref().map(|b| b.label.as_str()).unwrap_or("none");
    let csv = mpcs_to_csv((&link.f1.label, f2_label), &link.mpcs);
    emit_text(dir, format!("{rx}_mpcs.csv"), &csv, &mut written)?;
    for band in std::iter::once(&link.f1).chain(link.f2.iter()) {
        let label = &band.label;
        emit_json(dir, format!("{rx}_noise_{label}.json"), &band.noise, &mut written)?;
        emit_json(dir, format!("{rx}_lsp_{label}.json"), &band.lsp, &mut written)?;
        emit_text(dir, format!("{rx}_pdp_{label}.csv"), &band.pdp.to_csv(), &mut written)?;
        emit_text(dir, format!("{rx}_pap_tx_{label}.csv"), &band.pap_tx.to_csv(), &mut written)?;
        emit_text(dir, format!("{rx}_pap_rx_{label}.csv"), &band.pap_rx.to_csv(), &mut written)?;
    }
    emit_json(dir, format!("{rx}_clusters.json"), &link.clusters, &mut written)?;
    Ok(written)
}

/// Writes campaign-level tables: the path-loss list for fitting and one
/// PDP-versus-position matrix per band.
pub fn write_campaign_artifacts(dir: &Path, links: &[LinkAnalysis]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();

    let mut pl = String::from("band,rx_id,distance_m,pl_db\n");
    for link in links {
        for band in std::iter::once(&link.f1).chain(link.f2.iter()) {
            pl.push_str(&format!(
                "{},{},{},{}\n",
                band.label, link.rx_id, link.distance_m, band.lsp.pl_db
            ));
        }
    }
    let path = dir.join("campaign_pl.csv");
    write_text(&path, &pl)?;
    written.push(path);

    let mut labels: Vec<String> = Vec::new();
    for link in links {
        for band in std::iter::once(&link.f1).chain(link.f2.iter()) {
            if !labels.contains(&band.label) {
                labels.push(band.label.clone());
            }
        }
    }
    for label in labels {
        let mut columns: Vec<(&str, &Pdp)> = Vec::new();
        for link in links {
            for band in std::iter::once(&link.f1).chain(link.f2.iter()) {
                if band.label == label {
                    columns.push((link.rx_id.as_str(), &band.pdp));
                }
            }
        }
        let axis = &columns[0].1.delay_axis_s;
        for (_, pdp) in &columns {
            if pdp.delay_axis_s.len() != axis.len() {
                return Err(Error::ShapeMismatch {
                    expected: format!("{} delay bins", axis.len()),
                    actual: format!("{} delay bins", pdp.delay_axis_s.len()),
                });
            }
        }
        let mut table = String::from("delay_ns");
        for (rx, _) in &columns {
            table.push(',');
            table.push_str(rx);
        }
        table.push('\n');
        for (row, &delay) in axis.iter().enumerate() {
            table.push_str(&format!("{}", delay * 1e9));
            for (_, pdp) in &columns {
                table.push_str(&format!(",{}", pdp.power[row]));
            }
            table.push('\n');
        }
        let path = dir.join(format!("pdp_matrix_{label}.csv"));
        write_text(&path, &table)?;
        written.push(path);
    }
    Ok(written)
}

/// Writes the synthesis artifact set: raw realizations, summary statistics
/// and the mean rendered profile.
pub fn write_synth_artifacts(
    dir: &Path,
    band: &BandConfig,
    angles: &AngleGrid,
    realizations: &[CirRealization],
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let label = band_label(band);
    let summary = summarize_realizations(realizations)?;
    let pdp = mean_rendered_pdp(realizations, band, angles)?;
    let mut written = Vec::new();

    let path = dir.join(format!("realizations_{label}.csv"));
    write_text(&path, &realizations_to_csv(&label, realizations))?;
    written.push(path);
    let path = dir.join(format!("synth_summary_{label}.json"));
    write_json(&path, &summary)?;
    written.push(path);
    let path = dir.join(format!("pdp_mean_{label}.csv"));
    write_text(&path, &pdp.to_csv())?;
    written.push(path);
    Ok(written)
}
