//! Throughput of the pipeline's hot stages on desk-scale grids, plus one
//! full-size synthesis-and-render pass.

use canyon_core::noise::{apply_threshold, estimate_noise, ThresholdProfile};
use canyon_core::pipeline::{analyze_link, AnalyzeParams};
use canyon_core::qd::{render_pdp, synthesize};
use canyon_core::synthetic::{fixture_angles, fixture_band_f1, planted_ctf_grid, PlantedPath};
use canyon_core::mpc::{cluster_kpm, extract_mpcs};
use canyon_core::spectra::compute_ddadps;
use canyon_core::{
    AngleGrid, BandConfig, BandTag, ExtractConfig, GeometryScene, McdConfig, MeasurementGrid,
    PowerGrid, QdModelParams,
};
use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

fn planted_paths() -> Vec<PlantedPath> {
    vec![
        PlantedPath { delay_bin: 40, aod_index: 0, aoa_index: 2, power_db: -78.0 },
        PlantedPath { delay_bin: 120, aod_index: 3, aoa_index: 5, power_db: -88.0 },
        PlantedPath { delay_bin: 260, aod_index: 6, aoa_index: 1, power_db: -93.0 },
    ]
}

fn fixture_grid() -> MeasurementGrid {
    planted_ctf_grid(
        &fixture_band_f1(),
        &fixture_angles(8),
        "bench",
        12.0,
        &planted_paths(),
        1e-13,
        7,
    )
    .expect("fixture grid")
}

fn fixture_power() -> PowerGrid {
    let cir = fixture_grid().ctf_to_cir().expect("transform");
    compute_ddadps(std::slice::from_ref(&cir)).expect("spectra")
}

fn filtered_power() -> PowerGrid {
    let power = fixture_power();
    let est = estimate_noise(&power, 10).expect("noise fit");
    let profile = ThresholdProfile::uniform(est.zeta_common, power.delay_axis_s.len(), 1.0);
    apply_threshold(&power, &profile).expect("filter")
}

fn bench_transform(c: &mut Criterion) {
    let grid = fixture_grid();
    c.bench_function("ctf_to_cir_512fft_8x8", |b| {
        b.iter(|| black_box(&grid).ctf_to_cir().unwrap())
    });
}

fn bench_noise(c: &mut Criterion) {
    let power = fixture_power();
    c.bench_function("estimate_noise_2048_bins", |b| {
        b.iter(|| estimate_noise(black_box(&power), 10).unwrap())
    });
}

fn bench_extract(c: &mut Criterion) {
    let power = filtered_power();
    let band = fixture_band_f1();
    let est = estimate_noise(&fixture_power(), 10).expect("noise fit");
    let config = ExtractConfig {
        max_paths: 6,
        noise_power: est.zeta_common,
        ..ExtractConfig::default()
    };
    c.bench_function("extract_3_paths", |b| {
        b.iter(|| {
            extract_mpcs(black_box(&power), &band, BandTag::F1, &config).unwrap()
        })
    });
}

fn bench_cluster(c: &mut Criterion) {
    let power = filtered_power();
    let band = fixture_band_f1();
    let est = estimate_noise(&fixture_power(), 10).expect("noise fit");
    let config = ExtractConfig {
        max_paths: 64,
        noise_power: est.zeta_common,
        window_db: 60.0,
        ..ExtractConfig::default()
    };
    let mpcs = extract_mpcs(&power, &band, BandTag::F1, &config).expect("extract");
    let k = 3.min(mpcs.len());
    c.bench_function("cluster_kpm", |b| {
        b.iter(|| cluster_kpm(black_box(&mpcs), k, 0, &McdConfig::default()).unwrap())
    });
}

fn bench_analyze_link(c: &mut Criterion) {
    let grid = fixture_grid();
    let params = AnalyzeParams { k_clusters: 3, max_paths: 6, ..AnalyzeParams::default() };
    c.bench_function("analyze_link_single_band", |b| {
        b.iter(|| analyze_link(black_box(&grid), None, &params).unwrap())
    });
}

fn bench_synthesize_render(c: &mut Criterion) {
    let scene = GeometryScene::street_canyon_preset(20.0).expect("scene");
    let band = BandConfig::preset_154ghz();
    let params = QdModelParams::preset_154ghz();
    let angles = AngleGrid::preset_scan();
    c.bench_function("synthesize_and_render_full_band", |b| {
        b.iter(|| {
            let real = synthesize(black_box(&scene), &band, &params, 11).unwrap();
            render_pdp(&real, &band, &angles)
        })
    });
}

criterion_group!(
    benches,
    bench_transform,
    bench_noise,
    bench_extract,
    bench_cluster,
    bench_analyze_link,
    bench_synthesize_render
);
criterion_main!(benches);
