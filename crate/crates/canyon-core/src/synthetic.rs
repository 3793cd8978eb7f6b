//! Synthetic measurement grids with known ground truth.
//!
//! Builders here plant paths at exact grid coordinates so estimator tests
//! can compare against the planted values instead of live data.

use ndarray::Array3;
use num_complex::{Complex32, Complex64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::grid::{AngleGrid, BandConfig, MeasurementGrid};
use crate::kernels::{delay_kernel_power, pattern_power};
use crate::spectra::PowerGrid;

/// A path pinned to grid coordinates.
#[derive(Debug, Clone, Copy)]
pub struct PlantedPath {
    pub delay_bin: usize,
    pub aod_index: usize,
    pub aoa_index: usize,
    pub power_db: f64,
}

/// Power grid containing the planted paths exactly as the extraction
/// replica models them: separable delay kernel times one antenna pattern
/// per side. Marked filtered, ready for extraction.
pub fn planted_power_grid(
    band: &BandConfig,
    angles: &AngleGrid,
    rx_id: &str,
    distance_m: f64,
    paths: &[PlantedPath],
) -> Result<PowerGrid> {
    band.validate()?;
    angles.validate()?;
    let n_fft = band.n_fft;
    let bin = band.delay_bin_s();
    let mut power = Array3::zeros((n_fft, angles.aod_deg.len(), angles.aoa_deg.len()));
    for path in paths {
        assert!(path.delay_bin < n_fft, "planted delay bin out of range");
        let p_lin = 10f64.powf(path.power_db / 10.0);
        for ((m, a, b), slot) in power.indexed_iter_mut() {
            *slot += p_lin
                * delay_kernel_power(
                    m as f64 - path.delay_bin as f64,
                    band.n_subcarriers,
                    n_fft,
                )
                * pattern_power(
                    angles.aod_deg[a] - angles.aod_deg[path.aod_index],
                    band.hpbw_az_deg,
                )
                * pattern_power(
                    angles.aoa_deg[b] - angles.aoa_deg[path.aoa_index],
                    band.hpbw_az_deg,
                );
        }
    }
    Ok(PowerGrid {
        band: band.clone(),
        angles: angles.clone(),
        rx_id: rx_id.to_string(),
        distance_m,
        delay_axis_s: (0..n_fft).map(|k| k as f64 * bin).collect(),
        power,
        filtered: true,
    })
}

/// One sounding snapshot of the planted paths: a transfer function whose
/// impulse response puts each path on its delay bin at the requested power,
/// plus circular complex Gaussian noise of per-tone variance `noise_sigma2`.
pub fn planted_ctf_grid(
    band: &BandConfig,
    angles: &AngleGrid,
    rx_id: &str,
    distance_m: f64,
    paths: &[PlantedPath],
    noise_sigma2: f64,
    seed: u64,
) -> Result<MeasurementGrid> {
    let n_sub = band.n_subcarriers;
    let n_fft = band.n_fft;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ctf = Array3::from_elem(
        (n_sub, angles.aod_deg.len(), angles.aoa_deg.len()),
        Complex64::new(0.0, 0.0),
    );

    for path in paths {
        assert!(path.delay_bin < n_fft, "planted delay bin out of range");
        // Unitary inverse transform turns a flat tone amplitude `amp` into a
        // bin amplitude amp * n_sub / sqrt(n_fft); solve for the target power.
        let p_lin = 10f64.powf(path.power_db / 10.0);
        let amp = (p_lin * n_fft as f64).sqrt() / n_sub as f64;
        for ((k, a, b), slot) in ctf.indexed_iter_mut() {
            let q = k as f64 - (n_sub / 2) as f64;
            let phase = -2.0 * std::f64::consts::PI * q * path.delay_bin as f64 / n_fft as f64;
            let gain = amp
                * pattern_power(
                    angles.aod_deg[a] - angles.aod_deg[path.aod_index],
                    band.hpbw_az_deg,
                )
                .sqrt()
                * pattern_power(
                    angles.aoa_deg[b] - angles.aoa_deg[path.aoa_index],
                    band.hpbw_az_deg,
                )
                .sqrt();
            *slot += Complex64::new(gain * phase.cos(), gain * phase.sin());
        }
    }

    if noise_sigma2 > 0.0 {
        let scale = (noise_sigma2 / 2.0).sqrt();
        for slot in ctf.iter_mut() {
            let re: f64 = normal_draw(&mut rng);
            let im: f64 = normal_draw(&mut rng);
            *slot += Complex64::new(scale * re, scale * im);
        }
    }

    let ctf32 = ctf.mapv(|v| Complex32::new(v.re as f32, v.im as f32));
    MeasurementGrid::new(band.clone(), angles.clone(), rx_id, distance_m, ctf32)
}

/// Delay-domain noise power produced by per-tone noise of variance
/// `noise_sigma2` after the unitary transform.
pub fn expected_cir_noise_power(noise_sigma2: f64, band: &BandConfig) -> f64 {
    noise_sigma2 * band.n_subcarriers as f64 / band.n_fft as f64
}

fn normal_draw<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rand_distr::Distribution::sample(&rand_distr::StandardNormal, rng)
}

/// Small band for fixture grids: 2 GHz wide, 256 tones, zero-padded to 512
/// delay bins over a 128 ns span.
pub fn fixture_band_f1() -> BandConfig {
    BandConfig {
        center_frequency_hz: 154.0e9,
        bandwidth_hz: 2.0e9,
        n_subcarriers: 256,
        n_fft: 512,
        delay_resolution_s: 0.5e-9,
        delay_span_s: 128.0e-9,
        antenna_gain_tx_dbi: 26.4,
        antenna_gain_rx_dbi: 26.4,
        hpbw_az_deg: 9.0,
        hpbw_el_deg: 8.0,
    }
}

/// Companion band at twice the bandwidth, sharing the 128 ns span.
pub fn fixture_band_f2() -> BandConfig {
    BandConfig {
        center_frequency_hz: 300.0e9,
        bandwidth_hz: 4.0e9,
        n_subcarriers: 512,
        n_fft: 1024,
        delay_resolution_s: 0.25e-9,
        delay_span_s: 128.0e-9,
        antenna_gain_tx_dbi: 25.8,
        antenna_gain_rx_dbi: 25.8,
        hpbw_az_deg: 9.0,
        hpbw_el_deg: 8.0,
    }
}

/// Scan ring with `n` beams at the sounder's 9 degree spacing.
pub fn fixture_angles(n: usize) -> AngleGrid {
    let ring: Vec<f64> = (0..n).map(|k| 9.0 * k as f64).collect();
    AngleGrid {
        aod_deg: ring.clone(),
        aoa_deg: ring,
        el_tx_deg: 95.0,
        el_rx_deg: 85.0,
    }
}
