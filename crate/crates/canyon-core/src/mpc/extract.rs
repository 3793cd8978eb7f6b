//! Successive-cancellation path extraction from a filtered power grid.

use ndarray::Array3;

use crate::error::{Error, Result};
use crate::grid::BandConfig;
use crate::kernels::{delay_kernel_power, pattern_power};
use crate::mpc::{BandTag, Mpc};
use crate::spectra::PowerGrid;

/// Extraction controls. `noise_power` is the linear delay-domain noise
/// level; extraction stops once the strongest residual falls below
/// `noise_power * 10^(stop_db/10)` or more than `window_db` below the
/// first extracted component, whichever is higher. The window keeps
/// cancellation residue of strong paths, which sits well above the noise
/// floor, from being read back as weak paths.
#[derive(Debug, Clone, Copy)]
pub struct ExtractConfig {
    pub max_paths: usize,
    pub stop_db: f64,
    pub noise_power: f64,
    pub window_db: f64,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        ExtractConfig { max_paths: 25, stop_db: 0.0, noise_power: 0.0, window_db: 20.0 }
    }
}

impl ExtractConfig {
    fn floor(&self) -> f64 {
        self.noise_power * 10f64.powf(self.stop_db / 10.0)
    }
}

/// Peels paths off the grid in descending power order: take the strongest
/// bin, record it, subtract a replica shaped like the sounding kernel in
/// delay and the antenna main lobe in each angle ring, repeat. Resolution
/// is one grid bin per dimension.
pub fn extract_mpcs(
    power: &PowerGrid,
    band: &BandConfig,
    tag: BandTag,
    config: &ExtractConfig,
) -> Result<Vec<Mpc>> {
    extract_mpcs_detailed(power, band, tag, config).map(|(mpcs, _)| mpcs)
}

/// As [`extract_mpcs`], additionally returning the final residual grid.
pub fn extract_mpcs_detailed(
    power: &PowerGrid,
    band: &BandConfig,
    tag: BandTag,
    config: &ExtractConfig,
) -> Result<(Vec<Mpc>, Array3<f64>)> {
    if !power.filtered {
        return Err(Error::InvalidParams(
            "extraction expects a noise-filtered grid".into(),
        ));
    }
    if !(config.noise_power.is_finite() && config.noise_power >= 0.0) {
        return Err(Error::InvalidParams("noise_power must be non-negative".into()));
    }
    let mut residual = power.power.clone();
    let mut mpcs = Vec::new();
    if residual.is_empty() {
        return Ok((mpcs, residual));
    }

    if !(config.window_db > 0.0) {
        return Err(Error::InvalidParams("window_db must be positive".into()));
    }
    let mut floor = config.floor();
    while mpcs.len() < config.max_paths {
        let ((k, i, j), &peak) = residual
            .indexed_iter()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap();
        if peak <= 0.0 || peak < floor {
            break;
        }
        if mpcs.is_empty() {
            floor = floor.max(peak * 10f64.powf(-config.window_db / 10.0));
        }
        mpcs.push(Mpc {
            band: tag,
            delay_s: power.delay_axis_s[k],
            aod_deg: power.angles.aod_deg[i],
            aoa_deg: power.angles.aoa_deg[j],
            power_db: 10.0 * peak.log10(),
            cluster_id: None,
        });
        subtract_replica(&mut residual, power, band, (k, i, j), peak);
    }
    Ok((mpcs, residual))
}

fn subtract_replica(
    residual: &mut Array3<f64>,
    power: &PowerGrid,
    band: &BandConfig,
    center: (usize, usize, usize),
    peak: f64,
) {
    let (k, i, j) = center;
    let aod0 = power.angles.aod_deg[i];
    let aoa0 = power.angles.aoa_deg[j];
    let tx_gain: Vec<f64> = power
        .angles
        .aod_deg
        .iter()
        .map(|&a| pattern_power(a - aod0, band.hpbw_az_deg))
        .collect();
    let rx_gain: Vec<f64> = power
        .angles
        .aoa_deg
        .iter()
        .map(|&a| pattern_power(a - aoa0, band.hpbw_az_deg))
        .collect();
    for ((m, a, b), slot) in residual.indexed_iter_mut() {
        let replica = peak
            * delay_kernel_power(m as f64 - k as f64, band.n_subcarriers, band.n_fft)
            * tx_gain[a]
            * rx_gain[b];
        *slot = (*slot - replica).max(0.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::{fixture_angles, fixture_band_f1, planted_power_grid, PlantedPath};

    fn config(noise_power: f64) -> ExtractConfig {
        ExtractConfig { max_paths: 20, stop_db: 6.0, noise_power, window_db: f64::INFINITY }
    }

    fn planted(paths: &[PlantedPath]) -> PowerGrid {
        planted_power_grid(&fixture_band_f1(), &fixture_angles(10), "rx1", 20.0, paths).unwrap()
    }

    #[test]
    fn single_planted_path_is_recovered_exactly() {
        let path = PlantedPath { delay_bin: 100, aod_index: 3, aoa_index: 7, power_db: -90.0 };
        let grid = planted(&[path]);
        let mpcs = extract_mpcs(&grid, &fixture_band_f1(), BandTag::F1, &config(1e-12)).unwrap();
        assert_eq!(mpcs.len(), 1);
        let m = &mpcs[0];
        assert_eq!(m.band, BandTag::F1);
        assert!((m.delay_s - 100.0 * fixture_band_f1().delay_bin_s()).abs() < 1e-15);
        assert_eq!(m.aod_deg, 27.0);
        assert_eq!(m.aoa_deg, 63.0);
        assert!((m.power_db - (-90.0)).abs() < 0.1);
    }

    #[test]
    fn two_separated_paths_come_out_in_power_order() {
        let strong = PlantedPath { delay_bin: 50, aod_index: 2, aoa_index: 2, power_db: -88.0 };
        let weak = PlantedPath { delay_bin: 200, aod_index: 6, aoa_index: 8, power_db: -95.0 };
        let grid = planted(&[weak, strong]);
        let mpcs = extract_mpcs(&grid, &fixture_band_f1(), BandTag::F1, &config(1e-12)).unwrap();
        assert_eq!(mpcs.len(), 2);
        assert!(mpcs[0].power_db >= mpcs[1].power_db);
        let band = fixture_band_f1();
        let bin = band.delay_bin_s();
        assert!((mpcs[0].delay_s / bin - 50.0).abs() <= 1.0);
        assert!((mpcs[1].delay_s / bin - 200.0).abs() <= 1.0);
        assert!((mpcs[0].power_db - (-88.0)).abs() < 0.1);
        assert!((mpcs[1].power_db - (-95.0)).abs() < 0.1);
        assert!((mpcs[1].aod_deg - 54.0).abs() <= 9.0);
        assert!((mpcs[1].aoa_deg - 72.0).abs() <= 9.0);
    }

    #[test]
    fn residual_at_the_pick_is_cancelled() {
        let path = PlantedPath { delay_bin: 100, aod_index: 3, aoa_index: 7, power_db: -90.0 };
        let grid = planted(&[path]);
        let (mpcs, residual) =
            extract_mpcs_detailed(&grid, &fixture_band_f1(), BandTag::F1, &config(1e-12)).unwrap();
        assert_eq!(mpcs.len(), 1);
        assert!(residual[[100, 3, 7]] <= 1e-12);
        let worst = residual.iter().fold(0.0f64, |acc, &v| acc.max(v));
        assert!(worst < 1e-9 * 1e-9, "self-replica subtraction leaves {worst}");
    }

    #[test]
    fn stop_threshold_suppresses_weak_paths() {
        let strong = PlantedPath { delay_bin: 50, aod_index: 2, aoa_index: 2, power_db: -88.0 };
        let weak = PlantedPath { delay_bin: 200, aod_index: 6, aoa_index: 8, power_db: -120.0 };
        let grid = planted(&[strong, weak]);
        // Noise floor -110 dB, stop 6 dB above: the -120 dB path stays out.
        let cfg = ExtractConfig {
            max_paths: 20,
            stop_db: 6.0,
            noise_power: 1e-11,
            window_db: f64::INFINITY,
        };
        let mpcs = extract_mpcs(&grid, &fixture_band_f1(), BandTag::F1, &cfg).unwrap();
        assert_eq!(mpcs.len(), 1);
        assert!((mpcs[0].power_db - (-88.0)).abs() < 0.1);
    }

    #[test]
    fn max_paths_caps_the_output() {
        let paths: Vec<PlantedPath> = (0..6)
            .map(|i| PlantedPath {
                delay_bin: 40 + 60 * i,
                aod_index: i,
                aoa_index: i,
                power_db: -90.0 - i as f64,
            })
            .collect();
        let grid = planted(&paths);
        let cfg = ExtractConfig {
            max_paths: 3,
            stop_db: 6.0,
            noise_power: 1e-13,
            window_db: f64::INFINITY,
        };
        let mpcs = extract_mpcs(&grid, &fixture_band_f1(), BandTag::F1, &cfg).unwrap();
        assert_eq!(mpcs.len(), 3);
    }

    #[test]
    fn dynamic_window_drops_components_far_below_the_peak() {
        let strong = PlantedPath { delay_bin: 50, aod_index: 2, aoa_index: 2, power_db: -88.0 };
        let inside = PlantedPath { delay_bin: 200, aod_index: 6, aoa_index: 8, power_db: -100.0 };
        let outside = PlantedPath { delay_bin: 350, aod_index: 4, aoa_index: 5, power_db: -112.0 };
        let grid = planted(&[strong, inside, outside]);
        let cfg = ExtractConfig { max_paths: 20, noise_power: 1e-13, ..ExtractConfig::default() };
        let mpcs = extract_mpcs(&grid, &fixture_band_f1(), BandTag::F1, &cfg).unwrap();
        assert_eq!(mpcs.len(), 2, "20 dB window keeps two of three");
        assert!((mpcs[0].power_db - (-88.0)).abs() < 0.1);
        assert!((mpcs[1].power_db - (-100.0)).abs() < 0.1);
    }

    #[test]
    fn unfiltered_grids_are_refused() {
        let path = PlantedPath { delay_bin: 10, aod_index: 0, aoa_index: 0, power_db: -90.0 };
        let mut grid = planted(&[path]);
        grid.filtered = false;
        assert!(extract_mpcs(&grid, &fixture_band_f1(), BandTag::F1, &config(1e-12)).is_err());
    }

    #[test]
    fn silent_grid_yields_no_paths() {
        let grid = planted(&[]);
        let mpcs = extract_mpcs(&grid, &fixture_band_f1(), BandTag::F1, &config(1e-12)).unwrap();
        assert!(mpcs.is_empty());
    }

    #[test]
    fn powers_never_exceed_the_grid_peak() {
        let paths = [
            PlantedPath { delay_bin: 60, aod_index: 1, aoa_index: 1, power_db: -90.0 },
            PlantedPath { delay_bin: 63, aod_index: 2, aoa_index: 1, power_db: -91.0 },
            PlantedPath { delay_bin: 66, aod_index: 2, aoa_index: 2, power_db: -92.0 },
        ];
        let grid = planted(&paths);
        let peak_db = 10.0 * grid.peak_power().log10();
        let mpcs = extract_mpcs(&grid, &fixture_band_f1(), BandTag::F1, &config(1e-13)).unwrap();
        assert!(!mpcs.is_empty());
        for pair in mpcs.windows(2) {
            assert!(pair[0].power_db >= pair[1].power_db, "descending order");
        }
        for m in &mpcs {
            assert!(m.power_db <= peak_db + 1e-9);
        }
    }
}
