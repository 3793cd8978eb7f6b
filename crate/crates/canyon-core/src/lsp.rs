//! Large-scale parameters: omnidirectional path loss with beam-overlap
//! correction, distance-law fitting, delay and azimuth spreads, and the
//! Rician K-factor.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{AngleGrid, BandConfig, SPEED_OF_LIGHT};
use crate::kernels::{pattern_power, wrap_angle_deg};
use crate::mpc::ClusterSet;
use crate::spectra::{Pap, Pdp, PowerGrid};

// ---------------------------------------------------------------------------
// Path loss
// ---------------------------------------------------------------------------

/// One campaign point for distance-law fitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathLossSample {
    pub distance_m: f64,
    pub pl_db: f64,
    pub band: String,
    pub scenario: Scenario,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Los,
    Nlos,
}

/// Omnidirectional path loss from an incoherent power sum over the whole
/// grid, minus the beam-overlap gain `ga_db` the scan added.
pub fn omni_path_loss(power: &PowerGrid, ga_db: f64) -> Result<f64> {
    if !power.filtered {
        return Err(Error::InvalidParams("path loss expects a noise-filtered grid".into()));
    }
    let total = power.total_power();
    if !(total > 0.0) {
        return Err(Error::EmptyInput("grid holds no power".into()));
    }
    Ok(-(10.0 * total.log10() - ga_db))
}

/// Extra received power a scan ring collects because neighboring beams
/// overlap within the main lobe, relative to a single aligned beam. Summed
/// over both sides [dB].
pub fn beam_overlap_gain(angles: &AngleGrid, band: &BandConfig) -> Result<f64> {
    angles.validate()?;
    Ok(ring_overlap_db(&angles.aod_deg, band.hpbw_az_deg)
        + ring_overlap_db(&angles.aoa_deg, band.hpbw_az_deg))
}

fn ring_overlap_db(ring: &[f64], hpbw_deg: f64) -> f64 {
    let reference = ring[0];
    let sum: f64 = ring
        .iter()
        .map(|&a| pattern_power(wrap_angle_deg(a - reference), hpbw_deg))
        .sum();
    10.0 * sum.log10()
}

// ---------------------------------------------------------------------------
// Distance-law fits
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitModel {
    Ci,
    Fi,
}

/// Fitted distance law. For the close-in model `exponent` is the path-loss
/// exponent and `intercept_db` the fixed free-space term at 1 m; for the
/// floating-intercept model they are the fitted slope and intercept.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub model: FitModel,
    pub exponent: f64,
    pub intercept_db: f64,
    /// Residual standard deviation, N divisor [dB].
    pub sigma_db: f64,
    pub residuals_db: Vec<f64>,
}

/// Close-in model fit `PL = 10 n log10(d) + 20 log10(4 pi f_c / c)`. The
/// intercept is pinned by the carrier, leaving one free slope.
pub fn fit_ci(samples: &[PathLossSample], f_c_hz: f64) -> Result<FitResult> {
    validate_samples(samples)?;
    if !(f_c_hz.is_finite() && f_c_hz > 0.0) {
        return Err(Error::Fit("carrier frequency must be positive".into()));
    }
    let intercept = 20.0 * (4.0 * std::f64::consts::PI * f_c_hz / SPEED_OF_LIGHT).log10();
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for s in samples {
        let x = 10.0 * s.distance_m.log10();
        let y = s.pl_db - intercept;
        sxx += x * x;
        sxy += x * y;
    }
    if sxx <= 0.0 {
        return Err(Error::Fit("all samples sit at the 1 m reference distance".into()));
    }
    let n = sxy / sxx;
    let residuals: Vec<f64> = samples
        .iter()
        .map(|s| s.pl_db - intercept - n * 10.0 * s.distance_m.log10())
        .collect();
    Ok(FitResult {
        model: FitModel::Ci,
        exponent: n,
        intercept_db: intercept,
        sigma_db: std_n(&residuals),
        residuals_db: residuals,
    })
}

/// Floating-intercept fit `PL = 10 alpha log10(d) + beta`, plain least
/// squares in both parameters.
pub fn fit_fi(samples: &[PathLossSample]) -> Result<FitResult> {
    validate_samples(samples)?;
    let n = samples.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for s in samples {
        let x = 10.0 * s.distance_m.log10();
        sx += x;
        sy += s.pl_db;
        sxx += x * x;
        sxy += x * s.pl_db;
    }
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-9 * (n * sxx).abs().max(1.0) {
        return Err(Error::Fit("degenerate design matrix: distances do not vary".into()));
    }
    let alpha = (n * sxy - sx * sy) / denom;
    let beta = (sy - alpha * sx) / n;
    let residuals: Vec<f64> = samples
        .iter()
        .map(|s| s.pl_db - alpha * 10.0 * s.distance_m.log10() - beta)
        .collect();
    Ok(FitResult {
        model: FitModel::Fi,
        exponent: alpha,
        intercept_db: beta,
        sigma_db: std_n(&residuals),
        residuals_db: residuals,
    })
}

fn validate_samples(samples: &[PathLossSample]) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("no path loss samples".into()));
    }
    for s in samples {
        if !(s.distance_m.is_finite() && s.distance_m > 0.0) {
            return Err(Error::Fit(format!("distance must be positive, got {}", s.distance_m)));
        }
        if !s.pl_db.is_finite() {
            return Err(Error::Fit("non-finite path loss sample".into()));
        }
    }
    Ok(())
}

fn std_n(residuals: &[f64]) -> f64 {
    let n = residuals.len() as f64;
    let mean = residuals.iter().sum::<f64>() / n;
    (residuals.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n).sqrt()
}

// ---------------------------------------------------------------------------
// Profile conditioning and spreads
// ---------------------------------------------------------------------------

/// Zeroes profile entries below `max(peak - window_db, floor_db)`.
pub fn acceptance_filter_values(power: &mut [f64], window_db: f64, floor_db: f64) {
    let peak = power.iter().fold(0.0f64, |acc, &p| acc.max(p));
    if peak <= 0.0 {
        return;
    }
    let threshold = (peak * 10f64.powf(-window_db / 10.0)).max(10f64.powf(floor_db / 10.0));
    for p in power.iter_mut() {
        if *p < threshold {
            *p = 0.0;
        }
    }
}

pub fn acceptance_filter_pdp(pdp: &Pdp, window_db: f64, floor_db: f64) -> Pdp {
    let mut out = pdp.clone();
    acceptance_filter_values(&mut out.power, window_db, floor_db);
    out
}

pub fn acceptance_filter_pap(pap: &Pap, window_db: f64, floor_db: f64) -> Pap {
    let mut out = pap.clone();
    acceptance_filter_values(&mut out.power, window_db, floor_db);
    out
}

/// Root-mean-square delay spread: power-weighted standard deviation of the
/// delay axis [s].
pub fn delay_spread(pdp: &Pdp) -> Result<f64> {
    let total: f64 = pdp.power.iter().sum();
    if !(total > 0.0) {
        return Err(Error::EmptyInput("profile holds no power".into()));
    }
    let m1: f64 = pdp
        .delay_axis_s
        .iter()
        .zip(&pdp.power)
        .map(|(&t, &p)| t * p)
        .sum::<f64>()
        / total;
    let m2: f64 = pdp
        .delay_axis_s
        .iter()
        .zip(&pdp.power)
        .map(|(&t, &p)| t * t * p)
        .sum::<f64>()
        / total;
    Ok((m2 - m1 * m1).max(0.0).sqrt())
}

/// Smallest resultant magnitude fed to the circular-spread logarithm.
pub const ANGULAR_SPREAD_CLAMP: f64 = 1e-12;

/// Circular azimuth spread `sqrt(-2 ln |sum P e^{j phi}| / sum P)` [rad].
pub fn angular_spread(pap: &Pap) -> Result<f64> {
    let total: f64 = pap.power.iter().sum();
    if !(total > 0.0) {
        return Err(Error::EmptyInput("profile holds no power".into()));
    }
    let mut re = 0.0;
    let mut im = 0.0;
    for (&angle, &p) in pap.angles_deg.iter().zip(&pap.power) {
        let phi = angle.to_radians();
        re += p * phi.cos();
        im += p * phi.sin();
    }
    let resultant = ((re * re + im * im).sqrt() / total).clamp(ANGULAR_SPREAD_CLAMP, 1.0);
    Ok((-2.0 * resultant.ln()).sqrt())
}

// ---------------------------------------------------------------------------
// K-factor
// ---------------------------------------------------------------------------

/// Ratio of the minimum-delay cluster's power to everything else [dB].
/// Returns positive infinity when no other cluster exists. `invert` flips
/// the ratio for consumers wanting diffuse-over-direct.
pub fn k_factor(cs: &ClusterSet, invert: bool) -> Result<f64> {
    if cs.mpcs.is_empty() || cs.k == 0 {
        return Err(Error::EmptyInput("cluster set has no components".into()));
    }
    let mut cluster_delay_min = vec![f64::INFINITY; cs.k];
    let mut cluster_power = vec![0.0f64; cs.k];
    for m in &cs.mpcs {
        let id = m
            .cluster_id
            .ok_or_else(|| Error::Clustering("unlabeled component".into()))?;
        if id == 0 || id > cs.k {
            return Err(Error::Clustering(format!("cluster id {id} out of 1..{}", cs.k)));
        }
        cluster_delay_min[id - 1] = cluster_delay_min[id - 1].min(m.delay_s);
        cluster_power[id - 1] += 10f64.powf(m.power_db / 10.0);
    }
    let los = cluster_delay_min
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(j, _)| j)
        .unwrap();
    let los_power = cluster_power[los];
    let rest: f64 = cluster_power
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != los)
        .map(|(_, &p)| p)
        .sum();
    // Log difference rather than a quotient: an empty rest sums to -0.0,
    // whose log is cleanly -inf while dividing by it flips the sign.
    let kf_db = 10.0 * (los_power.log10() - rest.log10());
    Ok(if invert { -kf_db } else { kf_db })
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

/// Per-link summary in presentation units. Infinite K serializes to null.
#[derive(Debug, Clone, Serialize)]
pub struct LspReport {
    pub pl_db: f64,
    pub ds_ns: f64,
    pub asd_deg: f64,
    pub asa_deg: f64,
    pub kf_db: f64,
}

impl LspReport {
    pub fn new(pl_db: f64, ds_s: f64, asd_rad: f64, asa_rad: f64, kf_db: f64) -> Self {
        LspReport {
            pl_db,
            ds_ns: ds_s * 1e9,
            asd_deg: asd_rad.to_degrees(),
            asa_deg: asa_rad.to_degrees(),
            kf_db,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mpc::{BandTag, Mpc};
    use crate::synthetic::{fixture_angles, fixture_band_f1, planted_power_grid};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    // -- omni path loss ------------------------------------------------------

    fn grid_with_total(total: f64) -> PowerGrid {
        let mut grid =
            planted_power_grid(&fixture_band_f1(), &fixture_angles(2), "rx", 10.0, &[]).unwrap();
        grid.power[[0, 0, 0]] = total;
        grid
    }

    #[test]
    fn single_bin_grid_reads_its_power_back() {
        let grid = grid_with_total(1e-10);
        assert!((omni_path_loss(&grid, 0.0).unwrap() - 100.0).abs() < 1e-12);
        assert!((omni_path_loss(&grid, 3.0).unwrap() - 103.0).abs() < 1e-12);
    }

    #[test]
    fn free_space_grid_reads_free_space_loss() {
        let fspl = crate::geometry::free_space_path_loss_db(10.0, 154.0e9).unwrap();
        let grid = grid_with_total(10f64.powf(-fspl / 10.0));
        let pl = omni_path_loss(&grid, 0.0).unwrap();
        assert!((pl - 96.2).abs() < 0.05, "pl {pl}");
    }

    #[test]
    fn path_loss_ignores_bin_arrangement() {
        let mut grid = grid_with_total(0.0);
        grid.power[[5, 0, 1]] = 4e-11;
        grid.power[[300, 1, 0]] = 6e-11;
        let a = omni_path_loss(&grid, 0.0).unwrap();
        let b = omni_path_loss(&grid_with_total(1e-10), 0.0).unwrap();
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn empty_or_unfiltered_grids_are_rejected() {
        let grid = grid_with_total(0.0);
        assert!(omni_path_loss(&grid, 0.0).is_err());
        let mut grid = grid_with_total(1e-10);
        grid.filtered = false;
        assert!(omni_path_loss(&grid, 0.0).is_err());
    }

    // -- beam overlap --------------------------------------------------------

    #[test]
    fn matched_step_overlap_is_about_half_a_db_per_side() {
        let angles = fixture_angles(40);
        let band = fixture_band_f1();
        let per_side = 10.0 * (1.0f64 + 2.0 * 2.0f64.powi(-4) + 2.0 * 2.0f64.powi(-16)).log10();
        let total = beam_overlap_gain(&angles, &band).unwrap();
        assert!((total - 2.0 * per_side).abs() < 1e-6, "total {total}");
        assert!((per_side - 0.5115).abs() < 1e-3);
    }

    #[test]
    fn coarse_scan_has_no_overlap() {
        let mut band = fixture_band_f1();
        band.hpbw_az_deg = 0.5;
        let ga = beam_overlap_gain(&fixture_angles(8), &band).unwrap();
        assert!(ga.abs() < 1e-9, "ga {ga}");
    }

    #[test]
    fn denser_scans_overlap_more() {
        let band = fixture_band_f1();
        let coarse: Vec<f64> = (0..20).map(|k| 18.0 * k as f64).collect();
        let fine: Vec<f64> = (0..40).map(|k| 9.0 * k as f64).collect();
        let make = |ring: Vec<f64>| AngleGrid {
            aod_deg: ring.clone(),
            aoa_deg: ring,
            el_tx_deg: 95.0,
            el_rx_deg: 85.0,
        };
        let ga_coarse = beam_overlap_gain(&make(coarse), &band).unwrap();
        let ga_fine = beam_overlap_gain(&make(fine), &band).unwrap();
        assert!(ga_fine > ga_coarse);
    }

    // -- fits ----------------------------------------------------------------

    fn sample(d: f64, pl: f64) -> PathLossSample {
        PathLossSample { distance_m: d, pl_db: pl, band: "154ghz".into(), scenario: Scenario::Los }
    }

    fn ci_intercept(f_c: f64) -> f64 {
        20.0 * (4.0 * std::f64::consts::PI * f_c / SPEED_OF_LIGHT).log10()
    }

    #[test]
    fn noiseless_ci_data_recovers_exactly() {
        let f_c = 154.0e9;
        let intercept = ci_intercept(f_c);
        let samples: Vec<PathLossSample> = [5.0, 10.0, 20.0, 50.0]
            .iter()
            .map(|&d| sample(d, 10.0 * 2.0 * d.log10() + intercept))
            .collect();
        let fit = fit_ci(&samples, f_c).unwrap();
        assert!((fit.exponent - 2.0).abs() < 1e-12);
        assert!(fit.sigma_db < 1e-12);
        assert!((fit.intercept_db - intercept).abs() < 1e-12);
    }

    #[test]
    fn one_sample_pins_the_exponent() {
        let f_c = 300.0e9;
        let samples = vec![sample(10.0, ci_intercept(f_c) + 19.4)];
        let fit = fit_ci(&samples, f_c).unwrap();
        assert!((fit.exponent - 1.94).abs() < 1e-12);
        assert_eq!(fit.sigma_db, 0.0);
    }

    #[test]
    fn reference_distance_samples_cannot_pin_a_slope() {
        let f_c = 154.0e9;
        let samples = vec![sample(1.0, 100.0), sample(1.0, 101.0)];
        assert!(fit_ci(&samples, f_c).is_err());
    }

    #[test]
    fn noiseless_fi_data_recovers_exactly() {
        let samples: Vec<PathLossSample> = [5.0, 12.0, 30.0, 80.0]
            .iter()
            .map(|&d| sample(d, 10.0 * 2.62 * d.log10() + 85.65))
            .collect();
        let fit = fit_fi(&samples).unwrap();
        assert!((fit.exponent - 2.62).abs() < 1e-9);
        assert!((fit.intercept_db - 85.65).abs() < 1e-9);
        assert!(fit.sigma_db < 1e-9);
        let mean: f64 = fit.residuals_db.iter().sum::<f64>() / fit.residuals_db.len() as f64;
        assert!(mean.abs() < 1e-9, "least squares centers the residuals");
    }

    #[test]
    fn constant_distance_design_is_degenerate() {
        let samples = vec![sample(20.0, 100.0), sample(20.0, 105.0)];
        assert!(fit_fi(&samples).is_err());
    }

    /// Residuals orthogonal to the design and scaled to an exact sample
    /// sigma, so recovery checks are sharp instead of statistical.
    fn ci_fixture(n_pts: usize, exponent: f64, sigma: f64, f_c: f64, seed: u64) -> Vec<PathLossSample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d: Vec<f64> = (0..n_pts).map(|_| 5.0 + 95.0 * rng.random::<f64>()).collect();
        let x: Vec<f64> = d.iter().map(|&d| 10.0 * d.log10()).collect();
        let mut r: Vec<f64> = (0..n_pts).map(|_| rng.random::<f64>() - 0.5).collect();
        let xx: f64 = x.iter().map(|v| v * v).sum();
        let xr: f64 = x.iter().zip(&r).map(|(a, b)| a * b).sum();
        for (ri, xi) in r.iter_mut().zip(&x) {
            *ri -= xr / xx * xi;
        }
        let mean = r.iter().sum::<f64>() / n_pts as f64;
        let rms = (r.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n_pts as f64).sqrt();
        let scale = sigma / rms;
        let intercept = ci_intercept(f_c);
        d.iter()
            .zip(&x)
            .zip(&r)
            .map(|((&d, &xi), &ri)| sample(d, exponent * xi + intercept + ri * scale))
            .collect()
    }

    #[test]
    fn seeded_ci_fixture_recovers_published_los_values() {
        let samples = ci_fixture(1000, 1.94, 0.85, 154.0e9, 42);
        let fit = fit_ci(&samples, 154.0e9).unwrap();
        assert!((fit.exponent - 1.94).abs() < 1e-9, "exponent {}", fit.exponent);
        assert!((fit.sigma_db - 0.85).abs() < 1e-9, "sigma {}", fit.sigma_db);
    }

    #[test]
    fn fi_never_fits_worse_than_ci() {
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let samples: Vec<PathLossSample> = (0..50)
                .map(|_| {
                    let d = 5.0 + 95.0 * rng.random::<f64>();
                    sample(d, 10.0 * 2.5 * d.log10() + 75.0 + 4.0 * (rng.random::<f64>() - 0.5))
                })
                .collect();
            let ci = fit_ci(&samples, 154.0e9).unwrap();
            let fi = fit_fi(&samples).unwrap();
            assert!(fi.sigma_db <= ci.sigma_db + 1e-12);
        }
    }

    // -- acceptance filter ---------------------------------------------------

    #[test]
    fn window_governs_when_above_the_floor() {
        let mut power = vec![1.0, 0.5, 0.009, 1e-6];
        acceptance_filter_values(&mut power, 20.0, -40.0);
        assert_eq!(power, vec![1.0, 0.5, 0.0, 0.0]);
    }

    #[test]
    fn floor_governs_when_higher() {
        let mut power = vec![1.0, 0.5, 0.05];
        acceptance_filter_values(&mut power, 20.0, -10.0);
        assert_eq!(power, vec![1.0, 0.5, 0.0]);
    }

    #[test]
    fn flat_profiles_pass_untouched() {
        let mut power = vec![0.3; 6];
        acceptance_filter_values(&mut power, 20.0, -40.0);
        assert_eq!(power, vec![0.3; 6]);
    }

    #[test]
    fn filtering_twice_changes_nothing() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut power: Vec<f64> = (0..100).map(|_| rng.random::<f64>().powi(4)).collect();
        acceptance_filter_values(&mut power, 20.0, -15.0);
        let once = power.clone();
        acceptance_filter_values(&mut power, 20.0, -15.0);
        assert_eq!(power, once);
    }

    // -- spreads -------------------------------------------------------------

    fn pdp(delays_ns: &[f64], power: &[f64]) -> Pdp {
        Pdp {
            delay_axis_s: delays_ns.iter().map(|d| d * 1e-9).collect(),
            power: power.to_vec(),
        }
    }

    #[test]
    fn impulse_has_zero_delay_spread() {
        let p = pdp(&[0.0, 10.0, 20.0], &[0.0, 1.0, 0.0]);
        assert_eq!(delay_spread(&p).unwrap(), 0.0);
    }

    #[test]
    fn symmetric_two_path_profile_spreads_half_the_gap() {
        let p = pdp(&[0.0, 100.0], &[1.0, 1.0]);
        assert!((delay_spread(&p).unwrap() - 50.0e-9).abs() < 1e-18);
    }

    #[test]
    fn delay_spread_matches_direct_moments_and_ignores_scale() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let delays: Vec<f64> = (0..64).map(|k| k as f64).collect();
        let power: Vec<f64> = (0..64).map(|_| rng.random::<f64>()).collect();
        let p = pdp(&delays, &power);
        let ds = delay_spread(&p).unwrap();

        let total: f64 = power.iter().sum();
        let m1: f64 =
            delays.iter().zip(&power).map(|(d, p)| d * 1e-9 * p).sum::<f64>() / total;
        let m2: f64 =
            delays.iter().zip(&power).map(|(d, p)| d * 1e-9 * d * 1e-9 * p).sum::<f64>() / total;
        let oracle = (m2 - m1 * m1).sqrt();
        assert!((ds - oracle).abs() < 1e-12 * oracle);

        let scaled = pdp(&delays, &power.iter().map(|p| p * 7.5).collect::<Vec<_>>());
        assert!((delay_spread(&scaled).unwrap() - ds).abs() < 1e-12 * ds);
    }

    fn pap(angles: &[f64], power: &[f64]) -> Pap {
        Pap {
            side: crate::spectra::Side::Tx,
            angles_deg: angles.to_vec(),
            power: power.to_vec(),
        }
    }

    #[test]
    fn single_beam_has_zero_angular_spread() {
        let p = pap(&[0.0, 90.0, 180.0], &[0.0, 2.0, 0.0]);
        assert_eq!(angular_spread(&p).unwrap(), 0.0);
    }

    #[test]
    fn orthogonal_equal_beams_match_the_closed_form() {
        let p = pap(&[0.0, 90.0], &[1.0, 1.0]);
        let expected = (-2.0 * (0.5f64.sqrt()).ln()).sqrt();
        let spread = angular_spread(&p).unwrap();
        assert!((spread - expected).abs() < 1e-12);
        assert!((spread - 0.8326).abs() < 1e-4);
    }

    #[test]
    fn angular_spread_is_rotation_invariant() {
        let power = vec![1.0, 3.0, 0.5, 2.0];
        let base = vec![0.0, 45.0, 120.0, 300.0];
        let a = angular_spread(&pap(&base, &power)).unwrap();
        for shift in [17.0, 90.0, 213.5] {
            let rotated: Vec<f64> = base.iter().map(|v| (v + shift).rem_euclid(360.0)).collect();
            let b = angular_spread(&pap(&rotated, &power)).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn opposed_beams_hit_the_clamp() {
        let p = pap(&[0.0, 180.0], &[1.0, 1.0]);
        let spread = angular_spread(&p).unwrap();
        let max = (-2.0 * ANGULAR_SPREAD_CLAMP.ln()).sqrt();
        assert!((spread - max).abs() < 1e-9);
    }

    // -- k-factor ------------------------------------------------------------

    fn clustered(powers: &[(f64, f64, usize)]) -> ClusterSet {
        let mpcs: Vec<Mpc> = powers
            .iter()
            .map(|&(delay_ns, power_db, id)| Mpc {
                band: BandTag::F1,
                delay_s: delay_ns * 1e-9,
                aod_deg: 0.0,
                aoa_deg: 0.0,
                power_db,
                cluster_id: Some(id),
            })
            .collect();
        let k = mpcs.iter().map(|m| m.cluster_id.unwrap()).max().unwrap();
        ClusterSet { mpcs, k, common_flags: vec![false; k], objective_trace: Vec::new() }
    }

    #[test]
    fn ten_to_one_power_ratio_reads_ten_db() {
        let cs = clustered(&[(10.0, -90.0, 1), (50.0, -100.0, 2)]);
        assert!((k_factor(&cs, false).unwrap() - 10.0).abs() < 1e-12);
        assert!((k_factor(&cs, true).unwrap() + 10.0).abs() < 1e-12);
    }

    #[test]
    fn equal_powers_read_zero_db() {
        let a = -95.0;
        let half = a + 10.0 * 0.5f64.log10();
        let cs = clustered(&[(10.0, a, 1), (60.0, half, 2), (90.0, half, 3)]);
        let kf = k_factor(&cs, false).unwrap();
        assert!(kf.abs() < 1e-9, "kf {kf}");
    }

    #[test]
    fn lone_cluster_reports_unbounded_k() {
        let cs = clustered(&[(10.0, -90.0, 1), (12.0, -94.0, 1)]);
        let kf = k_factor(&cs, false).unwrap();
        assert!(kf.is_infinite() && kf > 0.0, "kf {kf}");
        let report = LspReport::new(100.0, 20e-9, 0.5, 0.4, kf);
        let json = serde_json::to_value(&report).unwrap();
        assert!(json["kf_db"].is_null());
    }

    #[test]
    fn report_converts_to_presentation_units() {
        let report = LspReport::new(96.2, 23.5e-9, 0.1, 0.2, 8.0);
        assert!((report.ds_ns - 23.5).abs() < 1e-9);
        assert!((report.asd_deg - 0.1f64.to_degrees()).abs() < 1e-12);
        assert!((report.asa_deg - 0.2f64.to_degrees()).abs() < 1e-12);
    }
}
