//! Path generation for channel realizations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};

use crate::error::Result;
use crate::geometry::{self, GeometryScene, PathKind};
use crate::grid::{BandConfig, SPEED_OF_LIGHT};
use crate::qd::{CirRealization, QdModelParams, QdPath};

/// Deterministic part of a realization: the line of sight plus whichever
/// wall bounces are present this draw. Draw order is fixed: north-wall
/// presence, south-wall presence, then one amplitude deviation per present
/// bounce.
pub fn deterministic_component(
    scene: &GeometryScene,
    band: &BandConfig,
    params: &QdModelParams,
    seed: u64,
) -> Result<Vec<QdPath>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    deterministic_with_rng(scene, band, params, None, None, &mut rng)
}

pub(crate) fn deterministic_with_rng<R: Rng + ?Sized>(
    scene: &GeometryScene,
    band: &BandConfig,
    params: &QdModelParams,
    nw_present: Option<bool>,
    sw_present: Option<bool>,
    rng: &mut R,
) -> Result<Vec<QdPath>> {
    params.validate()?;
    let nw = match nw_present {
        Some(s) => s,
        None => params.chain_nw()?.draw_stationary(rng)?,
    };
    let sw = match sw_present {
        Some(s) => s,
        None => params.chain_sw()?.draw_stationary(rng)?,
    };

    let traced = geometry::trace(scene, band, &[PathKind::Los, PathKind::SbNw, PathKind::SbSw])?;
    let mut out = Vec::new();
    for ray in traced {
        let present = match ray.kind {
            PathKind::Los => true,
            PathKind::SbNw => nw,
            PathKind::SbSw => sw,
            _ => unreachable!(),
        };
        if !present {
            continue;
        }
        let mut gain_db = ray.gain_db;
        if ray.kind != PathKind::Los && params.det_amp_sigma_db > 0.0 {
            let z: f64 = StandardNormal.sample(rng);
            gain_db += params.det_amp_sigma_db * z;
        }
        out.push(QdPath {
            kind: ray.kind,
            delay_s: ray.delay_s,
            aod_deg: ray.aod_deg,
            aoa_deg: ray.aoa_deg,
            gain_db,
        });
    }
    Ok(out)
}

/// Gain ramp of a stochastic path before shadowing [dB].
pub fn random_path_gain_db(excess_delay_ns: f64, los_gain_db: f64, params: &QdModelParams) -> f64 {
    params.slope_a_db_per_ns * excess_delay_ns + params.intercept_b_db + los_gain_db
}

/// Stochastic paths for a link of the given line-of-sight distance. Arrivals
/// start at the line-of-sight delay with exponential interarrival times;
/// generation stops once the gain ramp sinks three shadowing sigmas below
/// the stopping floor or the band's delay span runs out. Draw order per
/// path: interarrival, shadowing, departure azimuth, arrival azimuth.
pub fn random_components(
    distance_m: f64,
    band: &BandConfig,
    params: &QdModelParams,
    seed: u64,
) -> Result<Vec<QdPath>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_with_rng(distance_m, band, params, &mut rng)
}

pub(crate) fn random_with_rng<R: Rng + ?Sized>(
    distance_m: f64,
    band: &BandConfig,
    params: &QdModelParams,
    rng: &mut R,
) -> Result<Vec<QdPath>> {
    params.validate()?;
    band.validate()?;
    let los_gain_db = -geometry::free_space_path_loss_db(distance_m, band.center_frequency_hz)?;
    let tau_los = distance_m / SPEED_OF_LIGHT;

    let stop_excess_s = match params.stop_excess_ns() {
        Some(ns) => ns * 1e-9,
        None => return Ok(Vec::new()),
    };
    let interarrival = Exp::new(1.0 / (params.arrival_mean_ns * 1e-9))
        .expect("validated arrival mean is positive");

    let mut out = Vec::new();
    let mut tau = tau_los;
    loop {
        tau += interarrival.sample(rng);
        let excess = tau - tau_los;
        if excess > stop_excess_s || tau > band.delay_span_s {
            break;
        }
        let shadow: f64 = {
            let z: f64 = StandardNormal.sample(rng);
            params.shadow_sigma_db * z
        };
        let aod = sample_angle(params.random_aod_range_deg, rng);
        let aoa = sample_angle(params.random_aoa_range_deg, rng);
        out.push(QdPath {
            kind: PathKind::Random,
            delay_s: tau,
            aod_deg: aod,
            aoa_deg: aoa,
            gain_db: random_path_gain_db(excess * 1e9, los_gain_db, params) + shadow,
        });
    }
    Ok(out)
}

fn sample_angle<R: Rng + ?Sized>(range: (f64, f64), rng: &mut R) -> f64 {
    let (lo, hi) = range;
    (lo + (hi - lo) * rng.random::<f64>()).rem_euclid(360.0)
}

/// One full realization: deterministic paths followed by stochastic paths,
/// all delays ascending within each group. One seeded generator drives both
/// stages, so equal inputs reproduce bit-identical output.
pub fn synthesize(
    scene: &GeometryScene,
    band: &BandConfig,
    params: &QdModelParams,
    seed: u64,
) -> Result<CirRealization> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    synthesize_with_rng(scene, band, params, None, None, seed, &mut rng)
}

fn synthesize_with_rng<R: Rng + ?Sized>(
    scene: &GeometryScene,
    band: &BandConfig,
    params: &QdModelParams,
    nw_present: Option<bool>,
    sw_present: Option<bool>,
    seed: u64,
    rng: &mut R,
) -> Result<CirRealization> {
    let mut paths = deterministic_with_rng(scene, band, params, nw_present, sw_present, rng)?;
    let los = paths
        .first()
        .expect("trace always yields the line of sight")
        .clone();
    let distance_m = los.delay_s * SPEED_OF_LIGHT;
    paths.extend(random_with_rng(distance_m, band, params, rng)?);
    Ok(CirRealization { seed, distance_m, paths })
}

/// A trajectory of realizations sharing one scene. Wall presence evolves
/// step by step along the sequence instead of being redrawn independently,
/// mimicking a receiver moving through consecutive positions.
pub fn synthesize_many(
    scene: &GeometryScene,
    band: &BandConfig,
    params: &QdModelParams,
    count: usize,
    seed: u64,
) -> Result<Vec<CirRealization>> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chain_nw = params.chain_nw()?;
    let chain_sw = params.chain_sw()?;
    let mut out = Vec::with_capacity(count);
    let mut nw = None;
    let mut sw = None;
    for _ in 0..count {
        let nw_state = match nw {
            Some(prev) => chain_nw.step(prev, &mut rng),
            None => chain_nw.draw_stationary(&mut rng)?,
        };
        let sw_state = match sw {
            Some(prev) => chain_sw.step(prev, &mut rng),
            None => chain_sw.draw_stationary(&mut rng)?,
        };
        nw = Some(nw_state);
        sw = Some(sw_state);
        out.push(synthesize_with_rng(
            scene,
            band,
            params,
            Some(nw_state),
            Some(sw_state),
            seed,
            &mut rng,
        )?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Site;

    fn scene() -> GeometryScene {
        GeometryScene::street_canyon_preset(22.0).unwrap()
    }

    fn band() -> BandConfig {
        BandConfig::preset_154ghz()
    }

    fn frozen_params() -> QdModelParams {
        let mut p = QdModelParams::preset_154ghz();
        p.force_wall_presence(true);
        p.det_amp_sigma_db = 0.0;
        p
    }

    /// Band with a multi-millisecond delay span, so one call yields a long
    /// arrival record.
    fn wide_span_band() -> BandConfig {
        BandConfig {
            center_frequency_hz: 154.0e9,
            bandwidth_hz: 1.0e6,
            n_subcarriers: 8000,
            n_fft: 8000,
            delay_resolution_s: 1.0e-6,
            delay_span_s: 8.0e-3,
            antenna_gain_tx_dbi: 0.0,
            antenna_gain_rx_dbi: 0.0,
            hpbw_az_deg: 9.0,
            hpbw_el_deg: 8.0,
        }
    }

    #[test]
    fn frozen_randomness_reproduces_the_traced_gains() {
        let traced = geometry::trace(
            &scene(),
            &band(),
            &[PathKind::Los, PathKind::SbNw, PathKind::SbSw],
        )
        .unwrap();
        let det = deterministic_component(&scene(), &band(), &frozen_params(), 11).unwrap();
        assert_eq!(det.len(), 3);
        for (d, t) in det.iter().zip(&traced) {
            assert_eq!(d.kind, t.kind);
            assert_eq!(d.delay_s, t.delay_s);
            assert_eq!(d.aod_deg, t.aod_deg);
            assert_eq!(d.aoa_deg, t.aoa_deg);
            assert_eq!(d.gain_db, t.gain_db);
        }
    }

    #[test]
    fn absent_walls_leave_only_the_line_of_sight() {
        let mut params = frozen_params();
        params.force_wall_presence(false);
        let det = deterministic_component(&scene(), &band(), &params, 11).unwrap();
        assert_eq!(det.len(), 1);
        assert_eq!(det[0].kind, PathKind::Los);
        let fspl =
            geometry::free_space_path_loss_db(det[0].delay_s * SPEED_OF_LIGHT, 154.0e9).unwrap();
        assert!((det[0].gain_db + fspl).abs() < 1e-12);
    }

    #[test]
    fn amplitude_deviation_is_zero_mean() {
        let mut params = QdModelParams::preset_154ghz();
        params.force_wall_presence(true);
        let sigma = params.det_amp_sigma_db;
        let traced =
            geometry::trace(&scene(), &band(), &[PathKind::SbNw, PathKind::SbSw]).unwrap();
        let n = 10_000;
        let mut sum = 0.0;
        let mut count = 0usize;
        for seed in 0..n {
            let det = deterministic_component(&scene(), &band(), &params, seed).unwrap();
            for p in det.iter().filter(|p| p.kind != PathKind::Los) {
                let reference = traced.iter().find(|t| t.kind == p.kind).unwrap();
                sum += p.gain_db - reference.gain_db;
                count += 1;
            }
        }
        let mean = sum / count as f64;
        let bound = 3.0 * sigma / (count as f64).sqrt();
        assert!(mean.abs() < bound, "mean deviation {mean} exceeds {bound}");
    }

    #[test]
    fn gain_ramp_hits_the_intercept_at_zero_excess() {
        let params = QdModelParams::preset_154ghz();
        let g = random_path_gain_db(0.0, -100.0, &params);
        assert!((g - (-15.55 - 100.0)).abs() < 1e-12);
    }

    #[test]
    fn gain_ramp_slope_over_100ns_is_seven_db() {
        let params = QdModelParams::preset_154ghz();
        let d = random_path_gain_db(100.0, -100.0, &params) - random_path_gain_db(0.0, -100.0, &params);
        assert!((d - (-7.0)).abs() < 1e-12);
    }

    #[test]
    fn interarrival_sample_mean_matches_the_model() {
        let mut params = QdModelParams::preset_154ghz();
        params.shadow_sigma_db = 0.0;
        params.noise_floor_db = -1e6;
        let paths = random_components(10.0, &wide_span_band(), &params, 99).unwrap();
        assert!(paths.len() > 50_000, "only {} arrivals", paths.len());

        let tau_los = 10.0 / SPEED_OF_LIGHT;
        let mut previous = tau_los;
        let mut sum = 0.0;
        for p in &paths {
            sum += p.delay_s - previous;
            previous = p.delay_s;
        }
        let mean_ns = sum / paths.len() as f64 * 1e9;
        assert!(
            (mean_ns - 80.16).abs() < 0.01 * 80.16,
            "mean interarrival {mean_ns} ns"
        );
    }

    #[test]
    fn arrivals_start_after_the_line_of_sight() {
        let params = QdModelParams::preset_154ghz();
        let distance = 20.0;
        let tau_los = distance / SPEED_OF_LIGHT;
        for seed in 0..20 {
            let paths = random_components(distance, &band(), &params, seed).unwrap();
            for p in &paths {
                assert!(p.kind == PathKind::Random);
                assert!(p.delay_s > tau_los);
                assert!(p.delay_s <= band().delay_span_s);
            }
        }
    }

    #[test]
    fn generation_respects_the_stopping_ramp() {
        let mut params = QdModelParams::preset_154ghz();
        params.shadow_sigma_db = 0.0;
        let stop_ns = params.stop_excess_ns().unwrap();
        let distance = 10.0;
        let tau_los = distance / SPEED_OF_LIGHT;
        for seed in 0..50 {
            let paths = random_components(distance, &band(), &params, seed).unwrap();
            for p in &paths {
                assert!((p.delay_s - tau_los) * 1e9 <= stop_ns + 1e-9);
            }
        }
    }

    #[test]
    fn raised_floor_disables_stochastic_paths() {
        let mut params = QdModelParams::preset_154ghz();
        params.shadow_sigma_db = 0.0;
        params.noise_floor_db = 0.0;
        let paths = random_components(10.0, &band(), &params, 5).unwrap();
        assert!(paths.is_empty());
    }

    #[test]
    fn random_angles_respect_the_configured_span() {
        let mut params = QdModelParams::preset_154ghz();
        params.random_aod_range_deg = (30.0, 60.0);
        params.random_aoa_range_deg = (350.0, 370.0);
        for seed in 0..20 {
            let paths = random_components(10.0, &band(), &params, seed).unwrap();
            for p in &paths {
                assert!((30.0..60.0).contains(&p.aod_deg));
                assert!(p.aoa_deg >= 350.0 || p.aoa_deg < 10.0, "aoa {}", p.aoa_deg);
            }
        }
    }

    #[test]
    fn fully_frozen_synthesis_equals_the_traced_path_set() {
        let mut params = frozen_params();
        params.noise_floor_db = 0.0;
        params.shadow_sigma_db = 0.0;
        let real = synthesize(&scene(), &band(), &params, 4).unwrap();
        let traced = geometry::trace(
            &scene(),
            &band(),
            &[PathKind::Los, PathKind::SbNw, PathKind::SbSw],
        )
        .unwrap();
        assert_eq!(real.paths.len(), traced.len());
        for (p, t) in real.paths.iter().zip(&traced) {
            assert_eq!(p.kind, t.kind);
            assert_eq!(p.gain_db, t.gain_db);
        }
    }

    #[test]
    fn same_seed_gives_bit_identical_realizations() {
        let params = QdModelParams::preset_300ghz();
        let band = BandConfig::preset_300ghz();
        let a = synthesize(&scene(), &band, &params, 31).unwrap();
        let b = synthesize(&scene(), &band, &params, 31).unwrap();
        assert_eq!(a, b);
        let c = synthesize(&scene(), &band, &params, 32).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn los_gain_is_constant_across_seeds() {
        let mut scn = scene();
        scn.tx = Site::new(0.0, 10.0, 2.0);
        scn.rx = Site::new(15.0, 10.0, 2.0);
        let params = QdModelParams::preset_154ghz();
        let expected = -geometry::free_space_path_loss_db(15.0, 154.0e9).unwrap();
        for seed in 0..200 {
            let real = synthesize(&scn, &band(), &params, seed).unwrap();
            let los = real.los_path().expect("line of sight always present");
            assert!((los.gain_db - expected).abs() < 1e-12);
            assert!((real.distance_m - 15.0).abs() < 1e-9);
        }
    }

    #[test]
    fn random_power_fraction_is_positive_under_the_fitted_model() {
        let params = QdModelParams::preset_154ghz();
        let mut positive = 0usize;
        let mut fraction_sum = 0.0;
        let n = 200usize;
        for seed in 0..n as u64 {
            let real = synthesize(&scene(), &band(), &params, seed).unwrap();
            let f = real.random_power_fraction();
            assert!((0.0..=1.0).contains(&f));
            if f > 0.0 {
                positive += 1;
            }
            fraction_sum += f;
        }
        assert!(positive > n / 2, "random components mostly present");
        assert!(fraction_sum / n as f64 > 0.0);
    }

    #[test]
    fn trajectory_presence_follows_the_chain_statistics() {
        let params = QdModelParams::preset_154ghz();
        let reals = synthesize_many(&scene(), &band(), &params, 4000, 8).unwrap();
        assert_eq!(reals.len(), 4000);
        let pi = params.chain_nw().unwrap().stationary_present().unwrap();
        let nw_fraction = reals
            .iter()
            .filter(|r| r.paths.iter().any(|p| p.kind == PathKind::SbNw))
            .count() as f64
            / reals.len() as f64;
        assert!((nw_fraction - pi).abs() < 0.05, "fraction {nw_fraction} vs {pi}");
    }

    #[test]
    fn csv_export_lists_every_path() {
        let params = frozen_params();
        let reals = vec![synthesize(&scene(), &band(), &params, 1).unwrap()];
        let csv = crate::qd::realizations_to_csv("154ghz", &reals);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "band,seed,index,kind,delay_ns,aod_deg,aoa_deg,gain_db");
        assert_eq!(lines.len(), 1 + reals[0].paths.len());
        assert!(lines[1].starts_with("154ghz,1,0,los,"));
    }
}
