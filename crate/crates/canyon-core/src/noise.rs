//! Noise floor estimation and dual-band threshold refinement.
//!
//! Bin powers of a noise-only region follow an exponential law, so the noise
//! floor is estimated from the smallest samples of the whole grid: for a
//! candidate count `n`, an exponential is fitted to the `n` smallest powers
//! and scored by its mean squared CDF distance to the empirical distribution;
//! the best-scoring count wins. The common threshold keeps the expected
//! false-alarm count at `1/nu` bins per grid.
//!
//! When both bands observed the same link, each band's threshold is refined
//! per delay bin: a path seen in exactly one band is either revived in the
//! other band (near-threshold power there) or discarded as a false detection
//! (no support there), by moving the respective threshold one margin step.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectra::PowerGrid;

/// Minimum sample count for a meaningful exponential fit.
const MIN_SAMPLES: usize = 100;
/// Candidate counts scanned between 10% and 100% of the sample set.
const LADDER_POINTS: usize = 50;
/// Cap on CDF points scored per candidate. Small prefixes are scored on
/// every sample; larger ones on an evenly strided quantile subset, keeping
/// the scan linear in the grid size instead of quadratic.
const MAX_SCORE_POINTS: usize = 4096;

/// Result of the exponential noise-floor fit on one power grid.
#[derive(Debug, Clone, Serialize)]
pub struct NoiseEstimate {
    /// Estimated noise power per bin, linear.
    pub sigma2: f64,
    /// Number of smallest samples the winning fit used.
    pub n_opt: usize,
    /// Number of samples in the grid.
    pub n_samples: usize,
    /// False-alarm control parameter: expected survivors are `1/nu` bins.
    pub nu: u32,
    /// CDF quantile the common threshold corresponds to.
    pub confidence: f64,
    /// Common threshold, linear: `sigma2 * ln(nu * n_samples)`.
    pub zeta_common: f64,
}

/// Per-delay-bin threshold, the common value everywhere except where the
/// dual-band refinement moved it one margin step up or down.
#[derive(Debug, Clone)]
pub struct ThresholdProfile {
    /// Linear threshold per delay bin.
    pub threshold: Vec<f64>,
    /// The unrefined common threshold, linear.
    pub zeta_common: f64,
    /// Refinement step [dB].
    pub margin_db: f64,
    /// Bins raised to `zeta_common + margin` (suspected false detections).
    pub raised_bins: Vec<usize>,
    /// Bins lowered to `zeta_common - margin` (revived paths).
    pub lowered_bins: Vec<usize>,
    /// Conflicting double-writes that were dropped (first writer wins).
    pub conflicts: u32,
}

impl ThresholdProfile {
    pub fn uniform(zeta_common: f64, n_bins: usize, margin_db: f64) -> Self {
        ThresholdProfile {
            threshold: vec![zeta_common; n_bins],
            zeta_common,
            margin_db,
            raised_bins: Vec::new(),
            lowered_bins: Vec::new(),
            conflicts: 0,
        }
    }
}

/// Fits the noise floor of a power grid. `nu` controls the false-alarm rate
/// of the derived common threshold.
pub fn estimate_noise(grid: &PowerGrid, nu: u32) -> Result<NoiseEstimate> {
    let samples: Vec<f64> = grid.power.iter().cloned().collect();
    estimate_noise_from_samples(&samples, nu)
}

/// Sample-level form of [`estimate_noise`], for grids already flattened or
/// for Monte Carlo work on raw draws.
pub fn estimate_noise_from_samples(samples: &[f64], nu: u32) -> Result<NoiseEstimate> {
    if nu == 0 {
        return Err(Error::NoiseEstimation("nu must be at least 1".into()));
    }
    let n = samples.len();
    if n < MIN_SAMPLES {
        return Err(Error::NoiseEstimation(format!(
            "needs at least {MIN_SAMPLES} samples, got {n}"
        )));
    }
    if samples.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::NoiseEstimation("powers must be finite and non-negative".into()));
    }

    let mut sorted = samples.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    if sorted[0] == sorted[n - 1] {
        return Err(Error::NoiseEstimation("all samples are equal; no spread to fit".into()));
    }

    // Prefix sums give the mean of the smallest n in O(1) per candidate.
    let mut prefix = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    prefix.push(0.0);
    for v in &sorted {
        acc += v;
        prefix.push(acc);
    }

    let mut best: Option<(f64, usize)> = None;
    for count in candidate_ladder(n) {
        let sigma = prefix[count] / count as f64;
        if sigma <= 0.0 {
            continue;
        }
        let stride = count.div_ceil(MAX_SCORE_POINTS);
        let inv_sigma = 1.0 / sigma;
        let mut dist = 0.0;
        let mut used = 0usize;
        let mut i = stride - 1;
        while i < count {
            let model = 1.0 - (-sorted[i] * inv_sigma).exp();
            let empirical = (i + 1) as f64 / n as f64;
            let d = model - empirical;
            dist += d * d;
            used += 1;
            i += stride;
        }
        dist /= used as f64;
        if best.map_or(true, |(b, _)| dist < b) {
            best = Some((dist, count));
        }
    }

    let (_, n_opt) = best.ok_or_else(|| {
        Error::NoiseEstimation("no candidate count produced a usable fit".into())
    })?;
    let sigma2 = prefix[n_opt] / n_opt as f64;
    let confidence = 1.0 - 1.0 / (nu as f64 * n as f64);
    let zeta_common = -sigma2 * (1.0 - confidence).ln();
    Ok(NoiseEstimate { sigma2, n_opt, n_samples: n, nu, confidence, zeta_common })
}

fn candidate_ladder(n: usize) -> Vec<usize> {
    let lo = ((0.1 * n as f64).ceil() as usize).max(2);
    let ratio = n as f64 / lo as f64;
    let mut out = Vec::with_capacity(LADDER_POINTS);
    for i in 0..LADDER_POINTS {
        let t = i as f64 / (LADDER_POINTS - 1) as f64;
        let c = ((lo as f64 * ratio.powf(t)).round() as usize).clamp(lo, n);
        if out.last() != Some(&c) {
            out.push(c);
        }
    }
    out
}

/// Zeros every bin strictly below its delay bin's threshold.
pub fn apply_threshold(grid: &PowerGrid, profile: &ThresholdProfile) -> Result<PowerGrid> {
    let (n_delay, _, _) = grid.power.dim();
    if profile.threshold.len() != n_delay {
        return Err(Error::ShapeMismatch {
            expected: format!("{n_delay} thresholds"),
            actual: format!("{}", profile.threshold.len()),
        });
    }
    let mut out = grid.clone();
    for ((k, _, _), p) in out.power.indexed_iter_mut() {
        if *p < profile.threshold[k] {
            *p = 0.0;
        }
    }
    out.filtered = true;
    Ok(out)
}

/// Refines the two common thresholds against each other.
///
/// Raw (unfiltered) grids go in together with their noise estimates. Local
/// PDP peaks surviving the common threshold in exactly one band drive the
/// refinement; `margin_db` is the step size for raising and lowering.
pub fn dual_band_thresholds(
    p1: &PowerGrid,
    p2: &PowerGrid,
    est1: &NoiseEstimate,
    est2: &NoiseEstimate,
    margin_db: f64,
) -> Result<(ThresholdProfile, ThresholdProfile)> {
    if p1.filtered || p2.filtered {
        return Err(Error::NoiseEstimation(
            "dual-band refinement expects unfiltered grids".into(),
        ));
    }
    let span1 = delay_span(p1)?;
    let span2 = delay_span(p2)?;
    if (span1 - span2).abs() > 1e-9 * span1.max(span2) {
        return Err(Error::ShapeMismatch {
            expected: format!("shared delay span {span1:.3e} s"),
            actual: format!("{span2:.3e} s"),
        });
    }

    let margin = 10f64.powf(margin_db / 10.0);
    let mut prof1 =
        ThresholdProfile::uniform(est1.zeta_common, p1.power.dim().0, margin_db);
    let mut prof2 =
        ThresholdProfile::uniform(est2.zeta_common, p2.power.dim().0, margin_db);

    let peaks1 = surviving_pdp_peaks(p1, est1.zeta_common);
    let peaks2 = surviving_pdp_peaks(p2, est2.zeta_common);
    let coarse = bin_width(p1).max(bin_width(p2));
    let match_tol = coarse * (1.0 + 1e-9);

    let uncommon1: Vec<(usize, f64)> = peaks1
        .iter()
        .filter(|(_, tau)| !peaks2.iter().any(|(_, other)| (tau - other).abs() <= match_tol))
        .cloned()
        .collect();
    let uncommon2: Vec<(usize, f64)> = peaks2
        .iter()
        .filter(|(_, tau)| !peaks1.iter().any(|(_, other)| (tau - other).abs() <= match_tol))
        .cloned()
        .collect();

    let mut writes1 = WriteLog::new(p1.power.dim().0);
    let mut writes2 = WriteLog::new(p2.power.dim().0);

    for pass in 0..2 {
        let (uncommon, own, other, own_est, other_est) = if pass == 0 {
            (&uncommon1, &mut writes1, &mut writes2, est1, est2)
        } else {
            (&uncommon2, &mut writes2, &mut writes1, est2, est1)
        };
        let other_grid = if pass == 0 { p2 } else { p1 };
        for &(bin, tau) in uncommon {
            let support = window_peak_power(other_grid, tau, coarse);
            if support < other_est.zeta_common / margin {
                // No cross-band support: treat the lone peak as a false
                // detection and raise its own threshold one step.
                own.write(bin, own_est.zeta_common * margin, Adjust::Raised);
            } else {
                // Near-threshold support in the other band: lower its
                // threshold over the matching window to revive the path.
                for m in window_bins(other_grid, tau, coarse) {
                    other.write(m, other_est.zeta_common / margin, Adjust::Lowered);
                }
            }
        }
    }

    writes1.apply(&mut prof1);
    writes2.apply(&mut prof2);
    Ok((prof1, prof2))
}

#[derive(Clone, Copy, PartialEq)]
enum Adjust {
    Raised,
    Lowered,
}

struct WriteLog {
    entries: Vec<Option<(f64, Adjust)>>,
    conflicts: u32,
}

impl WriteLog {
    fn new(n: usize) -> Self {
        WriteLog { entries: vec![None; n], conflicts: 0 }
    }

    fn write(&mut self, bin: usize, value: f64, kind: Adjust) {
        match self.entries[bin] {
            None => self.entries[bin] = Some((value, kind)),
            Some((_, existing)) if existing == kind => {}
            Some(_) => self.conflicts += 1,
        }
    }

    fn apply(self, profile: &mut ThresholdProfile) {
        for (bin, entry) in self.entries.into_iter().enumerate() {
            if let Some((value, kind)) = entry {
                profile.threshold[bin] = value;
                match kind {
                    Adjust::Raised => profile.raised_bins.push(bin),
                    Adjust::Lowered => profile.lowered_bins.push(bin),
                }
            }
        }
        profile.conflicts = self.conflicts;
    }
}

fn delay_span(grid: &PowerGrid) -> Result<f64> {
    if grid.delay_axis_s.len() < 2 {
        return Err(Error::ShapeMismatch {
            expected: "at least 2 delay bins".into(),
            actual: format!("{}", grid.delay_axis_s.len()),
        });
    }
    Ok(bin_width(grid) * grid.delay_axis_s.len() as f64)
}

fn bin_width(grid: &PowerGrid) -> f64 {
    grid.delay_axis_s[1] - grid.delay_axis_s[0]
}

/// Local maxima of the common-threshold-filtered PDP that sit above the
/// common threshold. Returns `(bin, delay)` pairs.
fn surviving_pdp_peaks(grid: &PowerGrid, zeta_common: f64) -> Vec<(usize, f64)> {
    let (n_delay, _, _) = grid.power.dim();
    let mut pdp = vec![0.0; n_delay];
    for ((k, _, _), &p) in grid.power.indexed_iter() {
        if p >= zeta_common {
            pdp[k] += p;
        }
    }
    let mut peaks = Vec::new();
    for k in 0..n_delay {
        if pdp[k] <= zeta_common {
            continue;
        }
        let left_ok = k == 0 || pdp[k] > pdp[k - 1];
        let right_ok = k == n_delay - 1 || pdp[k] > pdp[k + 1];
        if left_ok && right_ok {
            peaks.push((k, grid.delay_axis_s[k]));
        }
    }
    peaks
}

fn window_bins(grid: &PowerGrid, tau: f64, coarse: f64) -> Vec<usize> {
    let half = coarse / 2.0 * (1.0 + 1e-9);
    grid.delay_axis_s
        .iter()
        .enumerate()
        .filter(|(_, &t)| (t - tau).abs() <= half)
        .map(|(m, _)| m)
        .collect()
}

/// Largest raw bin power over all angles within half a coarse bin of `tau`.
fn window_peak_power(grid: &PowerGrid, tau: f64, coarse: f64) -> f64 {
    let mut peak = 0.0f64;
    for m in window_bins(grid, tau, coarse) {
        for &p in grid.power.index_axis(ndarray::Axis(0), m).iter() {
            peak = peak.max(p);
        }
    }
    peak
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

/// Noise summary for one grid, ready for JSON export.
#[derive(Debug, Clone, Serialize)]
pub struct NoiseReport {
    pub sigma2_db: f64,
    pub zeta_common_db: f64,
    pub n_opt: usize,
    /// Dynamic range: peak over noise floor [dB].
    pub dr_db: f64,
    /// Spurious-free dynamic range: peak over common threshold [dB].
    pub sfdr_db: f64,
    pub raised_bins: Vec<usize>,
    pub lowered_bins: Vec<usize>,
    pub conflicts: u32,
}

pub fn noise_report(
    grid: &PowerGrid,
    est: &NoiseEstimate,
    profile: Option<&ThresholdProfile>,
) -> NoiseReport {
    let peak_db = 10.0 * grid.peak_power().log10();
    let sigma2_db = 10.0 * est.sigma2.log10();
    let zeta_common_db = 10.0 * est.zeta_common.log10();
    NoiseReport {
        sigma2_db,
        zeta_common_db,
        n_opt: est.n_opt,
        dr_db: peak_db - sigma2_db,
        sfdr_db: peak_db - zeta_common_db,
        raised_bins: profile.map(|p| p.raised_bins.clone()).unwrap_or_default(),
        lowered_bins: profile.map(|p| p.lowered_bins.clone()).unwrap_or_default(),
        conflicts: profile.map(|p| p.conflicts).unwrap_or(0),
    }
}
