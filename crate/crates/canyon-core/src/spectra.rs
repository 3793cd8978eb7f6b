//! Power spectra: the delay/angle power tensor and its marginals.
//!
//! The double-directional power spectrum averages `|h|^2` over CIR snapshots.
//! Summing out angle or delay axes yields the power delay profile (PDP), the
//! per-side angular-delay power spectra (ADPS) and the power-angle profiles
//! (PAP). All powers are linear; dB conversions happen at the I/O boundary.

use std::fmt::Write as _;

use ndarray::{Array1, Array2, Array3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{AngleGrid, BandConfig, CirGrid};

/// Which end of the link an angular quantity refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    /// Departure (transmitter) azimuth.
    Tx,
    /// Arrival (receiver) azimuth.
    Rx,
}

/// Delay/angle power tensor `power[delay][aod][aoa]`, linear scale.
#[derive(Debug, Clone)]
pub struct PowerGrid {
    pub band: BandConfig,
    pub angles: AngleGrid,
    pub rx_id: String,
    pub distance_m: f64,
    /// Delay of each bin [s].
    pub delay_axis_s: Vec<f64>,
    pub power: Array3<f64>,
    /// True once a noise threshold has zeroed the sub-threshold bins.
    pub filtered: bool,
}

/// Power delay profile, summed over both angle axes.
#[derive(Debug, Clone)]
pub struct Pdp {
    pub delay_axis_s: Vec<f64>,
    pub power: Vec<f64>,
}

/// Power-angle profile for one side, summed over delay and the other side.
#[derive(Debug, Clone)]
pub struct Pap {
    pub side: Side,
    pub angles_deg: Vec<f64>,
    pub power: Vec<f64>,
}

/// Angular-delay power spectrum for one side: `power[delay][angle]`.
#[derive(Debug, Clone)]
pub struct Adps {
    pub side: Side,
    pub delay_axis_s: Vec<f64>,
    pub angles_deg: Vec<f64>,
    pub power: Array2<f64>,
}

/// Averages `|h|^2` over one or more CIR snapshots of identical shape.
pub fn compute_ddadps(snapshots: &[CirGrid]) -> Result<PowerGrid> {
    let first = snapshots
        .first()
        .ok_or_else(|| Error::EmptyInput("at least one CIR snapshot is required".into()))?;
    let dim = first.cir.dim();
    for s in snapshots.iter().skip(1) {
        if s.cir.dim() != dim {
            return Err(Error::ShapeMismatch {
                expected: format!("{dim:?}"),
                actual: format!("{:?}", s.cir.dim()),
            });
        }
    }

    let mut power = Array3::<f64>::zeros(dim);
    for s in snapshots {
        ndarray::Zip::from(&mut power).and(&s.cir).for_each(|p, h| *p += h.norm_sqr());
    }
    power /= snapshots.len() as f64;

    Ok(PowerGrid {
        band: first.band.clone(),
        angles: first.angles.clone(),
        rx_id: first.rx_id.clone(),
        distance_m: first.distance_m,
        delay_axis_s: first.delay_axis_s.clone(),
        power,
        filtered: false,
    })
}

impl PowerGrid {
    /// Total power across all bins.
    pub fn total_power(&self) -> f64 {
        self.power.sum()
    }

    /// Largest bin power.
    pub fn peak_power(&self) -> f64 {
        self.power.iter().cloned().fold(0.0, f64::max)
    }

    /// Power delay profile: sum over both angle axes.
    pub fn pdp(&self) -> Pdp {
        let (n_delay, _, _) = self.power.dim();
        let mut out = vec![0.0; n_delay];
        for (k, slab) in self.power.outer_iter().enumerate() {
            out[k] = slab.sum();
        }
        Pdp { delay_axis_s: self.delay_axis_s.clone(), power: out }
    }

    /// Power-angle profile for one side: sum over delay and the other side.
    pub fn pap(&self, side: Side) -> Pap {
        let angles = match side {
            Side::Tx => self.angles.aod_deg.clone(),
            Side::Rx => self.angles.aoa_deg.clone(),
        };
        let mut out = vec![0.0; angles.len()];
        for ((_, a, d), &p) in self.power.indexed_iter() {
            let i = if side == Side::Tx { a } else { d };
            out[i] += p;
        }
        Pap { side, angles_deg: angles, power: out }
    }

    /// Angular-delay power spectrum for one side: sum over the other side only.
    pub fn adps(&self, side: Side) -> Adps {
        let (n_delay, n_aod, n_aoa) = self.power.dim();
        let (n_angle, angles) = match side {
            Side::Tx => (n_aod, self.angles.aod_deg.clone()),
            Side::Rx => (n_aoa, self.angles.aoa_deg.clone()),
        };
        let mut out = Array2::<f64>::zeros((n_delay, n_angle));
        for ((k, a, d), &p) in self.power.indexed_iter() {
            let i = if side == Side::Tx { a } else { d };
            out[[k, i]] += p;
        }
        Adps { side, delay_axis_s: self.delay_axis_s.clone(), angles_deg: angles, power: out }
    }
}

impl Adps {
    /// Collapses the delay axis, giving the same profile as [`PowerGrid::pap`].
    pub fn collapse_to_pap(&self) -> Pap {
        let summed: Array1<f64> = self.power.sum_axis(ndarray::Axis(0));
        Pap { side: self.side, angles_deg: self.angles_deg.clone(), power: summed.to_vec() }
    }
}

// ---------------------------------------------------------------------------
// CSV export (delay in ns, angles in deg, power in dB)
// ---------------------------------------------------------------------------

fn db(p: f64) -> f64 {
    10.0 * p.log10()
}

impl Pdp {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("delay_ns,power_db\n");
        for (tau, p) in self.delay_axis_s.iter().zip(&self.power) {
            let _ = writeln!(out, "{},{}", tau * 1e9, db(*p));
        }
        out
    }
}

impl Pap {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("angle_deg,power_db\n");
        for (a, p) in self.angles_deg.iter().zip(&self.power) {
            let _ = writeln!(out, "{a},{}", db(*p));
        }
        out
    }
}

impl Adps {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("delay_ns,angle_deg,power_db\n");
        for ((k, i), p) in self.power.indexed_iter() {
            let _ = writeln!(out, "{},{},{}", self.delay_axis_s[k] * 1e9, self.angles_deg[i], db(*p));
        }
        out
    }
}
