//! Frequency-domain measurement grids and their delay-domain transform.
//!
//! A campaign stores, per receiver position and band, the complex channel
//! transfer function (CTF) sampled on a tone grid for every pair of scanned
//! departure/arrival azimuths. Grids live on disk as a directory container
//! (`meta.json` + `ctf.bin`) and move to delay domain through a unitary
//! inverse DFT with symmetric band-edge zero-padding.

use std::fs;
use std::path::Path;

use ndarray::Array3;
use num_complex::{Complex32, Complex64};
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in vacuum [m/s].
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

const LAYOUT: &str = "row-major:freq,aod,aoa";
const SAMPLE_FORMAT: &str = "complex-f32-interleaved";
const ENDIANNESS: &str = "little";

/// Relative tolerance for the bandwidth/delay bookkeeping checks.
const CONSISTENCY_PPM: f64 = 1e-6;

// ---------------------------------------------------------------------------
// Band configuration
// ---------------------------------------------------------------------------

/// Sounder configuration for one RF band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandConfig {
    /// Carrier center frequency [Hz].
    pub center_frequency_hz: f64,
    /// Swept bandwidth [Hz].
    pub bandwidth_hz: f64,
    /// Number of measured tones across the bandwidth.
    pub n_subcarriers: usize,
    /// Inverse-DFT length after zero-padding (delay bins per CIR).
    pub n_fft: usize,
    /// Delay resolution, reciprocal bandwidth [s].
    pub delay_resolution_s: f64,
    /// Unambiguous delay span, reciprocal tone spacing [s].
    pub delay_span_s: f64,
    /// Transmit horn gain [dBi].
    pub antenna_gain_tx_dbi: f64,
    /// Receive horn gain [dBi].
    pub antenna_gain_rx_dbi: f64,
    /// Azimuth half-power beamwidth of the horns [deg].
    pub hpbw_az_deg: f64,
    /// Elevation half-power beamwidth of the horns [deg].
    pub hpbw_el_deg: f64,
}

impl BandConfig {
    /// 154 GHz band: 4 GHz bandwidth, 2560 tones, 26.4 dBi horns.
    pub fn preset_154ghz() -> Self {
        BandConfig {
            center_frequency_hz: 154.0e9,
            bandwidth_hz: 4.0e9,
            n_subcarriers: 2560,
            n_fft: 10_240,
            delay_resolution_s: 250.0e-12,
            delay_span_s: 640.0e-9,
            antenna_gain_tx_dbi: 26.4,
            antenna_gain_rx_dbi: 26.4,
            hpbw_az_deg: 9.0,
            hpbw_el_deg: 8.0,
        }
    }

    /// 300 GHz band: 8 GHz bandwidth, 5120 tones, 25.8 dBi horns.
    pub fn preset_300ghz() -> Self {
        BandConfig {
            center_frequency_hz: 300.0e9,
            bandwidth_hz: 8.0e9,
            n_subcarriers: 5120,
            n_fft: 10_240,
            delay_resolution_s: 125.0e-12,
            delay_span_s: 640.0e-9,
            antenna_gain_tx_dbi: 25.8,
            antenna_gain_rx_dbi: 25.8,
            hpbw_az_deg: 9.0,
            hpbw_el_deg: 8.0,
        }
    }

    /// Looks up a preset by label ("154ghz" or "300ghz").
    pub fn preset(label: &str) -> Result<Self> {
        match label.to_ascii_lowercase().as_str() {
            "154ghz" => Ok(Self::preset_154ghz()),
            "300ghz" => Ok(Self::preset_300ghz()),
            other => Err(Error::InvalidBand(format!("unknown preset `{other}`"))),
        }
    }

    /// Tone spacing of the sweep [Hz].
    pub fn tone_spacing_hz(&self) -> f64 {
        self.bandwidth_hz / self.n_subcarriers as f64
    }

    /// Spacing of the delay axis after zero-padded inversion [s].
    pub fn delay_bin_s(&self) -> f64 {
        self.delay_span_s / self.n_fft as f64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.center_frequency_hz.is_finite() && self.center_frequency_hz > 0.0) {
            return Err(Error::InvalidBand("center frequency must be positive".into()));
        }
        if !(self.bandwidth_hz.is_finite() && self.bandwidth_hz > 0.0) {
            return Err(Error::InvalidBand("bandwidth must be positive".into()));
        }
        if self.n_subcarriers == 0 {
            return Err(Error::InvalidBand("n_subcarriers must be nonzero".into()));
        }
        if self.n_fft < self.n_subcarriers {
            return Err(Error::InvalidBand(format!(
                "n_fft ({}) must be at least n_subcarriers ({})",
                self.n_fft, self.n_subcarriers
            )));
        }
        let res_err = (self.delay_resolution_s * self.bandwidth_hz - 1.0).abs();
        if res_err > CONSISTENCY_PPM {
            return Err(Error::InvalidBand(format!(
                "delay resolution is not reciprocal bandwidth (relative error {res_err:.3e})"
            )));
        }
        let span_err =
            (self.delay_span_s * self.bandwidth_hz / self.n_subcarriers as f64 - 1.0).abs();
        if span_err > CONSISTENCY_PPM {
            return Err(Error::InvalidBand(format!(
                "delay span is not reciprocal tone spacing (relative error {span_err:.3e})"
            )));
        }
        if !(self.hpbw_az_deg > 0.0 && self.hpbw_el_deg > 0.0) {
            return Err(Error::InvalidBand("beamwidths must be positive".into()));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Angle grid
// ---------------------------------------------------------------------------

/// Scanned azimuth grids and the fixed elevation pointing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleGrid {
    /// Departure azimuths scanned at the transmitter [deg].
    pub aod_deg: Vec<f64>,
    /// Arrival azimuths scanned at the receiver [deg].
    pub aoa_deg: Vec<f64>,
    /// Fixed transmit elevation pointing [deg].
    pub el_tx_deg: f64,
    /// Fixed receive elevation pointing [deg].
    pub el_rx_deg: f64,
}

impl AngleGrid {
    /// Full-circle scan: 40 azimuth samples at 9 degree steps on both ends,
    /// 95/85 degree elevation pointing.
    pub fn preset_scan() -> Self {
        let ring: Vec<f64> = (0..40).map(|k| 9.0 * k as f64).collect();
        AngleGrid { aod_deg: ring.clone(), aoa_deg: ring, el_tx_deg: 95.0, el_rx_deg: 85.0 }
    }

    /// Azimuth step of the departure scan [deg]. Zero for a single angle.
    pub fn aod_step_deg(&self) -> f64 {
        step_of(&self.aod_deg)
    }

    /// Azimuth step of the arrival scan [deg]. Zero for a single angle.
    pub fn aoa_step_deg(&self) -> f64 {
        step_of(&self.aoa_deg)
    }

    pub fn validate(&self) -> Result<()> {
        validate_ring(&self.aod_deg, "aod")?;
        validate_ring(&self.aoa_deg, "aoa")?;
        for (label, el) in [("el_tx", self.el_tx_deg), ("el_rx", self.el_rx_deg)] {
            if !el.is_finite() {
                return Err(Error::InvalidAngles(format!("{label} must be finite")));
            }
        }
        Ok(())
    }
}

fn step_of(angles: &[f64]) -> f64 {
    if angles.len() < 2 { 0.0 } else { angles[1] - angles[0] }
}

fn validate_ring(angles: &[f64], label: &str) -> Result<()> {
    if angles.is_empty() {
        return Err(Error::InvalidAngles(format!("{label} list is empty")));
    }
    if angles.iter().any(|a| !a.is_finite()) {
        return Err(Error::InvalidAngles(format!("{label} contains non-finite angles")));
    }
    if angles.len() >= 2 {
        let step = angles[1] - angles[0];
        if step <= 0.0 {
            return Err(Error::InvalidAngles(format!("{label} must be strictly increasing")));
        }
        for w in angles.windows(2) {
            let d = w[1] - w[0];
            if (d - step).abs() > 1e-9 {
                return Err(Error::InvalidAngles(format!(
                    "{label} step is not uniform ({d} vs {step})"
                )));
            }
        }
        let span = angles[angles.len() - 1] - angles[0];
        if span >= 360.0 {
            return Err(Error::InvalidAngles(format!("{label} span must stay below 360 degrees")));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Measurement grid and container I/O
// ---------------------------------------------------------------------------

/// One double-directional CTF measurement: `ctf[freq][aod][aoa]`.
#[derive(Debug, Clone)]
pub struct MeasurementGrid {
    pub band: BandConfig,
    pub angles: AngleGrid,
    /// Receiver position label, unique within a campaign.
    pub rx_id: String,
    /// Ground-truth transmitter/receiver separation [m].
    pub distance_m: f64,
    /// Azimuth reference convention, e.g. `east-ccw`.
    pub reference_frame: String,
    pub ctf: Array3<Complex32>,
}

#[derive(Serialize, Deserialize)]
struct ContainerMeta {
    band: BandConfig,
    angles: AngleGrid,
    rx_id: String,
    distance_m: f64,
    reference_frame: String,
    layout: String,
    sample_format: String,
    endianness: String,
}

impl MeasurementGrid {
    pub fn new(
        band: BandConfig,
        angles: AngleGrid,
        rx_id: impl Into<String>,
        distance_m: f64,
        ctf: Array3<Complex32>,
    ) -> Result<Self> {
        let grid = MeasurementGrid {
            band,
            angles,
            rx_id: rx_id.into(),
            distance_m,
            reference_frame: "east-ccw".into(),
            ctf,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        self.band.validate()?;
        self.angles.validate()?;
        let expected =
            (self.band.n_subcarriers, self.angles.aod_deg.len(), self.angles.aoa_deg.len());
        let actual = self.ctf.dim();
        if expected != actual {
            return Err(Error::ShapeMismatch {
                expected: format!("{expected:?}"),
                actual: format!("{actual:?}"),
            });
        }
        if !self.distance_m.is_finite() || self.distance_m < 0.0 {
            return Err(Error::InvalidBand("distance must be finite and non-negative".into()));
        }
        for (index, v) in self.ctf.iter().enumerate() {
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::NonFinite { field: "ctf", index });
            }
        }
        Ok(())
    }

    /// Writes the grid as a directory container holding `meta.json` and
    /// `ctf.bin` (little-endian interleaved f32 pairs, row-major
    /// `[freq][aod][aoa]`). Validation runs before anything is written.
    pub fn save(&self, dir: &Path) -> Result<()> {
        self.validate()?;
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

        let meta = ContainerMeta {
            band: self.band.clone(),
            angles: self.angles.clone(),
            rx_id: self.rx_id.clone(),
            distance_m: self.distance_m,
            reference_frame: self.reference_frame.clone(),
            layout: LAYOUT.into(),
            sample_format: SAMPLE_FORMAT.into(),
            endianness: ENDIANNESS.into(),
        };
        let meta_path = dir.join("meta.json");
        let text = serde_json::to_string_pretty(&meta)
            .map_err(|e| Error::container(&meta_path, e.to_string()))?;
        fs::write(&meta_path, text).map_err(|e| Error::io(&meta_path, e))?;

        let mut payload = Vec::with_capacity(self.ctf.len() * 8);
        for v in self.ctf.iter() {
            payload.extend_from_slice(&v.re.to_le_bytes());
            payload.extend_from_slice(&v.im.to_le_bytes());
        }
        let bin_path = dir.join("ctf.bin");
        fs::write(&bin_path, payload).map_err(|e| Error::io(&bin_path, e))?;
        Ok(())
    }

    /// Loads a grid from a directory container written by [`save`](Self::save).
    pub fn load(dir: &Path) -> Result<Self> {
        let meta_path = dir.join("meta.json");
        let text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        let meta: ContainerMeta = serde_json::from_str(&text)
            .map_err(|e| Error::container(&meta_path, format!("metadata parse failed: {e}")))?;
        if meta.layout != LAYOUT {
            return Err(Error::container(dir, format!("unsupported layout `{}`", meta.layout)));
        }
        if meta.sample_format != SAMPLE_FORMAT {
            return Err(Error::container(
                dir,
                format!("unsupported sample format `{}`", meta.sample_format),
            ));
        }
        if meta.endianness != ENDIANNESS {
            return Err(Error::container(
                dir,
                format!("unsupported endianness `{}`", meta.endianness),
            ));
        }

        let bin_path = dir.join("ctf.bin");
        let bytes = fs::read(&bin_path).map_err(|e| Error::io(&bin_path, e))?;
        let dims =
            (meta.band.n_subcarriers, meta.angles.aod_deg.len(), meta.angles.aoa_deg.len());
        let expected = dims.0 * dims.1 * dims.2 * 8;
        if bytes.len() != expected {
            return Err(Error::PayloadLength { expected, actual: bytes.len() });
        }

        let mut values = Vec::with_capacity(bytes.len() / 8);
        for (index, pair) in bytes.chunks_exact(8).enumerate() {
            let re = f32::from_le_bytes(pair[0..4].try_into().unwrap());
            let im = f32::from_le_bytes(pair[4..8].try_into().unwrap());
            if !(re.is_finite() && im.is_finite()) {
                return Err(Error::NonFinite { field: "ctf", index });
            }
            values.push(Complex32::new(re, im));
        }
        let ctf = Array3::from_shape_vec(dims, values)
            .map_err(|e| Error::container(dir, e.to_string()))?;

        let grid = MeasurementGrid {
            band: meta.band,
            angles: meta.angles,
            rx_id: meta.rx_id,
            distance_m: meta.distance_m,
            reference_frame: meta.reference_frame,
            ctf,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// Transforms the tone-domain grid to delay domain.
    ///
    /// The measured tones sit baseband-centered; zero-padding to `n_fft`
    /// therefore lands symmetrically at the band edges. The inverse DFT is
    /// unitary (`1/sqrt(n_fft)`), so total energy is preserved and an all-ones
    /// spectrum with no padding maps to a single impulse at delay zero.
    pub fn ctf_to_cir(&self) -> Result<CirGrid> {
        self.validate()?;
        let n_sub = self.band.n_subcarriers;
        let n_fft = self.band.n_fft;
        let (_, n_aod, n_aoa) = self.ctf.dim();

        let mut planner = FftPlanner::<f64>::new();
        let ifft = planner.plan_fft_inverse(n_fft);
        let norm = 1.0 / (n_fft as f64).sqrt();
        let half = (n_sub / 2) as isize;

        let mut cir = Array3::<Complex64>::zeros((n_fft, n_aod, n_aoa));
        let mut buf = vec![Complex64::new(0.0, 0.0); n_fft];
        for a in 0..n_aod {
            for d in 0..n_aoa {
                buf.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
                for k in 0..n_sub {
                    let q = k as isize - half;
                    let idx = q.rem_euclid(n_fft as isize) as usize;
                    let v = self.ctf[[k, a, d]];
                    buf[idx] = Complex64::new(v.re as f64, v.im as f64);
                }
                ifft.process(&mut buf);
                for n in 0..n_fft {
                    cir[[n, a, d]] = buf[n] * norm;
                }
            }
        }

        let bin = self.band.delay_bin_s();
        let delay_axis_s = (0..n_fft).map(|k| k as f64 * bin).collect();
        Ok(CirGrid {
            band: self.band.clone(),
            angles: self.angles.clone(),
            rx_id: self.rx_id.clone(),
            distance_m: self.distance_m,
            delay_axis_s,
            cir,
        })
    }
}

// ---------------------------------------------------------------------------
// CIR grid
// ---------------------------------------------------------------------------

/// Delay-domain impulse responses: `cir[delay][aod][aoa]`.
#[derive(Debug, Clone)]
pub struct CirGrid {
    pub band: BandConfig,
    pub angles: AngleGrid,
    pub rx_id: String,
    pub distance_m: f64,
    /// Delay of each bin [s], uniformly spaced from zero.
    pub delay_axis_s: Vec<f64>,
    pub cir: Array3<Complex64>,
}

impl CirGrid {
    /// Total delay-domain energy, for energy-conservation checks.
    pub fn total_energy(&self) -> f64 {
        self.cir.iter().map(|v| v.norm_sqr()).sum()
    }
}
