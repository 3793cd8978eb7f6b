//! Band-limited rendering of synthesized realizations.

use crate::grid::{AngleGrid, BandConfig};
use crate::kernels::{delay_kernel_power, pattern_power, wrap_angle_deg};
use crate::qd::CirRealization;
use crate::spectra::Pdp;

/// Renders a realization onto the band's delay grid the way a directional
/// scan would see it: each path lands at its fractional delay spread by the
/// sounding sequence's autocorrelation, attenuated by the antenna pattern of
/// the best-aligned scan beam on each side.
pub fn render_pdp(real: &CirRealization, band: &BandConfig, angles: &AngleGrid) -> Pdp {
    let n = band.n_fft;
    let bin = band.delay_bin_s();
    let mut power = vec![0.0f64; n];
    for path in &real.paths {
        let tx_offset = nearest_beam_offset(path.aod_deg, &angles.aod_deg);
        let rx_offset = nearest_beam_offset(path.aoa_deg, &angles.aoa_deg);
        let weight = 10f64.powf(path.gain_db / 10.0)
            * pattern_power(tx_offset, band.hpbw_az_deg)
            * pattern_power(rx_offset, band.hpbw_az_deg);
        if weight <= 0.0 {
            continue;
        }
        let position = path.delay_s / bin;
        for (m, slot) in power.iter_mut().enumerate() {
            *slot += weight * delay_kernel_power(m as f64 - position, band.n_subcarriers, n);
        }
    }
    Pdp {
        delay_axis_s: (0..n).map(|k| k as f64 * bin).collect(),
        power,
    }
}

fn nearest_beam_offset(angle_deg: f64, ring_deg: &[f64]) -> f64 {
    ring_deg
        .iter()
        .map(|&beam| wrap_angle_deg(angle_deg - beam))
        .min_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap())
        .unwrap_or(0.0)
}
