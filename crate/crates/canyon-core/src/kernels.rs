//! Replica kernels shared by path extraction and PDP rendering.
//!
//! A point path measured with this sounder spreads across the processed grid
//! as a separable product: the delay autocorrelation of the tone comb times
//! the horn pattern response on each angle axis. Both factors are evaluated
//! here in the power domain.

/// Power response of the tone-comb autocorrelation at a delay offset of
/// `offset_bins` fine bins (the offset may be fractional). Periodic in
/// `n_fft`; unity at zero offset.
pub fn delay_kernel_power(offset_bins: f64, n_subcarriers: usize, n_fft: usize) -> f64 {
    let n_f = n_fft as f64;
    let n_sub = n_subcarriers as f64;
    // Wrap into (-n_fft/2, n_fft/2]; the inverse DFT is circular.
    let x = offset_bins - (offset_bins / n_f).round() * n_f;
    let denom = (std::f64::consts::PI * x / n_f).sin();
    if denom.abs() < 1e-12 {
        return 1.0;
    }
    let num = (std::f64::consts::PI * n_sub * x / n_f).sin();
    let amp = num / (n_sub * denom);
    amp * amp
}

/// Gaussian main-lobe power pattern of a horn at `offset_deg` from boresight.
/// Falls to one half at `hpbw_deg / 2`; the offset wraps on the circle.
pub fn pattern_power(offset_deg: f64, hpbw_deg: f64) -> f64 {
    let wrapped = wrap_angle_deg(offset_deg);
    let x = wrapped / hpbw_deg;
    (-4.0 * std::f64::consts::LN_2 * x * x).exp()
}

/// Maps an angle difference onto [-180, 180) degrees.
pub fn wrap_angle_deg(delta_deg: f64) -> f64 {
    let mut d = delta_deg % 360.0;
    if d < -180.0 {
        d += 360.0;
    } else if d >= 180.0 {
        d -= 360.0;
    }
    d
}
