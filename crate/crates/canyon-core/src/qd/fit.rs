//! Censored maximum-likelihood refit of the stochastic gain ramp.
//!
//! Measured relative gains are floor-limited, so an ordinary least-squares
//! fit of gain over excess delay is biased toward shallow slopes. The fit
//! here treats floor hits as left-censored observations and maximizes the
//! Tobit likelihood via expectation-maximization: censored points are
//! replaced by their truncated-normal conditional moments, then the line and
//! spread are re-estimated until the parameters settle.

use libm::erfc;

use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 5000;
const PARAM_TOLERANCE: f64 = 1e-9;

/// Fitted line and spread of a floor-censored linear model.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CensoredFit {
    pub slope: f64,
    pub intercept: f64,
    pub sigma: f64,
    pub iterations: usize,
    pub n_observed: usize,
    pub n_censored: usize,
}

/// Fits `y = slope * x + intercept + N(0, sigma^2)` where `observed` holds
/// the uncensored samples and `censored_x` the abscissas whose ordinates
/// fell below `floor`.
pub fn fit_censored_line(
    observed: &[(f64, f64)],
    censored_x: &[f64],
    floor: f64,
) -> Result<CensoredFit> {
    if observed.len() < 2 {
        return Err(Error::Fit("need at least two uncensored samples".into()));
    }
    if !floor.is_finite() {
        return Err(Error::Fit("censoring floor must be finite".into()));
    }
    for &(x, y) in observed {
        if !(x.is_finite() && y.is_finite()) {
            return Err(Error::Fit("non-finite sample".into()));
        }
    }
    if censored_x.iter().any(|x| !x.is_finite()) {
        return Err(Error::Fit("non-finite censored abscissa".into()));
    }

    let (mut slope, mut intercept) = ols(observed.iter().copied())?;
    let mut sigma = {
        let ss: f64 = observed
            .iter()
            .map(|&(x, y)| (y - slope * x - intercept).powi(2))
            .sum();
        (ss / observed.len() as f64).sqrt().max(1e-9)
    };

    if censored_x.is_empty() {
        return Ok(CensoredFit {
            slope,
            intercept,
            sigma,
            iterations: 0,
            n_observed: observed.len(),
            n_censored: 0,
        });
    }

    let n_total = (observed.len() + censored_x.len()) as f64;
    let mut iterations = 0;
    for iter in 1..=MAX_ITERATIONS {
        iterations = iter;

        // E-step: conditional mean and variance of each censored ordinate.
        let imputed: Vec<(f64, f64, f64)> = censored_x
            .iter()
            .map(|&x| {
                let mu = slope * x + intercept;
                let alpha = (floor - mu) / sigma;
                let lambda = mills_ratio(alpha);
                let mean = mu - sigma * lambda;
                let variance = sigma * sigma * (1.0 - alpha * lambda - lambda * lambda).max(0.0);
                (x, mean, variance)
            })
            .collect();

        // M-step: least squares over observed plus imputed means.
        let combined = observed
            .iter()
            .copied()
            .chain(imputed.iter().map(|&(x, m, _)| (x, m)));
        let (new_slope, new_intercept) = ols(combined)?;

        let mut ss: f64 = observed
            .iter()
            .map(|&(x, y)| (y - new_slope * x - new_intercept).powi(2))
            .sum();
        for &(x, m, v) in &imputed {
            let mu = new_slope * x + new_intercept;
            ss += (m - mu).powi(2) + v;
        }
        let new_sigma = (ss / n_total).sqrt().max(1e-9);

        let delta = (new_slope - slope).abs()
            + (new_intercept - intercept).abs()
            + (new_sigma - sigma).abs();
        slope = new_slope;
        intercept = new_intercept;
        sigma = new_sigma;
        if delta < PARAM_TOLERANCE {
            break;
        }
    }

    Ok(CensoredFit {
        slope,
        intercept,
        sigma,
        iterations,
        n_observed: observed.len(),
        n_censored: censored_x.len(),
    })
}

fn ols(samples: impl Iterator<Item = (f64, f64)>) -> Result<(f64, f64)> {
    let mut n = 0.0;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for (x, y) in samples {
        n += 1.0;
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-12 * n.max(1.0) * sxx.max(1.0) {
        return Err(Error::Fit("abscissas are degenerate".into()));
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    Ok((slope, intercept))
}

/// Inverse Mills ratio `phi(a) / Phi(a)` of the standard normal.
fn mills_ratio(alpha: f64) -> f64 {
    let phi = (-0.5 * alpha * alpha).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let cdf = 0.5 * erfc(-alpha / std::f64::consts::SQRT_2);
    if cdf < 1e-300 {
        // Deep tail: Mills ratio approaches -alpha - 1/alpha.
        return -alpha - 1.0 / alpha;
    }
    phi / cdf
}
