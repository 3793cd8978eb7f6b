//! Quasi-deterministic channel synthesis.
//!
//! A realization combines a deterministic part (line of sight plus wall
//! bounces whose presence follows a two-state Markov chain) with stochastic
//! extra paths arriving as a Poisson process whose gains ramp down linearly
//! in dB over excess delay.

mod fit;
mod render;
mod synth;

pub use fit::{fit_censored_line, CensoredFit};
pub use render::render_pdp;
pub use synth::{
    deterministic_component, random_components, random_path_gain_db, synthesize, synthesize_many,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PathKind;

// ---------------------------------------------------------------------------
// Presence chain
// ---------------------------------------------------------------------------

/// How the rows/columns of a serialized transition matrix are ordered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateOrder {
    /// Row 0 is the present state.
    #[default]
    PresentFirst,
    /// Row 0 is the absent state.
    AbsentFirst,
}

/// Two-state presence chain. Stored with the present state first regardless
/// of the order the matrix was supplied in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkovChain {
    matrix: [[f64; 2]; 2],
}

impl MarkovChain {
    pub fn new(matrix: [[f64; 2]; 2], order: StateOrder) -> Result<Self> {
        let matrix = canonical(matrix, order);
        for (i, row) in matrix.iter().enumerate() {
            for &p in row {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::InvalidParams(format!(
                        "transition probability out of range in row {i}: {p}"
                    )));
                }
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidParams(format!(
                    "transition matrix row {i} sums to {sum}, expected 1"
                )));
            }
        }
        Ok(MarkovChain { matrix })
    }

    /// Accepts rows that are off by rounding (published matrices sometimes
    /// sum to 0.999) and rescales each row to exactly one.
    pub fn from_unnormalized(matrix: [[f64; 2]; 2], order: StateOrder) -> Result<Self> {
        let mut matrix = canonical(matrix, order);
        for (i, row) in matrix.iter_mut().enumerate() {
            let sum: f64 = row.iter().sum();
            if !(sum > 0.0) || row.iter().any(|&p| p < 0.0) {
                return Err(Error::InvalidParams(format!(
                    "transition matrix row {i} is not normalizable"
                )));
            }
            row[0] /= sum;
            row[1] /= sum;
        }
        MarkovChain::new(matrix, StateOrder::PresentFirst)
    }

    /// Transition matrix with the present state first.
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        self.matrix
    }

    /// Long-run probability of the present state. Undefined for chains that
    /// never leave their starting state.
    pub fn stationary_present(&self) -> Result<f64> {
        let to_absent = self.matrix[0][1];
        let to_present = self.matrix[1][0];
        let denom = to_absent + to_present;
        if denom <= 0.0 {
            return Err(Error::InvalidParams(
                "chain has no unique stationary distribution".into(),
            ));
        }
        Ok(to_present / denom)
    }

    pub fn step<R: Rng + ?Sized>(&self, present: bool, rng: &mut R) -> bool {
        let row = if present { self.matrix[0] } else { self.matrix[1] };
        rng.random::<f64>() < row[0]
    }

    pub(crate) fn draw_stationary<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<bool> {
        let pi = self.stationary_present()?;
        Ok(rng.random::<f64>() < pi)
    }
}

fn canonical(matrix: [[f64; 2]; 2], order: StateOrder) -> [[f64; 2]; 2] {
    match order {
        StateOrder::PresentFirst => matrix,
        StateOrder::AbsentFirst => [
            [matrix[1][1], matrix[1][0]],
            [matrix[0][1], matrix[0][0]],
        ],
    }
}

/// Simulates `n` presence states. The walk starts from `initial` when given,
/// otherwise from a draw of the stationary distribution.
pub fn markov_presence_sequence(
    chain: &MarkovChain,
    n: usize,
    seed: u64,
    initial: Option<bool>,
) -> Result<Vec<bool>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = match initial {
        Some(s) => s,
        None => chain.draw_stationary(&mut rng)?,
    };
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(state);
        state = chain.step(state, &mut rng);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Model parameters
// ---------------------------------------------------------------------------

/// Fitted constants of the synthesis model for one band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QdModelParams {
    /// Interpretation of the two matrices below.
    #[serde(default)]
    pub state_order: StateOrder,
    /// Presence transitions of the north-wall bounce.
    pub markov_nw: [[f64; 2]; 2],
    /// Presence transitions of the south-wall bounce.
    pub markov_sw: [[f64; 2]; 2],
    /// Mean interarrival time of stochastic paths [ns].
    pub arrival_mean_ns: f64,
    /// Gain ramp slope over excess delay [dB/ns].
    pub slope_a_db_per_ns: f64,
    /// Gain ramp intercept at zero excess delay [dB].
    pub intercept_b_db: f64,
    /// Shadowing spread of stochastic path gains [dB].
    pub shadow_sigma_db: f64,
    /// Amplitude deviation of present wall bounces around the traced gain
    /// [dB]. Not a fitted value; tune to taste.
    pub det_amp_sigma_db: f64,
    /// Stochastic paths stop once the gain ramp falls this far below the
    /// line-of-sight gain [dB].
    pub noise_floor_db: f64,
    /// Azimuth range stochastic departure angles are drawn from [deg].
    pub random_aod_range_deg: (f64, f64),
    /// Azimuth range stochastic arrival angles are drawn from [deg].
    pub random_aoa_range_deg: (f64, f64),
}

impl QdModelParams {
    pub fn preset_154ghz() -> Self {
        QdModelParams {
            state_order: StateOrder::PresentFirst,
            markov_nw: [[0.696, 0.304], [0.500, 0.500]],
            markov_sw: [[0.467, 0.533], [0.291, 0.708]],
            arrival_mean_ns: 80.16,
            slope_a_db_per_ns: -0.07,
            intercept_b_db: -15.55,
            shadow_sigma_db: 7.64,
            det_amp_sigma_db: 4.0,
            noise_floor_db: -30.0,
            random_aod_range_deg: (0.0, 360.0),
            random_aoa_range_deg: (0.0, 360.0),
        }
    }

    pub fn preset_300ghz() -> Self {
        QdModelParams {
            state_order: StateOrder::PresentFirst,
            markov_nw: [[0.714, 0.286], [0.727, 0.273]],
            markov_sw: [[0.759, 0.241], [0.600, 0.400]],
            arrival_mean_ns: 64.82,
            slope_a_db_per_ns: -0.07,
            intercept_b_db: -16.67,
            shadow_sigma_db: 6.87,
            det_amp_sigma_db: 4.0,
            noise_floor_db: -30.0,
            random_aod_range_deg: (0.0, 360.0),
            random_aoa_range_deg: (0.0, 360.0),
        }
    }

    pub fn preset(label: &str) -> Result<Self> {
        match label {
            "154ghz" => Ok(Self::preset_154ghz()),
            "300ghz" => Ok(Self::preset_300ghz()),
            other => Err(Error::InvalidBand(other.into())),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.chain_nw()?;
        self.chain_sw()?;
        if !(self.arrival_mean_ns.is_finite() && self.arrival_mean_ns > 0.0) {
            return Err(Error::InvalidParams("arrival_mean_ns must be positive".into()));
        }
        if !(self.shadow_sigma_db.is_finite() && self.shadow_sigma_db >= 0.0) {
            return Err(Error::InvalidParams("shadow_sigma_db must be non-negative".into()));
        }
        if !(self.det_amp_sigma_db.is_finite() && self.det_amp_sigma_db >= 0.0) {
            return Err(Error::InvalidParams("det_amp_sigma_db must be non-negative".into()));
        }
        for (label, v) in [
            ("slope_a_db_per_ns", self.slope_a_db_per_ns),
            ("intercept_b_db", self.intercept_b_db),
            ("noise_floor_db", self.noise_floor_db),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!("{label} must be finite")));
            }
        }
        for (label, (lo, hi)) in [
            ("random_aod_range_deg", self.random_aod_range_deg),
            ("random_aoa_range_deg", self.random_aoa_range_deg),
        ] {
            if !(lo.is_finite() && hi.is_finite() && hi > lo && hi - lo <= 360.0) {
                return Err(Error::InvalidParams(format!(
                    "{label} must be an increasing span of at most 360 degrees"
                )));
            }
        }
        Ok(())
    }

    pub fn chain_nw(&self) -> Result<MarkovChain> {
        MarkovChain::from_unnormalized(self.markov_nw, self.state_order)
    }

    pub fn chain_sw(&self) -> Result<MarkovChain> {
        MarkovChain::from_unnormalized(self.markov_sw, self.state_order)
    }

    /// Pins both wall bounces to a fixed presence, for reproducible setups.
    pub fn force_wall_presence(&mut self, present: bool) {
        let t = if present { [[1.0, 0.0], [1.0, 0.0]] } else { [[0.0, 1.0], [0.0, 1.0]] };
        self.state_order = StateOrder::PresentFirst;
        self.markov_nw = t;
        self.markov_sw = t;
    }

    /// Largest excess delay the gain ramp can reach before generation stops,
    /// or `None` when stochastic paths are disabled outright [ns].
    pub(crate) fn stop_excess_ns(&self) -> Option<f64> {
        let margin = self.noise_floor_db - 3.0 * self.shadow_sigma_db - self.intercept_b_db;
        if margin >= 0.0 {
            // Ramp starts at or below the stopping level.
            return None;
        }
        if self.slope_a_db_per_ns >= 0.0 {
            // Ramp never decays; only the delay span limits generation.
            return Some(f64::INFINITY);
        }
        Some(margin / self.slope_a_db_per_ns)
    }
}

// ---------------------------------------------------------------------------
// Realizations
// ---------------------------------------------------------------------------

/// One synthesized propagation path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QdPath {
    pub kind: PathKind,
    pub delay_s: f64,
    pub aod_deg: f64,
    pub aoa_deg: f64,
    pub gain_db: f64,
}

/// A full channel realization for one link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CirRealization {
    pub seed: u64,
    /// Line-of-sight distance the realization was generated for [m].
    pub distance_m: f64,
    pub paths: Vec<QdPath>,
}

impl CirRealization {
    pub fn los_path(&self) -> Option<&QdPath> {
        self.paths.iter().find(|p| p.kind == PathKind::Los)
    }

    /// Linear power sum over all paths.
    pub fn total_power(&self) -> f64 {
        self.paths.iter().map(|p| 10f64.powf(p.gain_db / 10.0)).sum()
    }

    /// Fraction of total power carried by stochastic paths.
    pub fn random_power_fraction(&self) -> f64 {
        let total = self.total_power();
        if total <= 0.0 {
            return 0.0;
        }
        let random: f64 = self
            .paths
            .iter()
            .filter(|p| p.kind == PathKind::Random)
            .map(|p| 10f64.powf(p.gain_db / 10.0))
            .sum();
        random / total
    }
}

/// CSV export of synthesized paths, one row per path.
pub fn realizations_to_csv(band_label: &str, realizations: &[CirRealization]) -> String {
    let mut out = String::from("band,seed,index,kind,delay_ns,aod_deg,aoa_deg,gain_db\n");
    for (index, real) in realizations.iter().enumerate() {
        for path in &real.paths {
            let kind = match path.kind {
                PathKind::Los => "los",
                PathKind::SbNw => "sb_nw",
                PathKind::SbSw => "sb_sw",
                PathKind::DbSwNw => "db_sw_nw",
                PathKind::Random => "random",
            };
            out.push_str(&format!(
                "{band_label},{},{index},{kind},{},{},{},{}\n",
                real.seed,
                path.delay_s * 1e9,
                path.aod_deg,
                path.aoa_deg,
                path.gain_db,
            ));
        }
    }
    out
}
