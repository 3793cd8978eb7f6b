//! Multipath components: extraction from power grids, dual-band merging,
//! and power-weighted clustering with shared cluster labels.

mod extract;
mod kpower;

pub use extract::{extract_mpcs, extract_mpcs_detailed, ExtractConfig};
pub use kpower::{cluster_kpm, ClusterSet, McdConfig};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which measurement band an MPC came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandTag {
    F1,
    F2,
}

/// One discrete multipath component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mpc {
    pub band: BandTag,
    pub delay_s: f64,
    pub aod_deg: f64,
    pub aoa_deg: f64,
    pub power_db: f64,
    pub cluster_id: Option<usize>,
}

/// Power offset that aligns the upper band with the lower one before joint
/// clustering: `20 log10(f2 / f1)`.
pub fn band_power_shift_db(f1_hz: f64, f2_hz: f64) -> Result<f64> {
    if !(f1_hz.is_finite() && f1_hz > 0.0 && f2_hz.is_finite() && f2_hz > 0.0) {
        return Err(Error::InvalidBand("band frequencies must be positive".into()));
    }
    Ok(20.0 * (f2_hz / f1_hz).log10())
}

/// Joins both band lists for clustering, lifting every upper-band power by
/// `shift_db` to cancel the frequency-dependent free-space offset.
pub fn merge_bands(f1: &[Mpc], f2: &[Mpc], shift_db: f64) -> Result<Vec<Mpc>> {
    if let Some(stray) = f1.iter().find(|m| m.band != BandTag::F1) {
        return Err(Error::InvalidBand(format!(
            "lower-band list contains {:?} component",
            stray.band
        )));
    }
    if let Some(stray) = f2.iter().find(|m| m.band != BandTag::F2) {
        return Err(Error::InvalidBand(format!(
            "upper-band list contains {:?} component",
            stray.band
        )));
    }
    let mut merged = f1.to_vec();
    merged.extend(f2.iter().map(|m| {
        let mut m = m.clone();
        m.power_db += shift_db;
        m
    }));
    Ok(merged)
}

/// Undoes `merge_bands` on a clustered set: components return to their own
/// band lists with upper-band powers restored and labels kept.
pub fn split_bands(cs: &ClusterSet, shift_db: f64) -> (ClusterSet, ClusterSet) {
    let mut f1 = Vec::new();
    let mut f2 = Vec::new();
    for m in &cs.mpcs {
        match m.band {
            BandTag::F1 => f1.push(m.clone()),
            BandTag::F2 => {
                let mut m = m.clone();
                m.power_db -= shift_db;
                f2.push(m);
            }
        }
    }
    let make = |mpcs: Vec<Mpc>| ClusterSet {
        mpcs,
        k: cs.k,
        common_flags: cs.common_flags.clone(),
        objective_trace: cs.objective_trace.clone(),
    };
    (make(f1), make(f2))
}

/// Summary of a clustered set. dB sums over empty sets come out as negative
/// infinity, which serializes to JSON null.
#[derive(Debug, Clone, Serialize)]
pub struct ClusterReport {
    pub k: usize,
    pub f1_count: usize,
    pub f2_count: usize,
    /// Total power of the minimum-delay cluster [dB].
    pub los_pg_db: f64,
    /// Total power of every other cluster [dB].
    pub nlos_sum_pg_db: f64,
    pub common_cluster_ids: Vec<usize>,
    /// Per common cluster: lower-band power minus restored upper-band power
    /// [dB], keyed by cluster id.
    pub common_power_diff_db: Vec<(usize, f64)>,
    /// Power-weighted mean delay of the minimum-delay cluster minus the
    /// reference line-of-sight delay, when a reference was given [s].
    pub los_delay_offset_s: Option<f64>,
}

/// Summarizes a merged, clustered set. `f2_shift_db` is subtracted from
/// upper-band powers so band comparisons read in native units; pass the
/// merge shift, or zero when the set was never shifted.
pub fn cluster_stats(
    cs: &ClusterSet,
    f2_shift_db: f64,
    reference_los_delay_s: Option<f64>,
) -> Result<ClusterReport> {
    if cs.k == 0 || cs.mpcs.is_empty() {
        return Err(Error::EmptyInput("cluster set has no components".into()));
    }
    let native_power = |m: &Mpc| {
        let db = match m.band {
            BandTag::F1 => m.power_db,
            BandTag::F2 => m.power_db - f2_shift_db,
        };
        10f64.powf(db / 10.0)
    };

    let mut cluster_delay_min = vec![f64::INFINITY; cs.k];
    let mut f1_present = vec![false; cs.k];
    let mut f2_present = vec![false; cs.k];
    let mut f1_power = vec![0.0f64; cs.k];
    let mut f2_power = vec![0.0f64; cs.k];
    for m in &cs.mpcs {
        let id = m
            .cluster_id
            .ok_or_else(|| Error::Clustering("unlabeled component".into()))?;
        if id == 0 || id > cs.k {
            return Err(Error::Clustering(format!("cluster id {id} out of 1..{}", cs.k)));
        }
        let j = id - 1;
        cluster_delay_min[j] = cluster_delay_min[j].min(m.delay_s);
        match m.band {
            BandTag::F1 => {
                f1_present[j] = true;
                f1_power[j] += native_power(m);
            }
            BandTag::F2 => {
                f2_present[j] = true;
                f2_power[j] += native_power(m);
            }
        }
    }

    let los_cluster = cluster_delay_min
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(j, _)| j)
        .unwrap();

    let mut los_power = 0.0;
    let mut nlos_power = 0.0;
    for j in 0..cs.k {
        let total = f1_power[j] + f2_power[j];
        if j == los_cluster {
            los_power = total;
        } else {
            nlos_power += total;
        }
    }

    let mut common_cluster_ids = Vec::new();
    let mut common_power_diff_db = Vec::new();
    for j in 0..cs.k {
        if f1_present[j] && f2_present[j] {
            common_cluster_ids.push(j + 1);
            common_power_diff_db
                .push((j + 1, 10.0 * f1_power[j].log10() - 10.0 * f2_power[j].log10()));
        }
    }

    let los_delay_offset_s = reference_los_delay_s.map(|reference| {
        let mut weighted = 0.0;
        let mut weight = 0.0;
        for m in &cs.mpcs {
            if m.cluster_id == Some(los_cluster + 1) {
                let w = native_power(m);
                weighted += w * m.delay_s;
                weight += w;
            }
        }
        weighted / weight - reference
    });

    Ok(ClusterReport {
        k: cs.k,
        f1_count: cs.mpcs.iter().filter(|m| m.band == BandTag::F1).count(),
        f2_count: cs.mpcs.iter().filter(|m| m.band == BandTag::F2).count(),
        los_pg_db: 10.0 * los_power.log10(),
        nlos_sum_pg_db: 10.0 * nlos_power.log10(),
        common_cluster_ids,
        common_power_diff_db,
        los_delay_offset_s,
    })
}

/// CSV export, one row per component.
pub fn mpcs_to_csv(band_labels: (&str, &str), mpcs: &[Mpc]) -> String {
    let mut out = String::from("band,tau_s,aod_deg,aoa_deg,power_db,cluster_id\n");
    for m in mpcs {
        let band = match m.band {
            BandTag::F1 => band_labels.0,
            BandTag::F2 => band_labels.1,
        };
        let cluster = m.cluster_id.map(|c| c.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{band},{},{},{},{},{cluster}\n",
            m.delay_s, m.aod_deg, m.aoa_deg, m.power_db
        ));
    }
    out
}
