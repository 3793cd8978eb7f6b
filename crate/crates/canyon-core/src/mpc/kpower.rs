//! Power-weighted K-means over the multipath component distance.
//!
//! Components embed into five dimensions: half unit vectors of both azimuth
//! angles plus a scaled delay coordinate, so Euclidean distance there equals
//! the component distance (chordal angle terms and a delay term weighted by
//! `zeta * delay_std / delay_range^2`). Seeding is farthest-point from a
//! seeded random start, which keeps runs reproducible.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mpc::{BandTag, Mpc};

const MAX_ITERATIONS: usize = 200;

/// Component-distance weighting.
#[derive(Debug, Clone, Copy)]
pub struct McdConfig {
    /// Delay-term emphasis. Larger values make delay gaps dominate angles.
    pub zeta: f64,
}

impl Default for McdConfig {
    fn default() -> Self {
        McdConfig { zeta: 8.0 }
    }
}

/// A clustered component set. Labels are dense in `1..=k`; `common_flags[j]`
/// says whether cluster `j+1` holds components of both bands.
#[derive(Debug, Clone)]
pub struct ClusterSet {
    pub mpcs: Vec<Mpc>,
    pub k: usize,
    pub common_flags: Vec<bool>,
    /// Power-weighted sum of squared distances after each iteration.
    pub objective_trace: Vec<f64>,
}

/// Clusters the merged set into `k` groups, weighting every component by
/// its linear power. Output labels are renumbered by ascending cluster mean
/// delay, so label 1 is the earliest cluster.
pub fn cluster_kpm(merged: &[Mpc], k: usize, seed: u64, mcd: &McdConfig) -> Result<ClusterSet> {
    if k == 0 {
        return Err(Error::Clustering("cluster count must be at least 1".into()));
    }
    if merged.len() < k {
        return Err(Error::Clustering(format!(
            "cannot split {} components into {k} clusters",
            merged.len()
        )));
    }
    if !(mcd.zeta.is_finite() && mcd.zeta >= 0.0) {
        return Err(Error::Clustering("zeta must be non-negative".into()));
    }
    for m in merged {
        if !(m.power_db.is_finite() && m.delay_s.is_finite()) {
            return Err(Error::Clustering("non-finite component".into()));
        }
    }

    let points: Vec<[f64; 5]> = embed_all(merged, mcd);
    let weights: Vec<f64> = merged.iter().map(|m| 10f64.powf(m.power_db / 10.0)).collect();
    let n = points.len();

    // Farthest-point seeding from a seeded random start.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids: Vec<[f64; 5]> = Vec::with_capacity(k);
    centroids.push(points[rng.random_range(0..n)]);
    while centroids.len() < k {
        let far = (0..n)
            .max_by(|&a, &b| {
                let da = nearest_distance_sq(&points[a], &centroids);
                let db = nearest_distance_sq(&points[b], &centroids);
                da.partial_cmp(&db).unwrap()
            })
            .unwrap();
        centroids.push(points[far]);
    }

    let mut assignment = vec![0usize; n];
    let mut objective_trace = Vec::new();
    for _ in 0..MAX_ITERATIONS {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let best = (0..k)
                .min_by(|&a, &b| {
                    distance_sq(p, &centroids[a])
                        .partial_cmp(&distance_sq(p, &centroids[b]))
                        .unwrap()
                })
                .unwrap();
            if assignment[i] != best {
                assignment[i] = best;
                changed = true;
            }
        }

        // Hand each empty cluster the point contributing most to the
        // objective; its own cluster keeps the rest.
        loop {
            let mut counts = vec![0usize; k];
            for &a in &assignment {
                counts[a] += 1;
            }
            let Some(empty) = counts.iter().position(|&c| c == 0) else { break };
            let worst = (0..n)
                .filter(|&i| counts[assignment[i]] > 1)
                .max_by(|&a, &b| {
                    let da = weights[a] * distance_sq(&points[a], &centroids[assignment[a]]);
                    let db = weights[b] * distance_sq(&points[b], &centroids[assignment[b]]);
                    da.partial_cmp(&db).unwrap()
                })
                .expect("n >= k leaves a donatable point");
            assignment[worst] = empty;
            centroids[empty] = points[worst];
            changed = true;
        }

        for j in 0..k {
            let mut acc = [0.0f64; 5];
            let mut total = 0.0;
            for i in 0..n {
                if assignment[i] == j {
                    for (slot, v) in acc.iter_mut().zip(points[i]) {
                        *slot += weights[i] * v;
                    }
                    total += weights[i];
                }
            }
            for slot in acc.iter_mut() {
                *slot /= total;
            }
            centroids[j] = acc;
        }

        let objective: f64 = (0..n)
            .map(|i| weights[i] * distance_sq(&points[i], &centroids[assignment[i]]))
            .sum();
        objective_trace.push(objective);
        if !changed {
            break;
        }
    }

    // Renumber by ascending power-weighted mean delay.
    let mut delay_sum = vec![0.0f64; k];
    let mut weight_sum = vec![0.0f64; k];
    for (i, m) in merged.iter().enumerate() {
        delay_sum[assignment[i]] += weights[i] * m.delay_s;
        weight_sum[assignment[i]] += weights[i];
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        (delay_sum[a] / weight_sum[a]).partial_cmp(&(delay_sum[b] / weight_sum[b])).unwrap()
    });
    let mut label_of = vec![0usize; k];
    for (rank, &j) in order.iter().enumerate() {
        label_of[j] = rank + 1;
    }

    let mut mpcs = merged.to_vec();
    let mut f1_present = vec![false; k];
    let mut f2_present = vec![false; k];
    for (i, m) in mpcs.iter_mut().enumerate() {
        let label = label_of[assignment[i]];
        m.cluster_id = Some(label);
        match m.band {
            BandTag::F1 => f1_present[label - 1] = true,
            BandTag::F2 => f2_present[label - 1] = true,
        }
    }
    let common_flags = (0..k).map(|j| f1_present[j] && f2_present[j]).collect();

    Ok(ClusterSet { mpcs, k, common_flags, objective_trace })
}

/// Embedding used by the clusterer, exposed for centroid checks.
pub(crate) fn embed_all(mpcs: &[Mpc], mcd: &McdConfig) -> Vec<[f64; 5]> {
    let n = mpcs.len() as f64;
    let mean = mpcs.iter().map(|m| m.delay_s).sum::<f64>() / n;
    let var = mpcs.iter().map(|m| (m.delay_s - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    let min = mpcs.iter().map(|m| m.delay_s).fold(f64::INFINITY, f64::min);
    let max = mpcs.iter().map(|m| m.delay_s).fold(f64::NEG_INFINITY, f64::max);
    let range = max - min;
    let delay_scale = if range > 0.0 { mcd.zeta * std / (range * range) } else { 0.0 };
    mpcs.iter()
        .map(|m| {
            let tx = m.aod_deg.to_radians();
            let rx = m.aoa_deg.to_radians();
            [
                0.5 * tx.cos(),
                0.5 * tx.sin(),
                0.5 * rx.cos(),
                0.5 * rx.sin(),
                delay_scale * m.delay_s,
            ]
        })
        .collect()
}

fn distance_sq(a: &[f64; 5], b: &[f64; 5]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest_distance_sq(p: &[f64; 5], centroids: &[[f64; 5]]) -> f64 {
    centroids.iter().map(|c| distance_sq(p, c)).fold(f64::INFINITY, f64::min)
}
