//! Bottom-up agglomerative clustering over d-vectors.
//!
//! Starts from singletons and repeatedly merges the closest pair of
//! clusters under the chosen linkage until k clusters remain. Cluster
//! distances are maintained with the Lance-Williams update, so the whole
//! run is O(n^2) space and O(n^3) time, plenty for the cohort sizes here.

use super::Partition;
use crate::error::{Error, Result};
use crate::math::euclidean;

/// How the distance between two clusters is derived from point distances.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Linkage {
    /// Minimum pairwise distance.
    Single,
    /// Maximum pairwise distance.
    Complete,
    /// Unweighted average of all pairwise distances.
    Average,
}

impl std::str::FromStr for Linkage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(Linkage::Single),
            "complete" => Ok(Linkage::Complete),
            "average" => Ok(Linkage::Average),
            other => Err(Error::InvalidConfig(format!(
                "unknown linkage `{other}` (expected single, complete, or average)"
            ))),
        }
    }
}

impl std::fmt::Display for Linkage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Linkage::Single => "single",
            Linkage::Complete => "complete",
            Linkage::Average => "average",
        })
    }
}

/// Merge points bottom-up until k clusters remain. Ties in the closest pair
/// go to the lexicographically smallest index pair, so runs are
/// deterministic. Centers are reported as cluster means; final cluster
/// labels are ordered by each cluster's smallest member index.
pub fn agglomerative_fit(points: &[Vec<f64>], k: usize, linkage: Linkage) -> Result<Partition> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(Error::KTooLarge { k, n });
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::ShapeMismatch("points differ in dimension".into()));
    }

    // dist[i][j] between active clusters; usize::MAX parents mark retired
    // clusters. members[i] holds each active cluster's point indices.
    let mut dist: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| euclidean(&points[i], &points[j])).collect())
        .collect();
    let mut active: Vec<bool> = vec![true; n];
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();

    for _ in 0..n - k {
        let mut best: Option<(usize, usize)> = None;
        let mut best_d = f64::INFINITY;
        for i in 0..n {
            if !active[i] {
                continue;
            }
            for j in i + 1..n {
                if !active[j] {
                    continue;
                }
                if dist[i][j] < best_d {
                    best_d = dist[i][j];
                    best = Some((i, j));
                }
            }
        }
        let (a, b) = best.expect("more than k active clusters");

        // Lance-Williams update of cluster a; cluster b retires.
        let (na, nb) = (members[a].len() as f64, members[b].len() as f64);
        for x in 0..n {
            if !active[x] || x == a || x == b {
                continue;
            }
            let merged = match linkage {
                Linkage::Single => dist[a][x].min(dist[b][x]),
                Linkage::Complete => dist[a][x].max(dist[b][x]),
                Linkage::Average => (na * dist[a][x] + nb * dist[b][x]) / (na + nb),
            };
            dist[a][x] = merged;
            dist[x][a] = merged;
        }
        let absorbed = std::mem::take(&mut members[b]);
        members[a].extend(absorbed);
        active[b] = false;
    }

    // Stable labels: clusters ordered by smallest member index.
    let mut clusters: Vec<&Vec<usize>> = (0..n).filter(|&i| active[i]).map(|i| &members[i]).collect();
    clusters.sort_by_key(|c| *c.iter().min().expect("non-empty cluster"));

    let mut assignments = vec![0usize; n];
    let mut centers = Vec::with_capacity(k);
    for (label, cluster) in clusters.iter().enumerate() {
        let mut mean = vec![0.0; dim];
        for &i in cluster.iter() {
            assignments[i] = label;
            for (c, v) in mean.iter_mut().zip(&points[i]) {
                *c += v;
            }
        }
        for c in &mut mean {
            *c /= cluster.len() as f64;
        }
        centers.push(mean);
    }
    Partition::new(assignments, k, centers)
}
