//! Classical clustering methods used as comparison points: longitudinal
//! K-means over several trajectory distances, Euclidean K-means for
//! embeddings, agglomerative linkage clustering, and an EM-fitted mixture of
//! polynomial trajectories.

mod agglomerative;
mod gbtm;
mod kmeans;

pub use agglomerative::{agglomerative_fit, Linkage};
pub use gbtm::{gbtm_fit, GbtmModel};
pub use kmeans::{kmeans_fit, kml_fit, select_k_by_ch, KSweep};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A hard clustering: per-item cluster indices in [0, k) plus the cluster
/// centers. Centers match the clustered objects (d-vectors or
/// T-trajectories); they are empty when the producing method reports none.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub assignments: Vec<usize>,
    pub k: usize,
    pub centers: Vec<Vec<f64>>,
}

impl Partition {
    pub fn new(assignments: Vec<usize>, k: usize, centers: Vec<Vec<f64>>) -> Result<Self> {
        if let Some(&bad) = assignments.iter().find(|&&a| a >= k) {
            return Err(Error::DegeneratePartition(format!(
                "assignment {bad} outside 0..{k}"
            )));
        }
        if !centers.is_empty() && centers.len() != k {
            return Err(Error::DegeneratePartition(format!(
                "{} centers for k = {k}",
                centers.len()
            )));
        }
        Ok(Partition { assignments, k, centers })
    }

    /// Build from bare labels, without centers.
    pub fn from_assignments(assignments: Vec<usize>, k: usize) -> Result<Self> {
        Partition::new(assignments, k, Vec::new())
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    /// Number of items in each cluster.
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.k];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }
}

/// Distance between two whole trajectories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceMetric {
    L1,
    L2,
    Dtw,
    Frechet,
}

impl std::str::FromStr for DistanceMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l1" => Ok(DistanceMetric::L1),
            "l2" => Ok(DistanceMetric::L2),
            "dtw" => Ok(DistanceMetric::Dtw),
            "frechet" => Ok(DistanceMetric::Frechet),
            other => Err(Error::InvalidConfig(format!(
                "unknown metric `{other}` (expected l1, l2, dtw, or frechet)"
            ))),
        }
    }
}

impl std::fmt::Display for DistanceMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DistanceMetric::L1 => "l1",
            DistanceMetric::L2 => "l2",
            DistanceMetric::Dtw => "dtw",
            DistanceMetric::Frechet => "frechet",
        })
    }
}

/// Distance between two scalar trajectories.
///
/// L1 and L2 require equal lengths. DTW is the minimum total |a_i - b_j|
/// cost over warping paths with steps (i-1,j), (i,j-1), (i-1,j-1). The
/// discrete Fréchet distance is the minimum over couplings of the maximum
/// pointwise |a_i - b_j|; both accept unequal lengths.
pub fn traj_distance(a: &[f64], b: &[f64], metric: DistanceMetric) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    match metric {
        DistanceMetric::L1 => {
            check_equal_len(a, b)?;
            Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum())
        }
        DistanceMetric::L2 => {
            check_equal_len(a, b)?;
            Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
        }
        DistanceMetric::Dtw => Ok(dtw(a, b)),
        DistanceMetric::Frechet => Ok(discrete_frechet(a, b)),
    }
}

fn check_equal_len(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { expected: a.len(), got: b.len() });
    }
    Ok(())
}

fn dtw(a: &[f64], b: &[f64]) -> f64 {
    // Rolling single row of the (len(a)+1) x (len(b)+1) cost table.
    let m = b.len();
    let mut row = vec![f64::INFINITY; m + 1];
    row[0] = 0.0;
    for &x in a {
        let mut diag = row[0];
        row[0] = f64::INFINITY;
        for j in 1..=m {
            let cost = (x - b[j - 1]).abs();
            let best = diag.min(row[j]).min(row[j - 1]);
            diag = row[j];
            row[j] = cost + best;
        }
    }
    row[m]
}

fn discrete_frechet(a: &[f64], b: &[f64]) -> f64 {
    let m = b.len();
    let mut row = vec![f64::INFINITY; m];
    for (i, &x) in a.iter().enumerate() {
        let mut prev_diag = f64::INFINITY;
        for j in 0..m {
            let d = (x - b[j]).abs();
            let reach = if i == 0 && j == 0 {
                d
            } else if i == 0 {
                d.max(row[j - 1])
            } else if j == 0 {
                d.max(row[j])
            } else {
                d.max(prev_diag.min(row[j]).min(row[j - 1]))
            };
            prev_diag = row[j];
            row[j] = reach;
        }
    }
    row[m - 1]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::rng::RngStream;
    use proptest::prelude::*;

    /// All monotone warping paths through an n x m grid.
    fn all_paths(n: usize, m: usize) -> Vec<Vec<(usize, usize)>> {
        fn extend(path: Vec<(usize, usize)>, n: usize, m: usize, out: &mut Vec<Vec<(usize, usize)>>) {
            let &(i, j) = path.last().unwrap();
            if i == n - 1 && j == m - 1 {
                out.push(path);
                return;
            }
            for (di, dj) in [(1, 0), (0, 1), (1, 1)] {
                let (ni, nj) = (i + di, j + dj);
                if ni < n && nj < m {
                    let mut next = path.clone();
                    next.push((ni, nj));
                    extend(next, n, m, out);
                }
            }
        }
        let mut out = Vec::new();
        extend(vec![(0, 0)], n, m, &mut out);
        out
    }

    fn dtw_brute(a: &[f64], b: &[f64]) -> f64 {
        all_paths(a.len(), b.len())
            .into_iter()
            .map(|p| p.into_iter().map(|(i, j)| (a[i] - b[j]).abs()).sum())
            .fold(f64::INFINITY, f64::min)
    }

    fn frechet_brute(a: &[f64], b: &[f64]) -> f64 {
        all_paths(a.len(), b.len())
            .into_iter()
            .map(|p| {
                p.into_iter().map(|(i, j)| (a[i] - b[j]).abs()).fold(0.0, f64::max)
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn identical_trajectories_are_at_distance_zero() {
        let a = [1.0, -2.0, 3.5];
        for metric in [DistanceMetric::L1, DistanceMetric::L2, DistanceMetric::Dtw, DistanceMetric::Frechet] {
            assert_eq!(traj_distance(&a, &a, metric).unwrap(), 0.0, "{metric}");
        }
    }

    #[test]
    fn l1_and_l2_hand_values() {
        let a = [0.0, 0.0, 0.0];
        let b = [1.0, 2.0, 2.0];
        assert_eq!(traj_distance(&a, &b, DistanceMetric::L1).unwrap(), 5.0);
        assert_eq!(traj_distance(&a, &b, DistanceMetric::L2).unwrap(), 3.0);
    }

    #[test]
    fn dtw_absorbs_a_repeated_point() {
        let d = traj_distance(&[0.0, 1.0], &[0.0, 1.0, 1.0], DistanceMetric::Dtw).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn frechet_hand_value() {
        let d = traj_distance(&[0.0, 2.0], &[1.0], DistanceMetric::Frechet).unwrap();
        assert_eq!(d, 1.0);
    }

    #[test]
    fn unequal_lengths_only_allowed_for_elastic_metrics() {
        let a = [0.0, 1.0];
        let b = [0.0, 1.0, 2.0];
        assert!(matches!(
            traj_distance(&a, &b, DistanceMetric::L1),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            traj_distance(&a, &b, DistanceMetric::L2),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(traj_distance(&a, &b, DistanceMetric::Dtw).is_ok());
        assert!(traj_distance(&a, &b, DistanceMetric::Frechet).is_ok());
    }

    #[test]
    fn empty_trajectories_are_rejected() {
        for metric in [DistanceMetric::L1, DistanceMetric::Dtw] {
            assert!(matches!(
                traj_distance(&[], &[1.0], metric),
                Err(Error::EmptyTrajectory)
            ));
        }
    }

    #[test]
    fn dtw_matches_brute_force_enumeration() {
        let mut rng = RngStream::new(31);
        for _ in 0..50 {
            let n = 1 + rng.next_index(5);
            let m = 1 + rng.next_index(5);
            let a: Vec<f64> = (0..n).map(|_| rng.uniform(-3.0, 3.0)).collect();
            let b: Vec<f64> = (0..m).map(|_| rng.uniform(-3.0, 3.0)).collect();
            let fast = traj_distance(&a, &b, DistanceMetric::Dtw).unwrap();
            let slow = dtw_brute(&a, &b);
            assert!((fast - slow).abs() < 1e-12, "a={a:?} b={b:?}: {fast} vs {slow}");
        }
    }

    #[test]
    fn frechet_matches_brute_force_enumeration() {
        let mut rng = RngStream::new(32);
        for _ in 0..50 {
            let n = 1 + rng.next_index(5);
            let m = 1 + rng.next_index(5);
            let a: Vec<f64> = (0..n).map(|_| rng.uniform(-3.0, 3.0)).collect();
            let b: Vec<f64> = (0..m).map(|_| rng.uniform(-3.0, 3.0)).collect();
            let fast = traj_distance(&a, &b, DistanceMetric::Frechet).unwrap();
            let slow = frechet_brute(&a, &b);
            assert!((fast - slow).abs() < 1e-12, "a={a:?} b={b:?}: {fast} vs {slow}");
        }
    }

    #[test]
    fn partition_validates_assignment_range_and_center_count() {
        assert!(Partition::new(vec![0, 1, 2], 3, vec![]).is_ok());
        assert!(Partition::new(vec![0, 3], 3, vec![]).is_err());
        assert!(Partition::new(vec![0, 1], 2, vec![vec![0.0]]).is_err());
    }

    #[test]
    fn cluster_sizes_counts_each_label() {
        let p = Partition::from_assignments(vec![0, 1, 1, 2, 1], 3).unwrap();
        assert_eq!(p.cluster_sizes(), vec![1, 3, 1]);
    }

    proptest! {
        #[test]
        fn distances_are_symmetric_and_non_negative(
            a in proptest::collection::vec(-5.0..5.0f64, 1..8),
            b in proptest::collection::vec(-5.0..5.0f64, 1..8),
        ) {
            for metric in [DistanceMetric::Dtw, DistanceMetric::Frechet] {
                let ab = traj_distance(&a, &b, metric).unwrap();
                let ba = traj_distance(&b, &a, metric).unwrap();
                prop_assert!(ab >= 0.0);
                prop_assert!((ab - ba).abs() < 1e-12);
            }
            if a.len() == b.len() {
                for metric in [DistanceMetric::L1, DistanceMetric::L2] {
                    let ab = traj_distance(&a, &b, metric).unwrap();
                    let ba = traj_distance(&b, &a, metric).unwrap();
                    prop_assert!(ab >= 0.0);
                    prop_assert!((ab - ba).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn l1_l2_frechet_satisfy_the_triangle_inequality(seed in 0u64..100) {
            let mut rng = RngStream::new(seed);
            let len = 2 + rng.next_index(5);
            let draw = |rng: &mut RngStream| -> Vec<f64> {
                (0..len).map(|_| rng.uniform(-4.0, 4.0)).collect()
            };
            let (a, b, c) = (draw(&mut rng), draw(&mut rng), draw(&mut rng));
            for metric in [DistanceMetric::L1, DistanceMetric::L2, DistanceMetric::Frechet] {
                let ab = traj_distance(&a, &b, metric).unwrap();
                let bc = traj_distance(&b, &c, metric).unwrap();
                let ac = traj_distance(&a, &c, metric).unwrap();
                prop_assert!(ac <= ab + bc + 1e-12, "{metric}: {ac} > {ab} + {bc}");
            }
        }
    }
}
