//! K-means style partitioning, shared by the longitudinal (kml) and
//! embedding-space variants.
//!
//! Each restart initializes centers as k distinct data objects sampled from
//! a derived RNG stream, then alternates nearest-center assignment and
//! pointwise-mean center updates until assignments are stable (at most 100
//! iterations). The best restart by the Calinski-Harabasz criterion wins;
//! ties go to the lowest restart index, so parallel and serial runs agree.

use super::{traj_distance, DistanceMetric, Partition};
use crate::dataset::TrajectoryDataset;
use crate::error::{Error, Result};
use crate::evaluation::calinski_harabasz;
use crate::math::euclidean;
use crate::math::rng::RngStream;
use crate::parallel;

const MAX_ITERS: usize = 100;

/// Euclidean K-means over d-vectors, best of `n_restarts` by the
/// Calinski-Harabasz criterion (by within-cluster SSE when CH is undefined,
/// i.e. k < 2 or N <= k).
pub fn kmeans_fit(
    points: &[Vec<f64>],
    k: usize,
    n_restarts: usize,
    seed: u64,
) -> Result<Partition> {
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::ShapeMismatch("points differ in dimension".into()));
    }
    best_of_restarts(points, k, n_restarts, seed, &euclidean)
}

/// Longitudinal K-means: nearest-center assignment under the chosen
/// trajectory distance, centers updated as pointwise mean trajectories.
pub fn kml_fit(
    dataset: &TrajectoryDataset,
    k: usize,
    metric: DistanceMetric,
    n_restarts: usize,
    seed: u64,
) -> Result<Partition> {
    if dataset.n_subjects() == 0 {
        return Err(Error::EmptyDataset);
    }
    let dist = move |a: &[f64], b: &[f64]| {
        // Lengths are equal by the dataset's rectangular invariant.
        traj_distance(a, b, metric).expect("rectangular dataset")
    };
    best_of_restarts(dataset.values(), k, n_restarts, seed, &dist)
}

/// One CH value per candidate k, plus the partition of the best k.
#[derive(Debug, Clone)]
pub struct KSweep {
    /// (k, CH score of the best restart at that k), in ascending k.
    pub scores: Vec<(usize, f64)>,
    pub best_k: usize,
    pub best: Partition,
}

/// Fit kml at every k in the inclusive range and keep the k with the
/// largest Calinski-Harabasz criterion (ties to the smallest k). Each k gets
/// its own derived RNG stream, so adding values to the range does not
/// disturb the others.
pub fn select_k_by_ch(
    dataset: &TrajectoryDataset,
    k_min: usize,
    k_max: usize,
    metric: DistanceMetric,
    n_restarts: usize,
    seed: u64,
) -> Result<KSweep> {
    if k_min < 2 || k_min > k_max {
        return Err(Error::InvalidConfig(format!(
            "k range {k_min}..={k_max} must start at 2 and be non-empty"
        )));
    }
    let fits: Vec<Result<(usize, f64, Partition)>> =
        parallel::map_indexed(k_max - k_min + 1, |i| {
            let k = k_min + i;
            let part = kml_fit(dataset, k, metric, n_restarts, RngStream::child(seed, k as u64).seed())?;
            let ch = calinski_harabasz(dataset.values(), &part)?;
            Ok((k, ch, part))
        });

    let mut scores = Vec::with_capacity(fits.len());
    let mut best: Option<(f64, usize, Partition)> = None;
    for fit in fits {
        let (k, ch, part) = fit?;
        scores.push((k, ch));
        let better = match &best {
            None => true,
            Some((best_ch, _, _)) => ch > *best_ch,
        };
        if better {
            best = Some((ch, k, part));
        }
    }
    let (_, best_k, best) = best.expect("non-empty k range");
    Ok(KSweep { scores, best_k, best })
}

/// Run restarts in parallel and keep the best by (criterion, restart index).
fn best_of_restarts(
    points: &[Vec<f64>],
    k: usize,
    n_restarts: usize,
    seed: u64,
    dist: &(dyn Fn(&[f64], &[f64]) -> f64 + Sync),
) -> Result<Partition> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(Error::KTooLarge { k, n });
    }
    if n_restarts == 0 {
        return Err(Error::InvalidConfig("restarts must be at least 1".into()));
    }

    let runs: Vec<(f64, Partition)> = parallel::map_indexed(n_restarts, |r| {
        let mut rng = RngStream::child(seed, r as u64);
        let partition = lloyd(points, k, dist, &mut rng);
        let score = restart_score(points, &partition);
        (score, partition)
    });

    let mut best = None;
    for (score, partition) in runs {
        let better = match &best {
            None => true,
            Some((best_score, _)) => score > *best_score,
        };
        if better {
            best = Some((score, partition));
        }
    }
    Ok(best.expect("at least one restart").1)
}

/// CH when defined, otherwise negated within-cluster SSE (so lower
/// dispersion still wins for k = 1 or k = N).
fn restart_score(points: &[Vec<f64>], partition: &Partition) -> f64 {
    if partition.k >= 2 && points.len() > partition.k {
        calinski_harabasz(points, partition).expect("clusters non-empty after Lloyd")
    } else {
        -within_sse(points, partition)
    }
}

fn within_sse(points: &[Vec<f64>], partition: &Partition) -> f64 {
    points
        .iter()
        .zip(&partition.assignments)
        .map(|(p, &a)| {
            let d = euclidean(p, &partition.centers[a]);
            d * d
        })
        .sum()
}

/// One Lloyd run from a seeded initialization.
fn lloyd(
    points: &[Vec<f64>],
    k: usize,
    dist: &(dyn Fn(&[f64], &[f64]) -> f64 + Sync),
    rng: &mut RngStream,
) -> Partition {
    let n = points.len();
    let init = rng.sample_distinct(n, k);
    let mut centers: Vec<Vec<f64>> = init.iter().map(|&i| points[i].clone()).collect();
    let mut assignments = vec![usize::MAX; n];

    for _ in 0..MAX_ITERS {
        // Nearest center, ties to the lowest cluster index.
        let next: Vec<usize> = parallel::map_indexed(n, |i| {
            let mut best = 0usize;
            let mut best_d = dist(&points[i], &centers[0]);
            for (j, center) in centers.iter().enumerate().skip(1) {
                let d = dist(&points[i], center);
                if d < best_d {
                    best_d = d;
                    best = j;
                }
            }
            best
        });
        let mut next = next;

        // Reseed each empty cluster to the point farthest from its center,
        // drawn from clusters with at least two members so the steal cannot
        // create a new empty cluster. First maximum wins on ties.
        let mut sizes = vec![0usize; k];
        for &a in &next {
            sizes[a] += 1;
        }
        for j in 0..k {
            if sizes[j] > 0 {
                continue;
            }
            let mut far = None;
            let mut far_d = f64::NEG_INFINITY;
            for (i, point) in points.iter().enumerate() {
                if sizes[next[i]] < 2 {
                    continue;
                }
                let d = dist(point, &centers[next[i]]);
                if d > far_d {
                    far_d = d;
                    far = Some(i);
                }
            }
            let far = far.expect("an empty cluster implies another has two members");
            sizes[next[far]] -= 1;
            next[far] = j;
            sizes[j] = 1;
            centers[j] = points[far].clone();
        }

        let stable = next == assignments;
        assignments = next;

        // Pointwise mean update.
        let dim = points[0].len();
        for (j, center) in centers.iter_mut().enumerate() {
            if sizes[j] == 0 {
                continue;
            }
            center.iter_mut().for_each(|c| *c = 0.0);
            for (p, &a) in points.iter().zip(&assignments) {
                if a == j {
                    for (c, v) in center.iter_mut().zip(p) {
                        *c += v;
                    }
                }
            }
            let inv = 1.0 / sizes[j] as f64;
            for c in center.iter_mut().take(dim) {
                *c *= inv;
            }
        }

        if stable {
            break;
        }
    }

    Partition { assignments, k, centers }
}
