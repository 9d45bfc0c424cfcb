//! Group-based trajectory model: a finite mixture of polynomial mean
//! trajectories with Gaussian noise, fitted by EM.
//!
//! All subjects share the observation grid, so the weighted least-squares
//! M-step reduces to solving the unweighted normal equations against each
//! cluster's responsibility-weighted mean trajectory. Time is rescaled to
//! [0, 1] to keep the polynomial design well conditioned.

use crate::dataset::TrajectoryDataset;
use crate::error::{Error, Result};
use crate::evaluation::MembershipMatrix;
use crate::math::rng::RngStream;
use crate::math::stats::solve_linear;
use crate::math::Matrix;

const VARIANCE_FLOOR: f64 = 1e-6;
const LOGLIK_TOL: f64 = 1e-8;
const MASS_FLOOR: f64 = 1e-8;
const MAX_ATTEMPTS: usize = 5;

/// Fitted mixture of polynomial trajectory classes.
#[derive(Debug, Clone, PartialEq)]
pub struct GbtmModel {
    pub k: usize,
    /// Mixing weights, summing to 1.
    pub weights: Vec<f64>,
    /// Per-cluster polynomial coefficients over rescaled time, low order
    /// first (k rows of poly_order + 1 values).
    pub coefficients: Vec<Vec<f64>>,
    /// Per-cluster noise variance, floored at 1e-6.
    pub variances: Vec<f64>,
}

impl GbtmModel {
    /// Fitted mean value of one cluster at rescaled time u in [0, 1].
    pub fn mean_at(&self, cluster: usize, u: f64) -> f64 {
        let mut acc = 0.0;
        let mut power = 1.0;
        for &c in &self.coefficients[cluster] {
            acc += c * power;
            power *= u;
        }
        acc
    }

    /// Fitted mean trajectories on an evenly spaced grid of t_len points.
    pub fn mean_trajectories(&self, t_len: usize) -> Vec<Vec<f64>> {
        let grid = rescaled_grid(t_len);
        (0..self.k)
            .map(|j| grid.iter().map(|&u| self.mean_at(j, u)).collect())
            .collect()
    }
}

/// Evenly spaced grid over [0, 1] with t_len points.
fn rescaled_grid(t_len: usize) -> Vec<f64> {
    if t_len == 1 {
        return vec![0.0];
    }
    (0..t_len).map(|j| j as f64 / (t_len - 1) as f64).collect()
}

/// Fit the mixture by EM.
///
/// Each attempt starts from a random hard assignment drawn from a seed
/// derived off `seed`. EM alternates responsibilities (E) and weighted
/// polynomial refits (M), stopping when the log-likelihood gain drops below
/// 1e-8 or after `max_iters`. A cluster whose responsibility mass falls
/// under 1e-8 triggers a fresh attempt (at most 5) before giving up.
///
/// Returns the model, the final responsibilities, and the log-likelihood
/// history (one entry per E-step).
pub fn gbtm_fit(
    dataset: &TrajectoryDataset,
    k: usize,
    poly_order: usize,
    seed: u64,
    max_iters: usize,
) -> Result<(GbtmModel, MembershipMatrix, Vec<f64>)> {
    let n = dataset.n_subjects();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if k == 0 || k > n {
        return Err(Error::KTooLarge { k, n });
    }
    let t_len = dataset.seq_len();
    if poly_order + 1 > t_len {
        return Err(Error::InvalidConfig(format!(
            "polynomial order {poly_order} needs at least {} timepoints, dataset has {t_len}",
            poly_order + 1
        )));
    }
    if max_iters == 0 {
        return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
    }

    let mut last_degenerate = None;
    for attempt in 0..MAX_ATTEMPTS {
        let attempt_seed = RngStream::child(seed, attempt as u64).seed();
        match em_run(dataset, k, poly_order, attempt_seed, max_iters) {
            Ok(result) => return Ok(result),
            Err(Error::DegenerateCluster { cluster, mass, .. }) => {
                last_degenerate = Some((cluster, mass));
            }
            Err(other) => return Err(other),
        }
    }
    let (cluster, mass) = last_degenerate.expect("loop exits early unless degenerate");
    Err(Error::DegenerateCluster { cluster, mass, attempts: MAX_ATTEMPTS })
}

fn em_run(
    dataset: &TrajectoryDataset,
    k: usize,
    poly_order: usize,
    seed: u64,
    max_iters: usize,
) -> Result<(GbtmModel, MembershipMatrix, Vec<f64>)> {
    let n = dataset.n_subjects();
    let t_len = dataset.seq_len();
    let p = poly_order + 1;
    let grid = rescaled_grid(t_len);

    // Shared design matrix X (t_len x p) and its normal matrix.
    let design = Matrix::from_fn(t_len, p, |t, m| grid[t].powi(m as i32));
    let mut xtx = Matrix::zeros(p, p);
    for a in 0..p {
        for b in 0..p {
            let mut acc = 0.0;
            for t in 0..t_len {
                acc += design.get(t, a) * design.get(t, b);
            }
            xtx.set(a, b, acc);
        }
    }

    // Random hard initialization; every cluster is guaranteed one seed
    // subject so the first M-step sees no empty cluster.
    let mut rng = RngStream::new(seed);
    let mut resp = Matrix::zeros(n, k);
    let anchors = rng.sample_distinct(n, k);
    for (j, &i) in anchors.iter().enumerate() {
        resp.set(i, j, 1.0);
    }
    for i in 0..n {
        if anchors.contains(&i) {
            continue;
        }
        resp.set(i, rng.next_index(k), 1.0);
    }

    let mut model = m_step(dataset, &resp, &design, &xtx, p)?;
    let mut history = Vec::new();
    let mut previous = f64::NEG_INFINITY;
    loop {
        let loglik = e_step(dataset, &model, &design, &mut resp)?;
        history.push(loglik);

        // Mass check before refitting: a starved cluster cannot be refit.
        for j in 0..k {
            let mass: f64 = (0..n).map(|i| resp.get(i, j)).sum();
            if mass < MASS_FLOOR {
                return Err(Error::DegenerateCluster { cluster: j, mass, attempts: 1 });
            }
        }

        // Ending on an E-step keeps the returned model and
        // responsibilities consistent with each other.
        let converged = previous.is_finite() && loglik - previous < LOGLIK_TOL;
        if converged || history.len() >= max_iters {
            break;
        }
        previous = loglik;
        model = m_step(dataset, &resp, &design, &xtx, p)?;
    }

    let membership = MembershipMatrix::new(
        "gbtm",
        resp,
        (0..k).map(|j| j.to_string()).collect(),
    )?;
    Ok((model, membership, history))
}

/// Responsibilities and total log-likelihood under the current model.
fn e_step(
    dataset: &TrajectoryDataset,
    model: &GbtmModel,
    design: &Matrix,
    resp: &mut Matrix,
) -> Result<f64> {
    let n = dataset.n_subjects();
    let t_len = dataset.seq_len();
    let k = model.k;

    let means: Vec<Vec<f64>> = (0..k)
        .map(|j| {
            (0..t_len)
                .map(|t| {
                    (0..design.cols()).map(|m| design.get(t, m) * model.coefficients[j][m]).sum()
                })
                .collect()
        })
        .collect();

    let mut total = 0.0;
    for i in 0..n {
        let row = dataset.row(i);
        let logs: Vec<f64> = (0..k)
            .map(|j| {
                let var = model.variances[j];
                let ss: f64 = row
                    .iter()
                    .zip(&means[j])
                    .map(|(y, m)| (y - m) * (y - m))
                    .sum();
                model.weights[j].ln()
                    - 0.5 * t_len as f64 * (2.0 * std::f64::consts::PI * var).ln()
                    - 0.5 * ss / var
            })
            .collect();
        let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut dens: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
        let sum: f64 = dens.iter().sum();
        for d in &mut dens {
            *d /= sum;
        }
        for (j, d) in dens.into_iter().enumerate() {
            resp.set(i, j, d);
        }
        total += max + sum.ln();
    }
    Ok(total)
}

/// Weighted polynomial refit. With a shared design the weighted normal
/// equations collapse to XtX beta = Xt ybar_j with ybar_j the cluster's
/// responsibility-weighted mean trajectory.
fn m_step(
    dataset: &TrajectoryDataset,
    resp: &Matrix,
    design: &Matrix,
    xtx: &Matrix,
    p: usize,
) -> Result<GbtmModel> {
    let n = dataset.n_subjects();
    let t_len = dataset.seq_len();
    let k = resp.cols();

    let mut weights = Vec::with_capacity(k);
    let mut coefficients = Vec::with_capacity(k);
    let mut variances = Vec::with_capacity(k);
    for j in 0..k {
        let mass: f64 = (0..n).map(|i| resp.get(i, j)).sum();
        if mass < MASS_FLOOR {
            return Err(Error::DegenerateCluster { cluster: j, mass, attempts: 1 });
        }
        weights.push(mass / n as f64);

        let mut ybar = vec![0.0; t_len];
        for i in 0..n {
            let r = resp.get(i, j);
            if r == 0.0 {
                continue;
            }
            for (acc, y) in ybar.iter_mut().zip(dataset.row(i)) {
                *acc += r * y;
            }
        }
        for y in &mut ybar {
            *y /= mass;
        }

        let mut xty = vec![0.0; p];
        for (m, acc) in xty.iter_mut().enumerate() {
            for t in 0..t_len {
                *acc += design.get(t, m) * ybar[t];
            }
        }
        let beta = solve_linear(xtx, &xty)?;

        let fitted: Vec<f64> = (0..t_len)
            .map(|t| (0..p).map(|m| design.get(t, m) * beta[m]).sum())
            .collect();
        let mut ss = 0.0;
        for i in 0..n {
            let r = resp.get(i, j);
            if r == 0.0 {
                continue;
            }
            let row = dataset.row(i);
            ss += r * row
                .iter()
                .zip(&fitted)
                .map(|(y, f)| (y - f) * (y - f))
                .sum::<f64>();
        }
        variances.push((ss / (mass * t_len as f64)).max(VARIANCE_FLOOR));
        coefficients.push(beta);
    }

    Ok(GbtmModel { k, weights, coefficients, variances })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::Partition;
    use crate::evaluation::adjusted_rand_index;

    fn dataset_from(rows: Vec<Vec<f64>>) -> TrajectoryDataset {
        let ids = (0..rows.len()).map(|i| format!("s{i}")).collect();
        TrajectoryDataset::new(ids, rows, None).unwrap()
    }

    /// Two groups of lines with slopes +1 and -1 over rescaled time, noise
    /// sigma = 0.1.
    fn two_slope_dataset(n_per: usize, seed: u64) -> (TrajectoryDataset, Vec<usize>) {
        let t_len = 10;
        let mut rng = RngStream::new(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (slope, label) in [(1.0, 0usize), (-1.0, 1usize)] {
            for _ in 0..n_per {
                let row: Vec<f64> = (0..t_len)
                    .map(|j| {
                        let u = j as f64 / (t_len - 1) as f64;
                        slope * u + 0.1 * rng.normal()
                    })
                    .collect();
                rows.push(row);
                labels.push(label);
            }
        }
        (dataset_from(rows), labels)
    }

    #[test]
    fn single_constant_class_recovers_the_grand_mean() {
        let rows = vec![vec![1.0, 2.0, 3.0], vec![3.0, 4.0, 5.0]];
        let grand = 3.0;
        let (model, membership, _) = gbtm_fit(&dataset_from(rows), 1, 0, 0, 50).unwrap();
        assert_eq!(model.coefficients.len(), 1);
        assert!((model.coefficients[0][0] - grand).abs() < 1e-9);
        assert!((model.weights[0] - 1.0).abs() < 1e-12);
        for i in 0..2 {
            assert_eq!(membership.probs.get(i, 0), 1.0);
        }
    }

    #[test]
    fn loglik_history_is_monotone() {
        let (data, _) = two_slope_dataset(15, 3);
        let (_, _, history) = gbtm_fit(&data, 2, 1, 5, 100).unwrap();
        assert!(history.len() >= 2);
        for w in history.windows(2) {
            assert!(w[1] - w[0] >= -1e-9, "loglik fell: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn slopes_and_assignments_are_recovered() {
        let (data, labels) = two_slope_dataset(20, 11);
        let (model, membership, _) = gbtm_fit(&data, 2, 1, 7, 200).unwrap();

        let mut slopes: Vec<f64> = model.coefficients.iter().map(|c| c[1]).collect();
        slopes.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((slopes[0] - (-1.0)).abs() < 0.05, "{slopes:?}");
        assert!((slopes[1] - 1.0).abs() < 0.05, "{slopes:?}");

        let hard = Partition::from_assignments(membership.hard_labels(), 2).unwrap();
        let truth = Partition::from_assignments(labels, 2).unwrap();
        assert_eq!(adjusted_rand_index(&hard, &truth).unwrap(), 1.0);
    }

    #[test]
    fn membership_rows_sum_to_one() {
        let (data, _) = two_slope_dataset(10, 23);
        let (_, membership, _) = gbtm_fit(&data, 2, 2, 1, 100).unwrap();
        membership.validate().unwrap();
    }

    #[test]
    fn weights_form_a_distribution() {
        let (data, _) = two_slope_dataset(12, 31);
        let (model, _, _) = gbtm_fit(&data, 3, 1, 2, 100).unwrap();
        assert!((model.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(model.weights.iter().all(|&w| w >= 0.0));
        assert!(model.variances.iter().all(|&v| v >= VARIANCE_FLOOR));
    }

    #[test]
    fn fits_are_reproducible() {
        let (data, _) = two_slope_dataset(10, 2);
        let a = gbtm_fit(&data, 2, 1, 9, 100).unwrap();
        let b = gbtm_fit(&data, 2, 1, 9, 100).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
    }

    #[test]
    fn order_too_high_for_grid_is_rejected() {
        let rows = vec![vec![0.0, 1.0], vec![1.0, 2.0]];
        assert!(matches!(
            gbtm_fit(&dataset_from(rows), 1, 2, 0, 10),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn k_larger_than_n_is_rejected() {
        let rows = vec![vec![0.0, 1.0], vec![1.0, 2.0]];
        assert!(matches!(
            gbtm_fit(&dataset_from(rows), 3, 1, 0, 10),
            Err(Error::KTooLarge { .. })
        ));
    }

    #[test]
    fn mean_trajectories_evaluate_the_polynomials() {
        let model = GbtmModel {
            k: 2,
            weights: vec![0.5, 0.5],
            coefficients: vec![vec![1.0, 2.0], vec![0.0, 0.0, 4.0]],
            variances: vec![1.0, 1.0],
        };
        let curves = model.mean_trajectories(3);
        assert_eq!(curves[0], vec![1.0, 2.0, 3.0]);
        assert_eq!(curves[1], vec![0.0, 1.0, 4.0]);
    }
}
