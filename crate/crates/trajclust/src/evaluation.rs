//! Cluster-quality criteria, posterior membership probabilities, partition
//! agreement, and cross-method membership correlation.

use crate::baselines::Partition;
use crate::error::{Error, Result};
use crate::math::stats::{cholesky, cholesky_solve, mean_and_covariance, pearson_correlation};
use crate::math::Matrix;

/// Soft cluster assignments: N rows of k probabilities, tagged with the
/// producing method.
#[derive(Debug, Clone, PartialEq)]
pub struct MembershipMatrix {
    pub method: String,
    /// N x k probabilities; each row sums to 1.
    pub probs: Matrix,
    /// One label per cluster column.
    pub cluster_labels: Vec<String>,
}

impl MembershipMatrix {
    pub fn new(method: impl Into<String>, probs: Matrix, cluster_labels: Vec<String>) -> Result<Self> {
        if cluster_labels.len() != probs.cols() {
            return Err(Error::ShapeMismatch(format!(
                "{} labels for {} clusters",
                cluster_labels.len(),
                probs.cols()
            )));
        }
        let m = MembershipMatrix { method: method.into(), probs, cluster_labels };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        for i in 0..self.probs.rows() {
            let row = self.probs.row(i);
            if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                return Err(Error::InvalidConfig(format!("membership row {i} outside [0,1]")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidConfig(format!("membership row {i} sums to {sum}")));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.probs.rows()
    }

    pub fn k(&self) -> usize {
        self.probs.cols()
    }

    /// Most probable cluster per row; ties go to the lowest index.
    pub fn hard_labels(&self) -> Vec<usize> {
        (0..self.probs.rows())
            .map(|i| {
                let row = self.probs.row(i);
                let mut best = 0;
                for (j, &p) in row.iter().enumerate().skip(1) {
                    if p > row[best] {
                        best = j;
                    }
                }
                best
            })
            .collect()
    }
}

/// Calinski-Harabasz criterion: (BGSS / (k-1)) / (WGSS / (N-k)).
///
/// Higher is better. A partition with zero within-cluster dispersion scores
/// +infinity (documented sentinel, so exact duplicates do not crash sweeps).
pub fn calinski_harabasz(points: &[Vec<f64>], partition: &Partition) -> Result<f64> {
    let n = points.len();
    if partition.assignments.len() != n {
        return Err(Error::SizeMismatch { a: n, b: partition.assignments.len() });
    }
    let k = partition.k;
    if k < 2 {
        return Err(Error::DegeneratePartition(format!("CH needs k >= 2, got {k}")));
    }
    if n <= k {
        return Err(Error::DegeneratePartition(format!("CH needs N > k, got N = {n}, k = {k}")));
    }
    let sizes = partition.cluster_sizes();
    if let Some(j) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::DegeneratePartition(format!("cluster {j} is empty")));
    }

    let dim = points[0].len();
    let mut grand = vec![0.0; dim];
    let mut means = vec![vec![0.0; dim]; k];
    for (p, &a) in points.iter().zip(&partition.assignments) {
        for ((g, m), v) in grand.iter_mut().zip(means[a].iter_mut()).zip(p) {
            *g += v;
            *m += v;
        }
    }
    for g in &mut grand {
        *g /= n as f64;
    }
    for (mean, &size) in means.iter_mut().zip(&sizes) {
        for m in mean.iter_mut() {
            *m /= size as f64;
        }
    }

    let mut bgss = 0.0;
    for (mean, &size) in means.iter().zip(&sizes) {
        let d2: f64 = mean.iter().zip(&grand).map(|(m, g)| (m - g) * (m - g)).sum();
        bgss += size as f64 * d2;
    }
    let mut wgss = 0.0;
    for (p, &a) in points.iter().zip(&partition.assignments) {
        wgss += p.iter().zip(&means[a]).map(|(v, m)| (v - m) * (v - m)).sum::<f64>();
    }

    if wgss == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((bgss / (k - 1) as f64) / (wgss / (n - k) as f64))
}

/// Posterior cluster memberships under a Gaussian fitted to each cluster.
///
/// Each cluster gets a Gaussian with its members' mean and covariance
/// (regularized on the diagonal by 1e-6 times the mean diagonal entry, so
/// small or flat clusters stay invertible) and mixing weight n_j / N. The
/// matrix holds the posterior responsibilities of every point.
pub fn gaussian_membership(points: &[Vec<f64>], partition: &Partition) -> Result<MembershipMatrix> {
    let n = points.len();
    if partition.assignments.len() != n {
        return Err(Error::SizeMismatch { a: n, b: partition.assignments.len() });
    }
    let k = partition.k;
    let sizes = partition.cluster_sizes();
    if let Some(j) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::DegeneratePartition(format!("cluster {j} is empty")));
    }
    let dim = points[0].len();

    struct ClusterGaussian {
        mean: Vec<f64>,
        chol: Matrix,
        log_norm: f64,
        log_weight: f64,
    }

    let mut fits = Vec::with_capacity(k);
    for j in 0..k {
        let members: Vec<Vec<f64>> = points
            .iter()
            .zip(&partition.assignments)
            .filter(|(_, &a)| a == j)
            .map(|(p, _)| p.clone())
            .collect();
        let (mean, mut cov) = if members.len() < 2 {
            (members[0].clone(), Matrix::zeros(dim, dim))
        } else {
            mean_and_covariance(&members)?
        };

        let mean_diag =
            (0..dim).map(|i| cov.get(i, i)).sum::<f64>() / dim as f64;
        let jitter = if mean_diag > 0.0 { 1e-6 * mean_diag } else { 1e-6 };
        for i in 0..dim {
            cov.set(i, i, cov.get(i, i) + jitter);
        }

        let chol = cholesky(&cov).ok_or(Error::DegenerateCovariance { rank: 0, requested: dim })?;
        // log det = 2 sum log L_ii for the Cholesky factor L.
        let log_det: f64 = (0..dim).map(|i| 2.0 * chol.get(i, i).ln()).sum();
        let log_norm = -0.5 * (dim as f64 * (2.0 * std::f64::consts::PI).ln() + log_det);
        fits.push(ClusterGaussian {
            mean,
            chol,
            log_norm,
            log_weight: (sizes[j] as f64 / n as f64).ln(),
        });
    }

    let mut probs = Matrix::zeros(n, k);
    for (i, point) in points.iter().enumerate() {
        let logs: Vec<f64> = fits
            .iter()
            .map(|fit| {
                let centered: Vec<f64> =
                    point.iter().zip(&fit.mean).map(|(x, m)| x - m).collect();
                // Solving L L^T y = c gives the Mahalanobis form c^T y.
                let solved = cholesky_solve(&fit.chol, &centered);
                let mahal: f64 = centered.iter().zip(&solved).map(|(c, y)| c * y).sum();
                fit.log_weight + fit.log_norm - 0.5 * mahal
            })
            .collect();
        let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut row: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
        let sum: f64 = row.iter().sum();
        for r in &mut row {
            *r /= sum;
        }
        for (j, r) in row.into_iter().enumerate() {
            probs.set(i, j, r);
        }
    }

    MembershipMatrix::new(
        "gaussian",
        probs,
        (0..k).map(|j| j.to_string()).collect(),
    )
}

/// Adjusted Rand index between two partitions of the same items.
///
/// Pair-counting form from the contingency table; 1 means identical up to
/// relabeling, 0 is chance level. Degenerate pairs whose expected and
/// maximum index coincide (for example two single-cluster partitions) score
/// 1 by convention.
pub fn adjusted_rand_index(p1: &Partition, p2: &Partition) -> Result<f64> {
    let n = p1.assignments.len();
    if p2.assignments.len() != n {
        return Err(Error::SizeMismatch { a: n, b: p2.assignments.len() });
    }

    let choose2 = |x: usize| (x * x.saturating_sub(1)) as f64 / 2.0;

    let mut table = vec![vec![0usize; p2.k]; p1.k];
    for (&a, &b) in p1.assignments.iter().zip(&p2.assignments) {
        table[a][b] += 1;
    }
    let row_sums: Vec<usize> = table.iter().map(|r| r.iter().sum()).collect();
    let col_sums: Vec<usize> =
        (0..p2.k).map(|j| table.iter().map(|r| r[j]).sum()).collect();

    let index: f64 = table.iter().flatten().map(|&c| choose2(c)).sum();
    let sum_a: f64 = row_sums.iter().map(|&c| choose2(c)).sum();
    let sum_b: f64 = col_sums.iter().map(|&c| choose2(c)).sum();
    let total = choose2(n);
    if total == 0.0 {
        return Ok(1.0);
    }
    let expected = sum_a * sum_b / total;
    let max_index = 0.5 * (sum_a + sum_b);
    if (max_index - expected).abs() < 1e-12 {
        return Ok(1.0);
    }
    Ok((index - expected) / (max_index - expected))
}

/// One matched cluster pair across two methods.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchedPair {
    pub method_a: String,
    pub cluster_a: String,
    pub method_b: String,
    pub cluster_b: String,
    pub correlation: f64,
}

/// Correlation structure across the membership matrices of several methods.
#[derive(Debug, Clone)]
pub struct CoherenceReport {
    /// `method:cluster` label per matrix column.
    pub column_labels: Vec<String>,
    /// Full symmetric correlation matrix over all columns.
    pub matrix: Matrix,
    /// Greedy max-correlation matches for every method pair.
    pub matched: Vec<MatchedPair>,
    /// Mean correlation over all matched pairs.
    pub mean_matched: f64,
}

/// Pearson correlation between every pair of cluster-probability columns,
/// plus a greedy max-correlation matching of clusters for each method pair
/// (no cluster is reused within a pair; ties break on the lowest indices).
pub fn membership_correlation(matrices: &[MembershipMatrix]) -> Result<CoherenceReport> {
    if matrices.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = matrices[0].n();
    for m in matrices {
        if m.n() != n {
            return Err(Error::SizeMismatch { a: n, b: m.n() });
        }
    }

    // Flatten to columns tagged by (method index, cluster index).
    let mut columns: Vec<(usize, usize, Vec<f64>)> = Vec::new();
    let mut column_labels = Vec::new();
    for (mi, m) in matrices.iter().enumerate() {
        for j in 0..m.k() {
            let col: Vec<f64> = (0..n).map(|i| m.probs.get(i, j)).collect();
            column_labels.push(format!("{}:{}", m.method, m.cluster_labels[j]));
            columns.push((mi, j, col));
        }
    }
    for ((_, _, col), label) in columns.iter().zip(&column_labels) {
        let first = col[0];
        if col.iter().all(|&v| v == first) {
            return Err(Error::ConstantColumn(label.clone()));
        }
    }

    let total = columns.len();
    let mut matrix = Matrix::zeros(total, total);
    for i in 0..total {
        matrix.set(i, i, 1.0);
        for j in i + 1..total {
            let r = pearson_correlation(&columns[i].2, &columns[j].2)?;
            matrix.set(i, j, r);
            matrix.set(j, i, r);
        }
    }

    // Greedy matching per method pair.
    let mut matched = Vec::new();
    for ma in 0..matrices.len() {
        for mb in ma + 1..matrices.len() {
            let cols_a: Vec<usize> =
                (0..total).filter(|&c| columns[c].0 == ma).collect();
            let cols_b: Vec<usize> =
                (0..total).filter(|&c| columns[c].0 == mb).collect();
            let mut used_a = vec![false; cols_a.len()];
            let mut used_b = vec![false; cols_b.len()];
            for _ in 0..cols_a.len().min(cols_b.len()) {
                let mut best: Option<(usize, usize)> = None;
                let mut best_r = f64::NEG_INFINITY;
                for (ia, &ca) in cols_a.iter().enumerate() {
                    if used_a[ia] {
                        continue;
                    }
                    for (ib, &cb) in cols_b.iter().enumerate() {
                        if used_b[ib] {
                            continue;
                        }
                        let r = matrix.get(ca, cb);
                        if r > best_r {
                            best_r = r;
                            best = Some((ia, ib));
                        }
                    }
                }
                let (ia, ib) = best.expect("unused columns remain");
                used_a[ia] = true;
                used_b[ib] = true;
                let (_, ja, _) = columns[cols_a[ia]];
                let (_, jb, _) = columns[cols_b[ib]];
                matched.push(MatchedPair {
                    method_a: matrices[ma].method.clone(),
                    cluster_a: matrices[ma].cluster_labels[ja].clone(),
                    method_b: matrices[mb].method.clone(),
                    cluster_b: matrices[mb].cluster_labels[jb].clone(),
                    correlation: best_r,
                });
            }
        }
    }

    let mean_matched = if matched.is_empty() {
        0.0
    } else {
        matched.iter().map(|m| m.correlation).sum::<f64>() / matched.len() as f64
    };
    Ok(CoherenceReport { column_labels, matrix, matched, mean_matched })
}
