//! Sample statistics and small-matrix spectral helpers.

use crate::error::{Error, Result};
use crate::math::Matrix;

/// Sample Pearson correlation coefficient.
pub fn pearson_correlation(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { expected: a.len(), got: b.len() });
    }
    if a.len() < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: a.len() });
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in a.iter().zip(b) {
        let dx = x - ma;
        let dy = y - mb;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ConstantVector);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Sample mean and unbiased (n-1) covariance of a set of d-vectors.
pub fn mean_and_covariance(points: &[Vec<f64>]) -> Result<(Vec<f64>, Matrix)> {
    if points.len() < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: points.len() });
    }
    let d = points[0].len();
    if points.iter().any(|p| p.len() != d) {
        return Err(Error::ShapeMismatch("points have mixed dimensions".into()));
    }
    let n = points.len() as f64;
    let mut mean = vec![0.0; d];
    for p in points {
        for (m, x) in mean.iter_mut().zip(p) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut cov = Matrix::zeros(d, d);
    for p in points {
        for i in 0..d {
            let di = p[i] - mean[i];
            for j in i..d {
                let dj = p[j] - mean[j];
                cov.set(i, j, cov.get(i, j) + di * dj);
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            let v = cov.get(i, j) / (n - 1.0);
            cov.set(i, j, v);
            cov.set(j, i, v);
        }
    }
    Ok((mean, cov))
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in descending order and the matching unit
/// eigenvectors as columns. Intended for the small matrices this crate
/// works with (covariances of a handful of dimensions).
pub fn eigen_symmetric(m: &Matrix) -> (Vec<f64>, Matrix) {
    assert_eq!(m.rows(), m.cols(), "eigen_symmetric needs a square matrix");
    let n = m.rows();
    let mut a = m.clone();
    let mut v = Matrix::from_fn(n, n, |r, c| if r == c { 1.0 } else { 0.0 });

    let scale: f64 = (0..n)
        .map(|i| a.get(i, i).abs())
        .fold(1.0_f64, f64::max);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a.get(p, q) * a.get(p, q);
            }
        }
        if off.sqrt() <= 1e-14 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a.get(q, q) - a.get(p, p)) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                let app = a.get(p, p);
                let aqq = a.get(q, q);
                a.set(p, p, app - t * apq);
                a.set(q, q, aqq + t * apq);
                a.set(p, q, 0.0);
                a.set(q, p, 0.0);
                for i in 0..n {
                    if i != p && i != q {
                        let aip = a.get(i, p);
                        let aiq = a.get(i, q);
                        a.set(i, p, c * aip - s * aiq);
                        a.set(p, i, c * aip - s * aiq);
                        a.set(i, q, s * aip + c * aiq);
                        a.set(q, i, s * aip + c * aiq);
                    }
                    let vip = v.get(i, p);
                    let viq = v.get(i, q);
                    v.set(i, p, c * vip - s * viq);
                    v.set(i, q, s * vip + c * viq);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a.get(j, j).partial_cmp(&a.get(i, i)).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a.get(i, i)).collect();
    let mut vectors = Matrix::from_fn(n, n, |r, c| v.get(r, order[c]));
    // Fix each eigenvector's sign so results do not depend on rotation history:
    // the largest-magnitude component is made positive.
    for c in 0..n {
        let mut best = 0;
        for r in 1..n {
            if vectors.get(r, c).abs() > vectors.get(best, c).abs() {
                best = r;
            }
        }
        if vectors.get(best, c) < 0.0 {
            for r in 0..n {
                vectors.set(r, c, -vectors.get(r, c));
            }
        }
    }
    (eigenvalues, vectors)
}

/// Top-`m` principal directions of a point cloud.
///
/// Columns are the unit eigenvectors of the sample covariance for the `m`
/// largest eigenvalues, in descending eigenvalue order.
pub fn top_principal_directions(points: &[Vec<f64>], m: usize) -> Result<Matrix> {
    let (_, cov) = mean_and_covariance(points)?;
    let d = cov.rows();
    if m > d {
        return Err(Error::ShapeMismatch(format!(
            "asked for {m} directions in {d} dimensions"
        )));
    }
    let (values, vectors) = eigen_symmetric(&cov);
    let tol = 1e-12 * values[0].abs().max(1.0);
    let rank = values.iter().filter(|&&l| l > tol).count();
    if rank < m {
        return Err(Error::DegenerateCovariance { rank, requested: m });
    }
    Ok(Matrix::from_fn(d, m, |r, c| vectors.get(r, c)))
}

/// Solve A x = b by Gaussian elimination with partial pivoting.
pub(crate) fn solve_linear(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    assert_eq!(a.rows(), a.cols());
    assert_eq!(a.rows(), b.len());
    let n = a.rows();
    let mut m = a.clone();
    let mut x = b.to_vec();
    for col in 0..n {
        let mut pivot = col;
        for r in (col + 1)..n {
            if m.get(r, col).abs() > m.get(pivot, col).abs() {
                pivot = r;
            }
        }
        if m.get(pivot, col).abs() < 1e-300 {
            return Err(Error::SingularDesign);
        }
        if pivot != col {
            for c in 0..n {
                let tmp = m.get(col, c);
                m.set(col, c, m.get(pivot, c));
                m.set(pivot, c, tmp);
            }
            x.swap(col, pivot);
        }
        let inv = 1.0 / m.get(col, col);
        for r in (col + 1)..n {
            let factor = m.get(r, col) * inv;
            if factor == 0.0 {
                continue;
            }
            for c in col..n {
                m.set(r, c, m.get(r, c) - factor * m.get(col, c));
            }
            x[r] -= factor * x[col];
        }
    }
    for col in (0..n).rev() {
        let mut acc = x[col];
        for c in (col + 1)..n {
            acc -= m.get(col, c) * x[c];
        }
        x[col] = acc / m.get(col, col);
    }
    Ok(x)
}

/// Cholesky factorization A = L L^T for symmetric positive-definite A.
pub(crate) fn cholesky(a: &Matrix) -> Option<Matrix> {
    assert_eq!(a.rows(), a.cols());
    let n = a.rows();
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a.get(i, j);
            for k in 0..j {
                sum -= l.get(i, k) * l.get(j, k);
            }
            if i == j {
                if sum <= 0.0 {
                    return None;
                }
                l.set(i, j, sum.sqrt());
            } else {
                l.set(i, j, sum / l.get(j, j));
            }
        }
    }
    Some(l)
}

/// Solve (L L^T) x = b given the Cholesky factor L.
pub(crate) fn cholesky_solve(l: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = l.rows();
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut acc = b[i];
        for k in 0..i {
            acc -= l.get(i, k) * y[k];
        }
        y[i] = acc / l.get(i, i);
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut acc = y[i];
        for k in (i + 1)..n {
            acc -= l.get(k, i) * x[k];
        }
        x[i] = acc / l.get(i, i);
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::rng::RngStream;

    #[test]
    fn pearson_self_and_negated() {
        let a = vec![1.0, 2.0, 5.0, 3.0];
        let neg: Vec<f64> = a.iter().map(|x| -x).collect();
        assert!((pearson_correlation(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        assert!((pearson_correlation(&a, &neg).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn pearson_hand_value() {
        // cov = 1.5, sd_a = 1, sd_b = sqrt(7/3): r = 1.5 / sqrt(7/3) = 0.98198...
        let r = pearson_correlation(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap();
        assert!((r - 0.9820).abs() < 1e-4, "r = {r}");
    }

    #[test]
    fn pearson_rejects_constant_input() {
        assert!(matches!(
            pearson_correlation(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::ConstantVector)
        ));
    }

    #[test]
    fn covariance_two_point_hand_value() {
        let (mean, cov) =
            mean_and_covariance(&[vec![0.0, 0.0], vec![2.0, 2.0]]).unwrap();
        assert_eq!(mean, vec![1.0, 1.0]);
        for (r, c, want) in [(0, 0, 2.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 2.0)] {
            assert_eq!(cov.get(r, c), want);
        }
    }

    #[test]
    fn covariance_of_repeated_point_is_zero() {
        let pts = vec![vec![3.0, -1.0]; 5];
        let (mean, cov) = mean_and_covariance(&pts).unwrap();
        assert_eq!(mean, vec![3.0, -1.0]);
        assert!(cov.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn covariance_needs_two_points() {
        assert!(matches!(
            mean_and_covariance(&[vec![1.0]]),
            Err(Error::TooFewPoints { needed: 2, got: 1 })
        ));
    }

    #[test]
    fn covariance_of_seeded_standard_normals_is_near_identity() {
        let mut rng = RngStream::new(2024);
        let pts: Vec<Vec<f64>> = (0..10_000)
            .map(|_| vec![rng.normal(), rng.normal()])
            .collect();
        let (_, cov) = mean_and_covariance(&pts).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (cov.get(i, j) - want).abs() < 0.1,
                    "cov[{i}][{j}] = {}",
                    cov.get(i, j)
                );
            }
        }
    }

    #[test]
    fn covariance_is_symmetric_psd() {
        let mut rng = RngStream::new(7);
        let pts: Vec<Vec<f64>> = (0..50)
            .map(|_| (0..4).map(|_| rng.uniform(-3.0, 3.0)).collect())
            .collect();
        let (_, cov) = mean_and_covariance(&pts).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert!((cov.get(i, j) - cov.get(j, i)).abs() < 1e-12);
            }
        }
        let (values, _) = eigen_symmetric(&cov);
        assert!(values.iter().all(|&l| l > -1e-10), "eigenvalues {values:?}");
    }

    #[test]
    fn principal_direction_of_axis_aligned_data() {
        // Variation only along the first axis.
        let pts = vec![vec![-2.0, 0.0], vec![-1.0, 0.0], vec![1.0, 0.0], vec![2.0, 0.0]];
        let dirs = top_principal_directions(&pts, 1).unwrap();
        assert!((dirs.get(0, 0).abs() - 1.0).abs() < 1e-12);
        assert!(dirs.get(1, 0).abs() < 1e-12);
    }

    #[test]
    fn principal_direction_with_injected_gap() {
        // Points +-2u +-0.5v with u = (1,1)/sqrt(2): leading eigenvector is u.
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let u = [s, s];
        let v = [s, -s];
        let pts = vec![
            vec![2.0 * u[0], 2.0 * u[1]],
            vec![-2.0 * u[0], -2.0 * u[1]],
            vec![0.5 * v[0], 0.5 * v[1]],
            vec![-0.5 * v[0], -0.5 * v[1]],
        ];
        let dirs = top_principal_directions(&pts, 1).unwrap();
        let dot = (dirs.get(0, 0) * u[0] + dirs.get(1, 0) * u[1]).abs();
        assert!(dot.acos() < 1e-6, "angle {}", dot.acos());
    }

    #[test]
    fn full_basis_is_orthonormal() {
        let mut rng = RngStream::new(11);
        let pts: Vec<Vec<f64>> = (0..100)
            .map(|_| (0..3).map(|_| rng.normal() * rng.uniform(0.5, 2.0)).collect())
            .collect();
        let q = top_principal_directions(&pts, 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|r| q.get(r, i) * q.get(r, j)).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-10, "Q^T Q [{i}][{j}] = {dot}");
            }
        }
    }

    #[test]
    fn eigenvectors_satisfy_the_eigen_equation() {
        let mut rng = RngStream::new(3);
        let pts: Vec<Vec<f64>> = (0..200)
            .map(|_| (0..4).map(|_| rng.normal()).collect())
            .collect();
        let (_, cov) = mean_and_covariance(&pts).unwrap();
        let (values, vectors) = eigen_symmetric(&cov);
        for c in 0..4 {
            let col: Vec<f64> = (0..4).map(|r| vectors.get(r, c)).collect();
            let av = cov.matvec(&col);
            for r in 0..4 {
                assert!(
                    (av[r] - values[c] * col[r]).abs() < 1e-8,
                    "residual at [{r}] for eigenpair {c}"
                );
            }
        }
    }

    #[test]
    fn degenerate_covariance_is_reported() {
        let pts = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![2.0, 0.0]];
        assert!(matches!(
            top_principal_directions(&pts, 2),
            Err(Error::DegenerateCovariance { rank: 1, requested: 2 })
        ));
    }

    #[test]
    fn linear_solver_round_trips() {
        let a = Matrix::from_vec(3, 3, vec![4.0, 1.0, 0.5, 1.0, 3.0, -1.0, 0.5, -1.0, 2.0])
            .unwrap();
        let x_true = vec![1.0, -2.0, 0.5];
        let b = a.matvec(&x_true);
        let x = solve_linear(&a, &b).unwrap();
        for (got, want) in x.iter().zip(&x_true) {
            assert!((got - want).abs() < 1e-12);
        }
        let l = cholesky(&a).unwrap();
        let x2 = cholesky_solve(&l, &b);
        for (got, want) in x2.iter().zip(&x_true) {
            assert!((got - want).abs() < 1e-12);
        }
    }
}
