//! Two-component principal projection via a cyclic Jacobi eigensolver.

use alloc::vec;
use alloc::vec::Vec;

const MAX_SWEEPS: usize = 100;
/// Components whose variance falls below this fraction of the leading one
/// are treated as absent.
const RANK_TOLERANCE: f64 = 1e-12;

/// Eigen-decomposition of a symmetric `n x n` row-major matrix.
///
/// Returns eigenvalues in descending order and the matching unit eigenvectors.
pub fn symmetric_eigen(matrix: &[f64], n: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    assert_eq!(matrix.len(), n * n, "matrix must be n x n");
    let mut a = matrix.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale: f64 = a.iter().map(|x| x * x).sum::<f64>();
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum();
        if off <= scale * 1e-30 || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + libm::sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let vectors = order
        .iter()
        .map(|&i| (0..n).map(|k| v[k * n + i]).collect())
        .collect();
    (values, vectors)
}

/// Projects points onto the top two principal components of their sample
/// covariance.
///
/// Coordinates are mean-centered. Each component's sign is chosen so that its
/// largest-magnitude coordinate is positive (ties go to the lowest index).
/// Missing components (fewer than three points, or rank below two) are zero.
pub fn reduce<V: AsRef<[f64]>>(points: &[V]) -> Vec<[f64; 2]> {
    let n = points.len();
    if n == 0 {
        return Vec::new();
    }
    let d = points[0].as_ref().len();
    let mut mean = vec![0.0; d];
    for p in points {
        mean.iter_mut().zip(p.as_ref()).for_each(|(m, x)| *m += x);
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let centered: Vec<Vec<f64>> = points
        .iter()
        .map(|p| p.as_ref().iter().zip(&mean).map(|(x, m)| x - m).collect())
        .collect();

    // Scores per component, one entry per point.
    let mut scores: Vec<(f64, Vec<f64>)> = if n <= d {
        // Gram route: X X^T u = s^2 u and X v = s u.
        let mut gram = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let g = crate::embed::dot(&centered[i], &centered[j]);
                gram[i * n + j] = g;
                gram[j * n + i] = g;
            }
        }
        let (values, vectors) = symmetric_eigen(&gram, n);
        values
            .into_iter()
            .zip(vectors)
            .take(2)
            .map(|(lambda, u)| {
                let s = libm::sqrt(lambda.max(0.0));
                (lambda, u.into_iter().map(|x| x * s).collect())
            })
            .collect()
    } else {
        let mut cov = vec![0.0; d * d];
        for row in &centered {
            for i in 0..d {
                if row[i] == 0.0 {
                    continue;
                }
                for j in i..d {
                    cov[i * d + j] += row[i] * row[j];
                }
            }
        }
        for i in 0..d {
            for j in 0..i {
                cov[i * d + j] = cov[j * d + i];
            }
        }
        let (values, vectors) = symmetric_eigen(&cov, d);
        values
            .into_iter()
            .zip(vectors)
            .take(2)
            .map(|(lambda, v)| {
                (lambda, centered.iter().map(|row| crate::embed::dot(row, &v)).collect())
            })
            .collect()
    };

    let lead = scores.first().map(|s| s.0).unwrap_or(0.0);
    for (lambda, comp) in scores.iter_mut() {
        if lead <= 0.0 || *lambda <= lead * RANK_TOLERANCE || n < 2 {
            comp.iter_mut().for_each(|x| *x = 0.0);
            continue;
        }
        orient(comp);
    }
    (0..n)
        .map(|i| {
            [
                scores.first().map(|s| s.1[i]).unwrap_or(0.0),
                scores.get(1).map(|s| s.1[i]).unwrap_or(0.0),
            ]
        })
        .collect()
}

/// Flips `comp` so its largest-magnitude entry is positive.
pub(crate) fn orient(comp: &mut [f64]) {
    let mut best = 0;
    for (i, x) in comp.iter().enumerate() {
        if x.abs() > comp[best].abs() {
            best = i;
        }
    }
    if comp.get(best).is_some_and(|x| *x < 0.0) {
        comp.iter_mut().for_each(|x| *x = -*x);
    }
}
