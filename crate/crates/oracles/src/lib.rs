//! Reference implementations written for clarity rather than speed. They
//! share no code with the engine so the test suites can check it against
//! them.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;

/// Inverse geodesic on the WGS-84 ellipsoid by Vincenty's iteration, in meters.
pub fn vincenty_m(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let a = 6_378_137.0_f64;
    let f = 1.0 / 298.257_223_563;
    let b = a * (1.0 - f);
    let l = (lon2 - lon1).to_radians();
    let u1 = ((1.0 - f) * lat1.to_radians().tan()).atan();
    let u2 = ((1.0 - f) * lat2.to_radians().tan()).atan();
    let (su1, cu1) = u1.sin_cos();
    let (su2, cu2) = u2.sin_cos();
    let mut lambda = l;
    for _ in 0..200 {
        let (sl, cl) = lambda.sin_cos();
        let sin_sigma = ((cu2 * sl).powi(2) + (cu1 * su2 - su1 * cu2 * cl).powi(2)).sqrt();
        if sin_sigma == 0.0 {
            return 0.0;
        }
        let cos_sigma = su1 * su2 + cu1 * cu2 * cl;
        let sigma = sin_sigma.atan2(cos_sigma);
        let sin_alpha = cu1 * cu2 * sl / sin_sigma;
        let cos2_alpha = 1.0 - sin_alpha * sin_alpha;
        let cos_2sm = if cos2_alpha == 0.0 { 0.0 } else { cos_sigma - 2.0 * su1 * su2 / cos2_alpha };
        let c = f / 16.0 * cos2_alpha * (4.0 + f * (4.0 - 3.0 * cos2_alpha));
        let prev = lambda;
        lambda = l
            + (1.0 - c)
                * f
                * sin_alpha
                * (sigma + c * sin_sigma * (cos_2sm + c * cos_sigma * (-1.0 + 2.0 * cos_2sm * cos_2sm)));
        if (lambda - prev).abs() < 1e-12 {
            let u_sq = cos2_alpha * (a * a - b * b) / (b * b);
            let big_a = 1.0 + u_sq / 16384.0 * (4096.0 + u_sq * (-768.0 + u_sq * (320.0 - 175.0 * u_sq)));
            let big_b = u_sq / 1024.0 * (256.0 + u_sq * (-128.0 + u_sq * (74.0 - 47.0 * u_sq)));
            let delta_sigma = big_b
                * sin_sigma
                * (cos_2sm
                    + big_b / 4.0
                        * (cos_sigma * (-1.0 + 2.0 * cos_2sm * cos_2sm)
                            - big_b / 6.0
                                * cos_2sm
                                * (-3.0 + 4.0 * sin_sigma * sin_sigma)
                                * (-3.0 + 4.0 * cos_2sm * cos_2sm)));
            return b * big_a * (sigma - delta_sigma);
        }
    }
    panic!("vincenty did not converge (near-antipodal points)");
}

/// Point distance shared with the engine so that Fréchet values can be
/// compared bit for bit.
pub fn dist2(p: [f64; 2], q: [f64; 2]) -> f64 {
    libm::hypot(p[0] - q[0], p[1] - q[1])
}

/// Discrete Fréchet distance straight from its recursive definition, no memo.
pub fn frechet_recursive(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    fn c(a: &[[f64; 2]], b: &[[f64; 2]], i: usize, j: usize) -> f64 {
        let d = dist2(a[i], b[j]);
        match (i, j) {
            (0, 0) => d,
            (0, _) => c(a, b, 0, j - 1).max(d),
            (_, 0) => c(a, b, i - 1, 0).max(d),
            _ => c(a, b, i - 1, j)
                .min(c(a, b, i - 1, j - 1))
                .min(c(a, b, i, j - 1))
                .max(d),
        }
    }
    c(a, b, a.len() - 1, b.len() - 1)
}

/// Every monotone warping path from (0, 0) to (n-1, m-1).
pub fn warping_paths(n: usize, m: usize) -> Vec<Vec<(usize, usize)>> {
    fn walk(i: usize, j: usize, n: usize, m: usize, path: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
        path.push((i, j));
        if (i, j) == (n - 1, m - 1) {
            out.push(path.clone());
        } else {
            for (di, dj) in [(1, 0), (0, 1), (1, 1)] {
                if i + di < n && j + dj < m {
                    walk(i + di, j + dj, n, m, path, out);
                }
            }
        }
        path.pop();
    }
    let mut out = Vec::new();
    walk(0, 0, n, m, &mut Vec::new(), &mut out);
    out
}

/// DTW as the cheapest of all warping paths, summing Euclidean costs.
pub fn dtw_enumerate(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    warping_paths(a.len(), b.len())
        .iter()
        .map(|p| p.iter().map(|&(i, j)| dist2(a[i], b[j])).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

/// Scores on the top two eigenvectors of the d×d sample covariance, with
/// each component signed so its largest-magnitude score is positive.
pub fn pca_scores(points: &[Vec<f64>]) -> Vec<[f64; 2]> {
    let n = points.len();
    let d = points[0].len();
    let x = DMatrix::from_fn(n, d, |i, j| points[i][j]);
    let mean = x.row_mean();
    let centered = DMatrix::from_fn(n, d, |i, j| x[(i, j)] - mean[j]);
    let cov = centered.transpose() * &centered / (n as f64 - 1.0);
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let mut out = vec![[0.0; 2]; n];
    for (k, &col) in order.iter().take(2).enumerate() {
        let v = eig.eigenvectors.column(col);
        let mut s: Vec<f64> = (0..n).map(|i| centered.row(i).dot(&v.transpose())).collect();
        let lead = s
            .iter()
            .enumerate()
            .fold(0, |best, (i, x)| if x.abs() > s[best].abs() { i } else { best });
        if s[lead] < 0.0 {
            s.iter_mut().for_each(|x| *x = -*x);
        }
        for i in 0..n {
            out[i][k] = s[i];
        }
    }
    out
}

/// Haar-ish random orthogonal matrix: Q of the QR factorization of a
/// Gaussian-like matrix, rows returned as vectors.
pub fn random_orthogonal(d: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let m = DMatrix::from_fn(d, d, |_, _| {
        // Sum of uniforms is close enough to normal for this purpose.
        (0..6).map(|_| rng.random::<f64>()).sum::<f64>() - 3.0
    });
    let q = m.qr().q();
    (0..d).map(|i| q.row(i).iter().copied().collect()).collect()
}

pub fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Minimal card for the linking oracle.
#[derive(Debug, Clone)]
pub struct LinkCard {
    pub id: String,
    pub session: String,
    /// Seconds; only the order matters.
    pub t: i64,
    pub capture: bool,
    pub embedding: Vec<f64>,
}

/// All links as `(from, to, cross_session)` by checking every ordered pair.
///
/// A capture links to each strictly earlier capture (in time, then input
/// order) whose cosine reaches `threshold`, except the latest earlier capture
/// of its own session.
pub fn brute_links(cards: &[LinkCard], threshold: f64) -> Vec<(String, String, bool)> {
    let mut caps: Vec<(usize, &LinkCard)> = cards.iter().filter(|c| c.capture).enumerate().collect();
    caps.sort_by_key(|(i, c)| (c.t, *i));
    let mut out = Vec::new();
    for (pos, (_, from)) in caps.iter().enumerate() {
        let adjacent = caps[..pos].iter().rev().find(|(_, c)| c.session == from.session).map(|(_, c)| &c.id);
        for (_, to) in &caps[..pos] {
            if Some(&to.id) == adjacent {
                continue;
            }
            if cosine(&from.embedding, &to.embedding) >= threshold {
                out.push((from.id.clone(), to.id.clone(), from.session != to.session));
            }
        }
    }
    out.sort();
    out
}
