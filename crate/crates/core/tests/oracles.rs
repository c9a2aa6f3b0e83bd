use field_atlas_core::etm::{compare_dtw, compare_frechet, reduce, symmetric_eigen};
use field_atlas_core::fixture;
use field_atlas_core::geo::haversine;
use field_atlas_oracles as oracle;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn random_points(rng: &mut StdRng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect()
}

fn random_path(rng: &mut StdRng, len: usize) -> Vec<[f64; 2]> {
    (0..len)
        .map(|_| [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)])
        .collect()
}

#[test]
fn reduce_matches_covariance_eigendecomposition() {
    let mut rng = StdRng::seed_from_u64(0x5eed_0001);
    for case in 0..50 {
        let pts = random_points(&mut rng, 10, 16);
        let ours = reduce(&pts);
        let reference = oracle::pca_scores(&pts);
        for (i, (a, b)) in ours.iter().zip(&reference).enumerate() {
            for k in 0..2 {
                assert!(
                    (a[k] - b[k]).abs() <= 1e-6,
                    "case {case} point {i} component {k}: {} vs {}",
                    a[k],
                    b[k]
                );
            }
        }
    }
}

#[test]
fn reduce_covariance_route_matches_too() {
    // More points than dimensions exercises the d×d path.
    let mut rng = StdRng::seed_from_u64(0x5eed_0002);
    for _ in 0..20 {
        let pts = random_points(&mut rng, 24, 6);
        let ours = reduce(&pts);
        let reference = oracle::pca_scores(&pts);
        for (a, b) in ours.iter().zip(&reference) {
            assert!((a[0] - b[0]).abs() <= 1e-6 && (a[1] - b[1]).abs() <= 1e-6);
        }
    }
}

#[test]
fn jacobi_reconstructs_matrix() {
    let mut rng = StdRng::seed_from_u64(7);
    let n = 9;
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let x: f64 = rng.random_range(-2.0..2.0);
            m[i * n + j] = x;
            m[j * n + i] = x;
        }
    }
    let (values, vectors) = symmetric_eigen(&m, n);
    assert!(values.windows(2).all(|w| w[0] >= w[1]));
    for i in 0..n {
        for j in 0..n {
            let r: f64 = (0..n).map(|k| values[k] * vectors[k][i] * vectors[k][j]).sum();
            assert!((r - m[i * n + j]).abs() < 1e-10);
        }
    }
}

#[test]
fn frechet_matches_recursive_definition_exactly() {
    let mut rng = StdRng::seed_from_u64(0x5eed_0003);
    for _ in 0..100 {
        let (n, m) = (rng.random_range(1..=6), rng.random_range(1..=6));
        let a = random_path(&mut rng, n);
        let b = random_path(&mut rng, m);
        assert_eq!(compare_frechet(&a, &b).unwrap(), oracle::frechet_recursive(&a, &b));
    }
}

#[test]
fn dtw_matches_path_enumeration() {
    let mut rng = StdRng::seed_from_u64(0x5eed_0004);
    for _ in 0..100 {
        let a = random_path(&mut rng, 3);
        let b = random_path(&mut rng, 3);
        let ours = compare_dtw(&a, &b).unwrap();
        let reference = oracle::dtw_enumerate(&a, &b);
        assert!((ours - reference).abs() <= 1e-12 * reference.max(1.0), "{ours} vs {reference}");
    }
    // Uneven lengths as well.
    for (n, m) in [(1, 3), (2, 4), (4, 2)] {
        let a = random_path(&mut rng, n);
        let b = random_path(&mut rng, m);
        let ours = compare_dtw(&a, &b).unwrap();
        assert!((ours - oracle::dtw_enumerate(&a, &b)).abs() <= 1e-12 * ours.max(1.0));
    }
}

#[test]
fn haversine_within_half_percent_of_geodesic() {
    let met = fixture::met_gallery_760();
    let lincoln = fixture::lincoln_memorial();
    let h = haversine(&met, &lincoln);
    let v = oracle::vincenty_m(met.lat, met.lon, lincoln.lat, lincoln.lon);
    assert!((h - v).abs() / v < 0.005, "haversine {h} vs geodesic {v}");
    assert!(h > 300_000.0 && h < 350_000.0);
}
