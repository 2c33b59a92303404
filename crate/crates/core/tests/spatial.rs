use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use streamgov::spatial::*;

fn australian_point(rng: &mut ChaCha8Rng) -> LatLon<f64> {
    [rng.random_range(-43.5..-10.5), rng.random_range(113.0..153.7)]
}

/// Great-circle distance by the spherical law of cosines.
fn cosine_law(a: LatLon<f64>, b: LatLon<f64>) -> f64 {
    let (p1, p2) = (a[0].to_radians(), b[0].to_radians());
    let dl = (b[1] - a[1]).to_radians();
    let c = (p1.sin() * p2.sin() + p1.cos() * p2.cos() * dl.cos()).clamp(-1.0, 1.0);
    EARTH_RADIUS_KM * c.acos()
}

fn blobs(rng: &mut ChaCha8Rng, per_blob: usize, radius: f64) -> (Vec<LatLon<f64>>, Vec<usize>) {
    let centres = [[-35.0, 147.0], [-31.0, 117.0], [-19.0, 134.0]];
    let mut points = Vec::new();
    let mut truth = Vec::new();
    for (c, centre) in centres.iter().enumerate() {
        for _ in 0..per_blob {
            let r = radius * rng.random::<f64>().sqrt();
            let theta = rng.random_range(0.0..std::f64::consts::TAU);
            points.push([centre[0] + r * theta.sin(), centre[1] + r * theta.cos()]);
            truth.push(c);
        }
    }
    (points, truth)
}

fn same_partition(a: &[usize], b: &[usize]) -> bool {
    (0..a.len()).all(|i| (0..a.len()).all(|j| (a[i] == a[j]) == (b[i] == b[j])))
}

#[test]
fn haversine_is_a_metric_on_australian_triples() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..1000 {
        let (a, b, c) = (australian_point(&mut rng), australian_point(&mut rng), australian_point(&mut rng));
        let (ab, ba) = (geodesic_distance(a, b), geodesic_distance(b, a));
        assert_eq!(ab, ba);
        assert_eq!(geodesic_distance(a, a), 0.0);
        assert!(geodesic_distance(a, c) <= ab + geodesic_distance(b, c) + 1e-9);
        let reference = cosine_law(a, b);
        assert!((ab - reference).abs() < 1e-6 * reference.max(1.0), "{ab} vs {reference}");
    }
}

#[test]
fn geodesic_matrix_is_symmetric_with_zero_diagonal() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let points: Vec<LatLon<f64>> = (0..15).map(|_| australian_point(&mut rng)).collect();
    let m = geodesic_matrix(&points);
    for i in 0..15 {
        assert_eq!(m[(i, i)], 0.0);
        for j in 0..15 {
            assert_eq!(m[(i, j)], m[(j, i)]);
            assert_eq!(m[(i, j)], geodesic_distance(points[i], points[j]));
        }
    }
}

#[test]
fn elbow_finds_three_blobs() {
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let (points, truth) = blobs(&mut rng, 25, 0.5);
        let elbow = elbow_select(&points, 1..=8, seed).unwrap();
        assert_eq!(elbow.selected_k, 3, "seed {seed}: {:?}", elbow.curve);
        assert!(same_partition(&elbow.selected().labels, &truth));
        assert!(elbow.curve.windows(2).all(|w| w[1].1 <= w[0].1));
        for run in &elbow.runs {
            assert!(run.inertia_history.windows(2).all(|w| w[1] <= w[0]), "{:?}", run.inertia_history);
        }
    }
}

#[test]
fn kmeans_is_bit_reproducible() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let points: Vec<LatLon<f64>> = (0..200).map(|_| australian_point(&mut rng)).collect();
    let a = kmeans(&points, 5, 99, DEFAULT_MAX_ITERS).unwrap();
    let b = kmeans(&points, 5, 99, DEFAULT_MAX_ITERS).unwrap();
    assert_eq!(a, b);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let c = pool.install(|| elbow_select(&points, 1..=6, 7).unwrap());
    let d = elbow_select(&points, 1..=6, 7).unwrap();
    assert_eq!(c, d);
}

#[test]
fn partition_invariant_under_relabeling() {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let (points, _) = blobs(&mut rng, 20, 0.5);
    let n = points.len();
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        perm.swap(i, rng.random_range(0..=i));
    }
    let permuted: Vec<LatLon<f64>> = perm.iter().map(|&i| points[i]).collect();
    let a = best_of_restarts(&points, 3, 5, DEFAULT_MAX_ITERS).unwrap();
    let b = best_of_restarts(&permuted, 3, 5, DEFAULT_MAX_ITERS).unwrap();
    let mapped: Vec<usize> = {
        let mut m = vec![0; n];
        for (k, &i) in perm.iter().enumerate() {
            m[i] = b.labels[k];
        }
        m
    };
    assert!(same_partition(&a.labels, &mapped));
    assert!((a.inertia - b.inertia).abs() < 1e-9 * a.inertia);
}

#[test]
fn rejects_bad_ranges() {
    let pts = vec![[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]];
    assert!(kmeans(&pts, 0, 0, 10).is_err());
    assert!(kmeans(&pts, 4, 0, 10).is_err());
    assert!(elbow_select(&pts, 1..=2, 0).is_err());
    assert!(elbow_select(&pts, 1..=4, 0).is_err());
}
