//! Property tests for the discrete dynamics: projective equivariance and
//! agreement of direct and graph-based steps.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vecrel::dynamics_drivers::{
    pentagram_face_weight, pentagram_step, pentagram_step_via_graph, qnet_gentrify, random_polygon,
    random_qnet_cube, QNetCube,
};
use vecrel::exact_linalg::random_invertible;
use vecrel::{Matrix, ProjectivePoint};

fn moved(points: &[ProjectivePoint], m: &Matrix) -> Vec<ProjectivePoint> {
    points.iter().map(|p| p.transform(m).unwrap()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn pentagram_is_projectively_equivariant(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(5..=8);
        let poly = random_polygon(&mut rng, n);
        let m = random_invertible(&mut rng, 3);
        let Ok(image) = pentagram_step(&poly) else { return Ok(()) };
        let Ok(moved_image) = pentagram_step(&moved(&poly, &m)) else { return Ok(()) };
        prop_assert_eq!(moved_image, moved(&image, &m));
    }

    #[test]
    fn pentagram_face_weights_are_projective_invariants(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(5..=8);
        let poly = random_polygon(&mut rng, n);
        let other = moved(&poly, &random_invertible(&mut rng, 3));
        for i in 0..n {
            if let (Ok(a), Ok(b)) = (pentagram_face_weight(&poly, i), pentagram_face_weight(&other, i)) {
                prop_assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn pentagram_graph_step_matches_the_direct_step(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(5..=6);
        let poly = random_polygon(&mut rng, n);
        if let (Ok(a), Ok(b)) = (pentagram_step(&poly), pentagram_step_via_graph(&poly)) {
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn qnet_step_is_projectively_equivariant(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cube = random_qnet_cube(&mut rng);
        let dim = cube.points.values().next().unwrap().coords().len();
        let m = random_invertible(&mut rng, dim);
        let other = QNetCube { points: cube.points.iter().map(|(s, p)| (*s, p.transform(&m).unwrap())).collect() };
        let Ok(a) = qnet_gentrify(&cube) else { return Ok(()) };
        prop_assert_eq!(qnet_gentrify(&other).unwrap(), a.transform(&m).unwrap());
    }
}
