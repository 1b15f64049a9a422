//! Property tests for vector-relation configurations.

use num_traits::Zero;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vecrel::config_core::{configuration_from_coeffs, face_weight_projective, random_gauge, Configuration};
use vecrel::exact_linalg::{random_invertible, random_nonzero};
use vecrel::fixtures;
use vecrel::surface_graph::SurfaceGraph;

fn graphs() -> Vec<SurfaceGraph> {
    vec![fixtures::gr36().graph, fixtures::gr24().graph]
}

fn circuit_config(g: &SurfaceGraph, rng: &mut ChaCha8Rng) -> Configuration {
    loop {
        let coeffs = (0..g.n_edges()).map(|_| random_nonzero(rng)).collect();
        if let Ok(c) = configuration_from_coeffs(g, coeffs, None) {
            if c.is_circuit_configuration() {
                return c;
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn every_relation_holds(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for g in graphs() {
            let c = circuit_config(&g, &mut rng);
            for b in g.blacks() {
                prop_assert!(c.relation_value(b).iter().all(|x| x.is_zero()));
            }
        }
    }

    #[test]
    fn face_weights_ignore_gauge_and_linear_maps(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for g in graphs() {
            let c = circuit_config(&g, &mut rng);
            let before = c.face_weights().unwrap();
            let gauged = random_gauge(&c, &mut rng);
            prop_assert_eq!(&gauged.face_weights().unwrap(), &before);
            let moved = c.transform(&random_invertible(&mut rng, c.k())).unwrap();
            prop_assert_eq!(&moved.face_weights().unwrap(), &before);
        }
    }

    #[test]
    fn face_weights_from_points(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for g in graphs() {
            let c = circuit_config(&g, &mut rng);
            for f in g.internal_faces() {
                let pts = c.face_points(f).unwrap();
                prop_assert_eq!(face_weight_projective(&pts).unwrap(), c.face_weight(f).unwrap());
            }
        }
    }

    #[test]
    fn json_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for g in graphs() {
            let c = circuit_config(&g, &mut rng);
            let back = Configuration::from_json(&c.to_json()).unwrap();
            prop_assert_eq!(back.coeffs(), c.coeffs());
            prop_assert_eq!(back.vectors(), c.vectors());
            prop_assert_eq!(back.to_json(), c.to_json());
        }
    }
}
