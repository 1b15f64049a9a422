//! Property tests for local moves.

use std::collections::BTreeMap;

use num_traits::One;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vecrel::boundary_maps::restrict_phi;
use vecrel::config_core::{configuration_from_coeffs, Configuration};
use vecrel::exact_linalg::random_nonzero;
use vecrel::fixtures;
use vecrel::local_moves::{
    add_degree2_black, face_correspondence, remove_degree2, urban_renewal_with_map, y_mutation, Split,
};
use vecrel::surface_graph::{Color, SurfaceGraph};
use vecrel::Scalar;

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

fn quad_faces(g: &SurfaceGraph) -> Vec<usize> {
    g.internal_faces().into_iter().filter(|&f| g.faces()[f].len() == 4).collect()
}

fn sorted_weights(c: &Configuration) -> Vec<Scalar> {
    let mut ws: Vec<Scalar> = c.face_weights().unwrap().into_values().collect();
    ws.sort();
    ws
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn renewal_keeps_the_boundary_point_and_mutates_face_weights(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for g in graphs() {
            let faces = quad_faces(&g);
            let f = faces[rng.gen_range(0..faces.len())];
            let c = circuit_config(&g, &mut rng);
            // Renewal is singular exactly when the face weight is −1.
            if c.face_weight(f).unwrap() == -Scalar::one() {
                continue;
            }
            let (d, map) = urban_renewal_with_map(&c, f).unwrap();
            prop_assert!(restrict_phi(&d).unwrap().same_point(&restrict_phi(&c).unwrap()));
            let predicted = y_mutation(&g, &c.face_weights().unwrap(), f).unwrap();
            let corr = face_correspondence(&g, d.graph(), &map);
            let actual = d.face_weights().unwrap();
            let mut mapped = BTreeMap::new();
            for (old, y) in predicted {
                if let Some(new) = corr.get(&old).filter(|n| actual.contains_key(n)) {
                    mapped.insert(*new, y);
                }
            }
            prop_assert!(!mapped.is_empty());
            for (f, y) in &mapped {
                prop_assert_eq!(y, &actual[f]);
            }
        }
    }

    #[test]
    fn degree_two_insertion_is_undone_by_removal(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for g in graphs() {
            let c = circuit_config(&g, &mut rng);
            let whites: Vec<_> = g.internal_whites().into_iter().filter(|&w| g.degree(w) >= 2).collect();
            let w = whites[rng.gen_range(0..whites.len())];
            let deg = g.degree(w);
            let split = Split { start: rng.gen_range(0..deg), len: rng.gen_range(1..deg) };
            let d = add_degree2_black(&c, w, split).unwrap();
            prop_assert!(restrict_phi(&d).unwrap().same_point(&restrict_phi(&c).unwrap()));
            prop_assert_eq!(sorted_weights(&d), sorted_weights(&c));
            let new_black = (g.n_vertices()..d.graph().n_vertices())
                .find(|&v| d.graph().color(v) == Color::Black)
                .unwrap();
            let e = remove_degree2(&d, new_black).unwrap();
            prop_assert_eq!(e.graph().n_vertices(), g.n_vertices());
            prop_assert!(restrict_phi(&e).unwrap().same_point(&restrict_phi(&c).unwrap()));
            prop_assert_eq!(sorted_weights(&e), sorted_weights(&c));
        }
    }
}
