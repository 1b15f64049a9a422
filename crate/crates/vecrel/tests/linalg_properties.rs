//! Property tests for exact linear algebra and projective geometry.

use proptest::prelude::*;
use vecrel::exact_linalg::{
    format_scalar, intersect, multi_ratio, parse_scalar, q, qf, ProjectivePoint, Subspace,
};
use vecrel::{Matrix, Scalar, Vector};

fn scalar() -> impl Strategy<Value = Scalar> {
    (-30i64..=30, 1i64..=12).prop_map(|(n, d)| qf(n, d))
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-6i64..=6, rows * cols).prop_map(move |xs| {
        let rows_v: Vec<Vector> = xs.chunks(cols).map(|r| r.iter().map(|&x| q(x)).collect()).collect();
        Matrix::from_rows_with_width(rows_v, cols).unwrap()
    })
}

fn vectors(k: usize, count: usize) -> impl Strategy<Value = Vec<Vector>> {
    prop::collection::vec(prop::collection::vec(-4i64..=4, k), count)
        .prop_map(|vs| vs.into_iter().map(|v| v.into_iter().map(q).collect()).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scalar_strings_round_trip(x in scalar()) {
        prop_assert_eq!(parse_scalar(&format_scalar(&x)).unwrap(), x);
    }

    #[test]
    fn determinant_is_multiplicative(a in matrix(3, 3), b in matrix(3, 3)) {
        let ab = a.mul(&b).unwrap();
        prop_assert_eq!(ab.det().unwrap(), a.det().unwrap() * b.det().unwrap());
    }

    #[test]
    fn rank_nullity(a in matrix(3, 5)) {
        let ker = a.kernel();
        prop_assert_eq!(a.rank() + ker.len(), 5);
        for v in &ker {
            prop_assert!(a.mul_vec(v).unwrap().iter().all(|x| *x == q(0)));
        }
    }

    #[test]
    fn rref_is_a_row_space_invariant(a in matrix(3, 5), m in matrix(3, 3)) {
        prop_assume!(m.det().unwrap() != q(0));
        let (r, _) = a.rref();
        prop_assert_eq!(&r.rref().0, &r);
        prop_assert_eq!(m.mul(&a).unwrap().rref().0, r);
    }

    #[test]
    fn inverse_is_two_sided(a in matrix(4, 4)) {
        prop_assume!(a.det().unwrap() != q(0));
        let inv = a.inverse().unwrap();
        prop_assert_eq!(a.mul(&inv).unwrap(), Matrix::identity(4));
        prop_assert_eq!(inv.mul(&a).unwrap(), Matrix::identity(4));
    }

    #[test]
    fn dimension_formula(u in vectors(5, 3), v in vectors(5, 3)) {
        let (u, v) = (Subspace::span(5, &u), Subspace::span(5, &v));
        let meet = intersect(&u, &v);
        prop_assert_eq!(u.sum(&v).dim() + meet.dim(), u.dim() + v.dim());
        prop_assert!(meet.is_subspace_of(&u) && meet.is_subspace_of(&v));
    }

    #[test]
    fn orthogonal_complement_is_an_involution(u in vectors(4, 2)) {
        let s = Subspace::span(4, &u);
        let c = s.orthogonal_complement();
        prop_assert_eq!(c.dim() + s.dim(), 4);
        prop_assert_eq!(c.orthogonal_complement(), s);
    }

    #[test]
    fn multi_ratio_symmetries(ts in prop::collection::btree_set(-20i64..=20, 6), m in matrix(2, 2)) {
        // Six distinct points of a projective line.
        let pts: Vec<ProjectivePoint> = ts.iter().map(|&t| ProjectivePoint::new(vec![q(t), q(1)]).unwrap()).collect();
        let mr = multi_ratio(&pts).unwrap();
        let mut shifted = pts.clone();
        shifted.rotate_left(1);
        prop_assert_eq!(multi_ratio(&shifted).unwrap() * &mr, q(1));
        prop_assume!(m.det().unwrap() != q(0));
        let moved: Vec<ProjectivePoint> = pts.iter().map(|p| p.transform(&m).unwrap()).collect();
        prop_assert_eq!(multi_ratio(&moved).unwrap(), mr);
    }

    #[test]
    fn projective_points_ignore_scaling(v in prop::collection::vec(-9i64..=9, 3), c in scalar()) {
        prop_assume!(v.iter().any(|&x| x != 0) && c != q(0));
        let v: Vector = v.into_iter().map(q).collect();
        let scaled: Vector = v.iter().map(|x| x * &c).collect();
        prop_assert_eq!(ProjectivePoint::new(v).unwrap(), ProjectivePoint::new(scaled).unwrap());
    }
}
