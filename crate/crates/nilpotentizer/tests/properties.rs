use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

use nilpotentizer::gh::{distortion, euclidean_matrix, PointedNet};
use nilpotentizer::grassmann::{dilate_subspace, dilated_kernel, gap_distance, kernel, Subspace, DEFAULT_RANK_TOL};
use nilpotentizer::liealg::GradedLieAlgebra;
use nilpotentizer::vfields::{build_natural_map, SubRiemannianStructure};

fn rational() -> impl Strategy<Value = BigRational> {
    (-6i64..=6, 1i64..=4).prop_map(|(n, d)| BigRational::new(BigInt::from(n), BigInt::from(d)))
}

fn free3() -> GradedLieAlgebra {
    GradedLieAlgebra::free_nilpotent(2, &[1, 1], 3).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bch_is_associative(u in prop::collection::vec(rational(), 5),
                          v in prop::collection::vec(rational(), 5),
                          w in prop::collection::vec(rational(), 5)) {
        let a = free3();
        let left = a.bch_product(&a.bch_product(&u, &v).unwrap(), &w).unwrap();
        let right = a.bch_product(&u, &a.bch_product(&v, &w).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn bch_inverse_is_negation(u in prop::collection::vec(rational(), 5)) {
        let a = free3();
        let neg: Vec<BigRational> = u.iter().map(|x| -x.clone()).collect();
        let e = a.bch_product(&u, &neg).unwrap();
        prop_assert!(e.iter().all(|x| *x == BigRational::from_integer(0.into())));
    }

    #[test]
    fn dilation_is_a_group_automorphism(u in prop::collection::vec(rational(), 3),
                                        v in prop::collection::vec(rational(), 3),
                                        l in (1i64..=6, 1i64..=4).prop_map(|(n, d)| BigRational::new(BigInt::from(n), BigInt::from(d)))) {
        let a = GradedLieAlgebra::heisenberg();
        let lhs = a.dilate_exact(&l, &a.bch_product(&u, &v).unwrap()).unwrap();
        let rhs = a.bch_product(&a.dilate_exact(&l, &u).unwrap(), &a.dilate_exact(&l, &v).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn quasi_norm_is_homogeneous(v in prop::collection::vec(-3.0f64..3.0, 5), l in 0.01f64..100.0) {
        let a = free3();
        let q = a.quasi_norm(&v).unwrap();
        let ql = a.quasi_norm(&a.dilate(l, &v).unwrap()).unwrap();
        prop_assert!((ql - l * q).abs() <= 1e-12 * (1.0 + l * q));
    }

    #[test]
    fn gap_is_a_symmetric_metric(a in prop::collection::vec(-1.0f64..1.0, 8),
                                 b in prop::collection::vec(-1.0f64..1.0, 8),
                                 c in prop::collection::vec(-1.0f64..1.0, 8)) {
        let sp = |v: &[f64]| Subspace::span(4, &[v[..4].to_vec(), v[4..].to_vec()], 1e-9).unwrap();
        let (sa, sb, sc) = (sp(&a), sp(&b), sp(&c));
        prop_assume!(sa.dim() == 2 && sb.dim() == 2 && sc.dim() == 2);
        let ab = gap_distance(&sa, &sb).unwrap();
        prop_assert!((ab - gap_distance(&sb, &sa).unwrap()).abs() < 1e-12);
        prop_assert!(gap_distance(&sa, &sa).unwrap() < 1e-12);
        prop_assert!(ab <= gap_distance(&sa, &sc).unwrap() + gap_distance(&sc, &sb).unwrap() + 1e-12);
    }

    #[test]
    fn dilated_kernel_matches_dilating_the_kernel(x in -1.0f64..1.0, y in -1.0f64..1.0, e in -3.0f64..0.0) {
        let nm = build_natural_map(&SubRiemannianStructure::grushin(3)).unwrap();
        let t = 10f64.powf(e);
        let direct = dilated_kernel(&nm, &[x, y], t, DEFAULT_RANK_TOL).unwrap();
        let k = kernel(&nm.natural_at(&[x, y], 1.0).unwrap(), DEFAULT_RANK_TOL);
        let via = dilate_subspace(1.0 / t, &k, nm.algebra().weights()).unwrap();
        prop_assert!(gap_distance(&direct, &via).unwrap() < 1e-8);
    }

    #[test]
    fn dilation_of_subspaces_composes(v in prop::collection::vec(-1.0f64..1.0, 10), a in 0.1f64..10.0, b in 0.1f64..10.0) {
        let w = free3().weights().to_vec();
        let s = Subspace::span(5, &[v[..5].to_vec(), v[5..].to_vec()], 1e-9).unwrap();
        prop_assume!(s.dim() == 2);
        let ab = dilate_subspace(a, &dilate_subspace(b, &s, &w).unwrap(), &w).unwrap();
        let direct = dilate_subspace(a * b, &s, &w).unwrap();
        prop_assert!(gap_distance(&ab, &direct).unwrap() < 1e-8);
    }

    #[test]
    fn distortion_of_isometric_copies_vanishes(pts in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 2), 3..8),
                                               shift in prop::collection::vec(-5.0f64..5.0, 2)) {
        let moved: Vec<Vec<f64>> = pts.iter().map(|p| vec![p[0] + shift[0], p[1] + shift[1]]).collect();
        let a = PointedNet::from_matrix(pts.clone(), 0, 2.0, euclidean_matrix(&pts)).unwrap();
        let b = PointedNet::from_matrix(moved.clone(), 0, 2.0, euclidean_matrix(&moved)).unwrap();
        prop_assert!(distortion(&a, &b).unwrap() < 1e-12);
        prop_assert!((distortion(&a, &b).unwrap() - distortion(&b, &a).unwrap()).abs() < 1e-15);
    }
}

#[test]
fn distortion_rejects_mismatched_nets() {
    let p = vec![vec![0.0, 0.0], vec![1.0, 0.0]];
    let q = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
    let a = PointedNet::from_matrix(p.clone(), 0, 1.0, euclidean_matrix(&p)).unwrap();
    let b = PointedNet::from_matrix(q.clone(), 0, 1.0, euclidean_matrix(&q)).unwrap();
    assert!(distortion(&a, &b).is_err());
}

#[test]
fn kernel_of_zero_map_is_everything() {
    let k = kernel(&DMatrix::zeros(2, 3), 1e-9);
    assert_eq!(k.dim(), 3);
}
