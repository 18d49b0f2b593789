mod common;

use std::sync::Arc;

use common::*;
use fell_core::action_space::{balanced_product, verify_equivalence, verify_preequivalence, GroupoidEquivalence};
use fell_core::equiv_bundle::{opposite_bundle, verify_equivalence_bundle, BimoduleBundle};
use fell_core::gen;
use fell_core::groupoid::{make_pair_groupoid, verify_groupoid};
use fell_core::io::{emit_instance, parse_instance};
use fell_core::linalg::{gram_quotient, CVec, GramData};
use fell_core::tensor_compose::TensorBundle;
use fell_core::C;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn dims(max_units: usize, max_dim: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1..=max_dim, 1..=max_units)
}

fn unit(n: usize, i: usize) -> CVec<f64> {
    let mut v = CVec::zeros(n);
    v[i] = C::new(1.0, 0.0);
    v
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn pair_groupoids_satisfy_the_groupoid_laws(n in 1usize..6) {
        let g = make_pair_groupoid(n).unwrap();
        prop_assert!(verify_groupoid(&g).passed());
        for a in g.arrows() {
            prop_assert_eq!(g.inv(g.inv(a)), a);
            prop_assert_eq!(g.comp(a, g.inv(a)), Some(g.rng(a)));
        }
    }

    #[test]
    fn balanced_pair_products_have_one_class_per_outer_pair(na in 1usize..5, nb in 1usize..5, nc in 1usize..5) {
        let (a, b, c) = (node(&vec![1; na]), node(&vec![1; nb]), node(&vec![1; nc]));
        let (x, y) = (pair_eq(&a, &b), pair_eq(&b, &c));
        let bp = balanced_product(&x, &y).unwrap();
        prop_assert!(verify_preequivalence(&bp.fibre.pre).passed());
        prop_assert!(verify_equivalence(bp.equivalence().pre()).passed());
        prop_assert_eq!(bp.quotient.reps.len(), na * nc);
        prop_assert_eq!(orbit_count(&x, &y), na * nc);
        // the projection is constant exactly along the middle coordinate
        for (z, &(p, q)) in bp.fibre.pairs.iter().enumerate() {
            let class = bp.quotient.projection[z];
            prop_assert_eq!(class, bp.class_of(p, q).unwrap());
        }
    }

    #[test]
    fn canonical_bundles_are_equivalences_with_coinciding_norms(da in dims(3, 3), db in dims(3, 3)) {
        let (a, b) = (node(&da), node(&db));
        let m = canonical(&pair_eq(&a, &b), &a, &b);
        let r = verify_equivalence_bundle(&m);
        prop_assert!(r.passed(), "{}", r);
        for x in m.base().space().points() {
            for i in 0..m.fibre_dim(x) {
                let e = unit(m.fibre_dim(x), i);
                let l = m.inner_left(x, &e, x, &e).unwrap();
                let rr = m.inner_right(x, &e, x, &e).unwrap();
                prop_assert!(min_eig(&l) > -1e-9 && min_eig(&rr) > -1e-9);
                prop_assert!((op(&l) - op(&rr)).abs() < 1e-9);
                prop_assert!((op(&l) - m.norm(x, &e).unwrap().powi(2)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn opposite_twice_is_the_identity(da in dims(3, 3), db in dims(3, 3)) {
        let (a, b) = (node(&da), node(&db));
        let m = canonical(&pair_eq(&a, &b), &a, &b);
        let back = opposite_bundle(&opposite_bundle(&m));
        for x in m.base().space().points() {
            for (p, q) in m.fibre(x).basis().iter().zip(back.fibre(x).basis()) {
                prop_assert!((p - q).norm() < 1e-12);
            }
        }
        prop_assert!(verify_equivalence_bundle(&opposite_bundle(&m)).passed());
    }

    #[test]
    fn gram_quotient_recovers_rank_and_is_isometric(n in 1usize..7, r in 0usize..7, seed in any::<u64>()) {
        let r = r.min(n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_mat(&mut rng, r, n);
        let gram = f.adjoint() * &f;
        let q = gram_quotient(&GramData { labels: vec![], gram: gram.clone(), tol: 1e-10 }).unwrap();
        prop_assert_eq!(q.dim, r);
        let iso = q.lift.adjoint() * &gram * &q.lift;
        for i in 0..r {
            for j in 0..r {
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((iso[(i, j)] - C::new(want, 0.0)).norm() < 1e-8);
            }
        }
        // null vectors have zero quotient coordinates
        for k in 0..q.null_basis.ncols() {
            let v = q.null_basis.column(k).into_owned();
            prop_assert!(q.coords(&v).norm() < 1e-6);
        }
    }

    #[test]
    fn tensor_fibres_of_full_bundles_are_full(da in dims(2, 3), db in dims(2, 3), dc in dims(2, 3)) {
        let ch = pair_chain(&da, &db, &dc);
        let (m, n) = ch.shared();
        let k = TensorBundle::new(m, n).unwrap();
        for f in k.fibres() {
            let (x, y) = (f.x, f.y);
            let rows = da[ch.m.base().space().r(x) / da.len()];
            let cols = dc[ch.n.base().space().s(y) / dc.len()];
            prop_assert_eq!(f.dim(), rows * cols);
            prop_assert!(f.isometry_residual() < 1e-9);
        }
    }

    #[test]
    fn seeded_documents_round_trip(seed in any::<u64>()) {
        let doc = gen::random_dims(seed, 3, 3).unwrap();
        let text = emit_instance(&doc);
        prop_assert_eq!(parse_instance(&text).unwrap(), doc.clone());
        prop_assert_eq!(emit_instance(&gen::random_dims(seed, 3, 3).unwrap()), text);
    }
}

#[test]
fn self_balanced_identity_equivalence_collapses_to_itself() {
    let g = Arc::new(make_pair_groupoid(3).unwrap());
    let e = GroupoidEquivalence::identity(g).unwrap();
    let bp = balanced_product(&e, &e).unwrap();
    assert_eq!(bp.quotient.reps.len(), 9);
}
