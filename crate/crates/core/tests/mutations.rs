mod common;

use std::sync::Arc;

use common::*;
use fell_core::action_space::PreEquivalence;
use fell_core::equiv_bundle::{verify_hypoequivalence, Acted, BimoduleBundle, BundleSpace};
use fell_core::fell_bundle::FellBundle;
use fell_core::linalg::{CMat, CVec, MatrixSubspace};
use fell_core::tensor_compose::{verify_hypoequiv_k, TensorBundle};
use fell_core::{Result, Status, C};

/// Negates `⟨e_i, e_j⟩_B` between two chosen basis vectors and leaves everything else alone.
struct SignFlip {
    inner: BundleSpace<f64>,
    at: (usize, usize, usize, usize),
}

fn is_unit_vec(v: &CVec<f64>, i: usize) -> bool {
    v.iter().enumerate().all(|(k, z)| *z == if k == i { C::new(1.0, 0.0) } else { C::new(0.0, 0.0) })
}

impl BimoduleBundle<f64> for SignFlip {
    fn base(&self) -> &PreEquivalence {
        self.inner.base()
    }
    fn left_bundle(&self) -> &FellBundle<f64> {
        self.inner.left_bundle()
    }
    fn right_bundle(&self) -> &FellBundle<f64> {
        self.inner.right_bundle()
    }
    fn tol(&self) -> f64 {
        BimoduleBundle::tol(&self.inner)
    }
    fn fibre_dim(&self, x: usize) -> usize {
        self.inner.fibre_dim(x)
    }
    fn act_left(&self, g: usize, b: &CMat<f64>, x: usize, m: &CVec<f64>) -> Result<Acted<f64>> {
        self.inner.act_left(g, b, x, m)
    }
    fn act_right(&self, x: usize, m: &CVec<f64>, h: usize, c: &CMat<f64>) -> Result<Acted<f64>> {
        self.inner.act_right(x, m, h, c)
    }
    fn inner_left(&self, x1: usize, m1: &CVec<f64>, x2: usize, m2: &CVec<f64>) -> Result<CMat<f64>> {
        let v = self.inner.inner_left(x1, m1, x2, m2)?;
        let (a, i, b, j) = self.at;
        Ok(if (x1, x2) == (a, b) && is_unit_vec(m1, i) && is_unit_vec(m2, j) { -v } else { v })
    }
    fn inner_right(&self, x1: usize, m1: &CVec<f64>, x2: usize, m2: &CVec<f64>) -> Result<CMat<f64>> {
        self.inner.inner_right(x1, m1, x2, m2)
    }
}

#[test]
fn one_flipped_inner_product_sign_fails_adjoint_symmetry() {
    let ch = pair_chain(&[2, 1], &[2], &[1]);
    let m = (*ch.m).clone();
    assert!(verify_hypoequivalence(&m).passed());
    // points 0 and 1 share the single right unit, so they are s-compatible; the second basis
    // vectors of both fibres are matrix units in the same column, so their product is nonzero
    let flipped = SignFlip { inner: m, at: (0, 1, 1, 1) };
    let r = verify_hypoequivalence(&flipped);
    assert_eq!(r.status, Status::AxiomFail, "{r}");
    assert_eq!(r.axiom.as_deref(), Some("FE2.b"));
    let w = r.witness.unwrap();
    assert!(w.tuple == vec![0, 1, 1, 1] || w.tuple == vec![1, 1, 0, 1], "{:?}", w.tuple);
}

#[test]
fn diagonal_sign_flip_is_also_caught() {
    let ch = pair_chain(&[2], &[2], &[1]);
    let flipped = SignFlip { inner: (*ch.m).clone(), at: (0, 1, 0, 1) };
    let r = verify_hypoequivalence(&flipped);
    assert!(!r.passed());
    assert!(r.failed_axioms().iter().any(|a| a.starts_with("FE")), "{r}");
}

#[test]
fn cauchy_schwarz_equality_and_zero_cases_on_m() {
    let ch = pair_chain(&[2, 3], &[3], &[1]);
    let m = &ch.m;
    let d = m.fibre_dim(1);
    let v = CVec::from_fn(d, |i, _| C::new(0.3 * i as f64 - 0.4, 0.1 * i as f64));
    // m′ = m: ‖m‖²·⟨m,m⟩ − ⟨m,m⟩⟨m,m⟩* is PSD and the norm bound is tight
    let p = m.inner_left(1, &v, 1, &v).unwrap();
    let nm = op(&p);
    let gap = &p * C::new(nm, 0.0) - &p * p.adjoint();
    assert!(min_eig(&gap) >= -1e-9);
    assert!((op(&p) - m.norm(1, &v).unwrap().powi(2)).abs() < 1e-9);
    // m′ = 0: both sides vanish
    let zero = CVec::zeros(d);
    assert!(op(&m.inner_left(1, &v, 1, &zero).unwrap()) == 0.0);
    assert!(op(&m.inner_right(1, &zero, 1, &v).unwrap()) == 0.0);
}

#[test]
fn cauchy_schwarz_equality_and_zero_cases_on_k() {
    let ch = pair_chain(&[2], &[2, 1], &[2]);
    let (m, n) = ch.shared();
    let k = TensorBundle::new(m, n).unwrap();
    let d = k.fibre_dim(0);
    let xi = CVec::from_fn(d, |i, _| C::new(1.0 / (1.0 + i as f64), -0.2));
    let p = k.inner_left(0, &xi, 0, &xi).unwrap();
    assert!(min_eig(&p) >= -1e-9);
    assert!((op(&p) - k.norm(0, &xi).unwrap().powi(2)).abs() < 1e-9);
    let q = k.inner_right(0, &xi, 0, &xi).unwrap();
    assert!((op(&p) - op(&q)).abs() < 1e-9);
    let zero = CVec::zeros(d);
    assert!(op(&k.inner_left(0, &xi, 0, &zero).unwrap()) == 0.0);
}

#[test]
fn zeroing_one_factor_fibre_breaks_fullness_of_k() {
    let ch = pair_chain(&[1], &[2], &[1, 1]);
    let n = (*ch.n).clone().with_fibre(1, MatrixSubspace::zero(2, 1)).unwrap();
    let k = TensorBundle::new(ch.m.clone(), Arc::new(n)).unwrap();
    let r = verify_hypoequiv_k(&k);
    assert!(!r.passed());
    assert!(r.failed_axioms().iter().any(|a| a.starts_with("FE3")), "{r}");
}
