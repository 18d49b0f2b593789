#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::Arc;

use fell_core::action_space::{fibre_product_preequiv, GroupoidEquivalence, PreEquivalence};
use fell_core::equiv_bundle::{amplified_identity_bundle, canonical_over, opposite_bundle, BundleSpace};
use fell_core::fell_bundle::{make_full_matrix_bundle, make_projective_rep_bundle, pauli_unitaries, FellBundle};
use fell_core::groupoid::{
    cyclic_group_table, klein_four_table, make_group_groupoid, make_pair_groupoid, make_transformation_groupoid,
    FiniteGroupoid,
};
use fell_core::tensor_compose::SharedBundle;
use fell_core::C;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Mat = DMatrix<C<f64>>;

pub fn pair_dims(d: &[usize]) -> BTreeMap<usize, usize> {
    let n = d.len();
    (0..n).map(|i| (i * n + i, d[i])).collect()
}

/// A pair groupoid with a full matrix bundle of the given unit dimensions.
pub struct Node {
    pub g: Arc<FiniteGroupoid>,
    pub b: Arc<FellBundle<f64>>,
}

pub fn node(d: &[usize]) -> Node {
    let g = Arc::new(make_pair_groupoid(d.len()).unwrap());
    let b = Arc::new(make_full_matrix_bundle(g.clone(), pair_dims(d)).unwrap());
    Node { g, b }
}

pub fn pair_eq(a: &Node, b: &Node) -> GroupoidEquivalence {
    GroupoidEquivalence::pair(a.g.clone(), b.g.clone(), a.g.units().len(), b.g.units().len()).unwrap()
}

pub fn canonical(x: &GroupoidEquivalence, a: &Node, b: &Node) -> BundleSpace<f64> {
    canonical_over(x.pre().clone(), a.b.clone(), b.b.clone()).unwrap()
}

/// Two composable canonical bundles `M : A → B`, `N : B → C` and their base equivalences.
pub struct Chain {
    pub x: GroupoidEquivalence,
    pub y: GroupoidEquivalence,
    pub m: Arc<BundleSpace<f64>>,
    pub n: Arc<BundleSpace<f64>>,
    /// Expected dimensions of the unit fibres at the two ends, indexed by unit arrow.
    pub left_rank: BTreeMap<usize, usize>,
    pub right_rank: BTreeMap<usize, usize>,
    pub label: String,
}

impl Chain {
    pub fn shared(&self) -> (SharedBundle<f64>, SharedBundle<f64>) {
        (self.m.clone(), self.n.clone())
    }
}

pub fn pair_chain(da: &[usize], db: &[usize], dc: &[usize]) -> Chain {
    let (a, b, c) = (node(da), node(db), node(dc));
    let (x, y) = (pair_eq(&a, &b), pair_eq(&b, &c));
    let m = Arc::new(canonical(&x, &a, &b));
    let n = Arc::new(canonical(&y, &b, &c));
    Chain {
        x,
        y,
        m,
        n,
        left_rank: a.b.dims().iter().map(|(&u, &d)| (u, d * d)).collect(),
        right_rank: c.b.dims().iter().map(|(&u, &d)| (u, d * d)).collect(),
        label: format!("pair {da:?} {db:?} {dc:?}"),
    }
}

/// `M : M_k ⊗ C → C` and `N : C → M_j ⊗ C` over the Klein group with the Pauli bundle `C` in the middle.
pub fn pauli_chain(k: usize, j: usize) -> Chain {
    let g = Arc::new(make_group_groupoid(&klein_four_table()).unwrap());
    let c = Arc::new(make_projective_rep_bundle::<f64>(g.clone(), &pauli_unitaries()).unwrap());
    let m = amplified_identity_bundle(c.clone(), k).unwrap();
    let n = opposite_bundle(&amplified_identity_bundle(c, j).unwrap());
    let eq = GroupoidEquivalence::identity(g).unwrap();
    Chain {
        x: eq.clone(),
        y: eq,
        // the unit fibre of M_k ⊗ C is M_k ⊗ 1
        left_rank: [(0, k * k)].into(),
        right_rank: [(0, j * j)].into(),
        m: Arc::new(m),
        n: Arc::new(n),
        label: format!("pauli k={k} j={j}"),
    }
}

/// Seeded unit counts in `1..=max_units` and dimensions in `1..=max_dim`.
pub fn random_shape(rng: &mut ChaCha8Rng, max_units: usize, max_dim: usize) -> Vec<usize> {
    let n = rng.gen_range(1..=max_units);
    (0..n).map(|_| rng.gen_range(1..=max_dim)).collect()
}

pub fn random_pair_chain(seed: u64, max_units: usize, max_dim: usize) -> Chain {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let da = random_shape(&mut rng, max_units, max_dim);
    let db = random_shape(&mut rng, max_units, max_dim);
    let dc = random_shape(&mut rng, max_units, max_dim);
    pair_chain(&da, &db, &dc)
}

/// A pair, cyclic, Klein or rotation-transformation groupoid.
pub fn random_groupoid(rng: &mut ChaCha8Rng) -> Arc<FiniteGroupoid> {
    match rng.gen_range(0..4) {
        0 => Arc::new(make_pair_groupoid(rng.gen_range(1..=4)).unwrap()),
        1 => Arc::new(make_group_groupoid(&cyclic_group_table(rng.gen_range(1..=5))).unwrap()),
        2 => Arc::new(make_group_groupoid(&klein_four_table()).unwrap()),
        _ => {
            let (order, points) = [(2, 2), (4, 2), (3, 3), (6, 3), (4, 4)][rng.gen_range(0..5)];
            let action: Vec<Vec<usize>> =
                (0..order).map(|g| (0..points).map(|x| (x + g) % points).collect()).collect();
            Arc::new(make_transformation_groupoid(&cyclic_group_table(order), &action).unwrap())
        }
    }
}

/// A fibre-product pre-equivalence from a seeded family: pair, identity and nested products.
/// Returns the instance and a description.
pub fn random_fibre_product(seed: u64) -> (PreEquivalence, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match rng.gen_range(0..3) {
        0 => {
            let (na, nb, nc) = (rng.gen_range(1..=4), rng.gen_range(1..=4), rng.gen_range(1..=4));
            let (a, b, c) = (make_pair_groupoid(na).unwrap(), make_pair_groupoid(nb).unwrap(), make_pair_groupoid(nc).unwrap());
            let (a, b, c) = (Arc::new(a), Arc::new(b), Arc::new(c));
            let x = GroupoidEquivalence::pair(a, b.clone(), na, nb).unwrap();
            let y = GroupoidEquivalence::pair(b, c, nb, nc).unwrap();
            (fibre_product_preequiv(x.pre(), y.pre()).unwrap().pre, format!("pair {na}x{nb} * {nb}x{nc}"))
        }
        1 => {
            let g = random_groupoid(&mut rng);
            let e = GroupoidEquivalence::identity(g.clone()).unwrap();
            let fp = fibre_product_preequiv(e.pre(), &e.opposite().pre().clone()).unwrap();
            (fp.pre, format!("identity * identity over {} arrows", g.n_arrows()))
        }
        _ => {
            let (na, nb) = (rng.gen_range(1..=3), rng.gen_range(1..=2));
            let a = Arc::new(make_pair_groupoid(na).unwrap());
            let b = Arc::new(make_pair_groupoid(nb).unwrap());
            let x = GroupoidEquivalence::pair(a.clone(), b.clone(), na, nb).unwrap();
            let inner = fibre_product_preequiv(x.pre(), x.opposite().pre()).unwrap().pre;
            let z = GroupoidEquivalence::identity(a).unwrap();
            let outer = fibre_product_preequiv(&inner, z.pre()).unwrap().pre;
            (outer, format!("nested (pair {na}x{nb} * opposite) * identity"))
        }
    }
}

/// Number of `H`-orbits of the fibre product `X ∗ Y`, counted by union-find on `(x, y) ∼ (x·h, h⁻¹·y)`.
pub fn orbit_count(x: &GroupoidEquivalence, y: &GroupoidEquivalence) -> usize {
    let (bx, by) = (x.space(), y.space());
    let h = bx.right();
    let pts: Vec<(usize, usize)> = bx
        .points()
        .flat_map(|a| by.points().map(move |b| (a, b)))
        .filter(|&(a, b)| bx.s(a) == by.r(b))
        .collect();
    let index: BTreeMap<(usize, usize), usize> = pts.iter().enumerate().map(|(i, &p)| (p, i)).collect();
    let mut parent: Vec<usize> = (0..pts.len()).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        p[i] = r;
        r
    }
    for (i, &(a, b)) in pts.iter().enumerate() {
        for g in h.arrows() {
            let (Some(a2), Some(b2)) = (bx.act_right(a, g), by.act_left(h.inv(g), b)) else { continue };
            let j = index[&(a2, b2)];
            let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
            parent[ri] = rj;
        }
    }
    (0..pts.len()).filter(|&i| find(&mut parent, i) == i).count()
}

pub fn hs(a: &Mat, b: &Mat) -> C<f64> {
    a.iter().zip(b.iter()).map(|(p, q)| p.conj() * q).sum()
}

/// Numerical rank of the span of a matrix family, by singular values of the stacked vectors.
pub fn span_rank(gens: &[Mat]) -> usize {
    if gens.is_empty() {
        return 0;
    }
    let len = gens[0].len();
    let stacked = Mat::from_fn(len, gens.len(), |i, j| gens[j][i]);
    let sv = stacked.singular_values();
    let top = sv.iter().fold(0.0f64, |m, &s| m.max(s));
    sv.iter().filter(|&&s| s > 1e-9 * top.max(1.0)).count()
}

/// Products `mᵢ·nⱼ` of the orthonormal fibre bases, in generator order `i·dim N_y + j`.
pub fn product_generators(m: &BundleSpace<f64>, x: usize, n: &BundleSpace<f64>, y: usize) -> Vec<Mat> {
    assert_eq!((m.weights(), n.weights()), ((1.0, 1.0), (1.0, 1.0)));
    let mut out = Vec::new();
    for a in m.fibre(x).basis() {
        for b in n.fibre(y).basis() {
            out.push(a * b);
        }
    }
    out
}

/// Largest eigenvalue defect below zero of a Hermitian matrix.
pub fn min_eig(a: &Mat) -> f64 {
    let h = (a + a.adjoint()) * C::new(0.5, 0.0);
    h.symmetric_eigenvalues().iter().fold(f64::INFINITY, |m, &l| m.min(l))
}

pub fn op(a: &Mat) -> f64 {
    if a.is_empty() {
        0.0
    } else {
        a.singular_values().iter().fold(0.0f64, |m, &s| m.max(s))
    }
}

pub fn random_mat(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Mat {
    Mat::from_fn(r, c, |_, _| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

pub const PE_AXIOMS: [&str; 9] =
    ["PE3.surjective", "PE3.a", "PE3.a'", "PE3.b", "PE3.b'", "PE3.c", "PE3.d", "PE3.e", "PE3.f"];

/// Whether the transporter law `axiom` is violated at `tuple`, read directly off the tables.
/// Tuples are interpreted in every shape the law admits; any violating reading counts.
pub fn pe_violated(p: &PreEquivalence, axiom: &str, t: &[usize]) -> bool {
    let sp = p.space();
    let (g, h) = (p.left(), p.right());
    let n = p.n_points();
    let pt = |i: usize| t.get(i).copied().filter(|&v| v < n);
    let s_ok = |x: usize, y: usize| sp.s(x) == sp.s(y);
    let r_ok = |x: usize, y: usize| sp.r(x) == sp.r(y);
    let ll = |x, y| p.lam_left(x, y);
    let lr = |x, y| p.lam_right(x, y);
    match axiom {
        "PE3.surjective" => {
            let a = t[0];
            let hit_g = (0..n).any(|x| (0..n).any(|y| s_ok(x, y) && ll(x, y) == Some(a)));
            let hit_h = (0..n).any(|x| (0..n).any(|y| r_ok(x, y) && lr(x, y) == Some(a)));
            (a < g.n_arrows() && !hit_g) || (a < h.n_arrows() && !hit_h)
        }
        "PE3.a" | "PE3.a'" | "PE3.b" | "PE3.f" => {
            let (Some(x), Some(y)) = (pt(0), pt(1)) else { return false };
            let left = s_ok(x, y).then(|| ll(x, y).unwrap());
            let right = r_ok(x, y).then(|| lr(x, y).unwrap());
            match axiom {
                "PE3.a" => left.is_some_and(|a| g.rng(a) != sp.r(x)) || right.is_some_and(|c| h.src(c) != sp.s(y)),
                "PE3.a'" => left.is_some_and(|a| g.src(a) != sp.r(y)) || right.is_some_and(|c| h.rng(c) != sp.s(x)),
                "PE3.b" => {
                    left.is_some_and(|a| Some(g.inv(a)) != ll(y, x)) || right.is_some_and(|c| Some(h.inv(c)) != lr(y, x))
                }
                _ => left.is_some_and(|a| g.is_unit(a)) != right.is_some_and(|c| h.is_unit(c)),
            }
        }
        "PE3.b'" => pt(0).is_some_and(|x| ll(x, x) != Some(sp.r(x)) || lr(x, x) != Some(sp.s(x))),
        "PE3.c" => {
            // (a, x, y): lam_left(a·x, y) = a·lam_left(x, y); (x, y, c): lam_right(x, y·c) = lam_right(x, y)·c
            let left = || {
                let (a, x, y) = (t[0], pt(1)?, pt(2)?);
                if a >= g.n_arrows() || !s_ok(x, y) {
                    return None;
                }
                Some(ll(sp.act_left(a, x)?, y) != g.comp(a, ll(x, y)?))
            };
            let right = || {
                let (x, y, c) = (pt(0)?, pt(1)?, t[2]);
                if c >= h.n_arrows() || !r_ok(x, y) {
                    return None;
                }
                Some(lr(x, sp.act_right(y, c)?) != h.comp(lr(x, y)?, c))
            };
            left() == Some(true) || right() == Some(true)
        }
        "PE3.d" => {
            // (x, y, c): lam_left(x·c⁻¹, y) = lam_left(x, y·c); (a, x, y): lam_right(a⁻¹·x, y) = lam_right(x, a·y)
            let left = || {
                let (x, y, c) = (pt(0)?, pt(1)?, t[2]);
                if c >= h.n_arrows() || h.src(c) != sp.s(x) || h.rng(c) != sp.s(y) {
                    return None;
                }
                Some(ll(sp.act_right(x, h.inv(c))?, y) != ll(x, sp.act_right(y, c)?))
            };
            let right = || {
                let (a, x, y) = (t[0], pt(1)?, pt(2)?);
                if a >= g.n_arrows() || g.rng(a) != sp.r(x) || g.src(a) != sp.r(y) {
                    return None;
                }
                Some(lr(sp.act_left(g.inv(a), x)?, y) != lr(x, sp.act_left(a, y)?))
            };
            left() == Some(true) || right() == Some(true)
        }
        "PE3.e" => {
            let (Some(x), Some(y), Some(z)) = (pt(0), pt(1), pt(2)) else { return false };
            let left = s_ok(x, y) && s_ok(y, z) && g.comp(ll(x, y).unwrap(), ll(y, z).unwrap()) != ll(x, z);
            let right = r_ok(x, y) && r_ok(y, z) && h.comp(lr(x, y).unwrap(), lr(y, z).unwrap()) != lr(x, z);
            left || right
        }
        other => panic!("unknown axiom {other}"),
    }
}

/// Every transporter law violated somewhere, by exhaustive search over tuples.
pub fn pe_violations(p: &PreEquivalence) -> Vec<&'static str> {
    let n = p.n_points();
    let arrows = p.left().n_arrows().max(p.right().n_arrows());
    PE_AXIOMS
        .into_iter()
        .filter(|ax| match *ax {
            "PE3.surjective" => (0..arrows).any(|a| pe_violated(p, ax, &[a])),
            "PE3.b'" => (0..n).any(|x| pe_violated(p, ax, &[x])),
            "PE3.a" | "PE3.a'" | "PE3.b" | "PE3.f" => {
                (0..n).any(|x| (0..n).any(|y| pe_violated(p, ax, &[x, y])))
            }
            "PE3.e" => (0..n).any(|x| (0..n).any(|y| (0..n).any(|z| pe_violated(p, ax, &[x, y, z])))),
            _ => (0..n.max(arrows)).any(|i| {
                (0..n.max(arrows)).any(|j| (0..n.max(arrows)).any(|k| pe_violated(p, ax, &[i, j, k])))
            }),
        })
        .collect()
}
