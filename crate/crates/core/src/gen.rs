//! Instance documents for standard families, ready to verify or compose.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::action_space::{identity_bispace, GroupoidEquivalence};
use crate::equiv_bundle::{amplified_identity_bundle, canonical_over, opposite_bundle};
use crate::error::{Error, Result};
use crate::fell_bundle::{amplify, constant_dims, make_full_matrix_bundle, make_projective_rep_bundle, pauli_unitaries};
use crate::groupoid::{
    cyclic_group_table, klein_four_table, make_group_groupoid, make_pair_groupoid, make_transformation_groupoid,
};
use crate::io::{DocBuilder, InstanceDocument};

pub fn pair_groupoid(n: usize) -> Result<InstanceDocument> {
    let mut b = DocBuilder::new();
    b.groupoid("G", &make_pair_groupoid(n)?);
    Ok(b.build())
}

/// `ℤ/n`, or the Klein four-group when `klein` is set.
pub fn group(order: usize, klein: bool) -> Result<InstanceDocument> {
    let table = if klein { klein_four_table() } else { cyclic_group_table(order) };
    let mut b = DocBuilder::new();
    b.groupoid("G", &make_group_groupoid(&table)?);
    Ok(b.build())
}

/// `ℤ/n` rotating `ℤ/k`; `k` must divide `n`.
pub fn transformation(order: usize, points: usize) -> Result<InstanceDocument> {
    if points == 0 || !order.is_multiple_of(points) {
        return Err(Error::Precondition(format!("{points} points do not carry a rotation action of Z/{order}")));
    }
    let action: Vec<Vec<usize>> = (0..order).map(|g| (0..points).map(|x| (x + g) % points).collect()).collect();
    let mut b = DocBuilder::new();
    b.groupoid("G", &make_transformation_groupoid(&cyclic_group_table(order), &action)?);
    Ok(b.build())
}

pub fn full_matrix_bundle(n: usize, dim: usize) -> Result<InstanceDocument> {
    let g = Arc::new(make_pair_groupoid(n)?);
    let bundle = make_full_matrix_bundle::<f64>(g.clone(), constant_dims(&g, dim))?;
    let mut b = DocBuilder::new();
    b.groupoid("G", &g).fell_bundle("B", "G", &bundle);
    Ok(b.build())
}

/// The Pauli bundle `C` over the Klein four-group, with the composable pair
/// `M : M_k ⊗ C → C` and `N : C → C` over the identity equivalence and its opposite.
pub fn projective_rep_bundle(k: usize) -> Result<InstanceDocument> {
    let g = Arc::new(make_group_groupoid(&klein_four_table())?);
    let c = Arc::new(make_projective_rep_bundle::<f64>(g.clone(), &pauli_unitaries())?);
    let m = amplified_identity_bundle(c.clone(), k)?;
    let n = opposite_bundle(&amplified_identity_bundle(c.clone(), 1)?);
    let d = amplify(&c, 1)?;
    let x = identity_bispace(g.clone());
    let mut b = DocBuilder::new();
    b.groupoid("G", &g)
        .bispace("X", "G", "G", &x)
        .bispace("Y", "G", "G", &x.opposite())
        .equivalence("Xeq", "X")
        .equivalence("Yeq", "Y")
        .fell_bundle("B", "G", m.left_arc())
        .fell_bundle("C", "G", &c)
        .fell_bundle("D", "G", &d)
        .bundle_space("M", "Xeq", "B", "C", &m)
        .bundle_space("N", "Yeq", "C", "D", &n);
    Ok(b.build())
}

fn unit_dims(n: usize, dims: &[usize]) -> BTreeMap<usize, usize> {
    (0..n).map(|i| (i * n + i, dims[i])).collect()
}

/// Pair groupoids `A`, `B` (and `C`) with unit dimensions given per point, the product
/// equivalences `X = A × B` (and `Y = B × C`), and full rectangular bundles `M` (and `N`).
pub fn canonical_equivalence(da: &[usize], db: &[usize], dc: Option<&[usize]>) -> Result<InstanceDocument> {
    if da.is_empty() || db.is_empty() || dc.is_some_and(<[usize]>::is_empty) {
        return Err(Error::Precondition("every groupoid needs at least one unit".into()));
    }
    let (na, nb) = (da.len(), db.len());
    let ga = Arc::new(make_pair_groupoid(na)?);
    let gb = Arc::new(make_pair_groupoid(nb)?);
    let ba = Arc::new(make_full_matrix_bundle::<f64>(ga.clone(), unit_dims(na, da))?);
    let bb = Arc::new(make_full_matrix_bundle::<f64>(gb.clone(), unit_dims(nb, db))?);
    let x = GroupoidEquivalence::pair(ga.clone(), gb.clone(), na, nb)?;
    let m = canonical_over(x.pre().clone(), ba.clone(), bb.clone())?;
    let mut b = DocBuilder::new();
    b.groupoid("A", &ga).groupoid("B", &gb);
    if let Some(dc) = dc {
        let nc = dc.len();
        let gc = Arc::new(make_pair_groupoid(nc)?);
        let bc = Arc::new(make_full_matrix_bundle::<f64>(gc.clone(), unit_dims(nc, dc))?);
        let y = GroupoidEquivalence::pair(gb.clone(), gc.clone(), nb, nc)?;
        let n = canonical_over(y.pre().clone(), bb.clone(), bc.clone())?;
        b.groupoid("C", &gc)
            .bispace("X", "A", "B", x.space())
            .bispace("Y", "B", "C", y.space())
            .equivalence("Xeq", "X")
            .equivalence("Yeq", "Y")
            .fell_bundle("BA", "A", &ba)
            .fell_bundle("BB", "B", &bb)
            .fell_bundle("BC", "C", &bc)
            .bundle_space("M", "Xeq", "BA", "BB", &m)
            .bundle_space("N", "Yeq", "BB", "BC", &n);
    } else {
        b.bispace("X", "A", "B", x.space())
            .equivalence("Xeq", "X")
            .fell_bundle("BA", "A", &ba)
            .fell_bundle("BB", "B", &bb)
            .bundle_space("M", "Xeq", "BA", "BB", &m);
    }
    Ok(b.build())
}

/// Unit counts in `1..=max_units` and unit dimensions in `1..=max_dim`, drawn from a
/// ChaCha stream seeded by `seed`.
pub fn random_chain_dims(seed: u64, max_units: usize, max_dim: usize) -> [Vec<usize>; 3] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || {
        let n = rng.gen_range(1..=max_units.max(1));
        (0..n).map(|_| rng.gen_range(1..=max_dim.max(1))).collect::<Vec<usize>>()
    };
    [draw(), draw(), draw()]
}

/// A composable canonical chain with seeded random shape.
pub fn random_dims(seed: u64, max_units: usize, max_dim: usize) -> Result<InstanceDocument> {
    let [da, db, dc] = random_chain_dims(seed, max_units, max_dim);
    canonical_equivalence(&da, &db, Some(&dc))
}
