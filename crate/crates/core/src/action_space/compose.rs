use std::collections::BTreeMap;

use super::{verify_equivalence, BispaceParts, GroupoidBispace, GroupoidEquivalence, PreEquivalence};
use crate::error::{Error, Result};
use crate::report::{Coverage, Report, Sweep};

/// `X ∗ Y = {(x, y) : s_X(x) = r_Y(y)}` in lexicographic order.
#[derive(Clone, Debug)]
pub struct FibreProduct {
    pub pre: PreEquivalence,
    pub pairs: Vec<(usize, usize)>,
    index: Vec<Option<usize>>,
    ny: usize,
}

impl FibreProduct {
    pub fn point(&self, x: usize, y: usize) -> Option<usize> {
        self.index.get(x * self.ny + y).copied().flatten()
    }

    pub fn pair(&self, z: usize) -> (usize, usize) {
        self.pairs[z]
    }
}

/// Fibre product of an `(G,H)`- and an `(H,K)`-pre-equivalence; a `(G,K)`-pre-equivalence with
/// `lam_left((x,y),(x′,y′)) = lam_left_X(x, x′·lam_left_Y(y′,y))` and
/// `lam_right((x,y),(x′,y′)) = lam_right_Y(lam_right_X(x′,x)·y, y′)`.
pub fn fibre_product_preequiv(x: &PreEquivalence, y: &PreEquivalence) -> Result<FibreProduct> {
    if x.right() != y.left() {
        return Err(Error::Composition("middle groupoids differ".into()));
    }
    let (bx, by) = (x.space(), y.space());
    let (nx, ny) = (bx.n_points(), by.n_points());
    let mut pairs = Vec::new();
    let mut index = vec![None; nx * ny];
    for a in 0..nx {
        for b in 0..ny {
            if bx.s(a) == by.r(b) {
                index[a * ny + b] = Some(pairs.len());
                pairs.push((a, b));
            }
        }
    }
    let n = pairs.len();
    let (g, k) = (x.left().clone(), y.right().clone());
    let mut left_act = vec![None; g.n_arrows() * n];
    let mut right_act = vec![None; n * k.n_arrows()];
    for (z, &(a, b)) in pairs.iter().enumerate() {
        for gg in g.arrows() {
            left_act[gg * n + z] = bx.act_left(gg, a).and_then(|ga| index[ga * ny + b]);
        }
        for kk in k.arrows() {
            right_act[z * k.n_arrows() + kk] = by.act_right(b, kk).and_then(|bk| index[a * ny + bk]);
        }
    }
    let space = GroupoidBispace::from_parts(BispaceParts {
        left: g,
        right: k,
        r: pairs.iter().map(|&(a, _)| bx.r(a)).collect(),
        s: pairs.iter().map(|&(_, b)| by.s(b)).collect(),
        left_act,
        right_act,
    })?;
    let undefined = || Error::Composition("factor transporters undefined where the product needs them".into());
    let mut lam_left = vec![None; n * n];
    let mut lam_right = vec![None; n * n];
    for (z, &(a, b)) in pairs.iter().enumerate() {
        for (z2, &(a2, b2)) in pairs.iter().enumerate() {
            if by.s(b) == by.s(b2) {
                let hh = y.lam_left(b2, b).ok_or_else(undefined)?;
                let moved = bx.act_right(a2, hh).ok_or_else(undefined)?;
                lam_left[z * n + z2] = Some(x.lam_left(a, moved).ok_or_else(undefined)?);
            }
            if bx.r(a) == bx.r(a2) {
                let hh = x.lam_right(a2, a).ok_or_else(undefined)?;
                let moved = by.act_left(hh, b).ok_or_else(undefined)?;
                lam_right[z * n + z2] = Some(y.lam_right(moved, b2).ok_or_else(undefined)?);
            }
        }
    }
    Ok(FibreProduct { pre: PreEquivalence::from_parts(space, lam_left, lam_right)?, pairs, index, ny })
}

/// Classes of `x ∼ x′ ⇔ lam_left(x, x′)` is a unit, represented by their least point.
#[derive(Clone, Debug)]
pub struct PreQuotient {
    pub equivalence: GroupoidEquivalence,
    /// Class of each input point.
    pub projection: Vec<usize>,
    /// Least point of each class; classes are numbered in the order of their representatives.
    pub reps: Vec<usize>,
}

pub fn quotient_preequivalence(p: &PreEquivalence) -> Result<PreQuotient> {
    let b = p.space();
    let (g, h) = (p.left().clone(), p.right().clone());
    let n = p.n_points();
    let mut projection = vec![usize::MAX; n];
    let mut reps = Vec::new();
    for x in 0..n {
        if projection[x] != usize::MAX {
            continue;
        }
        let c = reps.len();
        reps.push(x);
        for y in x..n {
            if p.lam_left(x, y).is_some_and(|a| g.is_unit(a)) {
                projection[y] = c;
            }
        }
    }
    let m = reps.len();
    let undefined = || Error::Construction("input is not a verified pre-equivalence".into());
    let mut left_act = vec![None; g.n_arrows() * m];
    let mut right_act = vec![None; m * h.n_arrows()];
    for (c, &x) in reps.iter().enumerate() {
        for a in g.arrows() {
            left_act[a * m + c] = b.act_left(a, x).map(|y| projection[y]);
        }
        for d in h.arrows() {
            right_act[c * h.n_arrows() + d] = b.act_right(x, d).map(|y| projection[y]);
        }
    }
    let space = GroupoidBispace::from_parts(BispaceParts {
        left: g,
        right: h,
        r: reps.iter().map(|&x| b.r(x)).collect(),
        s: reps.iter().map(|&x| b.s(x)).collect(),
        left_act,
        right_act,
    })?;
    let mut lam_left = vec![None; m * m];
    let mut lam_right = vec![None; m * m];
    for (c, &x) in reps.iter().enumerate() {
        for (c2, &y) in reps.iter().enumerate() {
            if b.s(x) == b.s(y) {
                lam_left[c * m + c2] = Some(p.lam_left(x, y).ok_or_else(undefined)?);
            }
            if b.r(x) == b.r(y) {
                lam_right[c * m + c2] = Some(p.lam_right(x, y).ok_or_else(undefined)?);
            }
        }
    }
    let pre = PreEquivalence::from_parts(space, lam_left, lam_right)?;
    let equivalence = GroupoidEquivalence::from_preequivalence(pre)
        .map_err(|e| Error::Construction(format!("quotient is not an equivalence: {e}")))?;
    Ok(PreQuotient { equivalence, projection, reps })
}

/// `X ∗_H Y`: the fibre product and its quotient.
#[derive(Clone, Debug)]
pub struct BalancedProduct {
    pub fibre: FibreProduct,
    pub quotient: PreQuotient,
}

impl BalancedProduct {
    pub fn equivalence(&self) -> &GroupoidEquivalence {
        &self.quotient.equivalence
    }

    /// Class of the point `(x, y)`.
    pub fn class_of(&self, x: usize, y: usize) -> Option<usize> {
        self.fibre.point(x, y).map(|z| self.quotient.projection[z])
    }
}

pub fn balanced_product(x: &GroupoidEquivalence, y: &GroupoidEquivalence) -> Result<BalancedProduct> {
    let fibre = fibre_product_preequiv(x.pre(), y.pre())?;
    let quotient = quotient_preequivalence(&fibre.pre)?;
    Ok(BalancedProduct { fibre, quotient })
}

#[derive(Clone, Debug)]
pub struct AlmostEquivalence {
    /// `lam_left(x, x′)·x′ = x` on all s-compatible pairs.
    pub left_nondegenerate: bool,
    /// `y·lam_right(y, y′) = y′` on all r-compatible pairs.
    pub right_nondegenerate: bool,
    /// The space is an equivalence whose transporters are the tables.
    pub is_equivalence: bool,
    pub report: Report,
}

/// Evaluates the three conditions separately and checks that they agree.
pub fn check_cor_almost_equivalence(p: &PreEquivalence) -> AlmostEquivalence {
    let b = p.space();
    let left_nondegenerate = p
        .s_pairs()
        .all(|(x, y)| p.lam_left(x, y).and_then(|a| b.act_left(a, y)) == Some(x));
    let right_nondegenerate = p
        .r_pairs()
        .all(|(x, y)| p.lam_right(x, y).and_then(|c| b.act_right(x, c)) == Some(y));
    let is_equivalence = verify_equivalence(p).passed();
    let mut report = Report::new("almost-equivalence");
    let mut sw = Sweep::new("conditions-agree", Coverage::Exhaustive);
    sw.expect(
        left_nondegenerate == right_nondegenerate && right_nondegenerate == is_equivalence,
        || vec![left_nondegenerate as usize, right_nondegenerate as usize, is_equivalence as usize],
        || "conditions disagree".into(),
    );
    report.absorb(sw);
    AlmostEquivalence { left_nondegenerate, right_nondegenerate, is_equivalence, report }
}

/// `(X ∗ Y) ∗ Z` against `X ∗ (Y ∗ Z)`: the map `[[x,y],z] ↦ [x,[y,z]]` must be a well-defined
/// bijection of classes that commutes with both actions.
pub fn balanced_associativity(
    x: &GroupoidEquivalence,
    y: &GroupoidEquivalence,
    z: &GroupoidEquivalence,
) -> Result<Report> {
    let xy = balanced_product(x, y)?;
    let xy_z = balanced_product(xy.equivalence(), z)?;
    let yz = balanced_product(y, z)?;
    let x_yz = balanced_product(x, yz.equivalence())?;
    let (bx, by, bz) = (x.space(), y.space(), z.space());
    let mut map: BTreeMap<usize, usize> = BTreeMap::new();
    let mut report = Report::new("balanced associativity");
    let mut sw = Sweep::new("well-defined", Coverage::Exhaustive);
    for a in bx.points() {
        for b in by.points().filter(|&b| bx.s(a) == by.r(b)) {
            for c in bz.points().filter(|&c| by.s(b) == bz.r(c)) {
                let l = xy.class_of(a, b).and_then(|ab| xy_z.class_of(ab, c));
                let r = yz.class_of(b, c).and_then(|bc| x_yz.class_of(a, bc));
                let (Some(l), Some(r)) = (l, r) else {
                    report.structural("well-defined", vec![a, b, c], "triple has no class");
                    return Ok(report);
                };
                let prev = *map.entry(l).or_insert(r);
                sw.expect(prev == r, || vec![a, b, c], || format!("class {l} sent to {prev} and {r}"));
            }
        }
    }
    report.absorb(sw);

    let left = xy_z.equivalence().space();
    let right = x_yz.equivalence().space();
    let mut sw = Sweep::new("bijective", Coverage::Exhaustive);
    let mut image: Vec<usize> = map.values().copied().collect();
    image.sort_unstable();
    image.dedup();
    sw.expect(
        map.len() == left.n_points() && image.len() == right.n_points() && map.len() == image.len(),
        Vec::new,
        || format!("{} left classes, {} right classes, {} images", left.n_points(), right.n_points(), image.len()),
    );
    report.absorb(sw);

    let mut sw = Sweep::new("equivariant", Coverage::Exhaustive);
    let (g, k) = (left.left(), left.right());
    for (&l, &r) in &map {
        sw.expect(left.r(l) == right.r(r) && left.s(l) == right.s(r), || vec![l], || "momenta differ".into());
        for a in g.arrows().filter(|&a| g.src(a) == left.r(l)) {
            let lhs = left.act_left(a, l).and_then(|v| map.get(&v).copied());
            sw.expect(lhs == right.act_left(a, r), || vec![a, l], || "left actions differ".into());
        }
        for c in k.arrows().filter(|&c| k.rng(c) == left.s(l)) {
            let lhs = left.act_right(l, c).and_then(|v| map.get(&v).copied());
            sw.expect(lhs == right.act_right(r, c), || vec![l, c], || "right actions differ".into());
        }
    }
    report.absorb(sw);
    Ok(report)
}
