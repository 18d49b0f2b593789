use std::sync::Arc;

use super::{verify_bispace, GroupoidBispace};
use crate::error::{Error, Result};
use crate::groupoid::FiniteGroupoid;
use crate::report::{Coverage, Report, Sweep};

/// A bispace with transporter surrogates `lam_left: X ∗ₛ X → G` and `lam_right: X ∗ᵣ X → H`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreEquivalence {
    space: GroupoidBispace,
    lam_left: Vec<Option<usize>>,
    lam_right: Vec<Option<usize>>,
}

impl PreEquivalence {
    /// Tables are `n × n`, row `x`, column `x′`; entries outside the admissible pairs are ignored.
    pub fn from_parts(space: GroupoidBispace, lam_left: Vec<Option<usize>>, lam_right: Vec<Option<usize>>) -> Result<Self> {
        let n = space.n_points();
        if lam_left.len() != n * n || lam_right.len() != n * n {
            return Err(Error::Construction("transporter tables must be n×n".into()));
        }
        if lam_left.iter().flatten().any(|&g| g >= space.left().n_arrows())
            || lam_right.iter().flatten().any(|&h| h >= space.right().n_arrows())
        {
            return Err(Error::Construction("transporter value out of range".into()));
        }
        Ok(PreEquivalence { space, lam_left, lam_right })
    }

    pub fn into_parts(self) -> (GroupoidBispace, Vec<Option<usize>>, Vec<Option<usize>>) {
        (self.space, self.lam_left, self.lam_right)
    }

    pub fn space(&self) -> &GroupoidBispace {
        &self.space
    }

    pub fn left(&self) -> &Arc<FiniteGroupoid> {
        self.space.left()
    }

    pub fn right(&self) -> &Arc<FiniteGroupoid> {
        self.space.right()
    }

    pub fn n_points(&self) -> usize {
        self.space.n_points()
    }

    pub fn lam_left(&self, x: usize, x2: usize) -> Option<usize> {
        if self.space.s(x) != self.space.s(x2) {
            return None;
        }
        self.lam_left[x * self.n_points() + x2]
    }

    pub fn lam_right(&self, x: usize, x2: usize) -> Option<usize> {
        if self.space.r(x) != self.space.r(x2) {
            return None;
        }
        self.lam_right[x * self.n_points() + x2]
    }

    pub(crate) fn set_lam_left(&mut self, x: usize, x2: usize, g: Option<usize>) {
        let n = self.n_points();
        self.lam_left[x * n + x2] = g;
    }

    pub(crate) fn set_lam_right(&mut self, x: usize, x2: usize, h: Option<usize>) {
        let n = self.n_points();
        self.lam_right[x * n + x2] = h;
    }

    /// Replaces a single transporter entry, for building deliberately broken instances.
    pub fn with_lam_left(mut self, x: usize, x2: usize, g: usize) -> Self {
        self.set_lam_left(x, x2, Some(g));
        self
    }

    pub fn with_lam_right(mut self, x: usize, x2: usize, h: usize) -> Self {
        self.set_lam_right(x, x2, Some(h));
        self
    }

    /// Roles of the groupoids swapped; the transporter tables trade places.
    pub fn opposite(&self) -> Self {
        PreEquivalence {
            space: self.space.opposite(),
            lam_left: self.lam_right.clone(),
            lam_right: self.lam_left.clone(),
        }
    }

    pub fn s_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.n_points();
        (0..n).flat_map(move |x| (0..n).map(move |y| (x, y))).filter(move |&(x, y)| self.space.s(x) == self.space.s(y))
    }

    pub fn r_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.n_points();
        (0..n).flat_map(move |x| (0..n).map(move |y| (x, y))).filter(move |&(x, y)| self.space.r(x) == self.space.r(y))
    }
}

/// Every transporter law, checked over all admissible tuples.
pub fn verify_preequivalence(p: &PreEquivalence) -> Report {
    let mut report = Report::new("pre-equivalence");
    report.merge("", verify_bispace(p.space(), false));
    if !report.passed() {
        return report;
    }
    let b = p.space();
    let (g, h) = (p.left().as_ref(), p.right().as_ref());
    let n = p.n_points();

    for (x, y) in p.s_pairs() {
        if p.lam_left(x, y).is_none() {
            report.structural("lam-domain", vec![x, y], "left transporter undefined on an s-compatible pair");
            return report;
        }
    }
    for (x, y) in p.r_pairs() {
        if p.lam_right(x, y).is_none() {
            report.structural("lam-domain", vec![x, y], "right transporter undefined on an r-compatible pair");
            return report;
        }
    }
    let ll = |x: usize, y: usize| p.lam_left(x, y).expect("domain checked");
    let lr = |x: usize, y: usize| p.lam_right(x, y).expect("domain checked");

    let mut sw = Sweep::new("PE3.surjective", Coverage::Exhaustive);
    let mut hit_g = vec![false; g.n_arrows()];
    let mut hit_h = vec![false; h.n_arrows()];
    for (x, y) in p.s_pairs() {
        hit_g[ll(x, y)] = true;
    }
    for (x, y) in p.r_pairs() {
        hit_h[lr(x, y)] = true;
    }
    for a in g.arrows() {
        sw.expect(hit_g[a], || vec![a], || format!("left arrow {a} is no transporter"));
    }
    for a in h.arrows() {
        sw.expect(hit_h[a], || vec![a], || format!("right arrow {a} is no transporter"));
    }
    report.absorb(sw);

    let mut sw = Sweep::new("PE3.a", Coverage::Exhaustive);
    for (x, y) in p.s_pairs() {
        sw.expect(g.rng(ll(x, y)) == b.r(x), || vec![x, y], || "r_G(lam_left(x,x')) ≠ r(x)".into());
    }
    for (x, y) in p.r_pairs() {
        sw.expect(h.src(lr(x, y)) == b.s(y), || vec![x, y], || "s_H(lam_right(x,x')) ≠ s(x')".into());
    }
    report.absorb(sw);

    let mut sw = Sweep::new("PE3.a'", Coverage::Exhaustive);
    for (x, y) in p.s_pairs() {
        sw.expect(g.src(ll(x, y)) == b.r(y), || vec![x, y], || "s_G(lam_left(x,x')) ≠ r(x')".into());
    }
    for (x, y) in p.r_pairs() {
        sw.expect(h.rng(lr(x, y)) == b.s(x), || vec![x, y], || "r_H(lam_right(x,x')) ≠ s(x)".into());
    }
    report.absorb(sw);

    let mut sw = Sweep::new("PE3.b", Coverage::Exhaustive);
    for (x, y) in p.s_pairs() {
        sw.expect(g.inv(ll(x, y)) == ll(y, x), || vec![x, y], || "lam_left(x,x')⁻¹ ≠ lam_left(x',x)".into());
    }
    for (x, y) in p.r_pairs() {
        sw.expect(h.inv(lr(x, y)) == lr(y, x), || vec![x, y], || "lam_right(x,x')⁻¹ ≠ lam_right(x',x)".into());
    }
    report.absorb(sw);

    let mut sw = Sweep::new("PE3.b'", Coverage::Exhaustive);
    for x in 0..n {
        sw.expect(ll(x, x) == b.r(x) && lr(x, x) == b.s(x), || vec![x], || {
            format!("diagonal transporters ({}, {}) are not the units ({}, {})", ll(x, x), lr(x, x), b.r(x), b.s(x))
        });
    }
    report.absorb(sw);

    let mut sw = Sweep::new("PE3.c", Coverage::Exhaustive);
    for (x, y) in p.s_pairs() {
        for a in g.arrows().filter(|&a| g.src(a) == b.r(x)) {
            let gx = b.act_left(a, x).expect("bispace verified");
            let lhs = ll(gx, y);
            let rhs = g.comp(a, ll(x, y));
            sw.expect(rhs == Some(lhs), || vec![a, x, y], || format!("lam_left(g·x,x') = {lhs}, g·lam_left(x,x') = {rhs:?}"));
        }
    }
    for (x, y) in p.r_pairs() {
        for c in h.arrows().filter(|&c| h.rng(c) == b.s(y)) {
            let yc = b.act_right(y, c).expect("bispace verified");
            let lhs = lr(x, yc);
            let rhs = h.comp(lr(x, y), c);
            sw.expect(rhs == Some(lhs), || vec![x, y, c], || format!("lam_right(x,x'·h) = {lhs}, lam_right(x,x')·h = {rhs:?}"));
        }
    }
    report.absorb(sw);

    let mut sw = Sweep::new("PE3.d", Coverage::Exhaustive);
    for x in 0..n {
        for y in 0..n {
            // lam_left(x·h⁻¹, x') = lam_left(x, x'·h) whenever s(x) = s_H(h), s(x') = r_H(h)
            for c in h.arrows().filter(|&c| h.src(c) == b.s(x) && h.rng(c) == b.s(y)) {
                let xc = b.act_right(x, h.inv(c)).expect("bispace verified");
                let yc = b.act_right(y, c).expect("bispace verified");
                let (lhs, rhs) = (ll(xc, y), ll(x, yc));
                sw.expect(lhs == rhs, || vec![x, y, c], || format!("lam_left(x·h⁻¹,x') = {lhs}, lam_left(x,x'·h) = {rhs}"));
            }
            // lam_right(g⁻¹·x, x') = lam_right(x, g·x') whenever r(x) = r_G(g), r(x') = s_G(g)
            for a in g.arrows().filter(|&a| g.rng(a) == b.r(x) && g.src(a) == b.r(y)) {
                let ax = b.act_left(g.inv(a), x).expect("bispace verified");
                let ay = b.act_left(a, y).expect("bispace verified");
                let (lhs, rhs) = (lr(ax, y), lr(x, ay));
                sw.expect(lhs == rhs, || vec![a, x, y], || format!("lam_right(g⁻¹·x,x') = {lhs}, lam_right(x,g·x') = {rhs}"));
            }
        }
    }
    report.absorb(sw);

    let mut sw = Sweep::new("PE3.e", Coverage::Exhaustive);
    for (x, y) in p.s_pairs() {
        for z in (0..n).filter(|&z| b.s(z) == b.s(x)) {
            let lhs = g.comp(ll(x, y), ll(y, z));
            sw.expect(lhs == Some(ll(x, z)), || vec![x, y, z], || format!("lam_left product {lhs:?} ≠ {}", ll(x, z)));
        }
    }
    for (x, y) in p.r_pairs() {
        for z in (0..n).filter(|&z| b.r(z) == b.r(x)) {
            let lhs = h.comp(lr(x, y), lr(y, z));
            sw.expect(lhs == Some(lr(x, z)), || vec![x, y, z], || format!("lam_right product {lhs:?} ≠ {}", lr(x, z)));
        }
    }
    report.absorb(sw);

    let mut sw = Sweep::new("PE3.f", Coverage::Exhaustive);
    for x in 0..n {
        for y in 0..n {
            let kl = p.lam_left(x, y).is_some_and(|a| g.is_unit(a));
            let kr = p.lam_right(x, y).is_some_and(|c| h.is_unit(c));
            sw.expect(kl == kr, || vec![x, y], || format!("in left kernel: {kl}, in right kernel: {kr}"));
        }
    }
    report.absorb(sw);
    report
}

/// Pre-equivalence laws plus freeness, orbit bijections and the transporter property
/// `lam_left(x,x')·x' = x`, `x·lam_right(x,x') = x'`.
pub fn verify_equivalence(p: &PreEquivalence) -> Report {
    let mut report = Report::new("groupoid equivalence");
    report.merge("", verify_preequivalence(p));
    if !report.passed() {
        return report;
    }
    let b = p.space();
    let (g, h) = (p.left(), p.right());
    let mut sw = Sweep::new("GE1", Coverage::Exhaustive);
    for x in b.points() {
        for a in g.arrows().filter(|&a| g.src(a) == b.r(x) && !g.is_unit(a)) {
            sw.expect(b.act_left(a, x) != Some(x), || vec![a, x], || "non-unit arrow fixes a point".into());
        }
        for c in h.arrows().filter(|&c| h.rng(c) == b.s(x) && !h.is_unit(c)) {
            sw.expect(b.act_right(x, c) != Some(x), || vec![x, c], || "non-unit arrow fixes a point".into());
        }
    }
    report.absorb(sw);

    let mut sw = Sweep::new("GE3", Coverage::Exhaustive);
    for x in b.points() {
        let ho = b.right_orbit(x);
        let go = b.left_orbit(x);
        for y in b.points() {
            let same_r = b.r(x) == b.r(y);
            sw.expect(same_r == ho.binary_search(&y).is_ok(), || vec![x, y], || {
                format!("r(x) = r(x'): {same_r}, same right orbit: {}", !same_r)
            });
            let same_s = b.s(x) == b.s(y);
            sw.expect(same_s == go.binary_search(&y).is_ok(), || vec![x, y], || {
                format!("s(x) = s(x'): {same_s}, same left orbit: {}", !same_s)
            });
        }
    }
    report.absorb(sw);

    let mut sw = Sweep::new("transporter", Coverage::Exhaustive);
    for (x, y) in p.s_pairs() {
        let a = p.lam_left(x, y).expect("verified");
        let moved = b.act_left(a, y);
        let solutions = g.arrows().filter(|&c| b.act_left(c, y) == Some(x)).count();
        sw.expect(moved == Some(x) && solutions == 1, || vec![x, y], || {
            format!("lam_left(x,x')·x' = {moved:?}, {solutions} arrows move x' to x")
        });
    }
    for (x, y) in p.r_pairs() {
        let c = p.lam_right(x, y).expect("verified");
        let moved = b.act_right(x, c);
        let solutions = h.arrows().filter(|&d| b.act_right(x, d) == Some(y)).count();
        sw.expect(moved == Some(y) && solutions == 1, || vec![x, y], || {
            format!("x·lam_right(x,x') = {moved:?}, {solutions} arrows move x to x'")
        });
    }
    report.absorb(sw);
    report
}

/// A pre-equivalence whose transporter tables are the unique transporters of a
/// genuine groupoid equivalence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupoidEquivalence {
    pre: PreEquivalence,
}

impl GroupoidEquivalence {
    pub fn from_preequivalence(pre: PreEquivalence) -> Result<Self> {
        let report = verify_equivalence(&pre);
        if !report.passed() {
            return Err(Error::Precondition(format!(
                "not a groupoid equivalence: {} fails",
                report.axiom.unwrap_or_default()
            )));
        }
        Ok(GroupoidEquivalence { pre })
    }

    /// Solves for the unique transporters, then verifies.
    pub fn from_bispace(space: GroupoidBispace) -> Result<Self> {
        Self::from_preequivalence(solve_transporters(space)?)
    }

    pub fn pre(&self) -> &PreEquivalence {
        &self.pre
    }

    pub fn space(&self) -> &GroupoidBispace {
        self.pre.space()
    }

    pub fn n_points(&self) -> usize {
        self.pre.n_points()
    }

    /// The unique `g` with `g·x′ = x`.
    pub fn transporter_left(&self, x: usize, x2: usize) -> Option<usize> {
        self.pre.lam_left(x, x2)
    }

    /// The unique `h` with `x·h = x′`.
    pub fn transporter_right(&self, x: usize, x2: usize) -> Option<usize> {
        self.pre.lam_right(x, x2)
    }

    pub fn opposite(&self) -> Self {
        GroupoidEquivalence { pre: self.pre.opposite() }
    }

    /// `G` as a `(G, G)`-equivalence over itself.
    pub fn identity(g: Arc<FiniteGroupoid>) -> Result<Self> {
        Self::from_bispace(super::identity_bispace(g))
    }

    /// `A × B` between pair groupoids.
    pub fn pair(a: Arc<FiniteGroupoid>, b: Arc<FiniteGroupoid>, na: usize, nb: usize) -> Result<Self> {
        Self::from_bispace(super::pair_bispace(a, b, na, nb)?)
    }
}

/// The pre-equivalence whose transporters are the unique arrows moving one point to another;
/// fails when some transporter is missing or ambiguous.
pub fn solve_transporters(space: GroupoidBispace) -> Result<PreEquivalence> {
    let n = space.n_points();
    let (g, h) = (space.left().clone(), space.right().clone());
    let mut lam_left = vec![None; n * n];
    let mut lam_right = vec![None; n * n];
    for x in 0..n {
        for y in 0..n {
            if space.s(x) == space.s(y) {
                let sols: Vec<usize> = g.arrows().filter(|&a| space.act_left(a, y) == Some(x)).collect();
                if sols.len() != 1 {
                    return Err(Error::Precondition(format!(
                        "{} left transporters from {y} to {x}",
                        sols.len()
                    )));
                }
                lam_left[x * n + y] = Some(sols[0]);
            }
            if space.r(x) == space.r(y) {
                let sols: Vec<usize> = h.arrows().filter(|&c| space.act_right(x, c) == Some(y)).collect();
                if sols.len() != 1 {
                    return Err(Error::Precondition(format!(
                        "{} right transporters from {x} to {y}",
                        sols.len()
                    )));
                }
                lam_right[x * n + y] = Some(sols[0]);
            }
        }
    }
    PreEquivalence::from_parts(space, lam_left, lam_right)
}

pub fn promote_equivalence_to_preequiv(e: &GroupoidEquivalence) -> PreEquivalence {
    e.pre.clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groupoid::{cyclic_group_table, make_group_groupoid, make_pair_groupoid};

    #[test]
    fn identity_transporters_are_quotients() {
        let g = Arc::new(make_group_groupoid(&cyclic_group_table(3)).unwrap());
        let e = GroupoidEquivalence::identity(g.clone()).unwrap();
        for x in g.arrows() {
            for y in g.arrows() {
                let want = g.comp(x, g.inv(y)).unwrap();
                assert_eq!(e.transporter_left(x, y), Some(want));
                assert_eq!(e.transporter_right(x, y), Some(g.comp(g.inv(x), y).unwrap()));
            }
        }
        assert!(verify_preequivalence(e.pre()).passed());
    }

    #[test]
    fn pair_transporters_move_first_coordinate() {
        let (na, nb) = (3, 2);
        let a = Arc::new(make_pair_groupoid(na).unwrap());
        let b = Arc::new(make_pair_groupoid(nb).unwrap());
        let e = GroupoidEquivalence::pair(a, b, na, nb).unwrap();
        for i in 0..na {
            for i2 in 0..na {
                for j in 0..nb {
                    assert_eq!(e.transporter_left(i * nb + j, i2 * nb + j), Some(i * na + i2));
                }
            }
        }
    }

    #[test]
    fn single_point_transporters_are_units() {
        let t = Arc::new(make_pair_groupoid(1).unwrap());
        let e = GroupoidEquivalence::identity(t).unwrap();
        assert_eq!(e.transporter_left(0, 0), Some(0));
        assert_eq!(e.transporter_right(0, 0), Some(0));
    }

    #[test]
    fn inverted_entry_fails_inverse_law() {
        let g = Arc::new(make_group_groupoid(&cyclic_group_table(3)).unwrap());
        let e = GroupoidEquivalence::identity(g.clone()).unwrap();
        let bad = g.inv(e.transporter_left(1, 0).unwrap());
        let p = promote_equivalence_to_preequiv(&e).with_lam_left(1, 0, bad);
        let r = verify_preequivalence(&p);
        assert_eq!(r.axiom.as_deref(), Some("PE3.b"));
    }

    #[test]
    fn non_free_bispace_is_rejected() {
        // Z/2 acting trivially on one point is not free
        let z2 = Arc::new(make_group_groupoid(&cyclic_group_table(2)).unwrap());
        let t = Arc::new(make_pair_groupoid(1).unwrap());
        let space = GroupoidBispace::from_parts(super::super::BispaceParts {
            left: z2,
            right: t,
            r: vec![0],
            s: vec![0],
            left_act: vec![Some(0), Some(0)],
            right_act: vec![Some(0)],
        })
        .unwrap();
        assert!(GroupoidEquivalence::from_bispace(space).is_err());
    }
}
