//! Finite bi-spaces for a pair of groupoids, pre-equivalences and equivalences.

mod compose;
mod preequiv;

pub use compose::{
    balanced_associativity, balanced_product, check_cor_almost_equivalence, fibre_product_preequiv,
    quotient_preequivalence, AlmostEquivalence, BalancedProduct, FibreProduct, PreQuotient,
};
pub use preequiv::{
    promote_equivalence_to_preequiv, solve_transporters, verify_equivalence, verify_preequivalence, GroupoidEquivalence,
    PreEquivalence,
};

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::groupoid::FiniteGroupoid;
use crate::report::{Coverage, Report, Sweep};

/// A left `G`-space and right `H`-space on the points `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupoidBispace {
    left: Arc<FiniteGroupoid>,
    right: Arc<FiniteGroupoid>,
    r: Vec<usize>,
    s: Vec<usize>,
    left_act: Vec<Option<usize>>,
    right_act: Vec<Option<usize>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BispaceParts {
    pub left: Arc<FiniteGroupoid>,
    pub right: Arc<FiniteGroupoid>,
    /// Momentum maps into the unit ids of `left` and `right`.
    pub r: Vec<usize>,
    pub s: Vec<usize>,
    /// `left_act[g·n + x]` is `g·x`.
    pub left_act: Vec<Option<usize>>,
    /// `right_act[x·|H| + h]` is `x·h`.
    pub right_act: Vec<Option<usize>>,
}

impl GroupoidBispace {
    /// Checks table shapes and id ranges; the action laws are left to [`verify_bispace`].
    pub fn from_parts(p: BispaceParts) -> Result<Self> {
        let n = p.r.len();
        let bad = |m: &str| Error::Construction(format!("bispace table {m}"));
        if p.s.len() != n {
            return Err(bad("momentum maps differ in length"));
        }
        if p.left_act.len() != p.left.n_arrows() * n || p.right_act.len() != n * p.right.n_arrows() {
            return Err(bad("action table has the wrong size"));
        }
        if p.r.iter().any(|&u| u >= p.left.n_arrows()) || p.s.iter().any(|&u| u >= p.right.n_arrows()) {
            return Err(bad("momentum value out of range"));
        }
        if p.left_act.iter().chain(&p.right_act).flatten().any(|&x| x >= n) {
            return Err(bad("action value out of range"));
        }
        Ok(GroupoidBispace {
            left: p.left,
            right: p.right,
            r: p.r,
            s: p.s,
            left_act: p.left_act,
            right_act: p.right_act,
        })
    }

    pub fn parts(&self) -> BispaceParts {
        BispaceParts {
            left: self.left.clone(),
            right: self.right.clone(),
            r: self.r.clone(),
            s: self.s.clone(),
            left_act: self.left_act.clone(),
            right_act: self.right_act.clone(),
        }
    }

    pub fn n_points(&self) -> usize {
        self.r.len()
    }

    pub fn points(&self) -> std::ops::Range<usize> {
        0..self.r.len()
    }

    pub fn left(&self) -> &Arc<FiniteGroupoid> {
        &self.left
    }

    pub fn right(&self) -> &Arc<FiniteGroupoid> {
        &self.right
    }

    pub fn r(&self, x: usize) -> usize {
        self.r[x]
    }

    pub fn s(&self, x: usize) -> usize {
        self.s[x]
    }

    pub fn act_left(&self, g: usize, x: usize) -> Option<usize> {
        self.left_act[g * self.n_points() + x]
    }

    pub fn act_right(&self, x: usize, h: usize) -> Option<usize> {
        self.right_act[x * self.right.n_arrows() + h]
    }

    pub fn left_orbit(&self, x: usize) -> Vec<usize> {
        let mut o: Vec<usize> = self.left.arrows().filter_map(|g| self.act_left(g, x)).collect();
        o.sort_unstable();
        o.dedup();
        o
    }

    pub fn right_orbit(&self, x: usize) -> Vec<usize> {
        let mut o: Vec<usize> = self.right.arrows().filter_map(|h| self.act_right(x, h)).collect();
        o.sort_unstable();
        o.dedup();
        o
    }

    /// The same points with the roles of the two groupoids exchanged:
    /// `h·x̄ = x·h⁻¹` and `x̄·g = g⁻¹·x`.
    pub fn opposite(&self) -> Self {
        let n = self.n_points();
        let (g, h) = (&self.left, &self.right);
        let mut left_act = vec![None; h.n_arrows() * n];
        let mut right_act = vec![None; n * g.n_arrows()];
        for x in 0..n {
            for a in h.arrows() {
                left_act[a * n + x] = self.act_right(x, h.inv(a));
            }
            for a in g.arrows() {
                right_act[x * g.n_arrows() + a] = self.act_left(g.inv(a), x);
            }
        }
        GroupoidBispace {
            left: h.clone(),
            right: g.clone(),
            r: self.s.clone(),
            s: self.r.clone(),
            left_act,
            right_act,
        }
    }
}

/// Action laws, surjective momentum maps and commuting actions; freeness too when `principal`.
pub fn verify_bispace(b: &GroupoidBispace, principal: bool) -> Report {
    let mut report = Report::new("bispace");
    let (g, h) = (b.left(), b.right());

    let mut sw = Sweep::new("momentum", Coverage::Exhaustive);
    for x in b.points() {
        sw.expect(g.is_unit(b.r(x)) && h.is_unit(b.s(x)), || vec![x], || {
            format!("r = {}, s = {} are not both units", b.r(x), b.s(x))
        });
    }
    report.absorb(sw);

    let mut sw = Sweep::new("action-domain", Coverage::Exhaustive);
    for x in b.points() {
        for a in g.arrows() {
            let want = g.src(a) == b.r(x);
            sw.expect(want == b.act_left(a, x).is_some(), || vec![a, x], || {
                format!("left action defined: {}, expected {want}", !want)
            });
        }
        for a in h.arrows() {
            let want = b.s(x) == h.rng(a);
            sw.expect(want == b.act_right(x, a).is_some(), || vec![x, a], || {
                format!("right action defined: {}, expected {want}", !want)
            });
        }
    }
    report.absorb(sw);
    if !report.passed() {
        return report;
    }

    let mut sw = Sweep::new("GA1", Coverage::Exhaustive);
    for x in b.points() {
        for a in g.arrows().filter(|&a| g.src(a) == b.r(x)) {
            let y = b.act_left(a, x).expect("domain checked");
            sw.expect(b.r(y) == g.rng(a) && b.s(y) == b.s(x), || vec![a, x], || {
                format!("g·x = {y} has momenta ({}, {})", b.r(y), b.s(y))
            });
        }
        for a in h.arrows().filter(|&a| h.rng(a) == b.s(x)) {
            let y = b.act_right(x, a).expect("domain checked");
            sw.expect(b.s(y) == h.src(a) && b.r(y) == b.r(x), || vec![x, a], || {
                format!("x·h = {y} has momenta ({}, {})", b.r(y), b.s(y))
            });
        }
    }
    report.absorb(sw);

    let mut sw = Sweep::new("GA3", Coverage::Exhaustive);
    for x in b.points() {
        let l = b.act_left(b.r(x), x);
        let r = b.act_right(x, b.s(x));
        sw.expect(l == Some(x) && r == Some(x), || vec![x], || format!("r(x)·x = {l:?}, x·s(x) = {r:?}"));
    }
    report.absorb(sw);

    let mut sw = Sweep::new("GA2", Coverage::Exhaustive);
    for x in b.points() {
        for (a, c) in g.composable_pairs().filter(|&(_, c)| g.src(c) == b.r(x)) {
            let lhs = g.comp(a, c).and_then(|ac| b.act_left(ac, x));
            let rhs = b.act_left(c, x).and_then(|cx| b.act_left(a, cx));
            sw.expect(lhs.is_some() && lhs == rhs, || vec![a, c, x], || format!("(gh)·x = {lhs:?}, g·(h·x) = {rhs:?}"));
        }
        for (a, c) in h.composable_pairs().filter(|&(a, _)| h.rng(a) == b.s(x)) {
            let lhs = h.comp(a, c).and_then(|ac| b.act_right(x, ac));
            let rhs = b.act_right(x, a).and_then(|xa| b.act_right(xa, c));
            sw.expect(lhs.is_some() && lhs == rhs, || vec![x, a, c], || format!("x·(hk) = {lhs:?}, (x·h)·k = {rhs:?}"));
        }
    }
    report.absorb(sw);

    let mut sw = Sweep::new("surjectivity", Coverage::Exhaustive);
    for &u in g.units() {
        sw.expect(b.points().any(|x| b.r(x) == u), || vec![u], || format!("left unit {u} not hit by r"));
    }
    for &u in h.units() {
        sw.expect(b.points().any(|x| b.s(x) == u), || vec![u], || format!("right unit {u} not hit by s"));
    }
    report.absorb(sw);

    let mut sw = Sweep::new("commuting", Coverage::Exhaustive);
    for x in b.points() {
        for a in g.arrows().filter(|&a| g.src(a) == b.r(x)) {
            for c in h.arrows().filter(|&c| h.rng(c) == b.s(x)) {
                let lhs = b.act_left(a, x).and_then(|y| b.act_right(y, c));
                let rhs = b.act_right(x, c).and_then(|y| b.act_left(a, y));
                sw.expect(lhs == rhs, || vec![a, x, c], || format!("(g·x)·h = {lhs:?}, g·(x·h) = {rhs:?}"));
            }
        }
    }
    report.absorb(sw);

    if principal {
        let mut sw = Sweep::new("GA4", Coverage::Exhaustive);
        for x in b.points() {
            for a in g.arrows().filter(|&a| g.src(a) == b.r(x)) {
                sw.expect(b.act_left(a, x) != Some(x) || g.is_unit(a), || vec![a, x], || {
                    "non-unit arrow fixes a point".into()
                });
            }
            for c in h.arrows().filter(|&c| h.rng(c) == b.s(x)) {
                sw.expect(b.act_right(x, c) != Some(x) || h.is_unit(c), || vec![x, c], || {
                    "non-unit arrow fixes a point".into()
                });
            }
        }
        report.absorb(sw);
    }
    report.vacuous("GA5", "properness holds trivially for finite discrete spaces");
    report
}

/// `G` acting on its own arrows by composition from both sides.
pub fn identity_bispace(g: Arc<FiniteGroupoid>) -> GroupoidBispace {
    let n = g.n_arrows();
    let mut left_act = vec![None; n * n];
    let mut right_act = vec![None; n * n];
    for a in g.arrows() {
        for x in g.arrows() {
            left_act[a * n + x] = g.comp(a, x);
            right_act[x * n + a] = g.comp(x, a);
        }
    }
    GroupoidBispace {
        r: g.arrows().map(|x| g.rng(x)).collect(),
        s: g.arrows().map(|x| g.src(x)).collect(),
        left: g.clone(),
        right: g,
        left_act,
        right_act,
    }
}

/// `A × B` between the pair groupoids on `A` and `B`; point `(i, j)` has id `i·|B| + j`.
pub fn pair_bispace(a: Arc<FiniteGroupoid>, b: Arc<FiniteGroupoid>, na: usize, nb: usize) -> Result<GroupoidBispace> {
    if a.n_arrows() != na * na || b.n_arrows() != nb * nb {
        return Err(Error::Construction("pair bispace needs the pair groupoids on A and B".into()));
    }
    let n = na * nb;
    let mut left_act = vec![None; a.n_arrows() * n];
    let mut right_act = vec![None; n * b.n_arrows()];
    for i in 0..na {
        for j in 0..nb {
            let x = i * nb + j;
            for k in 0..na {
                left_act[(k * na + i) * n + x] = Some(k * nb + j);
            }
            for l in 0..nb {
                right_act[x * b.n_arrows() + j * nb + l] = Some(i * nb + l);
            }
        }
    }
    Ok(GroupoidBispace {
        left: a,
        right: b,
        r: (0..n).map(|x| (x / nb) * na + x / nb).collect(),
        s: (0..n).map(|x| (x % nb) * nb + x % nb).collect(),
        left_act,
        right_act,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groupoid::{cyclic_group_table, make_group_groupoid, make_pair_groupoid};

    #[test]
    fn identity_bispace_is_principal() {
        let g = Arc::new(make_pair_groupoid(3).unwrap());
        assert!(verify_bispace(&identity_bispace(g), true).passed());
        let z4 = Arc::new(make_group_groupoid(&cyclic_group_table(4)).unwrap());
        assert!(verify_bispace(&identity_bispace(z4), true).passed());
    }

    #[test]
    fn unit_acting_nontrivially_fails_ga3() {
        let z2 = Arc::new(make_group_groupoid(&cyclic_group_table(2)).unwrap());
        let mut p = identity_bispace(z2).parts();
        // identity element 0 now sends point 1 to point 0
        p.left_act[1] = Some(0);
        let r = verify_bispace(&GroupoidBispace::from_parts(p).unwrap(), false);
        assert_eq!(r.axiom.as_deref(), Some("GA3"));
        assert_eq!(r.witness.unwrap().tuple, vec![1]);
    }

    #[test]
    fn pair_groupoid_over_trivial_group() {
        let a = Arc::new(make_pair_groupoid(3).unwrap());
        let t = Arc::new(make_pair_groupoid(1).unwrap());
        let x = pair_bispace(a, t, 3, 1).unwrap();
        assert!(verify_bispace(&x, true).passed());
    }

    #[test]
    fn double_opposite_is_identity() {
        let a = Arc::new(make_pair_groupoid(2).unwrap());
        let b = Arc::new(make_pair_groupoid(3).unwrap());
        let x = pair_bispace(a, b, 2, 3).unwrap();
        assert!(verify_bispace(&x.opposite(), true).passed());
        assert_eq!(x.opposite().opposite(), x);
    }
}
