//! Finite groupoids as explicit composition tables.
//!
//! Arrows are the dense ids `0..n`. Units are arrows, so `src` and `rng` take
//! values among arrow ids. Composition `comp(g, h)` means "first `h`, then `g`"
//! and is defined exactly when `src(g) == rng(h)`.

use crate::error::{Error, Result};
use crate::report::{Coverage, Report, Sweep};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteGroupoid {
    src: Vec<usize>,
    rng: Vec<usize>,
    inv: Vec<usize>,
    comp: Vec<Option<usize>>,
    units: Vec<usize>,
}

/// Raw tables; every id must be below `src.len()`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupoidParts {
    pub src: Vec<usize>,
    pub rng: Vec<usize>,
    pub inv: Vec<usize>,
    /// Row-major `n × n`, `None` where undefined.
    pub comp: Vec<Option<usize>>,
    pub units: Vec<usize>,
}

impl FiniteGroupoid {
    /// Checks table shapes and id ranges only; the axioms are left to [`verify_groupoid`].
    pub fn from_parts(parts: GroupoidParts) -> Result<Self> {
        let n = parts.src.len();
        let bad = |what: &str| Error::Construction(format!("groupoid table {what}"));
        if parts.rng.len() != n || parts.inv.len() != n {
            return Err(bad("lengths disagree"));
        }
        if parts.comp.len() != n * n {
            return Err(bad("comp is not n×n"));
        }
        let in_range = |v: &usize| *v < n;
        if !parts.src.iter().all(in_range)
            || !parts.rng.iter().all(in_range)
            || !parts.inv.iter().all(in_range)
            || !parts.units.iter().all(in_range)
            || !parts.comp.iter().flatten().all(in_range)
        {
            return Err(bad("refers to an arrow id out of range"));
        }
        let mut units = parts.units;
        units.sort_unstable();
        units.dedup();
        Ok(FiniteGroupoid { src: parts.src, rng: parts.rng, inv: parts.inv, comp: parts.comp, units })
    }

    pub fn into_parts(self) -> GroupoidParts {
        GroupoidParts { src: self.src, rng: self.rng, inv: self.inv, comp: self.comp, units: self.units }
    }

    pub fn parts(&self) -> GroupoidParts {
        self.clone().into_parts()
    }

    pub fn n_arrows(&self) -> usize {
        self.src.len()
    }

    pub fn arrows(&self) -> std::ops::Range<usize> {
        0..self.src.len()
    }

    /// Sorted unit ids.
    pub fn units(&self) -> &[usize] {
        &self.units
    }

    pub fn is_unit(&self, g: usize) -> bool {
        self.units.binary_search(&g).is_ok()
    }

    pub fn src(&self, g: usize) -> usize {
        self.src[g]
    }

    pub fn rng(&self, g: usize) -> usize {
        self.rng[g]
    }

    pub fn inv(&self, g: usize) -> usize {
        self.inv[g]
    }

    pub fn comp(&self, g: usize, h: usize) -> Option<usize> {
        self.comp[g * self.n_arrows() + h]
    }

    pub fn compose(&self, g: usize, h: usize) -> Result<usize> {
        self.comp(g, h)
            .ok_or_else(|| Error::Lookup(format!("arrows {g} and {h} are not composable")))
    }

    pub fn arrows_between(&self, target: usize, source: usize) -> Vec<usize> {
        self.arrows().filter(|&g| self.rng[g] == target && self.src[g] == source).collect()
    }

    pub fn composable_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.arrows()
            .flat_map(move |g| self.arrows().map(move |h| (g, h)))
            .filter(move |&(g, h)| self.src[g] == self.rng[h])
    }
}

/// Checks every groupoid law exhaustively; the first failing law and tuple are reported.
pub fn verify_groupoid(g: &FiniteGroupoid) -> Report {
    let mut report = Report::new("groupoid");
    let n = g.n_arrows();

    let mut s = Sweep::new("units", Coverage::Exhaustive);
    for a in g.arrows() {
        let looks_like_unit = g.src(a) == a && g.rng(a) == a;
        s.expect(looks_like_unit == g.is_unit(a), || vec![a], || {
            format!("arrow {a} listed as unit: {}, src/rng fixed: {looks_like_unit}", g.is_unit(a))
        });
    }
    for a in g.arrows() {
        s.expect(g.is_unit(g.src(a)) && g.is_unit(g.rng(a)), || vec![a], || {
            format!("src/rng of {a} is not a unit")
        });
    }
    report.absorb(s);

    let mut s = Sweep::new("comp-domain", Coverage::Exhaustive);
    for a in 0..n {
        for b in 0..n {
            let composable = g.src(a) == g.rng(b);
            s.expect(composable == g.comp(a, b).is_some(), || vec![a, b], || {
                format!("composable: {composable}, comp defined: {}", g.comp(a, b).is_some())
            });
        }
    }
    report.absorb(s);

    let mut s = Sweep::new("comp-src-rng", Coverage::Exhaustive);
    for (a, b) in g.composable_pairs() {
        if let Some(ab) = g.comp(a, b) {
            s.expect(g.rng(ab) == g.rng(a) && g.src(ab) == g.src(b), || vec![a, b], || {
                format!("product {ab} has wrong endpoints")
            });
        }
    }
    report.absorb(s);

    let mut s = Sweep::new("assoc", Coverage::Exhaustive);
    for (a, b) in g.composable_pairs() {
        for c in g.arrows().filter(|&c| g.src(b) == g.rng(c)) {
            let left = g.comp(a, b).and_then(|ab| g.comp(ab, c));
            let right = g.comp(b, c).and_then(|bc| g.comp(a, bc));
            s.expect(left.is_some() && left == right, || vec![a, b, c], || {
                format!("(ab)c = {left:?}, a(bc) = {right:?}")
            });
        }
    }
    report.absorb(s);

    let mut s = Sweep::new("unit-law", Coverage::Exhaustive);
    for a in g.arrows() {
        let l = g.comp(g.rng(a), a);
        let r = g.comp(a, g.src(a));
        s.expect(l == Some(a) && r == Some(a), || vec![a], || format!("r(a)a = {l:?}, a s(a) = {r:?}"));
    }
    report.absorb(s);

    let mut s = Sweep::new("inverse", Coverage::Exhaustive);
    for a in g.arrows() {
        let i = g.inv(a);
        let left = g.comp(i, a);
        let right = g.comp(a, i);
        s.expect(left == Some(g.src(a)) && right == Some(g.rng(a)), || vec![a], || {
            format!("inv({a}) = {i}: inv·a = {left:?}, a·inv = {right:?}")
        });
    }
    report.absorb(s);
    report
}

fn validate_group_table(table: &[Vec<usize>]) -> Result<usize> {
    let n = table.len();
    let bad = |m: String| Error::Construction(format!("not a group table: {m}"));
    if n == 0 {
        return Err(bad("empty".into()));
    }
    if table.iter().any(|row| row.len() != n || row.iter().any(|&v| v >= n)) {
        return Err(bad("not a closed square table".into()));
    }
    let e = (0..n)
        .find(|&e| (0..n).all(|a| table[e][a] == a && table[a][e] == a))
        .ok_or_else(|| bad("no identity".into()))?;
    for a in 0..n {
        if !(0..n).any(|b| table[a][b] == e && table[b][a] == e) {
            return Err(bad(format!("{a} has no inverse")));
        }
        for b in 0..n {
            for c in 0..n {
                if table[table[a][b]][c] != table[a][table[b][c]] {
                    return Err(bad(format!("associativity fails at ({a},{b},{c})")));
                }
            }
        }
    }
    Ok(e)
}

/// `A × A` with arrow `(i, j)` at id `i·n + j`, range `i`, source `j`.
pub fn make_pair_groupoid(n: usize) -> Result<FiniteGroupoid> {
    if n == 0 {
        return Err(Error::Construction("pair groupoid on an empty set".into()));
    }
    let id = |i: usize, j: usize| i * n + j;
    let mut parts = GroupoidParts {
        src: Vec::with_capacity(n * n),
        rng: Vec::with_capacity(n * n),
        inv: Vec::with_capacity(n * n),
        comp: vec![None; n * n * n * n],
        units: (0..n).map(|i| id(i, i)).collect(),
    };
    for i in 0..n {
        for j in 0..n {
            parts.rng.push(id(i, i));
            parts.src.push(id(j, j));
            parts.inv.push(id(j, i));
            for k in 0..n {
                parts.comp[id(i, j) * n * n + id(j, k)] = Some(id(i, k));
            }
        }
    }
    FiniteGroupoid::from_parts(parts)
}

/// One-object groupoid; `table[a][b]` is the product `ab`.
pub fn make_group_groupoid(table: &[Vec<usize>]) -> Result<FiniteGroupoid> {
    let e = validate_group_table(table)?;
    let n = table.len();
    let inv = (0..n)
        .map(|a| (0..n).find(|&b| table[a][b] == e).expect("validated"))
        .collect();
    let comp = (0..n).flat_map(|a| (0..n).map(move |b| Some(table[a][b]))).collect();
    FiniteGroupoid::from_parts(GroupoidParts { src: vec![e; n], rng: vec![e; n], inv, comp, units: vec![e] })
}

pub fn cyclic_group_table(n: usize) -> Vec<Vec<usize>> {
    (0..n).map(|a| (0..n).map(|b| (a + b) % n).collect()).collect()
}

/// Klein four-group with `a = 2·bit_x + bit_z`.
pub fn klein_four_table() -> Vec<Vec<usize>> {
    (0..4).map(|a| (0..4).map(|b| a ^ b).collect()).collect()
}

/// Action groupoid of a group acting on `0..k` by `action[g][x]`; arrow `(g, x)` has
/// id `g·k + x`, source `x` and range `g·x`.
pub fn make_transformation_groupoid(table: &[Vec<usize>], action: &[Vec<usize>]) -> Result<FiniteGroupoid> {
    let e = validate_group_table(table)?;
    let n = table.len();
    if action.len() != n {
        return Err(Error::Construction("action needs one row per group element".into()));
    }
    let k = action[0].len();
    if k == 0 {
        return Err(Error::Construction("action on an empty set".into()));
    }
    for (g, row) in action.iter().enumerate() {
        let mut seen = vec![false; k];
        if row.len() != k || row.iter().any(|&x| x >= k) {
            return Err(Error::Construction(format!("action row {g} malformed")));
        }
        for &x in row {
            if std::mem::replace(&mut seen[x], true) {
                return Err(Error::Construction(format!("element {g} does not act bijectively")));
            }
        }
    }
    for x in 0..k {
        if action[e][x] != x {
            return Err(Error::Construction("identity acts nontrivially".into()));
        }
        for g in 0..n {
            for h in 0..n {
                if action[table[g][h]][x] != action[g][action[h][x]] {
                    return Err(Error::Construction(format!("(gh)·x ≠ g·(h·x) at ({g},{h},{x})")));
                }
            }
        }
    }
    let ginv: Vec<usize> = (0..n)
        .map(|a| (0..n).find(|&b| table[a][b] == e).expect("validated"))
        .collect();
    let id = |g: usize, x: usize| g * k + x;
    let total = n * k;
    let mut parts = GroupoidParts {
        src: vec![0; total],
        rng: vec![0; total],
        inv: vec![0; total],
        comp: vec![None; total * total],
        units: (0..k).map(|x| id(e, x)).collect(),
    };
    for g in 0..n {
        for x in 0..k {
            let gx = action[g][x];
            parts.src[id(g, x)] = id(e, x);
            parts.rng[id(g, x)] = id(e, gx);
            parts.inv[id(g, x)] = id(ginv[g], gx);
            for h in 0..n {
                // (h, g·x) after (g, x)
                parts.comp[id(h, gx) * total + id(g, x)] = Some(id(table[h][g], x));
            }
        }
    }
    FiniteGroupoid::from_parts(parts)
}

/// Arrows of `b` are shifted past those of `a`.
pub fn disjoint_union(a: &FiniteGroupoid, b: &FiniteGroupoid) -> Result<FiniteGroupoid> {
    let na = a.n_arrows();
    let nb = b.n_arrows();
    let n = na + nb;
    let mut comp = vec![None; n * n];
    for g in 0..na {
        for h in 0..na {
            comp[g * n + h] = a.comp(g, h);
        }
    }
    for g in 0..nb {
        for h in 0..nb {
            comp[(g + na) * n + h + na] = b.comp(g, h).map(|v| v + na);
        }
    }
    let shift = |v: &[usize]| v.iter().map(|x| x + na).collect::<Vec<_>>();
    let cat = |x: &[usize], y: &[usize]| x.iter().copied().chain(shift(y)).collect::<Vec<_>>();
    FiniteGroupoid::from_parts(GroupoidParts {
        src: cat(&a.src, &b.src),
        rng: cat(&a.rng, &b.rng),
        inv: cat(&a.inv, &b.inv),
        comp,
        units: cat(&a.units, &b.units),
    })
}
