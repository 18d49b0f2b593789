use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{unit_vec, BimoduleBundle};
use crate::action_space::{verify_equivalence, verify_preequivalence};
use crate::error::Result;
use crate::fell_bundle::verify_fell_bundle;
use crate::linalg::{
    hs_norm, mat_dist, min_eigenvalue, op_norm, orthonormalize, psd_check, random_cvec, rank, scaled, vec_dist,
    vec_norm, zeros, CMat, CVec,
};
use crate::report::{par_sweep, Coverage, Report, Sweep};
use crate::scalar::{Real, C};

const SEED: u64 = 0xfe11;

fn point_rng(x: usize, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(SEED ^ (salt << 32) ^ x as u64)
}

fn close<T: Real>(sw: &mut Sweep, a: &CMat<T>, b: &CMat<T>, tol: T, tuple: impl FnOnce() -> Vec<usize>) {
    let scale = hs_norm(a).max(hs_norm(b));
    sw.residual(mat_dist(a, b).as_f64(), scaled(tol, scale).as_f64(), tuple);
}

fn close_vec<T: Real>(sw: &mut Sweep, a: &CVec<T>, b: &CVec<T>, tol: T, tuple: impl FnOnce() -> Vec<usize>) {
    let scale = vec_norm(a).max(vec_norm(b));
    sw.residual(vec_dist(a, b).as_f64(), scaled(tol, scale).as_f64(), tuple);
}

/// Inner products of every pair of basis vectors over s-compatible (left) and
/// r-compatible (right) pairs of points.
struct IpTables<T: Real> {
    dims: Vec<usize>,
    ldim: Vec<usize>,
    rdim: Vec<usize>,
    left: BTreeMap<(usize, usize), Vec<CMat<T>>>,
    right: BTreeMap<(usize, usize), Vec<CMat<T>>>,
}

impl<T: Real> IpTables<T> {
    fn build<M: BimoduleBundle<T> + ?Sized>(m: &M) -> Result<Self> {
        let base = m.base();
        let sp = base.space();
        let dims: Vec<usize> = sp.points().map(|x| m.fibre_dim(x)).collect();
        let ldim = sp.points().map(|x| m.left_bundle().dim(sp.r(x))).collect();
        let rdim = sp.points().map(|x| m.right_bundle().dim(sp.s(x))).collect();
        let table = |pairs: Vec<(usize, usize)>, left: bool| -> Result<BTreeMap<(usize, usize), Vec<CMat<T>>>> {
            let rows: Vec<Result<((usize, usize), Vec<CMat<T>>)>> = pairs
                .par_iter()
                .map(|&(x1, x2)| {
                    let mut v = Vec::with_capacity(dims[x1] * dims[x2]);
                    for i1 in 0..dims[x1] {
                        for i2 in 0..dims[x2] {
                            let (e1, e2) = (unit_vec(dims[x1], i1), unit_vec(dims[x2], i2));
                            v.push(if left {
                                m.inner_left(x1, &e1, x2, &e2)?
                            } else {
                                m.inner_right(x1, &e1, x2, &e2)?
                            });
                        }
                    }
                    Ok(((x1, x2), v))
                })
                .collect();
            rows.into_iter().collect()
        };
        let left = table(base.s_pairs().collect(), true)?;
        let right = table(base.r_pairs().collect(), false)?;
        Ok(IpTables { dims, ldim, rdim, left, right })
    }

    fn lzero(&self, x1: usize, x2: usize) -> CMat<T> {
        zeros(self.ldim[x1], self.ldim[x2])
    }

    fn rzero(&self, x1: usize, x2: usize) -> CMat<T> {
        zeros(self.rdim[x1], self.rdim[x2])
    }

    fn l(&self, x1: usize, i1: usize, x2: usize, i2: usize) -> &CMat<T> {
        &self.left[&(x1, x2)][i1 * self.dims[x2] + i2]
    }

    fn r(&self, x1: usize, i1: usize, x2: usize, i2: usize) -> &CMat<T> {
        &self.right[&(x1, x2)][i1 * self.dims[x2] + i2]
    }

    /// `⟨Σ v_k e_k, e_i2⟩_B`.
    fn l_first(&self, x1: usize, v: &CVec<T>, x2: usize, i2: usize) -> CMat<T> {
        let mut out = self.lzero(x1, x2);
        for (k, c) in v.iter().enumerate() {
            out += self.l(x1, k, x2, i2) * *c;
        }
        out
    }

    /// `⟨e_i1, Σ w_k e_k⟩_B`.
    fn l_second(&self, x1: usize, i1: usize, x2: usize, w: &CVec<T>) -> CMat<T> {
        let mut out = self.lzero(x1, x2);
        for (k, c) in w.iter().enumerate() {
            out += self.l(x1, i1, x2, k) * c.conj();
        }
        out
    }

    /// `⟨Σ v_k e_k, e_i2⟩_C`.
    fn r_first(&self, x1: usize, v: &CVec<T>, x2: usize, i2: usize) -> CMat<T> {
        let mut out = self.rzero(x1, x2);
        for (k, c) in v.iter().enumerate() {
            out += self.r(x1, k, x2, i2) * c.conj();
        }
        out
    }

    /// `⟨e_i1, Σ w_k e_k⟩_C`.
    fn r_second(&self, x1: usize, i1: usize, x2: usize, w: &CVec<T>) -> CMat<T> {
        let mut out = self.rzero(x1, x2);
        for (k, c) in w.iter().enumerate() {
            out += self.r(x1, i1, x2, k) * *c;
        }
        out
    }

    fn l_of(&self, x1: usize, a: &CVec<T>, x2: usize, b: &CVec<T>) -> CMat<T> {
        let mut out = self.lzero(x1, x2);
        for (i, ca) in a.iter().enumerate() {
            for (j, cb) in b.iter().enumerate() {
                out += self.l(x1, i, x2, j) * (*ca * cb.conj());
            }
        }
        out
    }

    fn r_of(&self, x1: usize, a: &CVec<T>, x2: usize, b: &CVec<T>) -> CMat<T> {
        let mut out = self.rzero(x1, x2);
        for (i, ca) in a.iter().enumerate() {
            for (j, cb) in b.iter().enumerate() {
                out += self.r(x1, i, x2, j) * (ca.conj() * *cb);
            }
        }
        out
    }
}

/// The two actions land in the right fibres, are associative, commute, and are contractive.
pub fn verify_fell_action<T: Real, M: BimoduleBundle<T> + ?Sized>(m: &M) -> Report {
    let mut report = Report::new("fell bundle action");
    let base = m.base();
    let sp = base.space();
    let (g, h) = (base.left(), base.right());
    let (bl, br) = (m.left_bundle(), m.right_bundle());
    let tol = m.tol();
    let points: Vec<usize> = sp.points().collect();

    let sw = par_sweep("FA1", Coverage::BasisExhaustive, &points, |&x, sw| {
        let d = m.fibre_dim(x);
        for a in g.arrows().filter(|&a| g.src(a) == sp.r(x)) {
            let target = sp.act_left(a, x);
            for (k, b) in bl.fibre(a).basis().iter().enumerate() {
                for i in 0..d {
                    let tuple = || vec![a, k, x, i];
                    match m.act_left(a, b, x, &unit_vec(d, i)) {
                        Ok(out) => {
                            sw.expect(Some(out.point) == target, tuple, || {
                                format!("left action landed at {} instead of {target:?}", out.point)
                            });
                            sw.residual(out.residual.as_f64(), scaled(tol, vec_norm(&out.coords)).as_f64(), tuple);
                        }
                        Err(e) => sw.expect(false, tuple, || e.to_string()),
                    }
                }
            }
        }
        for c in h.arrows().filter(|&c| h.rng(c) == sp.s(x)) {
            let target = sp.act_right(x, c);
            for (k, cm) in br.fibre(c).basis().iter().enumerate() {
                for i in 0..d {
                    let tuple = || vec![x, i, c, k];
                    match m.act_right(x, &unit_vec(d, i), c, cm) {
                        Ok(out) => {
                            sw.expect(Some(out.point) == target, tuple, || {
                                format!("right action landed at {} instead of {target:?}", out.point)
                            });
                            sw.residual(out.residual.as_f64(), scaled(tol, vec_norm(&out.coords)).as_f64(), tuple);
                        }
                        Err(e) => sw.expect(false, tuple, || e.to_string()),
                    }
                }
            }
        }
    });
    let closure_failed = sw.failed();
    report.absorb(sw);
    if closure_failed {
        return report;
    }

    let sw = par_sweep("FA2", Coverage::Sampled, &points, |&x, sw| {
        let mut rng = point_rng(x, 2);
        let d = m.fibre_dim(x);
        let v = random_cvec::<T, _>(d, &mut rng);
        for a2 in g.arrows().filter(|&a| g.src(a) == sp.r(x)) {
            for a1 in g.arrows().filter(|&a| g.src(a) == g.rng(a2)) {
                let b1 = bl.fibre(a1).random_element(&mut rng);
                let b2 = bl.fibre(a2).random_element(&mut rng);
                let a12 = g.comp(a1, a2).expect("composable");
                let tuple = || vec![a1, a2, x];
                let lhs = m.act_left(a12, &(&b1 * &b2), x, &v);
                let rhs = m
                    .act_left(a2, &b2, x, &v)
                    .and_then(|inner| m.act_left(a1, &b1, inner.point, &inner.coords));
                match (lhs, rhs) {
                    (Ok(l), Ok(r)) => {
                        sw.expect(l.point == r.point, tuple, || "left associativity moves to different points".into());
                        close_vec(sw, &l.coords, &r.coords, tol, tuple);
                    }
                    (Err(e), _) | (_, Err(e)) => sw.expect(false, tuple, || e.to_string()),
                }
            }
        }
        for c1 in h.arrows().filter(|&c| h.rng(c) == sp.s(x)) {
            for c2 in h.arrows().filter(|&c| h.rng(c) == h.src(c1)) {
                let e1 = br.fibre(c1).random_element(&mut rng);
                let e2 = br.fibre(c2).random_element(&mut rng);
                let c12 = h.comp(c1, c2).expect("composable");
                let tuple = || vec![x, c1, c2];
                let lhs = m.act_right(x, &v, c12, &(&e1 * &e2));
                let rhs = m
                    .act_right(x, &v, c1, &e1)
                    .and_then(|inner| m.act_right(inner.point, &inner.coords, c2, &e2));
                match (lhs, rhs) {
                    (Ok(l), Ok(r)) => {
                        sw.expect(l.point == r.point, tuple, || "right associativity moves to different points".into());
                        close_vec(sw, &l.coords, &r.coords, tol, tuple);
                    }
                    (Err(e), _) | (_, Err(e)) => sw.expect(false, tuple, || e.to_string()),
                }
            }
        }
        for a in g.arrows().filter(|&a| g.src(a) == sp.r(x)) {
            for c in h.arrows().filter(|&c| h.rng(c) == sp.s(x)) {
                let b = bl.fibre(a).random_element(&mut rng);
                let e = br.fibre(c).random_element(&mut rng);
                let tuple = || vec![a, x, c];
                let lhs = m.act_left(a, &b, x, &v).and_then(|t| m.act_right(t.point, &t.coords, c, &e));
                let rhs = m.act_right(x, &v, c, &e).and_then(|t| m.act_left(a, &b, t.point, &t.coords));
                match (lhs, rhs) {
                    (Ok(l), Ok(r)) => {
                        sw.expect(l.point == r.point, tuple, || "the two actions do not commute on points".into());
                        close_vec(sw, &l.coords, &r.coords, tol, tuple);
                    }
                    (Err(e), _) | (_, Err(e)) => sw.expect(false, tuple, || e.to_string()),
                }
            }
        }
    });
    report.absorb(sw);

    let sw = par_sweep("FA3", Coverage::Sampled, &points, |&x, sw| {
        let mut rng = point_rng(x, 3);
        let d = m.fibre_dim(x);
        let v = random_cvec::<T, _>(d, &mut rng);
        let nv = match m.norm(x, &v) {
            Ok(n) => n,
            Err(e) => return sw.expect(false, || vec![x], || e.to_string()),
        };
        for a in g.arrows().filter(|&a| g.src(a) == sp.r(x)) {
            let b = bl.fibre(a).random_element(&mut rng);
            let bound = op_norm(&b) * nv;
            match m.act_left(a, &b, x, &v).and_then(|t| m.norm(t.point, &t.coords)) {
                Ok(n) => sw.residual((n - bound).max(T::zero()).as_f64(), scaled(tol, bound).as_f64(), || vec![a, x]),
                Err(e) => sw.expect(false, || vec![a, x], || e.to_string()),
            }
        }
        for c in h.arrows().filter(|&c| h.rng(c) == sp.s(x)) {
            let e = br.fibre(c).random_element(&mut rng);
            let bound = op_norm(&e) * nv;
            match m.act_right(x, &v, c, &e).and_then(|t| m.norm(t.point, &t.coords)) {
                Ok(n) => sw.residual((n - bound).max(T::zero()).as_f64(), scaled(tol, bound).as_f64(), || vec![x, c]),
                Err(err) => sw.expect(false, || vec![x, c], || err.to_string()),
            }
        }
    });
    report.absorb(sw);
    report
}

/// The points s-compatible (resp. r-compatible) with each point.
fn classes<T: Real, M: BimoduleBundle<T> + ?Sized>(m: &M) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
    let sp = m.base().space();
    let n = sp.n_points();
    let s_class = (0..n).map(|x| (0..n).filter(|&y| sp.s(y) == sp.s(x)).collect()).collect();
    let r_class = (0..n).map(|x| (0..n).filter(|&y| sp.r(y) == sp.r(x)).collect()).collect();
    (s_class, r_class)
}

fn hypo<T: Real, M: BimoduleBundle<T> + ?Sized>(m: &M) -> (Report, Option<IpTables<T>>) {
    let mut report = Report::new("fell hypo-equivalence");
    let base = m.base();
    report.merge("base", verify_preequivalence(base));
    if !report.passed() {
        return (report, None);
    }
    report.merge("B", verify_fell_bundle(m.left_bundle()));
    report.merge("C", verify_fell_bundle(m.right_bundle()));
    report.merge("FE1", verify_fell_action(m));
    if report.check("FE1/FA1").is_some_and(|c| !c.passed) {
        return (report, None);
    }
    let ips = match IpTables::build(m) {
        Ok(t) => t,
        Err(e) => {
            report.structural("inner-products", Vec::new(), e.to_string());
            return (report, None);
        }
    };
    let sp = base.space();
    let (g, h) = (base.left(), base.right());
    let (bl, br) = (m.left_bundle(), m.right_bundle());
    let tol = m.tol();
    let dims = &ips.dims;
    let points: Vec<usize> = sp.points().collect();
    let (s_class, r_class) = classes(m);

    let mut sw = Sweep::new("FE2.a0", Coverage::BasisExhaustive);
    for (&(x1, x2), vals) in &ips.left {
        let a = base.lam_left(x1, x2).expect("verified");
        for (k, v) in vals.iter().enumerate() {
            let tuple = || vec![x1, k / dims[x2], x2, k % dims[x2]];
            match bl.fibre(a).expand(v) {
                Ok(e) => sw.residual(e.residual.as_f64(), scaled(tol, hs_norm(v)).as_f64(), tuple),
                Err(e) => sw.expect(false, tuple, || format!("left inner product: {e}")),
            }
        }
    }
    for (&(x1, x2), vals) in &ips.right {
        let c = base.lam_right(x1, x2).expect("verified");
        for (k, v) in vals.iter().enumerate() {
            let tuple = || vec![x1, k / dims[x2], x2, k % dims[x2]];
            match br.fibre(c).expand(v) {
                Ok(e) => sw.residual(e.residual.as_f64(), scaled(tol, hs_norm(v)).as_f64(), tuple),
                Err(e) => sw.expect(false, tuple, || format!("right inner product: {e}")),
            }
        }
    }
    let misplaced = sw.failed();
    report.absorb(sw);
    if misplaced {
        return (report, None);
    }

    let mut sw = Sweep::new("FE2.b", Coverage::BasisExhaustive);
    for &(x1, x2) in ips.left.keys() {
        for i1 in 0..dims[x1] {
            for i2 in 0..dims[x2] {
                close(&mut sw, &ips.l(x1, i1, x2, i2).adjoint(), ips.l(x2, i2, x1, i1), tol, || vec![x1, i1, x2, i2]);
            }
        }
    }
    for &(x1, x2) in ips.right.keys() {
        for i1 in 0..dims[x1] {
            for i2 in 0..dims[x2] {
                close(&mut sw, &ips.r(x1, i1, x2, i2).adjoint(), ips.r(x2, i2, x1, i1), tol, || vec![x1, i1, x2, i2]);
            }
        }
    }
    report.absorb(sw);

    // ⟨b·m1, m2⟩_B = b⟨m1, m2⟩_B and ⟨m1, m2·c⟩_C = ⟨m1, m2⟩_C c
    let sw = par_sweep("FE2.c", Coverage::BasisExhaustive, &points, |&x1, sw| {
        for a in g.arrows().filter(|&a| g.src(a) == sp.r(x1)) {
            for (k, b) in bl.fibre(a).basis().iter().enumerate() {
                for i1 in 0..dims[x1] {
                    let moved = match m.act_left(a, b, x1, &unit_vec(dims[x1], i1)) {
                        Ok(t) => t,
                        Err(e) => return sw.expect(false, || vec![a, k, x1, i1], || e.to_string()),
                    };
                    for &x2 in &s_class[x1] {
                        for i2 in 0..dims[x2] {
                            let lhs = ips.l_first(moved.point, &moved.coords, x2, i2);
                            let rhs = b * ips.l(x1, i1, x2, i2);
                            close(sw, &lhs, &rhs, tol, || vec![a, k, x1, i1, x2, i2]);
                        }
                    }
                }
            }
        }
        let x2 = x1;
        for c in h.arrows().filter(|&c| h.rng(c) == sp.s(x2)) {
            for (k, e) in br.fibre(c).basis().iter().enumerate() {
                for i2 in 0..dims[x2] {
                    let moved = match m.act_right(x2, &unit_vec(dims[x2], i2), c, e) {
                        Ok(t) => t,
                        Err(err) => return sw.expect(false, || vec![x2, i2, c, k], || err.to_string()),
                    };
                    for &x1 in &r_class[x2] {
                        for i1 in 0..dims[x1] {
                            let lhs = ips.r_second(x1, i1, moved.point, &moved.coords);
                            let rhs = ips.r(x1, i1, x2, i2) * e;
                            close(sw, &lhs, &rhs, tol, || vec![x1, i1, x2, i2, c, k]);
                        }
                    }
                }
            }
        }
    });
    report.absorb(sw);

    // ⟨m1·c, m2⟩_B = ⟨m1, m2·c*⟩_B and ⟨b·m1, m2⟩_C = ⟨m1, b*·m2⟩_C
    let sw = par_sweep("FE2.d0", Coverage::BasisExhaustive, &points, |&x1, sw| {
        for c in h.arrows().filter(|&c| h.rng(c) == sp.s(x1)) {
            let ci = h.inv(c);
            for (k, e) in br.fibre(c).basis().iter().enumerate() {
                let ea = e.adjoint();
                for i1 in 0..dims[x1] {
                    let tuple = || vec![x1, i1, c, k];
                    let moved = match m.act_right(x1, &unit_vec(dims[x1], i1), c, e) {
                        Ok(t) => t,
                        Err(err) => return sw.expect(false, tuple, || err.to_string()),
                    };
                    for &x2 in &s_class[moved.point] {
                        for i2 in 0..dims[x2] {
                            let tuple = || vec![x1, i1, c, k, x2, i2];
                            let back = match m.act_right(x2, &unit_vec(dims[x2], i2), ci, &ea) {
                                Ok(t) => t,
                                Err(err) => return sw.expect(false, tuple, || err.to_string()),
                            };
                            let lhs = ips.l_first(moved.point, &moved.coords, x2, i2);
                            let rhs = ips.l_second(x1, i1, back.point, &back.coords);
                            close(sw, &lhs, &rhs, tol, tuple);
                        }
                    }
                }
            }
        }
        for a in g.arrows().filter(|&a| g.src(a) == sp.r(x1)) {
            let ai = g.inv(a);
            for (k, b) in bl.fibre(a).basis().iter().enumerate() {
                let ba = b.adjoint();
                for i1 in 0..dims[x1] {
                    let tuple = || vec![a, k, x1, i1];
                    let moved = match m.act_left(a, b, x1, &unit_vec(dims[x1], i1)) {
                        Ok(t) => t,
                        Err(err) => return sw.expect(false, tuple, || err.to_string()),
                    };
                    for &x2 in &r_class[moved.point] {
                        for i2 in 0..dims[x2] {
                            let tuple = || vec![a, k, x1, i1, x2, i2];
                            let back = match m.act_left(ai, &ba, x2, &unit_vec(dims[x2], i2)) {
                                Ok(t) => t,
                                Err(err) => return sw.expect(false, tuple, || err.to_string()),
                            };
                            let lhs = ips.r_first(moved.point, &moved.coords, x2, i2);
                            let rhs = ips.r_second(x1, i1, back.point, &back.coords);
                            close(sw, &lhs, &rhs, tol, tuple);
                        }
                    }
                }
            }
        }
    });
    report.absorb(sw);

    // ⟨m1,m2⟩_B⟨m3,m4⟩_B = ⟨m1·⟨m2,m3⟩_C, m4⟩_B with m2, m3 in one fibre, and mirrored
    let sw = par_sweep("FE2.e", Coverage::BasisExhaustive, &points, |&x2, sw| {
        for i2 in 0..dims[x2] {
            for i3 in 0..dims[x2] {
                let cc = ips.r(x2, i2, x2, i3);
                let bb = ips.l(x2, i2, x2, i3);
                for &x1 in &s_class[x2] {
                    for i1 in 0..dims[x1] {
                        let tuple = || vec![x1, i1, x2, i2, i3];
                        let moved = match m.act_right(x1, &unit_vec(dims[x1], i1), sp.s(x1), cc) {
                            Ok(t) => t,
                            Err(err) => return sw.expect(false, tuple, || err.to_string()),
                        };
                        for &x4 in &s_class[x2] {
                            for i4 in 0..dims[x4] {
                                let lhs = ips.l(x1, i1, x2, i2) * ips.l(x2, i3, x4, i4);
                                let rhs = ips.l_first(moved.point, &moved.coords, x4, i4);
                                close(sw, &lhs, &rhs, tol, || vec![x1, i1, x2, i2, i3, x4, i4]);
                            }
                        }
                    }
                }
                for &x4 in &r_class[x2] {
                    for i4 in 0..dims[x4] {
                        let tuple = || vec![x2, i2, i3, x4, i4];
                        let moved = match m.act_left(sp.r(x4), bb, x4, &unit_vec(dims[x4], i4)) {
                            Ok(t) => t,
                            Err(err) => return sw.expect(false, tuple, || err.to_string()),
                        };
                        for &x1 in &r_class[x2] {
                            for i1 in 0..dims[x1] {
                                let lhs = ips.r(x1, i1, x2, i2) * ips.r(x2, i3, x4, i4);
                                let rhs = ips.r_second(x1, i1, moved.point, &moved.coords);
                                close(sw, &lhs, &rhs, tol, || vec![x1, i1, x2, i2, i3, x4, i4]);
                            }
                        }
                    }
                }
            }
        }
    });
    report.absorb(sw);

    fe3(m, &ips, &points, &mut report);
    (report, Some(ips))
}

fn fe3<T: Real, M: BimoduleBundle<T> + ?Sized>(m: &M, ips: &IpTables<T>, points: &[usize], report: &mut Report) {
    let sp = m.base().space();
    let (bl, br) = (m.left_bundle(), m.right_bundle());
    let tol = m.tol();
    let dims = &ips.dims;

    let mut sw = Sweep::new("FE3.full", Coverage::BasisExhaustive);
    for &x in points {
        let d = dims[x];
        for (left, unit) in [(true, sp.r(x)), (false, sp.s(x))] {
            let target = if left { bl.fibre(unit) } else { br.fibre(unit) };
            let gens: Vec<CMat<T>> = (0..d * d)
                .map(|k| if left { ips.l(x, k / d, x, k % d) } else { ips.r(x, k / d, x, k % d) }.clone())
                .collect();
            let side = if left { "left" } else { "right" };
            let spanned = orthonormalize(target.shape(), &gens, tol);
            let ok = spanned.as_ref().is_ok_and(|s| s.equals(target, tol).unwrap_or(false));
            sw.expect(ok, || vec![x], || match (d, &spanned) {
                (0, _) => format!("zero fibre cannot fill the {side} unit fibre of dimension {}", target.dim()),
                (_, Ok(s)) => format!("{side} inner products span {} of {} dimensions", s.dim(), target.dim()),
                (_, Err(e)) => e.to_string(),
            });
        }
    }
    report.absorb(sw);

    let mut sw = Sweep::new("FE3.compatible", Coverage::BasisExhaustive);
    for &x in points {
        let d = dims[x];
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    let tuple = || vec![x, i, j, k];
                    let lhs = m.act_left(sp.r(x), ips.l(x, i, x, j), x, &unit_vec(d, k));
                    let rhs = m.act_right(x, &unit_vec(d, i), sp.s(x), ips.r(x, j, x, k));
                    match (lhs, rhs) {
                        (Ok(l), Ok(r)) => close_vec(&mut sw, &l.coords, &r.coords, tol, tuple),
                        (Err(e), _) | (_, Err(e)) => sw.expect(false, tuple, || e.to_string()),
                    }
                }
            }
        }
    }
    report.absorb(sw);

    let mut pos = Sweep::new("FE3.positive", Coverage::Sampled);
    let mut norms = Sweep::new("FE3.norms", Coverage::Sampled);
    for &x in points {
        let d = dims[x];
        let mut rng = point_rng(x, 5);
        let mut samples: Vec<CVec<T>> = (0..d).map(|i| unit_vec(d, i)).collect();
        samples.extend((0..3).map(|_| random_cvec(d, &mut rng)));
        for (k, v) in samples.iter().enumerate() {
            let lb = ips.l_of(x, v, x, v);
            let rc = ips.r_of(x, v, x, v);
            for (side, p) in [(0, &lb), (1, &rc)] {
                pos.expect(psd_check(p, tol).unwrap_or(false), || vec![x, k, side], || {
                    format!("minimum eigenvalue {:.3e}", min_eigenvalue(p).as_f64())
                });
            }
            let (nb, nc) = (op_norm(&lb), op_norm(&rc));
            norms.residual((nb - nc).abs().as_f64(), scaled(tol, nb.max(nc)).as_f64(), || vec![x, k]);
        }
    }
    report.absorb(pos);
    report.absorb(norms);
}

/// Fell-bundle hypo-equivalence: the base is a pre-equivalence, the actions are Fell
/// actions, and the inner products satisfy the bimodule laws fibrewise.
pub fn verify_hypoequivalence<T: Real, M: BimoduleBundle<T> + ?Sized>(m: &M) -> Report {
    hypo(m).0
}

fn solve_left<T: Real, M: BimoduleBundle<T> + ?Sized>(m: &M, x1: usize, x2: usize) -> Option<usize> {
    let sp = m.base().space();
    sp.left().arrows().find(|&a| sp.act_left(a, x2) == Some(x1))
}

fn solve_right<T: Real, M: BimoduleBundle<T> + ?Sized>(m: &M, x1: usize, x2: usize) -> Option<usize> {
    let sp = m.base().space();
    sp.right().arrows().find(|&c| sp.act_right(x1, c) == Some(x2))
}

/// Fell-bundle equivalence over a groupoid equivalence: the hypo-equivalence laws, inner
/// products in the transporter fibres, the three-point compatibility, and nondegenerate,
/// dense actions.
pub fn verify_equivalence_bundle<T: Real, M: BimoduleBundle<T> + ?Sized>(m: &M) -> Report {
    let base_report = verify_equivalence(m.base());
    if !base_report.passed() {
        let mut report = Report::new("fell equivalence");
        let (axiom, w) = (base_report.axiom.clone(), base_report.witness.clone());
        report.merge("base", base_report);
        report.structural(
            "base-equivalence",
            w.as_ref().map(|w| w.tuple.clone()).unwrap_or_default(),
            format!("base is not a groupoid equivalence ({})", axiom.unwrap_or_default()),
        );
        return report;
    }
    let (mut report, ips) = hypo(m);
    report.subject = "fell equivalence".into();
    let Some(ips) = ips else { return report };
    let base = m.base();
    let sp = base.space();
    let (g, h) = (base.left(), base.right());
    let (bl, br) = (m.left_bundle(), m.right_bundle());
    let tol = m.tol();
    let dims = &ips.dims;
    let points: Vec<usize> = sp.points().collect();
    let (s_class, r_class) = classes(m);

    let mut sw = Sweep::new("FE2.a", Coverage::BasisExhaustive);
    for (&(x1, x2), vals) in &ips.left {
        let Some(a) = solve_left(m, x1, x2) else {
            sw.expect(false, || vec![x1, x2], || "no arrow moves x2 to x1".into());
            continue;
        };
        for (k, v) in vals.iter().enumerate() {
            let res = bl.fibre(a).expand(v).map(|e| e.residual).unwrap_or(T::lit(f64::INFINITY));
            sw.residual(res.as_f64(), scaled(tol, hs_norm(v)).as_f64(), || vec![x1, k / dims[x2], x2, k % dims[x2]]);
        }
    }
    for (&(x1, x2), vals) in &ips.right {
        let Some(c) = solve_right(m, x1, x2) else {
            sw.expect(false, || vec![x1, x2], || "no arrow moves x1 to x2".into());
            continue;
        };
        for (k, v) in vals.iter().enumerate() {
            let res = br.fibre(c).expand(v).map(|e| e.residual).unwrap_or(T::lit(f64::INFINITY));
            sw.residual(res.as_f64(), scaled(tol, hs_norm(v)).as_f64(), || vec![x1, k / dims[x2], x2, k % dims[x2]]);
        }
    }
    report.absorb(sw);

    // ⟨m1,m2⟩_B·m3 = m1·⟨m2,m3⟩_C across three fibres
    let sw = par_sweep("FE2.d", Coverage::BasisExhaustive, &points, |&x2, sw| {
        for &x1 in &s_class[x2] {
            let a = base.lam_left(x1, x2).expect("verified");
            for &x3 in &r_class[x2] {
                let c = base.lam_right(x2, x3).expect("verified");
                for i1 in 0..dims[x1] {
                    for i2 in 0..dims[x2] {
                        for i3 in 0..dims[x3] {
                            let tuple = || vec![x1, i1, x2, i2, x3, i3];
                            let lhs = m.act_left(a, ips.l(x1, i1, x2, i2), x3, &unit_vec(dims[x3], i3));
                            let rhs = m.act_right(x1, &unit_vec(dims[x1], i1), c, ips.r(x2, i2, x3, i3));
                            match (lhs, rhs) {
                                (Ok(l), Ok(r)) => {
                                    sw.expect(l.point == r.point, tuple, || {
                                        format!("sides land at points {} and {}", l.point, r.point)
                                    });
                                    close_vec(sw, &l.coords, &r.coords, tol, tuple);
                                }
                                (Err(e), _) | (_, Err(e)) => sw.expect(false, tuple, || e.to_string()),
                            }
                        }
                    }
                }
            }
        }
    });
    let d_holds = !sw.failed();
    report.absorb(sw);
    let e_d0 = ["FE2.e", "FE2.d0"].iter().all(|a| report.check(a).is_some_and(|c| c.passed));
    report.note(format!("FE2.d holds: {d_holds}; FE2.e and FE2.d0 hold: {e_d0}"));

    let mut sw = Sweep::new("nondegenerate", Coverage::BasisExhaustive);
    for a in g.arrows() {
        let basis = bl.fibre(a).basis();
        let rows: Vec<Vec<C<T>>> = basis
            .iter()
            .map(|b| {
                let mut row = Vec::new();
                for x in points.iter().copied().filter(|&x| sp.r(x) == g.src(a)) {
                    for i in 0..dims[x] {
                        if let Ok(t) = m.act_left(a, b, x, &unit_vec(dims[x], i)) {
                            row.extend(t.coords.iter().copied());
                        }
                    }
                }
                row
            })
            .collect();
        let rk = rank_of_rows(&rows, tol);
        sw.expect(rk == basis.len(), || vec![0, a], || format!("left action of a {}-dim fibre has rank {rk}", basis.len()));
    }
    for c in h.arrows() {
        let basis = br.fibre(c).basis();
        let rows: Vec<Vec<C<T>>> = basis
            .iter()
            .map(|e| {
                let mut row = Vec::new();
                for x in points.iter().copied().filter(|&x| sp.s(x) == h.rng(c)) {
                    for i in 0..dims[x] {
                        if let Ok(t) = m.act_right(x, &unit_vec(dims[x], i), c, e) {
                            row.extend(t.coords.iter().copied());
                        }
                    }
                }
                row
            })
            .collect();
        let rk = rank_of_rows(&rows, tol);
        sw.expect(rk == basis.len(), || vec![1, c], || format!("right action of a {}-dim fibre has rank {rk}", basis.len()));
    }
    report.absorb(sw);

    let mut sw = Sweep::new("dense", Coverage::BasisExhaustive);
    for &x in &points {
        for a in g.arrows().filter(|&a| g.src(a) == sp.r(x)) {
            let y = sp.act_left(a, x).expect("verified");
            let outs: Vec<CVec<T>> = bl
                .fibre(a)
                .basis()
                .iter()
                .flat_map(|b| (0..dims[x]).filter_map(move |i| m.act_left(a, b, x, &unit_vec(dims[x], i)).ok()))
                .map(|t| t.coords)
                .collect();
            let rk = if outs.is_empty() { 0 } else { rank(&CMat::from_columns(&outs), tol) };
            sw.expect(rk == dims[y], || vec![0, a, x], || format!("B_g·M_x spans {rk} of {} dimensions", dims[y]));
        }
        for c in h.arrows().filter(|&c| h.rng(c) == sp.s(x)) {
            let y = sp.act_right(x, c).expect("verified");
            let outs: Vec<CVec<T>> = br
                .fibre(c)
                .basis()
                .iter()
                .flat_map(|e| (0..dims[x]).filter_map(move |i| m.act_right(x, &unit_vec(dims[x], i), c, e).ok()))
                .map(|t| t.coords)
                .collect();
            let rk = if outs.is_empty() { 0 } else { rank(&CMat::from_columns(&outs), tol) };
            sw.expect(rk == dims[y], || vec![1, x, c], || format!("M_x·C_h spans {rk} of {} dimensions", dims[y]));
        }
    }
    report.absorb(sw);
    report
}

fn rank_of_rows<T: Real>(rows: &[Vec<C<T>>], tol: T) -> usize {
    let width = rows.iter().map(Vec::len).max().unwrap_or(0);
    if rows.iter().any(|r| r.len() != width) {
        // an action failed somewhere; count what is comparable
        return 0;
    }
    let mut mat = zeros::<T>(rows.len(), width);
    for (k, r) in rows.iter().enumerate() {
        for (j, z) in r.iter().enumerate() {
            mat[(k, j)] = *z;
        }
    }
    rank(&mat, tol)
}

/// Sampled Cauchy–Schwarz inequalities for both inner products:
/// `⟨m,m′⟩⟨m′,m⟩ ≤ ‖⟨m′,m′⟩‖⟨m,m⟩` as matrices and `‖⟨m,m′⟩‖ ≤ ‖m‖‖m′‖`.
pub fn cauchy_schwarz_check<T: Real, M: BimoduleBundle<T> + ?Sized>(m: &M, samples: usize, seed: u64) -> Report {
    let mut report = Report::new("cauchy-schwarz");
    let base = m.base();
    let tol = m.tol();
    let s_pairs: Vec<(usize, usize)> = base.s_pairs().collect();
    let r_pairs: Vec<(usize, usize)> = base.r_pairs().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut psd = Sweep::new("CS-psd", Coverage::Sampled);
    let mut nrm = Sweep::new("CS-norm", Coverage::Sampled);
    for k in 0..samples {
        for left in [true, false] {
            let pairs = if left { &s_pairs } else { &r_pairs };
            if pairs.is_empty() {
                continue;
            }
            let (x1, x2) = pairs[rng.gen_range(0..pairs.len())];
            let scale = C::new(T::lit(10f64.powi(rng.gen_range(-2..3))), T::zero());
            let v1 = random_cvec::<T, _>(m.fibre_dim(x1), &mut rng) * scale;
            let v2 = random_cvec::<T, _>(m.fibre_dim(x2), &mut rng);
            let ip = |a, va: &CVec<T>, b, vb: &CVec<T>| {
                if left {
                    m.inner_left(a, va, b, vb)
                } else {
                    m.inner_right(a, va, b, vb)
                }
            };
            let tuple = || vec![k, usize::from(!left), x1, x2];
            let (p11, p12, p22) = match (ip(x1, &v1, x1, &v1), ip(x1, &v1, x2, &v2), ip(x2, &v2, x2, &v2)) {
                (Ok(a), Ok(b), Ok(c)) => (a, b, c),
                (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => {
                    psd.expect(false, tuple, || e.to_string());
                    continue;
                }
            };
            let (n11, n22) = (op_norm(&p11), op_norm(&p22));
            let gap = if left {
                &p11 * C::new(n22, T::zero()) - &p12 * p12.adjoint()
            } else {
                &p22 * C::new(n11, T::zero()) - p12.adjoint() * &p12
            };
            let thr = scaled(tol, n11 * n22);
            psd.residual((-min_eigenvalue(&gap)).max(T::zero()).as_f64(), thr.as_f64(), tuple);
            let bound = (n11 * n22).sqrt();
            nrm.residual((op_norm(&p12) - bound).max(T::zero()).as_f64(), scaled(tol, bound).as_f64(), tuple);
        }
    }
    report.absorb(psd);
    report.absorb(nrm);
    report
}

/// Every nonzero element of a coefficient fibre acts nontrivially on some fibre element.
pub fn nontriviality_check<T: Real, M: BimoduleBundle<T> + ?Sized>(m: &M) -> Report {
    let mut report = Report::new("nontrivial actions");
    let base = m.base();
    let sp = base.space();
    let (g, h) = (base.left(), base.right());
    let tol = m.tol();
    let mut sw = Sweep::new("nontrivial", Coverage::BasisExhaustive);
    for a in g.arrows() {
        for (k, b) in m.left_bundle().fibre(a).basis().iter().enumerate() {
            let hit = sp.points().filter(|&x| sp.r(x) == g.src(a)).any(|x| {
                let d = m.fibre_dim(x);
                (0..d).any(|i| m.act_left(a, b, x, &unit_vec(d, i)).is_ok_and(|t| vec_norm(&t.coords) > tol))
            });
            sw.expect(hit, || vec![0, a, k], || "basis element acts as zero on the left".into());
        }
    }
    for c in h.arrows() {
        for (k, e) in m.right_bundle().fibre(c).basis().iter().enumerate() {
            let hit = sp.points().filter(|&x| sp.s(x) == h.rng(c)).any(|x| {
                let d = m.fibre_dim(x);
                (0..d).any(|i| m.act_right(x, &unit_vec(d, i), c, e).is_ok_and(|t| vec_norm(&t.coords) > tol))
            });
            sw.expect(hit, || vec![1, c, k], || "basis element acts as zero on the right".into());
        }
    }
    report.absorb(sw);
    report
}
