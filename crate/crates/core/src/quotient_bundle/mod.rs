//! The quotient `P = K / H` over the balanced product `X ∗_H Y`.
//!
//! Each `H`-orbit of the fibre product is represented by its least point, and the fibre of
//! `P` over an orbit is the fibre of `K` there. Any other point of the orbit is carried to the
//! representative by the rebalancing map of its transporter. Actions are computed in `K` and
//! transported to the representative of the orbit they land in.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::action_space::{balanced_product, BalancedProduct, GroupoidEquivalence, PreEquivalence};
use crate::equiv_bundle::{unit_vec, verify_equivalence_bundle, Acted, BimoduleBundle};
use crate::error::{Error, Result};
use crate::fell_bundle::FellBundle;
use crate::linalg::{
    hs_norm, identity, mat_dist, op_norm, orthonormalize, scaled, vec_dist, vec_norm, CMat, CVec,
};
use crate::report::{par_sweep, Coverage, Report, Sweep};
use crate::scalar::Real;
use crate::tensor_compose::{verify_psi_family, PsiFamily, Realization, TensorBundle};


/// Orbits of the fibre product under the middle groupoid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrbitIndex {
    /// Orbit of each fibre-product point.
    pub class_of: Vec<usize>,
    /// Representative point of each orbit.
    pub reps: Vec<usize>,
    /// For `z = (x, y)` with representative `(x_c, y_c)`: the `h` with `x_c·h = x` and `h·y = y_c`.
    pub transporter: Vec<usize>,
}

pub struct QuotientBundle<T: Real> {
    k: Arc<TensorBundle<T>>,
    balanced: BalancedProduct,
    orbits: OrbitIndex,
    psi: PsiFamily<T>,
    /// `K_z → K_rep(z)` for every fibre-product point.
    transports: Vec<CMat<T>>,
}

impl<T: Real> std::fmt::Debug for QuotientBundle<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("QuotientBundle")
            .field("classes", &self.orbits.reps.len())
            .field("dims", &(0..self.orbits.reps.len()).map(|c| self.fibre_dim(c)).collect::<Vec<_>>())
            .finish()
    }
}

pub fn build_quotient_bundle<T: Real>(
    k: Arc<TensorBundle<T>>,
    x_eq: &GroupoidEquivalence,
    y_eq: &GroupoidEquivalence,
) -> Result<QuotientBundle<T>> {
    if k.m().base() != x_eq.pre() || k.n().base() != y_eq.pre() {
        return Err(Error::Precondition("equivalences do not match the bases of the factors".into()));
    }
    let balanced = balanced_product(x_eq, y_eq)?;
    if balanced.fibre.pairs != k.product().pairs {
        return Err(Error::Construction("balanced product disagrees with the tensor base".into()));
    }
    let psi = PsiFamily::build(&k)?;
    let sy = y_eq.space();
    let q = &balanced.quotient;
    let n = k.product().pairs.len();
    let mut transporter = Vec::with_capacity(n);
    let mut transports = Vec::with_capacity(n);
    for z in 0..n {
        let (x, y) = k.product().pair(z);
        let c = q.projection[z];
        let rep = q.reps[c];
        let (xc, yc) = k.product().pair(rep);
        let h = x_eq
            .transporter_right(xc, x)
            .ok_or_else(|| Error::Construction(format!("no transporter from {xc} to {x}")))?;
        if sy.act_left(h, y) != Some(yc) {
            return Err(Error::Construction(format!("transporter {h} does not carry ({x}, {y}) to its representative")));
        }
        transporter.push(h);
        if z == rep {
            transports.push(identity(k.fibre(z).dim()));
        } else {
            let p = psi
                .get(h, xc, y)
                .ok_or_else(|| Error::Lookup(format!("no rebalancing map at (h, x, y) = ({h}, {xc}, {y})")))?;
            transports.push(p.matrix.clone());
        }
    }
    let orbits = OrbitIndex { class_of: q.projection.clone(), reps: q.reps.clone(), transporter };
    Ok(QuotientBundle { k, balanced, orbits, psi, transports })
}

impl<T: Real> QuotientBundle<T> {
    pub fn tensor(&self) -> &Arc<TensorBundle<T>> {
        &self.k
    }

    pub fn balanced(&self) -> &BalancedProduct {
        &self.balanced
    }

    pub fn orbits(&self) -> &OrbitIndex {
        &self.orbits
    }

    pub fn psi(&self) -> &PsiFamily<T> {
        &self.psi
    }

    pub fn n_classes(&self) -> usize {
        self.orbits.reps.len()
    }

    pub fn transport(&self, z: usize) -> &CMat<T> {
        &self.transports[z]
    }

    /// The quotient map `K_z → P_[z]`.
    pub fn q_map(&self, z: usize, coords: &CVec<T>) -> Result<(usize, CVec<T>)> {
        let t = self.transports.get(z).ok_or_else(|| Error::Lookup(format!("no point {z}")))?;
        if coords.len() != t.ncols() {
            return Err(Error::Dimension(format!("expected {} coordinates, got {}", t.ncols(), coords.len())));
        }
        Ok((self.orbits.class_of[z], t * coords))
    }

    pub fn realize_as_products(&self, class: usize) -> Result<Realization<T>> {
        self.k.realize_as_products(self.rep(class)?)
    }

    fn rep(&self, class: usize) -> Result<usize> {
        self.orbits.reps.get(class).copied().ok_or_else(|| Error::Lookup(format!("no class {class}")))
    }

    fn land(&self, a: Acted<T>) -> Acted<T> {
        let (point, coords) = (self.orbits.class_of[a.point], &self.transports[a.point] * a.coords);
        Acted { point, coords, residual: a.residual }
    }

    /// One line `z class h` per fibre-product point.
    pub fn transporter_table(&self) -> String {
        let mut s = String::new();
        for (z, (&c, &h)) in self.orbits.class_of.iter().zip(&self.orbits.transporter).enumerate() {
            s.push_str(&format!("{z} {c} {h}\n"));
        }
        s
    }
}

impl<T: Real> BimoduleBundle<T> for QuotientBundle<T> {
    fn base(&self) -> &PreEquivalence {
        self.balanced.equivalence().pre()
    }

    fn left_bundle(&self) -> &FellBundle<T> {
        self.k.left_bundle()
    }

    fn right_bundle(&self) -> &FellBundle<T> {
        self.k.right_bundle()
    }

    fn tol(&self) -> T {
        self.k.tol()
    }

    fn fibre_dim(&self, c: usize) -> usize {
        self.orbits.reps.get(c).map_or(0, |&z| self.k.fibre(z).dim())
    }

    fn act_left(&self, g: usize, b: &CMat<T>, c: usize, v: &CVec<T>) -> Result<Acted<T>> {
        let a = self.k.act_left(g, b, self.rep(c)?, v)?;
        Ok(self.land(a))
    }

    fn act_right(&self, c: usize, v: &CVec<T>, h: usize, d: &CMat<T>) -> Result<Acted<T>> {
        let a = self.k.act_right(self.rep(c)?, v, h, d)?;
        Ok(self.land(a))
    }

    fn inner_left(&self, c1: usize, v1: &CVec<T>, c2: usize, v2: &CVec<T>) -> Result<CMat<T>> {
        self.k.inner_left(self.rep(c1)?, v1, self.rep(c2)?, v2)
    }

    fn inner_right(&self, c1: usize, v1: &CVec<T>, c2: usize, v2: &CVec<T>) -> Result<CMat<T>> {
        self.k.inner_right(self.rep(c1)?, v1, self.rep(c2)?, v2)
    }

    fn realize(&self, c: usize, v: &CVec<T>) -> Option<CMat<T>> {
        self.k.realize(self.rep(c).ok()?, v)
    }
}

/// `P` is a Fell-bundle equivalence, its structure does not depend on the chosen
/// representatives, and the quotient map is fibrewise unitary.
pub fn verify_equivalence_p<T: Real>(p: &QuotientBundle<T>) -> Report {
    let mut report = Report::new("quotient equivalence");
    report.merge("", verify_equivalence_bundle(p));
    report.merge("Psi", verify_psi_family(&p.k, &p.psi, &[]));
    let k = p.k.as_ref();
    let tol = k.tol();
    let points: Vec<usize> = (0..k.product().pairs.len()).collect();

    let mut sw = Sweep::new("Q.isometry", Coverage::Exhaustive);
    for &z in &points {
        let t = &p.transports[z];
        let c = p.orbits.class_of[z];
        sw.expect(t.nrows() == p.fibre_dim(c), || vec![z], || format!("{} against {}", t.nrows(), p.fibre_dim(c)));
        if t.nrows() == t.ncols() {
            let r = mat_dist(&(t.adjoint() * t), &identity(t.ncols()));
            sw.residual(r.as_f64(), scaled(tol, T::one()).as_f64(), || vec![z]);
        } else {
            sw.expect(false, || vec![z], || format!("transport is {}×{}", t.nrows(), t.ncols()));
        }
    }
    report.absorb(sw);

    let g = k.base().left();
    let hd = k.base().right();
    let sp = k.base().space();
    let sw = par_sweep("P.rep-independence.action", Coverage::BasisExhaustive, &points, |&z, sw| {
        let d = k.fibre(z).dim();
        for i in 0..d {
            let e = unit_vec(d, i);
            let Ok((c, qe)) = p.q_map(z, &e) else { continue };
            for a in g.arrows().filter(|&a| g.src(a) == sp.r(z)) {
                for (bi, b) in k.left_bundle().fibre(a).basis().iter().enumerate() {
                    let tuple = || vec![0, z, i, a, bi];
                    let lhs = k.act_left(a, b, z, &e).and_then(|t| p.q_map(t.point, &t.coords));
                    let rhs = p.act_left(a, b, c, &qe).map(|t| (t.point, t.coords));
                    same_point(sw, lhs, rhs, tol, tuple);
                }
            }
            for h in hd.arrows().filter(|&h| hd.rng(h) == sp.s(z)) {
                for (di, dm) in k.right_bundle().fibre(h).basis().iter().enumerate() {
                    let tuple = || vec![1, z, i, h, di];
                    let lhs = k.act_right(z, &e, h, dm).and_then(|t| p.q_map(t.point, &t.coords));
                    let rhs = p.act_right(c, &qe, h, dm).map(|t| (t.point, t.coords));
                    same_point(sw, lhs, rhs, tol, tuple);
                }
            }
        }
    });
    report.absorb(sw);

    let sw = par_sweep("P.rep-independence.inner", Coverage::BasisExhaustive, &points, |&z1, sw| {
        let d1 = k.fibre(z1).dim();
        for z2 in 0..points.len() {
            let d2 = k.fibre(z2).dim();
            let (sl, sr) = (sp.s(z1) == sp.s(z2), sp.r(z1) == sp.r(z2));
            for i in 0..d1 {
                for j in 0..d2 {
                    let (e1, e2) = (unit_vec(d1, i), unit_vec(d2, j));
                    let (Ok((c1, q1)), Ok((c2, q2))) = (p.q_map(z1, &e1), p.q_map(z2, &e2)) else { continue };
                    let tuple = || vec![z1, z2, i, j];
                    if sl {
                        cmp_mat(sw, k.inner_left(z1, &e1, z2, &e2), p.inner_left(c1, &q1, c2, &q2), tol, tuple);
                    }
                    if sr {
                        cmp_mat(sw, k.inner_right(z1, &e1, z2, &e2), p.inner_right(c1, &q1, c2, &q2), tol, tuple);
                    }
                }
            }
        }
    });
    report.absorb(sw);

    report.vacuous("P.topology", "trivially satisfied (discrete)");
    report
}

fn same_point<T: Real>(
    sw: &mut Sweep,
    lhs: Result<(usize, CVec<T>)>,
    rhs: Result<(usize, CVec<T>)>,
    tol: T,
    tuple: impl Fn() -> Vec<usize>,
) {
    match (lhs, rhs) {
        (Ok((c1, l)), Ok((c2, r))) => {
            sw.expect(c1 == c2, &tuple, || format!("lands in classes {c1} and {c2}"));
            if c1 == c2 {
                let s = vec_norm(&l).max(vec_norm(&r));
                sw.residual(vec_dist(&l, &r).as_f64(), scaled(tol, s).as_f64(), &tuple);
            }
        }
        (Err(e), _) | (_, Err(e)) => sw.expect(false, tuple, || e.to_string()),
    }
}

fn cmp_mat<T: Real>(sw: &mut Sweep, a: Result<CMat<T>>, b: Result<CMat<T>>, tol: T, tuple: impl Fn() -> Vec<usize>) {
    match (a, b) {
        (Ok(a), Ok(b)) => sw.residual(mat_dist(&a, &b).as_f64(), scaled(tol, hs_norm(&a)).as_f64(), tuple),
        (Err(e), _) | (_, Err(e)) => sw.expect(false, tuple, || e.to_string()),
    }
}

/// A single fibre of `P` exhibited as an imprimitivity bimodule between the unit fibres.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoritaWitness {
    pub class: usize,
    pub dim: usize,
    /// Dimensions spanned by the fibre's own inner products.
    pub fullness_left: usize,
    pub fullness_right: usize,
    /// Dimensions of the unit fibres `B_r(c)` and `D_s(c)`.
    pub target_left: usize,
    pub target_right: usize,
    /// `max ‖⟪ξ, η⟫·ζ − ξ·⟪η, ζ⟫‖` over basis vectors.
    pub compatibility_residual: f64,
    /// `max |‖⟪ξ, ξ⟫_B‖ − ‖⟪ξ, ξ⟫_D‖|` over basis vectors and their pairwise sums.
    pub norm_residual: f64,
    /// SHA-256 of the transporter table.
    pub transporter_table_digest: String,
}

pub fn morita_witness<T: Real>(p: &QuotientBundle<T>, class: usize) -> Result<MoritaWitness> {
    let d = p.fibre_dim(class);
    p.rep(class)?;
    if d == 0 {
        return Err(Error::Precondition(format!("class {class} has a zero fibre")));
    }
    let sp = p.base().space();
    let (ru, su) = (sp.r(class), sp.s(class));
    let tol = p.tol();
    let basis: Vec<CVec<T>> = (0..d).map(|i| unit_vec(d, i)).collect();
    let mut lgen = Vec::with_capacity(d * d);
    let mut rgen = Vec::with_capacity(d * d);
    for a in &basis {
        for b in &basis {
            lgen.push(p.inner_left(class, a, class, b)?);
            rgen.push(p.inner_right(class, a, class, b)?);
        }
    }
    let (bt, dt) = (p.left_bundle().fibre(ru), p.right_bundle().fibre(su));
    let fl = orthonormalize(bt.shape(), &lgen, tol)?;
    let fr = orthonormalize(dt.shape(), &rgen, tol)?;
    if !fl.equals(bt, tol)? || !fr.equals(dt, tol)? {
        return Err(Error::Precondition(format!(
            "class {class} is not full: spans {} of {} and {} of {}",
            fl.dim(),
            bt.dim(),
            fr.dim(),
            dt.dim()
        )));
    }
    let mut compat = 0.0f64;
    for (i, a) in basis.iter().enumerate() {
        for (j, b) in basis.iter().enumerate() {
            for c in &basis {
                let lhs = p.act_left(ru, &lgen[i * d + j], class, c)?;
                let rhs = p.act_right(class, a, su, &p.inner_right(class, b, class, c)?)?;
                compat = compat.max(vec_dist(&lhs.coords, &rhs.coords).as_f64());
            }
        }
    }
    let mut samples = basis.clone();
    for i in 0..d {
        for j in i + 1..d {
            samples.push(&basis[i] + &basis[j]);
        }
    }
    let mut norm_res = 0.0f64;
    for v in &samples {
        let nb = op_norm(&p.inner_left(class, v, class, v)?);
        let nd = op_norm(&p.inner_right(class, v, class, v)?);
        norm_res = norm_res.max((nb - nd).abs().as_f64());
    }
    Ok(MoritaWitness {
        class,
        dim: d,
        fullness_left: fl.dim(),
        fullness_right: fr.dim(),
        target_left: bt.dim(),
        target_right: dt.dim(),
        compatibility_residual: compat,
        norm_residual: norm_res,
        transporter_table_digest: hex::encode(Sha256::digest(p.transporter_table().as_bytes())),
    })
}
