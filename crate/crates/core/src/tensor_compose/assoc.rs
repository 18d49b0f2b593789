//! `(L ⊗ M) ⊗ N ≅ L ⊗ (M ⊗ N)` fibrewise, via `(l⊗m)⊗n ↦ l⊗(m⊗n)` on triple generators.

use std::sync::Arc;

use super::{SharedBundle, TensorBundle};
use crate::equiv_bundle::{unit_vec, BimoduleBundle};
use crate::error::{Error, Result};
use crate::linalg::{hs_norm, identity, mat_dist, pseudo_inverse, scaled, zeros, CMat};
use crate::report::{Coverage, Report, Sweep};
use crate::scalar::Real;

#[derive(Clone, Debug)]
pub struct AssociativityReport {
    pub report: Report,
    /// Fibre dimensions of both sides, indexed by points of the left-bracketed product.
    pub dims: Vec<(usize, usize)>,
    pub max_unitarity_residual: f64,
}

impl AssociativityReport {
    pub fn passed(&self) -> bool {
        self.report.passed()
    }
}

pub fn associativity_check<T: Real>(
    l: SharedBundle<T>,
    m: SharedBundle<T>,
    n: SharedBundle<T>,
) -> Result<AssociativityReport> {
    let lm = Arc::new(TensorBundle::new(l.clone(), m.clone())?);
    let mn = Arc::new(TensorBundle::new(m.clone(), n.clone())?);
    let left = TensorBundle::new(lm.clone(), n.clone())?;
    let right = TensorBundle::new(l.clone(), mn.clone())?;
    let tol = left.tol();
    let thr = |s: T| scaled(tol, s).as_f64();

    let mut report = Report::new("tensor associativity");
    let mut dims_sw = Sweep::new("assoc.dims", Coverage::Exhaustive);
    let mut wd = Sweep::new("assoc.well-defined", Coverage::Exhaustive);
    let mut uni = Sweep::new("assoc.unitary", Coverage::Exhaustive);
    let mut ipl = Sweep::new("assoc.inner-left", Coverage::BasisExhaustive);
    let mut ipr = Sweep::new("assoc.inner-right", Coverage::BasisExhaustive);
    let mut dims = Vec::new();
    let mut max_uni = 0.0f64;

    for w in 0..left.product().pairs.len() {
        let (p, c) = left.product().pair(w);
        let (a, b) = lm.product().pair(p);
        let q = mn.point(b, c)?;
        let w2 = right
            .product()
            .point(a, q)
            .ok_or_else(|| Error::Lookup(format!("({a}, {q}) is not in the right-bracketed product")))?;
        let (fl, fr) = (left.fibre(w), right.fibre(w2));
        dims.push((fl.dim(), fr.dim()));
        dims_sw.expect(fl.dim() == fr.dim(), || vec![w, w2], || format!("dimensions {} and {}", fl.dim(), fr.dim()));
        if fl.dim() != fr.dim() {
            continue;
        }
        let (dl, dm, dn) = (l.fibre_dim(a), m.fibre_dim(b), n.fibre_dim(c));
        let t = dl * dm * dn;
        let mut ql = zeros::<T>(fl.dim(), t);
        let mut qr = zeros::<T>(fr.dim(), t);
        for i in 0..dl {
            for k in 0..dm {
                let lmv = lm.fibre(p).elementary(&unit_vec(dl, i), &unit_vec(dm, k))?;
                for j in 0..dn {
                    let mnv = mn.fibre(q).elementary(&unit_vec(dm, k), &unit_vec(dn, j))?;
                    let col = (i * dm + k) * dn + j;
                    ql.set_column(col, &fl.elementary(&lmv, &unit_vec(dn, j))?);
                    qr.set_column(col, &fr.elementary(&unit_vec(dl, i), &mnv)?);
                }
            }
        }
        let u: CMat<T> = &qr * pseudo_inverse(&ql, tol);
        let scale = hs_norm(&ql).max(hs_norm(&qr));
        wd.residual(mat_dist(&qr, &(&u * &ql)).as_f64(), thr(scale), || vec![w]);
        let ur = mat_dist(&(u.adjoint() * &u), &identity(fl.dim()))
            .max(mat_dist(&(&u * u.adjoint()), &identity(fr.dim())))
            .as_f64();
        max_uni = max_uni.max(ur);
        uni.residual(ur, thr(T::one()), || vec![w]);

        // Both inner products agree on the generator images.
        for s1 in 0..t {
            for s2 in 0..t {
                let (vl1, vl2) = (ql.column(s1).into_owned(), ql.column(s2).into_owned());
                let (vr1, vr2) = (qr.column(s1).into_owned(), qr.column(s2).into_owned());
                let bl = left.inner_left(w, &vl1, w, &vl2)?;
                let br = right.inner_left(w2, &vr1, w2, &vr2)?;
                ipl.residual(mat_dist(&bl, &br).as_f64(), thr(hs_norm(&bl)), || vec![w, s1, s2]);
                let dl_ = left.inner_right(w, &vl1, w, &vl2)?;
                let dr_ = right.inner_right(w2, &vr1, w2, &vr2)?;
                ipr.residual(mat_dist(&dl_, &dr_).as_f64(), thr(hs_norm(&dl_)), || vec![w, s1, s2]);
            }
        }
    }
    for s in [dims_sw, wd, uni, ipl, ipr] {
        report.absorb(s);
    }
    Ok(AssociativityReport { report, dims, max_unitarity_residual: max_uni })
}
