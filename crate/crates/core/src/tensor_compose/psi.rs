//! Rebalancing maps `Ψ_h : K_(x·h, y) → K_(x, h·y)`, `(m·c)⊗n ↦ m⊗(c·n)`.
//!
//! Both sides are evaluated on the triple generators `mᵢ ⊗ cₖ ⊗ nⱼ` (bases of `M_x`, `C_h`,
//! `N_y`), giving coordinate matrices `Q₁` and `Q₂`. The Gram matrices of the triple span are
//! `Qᵢ* Qᵢ`, so their null spaces are those of `Qᵢ`; `Ψ = Q₂ Q₁⁺` is well defined exactly when
//! the two row spaces coincide.

use std::collections::BTreeMap;

use rayon::prelude::*;

use super::TensorBundle;
use crate::equiv_bundle::{unit_vec, BimoduleBundle};
use crate::error::{Error, Result};
use crate::linalg::{hs_norm, identity, mat_dist, pseudo_inverse, rank, scaled, vec_dist, vec_norm, zeros, CMat};
use crate::report::{par_sweep, Coverage, Report, Sweep};
use crate::scalar::Real;

#[derive(Clone, Debug)]
pub struct PsiMap<T: Real> {
    pub h: usize,
    pub x: usize,
    pub y: usize,
    /// `(x·h, y)` and `(x, h·y)` as points of the fibre product.
    pub src: usize,
    pub dst: usize,
    pub matrix: CMat<T>,
    /// Null-space dimensions of the two triple Grams.
    pub null_dims: (usize, usize),
    pub ranks: (usize, usize),
    pub well_defined_residual: T,
    /// `‖Q₁*Q₁ − Q₂*Q₂‖`: the two scalarizations of the triple span agree.
    pub gram_residual: T,
    pub unitarity_residual: T,
}

impl<T: Real> PsiMap<T> {
    pub fn surjective(&self, src_dim: usize, dst_dim: usize) -> bool {
        self.ranks == (src_dim, dst_dim)
    }
}

pub fn build_psi<T: Real>(k: &TensorBundle<T>, h: usize, x: usize, y: usize) -> Result<PsiMap<T>> {
    let (m, n) = (k.m().as_ref(), k.n().as_ref());
    let (sx, sy) = (m.base().space(), n.base().space());
    if h >= m.base().right().n_arrows() {
        return Err(Error::Lookup(format!("no middle arrow {h}")));
    }
    let xh = sx
        .act_right(x, h)
        .ok_or_else(|| Error::Precondition(format!("s_X({x}) is not the range of {h}")))?;
    let hy = sy
        .act_left(h, y)
        .ok_or_else(|| Error::Precondition(format!("r_Y({y}) is not the source of {h}")))?;
    let (src, dst) = (k.point(xh, y)?, k.point(x, hy)?);
    let (fs, fd) = (k.fibre(src), k.fibre(dst));
    let ch = m.right_bundle().fibre(h).basis();
    let (dx, dy, nc) = (m.fibre_dim(x), n.fibre_dim(y), ch.len());
    let t = dx * nc * dy;
    let col = |i: usize, c: usize, j: usize| (i * nc + c) * dy + j;
    let mut q1 = zeros::<T>(fs.dim(), t);
    let mut q2 = zeros::<T>(fd.dim(), t);
    for i in 0..dx {
        for (ci, c) in ch.iter().enumerate() {
            let mc = m.act_right(x, &unit_vec(dx, i), h, c)?;
            for j in 0..dy {
                q1.set_column(col(i, ci, j), &fs.elementary(&mc.coords, &unit_vec(dy, j))?);
            }
        }
    }
    for (ci, c) in ch.iter().enumerate() {
        for j in 0..dy {
            let cn = n.act_left(h, c, y, &unit_vec(dy, j))?;
            for i in 0..dx {
                q2.set_column(col(i, ci, j), &fd.elementary(&unit_vec(dx, i), &cn.coords)?);
            }
        }
    }
    let tol = k.tol();
    let (r1, r2) = (rank(&q1, tol), rank(&q2, tol));
    let p1 = pseudo_inverse(&q1, tol);
    let p2 = pseudo_inverse(&q2, tol);
    let matrix = &q2 * &p1;
    let well_defined_residual = mat_dist(&q2, &(&matrix * &q1)).max(mat_dist(&q1, &(&q1 * &p2 * &q2)));
    let scale = hs_norm(&q1).max(hs_norm(&q2));
    if r1 != r2 || well_defined_residual > scaled(tol, scale) {
        return Err(Error::WellDefinedness(format!(
            "(h, x, y) = ({h}, {x}, {y}): null spaces of dimension {} and {}, residual {:.3e}",
            t - r1,
            t - r2,
            well_defined_residual.as_f64()
        )));
    }
    let gram_residual = mat_dist(&(q1.adjoint() * &q1), &(q2.adjoint() * &q2));
    let unitarity_residual = mat_dist(&(matrix.adjoint() * &matrix), &identity(fs.dim()))
        .max(mat_dist(&(&matrix * matrix.adjoint()), &identity(fd.dim())));
    Ok(PsiMap {
        h,
        x,
        y,
        src,
        dst,
        matrix,
        null_dims: (t - r1, t - r2),
        ranks: (r1, r2),
        well_defined_residual,
        gram_residual,
        unitarity_residual,
    })
}

/// Every `Ψ_h` over every admissible `(h, x, y)`, built in one parallel pass.
#[derive(Clone, Debug)]
pub struct PsiFamily<T: Real> {
    maps: BTreeMap<(usize, usize, usize), PsiMap<T>>,
}

impl<T: Real> PsiFamily<T> {
    /// `(h, x, y)` with `s_X(x) = r(h)` and `r_Y(y) = s(h)`, in lexicographic order.
    pub fn admissible(k: &TensorBundle<T>) -> Vec<(usize, usize, usize)> {
        let (sx, sy) = (k.m().base().space(), k.n().base().space());
        let hg = k.m().base().right();
        let mut out = Vec::new();
        for h in hg.arrows() {
            for x in sx.points().filter(|&x| sx.s(x) == hg.rng(h)) {
                for y in sy.points().filter(|&y| sy.r(y) == hg.src(h)) {
                    out.push((h, x, y));
                }
            }
        }
        out
    }

    /// Fails with the first offending triple in lexicographic order.
    pub fn build(k: &TensorBundle<T>) -> Result<Self> {
        let (fam, errors) = Self::build_lenient(k);
        match errors.into_iter().next() {
            Some((_, e)) => Err(e),
            None => Ok(fam),
        }
    }

    /// Keeps the maps that could be built and the failures of the rest.
    pub fn build_lenient(k: &TensorBundle<T>) -> (Self, Vec<((usize, usize, usize), Error)>) {
        let triples = Self::admissible(k);
        let built: Vec<Result<PsiMap<T>>> = triples.par_iter().map(|&(h, x, y)| build_psi(k, h, x, y)).collect();
        let mut maps = BTreeMap::new();
        let mut errors = Vec::new();
        for (key, r) in triples.into_iter().zip(built) {
            match r {
                Ok(p) => {
                    maps.insert(key, p);
                }
                Err(e) => errors.push((key, e)),
            }
        }
        (PsiFamily { maps }, errors)
    }

    pub fn get(&self, h: usize, x: usize, y: usize) -> Option<&PsiMap<T>> {
        self.maps.get(&(h, x, y))
    }

    pub fn iter(&self) -> impl Iterator<Item = &PsiMap<T>> {
        self.maps.values()
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }
}

/// Well-definedness, unitarity and surjectivity of each `Ψ_h`, then the cocycle, unit,
/// inverse and bi-equivariance laws.
pub fn verify_psi_properties<T: Real>(k: &TensorBundle<T>) -> Report {
    let (fam, errors) = PsiFamily::build_lenient(k);
    verify_psi_family(k, &fam, &errors)
}

pub(crate) fn verify_psi_family<T: Real>(
    k: &TensorBundle<T>,
    fam: &PsiFamily<T>,
    errors: &[((usize, usize, usize), Error)],
) -> Report {
    let mut report = Report::new("rebalancing maps");
    let tol = k.tol();
    let (sx, sy) = (k.m().base().space(), k.n().base().space());
    let hg = k.m().base().right();

    let mut wd = Sweep::new("Psi.well-defined", Coverage::Exhaustive);
    for ((h, x, y), e) in errors {
        wd.expect(false, || vec![*h, *x, *y], || e.to_string());
    }
    let mut sur = Sweep::new("Psi.surjective", Coverage::Exhaustive);
    let mut uni = Sweep::new("Psi.unitary", Coverage::Exhaustive);
    let mut gram = Sweep::new("Psi.gram", Coverage::Exhaustive);
    for p in fam.iter() {
        let tuple = || vec![p.h, p.x, p.y];
        wd.expect(p.null_dims.0 == p.null_dims.1, tuple, || format!("null dimensions {:?}", p.null_dims));
        wd.residual(p.well_defined_residual.as_f64(), scaled(tol, T::one()).as_f64(), tuple);
        let (ds, dd) = (k.fibre(p.src).dim(), k.fibre(p.dst).dim());
        sur.expect(p.surjective(ds, dd), tuple, || format!("ranks {:?} against fibre dimensions ({ds}, {dd})", p.ranks));
        uni.residual(p.unitarity_residual.as_f64(), scaled(tol, T::one()).as_f64(), tuple);
        gram.residual(p.gram_residual.as_f64(), scaled(tol, T::one()).as_f64(), tuple);
    }
    for s in [wd, sur, uni, gram] {
        report.absorb(s);
    }

    let maps: Vec<&PsiMap<T>> = fam.iter().collect();
    // Ψ_{h′}[x·h′⁻¹, h·y] ∘ Ψ_h[x, y] = Ψ_{h′h}[x·h′⁻¹, y]
    let sw = par_sweep("Psi2", Coverage::Exhaustive, &maps, |p, sw| {
        for h2 in hg.arrows().filter(|&a| hg.src(a) == hg.rng(p.h)) {
            let hh = hg.comp(h2, p.h).expect("composable");
            let Some(x2) = sx.act_right(p.x, hg.inv(h2)) else { continue };
            let Some(hy) = sy.act_left(p.h, p.y) else { continue };
            let tuple = || vec![h2, p.h, p.x, p.y];
            match (fam.get(h2, x2, hy), fam.get(hh, x2, p.y)) {
                (Some(a), Some(c)) => {
                    let lhs = &a.matrix * &p.matrix;
                    sw.residual(mat_dist(&lhs, &c.matrix).as_f64(), scaled(tol, hs_norm(&c.matrix)).as_f64(), tuple);
                }
                _ => sw.expect(false, tuple, || "a map in the chain is missing".into()),
            }
        }
    });
    report.absorb(sw);

    let mut sw = Sweep::new("Psi3", Coverage::Exhaustive);
    for p in maps.iter().filter(|p| hg.is_unit(p.h)) {
        let id = identity(p.matrix.nrows());
        sw.expect(p.src == p.dst, || vec![p.h, p.x, p.y], || "unit moves the fibre".into());
        sw.residual(mat_dist(&p.matrix, &id).as_f64(), scaled(tol, T::one()).as_f64(), || vec![p.h, p.x, p.y]);
    }
    report.absorb(sw);

    // Ψ_{h⁻¹}[x·h, h·y] ∘ Ψ_h[x, y] = 1
    let mut sw = Sweep::new("Psi4", Coverage::Exhaustive);
    for p in &maps {
        let tuple = || vec![p.h, p.x, p.y];
        let back = sx
            .act_right(p.x, p.h)
            .zip(sy.act_left(p.h, p.y))
            .and_then(|(xh, hy)| fam.get(hg.inv(p.h), xh, hy));
        match back {
            Some(b) => {
                let id = identity(p.matrix.ncols());
                sw.residual(mat_dist(&(&b.matrix * &p.matrix), &id).as_f64(), scaled(tol, T::one()).as_f64(), tuple);
            }
            None => sw.expect(false, tuple, || "inverse map is missing".into()),
        }
    }
    report.absorb(sw);

    let g = k.m().base().left();
    let d_gpd = k.n().base().right();
    let sw = par_sweep("Psi5", Coverage::BasisExhaustive, &maps, |p, sw| {
        let dim = p.matrix.ncols();
        for a in g.arrows().filter(|&a| g.src(a) == sx.r(p.x)) {
            let Some(ax) = sx.act_left(a, p.x) else { continue };
            let Some(q) = fam.get(p.h, ax, p.y) else {
                sw.expect(false, || vec![0, a, p.h, p.x, p.y], || "translated map is missing".into());
                continue;
            };
            for (bi, b) in k.left_bundle().fibre(a).basis().iter().enumerate() {
                for i in 0..dim {
                    let tuple = || vec![0, a, bi, p.h, p.x, p.y, i];
                    let e = unit_vec(dim, i);
                    let lhs = k.act_left(a, b, p.src, &e).map(|t| (t.point, &q.matrix * t.coords));
                    let rhs = k.act_left(a, b, p.dst, &(&p.matrix * &e)).map(|t| (t.point, t.coords));
                    compare(sw, lhs, rhs, q.dst, tol, tuple);
                }
            }
        }
        for c in d_gpd.arrows().filter(|&c| d_gpd.rng(c) == sy.s(p.y)) {
            let Some(yc) = sy.act_right(p.y, c) else { continue };
            let Some(q) = fam.get(p.h, p.x, yc) else {
                sw.expect(false, || vec![1, c, p.h, p.x, p.y], || "translated map is missing".into());
                continue;
            };
            for (di, d) in k.right_bundle().fibre(c).basis().iter().enumerate() {
                for i in 0..dim {
                    let tuple = || vec![1, c, di, p.h, p.x, p.y, i];
                    let e = unit_vec(dim, i);
                    let lhs = k.act_right(p.src, &e, c, d).map(|t| (t.point, &q.matrix * t.coords));
                    let rhs = k.act_right(p.dst, &(&p.matrix * &e), c, d).map(|t| (t.point, t.coords));
                    compare(sw, lhs, rhs, q.dst, tol, tuple);
                }
            }
        }
    });
    report.absorb(sw);
    report
}

type Landed<T> = Result<(usize, crate::linalg::CVec<T>)>;

fn compare<T: Real>(sw: &mut Sweep, lhs: Landed<T>, rhs: Landed<T>, want: usize, tol: T, tuple: impl Fn() -> Vec<usize>) {
    match (lhs, rhs) {
        (Ok((_, l)), Ok((pr, r))) => {
            sw.expect(pr == want, &tuple, || format!("right-hand side lands at {pr}, expected {want}"));
            let scale = vec_norm(&l).max(vec_norm(&r));
            sw.residual(vec_dist(&l, &r).as_f64(), scaled(tol, scale).as_f64(), &tuple);
        }
        (Err(e), _) | (_, Err(e)) => sw.expect(false, tuple, || e.to_string()),
    }
}
