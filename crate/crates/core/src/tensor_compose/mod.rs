//! The balanced tensor bundle `K = M ⊗ N` over the fibre product `X ∗ Y`.
//!
//! A fibre `K_(x,y)` is the algebraic tensor `M_x ⊗ N_y` divided by the null space of the
//! trace of its `D`-valued inner product, in orthonormal quotient coordinates. Inner products
//! between fibres are precomputed in those coordinates, one matrix per entry of the value.

mod assoc;
mod psi;

pub use assoc::{associativity_check, AssociativityReport};
pub use psi::{build_psi, verify_psi_properties, PsiFamily, PsiMap};
pub(crate) use psi::verify_psi_family;

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;

use crate::action_space::{fibre_product_preequiv, FibreProduct, PreEquivalence};
use crate::equiv_bundle::{cauchy_schwarz_check, unit_vec, verify_hypoequivalence, Acted, BimoduleBundle};
use crate::error::{dim_err, Error, Result};
use crate::fell_bundle::FellBundle;
use crate::linalg::{
    gram_quotient, hs_inner_unchecked, hs_norm, identity, mat_dist, orthonormalize, rank, scaled, zeros, CMat, CVec,
    GramData, GramQuotient, MatrixSubspace,
};
use crate::report::{par_sweep, Coverage, Report, Sweep};
use crate::scalar::{Real, C};

pub type SharedBundle<T> = Arc<dyn BimoduleBundle<T>>;

/// One matrix per entry of a matrix-valued pairing: `entries[p·cols + q]`.
#[derive(Clone, Debug)]
struct EntryStack<T: Real> {
    rows: usize,
    cols: usize,
    entries: Vec<CMat<T>>,
}

impl<T: Real> EntryStack<T> {
    fn trace(&self) -> CMat<T> {
        let n = self.rows.min(self.cols);
        let mut out = self.entries.first().map(|e| zeros(e.nrows(), e.ncols())).unwrap_or_else(|| zeros(0, 0));
        for p in 0..n {
            out += &self.entries[p * self.cols + p];
        }
        out
    }

    fn map(&self, f: impl Fn(&CMat<T>) -> CMat<T>) -> Self {
        EntryStack { rows: self.rows, cols: self.cols, entries: self.entries.iter().map(f).collect() }
    }

    /// `out[p, q] = aᵀ · entries[p, q] · b`.
    fn contract(&self, a: &CVec<T>, b: &CVec<T>) -> CMat<T> {
        let mut out = zeros(self.rows, self.cols);
        for p in 0..self.rows {
            for q in 0..self.cols {
                let e = &self.entries[p * self.cols + q];
                let mut acc = C::new(T::zero(), T::zero());
                for (r, ar) in a.iter().enumerate() {
                    let mut row = C::new(T::zero(), T::zero());
                    for (s, bs) in b.iter().enumerate() {
                        row += e[(r, s)] * *bs;
                    }
                    acc += *ar * row;
                }
                out[(p, q)] = acc;
            }
        }
        out
    }
}

/// The fibre of `K` over `(x, y)`.
#[derive(Clone, Debug)]
pub struct TensorFibre<T: Real> {
    pub point: usize,
    pub x: usize,
    pub y: usize,
    /// `dim M_x`, `dim N_y`; generator `(i, j)` has index `i·n_dim + j`.
    pub m_dim: usize,
    pub n_dim: usize,
    /// `gram[(i,j),(k,l)] = trace ⟪mᵢ⊗nⱼ, mₖ⊗nₗ⟫_D`.
    pub gram: GramData<T>,
    pub quotient: GramQuotient<T>,
    /// `trace ⟪mₖ⊗nₗ, mᵢ⊗nⱼ⟫_B` at `[(i,j),(k,l)]`; used only as a cross-check.
    pub left_gram: CMat<T>,
}

impl<T: Real> TensorFibre<T> {
    pub fn dim(&self) -> usize {
        self.quotient.dim
    }

    pub fn n_generators(&self) -> usize {
        self.m_dim * self.n_dim
    }

    pub fn generator(&self, i: usize, j: usize) -> usize {
        i * self.n_dim + j
    }

    /// Quotient coordinates of `m ⊗ n` from fibre coordinates of `m` and `n`.
    pub fn elementary(&self, m: &CVec<T>, n: &CVec<T>) -> Result<CVec<T>> {
        if m.len() != self.m_dim || n.len() != self.n_dim {
            return Err(Error::Lookup(format!(
                "elementary tensor of lengths ({}, {}) in a fibre over ({}, {})",
                m.len(),
                n.len(),
                self.x,
                self.y
            )));
        }
        Ok(self.quotient.coords(&m.kronecker(n)))
    }

    /// `‖L* G L − I‖`: the quotient coordinates are orthonormal for the Gram form.
    pub fn isometry_residual(&self) -> T {
        let l = &self.quotient.lift;
        let g = l.adjoint() * &self.gram.gram * l;
        mat_dist(&g, &identity(self.dim()))
    }

    /// The left Gram must vanish on the same null space and have the same rank.
    pub fn left_cross_check(&self, tol: T) -> (T, usize) {
        let nb = &self.quotient.null_basis;
        let res = if nb.ncols() == 0 { T::zero() } else { hs_norm(&(&self.left_gram * nb)) };
        (res, rank(&self.left_gram, tol))
    }
}

/// Matrix realization of a tensor fibre: `m ⊗ n ↦ m·n`.
#[derive(Clone, Debug)]
pub struct Realization<T: Real> {
    pub span: MatrixSubspace<T>,
    /// Image of each orthonormal quotient coordinate vector.
    pub images: Vec<CMat<T>>,
    /// Largest entrywise gap between the realized and abstract Gram matrices.
    pub gram_residual: T,
    /// `‖⟨images_r, images_s⟩_HS − δ_rs‖`.
    pub isometry_residual: T,
}

/// `K = M ⊗ N` for a `(B, C)`-bundle `M` and a `(C, D)`-bundle `N`.
pub struct TensorBundle<T: Real> {
    m: SharedBundle<T>,
    n: SharedBundle<T>,
    product: FibreProduct,
    fibres: Vec<TensorFibre<T>>,
    ip_left: BTreeMap<(usize, usize), EntryStack<T>>,
    ip_right: BTreeMap<(usize, usize), EntryStack<T>>,
    tol: T,
}

impl<T: Real> std::fmt::Debug for TensorBundle<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TensorBundle")
            .field("points", &self.fibres.len())
            .field("dims", &self.fibres.iter().map(TensorFibre::dim).collect::<Vec<_>>())
            .finish()
    }
}

fn same_bundle<T: Real>(a: &FellBundle<T>, b: &FellBundle<T>, tol: T) -> bool {
    a.groupoid() == b.groupoid()
        && a.dims() == b.dims()
        && a.fibres().iter().zip(b.fibres()).all(|(f, g)| f.equals(g, tol).unwrap_or(false))
}

/// Generator-level `⟪mᵢ⊗nⱼ, m′ₖ⊗n′ₗ⟫_D = ⟨nⱼ, ⟨mᵢ,m′ₖ⟩_C·n′ₗ⟫_D` for r-compatible points.
fn generator_ip_right<T: Real>(
    m: &dyn BimoduleBundle<T>,
    n: &dyn BimoduleBundle<T>,
    (x1, y1): (usize, usize),
    (x2, y2): (usize, usize),
) -> Result<EntryStack<T>> {
    let k = m
        .base()
        .lam_right(x1, x2)
        .ok_or_else(|| Error::Pairing(format!("points {x1}, {x2} of M are not r-compatible")))?;
    let ck = m.right_bundle().fibre(k);
    let (dx1, dx2, dy1, dy2) = (m.fibre_dim(x1), m.fibre_dim(x2), n.fibre_dim(y1), n.fibre_dim(y2));
    let mut beta = vec![zeros::<T>(dx1, dx2); ck.dim()];
    for i in 0..dx1 {
        for i2 in 0..dx2 {
            let v = m.inner_right(x1, &unit_vec(dx1, i), x2, &unit_vec(dx2, i2))?;
            let e = ck.expand(&v)?;
            for (g, c) in e.coeffs.iter().enumerate() {
                beta[g][(i, i2)] = *c;
            }
        }
    }
    let ky2 = n
        .base()
        .space()
        .act_left(k, y2)
        .ok_or_else(|| Error::Action(format!("arrow {k} cannot act on point {y2} of N")))?;
    let rows = n.right_bundle().dim(n.base().space().s(y1));
    let cols = n.right_bundle().dim(n.base().space().s(y2));
    let mut entries = vec![zeros::<T>(dx1 * dy1, dx2 * dy2); rows * cols];
    for (g, c) in ck.basis().iter().enumerate() {
        let mut q = vec![zeros::<T>(dy1, dy2); rows * cols];
        for l in 0..dy2 {
            let moved = n.act_left(k, c, y2, &unit_vec(dy2, l))?;
            for j in 0..dy1 {
                let v = n.inner_right(y1, &unit_vec(dy1, j), ky2, &moved.coords)?;
                for (pq, z) in v.iter().enumerate() {
                    // nalgebra stores column-major; translate to row-major entry index
                    let (p, qq) = (pq % rows, pq / rows);
                    q[p * cols + qq][(j, l)] = *z;
                }
            }
        }
        for (e, qe) in entries.iter_mut().zip(&q) {
            *e += beta[g].kronecker(qe);
        }
    }
    Ok(EntryStack { rows, cols, entries })
}

/// Generator-level `⟪mᵢ⊗nⱼ, m′ₖ⊗n′ₗ⟫_B = ⟨mᵢ·⟨nⱼ,n′ₗ⟩_C, m′ₖ⟩_B` for s-compatible points.
fn generator_ip_left<T: Real>(
    m: &dyn BimoduleBundle<T>,
    n: &dyn BimoduleBundle<T>,
    (x1, y1): (usize, usize),
    (x2, y2): (usize, usize),
) -> Result<EntryStack<T>> {
    let k = n
        .base()
        .lam_left(y1, y2)
        .ok_or_else(|| Error::Pairing(format!("points {y1}, {y2} of N are not s-compatible")))?;
    let ck = m.right_bundle().fibre(k);
    let (dx1, dx2, dy1, dy2) = (m.fibre_dim(x1), m.fibre_dim(x2), n.fibre_dim(y1), n.fibre_dim(y2));
    let mut beta = vec![zeros::<T>(dy1, dy2); ck.dim()];
    for j in 0..dy1 {
        for l in 0..dy2 {
            let v = n.inner_left(y1, &unit_vec(dy1, j), y2, &unit_vec(dy2, l))?;
            let e = ck.expand(&v)?;
            for (g, c) in e.coeffs.iter().enumerate() {
                beta[g][(j, l)] = *c;
            }
        }
    }
    let x1k = m
        .base()
        .space()
        .act_right(x1, k)
        .ok_or_else(|| Error::Action(format!("arrow {k} cannot act on point {x1} of M")))?;
    let rows = m.left_bundle().dim(m.base().space().r(x1));
    let cols = m.left_bundle().dim(m.base().space().r(x2));
    let mut entries = vec![zeros::<T>(dx1 * dy1, dx2 * dy2); rows * cols];
    for (g, c) in ck.basis().iter().enumerate() {
        let mut q = vec![zeros::<T>(dx1, dx2); rows * cols];
        for i in 0..dx1 {
            let moved = m.act_right(x1, &unit_vec(dx1, i), k, c)?;
            for i2 in 0..dx2 {
                let v = m.inner_left(x1k, &moved.coords, x2, &unit_vec(dx2, i2))?;
                for (pq, z) in v.iter().enumerate() {
                    let (p, qq) = (pq % rows, pq / rows);
                    q[p * cols + qq][(i, i2)] = *z;
                }
            }
        }
        for (e, qe) in entries.iter_mut().zip(&q) {
            *e += qe.kronecker(&beta[g]);
        }
    }
    Ok(EntryStack { rows, cols, entries })
}

/// Builds `K_(x,y)` from the generator-level inner products of `M_x ⊗ N_y` with itself.
pub fn balanced_tensor_fibre<T: Real>(
    m: &dyn BimoduleBundle<T>,
    n: &dyn BimoduleBundle<T>,
    point: usize,
    x: usize,
    y: usize,
) -> Result<TensorFibre<T>> {
    let (mx, sx) = (m.right_bundle().dim(m.base().space().s(x)), n.left_bundle().dim(n.base().space().r(y)));
    if m.base().space().s(x) != n.base().space().r(y) || mx != sx {
        return Err(dim_err(format!("fibres over {x} and {y} do not meet over one middle unit")));
    }
    let (m_dim, n_dim) = (m.fibre_dim(x), n.fibre_dim(y));
    let d = generator_ip_right(m, n, (x, y), (x, y))?;
    let b = generator_ip_left(m, n, (x, y), (x, y))?;
    let labels = (0..m_dim).flat_map(|i| (0..n_dim).map(move |j| vec![i, j])).collect();
    let gram = GramData { labels, gram: d.trace(), tol: m.tol() };
    let quotient = gram_quotient(&gram).map_err(|e| Error::Construction(format!("fibre over ({x}, {y}): {e}")))?;
    Ok(TensorFibre { point, x, y, m_dim, n_dim, gram, quotient, left_gram: b.trace().transpose() })
}

impl<T: Real> TensorBundle<T> {
    pub fn new(m: SharedBundle<T>, n: SharedBundle<T>) -> Result<Self> {
        let tol = m.tol();
        if !same_bundle(m.right_bundle(), n.left_bundle(), tol) {
            return Err(Error::Composition("the middle Fell bundles differ".into()));
        }
        let product = fibre_product_preequiv(m.base(), n.base())?;
        let fibres = product
            .pairs
            .par_iter()
            .enumerate()
            .map(|(z, &(x, y))| balanced_tensor_fibre(m.as_ref(), n.as_ref(), z, x, y))
            .collect::<Result<Vec<_>>>()?;

        let pre = &product.pre;
        let s_pairs: Vec<(usize, usize)> = pre.s_pairs().collect();
        let r_pairs: Vec<(usize, usize)> = pre.r_pairs().collect();
        let (mr, nr) = (m.as_ref(), n.as_ref());
        let ip_left = s_pairs
            .par_iter()
            .map(|&(z1, z2)| {
                let p = generator_ip_left(mr, nr, product.pair(z1), product.pair(z2))?;
                let (l1, l2) = (&fibres[z1].quotient.lift, &fibres[z2].quotient.lift);
                let l2c = l2.map(|z| z.conj());
                Ok(((z1, z2), p.map(|e| l1.transpose() * e * &l2c)))
            })
            .collect::<Result<BTreeMap<_, _>>>()?;
        let ip_right = r_pairs
            .par_iter()
            .map(|&(z1, z2)| {
                let p = generator_ip_right(mr, nr, product.pair(z1), product.pair(z2))?;
                let (l1, l2) = (&fibres[z1].quotient.lift, &fibres[z2].quotient.lift);
                Ok(((z1, z2), p.map(|e| l1.adjoint() * e * l2)))
            })
            .collect::<Result<BTreeMap<_, _>>>()?;
        Ok(TensorBundle { m, n, product, fibres, ip_left, ip_right, tol })
    }

    pub fn with_tol(mut self, tol: T) -> Self {
        self.tol = tol;
        self
    }

    pub fn m(&self) -> &SharedBundle<T> {
        &self.m
    }

    pub fn n(&self) -> &SharedBundle<T> {
        &self.n
    }

    pub fn product(&self) -> &FibreProduct {
        &self.product
    }

    pub fn fibre(&self, z: usize) -> &TensorFibre<T> {
        &self.fibres[z]
    }

    pub fn fibres(&self) -> &[TensorFibre<T>] {
        &self.fibres
    }

    /// `t(x, y) = s_X(x) = r_Y(y)`, a unit of the middle groupoid.
    pub fn t_map(&self, z: usize) -> usize {
        let (x, _) = self.product.pair(z);
        self.m.base().space().s(x)
    }

    pub fn point(&self, x: usize, y: usize) -> Result<usize> {
        self.product
            .point(x, y)
            .ok_or_else(|| Error::Lookup(format!("({x}, {y}) is not in the fibre product")))
    }

    /// Coordinates of `m ⊗ n` in `K_(x,y)`.
    pub fn k_elementary(&self, x: usize, m: &CVec<T>, y: usize, n: &CVec<T>) -> Result<(usize, CVec<T>)> {
        let z = self.point(x, y)?;
        Ok((z, self.fibres[z].elementary(m, n)?))
    }

    /// Matrix of the left action of `b ∈ B_g` from `K_z` to `K_{g·z}` in quotient coordinates.
    pub fn left_action_matrix(&self, g: usize, b: &CMat<T>, z: usize) -> Result<(usize, CMat<T>)> {
        let (x, y) = self.product.pair(z);
        let x2 = self
            .m
            .base()
            .space()
            .act_left(g, x)
            .ok_or_else(|| Error::Action(format!("arrow {g} cannot act on point {z}")))?;
        let z2 = self.point(x2, y)?;
        let (dx, dx2, dy) = (self.m.fibre_dim(x), self.m.fibre_dim(x2), self.n.fibre_dim(y));
        let mut a = zeros::<T>(dx2, dx);
        for i in 0..dx {
            a.set_column(i, &self.m.act_left(g, b, x, &unit_vec(dx, i))?.coords);
        }
        let gen = a.kronecker(&identity::<T>(dy));
        Ok((z2, &self.fibres[z2].quotient.coeff_map * gen * &self.fibres[z].quotient.lift))
    }

    /// Matrix of the right action of `d ∈ D_h` from `K_z` to `K_{z·h}`.
    pub fn right_action_matrix(&self, z: usize, h: usize, d: &CMat<T>) -> Result<(usize, CMat<T>)> {
        let (x, y) = self.product.pair(z);
        let y2 = self
            .n
            .base()
            .space()
            .act_right(y, h)
            .ok_or_else(|| Error::Action(format!("arrow {h} cannot act on point {z}")))?;
        let z2 = self.point(x, y2)?;
        let (dx, dy, dy2) = (self.m.fibre_dim(x), self.n.fibre_dim(y), self.n.fibre_dim(y2));
        let mut a = zeros::<T>(dy2, dy);
        for j in 0..dy {
            a.set_column(j, &self.n.act_right(y, &unit_vec(dy, j), h, d)?.coords);
        }
        let gen = identity::<T>(dx).kronecker(&a);
        Ok((z2, &self.fibres[z2].quotient.coeff_map * gen * &self.fibres[z].quotient.lift))
    }

    /// `‖coeff_map′ · A · null‖`: how far a generator-level action is from preserving the null space.
    fn descent_residual(&self, z: usize, z2: usize, gen: &CMat<T>) -> T {
        let nb = &self.fibres[z].quotient.null_basis;
        if nb.ncols() == 0 || self.fibres[z2].dim() == 0 {
            return T::zero();
        }
        hs_norm(&(&self.fibres[z2].quotient.coeff_map * gen * nb))
    }

    /// The element of `span(M_x·N_y)` represented by quotient coordinates, when both
    /// factors have matrix realizations.
    fn realize_generators(&self, z: usize) -> Option<Vec<CMat<T>>> {
        let (x, y) = self.product.pair(z);
        let f = &self.fibres[z];
        let ms: Vec<CMat<T>> =
            (0..f.m_dim).map(|i| self.m.realize(x, &unit_vec(f.m_dim, i))).collect::<Option<_>>()?;
        let ns: Vec<CMat<T>> =
            (0..f.n_dim).map(|j| self.n.realize(y, &unit_vec(f.n_dim, j))).collect::<Option<_>>()?;
        Some(ms.iter().flat_map(|a| ns.iter().map(move |b| a * b)).collect())
    }

    /// The independent matrix-product oracle for one fibre.
    pub fn realize_as_products(&self, z: usize) -> Result<Realization<T>> {
        let gens = self
            .realize_generators(z)
            .ok_or_else(|| Error::Precondition("factors have no matrix realization".into()))?;
        let f = &self.fibres[z];
        let (x, y) = self.product.pair(z);
        let shape = (
            self.m.left_bundle().dim(self.m.base().space().r(x)),
            self.n.right_bundle().dim(self.n.base().space().s(y)),
        );
        let n = gens.len();
        let mut real_gram = zeros::<T>(n, n);
        for a in 0..n {
            for b in 0..n {
                real_gram[(a, b)] = hs_inner_unchecked(&gens[b], &gens[a]);
            }
        }
        let gram_residual = if n == 0 {
            T::zero()
        } else {
            (&real_gram - &f.gram.gram).iter().fold(T::zero(), |acc, z| acc.max(z.norm_sqr().sqrt()))
        };
        let images: Vec<CMat<T>> = (0..f.dim())
            .map(|r| {
                let mut out = zeros(shape.0, shape.1);
                for (a, g) in gens.iter().enumerate() {
                    out += g * f.quotient.lift[(a, r)];
                }
                out
            })
            .collect();
        let mut iso = zeros::<T>(f.dim(), f.dim());
        for r in 0..f.dim() {
            for s in 0..f.dim() {
                iso[(r, s)] = hs_inner_unchecked(&images[s], &images[r]);
            }
        }
        let isometry_residual = mat_dist(&iso, &identity(f.dim()));
        let span = orthonormalize(shape, &gens, self.tol)?;
        let thr = scaled(T::lit(1e-8), T::one());
        if isometry_residual > thr || span.dim() != f.dim() {
            return Err(Error::OracleMismatch(format!(
                "fibre {z}: isometry residual {:.3e}, realized span {} against quotient {}",
                isometry_residual.as_f64(),
                span.dim(),
                f.dim()
            )));
        }
        Ok(Realization { span, images, gram_residual, isometry_residual })
    }
}

impl<T: Real> BimoduleBundle<T> for TensorBundle<T> {
    fn base(&self) -> &PreEquivalence {
        &self.product.pre
    }

    fn left_bundle(&self) -> &FellBundle<T> {
        self.m.left_bundle()
    }

    fn right_bundle(&self) -> &FellBundle<T> {
        self.n.right_bundle()
    }

    fn tol(&self) -> T {
        self.tol
    }

    fn fibre_dim(&self, z: usize) -> usize {
        self.fibres[z].dim()
    }

    // Quotient coordinates are intrinsic, so there is no distance to a target fibre;
    // descent to the quotient is checked separately.
    fn act_left(&self, g: usize, b: &CMat<T>, z: usize, v: &CVec<T>) -> Result<Acted<T>> {
        let (x, y) = self.product.pair(z);
        let x2 = self
            .m
            .base()
            .space()
            .act_left(g, x)
            .ok_or_else(|| Error::Action(format!("arrow {g} cannot act on point {z}")))?;
        let z2 = self.point(x2, y)?;
        let (dx, dx2, dy) = (self.m.fibre_dim(x), self.m.fibre_dim(x2), self.n.fibre_dim(y));
        if v.len() != self.fibres[z].dim() {
            return Err(dim_err(format!("{} coordinates in a {}-dim fibre", v.len(), self.fibres[z].dim())));
        }
        let mut a = zeros::<T>(dx2, dx);
        for i in 0..dx {
            a.set_column(i, &self.m.act_left(g, b, x, &unit_vec(dx, i))?.coords);
        }
        let gen = &self.fibres[z].quotient.lift * v;
        let grid = CMat::from_fn(dx, dy, |i, j| gen[i * dy + j]);
        let moved = a * grid;
        let flat = CVec::from_fn(dx2 * dy, |k, _| moved[(k / dy, k % dy)]);
        let coords = &self.fibres[z2].quotient.coeff_map * flat;
        Ok(Acted { point: z2, coords, residual: T::zero() })
    }

    fn act_right(&self, z: usize, v: &CVec<T>, h: usize, d: &CMat<T>) -> Result<Acted<T>> {
        let (x, y) = self.product.pair(z);
        let y2 = self
            .n
            .base()
            .space()
            .act_right(y, h)
            .ok_or_else(|| Error::Action(format!("arrow {h} cannot act on point {z}")))?;
        let z2 = self.point(x, y2)?;
        let (dx, dy, dy2) = (self.m.fibre_dim(x), self.n.fibre_dim(y), self.n.fibre_dim(y2));
        if v.len() != self.fibres[z].dim() {
            return Err(dim_err(format!("{} coordinates in a {}-dim fibre", v.len(), self.fibres[z].dim())));
        }
        let mut a = zeros::<T>(dy2, dy);
        for j in 0..dy {
            a.set_column(j, &self.n.act_right(y, &unit_vec(dy, j), h, d)?.coords);
        }
        let gen = &self.fibres[z].quotient.lift * v;
        let grid = CMat::from_fn(dx, dy, |i, j| gen[i * dy + j]);
        let moved = grid * a.transpose();
        let flat = CVec::from_fn(dx * dy2, |k, _| moved[(k / dy2, k % dy2)]);
        let coords = &self.fibres[z2].quotient.coeff_map * flat;
        Ok(Acted { point: z2, coords, residual: T::zero() })
    }

    fn inner_left(&self, z1: usize, v1: &CVec<T>, z2: usize, v2: &CVec<T>) -> Result<CMat<T>> {
        let w = self
            .ip_left
            .get(&(z1, z2))
            .ok_or_else(|| Error::Pairing(format!("points {z1}, {z2} are not s-compatible")))?;
        check_len(v1, self.fibres[z1].dim())?;
        check_len(v2, self.fibres[z2].dim())?;
        Ok(w.contract(v1, &v2.map(|z| z.conj())))
    }

    fn inner_right(&self, z1: usize, v1: &CVec<T>, z2: usize, v2: &CVec<T>) -> Result<CMat<T>> {
        let w = self
            .ip_right
            .get(&(z1, z2))
            .ok_or_else(|| Error::Pairing(format!("points {z1}, {z2} are not r-compatible")))?;
        check_len(v1, self.fibres[z1].dim())?;
        check_len(v2, self.fibres[z2].dim())?;
        Ok(w.contract(&v1.map(|z| z.conj()), v2))
    }

    fn realize(&self, z: usize, v: &CVec<T>) -> Option<CMat<T>> {
        let gens = self.realize_generators(z)?;
        let f = &self.fibres[z];
        if v.len() != f.dim() {
            return None;
        }
        let coeffs = &f.quotient.lift * v;
        let (x, y) = self.product.pair(z);
        let mut out = zeros(
            self.m.left_bundle().dim(self.m.base().space().r(x)),
            self.n.right_bundle().dim(self.n.base().space().s(y)),
        );
        for (g, c) in gens.iter().zip(coeffs.iter()) {
            out += g * *c;
        }
        Some(out)
    }
}

fn check_len<T: Real>(v: &CVec<T>, d: usize) -> Result<()> {
    if v.len() != d {
        return Err(dim_err(format!("{} coordinates in a {d}-dim fibre", v.len())));
    }
    Ok(())
}

/// Fibre-level checks of the construction, then the hypo-equivalence suite on `K`.
pub fn verify_hypoequiv_k<T: Real>(k: &TensorBundle<T>) -> Report {
    let mut report = Report::new("tensor bundle");
    let tol = k.tol;
    let points: Vec<usize> = (0..k.fibres.len()).collect();

    let mut sw = Sweep::new("K.gram-isometry", Coverage::Exhaustive);
    let mut cross = Sweep::new("K.left-gram", Coverage::Exhaustive);
    for f in &k.fibres {
        sw.residual(f.isometry_residual().as_f64(), scaled(tol, T::one()).as_f64(), || vec![f.point]);
        let (res, rk) = f.left_cross_check(tol);
        let scale = f.left_gram.iter().fold(T::zero(), |a, z| a.max(z.norm_sqr().sqrt()));
        cross.residual(res.as_f64(), scaled(tol, scale).as_f64(), || vec![f.point]);
        cross.expect(rk == f.dim(), || vec![f.point], || format!("left Gram rank {rk} against quotient {}", f.dim()));
    }
    report.absorb(sw);
    report.absorb(cross);

    let m = k.m.as_ref();
    let n = k.n.as_ref();
    let sw = par_sweep("K.balanced", Coverage::BasisExhaustive, &points, |&z, sw| {
        let f = &k.fibres[z];
        let (x, y) = (f.x, f.y);
        let u = m.base().space().s(x);
        for (c_idx, c) in m.right_bundle().fibre(u).basis().iter().enumerate() {
            for i in 0..f.m_dim {
                for j in 0..f.n_dim {
                    let tuple = || vec![z, i, c_idx, j];
                    let lhs = m
                        .act_right(x, &unit_vec(f.m_dim, i), u, c)
                        .and_then(|mc| f.elementary(&mc.coords, &unit_vec(f.n_dim, j)));
                    let rhs = n
                        .act_left(u, c, y, &unit_vec(f.n_dim, j))
                        .and_then(|cn| f.elementary(&unit_vec(f.m_dim, i), &cn.coords));
                    match (lhs, rhs) {
                        (Ok(l), Ok(r)) => {
                            let scale = crate::linalg::vec_norm(&l).max(crate::linalg::vec_norm(&r));
                            sw.residual(crate::linalg::vec_dist(&l, &r).as_f64(), scaled(tol, scale).as_f64(), tuple);
                        }
                        (Err(e), _) | (_, Err(e)) => sw.expect(false, tuple, || e.to_string()),
                    }
                }
            }
        }
    });
    report.absorb(sw);

    let sw = par_sweep("K.descends", Coverage::BasisExhaustive, &points, |&z, sw| {
        let (x, y) = k.product.pair(z);
        let (dx, dy) = (m.fibre_dim(x), n.fibre_dim(y));
        let sp_m = m.base().space();
        let sp_n = n.base().space();
        let g = m.base().left();
        for a in g.arrows().filter(|&a| g.src(a) == sp_m.r(x)) {
            let x2 = sp_m.act_left(a, x).expect("verified action");
            let Ok(z2) = k.point(x2, y) else { continue };
            for (bi, b) in m.left_bundle().fibre(a).basis().iter().enumerate() {
                let mut mat = zeros::<T>(m.fibre_dim(x2), dx);
                for i in 0..dx {
                    if let Ok(t) = m.act_left(a, b, x, &unit_vec(dx, i)) {
                        mat.set_column(i, &t.coords);
                    }
                }
                let gen = mat.kronecker(&identity::<T>(dy));
                sw.residual(k.descent_residual(z, z2, &gen).as_f64(), scaled(tol, hs_norm(&gen)).as_f64(), || {
                    vec![0, a, bi, z]
                });
            }
        }
        let h = n.base().right();
        for c in h.arrows().filter(|&c| h.rng(c) == sp_n.s(y)) {
            let y2 = sp_n.act_right(y, c).expect("verified action");
            let Ok(z2) = k.point(x, y2) else { continue };
            for (di, d) in n.right_bundle().fibre(c).basis().iter().enumerate() {
                let mut mat = zeros::<T>(n.fibre_dim(y2), dy);
                for j in 0..dy {
                    if let Ok(t) = n.act_right(y, &unit_vec(dy, j), c, d) {
                        mat.set_column(j, &t.coords);
                    }
                }
                let gen = identity::<T>(dx).kronecker(&mat);
                sw.residual(k.descent_residual(z, z2, &gen).as_f64(), scaled(tol, hs_norm(&gen)).as_f64(), || {
                    vec![1, z, c, di]
                });
            }
        }
    });
    report.absorb(sw);

    report.merge("", verify_hypoequivalence(k));
    report
}

/// Cauchy–Schwarz for both inner products of `K` on sampled pairs.
pub fn cauchy_schwarz_k<T: Real>(k: &TensorBundle<T>, samples: usize, seed: u64) -> Report {
    let mut r = cauchy_schwarz_check(k, samples, seed);
    r.subject = "cauchy-schwarz on the tensor bundle".into();
    r
}
