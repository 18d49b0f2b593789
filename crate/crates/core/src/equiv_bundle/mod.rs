//! Bundles of bimodules over pre-equivalences: the matrix model [`BundleSpace`] and the
//! [`BimoduleBundle`] interface shared with the tensor and quotient constructions.
//!
//! Fibre elements are coordinate vectors with respect to an orthonormal basis of the
//! fibre. Elements of the coefficient bundles are passed as matrices.

mod verify;

pub use verify::{
    cauchy_schwarz_check, nontriviality_check, verify_equivalence_bundle, verify_fell_action,
    verify_hypoequivalence,
};

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::action_space::{GroupoidEquivalence, PreEquivalence};
use crate::error::{dim_err, Error, Result};
use crate::fell_bundle::{amplify, make_full_matrix_bundle, FellBundle};
use crate::linalg::{op_norm, CMat, CVec, MatrixSubspace};
use crate::scalar::{Real, C};

/// Result of acting on a fibre element: where it landed, its coordinates there, and how
/// far the raw product was from the target fibre.
#[derive(Clone, Debug)]
pub struct Acted<T: Real> {
    pub point: usize,
    pub coords: CVec<T>,
    pub residual: T,
}

/// A `(B, C)`-bimodule bundle over a pre-equivalence between the base groupoids of `B` and `C`.
pub trait BimoduleBundle<T: Real>: Send + Sync {
    fn base(&self) -> &PreEquivalence;
    fn left_bundle(&self) -> &FellBundle<T>;
    fn right_bundle(&self) -> &FellBundle<T>;
    fn tol(&self) -> T;
    fn fibre_dim(&self, x: usize) -> usize;

    /// `b·m` for `b ∈ B_g` and `m` in the fibre over `x`.
    fn act_left(&self, g: usize, b: &CMat<T>, x: usize, m: &CVec<T>) -> Result<Acted<T>>;

    /// `m·c` for `m` in the fibre over `x` and `c ∈ C_h`.
    fn act_right(&self, x: usize, m: &CVec<T>, h: usize, c: &CMat<T>) -> Result<Acted<T>>;

    /// `⟨m₁, m₂⟩_B`, linear in `m₁`; requires `s(x₁) = s(x₂)`.
    fn inner_left(&self, x1: usize, m1: &CVec<T>, x2: usize, m2: &CVec<T>) -> Result<CMat<T>>;

    /// `⟨m₁, m₂⟩_C`, linear in `m₂`; requires `r(x₁) = r(x₂)`.
    fn inner_right(&self, x1: usize, m1: &CVec<T>, x2: usize, m2: &CVec<T>) -> Result<CMat<T>>;

    /// `‖⟨m, m⟩_B‖^{1/2}`.
    fn norm(&self, x: usize, m: &CVec<T>) -> Result<T> {
        Ok(op_norm(&self.inner_left(x, m, x, m)?).sqrt())
    }

    /// A matrix representing `m`, when the bundle has one.
    fn realize(&self, _x: usize, _m: &CVec<T>) -> Option<CMat<T>> {
        None
    }
}

pub(crate) fn unit_vec<T: Real>(n: usize, i: usize) -> CVec<T> {
    let mut v = CVec::zeros(n);
    v[i] = C::new(T::one(), T::zero());
    v
}

/// Fibres `M_x ⊆ M_{d_B(r x) × d_C(s x)}`; actions are matrix products and
/// `⟨m, m′⟩_B = λ m m′*`, `⟨m, m′⟩_C = μ m* m′` with positive weights `(λ, μ)`, by default `(1, 1)`.
#[derive(Clone, Debug)]
pub struct BundleSpace<T: Real> {
    base: PreEquivalence,
    left: Arc<FellBundle<T>>,
    right: Arc<FellBundle<T>>,
    fibres: Vec<MatrixSubspace<T>>,
    weights: (T, T),
    tol: T,
}

impl<T: Real> BundleSpace<T> {
    pub fn new(
        base: PreEquivalence,
        left: Arc<FellBundle<T>>,
        right: Arc<FellBundle<T>>,
        fibres: Vec<MatrixSubspace<T>>,
    ) -> Result<Self> {
        if base.left() != left.groupoid() || base.right() != right.groupoid() {
            return Err(Error::Composition("coefficient bundles live over other groupoids".into()));
        }
        if fibres.len() != base.n_points() {
            return Err(dim_err(format!("{} fibres for {} points", fibres.len(), base.n_points())));
        }
        let sp = base.space();
        for (x, f) in fibres.iter().enumerate() {
            let want = (left.dim(sp.r(x)), right.dim(sp.s(x)));
            if f.shape() != want {
                return Err(dim_err(format!("fibre over point {x} is {:?}, expected {want:?}", f.shape())));
            }
        }
        let tol = left.tol();
        Ok(BundleSpace { base, left, right, fibres, weights: (T::one(), T::one()), tol })
    }

    pub fn with_tol(mut self, tol: T) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_weights(mut self, left: T, right: T) -> Result<Self> {
        if !(left > T::zero() && right > T::zero() && left.is_finite() && right.is_finite()) {
            return Err(Error::Construction("inner-product weights must be positive and finite".into()));
        }
        self.weights = (left, right);
        Ok(self)
    }

    pub fn weights(&self) -> (T, T) {
        self.weights
    }

    pub fn fibre(&self, x: usize) -> &MatrixSubspace<T> {
        &self.fibres[x]
    }

    pub fn fibres(&self) -> &[MatrixSubspace<T>] {
        &self.fibres
    }

    pub fn left_arc(&self) -> &Arc<FellBundle<T>> {
        &self.left
    }

    pub fn right_arc(&self) -> &Arc<FellBundle<T>> {
        &self.right
    }

    pub fn with_fibre(mut self, x: usize, fibre: MatrixSubspace<T>) -> Result<Self> {
        if fibre.shape() != self.fibres[x].shape() {
            return Err(dim_err("replacement fibre has the wrong shape"));
        }
        self.fibres[x] = fibre;
        Ok(self)
    }

    pub fn element(&self, x: usize, m: &CVec<T>) -> Result<CMat<T>> {
        self.fibres
            .get(x)
            .ok_or_else(|| Error::Lookup(format!("no point {x}")))?
            .element(m)
    }

    /// Coordinates of a matrix in the fibre over `x`, with the distance to that fibre.
    pub fn coords(&self, x: usize, m: &CMat<T>) -> Result<(CVec<T>, T)> {
        let e = self.fibres[x].expand(m)?;
        Ok((e.coeffs, e.residual))
    }
}

impl<T: Real> BimoduleBundle<T> for BundleSpace<T> {
    fn base(&self) -> &PreEquivalence {
        &self.base
    }

    fn left_bundle(&self) -> &FellBundle<T> {
        &self.left
    }

    fn right_bundle(&self) -> &FellBundle<T> {
        &self.right
    }

    fn tol(&self) -> T {
        self.tol
    }

    fn fibre_dim(&self, x: usize) -> usize {
        self.fibres[x].dim()
    }

    fn act_left(&self, g: usize, b: &CMat<T>, x: usize, m: &CVec<T>) -> Result<Acted<T>> {
        let point = self
            .base
            .space()
            .act_left(g, x)
            .ok_or_else(|| Error::Action(format!("arrow {g} cannot act on point {x}")))?;
        let mx = self.element(x, m)?;
        if b.ncols() != mx.nrows() {
            return Err(dim_err(format!("{:?} acting on {:?}", b.shape(), mx.shape())));
        }
        let (coords, residual) = self.coords(point, &(b * mx))?;
        Ok(Acted { point, coords, residual })
    }

    fn act_right(&self, x: usize, m: &CVec<T>, h: usize, c: &CMat<T>) -> Result<Acted<T>> {
        let point = self
            .base
            .space()
            .act_right(x, h)
            .ok_or_else(|| Error::Action(format!("arrow {h} cannot act on point {x}")))?;
        let mx = self.element(x, m)?;
        if mx.ncols() != c.nrows() {
            return Err(dim_err(format!("{:?} acted on by {:?}", mx.shape(), c.shape())));
        }
        let (coords, residual) = self.coords(point, &(mx * c))?;
        Ok(Acted { point, coords, residual })
    }

    fn inner_left(&self, x1: usize, m1: &CVec<T>, x2: usize, m2: &CVec<T>) -> Result<CMat<T>> {
        let sp = self.base.space();
        if sp.s(x1) != sp.s(x2) {
            return Err(Error::Pairing(format!("points {x1}, {x2} are not s-compatible")));
        }
        Ok(self.element(x1, m1)? * self.element(x2, m2)?.adjoint() * C::from(self.weights.0))
    }

    fn inner_right(&self, x1: usize, m1: &CVec<T>, x2: usize, m2: &CVec<T>) -> Result<CMat<T>> {
        let sp = self.base.space();
        if sp.r(x1) != sp.r(x2) {
            return Err(Error::Pairing(format!("points {x1}, {x2} are not r-compatible")));
        }
        Ok(self.element(x1, m1)?.adjoint() * self.element(x2, m2)? * C::from(self.weights.1))
    }

    fn norm(&self, x: usize, m: &CVec<T>) -> Result<T> {
        Ok(op_norm(&self.element(x, m)?) * self.weights.0.sqrt())
    }

    /// `√λ·m`, which turns both weighted inner products into matrix products; none when `λ ≠ μ`.
    fn realize(&self, x: usize, m: &CVec<T>) -> Option<CMat<T>> {
        let (l, r) = self.weights;
        if l != r {
            return None;
        }
        self.element(x, m).ok().map(|e| e * C::from(l.sqrt()))
    }
}

/// Full rectangular fibres over an equivalence, between full matrix bundles.
pub fn make_canonical_equivalence_bundle<T: Real>(
    x: &GroupoidEquivalence,
    dims_b: BTreeMap<usize, usize>,
    dims_c: BTreeMap<usize, usize>,
) -> Result<BundleSpace<T>> {
    let pre = x.pre().clone();
    let left = Arc::new(make_full_matrix_bundle(pre.left().clone(), dims_b)?);
    let right = Arc::new(make_full_matrix_bundle(pre.right().clone(), dims_c)?);
    canonical_over(pre, left, right)
}

/// Full rectangular fibres between given bundles.
pub fn canonical_over<T: Real>(
    base: PreEquivalence,
    left: Arc<FellBundle<T>>,
    right: Arc<FellBundle<T>>,
) -> Result<BundleSpace<T>> {
    let sp = base.space();
    let fibres = sp
        .points()
        .map(|x| {
            let (r, s) = (sp.r(x), sp.s(x));
            let dr = *left.dims().get(&r).ok_or_else(|| dim_err("left dims miss a unit"))?;
            let ds = *right.dims().get(&s).ok_or_else(|| dim_err("right dims miss a unit"))?;
            Ok(MatrixSubspace::full(dr, ds))
        })
        .collect::<Result<Vec<_>>>()?;
    BundleSpace::new(base, left, right, fibres)
}

/// `B` over `G` viewed as a `(B, B)`-equivalence over the identity equivalence.
pub fn identity_bundle<T: Real>(b: Arc<FellBundle<T>>) -> Result<BundleSpace<T>> {
    let base = GroupoidEquivalence::identity(b.groupoid().clone())?.pre().clone();
    let fibres = b.fibres().to_vec();
    BundleSpace::new(base, b.clone(), b, fibres)
}

/// An `(M_k ⊗ C, C)`-equivalence over the identity equivalence with fibres
/// `ℂ^k ⊗ C_h`, spanned by `e_a ⊗ u` for basis vectors `e_a` and basis elements `u` of `C_h`.
pub fn amplified_identity_bundle<T: Real>(c: Arc<FellBundle<T>>, k: usize) -> Result<BundleSpace<T>> {
    let base = GroupoidEquivalence::identity(c.groupoid().clone())?.pre().clone();
    let left = Arc::new(amplify(&c, k)?);
    let cols = MatrixSubspace::<T>::full(k, 1);
    let fibres = c
        .fibres()
        .iter()
        .map(|f| {
            let (r, s) = f.shape();
            let basis = cols
                .basis()
                .iter()
                .flat_map(|e| f.basis().iter().map(move |u| e.kronecker(u)))
                .collect();
            MatrixSubspace::from_orthonormal(k * r, s, basis)
        })
        .collect::<Result<Vec<_>>>()?;
    BundleSpace::new(base, left, c, fibres)
}

/// The `(C, B)`-bundle over the opposite space with conjugate-transposed fibres.
/// Coordinates of `m*` in the new fibre are the conjugated coordinates of `m`.
pub fn opposite_bundle<T: Real>(m: &BundleSpace<T>) -> BundleSpace<T> {
    BundleSpace {
        base: m.base.opposite(),
        left: m.right.clone(),
        right: m.left.clone(),
        fibres: m.fibres.iter().map(MatrixSubspace::adjoint).collect(),
        weights: (m.weights.1, m.weights.0),
        tol: m.tol,
    }
}
