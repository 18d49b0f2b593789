//! Fell bundles over finite groupoids whose fibres are subspaces of rectangular
//! matrices, multiplied by matrix product and involuted by conjugate transpose.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{dim_err, Error, Result};
use crate::groupoid::FiniteGroupoid;
use crate::linalg::{hs_inner, hs_norm, identity, mat_dist, op_norm, orthonormalize, psd_check, scaled, CMat, MatrixSubspace};
use crate::report::{Coverage, Report, Sweep};
use crate::scalar::{Real, C};

const SAMPLES_PER_ARROW: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct FellBundle<T: Real> {
    gpd: Arc<FiniteGroupoid>,
    dims: BTreeMap<usize, usize>,
    fibres: Vec<MatrixSubspace<T>>,
    tol: T,
}

impl<T: Real> FellBundle<T> {
    /// `fibres[g]` must have shape `dims[rng g] × dims[src g]`.
    pub fn new(gpd: Arc<FiniteGroupoid>, dims: BTreeMap<usize, usize>, fibres: Vec<MatrixSubspace<T>>) -> Result<Self> {
        let units: Vec<usize> = dims.keys().copied().collect();
        if units != gpd.units() {
            return Err(dim_err("dimension function must cover exactly the units"));
        }
        if let Some((u, _)) = dims.iter().find(|(_, d)| **d == 0) {
            return Err(dim_err(format!("unit {u} has dimension 0")));
        }
        if fibres.len() != gpd.n_arrows() {
            return Err(dim_err(format!("{} fibres for {} arrows", fibres.len(), gpd.n_arrows())));
        }
        for g in gpd.arrows() {
            let want = (dims[&gpd.rng(g)], dims[&gpd.src(g)]);
            if fibres[g].shape() != want {
                return Err(dim_err(format!("fibre over arrow {g} is {:?}, expected {want:?}", fibres[g].shape())));
            }
        }
        Ok(FellBundle { gpd, dims, fibres, tol: T::default_tol() })
    }

    pub fn with_tol(mut self, tol: T) -> Self {
        self.tol = tol;
        self
    }

    pub fn tol(&self) -> T {
        self.tol
    }

    pub fn groupoid(&self) -> &Arc<FiniteGroupoid> {
        &self.gpd
    }

    pub fn dims(&self) -> &BTreeMap<usize, usize> {
        &self.dims
    }

    pub fn dim(&self, unit: usize) -> usize {
        self.dims[&unit]
    }

    pub fn fibre(&self, g: usize) -> &MatrixSubspace<T> {
        &self.fibres[g]
    }

    pub fn fibres(&self) -> &[MatrixSubspace<T>] {
        &self.fibres
    }

    /// Replaces one fibre, keeping shapes; for building broken or reduced instances.
    pub fn with_fibre(mut self, g: usize, fibre: MatrixSubspace<T>) -> Result<Self> {
        if fibre.shape() != self.fibres[g].shape() {
            return Err(dim_err("replacement fibre has the wrong shape"));
        }
        self.fibres[g] = fibre;
        Ok(self)
    }

    pub fn contains(&self, g: usize, b: &CMat<T>) -> Result<bool> {
        self.fibres[g].contains(b, self.tol)
    }
}

/// Closure under products and adjoints, exhaustive on basis elements, plus sampled
/// sanity checks of the laws the matrix model satisfies automatically.
pub fn verify_fell_bundle<T: Real>(b: &FellBundle<T>) -> Report {
    let mut report = Report::new("fell bundle");
    let g = b.groupoid();
    let tol = b.tol();

    let mut sw = Sweep::new("F1", Coverage::BasisExhaustive);
    for (x, y) in g.composable_pairs() {
        let xy = g.comp(x, y).expect("groupoid composes");
        for (i, e) in b.fibre(x).basis().iter().enumerate() {
            for (j, f) in b.fibre(y).basis().iter().enumerate() {
                let p = e * f;
                let res = b.fibre(xy).expand(&p).expect("shapes fixed").residual;
                sw.residual(res.as_f64(), scaled(tol, hs_norm(&p)).as_f64(), || vec![x, y, i, j]);
            }
        }
    }
    report.absorb(sw);

    let mut sw = Sweep::new("F5", Coverage::BasisExhaustive);
    for x in g.arrows() {
        for (i, e) in b.fibre(x).basis().iter().enumerate() {
            let res = b.fibre(g.inv(x)).expand(&e.adjoint()).expect("shapes fixed").residual;
            sw.residual(res.as_f64(), scaled(tol, T::one()).as_f64(), || vec![x, i]);
        }
    }
    report.absorb(sw);

    // the remaining laws hold for any matrix subspaces; a few samples guard the plumbing
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut f3 = Sweep::new("F3", Coverage::Sampled);
    for (x, y) in g.composable_pairs() {
        for z in g.arrows().filter(|&z| g.rng(z) == g.src(y)) {
            let u = b.fibre(x).random_element(&mut rng);
            let v = b.fibre(y).random_element(&mut rng);
            let w = b.fibre(z).random_element(&mut rng);
            let lhs = (&u * &v) * &w;
            let rhs = &u * (&v * &w);
            f3.residual(mat_dist(&lhs, &rhs).as_f64(), scaled(tol, hs_norm(&lhs)).as_f64(), || vec![x, y, z]);
        }
    }
    let mut f4 = Sweep::new("F4", Coverage::Sampled);
    let mut f7 = Sweep::new("F7", Coverage::Sampled);
    let mut f8 = Sweep::new("F8", Coverage::Sampled);
    let mut f9 = Sweep::new("F9", Coverage::Sampled);
    let mut f10 = Sweep::new("F10", Coverage::Sampled);
    for (x, y) in g.composable_pairs() {
        for _ in 0..SAMPLES_PER_ARROW {
            let u = b.fibre(x).random_element(&mut rng);
            let v = b.fibre(y).random_element(&mut rng);
            let (nu, nv) = (op_norm(&u), op_norm(&v));
            let uv = &u * &v;
            f4.residual((op_norm(&uv) - nu * nv).as_f64(), scaled(tol, nu * nv).as_f64(), || vec![x, y]);
            f7.residual(
                mat_dist(&uv.adjoint(), &(v.adjoint() * u.adjoint())).as_f64(),
                scaled(tol, nu * nv).as_f64(),
                || vec![x, y],
            );
            f8.residual(mat_dist(&u.adjoint().adjoint(), &u).as_f64(), scaled(tol, nu).as_f64(), || vec![x]);
            let uu = u.adjoint() * &u;
            f9.residual((op_norm(&uu) - nu * nu).abs().as_f64(), scaled(tol, nu * nu).as_f64(), || vec![x]);
            f10.expect(psd_check(&uu, tol).unwrap_or(false), || vec![x], || "b*b is not positive".into());
        }
    }
    for s in [f3, f4, f7, f8, f9, f10] {
        report.absorb(s);
    }
    for axiom in ["F2", "F6"] {
        report.vacuous(axiom, "bilinearity of matrix multiplication and conjugate-linearity of the adjoint");
    }
    report
}

/// `span(B_g·B_h) = B_{gh}` for every composable pair.
pub fn verify_saturated<T: Real>(b: &FellBundle<T>) -> Report {
    let mut report = Report::new("saturation");
    let g = b.groupoid();
    let mut sw = Sweep::new("saturated", Coverage::BasisExhaustive);
    for (x, y) in g.composable_pairs() {
        let xy = g.comp(x, y).expect("groupoid composes");
        let prods: Vec<CMat<T>> = b
            .fibre(x)
            .basis()
            .iter()
            .flat_map(|e| b.fibre(y).basis().iter().map(move |f| e * f))
            .collect();
        let span = orthonormalize(b.fibre(xy).shape(), &prods, b.tol()).expect("shapes fixed");
        let equal = span.equals(b.fibre(xy), b.tol()).unwrap_or(false);
        sw.expect(equal, || vec![x, y], || {
            format!("products span dimension {} inside a fibre of dimension {}", span.dim(), b.fibre(xy).dim())
        });
    }
    report.absorb(sw);
    report
}

/// Every fibre is the full space of `dims(rng g) × dims(src g)` matrices.
pub fn make_full_matrix_bundle<T: Real>(g: Arc<FiniteGroupoid>, dims: BTreeMap<usize, usize>) -> Result<FellBundle<T>> {
    let mut fibres = Vec::with_capacity(g.n_arrows());
    for a in g.arrows() {
        let (r, s) = (
            *dims.get(&g.rng(a)).ok_or_else(|| dim_err("missing unit dimension"))?,
            *dims.get(&g.src(a)).ok_or_else(|| dim_err("missing unit dimension"))?,
        );
        fibres.push(MatrixSubspace::full(r, s));
    }
    FellBundle::new(g, dims, fibres)
}

pub fn constant_dims(g: &FiniteGroupoid, d: usize) -> BTreeMap<usize, usize> {
    g.units().iter().map(|&u| (u, d)).collect()
}

/// Fibre over `g` is the line through the unitary `U_g`; requires `U_g U_h ∈ ℂ·U_{gh}`.
pub fn make_projective_rep_bundle<T: Real>(g: Arc<FiniteGroupoid>, unitaries: &[CMat<T>]) -> Result<FellBundle<T>> {
    if unitaries.len() != g.n_arrows() {
        return Err(Error::Construction("one unitary per arrow".into()));
    }
    let d = unitaries[0].nrows();
    let tol = T::default_tol();
    for (a, u) in unitaries.iter().enumerate() {
        if u.shape() != (d, d) {
            return Err(dim_err(format!("unitary {a} has shape {:?}", u.shape())));
        }
        let defect = mat_dist(&(u.adjoint() * u), &identity(d));
        if defect > scaled(tol, T::one()) {
            return Err(Error::Construction(format!("U_{a} is not unitary (defect {:.3e})", defect.as_f64())));
        }
    }
    for (a, b) in g.composable_pairs() {
        let ab = g.comp(a, b).expect("groupoid composes");
        let prod = &unitaries[a] * &unitaries[b];
        let target = &unitaries[ab];
        let lambda = hs_inner(&prod, target)? / hs_inner(target, target)?;
        let res = mat_dist(&prod, &(target * lambda));
        if res > scaled(tol, T::one()) || (lambda.norm_sqr().sqrt() - T::one()).abs() > tol {
            return Err(Error::Construction(format!(
                "U_{a} U_{b} is not a unimodular multiple of U_{ab} (residual {:.3e})",
                res.as_f64()
            )));
        }
    }
    let fibres = unitaries
        .iter()
        .map(|u| MatrixSubspace::span(d, d, std::slice::from_ref(u), tol))
        .collect::<Result<Vec<_>>>()?;
    FellBundle::new(g.clone(), constant_dims(&g, d), fibres)
}

/// `X^a Z^b` for the Klein four-group element `2a + b`.
pub fn pauli_unitaries<T: Real>() -> Vec<CMat<T>> {
    let one = C::new(T::one(), T::zero());
    let zero = C::new(T::zero(), T::zero());
    let x = CMat::from_row_slice(2, 2, &[zero, one, one, zero]);
    let z = CMat::from_row_slice(2, 2, &[one, zero, zero, -one]);
    (0..4)
        .map(|k| {
            let mut u = identity(2);
            if k & 2 != 0 {
                u = &u * &x;
            }
            if k & 1 != 0 {
                u = &u * &z;
            }
            u
        })
        .collect()
}

/// `M_k ⊗ B`: each fibre basis element `e` becomes the matrix units `E_ab ⊗ e`.
pub fn amplify<T: Real>(b: &FellBundle<T>, k: usize) -> Result<FellBundle<T>> {
    let units = MatrixSubspace::<T>::full(k, k);
    let mut fibres = Vec::with_capacity(b.fibres().len());
    for f in b.fibres() {
        let (r, c) = f.shape();
        let basis = units
            .basis()
            .iter()
            .flat_map(|e| f.basis().iter().map(move |u| e.kronecker(u)))
            .collect();
        fibres.push(MatrixSubspace::from_orthonormal(k * r, k * c, basis)?);
    }
    let dims = b.dims().iter().map(|(&u, &d)| (u, k * d)).collect();
    Ok(FellBundle::new(b.groupoid().clone(), dims, fibres)?.with_tol(b.tol()))
}
