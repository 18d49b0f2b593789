//! Dense complex matrices, matrix subspaces and Gram quotients.
//!
//! Every fibre of every bundle in this crate is a [`MatrixSubspace`] or a
//! coordinate space obtained from a [`GramQuotient`]. Tolerances are absolute
//! and scaled by `max(1, norm)` of the operand they are compared against.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use rand::Rng;

use crate::error::{dim_err, Error, Result};
use crate::scalar::{Real, C};

pub type CMat<T> = DMatrix<C<T>>;
pub type CVec<T> = DVector<C<T>>;

pub fn scaled<T: Real>(tol: T, norm: T) -> T {
    tol * norm.max(T::one())
}

fn same_shape<T: Real>(a: &CMat<T>, b: &CMat<T>) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(dim_err(format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    Ok(())
}

/// Hilbert–Schmidt pairing `trace(b* a)`; linear in `a`.
pub fn hs_inner<T: Real>(a: &CMat<T>, b: &CMat<T>) -> Result<C<T>> {
    same_shape(a, b)?;
    Ok(hs_inner_unchecked(a, b))
}

pub(crate) fn hs_inner_unchecked<T: Real>(a: &CMat<T>, b: &CMat<T>) -> C<T> {
    a.iter()
        .zip(b.iter())
        .fold(C::new(T::zero(), T::zero()), |acc, (x, y)| acc + y.conj() * *x)
}

pub fn hs_norm<T: Real>(a: &CMat<T>) -> T {
    a.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
}

/// Largest singular value; the C*-norm of the matrix model.
pub fn op_norm<T: Real>(a: &CMat<T>) -> T {
    if a.nrows() == 0 || a.ncols() == 0 {
        return T::zero();
    }
    let svd = SVD::new(a.clone(), false, false);
    svd.singular_values.iter().fold(T::zero(), |m, s| m.max(*s))
}

pub fn adjoint<T: Real>(a: &CMat<T>) -> CMat<T> {
    a.adjoint()
}

pub fn zeros<T: Real>(rows: usize, cols: usize) -> CMat<T> {
    CMat::zeros(rows, cols)
}

pub fn identity<T: Real>(n: usize) -> CMat<T> {
    CMat::identity(n, n)
}

pub fn matrix_unit<T: Real>(rows: usize, cols: usize, i: usize, j: usize) -> CMat<T> {
    let mut m = zeros(rows, cols);
    m[(i, j)] = C::new(T::one(), T::zero());
    m
}

pub fn from_rows<T: Real>(rows: &[Vec<(f64, f64)>]) -> Result<CMat<T>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 || rows.iter().any(|row| row.len() != c) {
        return Err(dim_err("ragged or empty matrix"));
    }
    Ok(CMat::from_fn(r, c, |i, j| {
        let (re, im) = rows[i][j];
        C::new(T::lit(re), T::lit(im))
    }))
}

pub fn random_cmat<T: Real, R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat<T> {
    CMat::from_fn(rows, cols, |_, _| {
        C::new(T::lit(rng.gen_range(-1.0..1.0)), T::lit(rng.gen_range(-1.0..1.0)))
    })
}

pub fn random_cvec<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> CVec<T> {
    CVec::from_fn(n, |_, _| C::new(T::lit(rng.gen_range(-1.0..1.0)), T::lit(rng.gen_range(-1.0..1.0))))
}

pub fn modulus<T: Real>(z: C<T>) -> T {
    z.norm_sqr().sqrt()
}

pub fn vec_norm<T: Real>(v: &CVec<T>) -> T {
    v.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
}

pub fn max_abs<T: Real>(a: &CMat<T>) -> T {
    a.iter().fold(T::zero(), |m, z| m.max(modulus(*z)))
}

/// Entrywise distance used for residuals of matrix identities.
pub fn mat_dist<T: Real>(a: &CMat<T>, b: &CMat<T>) -> T {
    if a.shape() != b.shape() {
        return T::lit(f64::INFINITY);
    }
    hs_norm(&(a - b))
}

pub fn vec_dist<T: Real>(a: &CVec<T>, b: &CVec<T>) -> T {
    if a.len() != b.len() {
        return T::lit(f64::INFINITY);
    }
    vec_norm(&(a - b))
}

/// Eigenvalues of the Hermitian part, ascending.
pub fn hermitian_eigenvalues<T: Real>(a: &CMat<T>) -> Vec<T> {
    if a.nrows() == 0 {
        return Vec::new();
    }
    let h = (a + a.adjoint()) * C::new(T::lit(0.5), T::zero());
    let mut ev: Vec<T> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    ev
}

pub fn min_eigenvalue<T: Real>(a: &CMat<T>) -> T {
    hermitian_eigenvalues(a).first().copied().unwrap_or_else(T::zero)
}

pub fn hermitian_defect<T: Real>(a: &CMat<T>) -> T {
    max_abs(&(a - a.adjoint()))
}

/// Positive semidefiniteness within `tol · max(1, ‖a‖)`.
pub fn psd_check<T: Real>(a: &CMat<T>, tol: T) -> Result<bool> {
    if !a.is_square() {
        return Err(dim_err(format!("psd_check needs a square matrix, got {:?}", a.shape())));
    }
    let thr = scaled(tol, op_norm(a));
    Ok(hermitian_defect(a) <= thr && min_eigenvalue(a) >= -thr)
}

/// Numerical rank with singular values below `tol · max(1, σ_max)` treated as zero.
pub fn rank<T: Real>(a: &CMat<T>, tol: T) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let sv = SVD::new(a.clone(), false, false).singular_values;
    let smax = sv.iter().fold(T::zero(), |m, s| m.max(*s));
    let thr = scaled(tol, smax);
    sv.iter().filter(|s| **s > thr).count()
}

/// Least-squares solution `x` of `a x = b` via the pseudo-inverse.
pub fn pseudo_inverse<T: Real>(a: &CMat<T>, tol: T) -> CMat<T> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return zeros(a.ncols(), a.nrows());
    }
    let svd = SVD::new(a.clone(), true, true);
    let smax = svd.singular_values.iter().fold(T::zero(), |m, s| m.max(*s));
    let thr = scaled(tol, smax);
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v_t requested");
    let k = svd.singular_values.len();
    let mut out = zeros(a.ncols(), a.nrows());
    for s in 0..k {
        let sigma = svd.singular_values[s];
        if sigma > thr {
            let inv = C::new(T::one() / sigma, T::zero());
            out += vt.row(s).adjoint() * u.column(s).adjoint() * inv;
        }
    }
    out
}

/// A subspace of `rows × cols` complex matrices with a Hilbert–Schmidt orthonormal basis.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixSubspace<T: Real> {
    rows: usize,
    cols: usize,
    basis: Vec<CMat<T>>,
}

#[derive(Clone, Debug)]
pub struct Expansion<T: Real> {
    pub coeffs: CVec<T>,
    pub residual: T,
}

impl<T: Real> MatrixSubspace<T> {
    pub fn zero(rows: usize, cols: usize) -> Self {
        MatrixSubspace { rows, cols, basis: Vec::new() }
    }

    pub fn full(rows: usize, cols: usize) -> Self {
        let basis = (0..rows)
            .flat_map(|i| (0..cols).map(move |j| (i, j)))
            .map(|(i, j)| matrix_unit(rows, cols, i, j))
            .collect();
        MatrixSubspace { rows, cols, basis }
    }

    /// The full space with a random orthonormal basis.
    pub fn full_random<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Self {
        let gens: Vec<CMat<T>> = (0..rows * cols).map(|_| random_cmat(rows, cols, rng)).collect();
        let mut s = orthonormalize((rows, cols), &gens, T::default_tol()).expect("shapes agree");
        // a random spanning set misses a direction only with probability zero
        if s.dim() < rows * cols {
            s = Self::full(rows, cols);
        }
        s
    }

    pub fn span(rows: usize, cols: usize, gens: &[CMat<T>], tol: T) -> Result<Self> {
        orthonormalize((rows, cols), gens, tol)
    }

    /// Trusts the caller that `basis` is orthonormal.
    pub fn from_orthonormal(rows: usize, cols: usize, basis: Vec<CMat<T>>) -> Result<Self> {
        if let Some(b) = basis.iter().find(|b| b.shape() != (rows, cols)) {
            return Err(dim_err(format!("basis element {:?} in {rows}x{cols} subspace", b.shape())));
        }
        Ok(MatrixSubspace { rows, cols, basis })
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn basis(&self) -> &[CMat<T>] {
        &self.basis
    }

    fn check_shape(&self, m: &CMat<T>) -> Result<()> {
        if m.shape() != (self.rows, self.cols) {
            return Err(dim_err(format!(
                "matrix {:?} against {}x{} subspace",
                m.shape(),
                self.rows,
                self.cols
            )));
        }
        Ok(())
    }

    /// Orthogonal projection coefficients and the norm of what is left over.
    pub fn expand(&self, m: &CMat<T>) -> Result<Expansion<T>> {
        self.check_shape(m)?;
        let coeffs = CVec::from_iterator(self.basis.len(), self.basis.iter().map(|e| hs_inner_unchecked(m, e)));
        let residual = hs_norm(&(m - self.element_unchecked(&coeffs)));
        Ok(Expansion { coeffs, residual })
    }

    pub fn contains(&self, m: &CMat<T>, tol: T) -> Result<bool> {
        let e = self.expand(m)?;
        Ok(e.residual <= scaled(tol, hs_norm(m)))
    }

    pub fn element(&self, coeffs: &CVec<T>) -> Result<CMat<T>> {
        if coeffs.len() != self.basis.len() {
            return Err(dim_err(format!("{} coefficients for a {}-dim subspace", coeffs.len(), self.dim())));
        }
        Ok(self.element_unchecked(coeffs))
    }

    fn element_unchecked(&self, coeffs: &CVec<T>) -> CMat<T> {
        let mut out = zeros(self.rows, self.cols);
        for (c, e) in coeffs.iter().zip(&self.basis) {
            out += e * *c;
        }
        out
    }

    pub fn is_subspace_of(&self, other: &Self, tol: T) -> Result<bool> {
        if self.shape() != other.shape() {
            return Err(dim_err(format!("{:?} vs {:?}", self.shape(), other.shape())));
        }
        for b in &self.basis {
            if !other.contains(b, tol)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn equals(&self, other: &Self, tol: T) -> Result<bool> {
        Ok(self.dim() == other.dim() && self.is_subspace_of(other, tol)? && other.is_subspace_of(self, tol)?)
    }

    /// Conjugate-transposed subspace; the basis stays orthonormal.
    pub fn adjoint(&self) -> Self {
        MatrixSubspace {
            rows: self.cols,
            cols: self.rows,
            basis: self.basis.iter().map(|b| b.adjoint()).collect(),
        }
    }

    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> CMat<T> {
        self.element_unchecked(&random_cvec(self.dim(), rng))
    }
}

/// Modified Gram–Schmidt with one re-orthogonalisation pass.
///
/// A vector whose residual is at most `tol · max(1, ‖v‖)` is dropped.
pub fn orthonormalize<T: Real>(shape: (usize, usize), span: &[CMat<T>], tol: T) -> Result<MatrixSubspace<T>> {
    let (rows, cols) = shape;
    let mut basis: Vec<CMat<T>> = Vec::new();
    for v in span {
        if v.shape() != shape {
            return Err(dim_err(format!("{:?} in a {rows}x{cols} span", v.shape())));
        }
        let norm_v = hs_norm(v);
        let mut w = v.clone();
        for _ in 0..2 {
            for e in &basis {
                let c = hs_inner_unchecked(&w, e);
                w -= e * c;
            }
        }
        let nw = hs_norm(&w);
        if nw > scaled(tol, norm_v) {
            w /= C::new(nw, T::zero());
            basis.push(w);
        }
    }
    Ok(MatrixSubspace { rows, cols, basis })
}

/// Pairings of a finite generator family: `gram[a][b]` is conjugate-linear in `a`.
#[derive(Clone, Debug)]
pub struct GramData<T: Real> {
    pub labels: Vec<Vec<usize>>,
    pub gram: CMat<T>,
    pub tol: T,
}

/// Quotient of the generator space by the null vectors of a semi-inner product.
#[derive(Clone, Debug)]
pub struct GramQuotient<T: Real> {
    pub dim: usize,
    /// `dim × n`: generator coefficients to orthonormal quotient coordinates.
    pub coeff_map: CMat<T>,
    /// `n × dim`: a right inverse of `coeff_map`.
    pub lift: CMat<T>,
    /// `n × (n - dim)`: orthonormal basis of the null space.
    pub null_basis: CMat<T>,
}

impl<T: Real> GramQuotient<T> {
    pub fn coords(&self, generator_coeffs: &CVec<T>) -> CVec<T> {
        &self.coeff_map * generator_coeffs
    }
}

pub fn gram_quotient<T: Real>(g: &GramData<T>) -> Result<GramQuotient<T>> {
    let n = g.gram.nrows();
    if !g.gram.is_square() {
        return Err(Error::InvalidGram(format!("non-square {:?}", g.gram.shape())));
    }
    if !g.labels.is_empty() && g.labels.len() != n {
        return Err(Error::InvalidGram(format!("{} labels for {n} generators", g.labels.len())));
    }
    if n == 0 {
        return Ok(GramQuotient {
            dim: 0,
            coeff_map: zeros(0, 0),
            lift: zeros(0, 0),
            null_basis: zeros(0, 0),
        });
    }
    let scale = max_abs(&g.gram);
    let thr_h = scaled(g.tol, scale * T::lit(n as f64));
    let defect = hermitian_defect(&g.gram);
    if defect > thr_h {
        return Err(Error::InvalidGram(format!("Hermitian defect {:.3e}", defect.as_f64())));
    }
    let h = (&g.gram + g.gram.adjoint()) * C::new(T::lit(0.5), T::zero());
    let eig = SymmetricEigen::new(h);
    let lmax = eig.eigenvalues.iter().fold(T::zero(), |m, l| m.max(l.abs()));
    let thr = scaled(g.tol, lmax);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    if let Some(&last) = order.last() {
        let lmin = eig.eigenvalues[last];
        if lmin < -thr {
            return Err(Error::InvalidGram(format!("indefinite: eigenvalue {:.3e}", lmin.as_f64())));
        }
    }
    let kept: Vec<usize> = order.iter().copied().filter(|&k| eig.eigenvalues[k] > thr).collect();
    let dropped: Vec<usize> = order.iter().copied().filter(|&k| eig.eigenvalues[k] <= thr).collect();
    let dim = kept.len();
    let mut coeff_map = zeros(dim, n);
    let mut lift = zeros(n, dim);
    for (row, &k) in kept.iter().enumerate() {
        let l = eig.eigenvalues[k];
        let sq = l.sqrt();
        let v = eig.eigenvectors.column(k);
        for i in 0..n {
            coeff_map[(row, i)] = v[i].conj() * C::new(sq, T::zero());
            lift[(i, row)] = v[i] * C::new(T::one() / sq, T::zero());
        }
    }
    let mut null_basis = zeros(n, dropped.len());
    for (col, &k) in dropped.iter().enumerate() {
        null_basis.set_column(col, &eig.eigenvectors.column(k));
    }
    Ok(GramQuotient { dim, coeff_map, lift, null_basis })
}
