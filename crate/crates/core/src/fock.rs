//! Truncated Fock-space operator algebra.
//!
//! Dense complex matrices wrapped in [`Operator`], the ladder/displacement/
//! squeeze/parity constructors, Kronecker products, partial trace and
//! partial transpose over an arbitrary list of tensor factors, and unitary
//! propagators from Hermitian generators.

use faer::{Mat, MatRef, Side};
use log::warn;

use crate::{Error, Result, C64};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Tolerance on `max|H − H†|` accepted as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// A square dense complex matrix.
#[derive(Clone, Debug)]
pub struct Operator {
    data: Mat<C64>,
}

impl Operator {
    pub fn new(data: Mat<C64>) -> Result<Self> {
        if data.nrows() != data.ncols() {
            return Err(Error::InvalidShape(format!(
                "operator must be square, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        if data.nrows() == 0 {
            return Err(Error::InvalidDimension("operator dimension must be >= 1".into()));
        }
        Ok(Self { data })
    }

    pub fn zeros(dim: usize) -> Self {
        Self { data: Mat::zeros(dim, dim) }
    }

    pub fn identity(dim: usize) -> Self {
        Self { data: Mat::identity(dim, dim) }
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self { data: Mat::from_fn(dim, dim, f) }
    }

    pub fn diagonal(entries: &[C64]) -> Self {
        let mut data = Mat::zeros(entries.len(), entries.len());
        for (i, &v) in entries.iter().enumerate() {
            data[(i, i)] = v;
        }
        Self { data }
    }

    /// Projector `|ψ⟩⟨ψ|` (the ket is used as given, no normalization).
    pub fn projector(ket: &[C64]) -> Self {
        Self::from_fn(ket.len(), |i, j| ket[i] * ket[j].conj())
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn mat(&self) -> MatRef<'_, C64> {
        self.data.as_ref()
    }

    pub fn into_mat(self) -> Mat<C64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[(i, j)] = v;
    }

    pub fn adjoint(&self) -> Self {
        Self { data: self.data.adjoint().to_owned() }
    }

    pub fn transpose(&self) -> Self {
        Self { data: self.data.transpose().to_owned() }
    }

    pub fn conj(&self) -> Self {
        Self { data: self.data.conjugate().to_owned() }
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.data[(i, i)]).sum()
    }

    pub fn scaled(&self, s: C64) -> Self {
        Self::from_fn(self.dim(), |i, j| self.data[(i, j)] * s)
    }

    pub fn matmul(&self, rhs: &Operator) -> Self {
        Self { data: &self.data * &rhs.data }
    }

    pub fn diagonal_entries(&self) -> Vec<C64> {
        (0..self.dim()).map(|i| self.data[(i, i)]).collect()
    }

    /// `Tr[self · obs]` without forming the product.
    pub fn expectation(&self, obs: &Operator) -> C64 {
        let n = self.dim();
        let mut acc = ZERO;
        for j in 0..n {
            for i in 0..n {
                acc += self.data[(i, j)] * obs.data[(j, i)];
            }
        }
        acc
    }

    pub fn max_abs(&self) -> f64 {
        let n = self.dim();
        let mut m = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                m = m.max(self.data[(i, j)].norm());
            }
        }
        m
    }

    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        let n = self.dim();
        let mut m = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                m = m.max((self.data[(i, j)] - other.data[(i, j)]).norm());
            }
        }
        m
    }

    /// Column `j` as a contiguous slice.
    pub fn col(&self, j: usize) -> &[C64] {
        self.data.col_as_slice(j)
    }

    /// `max|A − A†|` element-wise.
    pub fn hermiticity_error(&self) -> f64 {
        const TILE: usize = 32;
        let n = self.dim();
        let mut m = 0.0f64;
        for jb in (0..n).step_by(TILE) {
            for ib in (0..=jb).step_by(TILE) {
                for j in jb..(jb + TILE).min(n) {
                    let cj = self.col(j);
                    for (i, &c) in cj.iter().enumerate().take((ib + TILE).min(j + 1)).skip(ib) {
                        m = m.max((c - self.col(i)[j].conj()).norm_sqr());
                    }
                }
            }
        }
        m.sqrt()
    }

    /// `max|U†U − I|` element-wise.
    pub fn unitarity_error(&self) -> f64 {
        let prod = Operator { data: self.data.adjoint() * &self.data };
        prod.max_abs_diff(&Operator::identity(self.dim()))
    }

    /// Leading `dim × dim` block.
    pub fn crop(&self, dim: usize) -> Self {
        assert!(dim >= 1 && dim <= self.dim(), "crop dimension out of range");
        Self { data: self.data.submatrix(0, 0, dim, dim).to_owned() }
    }

    /// Eigenvalues of a Hermitian operator in nondecreasing order. Only the
    /// lower triangle is read.
    pub fn hermitian_eigenvalues(&self) -> Result<Vec<f64>> {
        self.data
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::Numerical(format!("Hermitian eigensolver failed: {e:?}")))
    }

    /// Tests `self + shift·I ≻ 0` with a Cholesky factorization. For a
    /// Hermitian matrix this holds exactly when its smallest eigenvalue
    /// exceeds `−shift`.
    pub fn is_positive_above(&self, shift: f64) -> bool {
        let n = self.dim();
        let shifted = Mat::from_fn(n, n, |i, j| {
            let v = self.data[(i, j)];
            if i == j {
                v + shift
            } else {
                v
            }
        });
        shifted.llt(Side::Lower).is_ok()
    }
}

impl std::ops::Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        Operator { data: &self.data + &rhs.data }
    }
}

impl std::ops::Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        Operator { data: &self.data - &rhs.data }
    }
}

impl std::ops::Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.matmul(rhs)
    }
}

/// Eigendecomposition `H = V diag(E) V†` of a Hermitian operator.
#[derive(Clone, Debug)]
pub struct HermitianSpectrum {
    pub energies: Vec<f64>,
    pub vectors: Mat<C64>,
}

impl HermitianSpectrum {
    pub fn new(h: &Operator) -> Result<Self> {
        let err = h.hermiticity_error();
        if err > HERMITIAN_TOL {
            return Err(Error::InvalidOperator(format!(
                "generator is not Hermitian (max|H - H^dag| = {err:e})"
            )));
        }
        let evd = h
            .mat()
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Numerical(format!("Hermitian eigensolver failed: {e:?}")))?;
        let energies = evd.S().column_vector().iter().map(|z| z.re).collect();
        Ok(Self { energies, vectors: evd.U().to_owned() })
    }

    /// `V f(E) V†` for a scalar function of the eigenvalues.
    pub fn apply(&self, f: impl Fn(f64) -> C64) -> Operator {
        let n = self.energies.len();
        let phases: Vec<C64> = self.energies.iter().map(|&e| f(e)).collect();
        let scaled = Mat::from_fn(n, n, |i, k| self.vectors[(i, k)] * phases[k]);
        Operator { data: &scaled * self.vectors.adjoint() }
    }

    /// `exp(−iHt)`.
    pub fn propagator(&self, t: f64) -> Operator {
        self.apply(|e| C64::from_polar(1.0, -e * t))
    }
}

/// Fock-space truncation settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncationPolicy {
    /// Number of retained Fock levels.
    pub n_max: usize,
    /// Workspace enlargement used when building `D(α)` and `S(ζ)`.
    pub pad_factor: usize,
    /// Largest tolerated probability mass outside the retained levels.
    pub tail_tol: f64,
}

/// Levels added per escalation step.
pub const ESCALATION_STEP: usize = 20;
/// Escalation never goes past this many levels.
pub const MAX_LEVELS: usize = 400;

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self { n_max: 80, pad_factor: 2, tail_tol: 1e-8 }
    }
}

impl TruncationPolicy {
    pub fn new(n_max: usize, pad_factor: usize, tail_tol: f64) -> Result<Self> {
        let p = Self { n_max, pad_factor, tail_tol };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_max == 0 {
            return Err(Error::InvalidParameter("n_max must be positive".into()));
        }
        if self.pad_factor < 2 {
            return Err(Error::InvalidParameter("pad_factor must be >= 2".into()));
        }
        if !(self.tail_tol > 0.0 && self.tail_tol < 1.0) {
            return Err(Error::InvalidParameter("tail_tol must lie in (0, 1)".into()));
        }
        Ok(())
    }

    pub fn padded_dim(&self) -> usize {
        self.n_max * self.pad_factor
    }

    pub fn with_n_max(&self, n_max: usize) -> Self {
        Self { n_max, ..*self }
    }

    /// The sequence of `n_max` values tried by automatic escalation.
    pub fn escalation(&self) -> impl Iterator<Item = TruncationPolicy> + '_ {
        let start = self.n_max;
        (0..)
            .map(move |k| start + k * ESCALATION_STEP)
            .take_while(move |&n| n == start || n <= MAX_LEVELS)
            .map(move |n| self.with_n_max(n))
    }
}

pub fn annihilation(dim: usize) -> Result<Operator> {
    if dim == 0 {
        return Err(Error::InvalidDimension("Fock dimension must be >= 1".into()));
    }
    let mut a = Operator::zeros(dim);
    for n in 1..dim {
        a.set(n - 1, n, C64::new((n as f64).sqrt(), 0.0));
    }
    Ok(a)
}

pub fn creation(dim: usize) -> Result<Operator> {
    Ok(annihilation(dim)?.adjoint())
}

pub fn number(dim: usize) -> Result<Operator> {
    if dim == 0 {
        return Err(Error::InvalidDimension("Fock dimension must be >= 1".into()));
    }
    let diag: Vec<C64> = (0..dim).map(|n| C64::new(n as f64, 0.0)).collect();
    Ok(Operator::diagonal(&diag))
}

pub fn parity(dim: usize) -> Result<Operator> {
    if dim == 0 {
        return Err(Error::InvalidDimension("Fock dimension must be >= 1".into()));
    }
    let diag: Vec<C64> = (0..dim)
        .map(|n| if n % 2 == 0 { ONE } else { -ONE })
        .collect();
    Ok(Operator::diagonal(&diag))
}

/// `exp(G)` for an anti-Hermitian generator, via the spectrum of `iG`.
pub fn exp_anti_hermitian(generator: &Operator) -> Result<Operator> {
    let h = generator.scaled(C64::new(0.0, 1.0));
    Ok(HermitianSpectrum::new(&h)?.propagator(1.0))
}

/// True when `|α|²` is large enough that `n_max` levels may not hold `D(α)|0⟩`.
pub fn displacement_at_risk(alpha: C64, n_max: usize) -> bool {
    alpha.norm_sqr() > n_max as f64 / 4.0
}

/// True when `sinh²r` is large enough that `n_max` levels may not hold `S(ζ)|0⟩`.
pub fn squeeze_at_risk(zeta: C64, n_max: usize) -> bool {
    zeta.norm().sinh().powi(2) > n_max as f64 / 4.0
}

/// `D(α)` on the full padded workspace (`pad_factor·n_max` levels).
pub fn displacement_padded(alpha: C64, policy: &TruncationPolicy) -> Result<Operator> {
    policy.validate()?;
    let dim = policy.padded_dim();
    let a = annihilation(dim)?;
    let ad = a.adjoint();
    let generator = &ad.scaled(alpha) - &a.scaled(alpha.conj());
    exp_anti_hermitian(&generator)
}

/// `S(ζ) = exp(−½ζ a†² + ½ζ* a²)` on the full padded workspace.
pub fn squeeze_padded(zeta: C64, policy: &TruncationPolicy) -> Result<Operator> {
    policy.validate()?;
    let dim = policy.padded_dim();
    let a = annihilation(dim)?;
    let ad = a.adjoint();
    let a2 = a.matmul(&a);
    let ad2 = ad.matmul(&ad);
    let generator = &ad2.scaled(-0.5 * zeta) + &a2.scaled(0.5 * zeta.conj());
    exp_anti_hermitian(&generator)
}

/// Displacement operator `exp(α a† − α* a)` on `n_max` levels, built on the
/// padded workspace and cropped.
pub fn displacement(alpha: C64, policy: &TruncationPolicy) -> Result<Operator> {
    if displacement_at_risk(alpha, policy.n_max) {
        warn!(
            "|alpha|^2 = {:.3} exceeds n_max/4 = {:.1}; displacement may be truncated",
            alpha.norm_sqr(),
            policy.n_max as f64 / 4.0
        );
    }
    Ok(displacement_padded(alpha, policy)?.crop(policy.n_max))
}

/// Squeeze operator `exp(−½ζ a†² + ½ζ* a²)` on `n_max` levels, built on the
/// padded workspace and cropped.
pub fn squeeze(zeta: C64, policy: &TruncationPolicy) -> Result<Operator> {
    if squeeze_at_risk(zeta, policy.n_max) {
        warn!(
            "sinh^2 r = {:.3} exceeds n_max/4 = {:.1}; squeeze may be truncated",
            zeta.norm().sinh().powi(2),
            policy.n_max as f64 / 4.0
        );
    }
    Ok(squeeze_padded(zeta, policy)?.crop(policy.n_max))
}

/// Kronecker product; the left factor varies slowest.
pub fn tensor(a: &Operator, b: &Operator) -> Operator {
    let (da, db) = (a.dim(), b.dim());
    Operator::from_fn(da * db, |i, j| a.get(i / db, j / db) * b.get(i % db, j % db))
}

/// Kronecker product of several factors, left to right.
pub fn tensor_all(factors: &[&Operator]) -> Operator {
    let mut it = factors.iter();
    let first = (*it.next().expect("at least one factor")).clone();
    it.fold(first, |acc, f| tensor(&acc, f))
}

/// Offsets of every multi-index restricted to a subset of factors, in
/// row-major order over that subset.
fn subset_offsets(dims: &[usize], subset: &[usize]) -> Vec<usize> {
    let mut strides = vec![1usize; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * dims[k + 1];
    }
    let mut offsets = vec![0usize];
    for &f in subset {
        let mut next = Vec::with_capacity(offsets.len() * dims[f]);
        for &o in &offsets {
            for d in 0..dims[f] {
                next.push(o + d * strides[f]);
            }
        }
        offsets = next;
    }
    offsets
}

fn check_factors(rho: &Operator, dims: &[usize], subset: &[usize]) -> Result<()> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::InvalidShape("factor dimensions must be positive".into()));
    }
    let total: usize = dims.iter().product();
    if total != rho.dim() {
        return Err(Error::InvalidShape(format!(
            "factor dimensions {dims:?} multiply to {total}, operator has dimension {}",
            rho.dim()
        )));
    }
    let mut seen = vec![false; dims.len()];
    for &f in subset {
        if f >= dims.len() || seen[f] {
            return Err(Error::InvalidShape(format!("invalid factor index set {subset:?}")));
        }
        seen[f] = true;
    }
    Ok(())
}

/// Reduced operator on the factors listed in `keep` (kept in their original
/// order); all other factors are traced out.
pub fn partial_trace(rho: &Operator, dims: &[usize], keep: &[usize]) -> Result<Operator> {
    check_factors(rho, dims, keep)?;
    if keep.is_empty() {
        return Err(Error::InvalidShape("at least one factor must be kept".into()));
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    let traced: Vec<usize> = (0..dims.len()).filter(|f| !kept.contains(f)).collect();
    let ko = subset_offsets(dims, &kept);
    let to = subset_offsets(dims, &traced);
    Ok(Operator::from_fn(ko.len(), |i, j| {
        to.iter().map(|&t| rho.get(ko[i] + t, ko[j] + t)).sum()
    }))
}

/// Transpose applied to the indices of the factors in `transposed` only.
pub fn partial_transpose(rho: &Operator, dims: &[usize], transposed: &[usize]) -> Result<Operator> {
    check_factors(rho, dims, transposed)?;
    let mut tset: Vec<usize> = transposed.to_vec();
    tset.sort_unstable();
    let others: Vec<usize> = (0..dims.len()).filter(|f| !tset.contains(f)).collect();
    let oo = subset_offsets(dims, &others);
    let to = subset_offsets(dims, &tset);
    let mut out = Operator::zeros(rho.dim());
    for &or in &oo {
        for &oc in &oo {
            for &tr in &to {
                for &tc in &to {
                    out.set(or + tc, oc + tr, rho.get(or + tr, oc + tc));
                }
            }
        }
    }
    Ok(out)
}

/// `U = exp(−iHt)` via the eigendecomposition of the Hermitian `H`.
pub fn evolve_unitary(h: &Operator, t: f64) -> Result<Operator> {
    Ok(HermitianSpectrum::new(h)?.propagator(t))
}
