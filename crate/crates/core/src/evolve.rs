//! Exact density-matrix propagation and closed-form comparators.
//!
//! [`BlockPropagator`] diagonalizes a Hermitian generator once, block by
//! block. Blocks are the connected components of its sparsity pattern; for
//! the excitation-conserving Hamiltonians of this crate these are the
//! (at most four-dimensional) fixed-excitation sectors, so `U(t)` is sparse
//! and `U ρ U†` costs `O(d²)` per time sample.

use faer::{Mat, Side};

use crate::fock::{Operator, HERMITIAN_TOL};
use crate::{Error, Result, C64};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Smallest eigenvalue tolerated in a propagated density matrix.
pub const POSITIVITY_TOL: f64 = 1e-8;

/// Density matrix on `A ⊗ B ⊗ field` at time `λt`.
#[derive(Clone, Debug)]
pub struct SystemState {
    pub rho: Operator,
    pub n_max: usize,
    pub time: f64,
}

impl SystemState {
    pub fn dims(&self) -> [usize; 3] {
        [2, 2, self.n_max]
    }

    /// Reduced two-atom state `Tr_F ρ` (4×4).
    pub fn atoms(&self) -> Operator {
        crate::fock::partial_trace(&self.rho, &self.dims(), &[0, 1]).expect("consistent system dimensions")
    }

    /// Reduced field state `Tr_AB ρ`.
    pub fn field(&self) -> Operator {
        crate::fock::partial_trace(&self.rho, &self.dims(), &[2]).expect("consistent system dimensions")
    }
}

/// Sorted sample times in `λt`, starting at 0.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeGrid {
    pub t_max: f64,
    samples: Vec<f64>,
}

impl Default for TimeGrid {
    fn default() -> Self {
        Self::uniform(10.0, 2001).expect("valid default grid")
    }
}

impl TimeGrid {
    /// `count` equally spaced samples on `[0, t_max]`.
    pub fn uniform(t_max: f64, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidParameter("time grid needs at least one sample".into()));
        }
        if count > 1 && !(t_max > 0.0 && t_max.is_finite()) {
            return Err(Error::InvalidParameter(format!("t_max must be positive, got {t_max}")));
        }
        let samples = if count == 1 {
            vec![0.0]
        } else {
            let dt = t_max / (count - 1) as f64;
            (0..count).map(|k| if k == count - 1 { t_max } else { k as f64 * dt }).collect()
        };
        Ok(Self { t_max: if count == 1 { 0.0 } else { t_max }, samples })
    }

    pub fn from_samples(samples: Vec<f64>) -> Result<Self> {
        if samples.first() != Some(&0.0) {
            return Err(Error::InvalidParameter("time grid must start at 0".into()));
        }
        if samples.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("time grid must be strictly increasing".into()));
        }
        let t_max = *samples.last().unwrap();
        Ok(Self { t_max, samples })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Row-sparse operator.
#[derive(Clone, Debug)]
pub struct SparseOperator {
    rows: Vec<Vec<(usize, C64)>>,
}

impl SparseOperator {
    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn to_dense(&self) -> Operator {
        let mut m = Operator::zeros(self.dim());
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                m.set(i, j, v);
            }
        }
        m
    }

    pub fn apply(&self, ket: &[C64]) -> Vec<C64> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(j, v)| v * ket[j]).sum())
            .collect()
    }

    /// `U ρ U†`.
    pub fn conjugate(&self, rho: &Operator) -> Operator {
        let n = self.dim();
        // left = U ρ, one sparse product per column of ρ
        let mut left = Mat::<C64>::zeros(n, n);
        for j in 0..n {
            let src = rho.col(j);
            let dst = left.col_as_slice_mut(j);
            for (d, row) in dst.iter_mut().zip(&self.rows) {
                *d = row.iter().map(|&(k, u)| u * src[k]).sum();
            }
        }
        // out[:, j] = Σ_k conj(U[j, k]) left[:, k]
        let mut out = Mat::<C64>::zeros(n, n);
        for (j, row) in self.rows.iter().enumerate() {
            let dst = out.col_as_slice_mut(j);
            for &(k, u) in row {
                let uc = u.conj();
                for (d, &l) in dst.iter_mut().zip(left.col_as_slice(k)) {
                    *d += l * uc;
                }
            }
        }
        Operator::new(out).expect("square")
    }
}

/// Largest block handled by the block-pair path of [`BlockPropagator::evolve`].
const MAX_DENSE_BLOCK: usize = 8;

#[derive(Clone, Debug)]
struct Block {
    indices: Vec<usize>,
    energies: Vec<f64>,
    /// Row-major `k × k` eigenvector matrix (columns are eigenvectors).
    vectors: Vec<C64>,
}

impl Block {
    /// Row-major `exp(−iH_b t)`.
    fn unitary(&self, t: f64) -> Vec<C64> {
        let k = self.indices.len();
        let phases: Vec<C64> = self.energies.iter().map(|&e| C64::from_polar(1.0, -e * t)).collect();
        let mut u = vec![ZERO; k * k];
        for a in 0..k {
            for c in 0..k {
                let mut v = ZERO;
                for (m, ph) in phases.iter().enumerate() {
                    v += self.vectors[a * k + m] * ph * self.vectors[c * k + m].conj();
                }
                u[a * k + c] = v;
            }
        }
        u
    }
}

/// Eigendecomposition of a Hermitian generator, split into the connected
/// components of its nonzero pattern.
#[derive(Clone, Debug)]
pub struct BlockPropagator {
    dim: usize,
    blocks: Vec<Block>,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

impl BlockPropagator {
    pub fn new(h: &Operator) -> Result<Self> {
        let err = h.hermiticity_error();
        if err > HERMITIAN_TOL {
            return Err(Error::InvalidOperator(format!(
                "generator is not Hermitian (max|H - H^dag| = {err:e})"
            )));
        }
        let n = h.dim();
        let mut parent: Vec<usize> = (0..n).collect();
        for j in 0..n {
            for i in 0..j {
                if h.get(i, j) != ZERO || h.get(j, i) != ZERO {
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    if ri != rj {
                        parent[ri.max(rj)] = ri.min(rj);
                    }
                }
            }
        }
        let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n];
        for i in 0..n {
            let r = find(&mut parent, i);
            groups[r].push(i);
        }
        let mut blocks = Vec::new();
        for indices in groups.into_iter().filter(|g| !g.is_empty()) {
            let k = indices.len();
            let sub = Mat::<C64>::from_fn(k, k, |a, b| {
                let (i, j) = (indices[a], indices[b]);
                // symmetrize so the solver sees an exactly Hermitian block
                0.5 * (h.get(i, j) + h.get(j, i).conj())
            });
            let evd = sub
                .self_adjoint_eigen(Side::Lower)
                .map_err(|e| Error::Numerical(format!("block eigensolver failed: {e:?}")))?;
            let energies = evd.S().column_vector().iter().map(|z| z.re).collect();
            let u = evd.U();
            let mut vectors = Vec::with_capacity(k * k);
            for a in 0..k {
                for b in 0..k {
                    vectors.push(u[(a, b)]);
                }
            }
            blocks.push(Block { indices, energies, vectors });
        }
        Ok(Self { dim: n, blocks })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.indices.len()).collect()
    }

    /// Spectral norm of the generator.
    pub fn norm(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| b.energies.iter())
            .fold(0.0f64, |m, e| m.max(e.abs()))
    }

    /// All eigenvalues, unsorted.
    pub fn energies(&self) -> Vec<f64> {
        self.blocks.iter().flat_map(|b| b.energies.iter().copied()).collect()
    }

    /// `exp(−iHt)` in sparse form.
    pub fn unitary(&self, t: f64) -> SparseOperator {
        let mut rows: Vec<Vec<(usize, C64)>> = vec![Vec::new(); self.dim];
        for b in &self.blocks {
            let k = b.indices.len();
            let u = b.unitary(t);
            for a in 0..k {
                rows[b.indices[a]].extend((0..k).map(|c| (b.indices[c], u[a * k + c])));
            }
        }
        SparseOperator { rows }
    }

    /// `U(t) ρ U†(t)`, one block pair at a time: `ρ_IJ ← U_I ρ_IJ U_J†`.
    pub fn evolve(&self, rho: &Operator, t: f64) -> Operator {
        let blocks: Vec<(&[usize], Vec<C64>)> =
            self.blocks.iter().map(|b| (b.indices.as_slice(), b.unitary(t))).collect();
        let n = self.dim;
        let mut out = Mat::<C64>::zeros(n, n);
        let mut sub = [[ZERO; MAX_DENSE_BLOCK]; MAX_DENSE_BLOCK];
        let mut tmp = [[ZERO; MAX_DENSE_BLOCK]; MAX_DENSE_BLOCK];
        for (jdx, uj) in &blocks {
            let kj = jdx.len();
            if kj > MAX_DENSE_BLOCK {
                return self.unitary(t).conjugate(rho);
            }
            for (idx, ui) in &blocks {
                let ki = idx.len();
                if ki > MAX_DENSE_BLOCK {
                    return self.unitary(t).conjugate(rho);
                }
                for c in 0..kj {
                    let col = rho.col(jdx[c]);
                    for a in 0..ki {
                        sub[a][c] = col[idx[a]];
                    }
                }
                for a in 0..ki {
                    for c in 0..kj {
                        let mut acc = ZERO;
                        for d in 0..ki {
                            acc += ui[a * ki + d] * sub[d][c];
                        }
                        tmp[a][c] = acc;
                    }
                }
                for c in 0..kj {
                    let col = out.col_as_slice_mut(jdx[c]);
                    for a in 0..ki {
                        let mut acc = ZERO;
                        for d in 0..kj {
                            acc += tmp[a][d] * uj[c * kj + d].conj();
                        }
                        col[idx[a]] = acc;
                    }
                }
            }
        }
        Operator::new(out).expect("square")
    }

    pub fn evolve_ket(&self, ket: &[C64], t: f64) -> Vec<C64> {
        self.unitary(t).apply(ket)
    }
}

/// Lazily evaluated sequence `ρ(t_k) = U(t_k) ρ(0) U†(t_k)` over a grid.
pub struct Trajectory {
    propagator: BlockPropagator,
    rho0: Operator,
    n_max: usize,
    samples: Vec<f64>,
    next: usize,
}

impl Trajectory {
    pub fn propagator(&self) -> &BlockPropagator {
        &self.propagator
    }

    /// State at an arbitrary time (need not lie on the grid).
    pub fn state_at(&self, t: f64) -> SystemState {
        let rho = if t == 0.0 { self.rho0.clone() } else { self.propagator.evolve(&self.rho0, t) };
        SystemState { rho, n_max: self.n_max, time: t }
    }
}

impl Iterator for Trajectory {
    type Item = SystemState;

    fn next(&mut self) -> Option<SystemState> {
        let t = *self.samples.get(self.next)?;
        self.next += 1;
        Some(self.state_at(t))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.samples.len() - self.next;
        (left, Some(left))
    }
}

impl ExactSizeIterator for Trajectory {}

/// Exact propagation of `rho0` under `h` over `grid`. The generator is
/// diagonalized once; states are produced on demand.
pub fn propagate(rho0: &SystemState, h: &Operator, grid: &TimeGrid) -> Result<Trajectory> {
    if h.dim() != rho0.rho.dim() {
        return Err(Error::InvalidShape(format!(
            "Hamiltonian dimension {} does not match state dimension {}",
            h.dim(),
            rho0.rho.dim()
        )));
    }
    Ok(Trajectory {
        propagator: BlockPropagator::new(h)?,
        rho0: rho0.rho.clone(),
        n_max: rho0.n_max,
        samples: grid.samples().to_vec(),
        next: 0,
    })
}

/// Initial atomic level for [`jcm_amplitudes`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    /// `|e, n⟩ → x₁|e, n⟩ + x₂|g, n+1⟩`.
    Excited,
    /// `|g, n⟩ → y₁|g, n⟩ + y₂|e, n−1⟩`.
    Ground,
}

/// Closed-form single-atom resonant amplitudes.
pub fn jcm_amplitudes(n: usize, lambda_t: f64, branch: Branch) -> (C64, C64) {
    let rabi = match branch {
        Branch::Excited => ((n + 1) as f64).sqrt(),
        Branch::Ground => (n as f64).sqrt(),
    };
    let phase = rabi * lambda_t;
    (C64::new(phase.cos(), 0.0), C64::new(0.0, -phase.sin()))
}

/// Evolved ket built from the factorized amplitudes `a₁..a₄`:
///
/// ```text
/// a₁ = (cosθ/2) c_n (x₁ + y₁)            on |e, g, n⟩
/// a₂ = (cosθ/2 + sinθ/2) c_n x₂          on |g, g, n+1⟩
/// a₃ = (sinθ/2) c_n (x₁ + y₁)            on |g, e, n⟩
/// a₄ = (cosθ/2 + sinθ/2) c_n y₂          on |e, e, n−1⟩
/// ```
///
/// normalized at every time. Components that would leave the retained
/// Fock levels are dropped.
#[derive(Clone, Debug)]
pub struct FactorizedScheme {
    theta: f64,
    coefficients: Vec<C64>,
    samples: Vec<f64>,
    next: usize,
}

impl FactorizedScheme {
    pub fn n_max(&self) -> usize {
        self.coefficients.len()
    }

    pub fn ket_at(&self, t: f64) -> Result<Vec<C64>> {
        let nf = self.coefficients.len();
        let mut ket = vec![ZERO; 4 * nf];
        let (ch, sh) = (self.theta.cos() / 2.0, self.theta.sin() / 2.0);
        for (n, &cn) in self.coefficients.iter().enumerate() {
            let (x1, x2) = jcm_amplitudes(n, t, Branch::Excited);
            let (y1, y2) = jcm_amplitudes(n, t, Branch::Ground);
            ket[nf + n] += ch * cn * (x1 + y1);
            ket[2 * nf + n] += sh * cn * (x1 + y1);
            if n + 1 < nf {
                ket[3 * nf + n + 1] += (ch + sh) * cn * x2;
            }
            if n >= 1 {
                ket[n - 1] += (ch + sh) * cn * y2;
            }
        }
        let norm: f64 = ket.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 1e-300) {
            return Err(Error::Numerical(format!("factorized ket vanishes at t = {t}")));
        }
        Ok(ket.into_iter().map(|z| z / norm).collect())
    }

    pub fn state_at(&self, t: f64) -> Result<SystemState> {
        Ok(SystemState { rho: Operator::projector(&self.ket_at(t)?), n_max: self.n_max(), time: t })
    }
}

impl Iterator for FactorizedScheme {
    type Item = Result<SystemState>;

    fn next(&mut self) -> Option<Self::Item> {
        let t = *self.samples.get(self.next)?;
        self.next += 1;
        Some(self.state_at(t))
    }
}

/// Comparator dynamics for a pure Bell-type atom pair and a pure field with
/// Fock amplitudes `c`.
pub fn factorized_scheme(theta: f64, c: &[C64], grid: &TimeGrid) -> Result<FactorizedScheme> {
    if c.is_empty() {
        return Err(Error::InvalidState("field coefficients are empty".into()));
    }
    let norm: f64 = c.iter().map(|z| z.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidState(format!("field coefficients have norm^2 = {norm}, expected 1")));
    }
    Ok(FactorizedScheme { theta, coefficients: c.to_vec(), samples: grid.samples().to_vec(), next: 0 })
}

/// One sample of [`single_atom_oracle`]: populations of `|e, n⟩` and
/// `|g, n+1⟩` from exact diagonalization and from the closed form.
#[derive(Clone, Copy, Debug)]
pub struct OracleSample {
    pub time: f64,
    pub exact: [f64; 2],
    pub closed_form: [f64; 2],
}

/// One atom resonantly coupled to a field with `n_max` levels, started in
/// `|e, n⟩` and evolved exactly.
pub fn single_atom_oracle(n: usize, grid: &TimeGrid, n_max: usize) -> Result<Vec<OracleSample>> {
    if n + 1 >= n_max {
        return Err(Error::InvalidParameter(format!("need n + 1 < n_max, got n = {n}, n_max = {n_max}")));
    }
    let h = single_atom_hamiltonian(n_max)?;
    let prop = BlockPropagator::new(&h)?;
    let mut ket = vec![ZERO; 2 * n_max];
    ket[n] = C64::new(1.0, 0.0);
    Ok(grid
        .samples()
        .iter()
        .map(|&t| {
            let psi = prop.evolve_ket(&ket, t);
            let (x1, x2) = jcm_amplitudes(n, t, Branch::Excited);
            OracleSample {
                time: t,
                exact: [psi[n].norm_sqr(), psi[n_max + n + 1].norm_sqr()],
                closed_form: [x1.norm_sqr(), x2.norm_sqr()],
            }
        })
        .collect())
}

/// `a†σ₋ + aσ₊` on `qubit ⊗ field` (λ = 1).
pub fn single_atom_hamiltonian(n_max: usize) -> Result<Operator> {
    use crate::hamiltonian::qubit;
    let a = crate::fock::annihilation(n_max)?;
    let t1 = crate::fock::tensor(&qubit::sigma_minus(), &a.adjoint());
    let t2 = crate::fock::tensor(&qubit::sigma_plus(), &a);
    Ok(&t1 + &t2)
}

/// Conservation diagnostics of one propagated state.
#[derive(Clone, Copy, Debug)]
pub struct InvariantSample {
    pub time: f64,
    pub trace_drift: f64,
    pub hermiticity: f64,
    /// Smallest eigenvalue is at least `−POSITIVITY_TOL`.
    pub positive: bool,
    pub energy_drift: f64,
}

/// Tracks trace, Hermiticity, positivity and `⟨H⟩` along a trajectory.
pub struct InvariantMonitor {
    h_entries: Vec<(usize, usize, C64)>,
    trace0: f64,
    energy0: f64,
    pub h_norm: f64,
}

impl InvariantMonitor {
    pub fn new(rho0: &Operator, h: &Operator, h_norm: f64) -> Self {
        let n = h.dim();
        let mut h_entries = Vec::new();
        for j in 0..n {
            for i in 0..n {
                let v = h.get(i, j);
                if v != ZERO {
                    h_entries.push((i, j, v));
                }
            }
        }
        let mut m = Self { h_entries, trace0: rho0.trace().re, energy0: 0.0, h_norm };
        m.energy0 = m.energy(rho0);
        m
    }

    /// `Re Tr[ρH]`.
    pub fn energy(&self, rho: &Operator) -> f64 {
        self.h_entries.iter().map(|&(i, j, v)| (rho.get(j, i) * v).re).sum()
    }

    pub fn check(&self, state: &SystemState) -> InvariantSample {
        InvariantSample {
            time: state.time,
            trace_drift: (state.rho.trace().re - self.trace0).abs(),
            hermiticity: state.rho.hermiticity_error(),
            positive: state.rho.is_positive_above(POSITIVITY_TOL),
            energy_drift: (self.energy(&state.rho) - self.energy0).abs(),
        }
    }

    /// True when the sample satisfies every module tolerance.
    pub fn within_tolerance(&self, s: &InvariantSample) -> bool {
        s.trace_drift <= 1e-10 && s.hermiticity <= 1e-10 && s.positive && s.energy_drift <= 1e-8 * self.h_norm.max(1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{evolve_unitary, tensor};
    use crate::hamiltonian::{build, jc_interaction, ModelSpec};
    use crate::states::{bell_atoms, compose_initial, scts_state, FieldParams};
    use crate::fock::TruncationPolicy;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    #[test]
    fn grid_shape() {
        let g = TimeGrid::default();
        assert_eq!(g.len(), 2001);
        assert_eq!(g.samples()[0], 0.0);
        assert_eq!(*g.samples().last().unwrap(), 10.0);
        assert!(TimeGrid::from_samples(vec![0.0, 1.0, 1.0]).is_err());
        assert!(TimeGrid::from_samples(vec![0.5, 1.0]).is_err());
        assert!(TimeGrid::uniform(10.0, 0).is_err());
    }

    #[test]
    fn block_propagator_matches_dense() {
        let spec = ModelSpec { jz: 0.3, gd: 1.1, kerr_k: 0.1, ..ModelSpec::default() };
        let n = 12;
        let h = build(&spec, n).unwrap();
        let prop = BlockPropagator::new(&h).unwrap();
        assert!(prop.block_sizes().iter().all(|&k| k <= 4));
        for t in [0.0, 0.37, 2.5] {
            let dense = evolve_unitary(&h, t).unwrap();
            assert!(prop.unitary(t).to_dense().max_abs_diff(&dense) < 1e-10);
        }
    }

    #[test]
    fn group_property() {
        let h = jc_interaction(10, 1.0, 0.7).unwrap();
        let u1 = evolve_unitary(&h, 0.4).unwrap();
        let u2 = evolve_unitary(&h, 1.1).unwrap();
        let u12 = evolve_unitary(&h, 1.5).unwrap();
        assert!(u1.matmul(&u2).max_abs_diff(&u12) < 1e-9);
        assert!(u12.unitarity_error() < 1e-10);
    }

    #[test]
    fn propagate_examples() {
        let policy = TruncationPolicy::new(30, 2, 1e-8).unwrap();
        let field = scts_state(FieldParams::new(2.0, 0.0, 0.0), &policy).unwrap();
        let rho0 = compose_initial(&bell_atoms(FRAC_PI_4), &field);
        let grid = TimeGrid::uniform(1.0, 5).unwrap();

        let h = build(&ModelSpec::default(), field.n_max()).unwrap();
        let first = propagate(&rho0, &h, &grid).unwrap().next().unwrap();
        assert!(first.rho.max_abs_diff(&rho0.rho) == 0.0);

        let zero = Operator::zeros(rho0.rho.dim());
        for s in propagate(&rho0, &zero, &grid).unwrap() {
            assert!(s.rho.max_abs_diff(&rho0.rho) < 1e-15);
        }

        let bad = Operator::zeros(8);
        assert!(matches!(propagate(&rho0, &bad, &grid), Err(Error::InvalidShape(_))));
    }

    #[test]
    fn vacuum_rabi_with_one_coupled_atom() {
        let n = 6;
        // |e, g, 0⟩ with only atom A coupled
        let h = jc_interaction(n, 1.0, 0.0).unwrap();
        let mut ket = vec![ZERO; 4 * n];
        ket[n] = C64::new(1.0, 0.0);
        let rho0 = SystemState { rho: Operator::projector(&ket), n_max: n, time: 0.0 };
        let grid = TimeGrid::from_samples(vec![0.0, FRAC_PI_2]).unwrap();
        let last = propagate(&rho0, &h, &grid).unwrap().last().unwrap();
        let atoms = last.atoms();
        // P(g_A) = P(|ge⟩) + P(|gg⟩)
        let pg = atoms.get(2, 2).re + atoms.get(3, 3).re;
        assert!((pg - 1.0).abs() < 1e-12);
    }

    #[test]
    fn one_atom_reduction_matches_closed_form() {
        let n = 12;
        let h = jc_interaction(n, 1.0, 0.0).unwrap();
        let prop = BlockPropagator::new(&h).unwrap();
        for photons in [0usize, 1, 5] {
            let mut ket = vec![ZERO; 4 * n];
            ket[n + photons] = C64::new(1.0, 0.0); // |e, g, n⟩
            for k in 0..=50 {
                let t = 0.2 * k as f64;
                let psi = prop.evolve_ket(&ket, t);
                let (x1, x2) = jcm_amplitudes(photons, t, Branch::Excited);
                assert!((psi[n + photons] - x1).norm() < 1e-10);
                assert!((psi[3 * n + photons + 1] - x2).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn jcm_amplitude_examples() {
        let (a1, a2) = jcm_amplitudes(0, FRAC_PI_2, Branch::Excited);
        assert!(a1.norm() < 1e-15);
        assert!((a2 - C64::new(0.0, -1.0)).norm() < 1e-15);
        assert_eq!(jcm_amplitudes(0, 1.3, Branch::Ground), (C64::new(1.0, 0.0), C64::new(0.0, 0.0)));
        assert_eq!(jcm_amplitudes(7, 0.0, Branch::Ground).0, C64::new(1.0, 0.0));
    }

    proptest! {
        #[test]
        fn jcm_amplitudes_unitary(n in 0usize..200, t in -50.0f64..50.0) {
            for branch in [Branch::Excited, Branch::Ground] {
                let (a, b) = jcm_amplitudes(n, t, branch);
                prop_assert!((a.norm_sqr() + b.norm_sqr() - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn single_atom_oracle_examples() {
        let grid = TimeGrid::uniform(10.0, 401).unwrap();
        for n in [0, 1, 5] {
            let track = single_atom_oracle(n, &grid, 20).unwrap();
            for s in &track {
                assert!((s.exact[0] - s.closed_form[0]).abs() <= 1e-10);
                assert!((s.exact[0] + s.exact[1] - 1.0).abs() <= 1e-12);
            }
        }
        let at_pi = single_atom_oracle(0, &TimeGrid::from_samples(vec![0.0, PI]).unwrap(), 4).unwrap();
        assert!((at_pi[1].exact[0] - 1.0).abs() < 1e-12);
        assert!(single_atom_oracle(5, &grid, 6).is_err());
    }

    #[test]
    fn factorized_scheme_examples() {
        let policy = TruncationPolicy::default();
        let (c, _) = crate::states::pure_field_coefficients(FieldParams::new(5.0, 0.0, 0.0), &policy).unwrap();
        let grid = TimeGrid::uniform(3.0, 7).unwrap();
        let mut scheme = factorized_scheme(FRAC_PI_4, &c, &grid).unwrap();
        let s0 = scheme.next().unwrap().unwrap();
        let bell = bell_atoms(FRAC_PI_4);
        let expect = tensor(&bell.rho, &Operator::projector(&c));
        assert!(s0.rho.max_abs_diff(&expect) < 1e-12);
        for s in scheme {
            assert!((s.unwrap().rho.trace().re - 1.0).abs() <= 1e-12);
        }

        let mut vac = vec![ZERO; 10];
        vac[0] = C64::new(1.0, 0.0);
        let scheme = factorized_scheme(FRAC_PI_4, &vac, &grid).unwrap();
        let ket = scheme.ket_at(1.3).unwrap();
        // no |e, e, ·⟩ component
        assert!(ket[..10].iter().all(|z| z.norm() == 0.0));

        assert!(matches!(factorized_scheme(0.3, &[C64::new(0.5, 0.0)], &grid), Err(Error::InvalidState(_))));
    }

    #[test]
    fn invariants_hold_on_small_system() {
        let policy = TruncationPolicy::new(40, 2, 1e-8).unwrap();
        let field = scts_state(FieldParams::new(2.0, 0.5, 0.5), &policy).unwrap();
        let rho0 = compose_initial(&bell_atoms(FRAC_PI_4), &field);
        let spec = ModelSpec { jz: 0.5, gd: 1.0, kerr_k: 0.1, ..ModelSpec::default() };
        let h = build(&spec, field.n_max()).unwrap();
        let traj = propagate(&rho0, &h, &TimeGrid::uniform(10.0, 51).unwrap()).unwrap();
        let monitor = InvariantMonitor::new(&rho0.rho, &h, traj.propagator().norm());
        for s in traj {
            let inv = monitor.check(&s);
            assert!(monitor.within_tolerance(&inv), "{inv:?}");
        }
    }
}
