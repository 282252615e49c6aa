//! Entanglement and phase-space observables.

use std::str::FromStr;

use faer::{Mat, Side};
use rayon::prelude::*;

use crate::evolve::SystemState;
use crate::fock::{partial_transpose, Operator};
use crate::{Error, Result, C64};

/// Default ESD threshold.
pub const ESD_THRESHOLD: f64 = 1e-6;

/// Tolerance on negative eigenvalues / trace error of an input density matrix.
const STATE_TOL: f64 = 1e-8;

fn hermitian_eigen(rho: &Operator) -> Result<(Vec<f64>, Mat<C64>)> {
    let evd = rho
        .mat()
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("eigensolver failed: {e:?}")))?;
    let values = evd.S().column_vector().iter().map(|z| z.re).collect();
    Ok((values, evd.U().to_owned()))
}

fn check_density(rho: &Operator, dim: usize) -> Result<()> {
    if rho.dim() != dim {
        return Err(Error::InvalidShape(format!("expected a {dim}x{dim} density matrix, got {}", rho.dim())));
    }
    let herm = rho.hermiticity_error();
    if herm > STATE_TOL {
        return Err(Error::InvalidState(format!("density matrix is not Hermitian ({herm:e})")));
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > 1e-6 || tr.im.abs() > 1e-6 {
        return Err(Error::InvalidState(format!("density matrix has trace {tr}")));
    }
    Ok(())
}

/// `σ_y ⊗ σ_y` in the `ee, eg, ge, gg` basis.
fn spin_flip() -> Operator {
    let mut m = Operator::zeros(4);
    m.set(0, 3, C64::new(-1.0, 0.0));
    m.set(3, 0, C64::new(-1.0, 0.0));
    m.set(1, 2, C64::new(1.0, 0.0));
    m.set(2, 1, C64::new(1.0, 0.0));
    m
}

/// Two-qubit concurrence `max{0, Λ₁ − Λ₂ − Λ₃ − Λ₄}`.
///
/// The `Λᵢ` are obtained as singular values of `Wᵀ(σ_y⊗σ_y)W` with
/// `ρ = WW†`, which equals the square roots of the spectrum of
/// `ρ(σ_y⊗σ_y)ρ*(σ_y⊗σ_y)` without squaring round-off.
pub fn concurrence(rho_ab: &Operator) -> Result<f64> {
    check_density(rho_ab, 4)?;
    let (values, vectors) = hermitian_eigen(rho_ab)?;
    let top = values.iter().fold(0.0f64, |m, &v| m.max(v));
    if let Some(&min) = values.iter().min_by(|a, b| a.total_cmp(b)) {
        if min < -STATE_TOL {
            return Err(Error::InvalidState(format!("density matrix has eigenvalue {min:e}")));
        }
    }
    let kept: Vec<usize> = (0..4).filter(|&k| values[k] > 1e-12 * top).collect();
    let w = Mat::<C64>::from_fn(4, kept.len(), |i, c| vectors[(i, kept[c])] * values[kept[c]].sqrt());
    let flip = spin_flip();
    let tau = w.transpose() * flip.mat() * &w;
    let mut lambdas = tau
        .singular_values()
        .map_err(|e| Error::Numerical(format!("singular value decomposition failed: {e:?}")))?;
    lambdas.sort_by(|a, b| b.total_cmp(a));
    lambdas.resize(4, 0.0);
    Ok((lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).clamp(0.0, 1.0))
}

/// Bipartition for [`negativity`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Cut {
    #[default]
    AtomsVsField,
    AtomAVsRest,
}

impl Cut {
    pub fn name(self) -> &'static str {
        match self {
            Cut::AtomsVsField => "atoms_vs_field",
            Cut::AtomAVsRest => "atomA_vs_rest",
        }
    }

    fn transposed(self) -> &'static [usize] {
        match self {
            Cut::AtomsVsField => &[0, 1],
            Cut::AtomAVsRest => &[0],
        }
    }
}

impl FromStr for Cut {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "atoms_vs_field" => Ok(Cut::AtomsVsField),
            "atomA_vs_rest" => Ok(Cut::AtomAVsRest),
            other => Err(Error::InvalidParameter(format!(
                "unknown cut '{other}' (expected atoms_vs_field or atomA_vs_rest)"
            ))),
        }
    }
}

/// `Σ (|ξ| − ξ)/2` over the spectrum of the partial transpose of `rho`
/// with respect to the subsystems `transposed`.
pub fn negativity_bipartite(rho: &Operator, dims: &[usize], transposed: &[usize]) -> Result<f64> {
    let pt = partial_transpose(rho, dims, transposed)?;
    let xi = pt.hermitian_eigenvalues()?;
    Ok(xi.iter().map(|&x| (x.abs() - x) / 2.0).sum())
}

/// Negativity of a system state across `cut`.
pub fn negativity(state: &SystemState, cut: Cut) -> Result<f64> {
    negativity_bipartite(&state.rho, &state.dims(), cut.transposed())
}

/// Atom selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Atom {
    A,
    B,
}

/// Inversion `⟨σ_z⟩` of one atom from a two-atom reduced density matrix.
pub fn atom_pair_inversion(rho_ab: &Operator, atom: Atom) -> f64 {
    let p = |k: usize| rho_ab.get(k, k).re;
    // basis ee, eg, ge, gg
    match atom {
        Atom::A => p(0) + p(1) - p(2) - p(3),
        Atom::B => p(0) + p(2) - p(1) - p(3),
    }
}

/// `Tr[ρ σ_z^{atom}]`.
pub fn atomic_inversion(state: &SystemState, atom: Atom) -> f64 {
    atom_pair_inversion(&state.atoms(), atom)
}

/// Rectangular phase-space grid `α = x + ip`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WignerSpec {
    pub x_range: (f64, f64),
    pub p_range: (f64, f64),
    pub nx: usize,
    pub np: usize,
}

impl Default for WignerSpec {
    fn default() -> Self {
        Self { x_range: (-5.0, 5.0), p_range: (-5.0, 5.0), nx: 101, np: 101 }
    }
}

fn axis(range: (f64, f64), n: usize, k: usize) -> f64 {
    if n == 1 {
        range.0
    } else {
        range.0 + (range.1 - range.0) * k as f64 / (n - 1) as f64
    }
}

impl WignerSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = |r: (f64, f64)| r.0.is_finite() && r.1.is_finite() && r.1 > r.0;
        if !ok(self.x_range) || !ok(self.p_range) {
            return Err(Error::InvalidParameter("Wigner ranges must be finite with min < max".into()));
        }
        if self.nx < 2 || self.np < 2 {
            return Err(Error::InvalidParameter("Wigner grid needs at least 2 points per axis".into()));
        }
        Ok(())
    }

    pub fn x(&self, i: usize) -> f64 {
        axis(self.x_range, self.nx, i)
    }

    pub fn p(&self, j: usize) -> f64 {
        axis(self.p_range, self.np, j)
    }

    /// Largest `|α|` on the grid.
    pub fn max_radius(&self) -> f64 {
        let x = self.x_range.0.abs().max(self.x_range.1.abs());
        let p = self.p_range.0.abs().max(self.p_range.1.abs());
        x.hypot(p)
    }
}

/// Sampled Wigner function, row-major in `x` (`values[i * np + j]`).
#[derive(Clone, Debug)]
pub struct WignerGrid {
    pub x_range: (f64, f64),
    pub p_range: (f64, f64),
    pub nx: usize,
    pub np: usize,
    pub values: Vec<f64>,
    /// The grid reaches displacements the truncated basis cannot represent.
    pub truncation_risk: bool,
}

impl WignerGrid {
    fn spec(&self) -> WignerSpec {
        WignerSpec { x_range: self.x_range, p_range: self.p_range, nx: self.nx, np: self.np }
    }

    pub fn x(&self, i: usize) -> f64 {
        self.spec().x(i)
    }

    pub fn p(&self, j: usize) -> f64 {
        self.spec().p(j)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.np + j]
    }

    /// Riemann sum `Σ W Δx Δp`.
    pub fn integral(&self) -> f64 {
        let dx = (self.x_range.1 - self.x_range.0) / (self.nx - 1) as f64;
        let dp = (self.p_range.1 - self.p_range.0) / (self.np - 1) as f64;
        self.values.iter().sum::<f64>() * dx * dp
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Matrix elements `d[n][m] = ⟨n|D(β)|m⟩` of the untruncated displacement
/// operator for `n, m < dim`, row-major.
///
/// Uses `⟨m+a|D(β)|m⟩ = √(m!/(m+a)!) β^a e^{−|β|²/2} L_m^{(a)}(|β|²)` (and
/// `−β*` in place of `β` above the diagonal), walking each diagonal with the
/// three-term Laguerre recurrence, which stays accurate where a recurrence
/// on the matrix elements themselves cancels catastrophically.
pub fn displacement_elements(beta: C64, dim: usize) -> Vec<C64> {
    let mut d = vec![C64::new(0.0, 0.0); dim * dim];
    let x = beta.norm_sqr();
    if x == 0.0 {
        for k in 0..dim {
            d[k * dim + k] = C64::new(1.0, 0.0);
        }
        return d;
    }
    let ln_radius = 0.5 * x.ln();
    let unit = beta / beta.norm();
    let mut ln_fact = 0.0;
    for a in 0..dim {
        if a > 0 {
            ln_fact += (a as f64).ln();
        }
        let af = a as f64;
        let scale = (-0.5 * x + af * ln_radius - 0.5 * ln_fact).exp();
        let lower = unit.powi(a as i32) * scale;
        let upper = (-unit.conj()).powi(a as i32) * scale;
        // L_{k-1}, L_k of order a at x; ratio = √(k! a! / (k+a)!)
        let (mut l_prev, mut l) = (0.0, 1.0);
        let mut ratio = 1.0;
        for k in 0..dim - a {
            if k > 0 {
                let j = (k - 1) as f64;
                let next = ((2.0 * j + 1.0 + af - x) * l - (j + af) * l_prev) / (j + 1.0);
                l_prev = l;
                l = next;
                ratio *= (k as f64 / (k as f64 + af)).sqrt();
            }
            d[(k + a) * dim + k] = lower * (ratio * l);
            if a > 0 {
                d[k * dim + k + a] = upper * (ratio * l);
            }
        }
    }
    d
}

/// `W(α) = (2/π) Tr[ρ D(α) Π D†(α)] = (2/π) Σ ρ_{mn} (−1)^m ⟨n|D(2α)|m⟩`.
pub fn wigner_point(rho: &Operator, alpha: C64) -> f64 {
    let dim = rho.dim();
    let d = displacement_elements(2.0 * alpha, dim);
    let mut acc = 0.0;
    for m in 0..dim {
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        let mut row = C64::new(0.0, 0.0);
        for n in 0..dim {
            row += rho.get(m, n) * d[n * dim + m];
        }
        acc += sign * row.re;
    }
    2.0 / std::f64::consts::PI * acc
}

/// Wigner function of a field density matrix on `spec`. Points are
/// evaluated in parallel; output order is deterministic.
pub fn wigner(rho_field: &Operator, spec: &WignerSpec) -> Result<WignerGrid> {
    spec.validate()?;
    let dim = rho_field.dim();
    // displacement elements are exact; only the support of the truncated
    // state limits the meaningful range
    let truncation_risk = spec.max_radius().powi(2) > dim as f64;
    if truncation_risk {
        log::warn!(
            "Wigner grid radius {:.3} exceeds the range represented by {dim} Fock levels",
            spec.max_radius()
        );
    }
    let values: Vec<f64> = (0..spec.nx * spec.np)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / spec.np, k % spec.np);
            wigner_point(rho_field, C64::new(spec.x(i), spec.p(j)))
        })
        .collect();
    Ok(WignerGrid {
        x_range: spec.x_range,
        p_range: spec.p_range,
        nx: spec.nx,
        np: spec.np,
        values,
        truncation_risk,
    })
}

/// Characteristic function `χ(β) = Tr[ρ D(β)]`.
pub fn characteristic(rho: &Operator, beta: C64) -> C64 {
    let dim = rho.dim();
    let d = displacement_elements(beta, dim);
    let mut acc = C64::new(0.0, 0.0);
    for m in 0..dim {
        for n in 0..dim {
            acc += rho.get(m, n) * d[n * dim + m];
        }
    }
    acc
}

/// `W(α) = (1/π²) ∫ d²β χ(β) e^{αβ* − α*β}` by the trapezoid rule on the
/// square `|Re β|, |Im β| ≤ half_width` with `n` nodes per axis.
pub fn wigner_from_characteristic(rho: &Operator, points: &[C64], half_width: f64, n: usize) -> Vec<f64> {
    let h = 2.0 * half_width / (n - 1) as f64;
    let node = |k: usize| -half_width + h * k as f64;
    let weight = |k: usize| if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
    let chi: Vec<(C64, f64, C64)> = (0..n * n)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / n, k % n);
            let beta = C64::new(node(i), node(j));
            (beta, weight(i) * weight(j), characteristic(rho, beta))
        })
        .collect();
    let scale = h * h / (std::f64::consts::PI * std::f64::consts::PI);
    points
        .iter()
        .map(|&alpha| {
            let sum: C64 = chi
                .iter()
                .map(|&(beta, w, c)| w * c * (alpha * beta.conj() - alpha.conj() * beta).exp())
                .sum();
            sum.re * scale
        })
        .collect()
}

/// Sudden-death intervals of a sampled measure.
#[derive(Clone, Debug, PartialEq)]
pub struct EsdReport {
    /// `(t_start, t_end)` of each maximal run below threshold.
    pub intervals: Vec<(f64, f64)>,
    pub threshold: f64,
}

impl EsdReport {
    pub fn total_duration(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }
}

/// Maximal runs of at least two consecutive samples with `value < threshold`.
///
/// # Panics
/// If `times` and `values` differ in length.
pub fn detect_esd(times: &[f64], values: &[f64], threshold: f64) -> EsdReport {
    assert_eq!(times.len(), values.len(), "time and value series differ in length");
    let mut intervals = Vec::new();
    let mut start: Option<usize> = None;
    let close = |s: usize, e: usize, out: &mut Vec<(f64, f64)>| {
        if e > s {
            out.push((times[s], times[e]));
        }
    };
    for (k, &v) in values.iter().enumerate() {
        match (v < threshold, start) {
            (true, None) => start = Some(k),
            (false, Some(s)) => {
                close(s, k - 1, &mut intervals);
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        close(s, values.len() - 1, &mut intervals);
    }
    EsdReport { intervals, threshold }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{tensor, TruncationPolicy};
    use crate::states::{bell_atoms, compose_initial, fock_state, scts_state, thermal_state, werner_atoms, FieldParams};
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_2_PI, FRAC_PI_4};

    /// Square roots of the spectrum of `ρ ρ̃`, from a general eigensolver.
    fn wootters_oracle(rho: &Operator) -> f64 {
        let flip = spin_flip();
        let tilde = flip.matmul(&rho.conj()).matmul(&flip);
        let r = rho.matmul(&tilde);
        let mut l: Vec<f64> = r.mat().eigenvalues().unwrap().iter().map(|z| z.re.max(0.0).sqrt()).collect();
        l.sort_by(|a, b| b.total_cmp(a));
        (l[0] - l[1] - l[2] - l[3]).max(0.0)
    }

    fn random_unitary(seed: &[f64]) -> Operator {
        // exp(iG) of a random Hermitian 2x2
        let g = Operator::from_fn(2, |i, j| match (i, j) {
            (0, 0) => C64::new(seed[0], 0.0),
            (1, 1) => C64::new(seed[1], 0.0),
            (0, 1) => C64::new(seed[2], seed[3]),
            _ => C64::new(seed[2], -seed[3]),
        });
        crate::fock::evolve_unitary(&g, -1.0).unwrap()
    }

    fn random_ket(re: &[f64], im: &[f64]) -> Vec<C64> {
        let v: Vec<C64> = re.iter().zip(im).map(|(&a, &b)| C64::new(a, b)).collect();
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.into_iter().map(|z| z / n).collect()
    }

    #[test]
    fn concurrence_examples() {
        assert!((concurrence(&bell_atoms(FRAC_PI_4).rho).unwrap() - 1.0).abs() < 1e-10);
        let mixed = Operator::identity(4).scaled(C64::new(0.25, 0.0));
        assert!(concurrence(&mixed).unwrap().abs() < 1e-12);
        let w = werner_atoms(0.5).unwrap().rho;
        assert!((concurrence(&w).unwrap() - 0.25).abs() < 1e-10);
        assert!((wootters_oracle(&w) - 0.25).abs() < 1e-7);
    }

    #[test]
    fn concurrence_rejects_non_positive() {
        let mut bad = Operator::zeros(4);
        bad.set(0, 0, C64::new(1.5, 0.0));
        bad.set(3, 3, C64::new(-0.5, 0.0));
        assert!(matches!(concurrence(&bad), Err(Error::InvalidState(_))));
        assert!(matches!(concurrence(&Operator::identity(3)), Err(Error::InvalidShape(_))));
    }

    #[test]
    fn concurrence_of_bell_family() {
        for k in 0..=20 {
            let theta = k as f64 * std::f64::consts::PI / 20.0;
            let c = concurrence(&bell_atoms(theta).rho).unwrap();
            assert!((c - (2.0 * theta).sin().abs()).abs() < 1e-10);
            let oracle = wootters_oracle(&bell_atoms(theta).rho);
            assert!((c - oracle).abs() < 1e-6, "theta={theta}: {c} vs {oracle}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn concurrence_local_unitary_invariance(
            re in proptest::collection::vec(-1.0f64..1.0, 16),
            im in proptest::collection::vec(-1.0f64..1.0, 16),
            weights in proptest::collection::vec(0.01f64..1.0, 4),
            ua in proptest::collection::vec(-3.0f64..3.0, 4),
            ub in proptest::collection::vec(-3.0f64..3.0, 4),
        ) {
            let total: f64 = weights.iter().sum();
            let mut rho = Operator::zeros(4);
            for k in 0..4 {
                let ket = random_ket(&re[4 * k..4 * k + 4], &im[4 * k..4 * k + 4]);
                rho = &rho + &Operator::projector(&ket).scaled(C64::new(weights[k] / total, 0.0));
            }
            let u = tensor(&random_unitary(&ua), &random_unitary(&ub));
            let rotated = u.matmul(&rho).matmul(&u.adjoint());
            let c0 = concurrence(&rho).unwrap();
            let c1 = concurrence(&rotated).unwrap();
            prop_assert!((0.0..=1.0).contains(&c0));
            prop_assert!((c0 - c1).abs() <= 1e-9);
            prop_assert!((c0 - wootters_oracle(&rho)).abs() <= 1e-6);
        }

        #[test]
        fn pure_state_negativity_tracks_atom_purity(
            re in proptest::collection::vec(-1.0f64..1.0, 12),
            im in proptest::collection::vec(-1.0f64..1.0, 12),
            product in proptest::bool::ANY,
        ) {
            let n = 3;
            let ket = if product {
                let a = random_ket(&re[..4], &im[..4]);
                let f = random_ket(&re[4..7], &im[4..7]);
                a.iter().flat_map(|x| f.iter().map(move |y| x * y)).collect()
            } else {
                random_ket(&re, &im)
            };
            let state = SystemState { rho: Operator::projector(&ket), n_max: n, time: 0.0 };
            let neg = negativity(&state, Cut::AtomsVsField).unwrap();
            let atoms = state.atoms();
            let purity = atoms.matmul(&atoms).trace().re;
            if product {
                prop_assert!(neg <= 1e-8);
                prop_assert!((1.0 - purity).abs() <= 1e-8);
            } else {
                // negativity of a pure state: ((Σ√p)² − 1)/2 over Schmidt weights
                let p = atoms.hermitian_eigenvalues().unwrap();
                let s: f64 = p.iter().filter(|&&x| x > 1e-12).map(|x| x.sqrt()).sum();
                prop_assert!((neg - (s * s - 1.0) / 2.0).abs() <= 1e-8, "neg {} vs {} from {:?}", neg, (s * s - 1.0) / 2.0, p);
            }
        }
    }

    #[test]
    fn negativity_examples() {
        let policy = TruncationPolicy::new(20, 2, 1e-8).unwrap();
        let field = scts_state(FieldParams::new(1.0, 0.3, 0.2), &policy).unwrap();
        let state = compose_initial(&bell_atoms(FRAC_PI_4), &field);
        for cut in [Cut::AtomsVsField, Cut::AtomAVsRest] {
            let n = negativity(&state, cut).unwrap();
            let expect = if cut == Cut::AtomAVsRest { 0.5 } else { 0.0 };
            assert!((n - expect).abs() < 1e-10, "{cut:?}: {n}");
        }
        let bell = bell_atoms(FRAC_PI_4).rho;
        assert!((negativity_bipartite(&bell, &[2, 2], &[0]).unwrap() - 0.5).abs() < 1e-12);
        assert!("atomA_vs_rest".parse::<Cut>().is_ok());
        assert!(matches!("field".parse::<Cut>(), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn negativity_local_unitary_invariance() {
        let policy = TruncationPolicy::new(10, 2, 1e-8).unwrap();
        let field = scts_state(FieldParams::new(1.0, 0.0, 0.0), &policy).unwrap();
        let h = crate::hamiltonian::build(&Default::default(), field.n_max()).unwrap();
        let rho0 = compose_initial(&bell_atoms(0.4), &field);
        let rho = crate::fock::evolve_unitary(&h, 1.3).unwrap();
        let rho = rho.matmul(&rho0.rho).matmul(&rho.adjoint());
        let base = SystemState { rho: rho.clone(), n_max: field.n_max(), time: 1.3 };
        let n0 = negativity(&base, Cut::AtomsVsField).unwrap();
        assert!(n0 > 1e-3);
        let ua = tensor(&random_unitary(&[0.3, -1.2, 0.7, 0.4]), &random_unitary(&[1.0, 0.1, -0.5, 0.9]));
        let uf = crate::fock::evolve_unitary(&crate::fock::number(field.n_max()).unwrap(), 0.77).unwrap();
        let u = tensor(&ua, &uf);
        let rotated = SystemState { rho: u.matmul(&rho).matmul(&u.adjoint()), ..base };
        assert!((negativity(&rotated, Cut::AtomsVsField).unwrap() - n0).abs() < 1e-9);
    }

    #[test]
    fn inversion_examples() {
        let field = fock_state(0, 3).unwrap();
        let mut ee = Operator::zeros(4);
        ee.set(0, 0, C64::new(1.0, 0.0));
        let excited = compose_initial(&crate::states::AtomPairState { rho: ee, kind: crate::states::AtomKind::Bell { theta: 0.0 } }, &field);
        assert!((atomic_inversion(&excited, Atom::A) - 1.0).abs() < 1e-15);
        assert!((atomic_inversion(&excited, Atom::B) - 1.0).abs() < 1e-15);
        let bell = compose_initial(&bell_atoms(FRAC_PI_4), &field);
        assert!(atomic_inversion(&bell, Atom::A).abs() < 1e-15);
        let werner = compose_initial(&werner_atoms(0.3).unwrap(), &field);
        assert!(atomic_inversion(&werner, Atom::B).abs() < 1e-15);
    }

    #[test]
    fn displacement_elements_match_matrix_exponential() {
        let policy = TruncationPolicy::new(12, 4, 1e-8).unwrap();
        let beta = C64::new(0.7, -0.4);
        let d = crate::fock::displacement(beta, &policy).unwrap();
        let e = displacement_elements(beta, 12);
        for n in 0..12 {
            for m in 0..12 {
                assert!((d.get(n, m) - e[n * 12 + m]).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn wigner_examples() {
        let origin = WignerSpec { x_range: (-0.1, 0.1), p_range: (-0.1, 0.1), nx: 3, np: 3 };
        let vac = wigner(&fock_state(0, 10).unwrap().rho, &origin).unwrap();
        assert!((vac.get(1, 1) - FRAC_2_PI).abs() < 1e-12);
        let one = wigner(&fock_state(1, 10).unwrap().rho, &origin).unwrap();
        assert!((one.get(1, 1) + FRAC_2_PI).abs() < 1e-12);
        // vacuum profile
        let a = C64::new(0.6, -0.3);
        let w = wigner_point(&fock_state(0, 10).unwrap().rho, a);
        assert!((w - FRAC_2_PI * (-2.0 * a.norm_sqr()).exp()).abs() < 1e-12);

        let grid = WignerSpec { x_range: (-2.0, 6.0), p_range: (-4.0, 4.0), nx: 81, np: 81 };
        let coh = scts_state(FieldParams::new(5.0, 0.0, 0.0), &TruncationPolicy::default()).unwrap();
        let wc = wigner(&coh.rho, &grid).unwrap();
        assert!(wc.min() >= -1e-8);
        assert!((wc.integral() - 1.0).abs() < 0.01);

        let th = thermal_state(1.0, &TruncationPolicy::default()).unwrap();
        let wide = WignerSpec { x_range: (-5.0, 5.0), p_range: (-5.0, 5.0), nx: 81, np: 81 };
        let wt = wigner(&th.rho, &wide).unwrap();
        assert!(wt.min() >= -1e-8);
        assert!((wt.integral() - 1.0).abs() < 0.01);

        let sq = scts_state(FieldParams::new(1.0, 1.0, 0.5), &TruncationPolicy::default()).unwrap();
        let ws = wigner(&sq.rho, &wide).unwrap();
        assert!((ws.integral() - 1.0).abs() < 0.01);
    }

    #[test]
    fn wigner_matches_characteristic_quadrature() {
        let policy = TruncationPolicy::new(40, 2, 1e-8).unwrap();
        let field = scts_state(FieldParams::new(1.0, 0.5, 0.2), &policy).unwrap();
        let coarse = WignerSpec { x_range: (-1.5, 2.5), p_range: (-2.0, 2.0), nx: 5, np: 5 };
        let direct = wigner(&field.rho, &coarse).unwrap();
        let points: Vec<C64> = (0..25).map(|k| C64::new(coarse.x(k / 5), coarse.p(k % 5))).collect();
        let quad = wigner_from_characteristic(&field.rho, &points, 12.0, 241);
        for (k, q) in quad.iter().enumerate() {
            assert!((direct.values[k] - q).abs() < 1e-3, "point {k}: {} vs {q}", direct.values[k]);
        }
    }

    #[test]
    fn esd_examples() {
        let t: Vec<f64> = (0..=10).map(|k| k as f64 * 0.5).collect();
        assert!(detect_esd(&t, &[0.5; 11], ESD_THRESHOLD).intervals.is_empty());
        let v: Vec<f64> = t.iter().map(|&x| if (2.0..=3.0).contains(&x) { 0.0 } else { 0.2 }).collect();
        assert_eq!(detect_esd(&t, &v, ESD_THRESHOLD).intervals, vec![(2.0, 3.0)]);
        let zero = detect_esd(&t, &[0.0; 11], ESD_THRESHOLD);
        assert_eq!(zero.intervals, vec![(0.0, 5.0)]);
        assert_eq!(zero.total_duration(), 5.0);
        // single-sample dips are discarded
        let mut spike = vec![0.3; 11];
        spike[4] = 0.0;
        assert!(detect_esd(&t, &spike, ESD_THRESHOLD).intervals.is_empty());
    }
}
