//! Hamiltonian for two identical two-level atoms sharing one field mode.
//!
//! Resonant form:
//!
//! ```text
//! H = ε(σ_z^A + σ_z^B) + ν a†a + λ Σ_{i=A,B} (a†σ₋^i + aσ₊^i)
//!     + J_z σ_z^A σ_z^B + g_d (σ₊^Aσ₋^B + σ₋^Aσ₊^B) + χ a†²a²
//! ```
//!
//! with `ε = ω/2` by default (see [`AtomicEnergy`]) and `χ = k·ω`.
//!
//! Detuned form:
//!
//! ```text
//! H' = Δ Σ_i σ₋^iσ₊^i + λ Σ_i (a†σ₋^i + aσ₊^i) + (J_z, g_d, Kerr terms)
//! ```
//!
//! where `σ₋σ₊ = |g⟩⟨g|`.

use crate::fock::{self, Operator};
use crate::{Error, Result, C64};

/// Coefficient on `σ_z` for each atom.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AtomicEnergy {
    /// `(ω/2) σ_z`: the atomic splitting is `ω`, so `Δ = ω − ν` is the
    /// actual detuning from the field.
    Half,
    /// `ω σ_z`: splitting `2ω`; resonance then needs `ν = 2ω`.
    Full,
}

impl AtomicEnergy {
    fn coefficient(self, omega: f64) -> f64 {
        match self {
            AtomicEnergy::Half => 0.5 * omega,
            AtomicEnergy::Full => omega,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    /// Atom-field coupling; sets the time unit.
    pub lambda: f64,
    /// Atomic transition frequency `ω`.
    pub omega: f64,
    /// Detuning `Δ = ω − ν`.
    pub delta: f64,
    /// Ising coupling `J_z`.
    pub jz: f64,
    /// Dipole-dipole coupling `g_d`.
    pub gd: f64,
    /// Dimensionless Kerr strength `k`, `χ = k·ω`.
    pub kerr_k: f64,
    /// Use the detuned effective Hamiltonian instead of the bare energies.
    pub detuned_form: bool,
    pub atomic_energy: AtomicEnergy,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            omega: 10.0,
            delta: 0.0,
            jz: 0.0,
            gd: 0.0,
            kerr_k: 0.0,
            detuned_form: false,
            atomic_energy: AtomicEnergy::Half,
        }
    }
}

impl ModelSpec {
    /// Field frequency `ν = ω − Δ`.
    pub fn nu(&self) -> f64 {
        self.omega - self.delta
    }

    /// Kerr coefficient `χ = k·ω`.
    pub fn chi(&self) -> f64 {
        self.kerr_k * self.omega
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.lambda, self.omega, self.delta, self.jz, self.gd, self.kerr_k]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParameter("model parameters must be finite".into()));
        }
        if !(self.lambda > 0.0) {
            return Err(Error::InvalidParameter(format!("lambda must be positive, got {}", self.lambda)));
        }
        if self.kerr_k < 0.0 {
            return Err(Error::InvalidParameter(format!("kerr_k must be non-negative, got {}", self.kerr_k)));
        }
        Ok(())
    }
}

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Single-qubit operators in the `(|e⟩, |g⟩)` basis.
pub mod qubit {
    use super::*;

    pub fn sigma_z() -> Operator {
        Operator::diagonal(&[c(1.0), c(-1.0)])
    }

    /// `σ₊ = |e⟩⟨g|`.
    pub fn sigma_plus() -> Operator {
        let mut s = Operator::zeros(2);
        s.set(0, 1, c(1.0));
        s
    }

    /// `σ₋ = |g⟩⟨e|`.
    pub fn sigma_minus() -> Operator {
        let mut s = Operator::zeros(2);
        s.set(1, 0, c(1.0));
        s
    }

    /// `σ₊σ₋ = |e⟩⟨e|`.
    pub fn excited_projector() -> Operator {
        Operator::diagonal(&[c(1.0), c(0.0)])
    }

    /// `σ₋σ₊ = |g⟩⟨g|`.
    pub fn ground_projector() -> Operator {
        Operator::diagonal(&[c(0.0), c(1.0)])
    }
}

/// `qa ⊗ qb ⊗ f` on the composite space.
pub fn embed(qa: &Operator, qb: &Operator, f: &Operator) -> Operator {
    fock::tensor_all(&[qa, qb, f])
}

/// `λ_A (a†σ₋^A + aσ₊^A) + λ_B (a†σ₋^B + aσ₊^B)` on `A ⊗ B ⊗ field`.
pub fn jc_interaction(n_max: usize, lambda_a: f64, lambda_b: f64) -> Result<Operator> {
    let a = fock::annihilation(n_max)?;
    let ad = a.adjoint();
    let id2 = Operator::identity(2);
    let (sp, sm) = (qubit::sigma_plus(), qubit::sigma_minus());
    let atom_a = &embed(&sm, &id2, &ad) + &embed(&sp, &id2, &a);
    let atom_b = &embed(&id2, &sm, &ad) + &embed(&id2, &sp, &a);
    Ok(&atom_a.scaled(c(lambda_a)) + &atom_b.scaled(c(lambda_b)))
}

/// Ising, dipole-dipole and Kerr terms.
fn interaction_extras(spec: &ModelSpec, n_max: usize) -> Result<Operator> {
    let id2 = Operator::identity(2);
    let idf = Operator::identity(n_max);
    let mut h = Operator::zeros(4 * n_max);
    if spec.jz != 0.0 {
        let sz = qubit::sigma_z();
        h = &h + &embed(&sz, &sz, &idf).scaled(c(spec.jz));
    }
    if spec.gd != 0.0 {
        let (sp, sm) = (qubit::sigma_plus(), qubit::sigma_minus());
        let hop = &embed(&sp, &sm, &idf) + &embed(&sm, &sp, &idf);
        h = &h + &hop.scaled(c(spec.gd));
    }
    let chi = spec.chi();
    if chi != 0.0 {
        let kerr: Vec<C64> = (0..n_max).map(|n| c(chi * (n * n.saturating_sub(1)) as f64)).collect();
        h = &h + &embed(&id2, &id2, &Operator::diagonal(&kerr));
    }
    Ok(h)
}

/// Full Hamiltonian on `A ⊗ B ⊗ field` with `n_max` Fock levels.
/// Dispatches to [`build_detuned`] when `spec.detuned_form` is set.
pub fn build(spec: &ModelSpec, n_max: usize) -> Result<Operator> {
    spec.validate()?;
    if spec.detuned_form {
        return build_detuned(spec, n_max);
    }
    let id2 = Operator::identity(2);
    let sz = qubit::sigma_z();
    let eps = spec.atomic_energy.coefficient(spec.omega);
    let bare_atoms = &embed(&sz, &id2, &Operator::identity(n_max)) + &embed(&id2, &sz, &Operator::identity(n_max));
    let bare_field = embed(&id2, &id2, &fock::number(n_max)?);
    let h = &bare_atoms.scaled(c(eps)) + &bare_field.scaled(c(spec.nu()));
    let h = &h + &jc_interaction(n_max, spec.lambda, spec.lambda)?;
    Ok(&h + &interaction_extras(spec, n_max)?)
}

/// Detuned effective Hamiltonian `Δ Σ σ₋σ₊ + λ Σ (a†σ₋ + aσ₊)`, plus the
/// Ising, dipole and Kerr terms when nonzero.
pub fn build_detuned(spec: &ModelSpec, n_max: usize) -> Result<Operator> {
    spec.validate()?;
    let id2 = Operator::identity(2);
    let idf = Operator::identity(n_max);
    let pg = qubit::ground_projector();
    let ground = &embed(&pg, &id2, &idf) + &embed(&id2, &pg, &idf);
    let h = &ground.scaled(c(spec.delta)) + &jc_interaction(n_max, spec.lambda, spec.lambda)?;
    Ok(&h + &interaction_extras(spec, n_max)?)
}

/// Total excitation number `a†a + σ₊σ₋^A + σ₊σ₋^B`.
pub fn excitation_number(n_max: usize) -> Result<Operator> {
    let id2 = Operator::identity(2);
    let idf = Operator::identity(n_max);
    let pe = qubit::excited_projector();
    let atoms = &embed(&pe, &id2, &idf) + &embed(&id2, &pe, &idf);
    Ok(&atoms + &embed(&id2, &id2, &fock::number(n_max)?))
}

/// Swap of the two qubit factors, as an operator on the composite space.
pub fn atom_swap(n_max: usize) -> Operator {
    let mut swap = Operator::zeros(4);
    for a in 0..2 {
        for b in 0..2 {
            swap.set(2 * b + a, 2 * a + b, c(1.0));
        }
    }
    fock::tensor(&swap, &Operator::identity(n_max))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn commutator_norm(a: &Operator, b: &Operator) -> f64 {
        (&a.matmul(b) - &b.matmul(a)).max_abs()
    }

    #[test]
    fn zero_model_is_zero() {
        let spec = ModelSpec { lambda: 1.0, omega: 0.0, ..ModelSpec::default() };
        let h = build(&spec, 6).unwrap();
        let inter = jc_interaction(6, 1.0, 1.0).unwrap();
        assert!((&h - &inter).max_abs() == 0.0);
        assert!(jc_interaction(6, 0.0, 0.0).unwrap().max_abs() == 0.0);
    }

    #[test]
    fn rotating_wave_conserves_excitations() {
        let spec = ModelSpec { omega: 0.0, ..ModelSpec::default() };
        let n = 12;
        let h = build(&spec, n).unwrap();
        let nex = excitation_number(n).unwrap();
        assert!(commutator_norm(&h, &nex) <= 1e-12);
        let full = ModelSpec { jz: 0.7, gd: 1.3, kerr_k: 0.3, delta: 2.0, ..ModelSpec::default() };
        assert!(commutator_norm(&build(&full, n).unwrap(), &nex) <= 1e-10);
    }

    #[test]
    fn kerr_block_entries() {
        let spec = ModelSpec { lambda: 1.0, omega: 2.0, kerr_k: 0.5, ..ModelSpec::default() };
        let n = 8;
        let chi = spec.chi();
        let without = build(&ModelSpec { kerr_k: 0.0, ..spec.clone() }, n).unwrap();
        let with = build(&spec, n).unwrap();
        let diff = &with - &without;
        for k in 0..n {
            // |g g k⟩ sits at index 3·n + k
            let idx = 3 * n + k;
            assert!((diff.get(idx, idx).re - chi * (k * k.saturating_sub(1)) as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn detuned_examples() {
        let n = 6;
        let plain = build_detuned(&ModelSpec { delta: 0.0, detuned_form: true, ..ModelSpec::default() }, n).unwrap();
        assert!((&plain - &jc_interaction(n, 1.0, 1.0).unwrap()).max_abs() == 0.0);

        let spec = ModelSpec { delta: 2.0, lambda: 1.0, detuned_form: true, ..ModelSpec::default() };
        let h = build(&spec, n).unwrap();
        let inter = jc_interaction(n, 1.0, 1.0).unwrap();
        let diag = &h - &inter;
        for a in 0..2 {
            for b in 0..2 {
                for k in 0..n {
                    let idx = (2 * a + b) * n + k;
                    let expect = 2.0 * (a + b) as f64;
                    assert!((diag.get(idx, idx).re - expect).abs() < 1e-15);
                }
            }
        }
        for d in [2.0, 5.0, 10.0] {
            let h = build(&ModelSpec { delta: d, detuned_form: true, ..ModelSpec::default() }, 10).unwrap();
            assert!(h.hermiticity_error() <= 1e-12);
        }
    }

    #[test]
    fn swap_symmetry_and_hermiticity() {
        let n = 10;
        let swap = atom_swap(n);
        for spec in [
            ModelSpec::default(),
            ModelSpec { jz: 0.3, gd: 5.0, kerr_k: 0.7, ..ModelSpec::default() },
            ModelSpec { delta: 5.0, detuned_form: true, jz: 1.0, ..ModelSpec::default() },
        ] {
            let h = build(&spec, n).unwrap();
            assert!(h.hermiticity_error() <= 1e-12);
            let swapped = swap.matmul(&h).matmul(&swap);
            assert!(swapped.max_abs_diff(&h) <= 1e-12);
        }
    }

    #[test]
    fn resonance_with_half_convention() {
        // |e g n⟩ and |g g n+1⟩ are degenerate when Δ = 0
        let n = 5;
        let spec = ModelSpec { lambda: 1.0, ..ModelSpec::default() };
        let h = build(&spec, n).unwrap();
        let eg = |k: usize| n + k;
        let gg = |k: usize| 3 * n + k;
        for k in 0..n - 1 {
            assert!((h.get(eg(k), eg(k)) - h.get(gg(k + 1), gg(k + 1))).norm() < 1e-12);
        }
        let full = build(&ModelSpec { atomic_energy: AtomicEnergy::Full, ..spec }, n).unwrap();
        assert!((full.get(eg(0), eg(0)) - full.get(gg(1), gg(1))).norm() > 1.0);
    }

    #[test]
    fn invalid_specs() {
        assert!(build(&ModelSpec { lambda: 0.0, ..ModelSpec::default() }, 4).is_err());
        assert!(build(&ModelSpec { kerr_k: -0.1, ..ModelSpec::default() }, 4).is_err());
    }
}
