//! Field and atomic state constructors.
//!
//! The field is a squeezed coherent thermal state (SCTS)
//! `ρ = D(α) S(ζ) ρ_th S†(ζ) D†(α)`, parametrized by mean photon numbers:
//! `n̄_c = |α|²`, `n̄_s = sinh²r` and the thermal occupation `n̄_th`.
//! The analytic photon-count distribution [`pcd_analytic`] is an
//! independent route to the diagonal of the matrix built by [`scts_state`].

use std::f64::consts::FRAC_1_SQRT_2;

use faer::Mat;

use crate::fock::{self, Operator, TruncationPolicy};
use crate::{Error, Result, C64};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Physical parameters of a squeezed coherent thermal field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldParams {
    pub nbar_c: f64,
    pub nbar_s: f64,
    pub nbar_th: f64,
    /// Squeezing phase `φ` of `ζ = r e^{iφ}`.
    pub phi: f64,
    /// Phase of the coherent amplitude `α`.
    pub alpha_phase: f64,
}

impl Default for FieldParams {
    fn default() -> Self {
        Self { nbar_c: 0.0, nbar_s: 0.0, nbar_th: 0.0, phi: 0.0, alpha_phase: 0.0 }
    }
}

impl FieldParams {
    pub fn new(nbar_c: f64, nbar_s: f64, nbar_th: f64) -> Self {
        Self { nbar_c, nbar_s, nbar_th, ..Self::default() }
    }

    pub fn with_phi(mut self, phi: f64) -> Self {
        self.phi = phi;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("nbar_c", self.nbar_c), ("nbar_s", self.nbar_s), ("nbar_th", self.nbar_th)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if !self.phi.is_finite() || !self.alpha_phase.is_finite() {
            return Err(Error::InvalidParameter("phases must be finite".into()));
        }
        Ok(())
    }

    pub fn alpha(&self) -> C64 {
        C64::from_polar(self.nbar_c.sqrt(), self.alpha_phase)
    }

    /// Squeezing amplitude `r = arcsinh(√n̄_s)`.
    pub fn squeeze_r(&self) -> f64 {
        self.nbar_s.sqrt().asinh()
    }

    pub fn zeta(&self) -> C64 {
        C64::from_polar(self.squeeze_r(), self.phi)
    }

    /// `⟨a†a⟩ = n̄_c + n̄_s + n̄_th + 2 n̄_th n̄_s`.
    pub fn mean_photon_number(&self) -> f64 {
        self.nbar_c + self.nbar_s + self.nbar_th + 2.0 * self.nbar_th * self.nbar_s
    }
}

/// Field density matrix on a truncated Fock space.
#[derive(Clone, Debug)]
pub struct FieldState {
    pub rho: Operator,
    /// Policy actually used (after any `n_max` escalation).
    pub policy: TruncationPolicy,
    pub params: FieldParams,
    /// Probability mass that fell outside the retained levels before renormalization.
    pub tail_mass: f64,
}

impl FieldState {
    pub fn n_max(&self) -> usize {
        self.policy.n_max
    }

    pub fn photon_distribution(&self) -> Vec<f64> {
        self.rho.diagonal_entries().iter().map(|z| z.re).collect()
    }

    pub fn mean_photon_number(&self) -> f64 {
        self.photon_distribution()
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum()
    }

    pub fn purity(&self) -> f64 {
        self.rho.expectation(&self.rho).re
    }
}

fn thermal_weights(nbar_th: f64, dim: usize) -> Vec<f64> {
    if nbar_th == 0.0 {
        let mut w = vec![0.0; dim];
        w[0] = 1.0;
        return w;
    }
    let q = nbar_th / (1.0 + nbar_th);
    let mut w = Vec::with_capacity(dim);
    let mut p = 1.0 / (1.0 + nbar_th);
    for _ in 0..dim {
        w.push(p);
        p *= q;
    }
    w
}

fn renormalized(rho: Operator) -> Operator {
    let tr = rho.trace().re;
    rho.scaled(C64::new(1.0 / tr, 0.0))
}

fn truncation_failure(what: &str, tail: f64, policy: &TruncationPolicy) -> Error {
    Error::Truncation(format!(
        "{what}: tail mass {tail:e} exceeds tail_tol {:e} even at n_max = {}",
        policy.tail_tol,
        fock::MAX_LEVELS.max(policy.n_max)
    ))
}

/// Thermal state `ρ_th` with Bose-Einstein occupation `n̄_th`.
pub fn thermal_state(nbar_th: f64, policy: &TruncationPolicy) -> Result<FieldState> {
    policy.validate()?;
    let params = FieldParams::new(0.0, 0.0, nbar_th);
    params.validate()?;
    let q = nbar_th / (1.0 + nbar_th);
    let mut tail = 1.0;
    for p in policy.escalation() {
        tail = q.powi(p.n_max as i32);
        if tail <= p.tail_tol {
            let w = thermal_weights(nbar_th, p.n_max);
            let diag: Vec<C64> = w.iter().map(|&x| C64::new(x, 0.0)).collect();
            let rho = renormalized(Operator::diagonal(&diag));
            return Ok(FieldState { rho, policy: p, params, tail_mass: tail });
        }
    }
    Err(truncation_failure("thermal state", tail, policy))
}

/// `D(α) S(ζ) ρ_th S†(ζ) D†(α)` on the padded workspace (unnormalized, uncropped).
fn scts_padded(params: &FieldParams, policy: &TruncationPolicy) -> Result<Operator> {
    let dim = policy.padded_dim();
    let weights: Vec<C64> = thermal_weights(params.nbar_th, dim)
        .into_iter()
        .map(|w| C64::new(w, 0.0))
        .collect();
    let mut rho = Operator::diagonal(&weights);
    if params.nbar_s > 0.0 {
        let s = fock::squeeze_padded(params.zeta(), policy)?;
        rho = s.matmul(&rho).matmul(&s.adjoint());
    }
    if params.nbar_c > 0.0 {
        let d = fock::displacement_padded(params.alpha(), policy)?;
        rho = d.matmul(&rho).matmul(&d.adjoint());
    }
    Ok(rho)
}

/// Squeezed coherent thermal state. `n_max` is raised in steps of
/// [`fock::ESCALATION_STEP`] until the mass outside the retained block is at
/// most `tail_tol`; the retained block is then renormalized.
pub fn scts_state(params: FieldParams, policy: &TruncationPolicy) -> Result<FieldState> {
    policy.validate()?;
    params.validate()?;
    let mut tail = 1.0;
    for p in policy.escalation() {
        if fock::displacement_at_risk(params.alpha(), p.n_max) || fock::squeeze_at_risk(params.zeta(), p.n_max) {
            continue;
        }
        let cropped = scts_padded(&params, &p)?.crop(p.n_max);
        tail = (1.0 - cropped.trace().re).max(0.0);
        if tail <= p.tail_tol {
            return Ok(FieldState { rho: renormalized(cropped), policy: p, params, tail_mass: tail });
        }
    }
    Err(truncation_failure("squeezed coherent thermal state", tail, policy))
}

/// Fock amplitudes `c_n` of the pure state `D(α) S(ζ) |0⟩`. Only defined for
/// `n̄_th = 0`. Returns the coefficients (normalized over the retained
/// levels) and the policy used.
pub fn pure_field_coefficients(params: FieldParams, policy: &TruncationPolicy) -> Result<(Vec<C64>, TruncationPolicy)> {
    policy.validate()?;
    params.validate()?;
    if params.nbar_th != 0.0 {
        return Err(Error::InvalidParameter("pure field coefficients require nbar_th = 0".into()));
    }
    let mut tail = 1.0;
    for p in policy.escalation() {
        let dim = p.padded_dim();
        let mut ket = vec![ZERO; dim];
        ket[0] = C64::new(1.0, 0.0);
        if params.nbar_s > 0.0 {
            ket = apply(&fock::squeeze_padded(params.zeta(), &p)?, &ket);
        }
        if params.nbar_c > 0.0 {
            ket = apply(&fock::displacement_padded(params.alpha(), &p)?, &ket);
        }
        ket.truncate(p.n_max);
        let norm2: f64 = ket.iter().map(|z| z.norm_sqr()).sum();
        tail = (1.0 - norm2).max(0.0);
        if tail <= p.tail_tol {
            let s = 1.0 / norm2.sqrt();
            return Ok((ket.into_iter().map(|z| z * s).collect(), p));
        }
    }
    Err(truncation_failure("pure field", tail, policy))
}

fn apply(op: &Operator, ket: &[C64]) -> Vec<C64> {
    (0..op.dim())
        .map(|i| (0..op.dim()).map(|j| op.get(i, j) * ket[j]).sum())
        .collect()
}

/// Physicists' Hermite polynomial `H_q(x)` of a complex argument. Uses the
/// explicit finite sum for `q ≤ 20` and the three-term recurrence above.
pub fn hermite(q: usize, x: C64) -> C64 {
    if q <= 20 {
        let qf = factorial(q);
        (0..=q / 2)
            .map(|j| {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                let coeff = sign * qf / (factorial(j) * factorial(q - 2 * j));
                (2.0 * x).powu((q - 2 * j) as u32) * coeff
            })
            .sum()
    } else {
        let (mut h0, mut h1) = (C64::new(1.0, 0.0), 2.0 * x);
        for k in 1..q {
            let h2 = 2.0 * x * h1 - 2.0 * k as f64 * h0;
            h0 = h1;
            h1 = h2;
        }
        h1
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Which argument goes into the Hermite polynomial of the photon-count sum.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HermiteArgument {
    /// `(2Ỹ)^{-1/2} Z̃`.
    Tilde,
    /// `(2Y)^{-1/2} Z̃`, the literal mixed reading.
    Plain,
}

/// Sign of the anomalous moment `Y` entering the photon-count formula.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AnomalousSign {
    /// `Y = (2n̄_th+1) e^{iφ} sinh r cosh r`; consistent with
    /// `S(ζ) = exp(−½ζa†² + ½ζ*a²)` as used by [`scts_state`].
    MatchSqueezeOperator,
    /// `Y = −(2n̄_th+1) e^{iφ} sinh r cosh r`, which corresponds to the
    /// opposite squeezing-phase convention.
    Negated,
}

/// Interpretation switches for [`pcd_analytic_with`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PcdReading {
    pub hermite_argument: HermiteArgument,
    pub anomalous_sign: AnomalousSign,
}

impl Default for PcdReading {
    fn default() -> Self {
        Self { hermite_argument: HermiteArgument::Tilde, anomalous_sign: AnomalousSign::MatchSqueezeOperator }
    }
}

/// Moments entering the analytic photon-count distribution.
#[derive(Clone, Copy, Debug)]
pub struct PcdMoments {
    pub x: f64,
    pub y: C64,
    pub z: C64,
    pub x_tilde: f64,
    pub y_tilde: C64,
    pub z_tilde: C64,
    /// `(1+X)² − |Y|²`.
    pub denominator: f64,
    /// `πQ(0) = R(0,0)`.
    pub r00: f64,
}

impl PcdMoments {
    pub fn new(params: &FieldParams, sign: AnomalousSign) -> Self {
        let r = params.squeeze_r();
        let nth = params.nbar_th;
        let x = nth + (2.0 * nth + 1.0) * r.sinh().powi(2);
        let y_mag = (2.0 * nth + 1.0) * r.sinh() * r.cosh();
        let y = match sign {
            AnomalousSign::MatchSqueezeOperator => C64::from_polar(y_mag, params.phi),
            AnomalousSign::Negated => -C64::from_polar(y_mag, params.phi),
        };
        let z = params.alpha();
        let denominator = (1.0 + x).powi(2) - y.norm_sqr();
        let x_tilde = (x * (1.0 + x) - y.norm_sqr()) / denominator;
        let y_tilde = y / denominator;
        let z_tilde = ((1.0 + x) * z + y * z.conj()) / denominator;
        let exponent = ((1.0 + x) * z.norm_sqr() + 0.5 * (y * z.conj().powi(2) + y.conj() * z.powi(2)).re) / denominator;
        let r00 = denominator.powf(-0.5) * (-exponent).exp();
        Self { x, y, z, x_tilde: x_tilde.max(0.0), y_tilde, z_tilde, denominator, r00 }
    }
}

/// Analytic photon-count distribution `P(l) = ⟨l|ρ_SCT|l⟩` with the default
/// reading (see [`PcdReading`]).
pub fn pcd_analytic(l: usize, params: &FieldParams) -> Result<f64> {
    pcd_analytic_with(l, params, PcdReading::default())
}

/// `P(l) = πQ(0) X̃^l Σ_q (1/q!) binom(l,q) |Ỹ/(2X̃)|^q |H_q(w)|²`.
///
/// The Hermite factor is evaluated through the scaled polynomial
/// `h_q = u^q H_q(Z̃/u) / (2^q √q!)` with `u² = 2Ỹ` (or `2Y`), which obeys
/// `h_{q+1} = (Z̃ h_q − (u²/2) √q h_{q−1}) / √(q+1)`. This stays finite as
/// `Ỹ → 0` and `X̃ → 0` (coherent and pure limits) and avoids factorial
/// overflow for large `l`.
pub fn pcd_analytic_with(l: usize, params: &FieldParams, reading: PcdReading) -> Result<f64> {
    params.validate()?;
    let m = PcdMoments::new(params, reading.anomalous_sign);
    let (half_u2, extra) = match reading.hermite_argument {
        HermiteArgument::Tilde => (m.y_tilde, 1.0),
        // |Ỹ|^q / |Y|^q = denominator^{-q}
        HermiteArgument::Plain => (m.y, 1.0 / m.denominator),
    };
    let mut sum = 0.0;
    let mut h_prev = ZERO;
    let mut h = C64::new(1.0, 0.0);
    let mut binom = 1.0;
    for q in 0..=l {
        if q > 0 {
            let next = (m.z_tilde * h - half_u2 * (q as f64 - 1.0).sqrt() * h_prev) / (q as f64).sqrt();
            h_prev = h;
            h = next;
            binom *= (l - q + 1) as f64 / q as f64;
        }
        let term = binom * m.x_tilde.powi((l - q) as i32) * extra.powi(q as i32) * h.norm_sqr();
        sum += term;
    }
    let p = m.r00 * sum;
    if !p.is_finite() {
        return Err(Error::Overflow(format!("photon-count sum overflowed at l = {l}")));
    }
    Ok(p)
}

/// Initial two-atom state tag.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AtomKind {
    Bell { theta: f64 },
    Werner { eta: f64 },
}

/// Two-atom density matrix in basis order `(|ee⟩, |eg⟩, |ge⟩, |gg⟩)`.
#[derive(Clone, Debug)]
pub struct AtomPairState {
    pub rho: Operator,
    pub kind: AtomKind,
}

/// Basis index of `|a b⟩` with `e = 0`, `g = 1`.
pub const EE: usize = 0;
pub const EG: usize = 1;
pub const GE: usize = 2;
pub const GG: usize = 3;

/// Pure state `cos θ |e_A g_B⟩ + sin θ |g_A e_B⟩`.
pub fn bell_atoms(theta: f64) -> AtomPairState {
    let mut ket = [ZERO; 4];
    ket[EG] = C64::new(theta.cos(), 0.0);
    ket[GE] = C64::new(theta.sin(), 0.0);
    AtomPairState { rho: Operator::projector(&ket), kind: AtomKind::Bell { theta } }
}

/// Werner state `(1−η) I/4 + η |ψ⁻⟩⟨ψ⁻|`, `|ψ⁻⟩ = (|ge⟩ − |eg⟩)/√2`.
pub fn werner_atoms(eta: f64) -> Result<AtomPairState> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidParameter(format!("Werner mixing parameter must lie in [0, 1], got {eta}")));
    }
    let mut singlet = [ZERO; 4];
    singlet[GE] = C64::new(FRAC_1_SQRT_2, 0.0);
    singlet[EG] = C64::new(-FRAC_1_SQRT_2, 0.0);
    let mixed = Operator::identity(4).scaled(C64::new((1.0 - eta) / 4.0, 0.0));
    let rho = &mixed + &Operator::projector(&singlet).scaled(C64::new(eta, 0.0));
    Ok(AtomPairState { rho, kind: AtomKind::Werner { eta } })
}

/// `ρ_AB ⊗ ρ_F` on the `A ⊗ B ⊗ field` space.
pub fn compose_initial(atoms: &AtomPairState, field: &FieldState) -> crate::evolve::SystemState {
    crate::evolve::SystemState {
        rho: fock::tensor(&atoms.rho, &field.rho),
        n_max: field.n_max(),
        time: 0.0,
    }
}

/// Field state from an explicit density matrix (used for reduced states).
pub fn field_from_density(rho: Operator) -> FieldState {
    let n = rho.dim();
    FieldState {
        rho,
        policy: TruncationPolicy { n_max: n, ..TruncationPolicy::default() },
        params: FieldParams::default(),
        tail_mass: 0.0,
    }
}

/// Fock projector `|n⟩⟨n|` on `dim` levels.
pub fn fock_state(n: usize, dim: usize) -> Result<FieldState> {
    if n >= dim {
        return Err(Error::InvalidParameter(format!("Fock level {n} outside {dim} retained levels")));
    }
    let mut m = Mat::<C64>::zeros(dim, dim);
    m[(n, n)] = C64::new(1.0, 0.0);
    Ok(field_from_density(Operator::new(m)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn poisson(mean: f64, n: usize) -> f64 {
        (0..n).fold((-mean).exp(), |p, k| p * mean / (k + 1) as f64)
    }

    #[test]
    fn thermal_examples() {
        let p = TruncationPolicy::default();
        let vac = thermal_state(0.0, &p).unwrap();
        assert_eq!(vac.rho.get(0, 0).re, 1.0);
        assert!(vac.rho.get(1, 1).re == 0.0);
        let th = thermal_state(1.0, &p).unwrap();
        assert_abs_diff_eq!(th.rho.get(0, 0).re, 0.5, epsilon = 1e-8);
        assert_abs_diff_eq!(th.rho.get(1, 1).re, 0.25, epsilon = 1e-8);
        for nbar in [0.3, 1.0, 2.5] {
            let th = thermal_state(nbar, &p).unwrap();
            assert_abs_diff_eq!(th.mean_photon_number(), nbar, epsilon = 1e-6);
        }
    }

    #[test]
    fn thermal_escalates_then_fails() {
        let p = TruncationPolicy::default();
        let hot = thermal_state(8.0, &p).unwrap();
        assert!(hot.n_max() > 80);
        assert!(hot.tail_mass <= p.tail_tol);
        assert!(matches!(thermal_state(200.0, &p), Err(Error::Truncation(_))));
        assert!(matches!(thermal_state(-1.0, &p), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn coherent_scts_is_poisson() {
        let p = TruncationPolicy::default();
        let st = scts_state(FieldParams::new(5.0, 0.0, 0.0), &p).unwrap();
        for n in 0..p.n_max {
            assert!((st.rho.get(n, n).re - poisson(5.0, n)).abs() <= 1e-8);
        }
        let (c, _) = pure_field_coefficients(FieldParams::new(5.0, 0.0, 0.0), &p).unwrap();
        assert!(st.rho.max_abs_diff(&Operator::projector(&c)) <= 1e-8);
    }

    #[test]
    fn scts_thermal_limit() {
        let p = TruncationPolicy::default();
        let a = scts_state(FieldParams::new(0.0, 0.0, 1.0), &p).unwrap();
        let b = thermal_state(1.0, &p).unwrap();
        assert!(a.rho.max_abs_diff(&b.rho) < 1e-12);
    }

    #[test]
    fn scts_purity_and_mean() {
        let p = TruncationPolicy::default();
        let params = FieldParams::new(5.0, 1.0, 1.0);
        let st = scts_state(params, &p).unwrap();
        assert_abs_diff_eq!(st.purity(), 1.0 / 3.0, epsilon = 1e-6);
        assert_abs_diff_eq!(st.mean_photon_number(), params.mean_photon_number(), epsilon = 1e-4);
        assert!(st.rho.hermiticity_error() < 1e-10);
        assert_abs_diff_eq!(st.rho.trace().re, 1.0, epsilon = 1e-12);
        let min = st.rho.hermitian_eigenvalues().unwrap()[0];
        assert!(min >= -1e-10);
    }

    #[test]
    fn hermite_examples() {
        let x = C64::new(0.3, -1.7);
        assert_eq!(hermite(0, x), C64::new(1.0, 0.0));
        assert_eq!(hermite(1, C64::new(2.0, 1.0)), C64::new(4.0, 2.0));
        assert_eq!(hermite(2, C64::new(1.0, 0.0)), C64::new(2.0, 0.0));
        // sum and recurrence agree where both are used
        let y = C64::new(0.4, 0.2);
        let (mut h0, mut h1) = (C64::new(1.0, 0.0), 2.0 * y);
        for k in 1..20 {
            let h2 = 2.0 * y * h1 - 2.0 * k as f64 * h0;
            h0 = h1;
            h1 = h2;
        }
        let direct = hermite(20, y);
        assert!((h1 - direct).norm() <= 1e-9 * direct.norm());
        let h21 = hermite(21, y);
        assert!((h21 - (2.0 * y * direct - 40.0 * hermite(19, y))).norm() <= 1e-9 * h21.norm());
    }

    #[test]
    fn pcd_limits() {
        let p0 = pcd_analytic(0, &FieldParams::new(5.0, 0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(p0, (-5.0f64).exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(p0, 6.7379e-3, epsilon = 1e-7);
        for l in [1, 3, 7] {
            let p = pcd_analytic(l, &FieldParams::new(0.0, 0.8, 0.0)).unwrap();
            assert!(p.abs() < 1e-15);
        }
    }

    #[test]
    fn pcd_matches_matrix_diagonal() {
        let policy = TruncationPolicy::new(120, 2, 1e-8).unwrap();
        let params = FieldParams::new(5.0, 1.0, 1.0);
        let st = scts_state(params, &policy).unwrap();
        for l in 0..=40 {
            let p = pcd_analytic(l, &params).unwrap();
            assert!((p - st.rho.get(l, l).re).abs() <= 1e-6, "l = {l}");
        }
    }

    #[test]
    fn pcd_alternative_readings_disagree_with_matrix() {
        let policy = TruncationPolicy::new(80, 2, 1e-8).unwrap();
        let params = FieldParams::new(2.0, 1.0, 0.0);
        let st = scts_state(params, &policy).unwrap();
        let worst = |reading: PcdReading| {
            (0..30)
                .map(|l| match pcd_analytic_with(l, &params, reading) {
                    Ok(p) => (p - st.rho.get(l, l).re).abs(),
                    Err(_) => f64::INFINITY,
                })
                .fold(0.0f64, f64::max)
        };
        assert!(worst(PcdReading::default()) < 1e-8);
        for reading in [
            PcdReading { hermite_argument: HermiteArgument::Plain, anomalous_sign: AnomalousSign::MatchSqueezeOperator },
            PcdReading { hermite_argument: HermiteArgument::Tilde, anomalous_sign: AnomalousSign::Negated },
        ] {
            assert!(worst(reading) > 1e-3, "{reading:?}");
        }
    }

    #[test]
    fn bell_examples() {
        let b = bell_atoms(0.0);
        assert_eq!(b.rho.get(EG, EG).re, 1.0);
        let b = bell_atoms(FRAC_PI_2);
        assert_abs_diff_eq!(b.rho.get(GE, GE).re, 1.0, epsilon = 1e-15);
        let b = bell_atoms(FRAC_PI_4);
        assert_abs_diff_eq!(b.rho.get(EG, GE).re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(b.rho.trace().re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn werner_examples() {
        let w = werner_atoms(0.0).unwrap();
        assert!(w.rho.max_abs_diff(&Operator::identity(4).scaled(C64::new(0.25, 0.0))) < 1e-15);
        let w = werner_atoms(1.0).unwrap();
        assert_abs_diff_eq!(w.rho.get(EG, GE).re, -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(w.rho.get(EG, EG).re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(w.rho.expectation(&w.rho).re, 1.0, epsilon = 1e-15);
        assert!(werner_atoms(1.2).is_err());
        assert!(werner_atoms(-0.1).is_err());
    }

    #[test]
    fn compose_initial_is_product() {
        let policy = TruncationPolicy::new(30, 2, 1e-8).unwrap();
        let field = scts_state(FieldParams::new(2.0, 0.0, 0.0), &policy).unwrap();
        let sys = compose_initial(&bell_atoms(FRAC_PI_4), &field);
        assert_eq!(sys.rho.dim(), 4 * field.n_max());
        assert_abs_diff_eq!(sys.rho.trace().re, 1.0, epsilon = 1e-8);
        let back = fock::partial_trace(&sys.rho, &[2, 2, field.n_max()], &[2]).unwrap();
        assert!(back.max_abs_diff(&field.rho) < 1e-12);
    }

    #[test]
    fn squeezing_phase_pi_changes_distribution_consistently() {
        let policy = TruncationPolicy::new(60, 2, 1e-8).unwrap();
        let params = FieldParams::new(2.0, 1.0, 0.0).with_phi(PI);
        let st = scts_state(params, &policy).unwrap();
        for l in 0..20 {
            assert!((pcd_analytic(l, &params).unwrap() - st.rho.get(l, l).re).abs() < 1e-8);
        }
    }
}
