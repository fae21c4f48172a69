//! GNS-doubled finite systems and the repeated interaction generators.
//!
//! A vector of `C^d ⊗ C^d` is identified with the `d×d` matrix of its
//! coefficients, so the left factor carries the physical observables and the
//! reference vector `Ω` is the square root of the Gibbs density.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_hermitian, Error, Result};
use crate::numerics::{eigh, expm, kron, kron_vec, vec_norm, ComplexMatrix, Tolerances};
use crate::C64;

/// A finite quantum system in its standard (GNS) representation at inverse temperature `beta`.
#[derive(Debug, Clone)]
pub struct GnsSystem {
    pub d: usize,
    pub h: ComplexMatrix,
    pub beta: f64,
    /// KMS vector, `Ω ↔ ρ_β^{1/2}`.
    pub omega: Vec<C64>,
    /// `L = h ⊗ 1 − 1 ⊗ hᵀ`
    pub liouvillean: ComplexMatrix,
    pub delta_half: ComplexMatrix,
    pub delta_half_inv: ComplexMatrix,
    /// `x ⊗ y ↦ y ⊗ x`
    pub swap: ComplexMatrix,
}

/// Builds the GNS data of `(h, beta)`.
pub fn build_gns_system(h: &ComplexMatrix, beta: f64) -> Result<GnsSystem> {
    check_hermitian(h, "Hamiltonian", 1e-12)?;
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::InvalidInput(format!("inverse temperature must be finite and non-negative, got {beta}")));
    }
    let d = h.rows();
    if d == 0 {
        return Err(Error::InvalidInput("empty Hamiltonian".into()));
    }
    let h = h.hermitian_part();
    let eh = eigh(&h)?;
    let e_min = eh.values[0];
    let weights: Vec<f64> = eh.values.iter().map(|&e| (-beta * (e - e_min) / 2.0).exp()).collect();
    let z: f64 = weights.iter().map(|w| w * w).sum();
    let mut omega = vec![C64::new(0.0, 0.0); d * d];
    for (i, w) in weights.iter().enumerate() {
        let u = eh.vectors.column(i);
        let uc: Vec<C64> = u.iter().map(|x| x.conj()).collect();
        for (o, x) in omega.iter_mut().zip(kron_vec(&u, &uc)) {
            *o += x * (w / z.sqrt());
        }
    }
    let id = ComplexMatrix::identity(d);
    let liouvillean = &kron(&h, &id) - &kron(&id, &h.transpose());
    let delta_half = expm(&liouvillean.scale_real(-beta / 2.0))?;
    let delta_half_inv = expm(&liouvillean.scale_real(beta / 2.0))?;
    let swap = swap_matrix(d);
    Ok(GnsSystem { d, h, beta, omega, liouvillean, delta_half, delta_half_inv, swap })
}

fn swap_matrix(d: usize) -> ComplexMatrix {
    let mut s = ComplexMatrix::zeros(d * d, d * d);
    for a in 0..d {
        for b in 0..d {
            s[(b * d + a, a * d + b)] = C64::new(1.0, 0.0);
        }
    }
    s
}

impl GnsSystem {
    /// GNS dimension `d²`.
    pub fn dim(&self) -> usize {
        self.d * self.d
    }

    /// Left action `a ⊗ 1`.
    pub fn left(&self, a: &ComplexMatrix) -> ComplexMatrix {
        kron(a, &ComplexMatrix::identity(self.d))
    }

    /// Right action `1 ⊗ b`.
    pub fn right(&self, b: &ComplexMatrix) -> ComplexMatrix {
        kron(&ComplexMatrix::identity(self.d), b)
    }

    /// Gibbs density `e^{−βh}/Z`, equal to `X_Ω X_Ω†`.
    pub fn gibbs(&self) -> ComplexMatrix {
        let x = omega_matrix(&self.omega, self.d);
        &x * &x.adjoint()
    }

    /// `⟨Ω, (a ⊗ 1) Ω⟩`
    pub fn expectation(&self, a: &ComplexMatrix) -> C64 {
        let x = omega_matrix(&self.omega, self.d);
        (&(&x.adjoint() * a) * &x).trace()
    }
}

/// Reshapes a GNS vector of `C^d ⊗ C^d` into its coefficient matrix.
pub fn omega_matrix(v: &[C64], d: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(d, d, |i, j| v[i * d + j])
}

/// One product term `A ⊗ B` of a physical interaction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionTerm {
    #[serde(rename = "A")]
    pub a: ComplexMatrix,
    #[serde(rename = "B")]
    pub b: ComplexMatrix,
}

impl InteractionTerm {
    pub fn new(a: ComplexMatrix, b: ComplexMatrix) -> Self {
        Self { a, b }
    }
}

/// `Σ A_k ⊗ B_k` on `C^{d_S} ⊗ C^{d_E}`.
pub fn physical_interaction(terms: &[InteractionTerm], d_s: usize, d_e: usize) -> Result<ComplexMatrix> {
    let mut v = ComplexMatrix::zeros(d_s * d_e, d_s * d_e);
    for (k, t) in terms.iter().enumerate() {
        if t.a.rows() != d_s || t.a.cols() != d_s || t.b.rows() != d_e || t.b.cols() != d_e {
            return Err(Error::InvalidInput(format!(
                "term {k} has shapes {}x{} and {}x{}, expected {d_s}x{d_s} and {d_e}x{d_e}",
                t.a.rows(),
                t.a.cols(),
                t.b.rows(),
                t.b.cols()
            )));
        }
        v += &kron(&t.a, &t.b);
    }
    Ok(v)
}

/// GNS interaction `Σ A_k ⊗ 1 ⊗ B_k ⊗ 1`, factor order S-left, S-right, E-left, E-right.
pub fn build_interaction(terms: &[InteractionTerm], d_s: usize, d_e: usize) -> Result<ComplexMatrix> {
    let phys = physical_interaction(terms, d_s, d_e)?;
    check_hermitian(&phys, "interaction", Tolerances::default().hermitian)?;
    let n = d_s * d_s * d_e * d_e;
    let mut v = ComplexMatrix::zeros(n, n);
    let (is, ie) = (ComplexMatrix::identity(d_s), ComplexMatrix::identity(d_e));
    for t in terms {
        v += &kron(&kron(&t.a, &is), &kron(&t.b, &ie));
    }
    Ok(v)
}

/// `S` coupled to one chain element `E` through `λ V` for a time `τ`.
#[derive(Debug, Clone)]
pub struct RepeatedInteractionModel {
    pub sys_s: GnsSystem,
    pub sys_e: GnsSystem,
    /// Physical interaction terms; `v` below is their GNS lift.
    pub terms: Vec<InteractionTerm>,
    pub v: ComplexMatrix,
    pub lambda: f64,
    pub tau: f64,
    /// `L_S + L_E` on the coupled GNS space.
    pub l_free: ComplexMatrix,
    /// `L_S + L_E + λV`
    pub l_total: ComplexMatrix,
    /// C-Liouvillean `K`.
    pub k_total: ComplexMatrix,
    /// `K − L`
    pub w: ComplexMatrix,
    /// `‖Δ^{1/2} V Δ^{−1/2}‖`
    pub w_raw_norm: f64,
}

impl RepeatedInteractionModel {
    pub fn new(
        sys_s: GnsSystem,
        sys_e: GnsSystem,
        terms: Vec<InteractionTerm>,
        lambda: f64,
        tau: f64,
    ) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::InvalidInput(format!("interaction time must be positive, got {tau}")));
        }
        if !lambda.is_finite() {
            return Err(Error::InvalidInput("coupling constant must be finite".into()));
        }
        let v = build_interaction(&terms, sys_s.d, sys_e.d)?;
        let (ns, ne) = (sys_s.dim(), sys_e.dim());
        let l_free = &kron(&sys_s.liouvillean, &ComplexMatrix::identity(ne))
            + &kron(&ComplexMatrix::identity(ns), &sys_e.liouvillean);
        let l_total = &l_free + &v.scale_real(lambda);
        let (k_total, w_raw_norm) = c_liouvillean(&sys_s, &sys_e, &v, &l_free, lambda);
        let w = &k_total - &l_total;
        let model = Self { sys_s, sys_e, terms, v, lambda, tau, l_free, l_total, k_total, w, w_raw_norm };
        let resid = vec_norm(&model.k_total.matvec(&model.omega()));
        if resid > 1e-9 * model.scale() {
            return Err(Error::InvalidInput(format!("C-Liouvillean does not annihilate the reference vector ({resid:.3e})")));
        }
        Ok(model)
    }

    /// Same ingredients at a different coupling.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.sys_s.clone(), self.sys_e.clone(), self.terms.clone(), lambda, self.tau)
    }

    /// Same ingredients at a different interaction time.
    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        Self::new(self.sys_s.clone(), self.sys_e.clone(), self.terms.clone(), self.lambda, tau)
    }

    pub fn d_s(&self) -> usize {
        self.sys_s.d
    }

    pub fn d_e(&self) -> usize {
        self.sys_e.d
    }

    /// `Ω_S ⊗ Ω_E`
    pub fn omega(&self) -> Vec<C64> {
        kron_vec(&self.sys_s.omega, &self.sys_e.omega)
    }

    /// `Σ A_k ⊗ B_k` on `C^{d_S} ⊗ C^{d_E}` (without `λ`).
    pub fn physical_v(&self) -> ComplexMatrix {
        physical_interaction(&self.terms, self.d_s(), self.d_e()).expect("terms validated on construction")
    }

    /// `1 + ‖h_S‖ + ‖h_E‖ + |λ|‖V‖`, the scale of the generators.
    pub fn scale(&self) -> f64 {
        1.0 + self.sys_s.h.op_norm() + self.sys_e.h.op_norm() + self.lambda.abs() * self.v.op_norm()
    }
}

/// `K = L_S + L_E + λV − λ J Δ^{1/2} V Δ^{−1/2} J` and `‖Δ^{1/2} V Δ^{−1/2}‖`.
///
/// `J` is antilinear: `J X J = S conj(X) S` with `S = swap_S ⊗ swap_E`.
pub fn c_liouvillean(
    sys_s: &GnsSystem,
    sys_e: &GnsSystem,
    v: &ComplexMatrix,
    l_free: &ComplexMatrix,
    lambda: f64,
) -> (ComplexMatrix, f64) {
    let dh = kron(&sys_s.delta_half, &sys_e.delta_half);
    let dhi = kron(&sys_s.delta_half_inv, &sys_e.delta_half_inv);
    let w_raw = &(&dh * v) * &dhi;
    let s = kron(&sys_s.swap, &sys_e.swap);
    let jwj = &(&s * &w_raw.conj()) * &s;
    let k = &(l_free + &v.scale_real(lambda)) - &jwj.scale_real(lambda);
    (k, w_raw.op_norm())
}

/// Parameters of the two-level system coupled to two-level chain elements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinSpinParams {
    #[serde(rename = "E_S")]
    pub e_s: f64,
    #[serde(rename = "E_E")]
    pub e_e: f64,
    /// Coupling matrix `I = [[a, b], [c, d]]`.
    #[serde(rename = "I")]
    pub coupling: ComplexMatrix,
}

impl SpinSpinParams {
    /// `E_S = 1`, `E_E = 1.5`, `b = c = 1`, `a = d = 0`.
    pub fn benchmark() -> Self {
        Self {
            e_s: 1.0,
            e_e: 1.5,
            coupling: ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap(),
        }
    }

    pub fn h_s(&self) -> ComplexMatrix {
        ComplexMatrix::from_real_diag(&[0.0, self.e_s])
    }

    pub fn h_e(&self) -> ComplexMatrix {
        ComplexMatrix::from_real_diag(&[0.0, self.e_e])
    }

    /// `[(I, a*), (I†, a)]` with `a` lowering the excited state to the ground state.
    pub fn terms(&self) -> Vec<InteractionTerm> {
        let a = lowering();
        vec![
            InteractionTerm::new(self.coupling.clone(), a.adjoint()),
            InteractionTerm::new(self.coupling.adjoint(), a),
        ]
    }
}

/// `|φ₁⟩⟨φ₂|`
pub fn lowering() -> ComplexMatrix {
    ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]).unwrap()
}

pub fn spin_spin_model(
    p: &SpinSpinParams,
    beta_s: f64,
    beta_e: f64,
    lambda: f64,
    tau: f64,
) -> Result<RepeatedInteractionModel> {
    if p.coupling.rows() != 2 || p.coupling.cols() != 2 {
        return Err(Error::InvalidInput("spin-spin coupling matrix must be 2x2".into()));
    }
    let s = build_gns_system(&p.h_s(), beta_s)?;
    let e = build_gns_system(&p.h_e(), beta_e)?;
    RepeatedInteractionModel::new(s, e, p.terms(), lambda, tau)
}

/// The spin-spin model at `E_S = 1, E_E = 1.5, β_E = 1, β_S = 0, τ = 1, b = c = 1, a = d = 0`.
pub fn benchmark_model(lambda: f64) -> RepeatedInteractionModel {
    spin_spin_model(&SpinSpinParams::benchmark(), 0.0, 1.0, lambda, 1.0).expect("benchmark parameters are valid")
}

fn random_complex(rng: &mut impl Rng) -> C64 {
    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| random_complex(rng))
}

pub fn random_hermitian(rng: &mut impl Rng, n: usize) -> ComplexMatrix {
    random_matrix(rng, n, n).hermitian_part()
}

/// A random finite model: `d_S, d_E ∈ {2, 3}`, Hermitian `h`, `β ∈ [0, 2]`,
/// `λ ∈ [0.1, 1]`, `τ ∈ [0.5, 2]`, interaction built from Hermitian-closed term pairs.
pub fn random_model(rng: &mut impl Rng) -> RepeatedInteractionModel {
    let d_s = rng.random_range(2..=3);
    let d_e = rng.random_range(2..=3);
    let beta_s = rng.random_range(0.0..2.0);
    let beta_e = rng.random_range(0.0..2.0);
    let lambda = rng.random_range(0.1..1.0);
    let tau = rng.random_range(0.5..2.0);
    random_model_with(rng, d_s, d_e, beta_s, beta_e, lambda, tau)
}

pub fn random_model_with(
    rng: &mut impl Rng,
    d_s: usize,
    d_e: usize,
    beta_s: f64,
    beta_e: f64,
    lambda: f64,
    tau: f64,
) -> RepeatedInteractionModel {
    let h_s = random_hermitian(rng, d_s);
    let h_e = random_hermitian(rng, d_e);
    let mut terms = Vec::new();
    for _ in 0..2 {
        let a = random_matrix(rng, d_s, d_s);
        let b = random_matrix(rng, d_e, d_e);
        terms.push(InteractionTerm::new(a.adjoint(), b.adjoint()));
        terms.push(InteractionTerm::new(a, b));
    }
    let s = build_gns_system(&h_s, beta_s).expect("random Hamiltonian is Hermitian");
    let e = build_gns_system(&h_e, beta_e).expect("random Hamiltonian is Hermitian");
    RepeatedInteractionModel::new(s, e, terms, lambda, tau).expect("random model is valid")
}
