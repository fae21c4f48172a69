//! The reduced dynamics operator `M = P e^{iτK} P` and the asymptotic state it determines.

use nalgebra::linalg::SVD;
use serde::{Deserialize, Serialize};

use crate::error::{Error, NotErgodicReason, Result};
use crate::gns::{omega_matrix, RepeatedInteractionModel};
use crate::numerics::{apply_local, eigenvalues, expm, inner, kron_vec, ComplexMatrix, FactorShape, Tolerances};
use crate::C64;

/// Largest GNS vector length allowed in a factor-local evaluation.
pub const MAX_VECTOR_LEN: usize = 1 << 20;

/// Largest two-element GNS space for the factorization check.
pub const MAX_FACTORIZATION_DIM: usize = 1 << 16;

pub(crate) fn exp_i(m: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    Ok(expm(&m.scale(C64::new(0.0, t)))?)
}

/// `(1 ⊗ ⟨Ω_E|) E (1 ⊗ |Ω_E⟩)` for an operator `E` on `H_S ⊗ H_E`.
pub(crate) fn compress(e: &ComplexMatrix, omega_e: &[C64]) -> ComplexMatrix {
    let ne = omega_e.len();
    let ns = e.rows() / ne;
    ComplexMatrix::from_fn(ns, ns, |r, c| {
        let mut acc = C64::new(0.0, 0.0);
        for (i, oi) in omega_e.iter().enumerate() {
            let row = e.row(r * ne + i);
            let mut inner_sum = C64::new(0.0, 0.0);
            for (j, oj) in omega_e.iter().enumerate() {
                inner_sum += row[c * ne + j] * oj;
            }
            acc += oi.conj() * inner_sum;
        }
        acc
    })
}

/// `P e^{itK} P` as a `d_S² × d_S²` matrix.
pub fn reduced_propagator(model: &RepeatedInteractionModel, t: f64) -> Result<ComplexMatrix> {
    let e = exp_i(&model.k_total, t)?;
    Ok(compress(&e, &model.sys_e.omega))
}

/// `M = P e^{iτK} P`, with `M[r, c] = ⟨e_r ⊗ Ω_E, e^{iτK} e_c ⊗ Ω_E⟩`.
pub fn reduced_map(model: &RepeatedInteractionModel) -> Result<ComplexMatrix> {
    reduced_propagator(model, model.tau)
}

/// Spectrum of `M` and the objects attached to its eigenvalue 1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReducedSpectralData {
    pub m_matrix: ComplexMatrix,
    /// Sorted by decreasing modulus; the fixed eigenvalue is listed first.
    pub eigenvalues: Vec<C64>,
    pub ergodic: bool,
    pub not_ergodic_reason: Option<NotErgodicReason>,
    /// `min_{z ≠ 1} |log|z||`; infinite when `1` is the only eigenvalue.
    pub gamma: f64,
    /// Largest modulus among the eigenvalues other than the fixed one.
    pub subdominant_modulus: f64,
    pub omega_s: Vec<C64>,
    /// Normalized so that `⟨Ω*_S, Ω_S⟩ = 1`; absent when eigenvalue 1 is degenerate.
    pub omega_star: Option<Vec<C64>>,
    /// `|Ω_S⟩⟨Ω*_S|`
    pub pi_projection: Option<ComplexMatrix>,
}

/// Spectral data of `M`, without refusing non-ergodic inputs.
///
/// `omega_s` is the fixed vector `M Ω_S = Ω_S` used to normalize `Ω*_S`.
pub fn analyze_spectrum(m: &ComplexMatrix, omega_s: &[C64], tol: &Tolerances) -> Result<ReducedSpectralData> {
    let n = m.require_square()?;
    if omega_s.len() != n {
        return Err(Error::InvalidInput(format!("fixed vector has length {}, expected {n}", omega_s.len())));
    }
    let resid: f64 = m
        .matvec(omega_s)
        .iter()
        .zip(omega_s)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    if resid > tol.fixed_point {
        return Err(Error::InvalidInput(format!("M does not fix the reference vector (residual {resid:.3e})")));
    }
    let mut values = eigenvalues(m)?;
    let one = C64::new(1.0, 0.0);
    let fixed = (0..n)
        .min_by(|&i, &j| (values[i] - one).norm().total_cmp(&(values[j] - one).norm()))
        .expect("non-empty spectrum");
    let fixed_value = values.remove(fixed);
    values.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
    let reason = if values.iter().any(|z| (z - one).norm() <= tol.simple) {
        Some(NotErgodicReason::DegenerateOne)
    } else if values.iter().any(|z| z.norm() > 1.0 - tol.circle) {
        Some(NotErgodicReason::PeripheralEigenvalue)
    } else {
        None
    };
    let gamma = values.iter().map(|z| z.norm().ln().abs()).fold(f64::INFINITY, f64::min);
    let subdominant_modulus = values.first().map_or(0.0, |z| z.norm());
    values.insert(0, fixed_value);

    let omega_star = if reason == Some(NotErgodicReason::DegenerateOne) {
        None
    } else {
        Some(left_fixed_vector(m, omega_s)?)
    };
    let pi_projection = omega_star.as_ref().map(|w| ComplexMatrix::outer(omega_s, w));
    Ok(ReducedSpectralData {
        m_matrix: m.clone(),
        eigenvalues: values,
        ergodic: reason.is_none(),
        not_ergodic_reason: reason,
        gamma,
        subdominant_modulus,
        omega_s: omega_s.to_vec(),
        omega_star,
        pi_projection,
    })
}

/// As [`analyze_spectrum`], but refusing models that violate the ergodicity assumption.
pub fn spectral_analysis(m: &ComplexMatrix, omega_s: &[C64], tol: &Tolerances) -> Result<ReducedSpectralData> {
    let data = analyze_spectrum(m, omega_s, tol)?;
    data.require_ergodic()?;
    Ok(data)
}

/// Reduced map and its spectral analysis for a model.
pub fn analyze_model(model: &RepeatedInteractionModel, tol: &Tolerances) -> Result<ReducedSpectralData> {
    let m = reduced_map(model)?;
    spectral_analysis(&m, &model.sys_s.omega, tol)
}

/// Null vector of `(M − 1)†` scaled to `⟨w, Ω_S⟩ = 1`.
fn left_fixed_vector(m: &ComplexMatrix, omega_s: &[C64]) -> Result<Vec<C64>> {
    let n = m.rows();
    let a = (m - &ComplexMatrix::identity(n)).adjoint();
    let svd = SVD::new(a.to_nalgebra(), false, true);
    let v_t = svd.v_t.ok_or(crate::numerics::NumericsError::NoConvergence)?;
    let k = (0..n)
        .min_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]))
        .expect("non-empty");
    // rows of V† are conjugated right singular vectors
    let w: Vec<C64> = (0..n).map(|j| v_t[(k, j)].conj()).collect();
    let norm = inner(&w, omega_s);
    if norm.norm() < 1e-12 {
        return Err(Error::InvalidInput("left fixed vector is orthogonal to the reference vector".into()));
    }
    let scale = norm.conj().inv();
    Ok(w.iter().map(|x| x * scale).collect())
}

impl ReducedSpectralData {
    pub fn require_ergodic(&self) -> Result<()> {
        match self.not_ergodic_reason {
            Some(reason) => Err(Error::NotErgodic { reason }),
            None => Ok(()),
        }
    }

    fn star(&self) -> Result<&[C64]> {
        self.require_ergodic()?;
        Ok(self.omega_star.as_deref().expect("ergodic data carries Ω*"))
    }

    /// Physical dimension `d_S`.
    pub fn d_s(&self) -> usize {
        (self.omega_s.len() as f64).sqrt().round() as usize
    }

    pub fn projection(&self) -> Result<&ComplexMatrix> {
        self.require_ergodic()?;
        Ok(self.pi_projection.as_ref().expect("ergodic data carries π"))
    }

    /// Density matrix `ρ₊` with `ω₊(A) = Tr(ρ₊ A)`.
    pub fn asymptotic_density(&self) -> Result<ComplexMatrix> {
        let d = self.d_s();
        let x = omega_matrix(&self.omega_s, d);
        let y = omega_matrix(self.star()?, d);
        Ok(&x * &y.adjoint())
    }
}

/// `ω₊(A) = ⟨Ω*_S, (A ⊗ 1) Ω_S⟩`.
pub fn asymptotic_expectation(data: &ReducedSpectralData, a_s: &ComplexMatrix) -> Result<C64> {
    let star = data.star()?;
    let d = data.d_s();
    if a_s.rows() != d || a_s.cols() != d {
        return Err(Error::InvalidInput(format!("observable must be {d}x{d}")));
    }
    let shape = FactorShape::new(vec![d, d])?;
    let v = apply_local(a_s, &data.omega_s, &shape, &[0])?;
    Ok(inner(star, &v))
}

/// An observable on `S` and the chain elements around the one currently interacting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstantObservable {
    pub a_s: ComplexMatrix,
    /// `B_{−ℓ}, …, B_{−1}`: elements that have already interacted.
    #[serde(default)]
    pub b_past: Vec<ComplexMatrix>,
    /// Element currently interacting.
    pub b_zero: ComplexMatrix,
    /// `B_1, …, B_r`: elements yet to interact.
    #[serde(default)]
    pub b_future: Vec<ComplexMatrix>,
    /// `A_1, …, A_p` on the first `p` elements of the chain.
    #[serde(default)]
    pub a_probe: Vec<ComplexMatrix>,
}

impl InstantObservable {
    /// `a_s` on the system, identity elsewhere.
    pub fn system(a_s: ComplexMatrix, d_e: usize) -> Self {
        Self::with_current(a_s, ComplexMatrix::identity(d_e))
    }

    /// `a_s ⊗ b_zero`.
    pub fn with_current(a_s: ComplexMatrix, b_zero: ComplexMatrix) -> Self {
        Self { a_s, b_past: vec![], b_zero, b_future: vec![], a_probe: vec![] }
    }

    pub fn ell(&self) -> usize {
        self.b_past.len()
    }

    pub(crate) fn validate(&self, d_s: usize, d_e: usize) -> Result<()> {
        let sq = |m: &ComplexMatrix, d: usize, what: &str| {
            if m.rows() == d && m.cols() == d {
                Ok(())
            } else {
                Err(Error::InvalidInput(format!("{what} must be {d}x{d}, got {}x{}", m.rows(), m.cols())))
            }
        };
        sq(&self.a_s, d_s, "a_s")?;
        sq(&self.b_zero, d_e, "b_zero")?;
        for b in self.b_past.iter().chain(&self.b_future).chain(&self.a_probe) {
            sq(b, d_e, "chain observable")?;
        }
        Ok(())
    }
}

/// `E₊(s)` for `s` taken modulo `τ`.
///
/// Propagates `Ω_S ⊗ Ω_E^{⊗(ℓ+1)}` and `Ω*_S ⊗ Ω_E^{⊗(ℓ+1)}` through
/// `ℓ` full interactions and a partial one of length `s`, then pairs them
/// through the observable. Elements `1…r` ahead only contribute `⟨B_j⟩_{Ω_E}`.
pub fn rias_expectation(
    model: &RepeatedInteractionModel,
    data: &ReducedSpectralData,
    obs: &InstantObservable,
    s: f64,
) -> Result<C64> {
    let star = data.star()?.to_vec();
    let (d_s, d_e) = (model.d_s(), model.d_e());
    obs.validate(d_s, d_e)?;
    if !obs.a_probe.is_empty() {
        return Err(Error::InvalidInput("the asymptotic functional takes no probe observables".into()));
    }
    let ell = obs.ell();
    let (ns, ne) = (d_s * d_s, d_e * d_e);
    let required = (0..=ell).try_fold(ns, |acc, _| acc.checked_mul(ne)).unwrap_or(usize::MAX);
    if required > MAX_VECTOR_LEN {
        return Err(Error::Overflow { required, limit: MAX_VECTOR_LEN });
    }
    let s = s.rem_euclid(model.tau);

    let mut dims = vec![ns];
    dims.extend(std::iter::repeat_n(ne, ell + 1));
    let shape = FactorShape::new(dims)?;
    let mut psi = model.sys_s.omega.clone();
    let mut phi = star;
    for _ in 0..=ell {
        psi = kron_vec(&psi, &model.sys_e.omega);
        phi = kron_vec(&phi, &model.sys_e.omega);
    }

    let full_step = (exp_i(&model.l_total, -model.tau)?, exp_i(&model.sys_e.liouvillean, -model.tau)?);
    let last_step = (exp_i(&model.l_total, -s)?, exp_i(&model.sys_e.liouvillean, -s)?);
    for k in 1..=ell + 1 {
        let (u_int, u_free) = if k <= ell { &full_step } else { &last_step };
        for v in [&mut psi, &mut phi] {
            *v = apply_local(u_int, v, &shape, &[0, k])?;
            for j in (1..=ell + 1).filter(|&j| j != k) {
                *v = apply_local(u_free, v, &shape, &[j])?;
            }
        }
    }

    psi = apply_local(&model.sys_s.left(&obs.a_s), &psi, &shape, &[0])?;
    for (j, b) in obs.b_past.iter().chain(std::iter::once(&obs.b_zero)).enumerate() {
        psi = apply_local(&model.sys_e.left(b), &psi, &shape, &[j + 1])?;
    }
    let ahead: C64 = obs.b_future.iter().map(|b| model.sys_e.expectation(b)).product();
    Ok(inner(&phi, &psi) * ahead)
}

/// `‖M^m − π‖` (operator norm) for `m = 1, …, m_max`.
pub fn power_convergence(data: &ReducedSpectralData, m_max: usize) -> Result<Vec<f64>> {
    let pi = data.projection()?;
    let d = &data.m_matrix - pi;
    let mut p = d.clone();
    let mut out = Vec::with_capacity(m_max);
    for m in 1..=m_max {
        if m > 1 {
            p = &p * &d;
        }
        out.push(p.op_norm());
    }
    Ok(out)
}

/// Exponential decay rate of a sequence indexed from 1, from a least-squares
/// fit of `log` values over its last half. Values below `1e-300` are skipped.
pub fn fit_decay_rate(seq: &[f64]) -> Option<f64> {
    let start = seq.len() / 2;
    let pts: Vec<(f64, f64)> = seq[start..]
        .iter()
        .enumerate()
        .filter(|(_, &y)| y > 1e-300)
        .map(|(i, &y)| ((start + i + 1) as f64, y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(-sxy / sxx)
}

/// `‖P e^{it₁K₁} e^{it₂K₂} P − (P e^{it₁K} P)(P e^{it₂K} P)‖` on `H_S ⊗ H_E ⊗ H_E`,
/// where `K_m` couples `S` to element `m` and acts trivially on the other one.
pub fn factorization_check(model: &RepeatedInteractionModel, t1: f64, t2: f64) -> Result<f64> {
    let (ns, ne) = (model.sys_s.dim(), model.sys_e.dim());
    let required = ns * ne * ne;
    if required > MAX_FACTORIZATION_DIM {
        return Err(Error::Overflow { required, limit: MAX_FACTORIZATION_DIM });
    }
    let shape = FactorShape::new(vec![ns, ne, ne])?;
    let e1 = exp_i(&model.k_total, t1)?;
    let e2 = exp_i(&model.k_total, t2)?;
    let oo = kron_vec(&model.sys_e.omega, &model.sys_e.omega);
    let mut joint = ComplexMatrix::zeros(ns, ns);
    for c in 0..ns {
        let mut ec = vec![C64::new(0.0, 0.0); ns];
        ec[c] = C64::new(1.0, 0.0);
        let mut x = kron_vec(&ec, &oo);
        x = apply_local(&e2, &x, &shape, &[0, 2])?;
        x = apply_local(&e1, &x, &shape, &[0, 1])?;
        for r in 0..ns {
            joint[(r, c)] = inner(&oo, &x[r * ne * ne..(r + 1) * ne * ne]);
        }
    }
    let product = &compress(&e1, &model.sys_e.omega) * &compress(&e2, &model.sys_e.omega);
    Ok((&joint - &product).op_norm())
}

/// `max_{t, m ≤ m_max} ‖(P e^{itK} P)^m‖`.
pub fn power_bound_check(model: &RepeatedInteractionModel, t_samples: &[f64], m_max: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &t in t_samples {
        let m = reduced_propagator(model, t)?;
        let mut p = m.clone();
        worst = worst.max(p.op_norm());
        for _ in 1..m_max {
            p = &p * &m;
            worst = worst.max(p.op_norm());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gns::benchmark_model;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn one_by_one_identity_is_ergodic_with_infinite_gap() {
        let m = ComplexMatrix::identity(1);
        let d = spectral_analysis(&m, &[c(1.0, 0.0)], &Tolerances::default()).unwrap();
        assert!(d.ergodic);
        assert!(d.gamma.is_infinite());
    }

    #[test]
    fn peripheral_eigenvalue_is_rejected() {
        let m = ComplexMatrix::from_diag(&[c(1.0, 0.0), C64::from_polar(1.0, 0.7)]);
        let err = spectral_analysis(&m, &[c(1.0, 0.0), c(0.0, 0.0)], &Tolerances::default()).unwrap_err();
        assert_eq!(err, Error::NotErgodic { reason: NotErgodicReason::PeripheralEigenvalue });
    }

    #[test]
    fn uncoupled_spin_spin_is_degenerate() {
        let model = benchmark_model(0.0);
        let m = reduced_map(&model).unwrap();
        let free = exp_i(&model.sys_s.liouvillean, model.tau).unwrap();
        assert!(m.approx_eq(&free, 1e-13));
        let err = analyze_model(&model, &Tolerances::default()).unwrap_err();
        assert_eq!(err, Error::NotErgodic { reason: NotErgodicReason::DegenerateOne });
    }

    #[test]
    fn diagonal_powers() {
        let m = ComplexMatrix::from_real_diag(&[1.0, 0.5]);
        let d = spectral_analysis(&m, &[c(1.0, 0.0), c(0.0, 0.0)], &Tolerances::default()).unwrap();
        let norms = power_convergence(&d, 10).unwrap();
        for (k, n) in norms.iter().enumerate() {
            assert!((n - 0.5f64.powi(k as i32 + 1)).abs() < 1e-15);
        }
        assert!((fit_decay_rate(&norms).unwrap() - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn rank_one_map_converges_immediately() {
        let omega = [c(0.6, 0.0), c(0.8, 0.0)];
        let m = ComplexMatrix::outer(&omega, &omega);
        let d = spectral_analysis(&m, &omega, &Tolerances::default()).unwrap();
        assert!(power_convergence(&d, 5).unwrap().iter().all(|&x| x < 1e-15));
    }
}
