//! Energy flux into the chain and the asymptotic energy and entropy productions.
//!
//! Everything here uses the λ-scaled interaction: `j₊ = P(λV)P − P α^τ(λV) P`,
//! so the reported flux vanishes at λ = 0 and carries the coupling explicitly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gns::RepeatedInteractionModel;
use crate::numerics::{eigh, inner, ComplexMatrix, HermitianEigen};
use crate::reduced::{compress, exp_i, ReducedSpectralData};
use crate::C64;

/// Starting number of Simpson nodes for the integral form of `j₊`.
pub const SIMPSON_NODES: usize = 401;

/// The grid is doubled until the change drops below [`RICHARDSON_TOL`], up to this many nodes.
pub const MAX_SIMPSON_NODES: usize = 25_601;

/// Largest change allowed when the Simpson grid is doubled.
pub const RICHARDSON_TOL: f64 = 1e-9;

/// Largest difference allowed between the two forms of `j₊`.
pub const FORM_TOL: f64 = 1e-7;

/// Threshold above which `ω₊(j₊)` certifies strictly positive production.
pub const POSITIVE_FLUX: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct ThermoReport {
    pub tau: f64,
    pub beta_e: f64,
    /// `P(λV)P − P α^τ(λV) P` on the doubled system space.
    pub j_plus_op: ComplexMatrix,
    /// `ω₊(j₊)`
    pub j_plus_value: f64,
    /// Imaginary part of `⟨Ω*_S, j₊ Ω_S⟩`, kept as a diagnostic.
    pub j_plus_imag: f64,
    /// Max-entry difference between the difference form and the integral form.
    pub form_residual: f64,
    /// Change of the integral form when the Simpson grid is doubled.
    pub richardson_delta: f64,
    pub dE_plus: f64,
    pub dS_plus: f64,
    pub second_law_residual: f64,
    pub no_invariant_state: bool,
}

/// Difference form `P(λV)P − P e^{iτL}(λV)e^{−iτL} P`.
fn difference_form(model: &RepeatedInteractionModel) -> Result<ComplexMatrix> {
    let lv = model.v.scale_real(model.lambda);
    let u = exp_i(&model.l_total, model.tau)?;
    let evolved = &(&u * &lv) * &u.adjoint();
    let omega_e = &model.sys_e.omega;
    Ok(&compress(&lv, omega_e) - &compress(&evolved, omega_e))
}

/// Eigenvectors of `L` with the environment factor projected on `Ω_E`: `(1 ⊗ ⟨Ω_E|) U`.
fn projected_vectors(eig: &HermitianEigen, omega_e: &[C64]) -> ComplexMatrix {
    let v = &eig.vectors;
    let ne = omega_e.len();
    ComplexMatrix::from_fn(v.rows() / ne, v.cols(), |r, a| {
        omega_e.iter().enumerate().map(|(i, o)| o.conj() * v[(r * ne + i, a)]).sum()
    })
}

/// `−∫₀^τ P e^{isL} i[L_S + L_E, λV] e^{−isL} P ds` by composite Simpson on `nodes` points.
fn integral_form(model: &RepeatedInteractionModel, eig: &HermitianEigen, nodes: usize) -> ComplexMatrix {
    let lv = model.v.scale_real(model.lambda);
    let gen = model.l_free.commutator(&lv).scale(C64::new(0.0, 1.0));
    let v = &eig.vectors;
    let g = &(&v.adjoint() * &gen) * v;
    let w = projected_vectors(eig, &model.sys_e.omega);
    let w_adj = w.adjoint();
    let n = g.rows();
    let intervals = nodes - 1;
    let h = model.tau / intervals as f64;
    let mut acc = ComplexMatrix::zeros(n, n);
    for k in 0..nodes {
        let s = k as f64 * h;
        let weight = if k == 0 || k == intervals {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let phases: Vec<C64> = eig.values.iter().map(|&x| C64::from_polar(1.0, s * x)).collect();
        acc = &acc + &ComplexMatrix::from_fn(n, n, |a, b| phases[a] * g[(a, b)] * phases[b].conj() * weight);
    }
    (&(&w * &acc) * &w_adj).scale_real(-h / 3.0)
}

/// Both forms of `j₊`: the difference form, the Simpson integral form on the coarsest grid
/// whose doubling changes it by at most [`RICHARDSON_TOL`], and that change.
pub fn j_plus_forms(model: &RepeatedInteractionModel) -> Result<(ComplexMatrix, ComplexMatrix, f64)> {
    let form_a = difference_form(model)?;
    let eig = eigh(&model.l_total)?;
    let mut nodes = SIMPSON_NODES;
    let mut form_b = integral_form(model, &eig, nodes);
    loop {
        let fine_nodes = 2 * nodes - 1;
        let fine = integral_form(model, &eig, fine_nodes);
        let delta = (&fine - &form_b).max_abs();
        if delta <= RICHARDSON_TOL {
            return Ok((form_a, form_b, delta));
        }
        if fine_nodes > MAX_SIMPSON_NODES {
            return Err(Error::Quadrature(format!(
                "Simpson integral of j+ not converged at {fine_nodes} nodes: doubling changed it by {delta:.3e}"
            )));
        }
        nodes = fine_nodes;
        form_b = fine;
    }
}

/// Flux operator `j₊`, its value in the asymptotic state, and the agreement of its two forms.
/// Productions are left at zero; see [`productions`].
///
/// Non-ergodic data is refused unless `j₊` vanishes as an operator, in which case every
/// state gives zero flux.
pub fn j_plus(model: &RepeatedInteractionModel, data: &ReducedSpectralData) -> Result<ThermoReport> {
    let (form_a, form_b, richardson_delta) = j_plus_forms(model)?;
    let value = match data.omega_star.as_deref() {
        Some(star) if data.ergodic => inner(star, &form_a.matvec(&data.omega_s)),
        _ => {
            let negligible = 1e-12 * (1.0 + model.lambda.abs() * model.v.op_norm());
            if form_a.max_abs() > negligible {
                data.require_ergodic()?;
            }
            C64::new(0.0, 0.0)
        }
    };
    Ok(ThermoReport {
        tau: model.tau,
        beta_e: model.sys_e.beta,
        form_residual: (&form_a - &form_b).max_abs(),
        j_plus_op: form_a,
        j_plus_value: value.re,
        j_plus_imag: value.im,
        richardson_delta,
        dE_plus: 0.0,
        dS_plus: 0.0,
        second_law_residual: 0.0,
        no_invariant_state: false,
    })
}

/// Fills in `dE₊ = ω₊(j₊)/τ`, `dS₊ = β_E ω₊(j₊)/τ` and the second-law residual `|β_E dE₊ − dS₊|`,
/// which is `|dE₊ − T_E dS₊|` scaled by `β_E` and stays defined at infinite temperature.
pub fn productions(mut report: ThermoReport) -> ThermoReport {
    report.dE_plus = report.j_plus_value / report.tau;
    report.dS_plus = report.beta_e * report.j_plus_value / report.tau;
    report.second_law_residual = if report.beta_e > 0.0 {
        (report.dE_plus - report.dS_plus / report.beta_e).abs()
    } else {
        (report.beta_e * report.dE_plus - report.dS_plus).abs()
    };
    report.no_invariant_state = no_invariant_state_certificate(&report);
    report
}

/// True when the flux is strictly positive, in which case no normal state is invariant.
pub fn no_invariant_state_certificate(report: &ThermoReport) -> bool {
    report.j_plus_value > POSITIVE_FLUX
}

/// `j_plus` followed by `productions`.
pub fn thermo_report(model: &RepeatedInteractionModel, data: &ReducedSpectralData) -> Result<ThermoReport> {
    j_plus(model, data).map(productions)
}
