//! Closed-form perturbative oracles: the spin-spin chain and the spin-fermion chains with
//! quadratic and linear coupling.
//!
//! The spin-fermion expressions involve integrals over the reservoir energy `r ≥ 0` weighted by
//! `‖g_β(r)‖² = ‖g(r)‖² / (1 + e^{−βr})`. They are evaluated with composite Gauss–Legendre rules on
//! `[0, R]` and accepted only when doubling the number of panels changes them by at most
//! [`QUAD_GATE`].

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::ComplexMatrix;
use crate::C64;

/// Bound required on the neglected tail `∫_R^∞ e^{βr}‖g(r)‖² dr`.
pub const SF1_TAIL: f64 = 1e-10;
/// Convergence gate for panel doubling.
pub const QUAD_GATE: f64 = 1e-7;
/// Relative agreement required between the two evaluations of the four-variable entropy integral.
pub const DUAL_METHOD_TOL: f64 = 1e-5;
/// Distance below which `τ` counts as resonant.
pub const RESONANCE_TOL: f64 = 1e-6;
/// Couplings above this are flagged as outside the perturbative regime.
pub const SMALL_LAMBDA: f64 = 0.2;

const MIN_CUTOFF: f64 = 40.0;
const MAX_CUTOFF: f64 = 400.0;
const GL_ORDER: usize = 16;
const MAX_DOUBLINGS: usize = 4;
const TENSOR_ORDER: usize = 8;
const TAYLOR_RADIUS: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum FormFactorFamily {
    /// `‖g(r)‖² = c² e^{−2κr}`
    Exponential { c: f64, kappa: f64 },
    /// `‖g(r)‖² = c² e^{−r²/σ²}`
    Gaussian { c: f64, sigma: f64 },
}

/// A form factor `g` together with the reservoir inverse temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FormFactor {
    #[serde(flatten)]
    pub family: FormFactorFamily,
    pub beta: f64,
}

impl FormFactor {
    pub fn new(family: FormFactorFamily, beta: f64) -> Result<Self> {
        let ok = match family {
            FormFactorFamily::Exponential { c, kappa } => c.is_finite() && kappa.is_finite() && kappa > 0.0,
            FormFactorFamily::Gaussian { c, sigma } => c.is_finite() && sigma.is_finite() && sigma > 0.0,
        };
        if !ok {
            return Err(Error::InvalidInput(format!("bad form factor parameters {family:?}")));
        }
        if !beta.is_finite() || beta < 0.0 {
            return Err(Error::InvalidInput(format!("beta must be finite and >= 0, got {beta}")));
        }
        Ok(Self { family, beta })
    }

    /// `g(r) = e^{−r/2}`, i.e. `‖g(r)‖² = e^{−r}`.
    pub fn default_with_beta(beta: f64) -> Result<Self> {
        Self::new(FormFactorFamily::Exponential { c: 1.0, kappa: 0.5 }, beta)
    }

    /// `‖g(r)‖²`
    pub fn norm_sq(&self, r: f64) -> f64 {
        match self.family {
            FormFactorFamily::Exponential { c, kappa } => c * c * (-2.0 * kappa * r).exp(),
            FormFactorFamily::Gaussian { c, sigma } => c * c * (-(r / sigma).powi(2)).exp(),
        }
    }

    /// `‖g_β(r)‖² = ‖g(r)‖² / (1 + e^{−βr})`
    pub fn norm_sq_beta(&self, r: f64) -> f64 {
        self.norm_sq(r) / (1.0 + (-self.beta * r).exp())
    }

    pub fn is_zero(&self) -> bool {
        match self.family {
            FormFactorFamily::Exponential { c, .. } | FormFactorFamily::Gaussian { c, .. } => c == 0.0,
        }
    }

    /// Upper bound on `∫_R^∞ (1 + e^{βr}) ‖g_β(r)‖² dr = ∫_R^∞ e^{βr}‖g(r)‖² dr`; infinite when
    /// the integral diverges.
    pub fn sf1_tail(&self, cutoff: f64) -> f64 {
        let b = self.beta;
        match self.family {
            FormFactorFamily::Exponential { c, kappa } => {
                let rate = 2.0 * kappa - b;
                if rate <= 0.0 {
                    f64::INFINITY
                } else {
                    c * c * (-rate * cutoff).exp() / rate
                }
            }
            FormFactorFamily::Gaussian { c, sigma } => {
                // concave exponent; bound it by its tangent at the cutoff
                let slope = 2.0 * cutoff / (sigma * sigma) - b;
                if slope <= 0.0 {
                    f64::INFINITY
                } else {
                    c * c * (b * cutoff - (cutoff / sigma).powi(2)).exp() / slope
                }
            }
        }
    }

    /// Checks that `e^{βh/2} g` is square integrable and returns the integration cutoff
    /// `R = max(40, 40/β)`, enlarged until the tail bound drops below [`SF1_TAIL`].
    pub fn cutoff(&self) -> Result<f64> {
        if self.sf1_tail(MAX_CUTOFF).is_infinite() {
            return Err(Error::Precondition(format!(
                "form factor {:?} violates e^(beta h/2) g in h at beta = {}",
                self.family, self.beta
            )));
        }
        let mut r = if self.beta > 0.0 { MIN_CUTOFF.max(MIN_CUTOFF / self.beta) } else { MIN_CUTOFF };
        r = r.min(MAX_CUTOFF);
        while self.sf1_tail(r) > SF1_TAIL {
            r *= 1.25;
            if r > MAX_CUTOFF {
                return Err(Error::Quadrature(format!("tail bound above {SF1_TAIL:e} at R = {MAX_CUTOFF}")));
            }
        }
        Ok(r)
    }
}

/// Leading-order data of the perturbative expansions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbativeResult {
    pub model: String,
    pub tau: f64,
    pub lambda: f64,
    pub beta: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    /// Leading term of the spectral gap, proportional to `λ²`.
    pub gamma_leading: f64,
    pub e0: C64,
    pub e_plus: C64,
    pub e_minus: C64,
    /// Leading-order populations `(α₁, α₂)/(α₁+α₂)` of the asymptotic state.
    pub omega_plus_diag: [f64; 2],
    pub ds_plus_leading: f64,
    pub warnings: Vec<String>,
}

pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0 + x.powi(4) / 120.0
    } else {
        x.sin() / x
    }
}

fn sinc2(x: f64) -> f64 {
    let s = sinc(x);
    s * s
}

/// `(1 − sinc(τx))/x`, with its Taylor series near the removable singularity.
pub fn one_minus_sinc_over(x: f64, tau: f64) -> f64 {
    if x.abs() < TAYLOR_RADIUS {
        let t2 = tau * tau;
        let x2 = x * x;
        let mut term = t2 * x / 6.0;
        let mut sum = term;
        // ratios of consecutive terms of Σ (−1)^k (τx)^{2k} x^{-1} / (2k+1)!
        for k in 2..=5 {
            term *= -t2 * x2 / ((2 * k) as f64 * (2 * k + 1) as f64);
            sum += term;
        }
        sum
    } else {
        (1.0 - sinc(tau * x)) / x
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if !tau.is_finite() || tau <= 0.0 {
        return Err(Error::InvalidInput(format!("tau must be positive, got {tau}")));
    }
    let k = ((tau - PI / 2.0) / PI).round().max(0.0);
    if (tau - (PI / 2.0 + PI * k)).abs() <= RESONANCE_TOL {
        return Err(Error::Precondition(format!("tau = {tau} is within {RESONANCE_TOL:e} of pi/2 + pi*N")));
    }
    Ok(())
}

fn lambda_warnings(lambda: f64, ff: Option<&FormFactor>) -> Vec<String> {
    let mut w = Vec::new();
    if lambda.abs() > SMALL_LAMBDA {
        w.push(format!("|lambda| = {} is above {SMALL_LAMBDA}; expansions are leading order only", lambda.abs()));
    }
    if ff.is_some_and(FormFactor::is_zero) {
        w.push("form factor vanishes identically; all rates are zero".into());
    }
    w
}

/// Composite Gauss–Legendre nodes and weights on `[0, R]`.
struct Grid {
    x: Vec<f64>,
    w: Vec<f64>,
}

impl Grid {
    fn new(cutoff: f64, panels: usize, order: usize) -> Self {
        let rule = GaussLegendre::new(NonZeroUsize::new(order).expect("order > 0"));
        let h = cutoff / panels as f64;
        let mut x = Vec::with_capacity(panels * order);
        let mut w = Vec::with_capacity(panels * order);
        for p in 0..panels {
            let mid = (p as f64 + 0.5) * h;
            for (node, weight) in rule.as_node_weight_pairs() {
                x.push(mid + 0.5 * h * node);
                w.push(0.5 * h * weight);
            }
        }
        Self { x, w }
    }
}

fn base_panels(cutoff: f64, tau: f64) -> usize {
    (cutoff * tau.max(1.0) / 2.0).ceil() as usize
}

/// Evaluates a vector of integrals on successively doubled grids until every component
/// changes by at most `QUAD_GATE · max(1, |value|)`.
fn gated<const N: usize>(cutoff: f64, tau: f64, eval: impl Fn(&Grid) -> [f64; N]) -> Result<[f64; N]> {
    let mut panels = base_panels(cutoff, tau);
    let mut prev = eval(&Grid::new(cutoff, panels, GL_ORDER));
    for _ in 0..MAX_DOUBLINGS {
        panels *= 2;
        let next = eval(&Grid::new(cutoff, panels, GL_ORDER));
        let worst = prev
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs() / b.abs().max(1.0))
            .fold(0.0, f64::max);
        if worst <= QUAD_GATE {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::Quadrature(format!("integrals did not settle within {MAX_DOUBLINGS} panel doublings")))
}

/// Two-variable integrals of the quadratic model, all on one grid.
#[derive(Debug, Clone, Copy)]
struct QuadraticIntegrals {
    alpha1: f64,
    alpha2: f64,
    /// `∫∫ f (y−x) e^{−βx}`
    a_x: f64,
    /// `∫∫ f (y−x) e^{−βy}`
    a_y: f64,
    /// `‖e^{−βh/2} g_β‖²`
    thermal_norm: f64,
    /// `∫∫ (e^{−βx}+e^{−βy}) ‖g_β(x)‖²‖g_β(y)‖² (1 − sinc(τ(x−y−2)))/(x−y−2)`
    shift: f64,
}

/// Here `f(x, y) = ‖g_β(x)‖²‖g_β(y)‖² sinc²(τ(2−x+y)/2)`.
fn quadratic_integrals(ff: &FormFactor, tau: f64) -> Result<QuadraticIntegrals> {
    check_tau(tau)?;
    let cutoff = ff.cutoff()?;
    let beta = ff.beta;
    let v = gated(cutoff, tau, |grid| {
        let n = grid.x.len();
        let g: Vec<f64> = grid.x.iter().map(|&r| ff.norm_sq_beta(r)).collect();
        let e: Vec<f64> = grid.x.iter().map(|&r| (-beta * r).exp()).collect();
        let mut acc = [0.0; 6];
        for i in 0..n {
            let (x, wx) = (grid.x[i], grid.w[i] * g[i]);
            acc[4] += wx * e[i];
            for j in 0..n {
                let y = grid.x[j];
                let wxy = wx * grid.w[j] * g[j];
                let f = wxy * sinc2(tau * (2.0 - x + y) / 2.0);
                acc[0] += f * e[i];
                acc[1] += f * e[j];
                acc[2] += f * (y - x) * e[i];
                acc[3] += f * (y - x) * e[j];
                acc[5] += wxy * (e[i] + e[j]) * one_minus_sinc_over(x - y - 2.0, tau);
            }
        }
        acc
    })?;
    Ok(QuadraticIntegrals { alpha1: v[0], alpha2: v[1], a_x: v[2], a_y: v[3], thermal_norm: v[4], shift: v[5] })
}

/// `α₁, α₂` of the quadratic spin-fermion model.
pub fn sf_quadratic_alphas(ff: &FormFactor, tau: f64) -> Result<(f64, f64)> {
    let q = quadratic_integrals(ff, tau)?;
    Ok((q.alpha1, q.alpha2))
}

fn quadratic_eigs_from(q: &QuadraticIntegrals, tau: f64, lambda: f64) -> (C64, C64, C64) {
    let l2 = lambda * lambda;
    let sum = q.alpha1 + q.alpha2;
    let e0 = C64::new(1.0 - l2 * tau * tau * sum, 0.0);
    let re = 1.0 - l2 * tau * tau * sum / 2.0;
    let im = l2 * tau * (q.thermal_norm * q.thermal_norm - q.shift);
    let e_plus = C64::from_polar(1.0, 2.0 * tau) * C64::new(re, im);
    let e_minus = C64::from_polar(1.0, -2.0 * tau) * C64::new(re, -im);
    (e0, e_plus, e_minus)
}

/// Eigenvalues `e₀, e₊, e₋` of `M_λ` other than 1, to order `λ²`.
pub fn sf_quadratic_eigs(ff: &FormFactor, tau: f64, lambda: f64) -> Result<(C64, C64, C64)> {
    let q = quadratic_integrals(ff, tau)?;
    Ok(quadratic_eigs_from(&q, tau, lambda))
}

/// The four-variable entropy integral
/// `∫ f(r₁,r₂) f(r₃,r₄) (r₂+r₃−r₁−r₄)(e^{−β(r₁+r₄)} − e^{−β(r₂+r₃)})`
/// summed directly on a tensor grid.
fn entropy_tensor(ff: &FormFactor, tau: f64) -> Result<f64> {
    let cutoff = ff.cutoff()?;
    let width = 2.5f64.min(PI / tau);
    let grid = Grid::new(cutoff, (cutoff / width).ceil() as usize, TENSOR_ORDER);
    let n = grid.x.len();
    let g: Vec<f64> = grid.x.iter().map(|&r| ff.norm_sq_beta(r)).collect();
    let e: Vec<f64> = grid.x.iter().map(|&r| (-ff.beta * r).exp()).collect();
    // pair tables for (r₃, r₄); pairs with negligible weight are dropped
    let mut wf = Vec::with_capacity(n * n);
    let mut q = Vec::with_capacity(n * n);
    let mut e3 = Vec::with_capacity(n * n);
    let mut e4 = Vec::with_capacity(n * n);
    let mut wmax: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let (x, y) = (grid.x[i], grid.x[j]);
            let weight = grid.w[i] * grid.w[j] * g[i] * g[j] * sinc2(tau * (2.0 - x + y) / 2.0);
            wmax = wmax.max(weight);
            wf.push(weight);
            q.push(x - y);
            e3.push(e[i]);
            e4.push(e[j]);
        }
    }
    let keep: Vec<usize> = (0..n * n).filter(|&k| wf[k] > 1e-18 * wmax).collect();
    let (wf, q, e3, e4): (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) =
        (pick(&wf, &keep), pick(&q, &keep), pick(&e3, &keep), pick(&e4, &keep));
    let mut total = 0.0;
    for k in 0..keep.len() {
        let (p, e1, e2) = (-q[k], e3[k], e4[k]);
        let mut inner = 0.0;
        for l in 0..keep.len() {
            inner += wf[l] * (p + q[l]) * (e1 * e4[l] - e2 * e3[l]);
        }
        total += wf[k] * inner;
    }
    Ok(total)
}

fn pick(v: &[f64], keep: &[usize]) -> Vec<f64> {
    keep.iter().map(|&k| v[k]).collect()
}

/// The same integral expanded into products of two-variable integrals.
fn entropy_separable(q: &QuadraticIntegrals) -> f64 {
    // (y−x + u−v)(e^{−βx}e^{−βv} − e^{−βy}e^{−βu}) over (x,y) = (r₁,r₂), (u,v) = (r₃,r₄)
    let (a1, a2) = (q.alpha1, q.alpha2);
    q.a_x * a2 + a1 * (-q.a_y) - q.a_y * a1 - a2 * (-q.a_x)
}

/// The raw four-variable entropy integral of the quadratic model as `(separable, tensor_grid)`.
pub fn sf_quadratic_entropy_methods(ff: &FormFactor, tau: f64) -> Result<(f64, f64)> {
    let q = quadratic_integrals(ff, tau)?;
    Ok((entropy_separable(&q), entropy_tensor(ff, tau)?))
}

/// Leading-order asymptotic entropy production of the quadratic model, evaluated two ways.
pub fn sf_quadratic_entropy(ff: &FormFactor, tau: f64, lambda: f64) -> Result<f64> {
    let q = quadratic_integrals(ff, tau)?;
    quadratic_entropy_from(ff, &q, tau, lambda)
}

fn quadratic_entropy_from(ff: &FormFactor, q: &QuadraticIntegrals, tau: f64, lambda: f64) -> Result<f64> {
    let sum = q.alpha1 + q.alpha2;
    if sum <= 0.0 {
        return Err(Error::Precondition("alpha1 + alpha2 = 0: no effective coupling".into()));
    }
    let sep = entropy_separable(q);
    let tensor = entropy_tensor(ff, tau)?;
    if (sep - tensor).abs() > DUAL_METHOD_TOL * sep.abs().max(f64::MIN_POSITIVE) {
        return Err(Error::Quadrature(format!("entropy integral: separable {sep:.10e} vs tensor grid {tensor:.10e}")));
    }
    let ds = lambda * lambda * ff.beta * tau / (2.0 * sum) * sep;
    if ds < -1e-12 {
        return Err(Error::Quadrature(format!("negative entropy production {ds:e}")));
    }
    Ok(ds.max(0.0))
}

/// All leading-order quantities of the quadratic spin-fermion model.
pub fn sf_quadratic_all(ff: &FormFactor, tau: f64, lambda: f64) -> Result<PerturbativeResult> {
    let q = quadratic_integrals(ff, tau)?;
    let (e0, e_plus, e_minus) = quadratic_eigs_from(&q, tau, lambda);
    let ds = quadratic_entropy_from(ff, &q, tau, lambda)?;
    Ok(assemble("sf-quadratic", ff, tau, lambda, q.alpha1, q.alpha2, (e0, e_plus, e_minus), ds))
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    model: &str,
    ff: &FormFactor,
    tau: f64,
    lambda: f64,
    alpha1: f64,
    alpha2: f64,
    eigs: (C64, C64, C64),
    ds: f64,
) -> PerturbativeResult {
    let sum = alpha1 + alpha2;
    PerturbativeResult {
        model: model.into(),
        tau,
        lambda,
        beta: ff.beta,
        alpha1,
        alpha2,
        gamma_leading: tau * tau * sum * lambda * lambda / 2.0,
        e0: eigs.0,
        e_plus: eigs.1,
        e_minus: eigs.2,
        omega_plus_diag: [alpha1 / sum, alpha2 / sum],
        ds_plus_leading: ds,
        warnings: lambda_warnings(lambda, Some(ff)),
    }
}

/// All leading-order quantities of the linear spin-fermion model.
pub fn sf_linear_all(ff: &FormFactor, tau: f64, lambda: f64) -> Result<PerturbativeResult> {
    check_tau(tau)?;
    let cutoff = ff.cutoff()?;
    let beta = ff.beta;
    let sm = |r: f64| sinc2(tau * (r - 2.0) / 2.0);
    let sp = |r: f64| sinc2(tau * (r + 2.0) / 2.0);
    let v = gated(cutoff, tau, |grid| {
        let n = grid.x.len();
        let g: Vec<f64> = grid.x.iter().map(|&r| ff.norm_sq_beta(r)).collect();
        let e: Vec<f64> = grid.x.iter().map(|&r| (-beta * r).exp()).collect();
        let (m, p): (Vec<f64>, Vec<f64>) = grid.x.iter().map(|&r| (sm(r), sp(r))).unzip();
        let mut acc = [0.0; 5];
        for i in 0..n {
            let (r, wg) = (grid.x[i], grid.w[i] * g[i]);
            acc[0] += wg * (e[i] * m[i] + p[i]);
            acc[1] += wg * (e[i] * p[i] + m[i]);
            acc[2] += grid.w[i]
                * ff.norm_sq(r)
                * (one_minus_sinc_over(2.0 - r, tau) + one_minus_sinc_over(2.0 + r, tau));
            for j in 0..n {
                let rp = grid.x[j];
                let ww = wg * grid.w[j] * g[j];
                acc[3] += ww * m[i] * p[j] * (r + rp) * (1.0 - e[i] * e[j]);
                acc[4] += ww * (rp - r) * (e[i] - e[j]) * (m[i] * m[j] + p[i] * p[j]);
            }
        }
        acc
    })?;
    let (alpha1, alpha2) = (v[0], v[1]);
    let sum = alpha1 + alpha2;
    if sum <= 0.0 {
        return Err(Error::Precondition("alpha1 + alpha2 = 0: no effective coupling".into()));
    }
    let l2 = lambda * lambda;
    let e0 = C64::new(1.0 - l2 * tau * tau * sum, 0.0);
    let re = 1.0 - l2 * tau * tau * sum / 2.0;
    let im = l2 * tau * tau * v[2];
    let e_plus = C64::from_polar(1.0, 2.0 * tau) * C64::new(re, im);
    let e_minus = C64::from_polar(1.0, -2.0 * tau) * C64::new(re, -im);
    let ds = l2 * beta * tau / sum * (v[3] + 0.5 * v[4]);
    Ok(assemble("sf-linear", ff, tau, lambda, alpha1, alpha2, (e0, e_plus, e_minus), ds.max(0.0)))
}

/// Leading-order data of the spin-spin chain with `h_S = diag(0, E_S)`, `h_E = diag(0, E_E)` and
/// interaction `I ⊗ a* + I* ⊗ a`, where `I = [[a, b], [c, d]]` in the eigenbasis of `h_S`.
pub fn spinspin_oracle(
    e_s: f64,
    e_e: f64,
    beta_e: f64,
    tau: f64,
    lambda: f64,
    coupling: &ComplexMatrix,
) -> Result<PerturbativeResult> {
    if coupling.rows() != 2 || coupling.cols() != 2 {
        return Err(Error::InvalidInput("coupling must be 2x2".into()));
    }
    if !tau.is_finite() || tau <= 0.0 {
        return Err(Error::InvalidInput(format!("tau must be positive, got {tau}")));
    }
    let phase = tau * e_e / PI;
    if (phase - phase.round()).abs() * PI <= RESONANCE_TOL {
        return Err(Error::Precondition(format!("tau*E_E = {} is resonant (in pi*Z)", tau * e_e)));
    }
    let (a, b, c, d) = (coupling[(0, 0)], coupling[(0, 1)], coupling[(1, 0)], coupling[(1, 1)]);
    let q = (-beta_e * e_e).exp();
    let s_minus = sinc2(tau * (e_e - e_s) / 2.0);
    let s_plus = sinc2(tau * (e_e + e_s) / 2.0);
    let s_e = sinc2(tau * e_e / 2.0);
    let (b2, c2) = (b.norm_sqr(), c.norm_sqr());
    let alpha1 = b2 * s_minus + q * c2 * s_plus;
    let alpha2 = q * b2 * s_minus + c2 * s_plus;
    let sum = alpha1 + alpha2;
    if sum <= 1e-14 * (1.0 + b2 + c2) {
        return Err(Error::Precondition(
            "alpha1 + alpha2 = 0: neither b nor c couples the ground and excited states off resonance".into(),
        ));
    }
    let t2 = tau * tau;
    let l2 = lambda * lambda;
    let diag_spread = (a - d).norm_sqr();
    let gamma0 = (t2 * sum / (1.0 + q)).min(t2 * sum / (2.0 * (1.0 + q)) + t2 / 2.0 * s_e * diag_spread);

    let e0 = C64::new(1.0 - l2 * t2 * sum / (1.0 + q), 0.0);
    let re = 1.0 - l2 * t2 / (2.0 * (1.0 + q)) * (sum + (1.0 + q) * s_e * diag_spread);
    let shift = |x: f64| one_minus_sinc_over(x, tau) / tau;
    let imag_part = |sign: f64| {
        // Im(a·conj(d)); checked against the exact reduced map for complex a, d
        let ad = (a * d.conj()).im;
        l2 * t2 / (1.0 + q)
            * sign
            * ((1.0 - q) * shift(e_e) * (a.norm_sqr() - d.norm_sqr()) + (1.0 - q) * s_e * ad
                - (1.0 + q) * shift(e_e - e_s) * b2
                + (1.0 + q) * shift(e_e + e_s) * c2)
    };
    let e_plus = C64::from_polar(1.0, tau * e_s) * C64::new(re, imag_part(1.0));
    let e_minus = C64::from_polar(1.0, -tau * e_s) * C64::new(re, imag_part(-1.0));

    let bracket = b2 * (a.norm_sqr() + q * d.norm_sqr()) * s_minus * s_e
        + c2 * (q * a.norm_sqr() + d.norm_sqr()) * s_plus * s_e
        + 2.0 * b2 * c2 * (1.0 + q) * s_minus * s_plus;
    let ds = l2 * beta_e * tau * e_e * (1.0 - q) / (sum * (1.0 + q)) * bracket;

    Ok(PerturbativeResult {
        model: "spin-spin".into(),
        tau,
        lambda,
        beta: beta_e,
        alpha1,
        alpha2,
        gamma_leading: gamma0 * l2,
        e0,
        e_plus,
        e_minus,
        omega_plus_diag: [alpha1 / sum, alpha2 / sum],
        ds_plus_leading: ds,
        warnings: lambda_warnings(lambda, None),
    })
}
