//! Exact density-matrix simulation of `S` plus a finite chain.
//!
//! Factor 0 is the system, factor `k ≥ 1` is chain element `k`. During
//! `[(k−1)τ, kτ)` the system interacts with element `k`; every other element
//! evolves freely.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gns::RepeatedInteractionModel;
use crate::numerics::{
    apply_local_cols, apply_local_rows, eigh, expm, kron, logm_psd, partial_trace, ComplexMatrix, FactorShape,
};
use crate::reduced::{rias_expectation, InstantObservable, ReducedSpectralData};
use crate::C64;

/// Largest `d_S · d_E^N` for which the density matrix is stored.
pub const MAX_CHAIN_DIM: usize = 1 << 14;

/// Relative slack when deciding which interval a clock value belongs to.
const CLOCK_EPS: f64 = 1e-12;

/// Spectral floor for matrix logarithms of states.
const LOG_FLOOR: f64 = 1e-300;

/// The state of `S` and `N` chain elements at time `clock`.
///
/// Free evolution of chain elements is applied lazily: `frame.pending[k]` is
/// the free-evolution time element `k` still owes. It is settled before the
/// element interacts and applied to reduced matrices when the element is read.
#[derive(Debug, Clone)]
pub struct ChainState<'a> {
    frame: Frame,
    pub n_elements: usize,
    /// Completed interactions `m(t)`.
    pub step: usize,
    pub clock: f64,
    pub model: &'a RepeatedInteractionModel,
    /// `Tr ρ log ρ`, conserved by the unitary evolution.
    pub neg_entropy: f64,
}

fn check_density(rho: &ComplexMatrix, what: &str) -> Result<()> {
    crate::error::check_hermitian(rho, what, 1e-10)?;
    let tr = rho.trace();
    if (tr - C64::new(1.0, 0.0)).norm() > 1e-10 {
        return Err(Error::InvalidInput(format!("{what} has trace {tr}")));
    }
    let min = eigh(rho)?.values[0];
    if min < -1e-8 {
        return Err(Error::InvalidInput(format!("{what} has negative eigenvalue {min:.3e}")));
    }
    Ok(())
}

/// `Tr ρ log ρ` for a small density matrix.
fn neg_entropy_of(rho: &ComplexMatrix) -> Result<f64> {
    let e = eigh(rho)?;
    Ok(e.values.iter().filter(|&&x| x > LOG_FLOOR).map(|&x| x * x.ln()).sum())
}

/// `e^{−βh}/Z`
pub fn gibbs_state(h: &ComplexMatrix, beta: f64) -> Result<ComplexMatrix> {
    let e = eigh(h)?;
    let e0 = e.values[0];
    let g = e.apply(|x| C64::new((-beta * (x - e0)).exp(), 0.0));
    let z = g.trace().re;
    Ok(g.scale_real(1.0 / z).hermitian_part())
}

fn chain_shape(d_s: usize, d_e: usize, n: usize) -> Result<FactorShape> {
    let mut dims = vec![d_s];
    dims.extend(std::iter::repeat_n(d_e, n));
    Ok(FactorShape::new(dims)?)
}

fn chain_dim(d_s: usize, d_e: usize, n: usize) -> Option<usize> {
    (0..n).try_fold(d_s, |acc, _| acc.checked_mul(d_e))
}

/// `ρ = rho_s_init ⊗ ρ_{β_E}^{⊗N}`.
pub fn init_chain<'a>(model: &'a RepeatedInteractionModel, n: usize, rho_s_init: &ComplexMatrix) -> Result<ChainState<'a>> {
    let (d_s, d_e) = (model.d_s(), model.d_e());
    let dim = chain_dim(d_s, d_e, n).unwrap_or(usize::MAX);
    if dim > MAX_CHAIN_DIM {
        return Err(Error::Overflow { required: dim, limit: MAX_CHAIN_DIM });
    }
    if rho_s_init.rows() != d_s || rho_s_init.cols() != d_s {
        return Err(Error::InvalidInput(format!("initial system state must be {d_s}x{d_s}")));
    }
    check_density(rho_s_init, "initial system state")?;
    let g = model.sys_e.gibbs();
    let mut rho = rho_s_init.clone();
    for _ in 0..n {
        rho = kron(&rho, &g);
    }
    let neg_entropy = neg_entropy_of(rho_s_init)? + n as f64 * neg_entropy_of(&g)?;
    let frame = Frame { x: rho, pending: vec![0.0; n + 1] };
    Ok(ChainState { frame, n_elements: n, step: 0, clock: 0.0, model, neg_entropy })
}

/// Index of the interval containing `t`, i.e. `m(t) = ⌊t/τ⌋` with a small tolerance.
pub fn interval_of(t: f64, tau: f64) -> usize {
    ((t / tau) * (1.0 + CLOCK_EPS) + CLOCK_EPS).floor().max(0.0) as usize
}

/// An operator on the chain space together with the free evolution each element still owes.
#[derive(Debug, Clone)]
struct Frame {
    x: ComplexMatrix,
    pending: Vec<f64>,
}

fn coupled_hamiltonian(model: &RepeatedInteractionModel) -> ComplexMatrix {
    let (d_s, d_e) = (model.d_s(), model.d_e());
    &(&kron(&model.sys_s.h, &ComplexMatrix::identity(d_e)) + &kron(&ComplexMatrix::identity(d_s), &model.sys_e.h))
        + &model.physical_v().scale_real(model.lambda)
}

fn propagator(h: &ComplexMatrix, delta: f64) -> Result<ComplexMatrix> {
    Ok(expm(&h.scale(C64::new(0.0, -delta)))?)
}

fn conjugate_local(x: &ComplexMatrix, shape: &FactorShape, u: &ComplexMatrix, targets: &[usize]) -> Result<ComplexMatrix> {
    let y = apply_local_rows(u, x, shape, targets)?;
    Ok(apply_local_cols(&u.adjoint(), &y, shape, targets)?)
}

impl Frame {
    /// Evolves from `from` to `to`.
    fn evolve(&mut self, model: &RepeatedInteractionModel, shape: &FactorShape, from: f64, to: f64) -> Result<()> {
        let tau = model.tau;
        let h = coupled_hamiltonian(model);
        let full = propagator(&h, tau)?;
        let mut clock = from;
        while to - clock > CLOCK_EPS * tau.max(to) {
            let m = interval_of(clock, tau);
            let end = (((m + 1) as f64) * tau).min(to);
            let delta = end - clock;
            let k = m + 1;
            self.settle(model, shape, k)?;
            let u = if (delta - tau).abs() <= CLOCK_EPS * tau { full.clone() } else { propagator(&h, delta)? };
            self.x = conjugate_local(&self.x, shape, &u, &[0, k])?;
            for (j, p) in self.pending.iter_mut().enumerate().skip(1) {
                if j != k {
                    *p += delta;
                }
            }
            clock = end;
        }
        Ok(())
    }

    /// Applies the free evolution owed by element `k`.
    fn settle(&mut self, model: &RepeatedInteractionModel, shape: &FactorShape, k: usize) -> Result<()> {
        if self.pending[k] != 0.0 {
            let u = propagator(&model.sys_e.h, self.pending[k])?;
            self.x = conjugate_local(&self.x, shape, &u, &[k])?;
            self.pending[k] = 0.0;
        }
        Ok(())
    }

    /// Reduced matrix on `factors` in the true (not lazily rotated) frame.
    fn reduced(&self, model: &RepeatedInteractionModel, shape: &FactorShape, factors: &[usize]) -> Result<ComplexMatrix> {
        let red = partial_trace(&self.x, shape, factors)?;
        let mut u = ComplexMatrix::identity(1);
        for &f in factors {
            let local = if f == 0 || self.pending[f] == 0.0 {
                ComplexMatrix::identity(shape.dims()[f])
            } else {
                propagator(&model.sys_e.h, self.pending[f])?
            };
            u = kron(&u, &local);
        }
        Ok(&(&u * &red) * &u.adjoint())
    }
}

impl<'a> ChainState<'a> {
    pub fn shape(&self) -> FactorShape {
        chain_shape(self.model.d_s(), self.model.d_e(), self.n_elements).expect("validated on init")
    }

    /// The state at time `t ≥ clock`.
    pub fn evolve_to(&self, t: f64) -> Result<ChainState<'a>> {
        let tau = self.model.tau;
        if t < self.clock - CLOCK_EPS * tau {
            return Err(Error::InvalidInput(format!("cannot evolve backwards from {} to {t}", self.clock)));
        }
        if t > self.n_elements as f64 * tau * (1.0 + CLOCK_EPS) {
            return Err(Error::Capacity(format!(
                "time {t} needs more than the {} available chain elements",
                self.n_elements
            )));
        }
        let mut frame = self.frame.clone();
        frame.evolve(self.model, &self.shape(), self.clock, t)?;
        Ok(ChainState { frame, step: interval_of(t, tau), clock: t.max(self.clock), ..self.clone() })
    }

    /// In-place variant of [`evolve_to`](Self::evolve_to).
    pub fn advance_to(&mut self, t: f64) -> Result<()> {
        let tau = self.model.tau;
        if t < self.clock - CLOCK_EPS * tau {
            return Err(Error::InvalidInput(format!("cannot evolve backwards from {} to {t}", self.clock)));
        }
        if t > self.n_elements as f64 * tau * (1.0 + CLOCK_EPS) {
            return Err(Error::Capacity(format!(
                "time {t} needs more than the {} available chain elements",
                self.n_elements
            )));
        }
        let shape = self.shape();
        self.frame.evolve(self.model, &shape, self.clock, t)?;
        self.step = interval_of(t, tau);
        self.clock = t.max(self.clock);
        Ok(())
    }

    /// The full density matrix on `C^{d_S} ⊗ (C^{d_E})^{⊗N}`.
    pub fn rho(&self) -> ComplexMatrix {
        let shape = self.shape();
        let mut f = self.frame.clone();
        for k in 1..=self.n_elements {
            f.settle(self.model, &shape, k).expect("shape is consistent");
        }
        f.x
    }

    /// Reduced density matrix on `factors`, in the given order.
    pub fn reduced(&self, factors: &[usize]) -> Result<ComplexMatrix> {
        self.frame.reduced(self.model, &self.shape(), factors)
    }

    /// `Tr(ρ · op)` with `op` acting on the listed factors.
    pub fn expect_local(&self, op: &ComplexMatrix, factors: &[usize]) -> Result<C64> {
        let red = self.reduced(factors)?;
        if op.rows() != red.rows() || op.cols() != red.cols() {
            return Err(Error::InvalidInput(format!(
                "operator is {}x{}, factors span dimension {}",
                op.rows(),
                op.cols(),
                red.rows()
            )));
        }
        Ok((&red * op).trace())
    }

    /// Reduced state of the system.
    pub fn rho_s(&self) -> ComplexMatrix {
        self.reduced(&[0]).expect("factor 0 exists")
    }

    /// Expectation of an instantaneous observable at the current clock.
    pub fn expect(&self, obs: &InstantObservable) -> Result<C64> {
        let (ops, factors) = place_observable(obs, self.step, self.n_elements, self.model.d_s(), self.model.d_e())?;
        let op = ops.iter().skip(1).fold(ops[0].clone(), |acc, o| kron(&acc, o));
        self.expect_local(&op, &factors)
    }

    /// `Tr[ρ(kτ) λ(v_{k+1} − v_k)]` at `clock = kτ`, `1 ≤ k < N`.
    pub fn energy_jump(&self) -> Result<f64> {
        let tau = self.model.tau;
        let k = (self.clock / tau).round() as usize;
        if (self.clock - k as f64 * tau).abs() > CLOCK_EPS * tau.max(self.clock) {
            return Err(Error::InvalidInput(format!("energy jumps occur at multiples of τ, clock is {}", self.clock)));
        }
        if k == 0 || k >= self.n_elements {
            return Err(Error::InvalidInput(format!("jump index {k} outside 1..{}", self.n_elements)));
        }
        let v = self.model.physical_v().scale_real(self.model.lambda);
        let next = self.expect_local(&v, &[0, k + 1])?;
        let prev = self.expect_local(&v, &[0, k])?;
        Ok((next - prev).re)
    }

    /// `Tr ρ(log ρ − log ρ₀)` by diagonalizing `ρ`.
    pub fn relative_entropy(&self, beta_s: f64, beta_e: f64) -> Result<f64> {
        // the lazy frame differs from ρ by a unitary, which leaves the spectrum alone
        let ent = neg_entropy_of(&self.frame.x)?;
        Ok(ent - self.cross_term(beta_s, beta_e)?)
    }

    /// As [`relative_entropy`](Self::relative_entropy), with `Tr ρ log ρ`
    /// taken from the initial state (it is invariant under the unitary evolution).
    pub fn relative_entropy_unitary(&self, beta_s: f64, beta_e: f64) -> Result<f64> {
        Ok(self.neg_entropy - self.cross_term(beta_s, beta_e)?)
    }

    /// `Tr ρ log ρ₀`; `log ρ₀` is a sum of one-factor terms.
    fn cross_term(&self, beta_s: f64, beta_e: f64) -> Result<f64> {
        let log_s = logm_psd(&gibbs_state(&self.model.sys_s.h, beta_s)?, LOG_FLOOR)?;
        let log_e = logm_psd(&gibbs_state(&self.model.sys_e.h, beta_e)?, LOG_FLOOR)?;
        let mut total = self.expect_local(&log_s, &[0])?.re;
        for k in 1..=self.n_elements {
            total += self.expect_local(&log_e, &[k])?.re;
        }
        Ok(total)
    }
}

/// Operators and factors for an instantaneous observable after `step` interactions.
fn place_observable(
    obs: &InstantObservable,
    step: usize,
    n: usize,
    d_s: usize,
    d_e: usize,
) -> Result<(Vec<ComplexMatrix>, Vec<usize>)> {
    obs.validate(d_s, d_e)?;
    let ell = obs.ell();
    let p = obs.a_probe.len();
    if step < ell {
        return Err(Error::InvalidInput(format!("{ell} past elements requested after only {step} interactions")));
    }
    let first = step + 1 - ell;
    if p >= first {
        return Err(Error::InvalidInput(format!("{p} probe elements overlap the interacting window starting at {first}")));
    }
    let last = step + 1 + obs.b_future.len();
    if last > n {
        return Err(Error::InvalidInput(format!("observable reaches element {last} of a {n}-element chain")));
    }
    let mut ops = vec![obs.a_s.clone()];
    let mut factors = vec![0];
    for (i, a) in obs.a_probe.iter().enumerate() {
        ops.push(a.clone());
        factors.push(i + 1);
    }
    let window = obs.b_past.iter().chain(std::iter::once(&obs.b_zero)).chain(&obs.b_future);
    for (j, b) in window.enumerate() {
        ops.push(b.clone());
        factors.push(first + j);
    }
    Ok((ops, factors))
}

/// `C(t) = Tr[ρ(0) A α^t(O)]` for `A` on the system and the first `q` elements.
pub fn correlation(
    model: &RepeatedInteractionModel,
    n: usize,
    rho_init: &ComplexMatrix,
    a_pre: &ComplexMatrix,
    q: usize,
    obs: &InstantObservable,
    t: f64,
) -> Result<C64> {
    if q > n {
        return Err(Error::InvalidInput(format!("probe spans {q} elements of a {n}-element chain")));
    }
    let state = init_chain(model, n, rho_init)?;
    if t > n as f64 * model.tau * (1.0 + CLOCK_EPS) || t < 0.0 {
        return Err(Error::Capacity(format!("time {t} outside [0, {}τ]", n)));
    }
    let shape = state.shape();
    let targets: Vec<usize> = (0..=q).collect();
    let weighted = apply_local_cols(a_pre, &state.frame.x, &shape, &targets)?;
    let mut frame = Frame { x: weighted, pending: vec![0.0; n + 1] };
    frame.evolve(model, &shape, 0.0, t)?;
    let step = interval_of(t, model.tau);
    let (ops, factors) = place_observable(obs, step, n, model.d_s(), model.d_e())?;
    let op = ops.iter().skip(1).fold(ops[0].clone(), |acc, o| kron(&acc, o));
    let red = frame.reduced(model, &shape, &factors)?;
    Ok((&red * &op).trace())
}

/// `ΔE(t) = Σ_{k ≤ m(t)} j(k)`, with `jumps[k−1] = j(k)`.
pub fn cumulative_energy(jumps: &[f64], t: f64, tau: f64) -> f64 {
    let m = interval_of(t, tau);
    jumps.iter().take(m).sum()
}

/// One interaction in the reduced picture: `Tr_E[U (ρ_S ⊗ ρ_{β_E}) U†]`.
pub fn cptp_step(model: &RepeatedInteractionModel, rho_s: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (d_s, d_e) = (model.d_s(), model.d_e());
    if rho_s.rows() != d_s || rho_s.cols() != d_s {
        return Err(Error::InvalidInput(format!("system state must be {d_s}x{d_s}")));
    }
    let u = propagator(&coupled_hamiltonian(model), model.tau)?;
    let joint = kron(rho_s, &model.sys_e.gibbs());
    let out = &(&u * &joint) * &u.adjoint();
    let shape = FactorShape::new(vec![d_s, d_e])?;
    Ok(partial_trace(&out, &shape, &[0])?)
}

/// One sample of a simulated trajectory against the asymptotic prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub value: C64,
    pub e_plus: C64,
    pub abs_err: f64,
}

/// Samples `E(t)` and `E₊(t)` at `per_interval` evenly spaced times per
/// interval over `[0, steps·τ)`, from the first time the observable fits.
pub fn trajectory(
    model: &RepeatedInteractionModel,
    data: &ReducedSpectralData,
    n: usize,
    rho_s_init: &ComplexMatrix,
    obs: &InstantObservable,
    steps: usize,
    per_interval: usize,
) -> Result<Vec<TrajectoryRow>> {
    let reach = steps + obs.b_future.len();
    if reach > n {
        return Err(Error::Capacity(format!(
            "{steps} steps with {} future elements need {reach} chain elements, only {n} available",
            obs.b_future.len()
        )));
    }
    if per_interval == 0 {
        return Err(Error::InvalidInput("at least one sample per interval is required".into()));
    }
    let tau = model.tau;
    let mut state = init_chain(model, n, rho_s_init)?;
    let mut rows = Vec::new();
    for m in obs.ell()..steps {
        for i in 0..per_interval {
            let s = tau * i as f64 / per_interval as f64;
            let t = m as f64 * tau + s;
            state.advance_to(t)?;
            let value = state.expect(obs)?;
            let e_plus = rias_expectation(model, data, obs, s)?;
            rows.push(TrajectoryRow { t, value, e_plus, abs_err: (value - e_plus).norm() });
        }
    }
    Ok(rows)
}
