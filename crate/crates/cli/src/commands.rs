use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use ria_core::chainsim::{cptp_step, trajectory, TrajectoryRow};
use ria_core::gns::RepeatedInteractionModel;
use ria_core::numerics::{ComplexMatrix, Tolerances};
use ria_core::reduced::{
    analyze_spectrum, factorization_check, fit_decay_rate, power_bound_check, power_convergence, rias_expectation,
    reduced_map, InstantObservable, ReducedSpectralData,
};
use ria_core::sforacle::{
    sf_linear_all, sf_quadratic_all, sf_quadratic_entropy_methods, sinc, spinspin_oracle, FormFactor,
    FormFactorFamily, PerturbativeResult, DUAL_METHOD_TOL,
};
use ria_core::thermo::{thermo_report, ThermoReport};
use ria_core::{NotErgodicReason, C64};

use crate::config::{ModelConfig, ModelKind};
use crate::error::{CliError, CliResult, EXIT_NOT_ERGODIC, EXIT_VERIFY_FAILED};

/// Text to emit and the process exit code.
pub struct Outcome {
    pub body: String,
    pub code: u8,
}

impl Outcome {
    fn ok(body: String) -> Self {
        Self { body, code: 0 }
    }
}

fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Input(format!("serialization failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

fn spectral_data(model: &RepeatedInteractionModel, tol: &Tolerances) -> CliResult<ReducedSpectralData> {
    Ok(analyze_spectrum(&reduced_map(model)?, &model.sys_s.omega, tol)?)
}

/// Spectral gap, written as the string `"inf"` when no other eigenvalue exists.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Gap {
    Finite(f64),
    Infinite(InfTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InfTag {
    #[serde(rename = "inf")]
    Inf,
}

impl From<f64> for Gap {
    fn from(g: f64) -> Self {
        if g.is_finite() {
            Gap::Finite(g)
        } else {
            Gap::Infinite(InfTag::Inf)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<C64>,
    pub ergodic: bool,
    pub not_ergodic_reason: Option<NotErgodicReason>,
    pub gamma: Gap,
    pub subdominant_modulus: f64,
    pub omega_star: Option<Vec<C64>>,
}

pub fn spectrum(cfg: &ModelConfig, tol: &Tolerances) -> CliResult<Outcome> {
    let data = spectral_data(&cfg.model()?, tol)?;
    let report = SpectrumReport {
        eigenvalues: data.eigenvalues.clone(),
        ergodic: data.ergodic,
        not_ergodic_reason: data.not_ergodic_reason,
        gamma: data.gamma.into(),
        subdominant_modulus: data.subdominant_modulus,
        omega_star: data.omega_star.clone(),
    };
    let code = if data.ergodic { 0 } else { EXIT_NOT_ERGODIC };
    Ok(Outcome { body: to_json(&report)?, code })
}

/// Projector on the first basis vector of the system.
fn default_observable(model: &RepeatedInteractionModel) -> InstantObservable {
    let mut p = ComplexMatrix::zeros(model.d_s(), model.d_s());
    p[(0, 0)] = C64::new(1.0, 0.0);
    InstantObservable::system(p, model.d_e())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticSample {
    pub s: f64,
    pub value: C64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticReport {
    pub rho_plus: ComplexMatrix,
    /// `E₊(s)` over one interaction period.
    pub samples: Vec<AsymptoticSample>,
}

pub fn asymptotic(
    cfg: &ModelConfig,
    tol: &Tolerances,
    obs: Option<InstantObservable>,
    per_interval: usize,
) -> CliResult<Outcome> {
    let model = cfg.model()?;
    let data = spectral_data(&model, tol)?;
    data.require_ergodic()?;
    let obs = obs.unwrap_or_else(|| default_observable(&model));
    let samples = (0..per_interval.max(1))
        .map(|i| {
            let s = model.tau * i as f64 / per_interval.max(1) as f64;
            Ok(AsymptoticSample { s, value: rias_expectation(&model, &data, &obs, s)? })
        })
        .collect::<CliResult<Vec<_>>>()?;
    to_json(&AsymptoticReport { rho_plus: data.asymptotic_density()?, samples }).map(Outcome::ok)
}

pub fn simulate(
    cfg: &ModelConfig,
    tol: &Tolerances,
    chain: usize,
    steps: usize,
    obs: Option<InstantObservable>,
    per_interval: usize,
) -> CliResult<Outcome> {
    let model = cfg.model()?;
    let data = spectral_data(&model, tol)?;
    data.require_ergodic()?;
    let obs = obs.unwrap_or_else(|| default_observable(&model));
    let rho0 = cfg.initial_state(&model)?;
    let rows = trajectory(&model, &data, chain, &rho0, &obs, steps, per_interval)?;
    write_csv(&rows).map(Outcome::ok)
}

fn write_csv(rows: &[TrajectoryRow]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| CliError::Input(format!("csv output failed: {e}"));
    w.write_record(["t", "re_value", "im_value", "e_plus_re", "e_plus_im", "abs_err"]).map_err(fail)?;
    for r in rows {
        w.serialize((r.t, r.value.re, r.value.im, r.e_plus.re, r.e_plus.im, r.abs_err)).map_err(fail)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Input(format!("csv output failed: {e}")))?;
    String::from_utf8(bytes).map_err(|e| CliError::Input(e.to_string()))
}

pub fn thermo(cfg: &ModelConfig, tol: &Tolerances) -> CliResult<Outcome> {
    let model = cfg.model()?;
    let data = spectral_data(&model, tol)?;
    let report: ThermoReport = thermo_report(&model, &data)?;
    to_json(&report).map(Outcome::ok)
}

fn oracle_result(cfg: &ModelConfig) -> CliResult<PerturbativeResult> {
    match cfg.model_kind {
        ModelKind::SpinSpin => {
            let p = cfg.spin_spin.as_ref().expect("validated");
            Ok(spinspin_oracle(p.e_s, p.e_e, cfg.beta_e, cfg.tau, cfg.lambda, &p.coupling)?)
        }
        ModelKind::SfQuadratic => Ok(sf_quadratic_all(&cfg.form_factor()?, cfg.tau, cfg.lambda)?),
        ModelKind::SfLinear => Ok(sf_linear_all(&cfg.form_factor()?, cfg.tau, cfg.lambda)?),
        ModelKind::CustomFinite => Err(CliError::Input("no perturbative oracle exists for custom-finite models".into())),
    }
}

pub fn oracle(cfg: &ModelConfig) -> CliResult<Outcome> {
    to_json(&oracle_result(cfg)?).map(Outcome::ok)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, limit, passed: value <= limit }
    }

    fn at_least(name: &str, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, limit, passed: value >= limit }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub model_kind: ModelKind,
    pub checks: Vec<Check>,
    pub passed: bool,
}

pub fn verify(cfg: &ModelConfig, tol: &Tolerances, seed: Option<u64>) -> CliResult<Outcome> {
    let checks = if cfg.is_finite_model() { verify_finite(cfg, tol)? } else { verify_sf(cfg, seed)? };
    let passed = checks.iter().all(|c| c.passed);
    let report = VerifyReport { model_kind: cfg.model_kind, checks, passed };
    Ok(Outcome { body: to_json(&report)?, code: if passed { 0 } else { EXIT_VERIFY_FAILED } })
}

fn verify_finite(cfg: &ModelConfig, tol: &Tolerances) -> CliResult<Vec<Check>> {
    let model = cfg.model()?;
    let m = reduced_map(&model)?;
    let omega = &model.sys_s.omega;
    let fixed: f64 = m.matvec(omega).iter().zip(omega).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
    let mut checks = vec![Check::at_most("fixed_point", fixed, tol.fixed_point)];
    let data = analyze_spectrum(&m, omega, tol)?;
    data.require_ergodic()?;

    let radius = data.eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max);
    checks.push(Check::at_most("spectrum_in_unit_disk", radius, 1.0 + 1e-8));
    let tau = model.tau;
    let ts = [0.25 * tau, 0.5 * tau, tau, 2.0 * tau];
    checks.push(Check::at_most("power_bound", power_bound_check(&model, &ts, 500)?, 100.0));
    checks.push(Check::at_most("factorization", factorization_check(&model, tau, 0.5 * tau)?, 1e-8));

    // decay over roughly twenty e-folds, above the rounding floor
    if data.gamma.is_finite() && data.gamma <= 10.0 {
        let m_max = ((20.0 / data.gamma).ceil() as usize).clamp(4, 500);
        let rate = fit_decay_rate(&power_convergence(&data, m_max)?).unwrap_or(f64::NAN);
        let rel = (rate - data.gamma).abs() / data.gamma;
        checks.push(Check::at_most("gap_law", if rel.is_finite() { rel } else { f64::MAX }, 0.2));
    }

    let report = thermo_report(&model, &data)?;
    checks.push(Check::at_most("j_plus_forms", report.form_residual, tol.j_plus_forms));
    checks.push(Check::at_least("j_plus_nonnegative", report.j_plus_value, -1e-9));
    checks.push(Check::at_most("second_law", report.second_law_residual, 1e-12));

    let steps = if data.gamma.is_finite() { ((21.0 / data.gamma).ceil() as usize).clamp(500, 20_000) } else { 500 };
    let d = model.d_s();
    let mut rho = ComplexMatrix::identity(d).scale_real(1.0 / d as f64);
    for _ in 0..steps {
        rho = cptp_step(&model, &rho)?;
    }
    let dev = (&rho - &data.asymptotic_density()?).op_norm();
    checks.push(Check::at_most("cptp_duality", dev, 1e-8));
    Ok(checks)
}

fn verify_sf(cfg: &ModelConfig, seed: Option<u64>) -> CliResult<Vec<Check>> {
    let ff = cfg.form_factor()?;
    let r = oracle_result(cfg)?;
    let mut checks = Vec::new();
    if !ff.is_zero() {
        checks.push(Check::at_least("alpha1_positive", r.alpha1, f64::MIN_POSITIVE));
        checks.push(Check::at_least("alpha2_positive", r.alpha2, f64::MIN_POSITIVE));
    }
    // Re(e± e^{∓2iτ}) = 1 − γ_leading
    let gap = 1.0 - (r.e_plus * C64::from_polar(1.0, -2.0 * cfg.tau)).re;
    checks.push(Check::at_most("gap_realized", (gap - r.gamma_leading).abs(), 1e-12 * (1.0 + r.gamma_leading)));
    if cfg.model_kind == ModelKind::SfQuadratic {
        let (sep, grid) = sf_quadratic_entropy_methods(&ff, cfg.tau)?;
        let rel = (sep - grid).abs() / sep.abs().max(grid.abs()).max(f64::MIN_POSITIVE);
        checks.push(Check::at_most("entropy_dual_methods", rel, DUAL_METHOD_TOL));
    }
    if cfg.lambda != 0.0 && !ff.is_zero() && cfg.beta_e > 0.0 {
        checks.push(Check::at_least("ds_plus_positive", r.ds_plus_leading, f64::MIN_POSITIVE));
    }
    if let Some(seed) = seed {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mc, err) = monte_carlo_alphas(&ff, cfg.model_kind, cfg.tau, &mut rng);
        for (name, quad, est, se) in [("alpha1_monte_carlo", r.alpha1, mc[0], err[0]), ("alpha2_monte_carlo", r.alpha2, mc[1], err[1])] {
            checks.push(Check::at_most(name, (quad - est).abs(), 6.0 * se + 1e-9));
        }
    }
    Ok(checks)
}

const MC_SAMPLES: usize = 200_000;

/// Importance-sampled `α₁, α₂` and their standard errors, drawing radii from an exponential
/// density that dominates `‖g(r)‖²`.
fn monte_carlo_alphas(ff: &FormFactor, kind: ModelKind, tau: f64, rng: &mut impl Rng) -> ([f64; 2], [f64; 2]) {
    let rate = match ff.family {
        FormFactorFamily::Exponential { kappa, .. } => 2.0 * kappa,
        FormFactorFamily::Gaussian { sigma, .. } => 1.0 / sigma,
    };
    let mut draw = || {
        let r = -(1.0 - rng.random::<f64>()).ln() / rate;
        (r, ff.norm_sq_beta(r) / (rate * (-rate * r).exp()))
    };
    let sinc2 = |x: f64| sinc(x).powi(2);
    let beta = ff.beta;
    let (mut sum, mut sq) = ([0.0; 2], [0.0; 2]);
    for _ in 0..MC_SAMPLES {
        let f = match kind {
            ModelKind::SfLinear => {
                let (r, w) = draw();
                let (m, p) = (sinc2(tau * (r - 2.0) / 2.0), sinc2(tau * (r + 2.0) / 2.0));
                let e = (-beta * r).exp();
                [w * (e * m + p), w * (e * p + m)]
            }
            _ => {
                let ((x, wx), (y, wy)) = (draw(), draw());
                let f = wx * wy * sinc2(tau * (2.0 - x + y) / 2.0);
                [f * (-beta * x).exp(), f * (-beta * y).exp()]
            }
        };
        for k in 0..2 {
            sum[k] += f[k];
            sq[k] += f[k] * f[k];
        }
    }
    let n = MC_SAMPLES as f64;
    let mean = [sum[0] / n, sum[1] / n];
    let se = [0, 1].map(|k| ((sq[k] / n - mean[k] * mean[k]).max(0.0) / n).sqrt());
    (mean, se)
}
