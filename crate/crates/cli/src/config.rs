use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use ria_core::chainsim::gibbs_state;
use ria_core::gns::{build_gns_system, spin_spin_model, InteractionTerm, RepeatedInteractionModel, SpinSpinParams};
use ria_core::numerics::{ComplexMatrix, Tolerances};
use ria_core::sforacle::{FormFactor, FormFactorFamily};
use ria_core::Error;

use crate::error::{CliError, CliResult};

const HERMITIAN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    SpinSpin,
    CustomFinite,
    SfQuadratic,
    SfLinear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomBlock {
    #[serde(rename = "h_S")]
    pub h_s: ComplexMatrix,
    #[serde(rename = "h_E")]
    pub h_e: ComplexMatrix,
    pub v_terms: Vec<InteractionTerm>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SfBlock {
    /// Defaults to `‖g(r)‖² = e^{-r}`.
    #[serde(default)]
    pub form_factor: Option<FormFactorFamily>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub model_kind: ModelKind,
    pub tau: f64,
    pub lambda: f64,
    #[serde(rename = "beta_S", default)]
    pub beta_s: f64,
    #[serde(rename = "beta_E")]
    pub beta_e: f64,
    #[serde(default)]
    pub spin_spin: Option<SpinSpinParams>,
    #[serde(default)]
    pub custom: Option<CustomBlock>,
    #[serde(default)]
    pub sf: Option<SfBlock>,
    /// Initial system state for simulations; the Gibbs state at `beta_S` if absent.
    #[serde(rename = "rho_S", default)]
    pub rho_s: Option<ComplexMatrix>,
}

pub fn read_json<T: DeserializeOwned>(path: &Path, what: &str) -> CliResult<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {what} {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("cannot parse {what} {}: {e}", path.display())))
}

pub fn load_tolerances(path: Option<&Path>) -> CliResult<Tolerances> {
    match path {
        Some(p) => read_json(p, "tolerance overrides"),
        None => Ok(Tolerances::default()),
    }
}

fn hermitian(m: &ComplexMatrix, what: &str) -> CliResult<ComplexMatrix> {
    if m.rows() != m.cols() {
        return Err(CliError::Input(format!("{what} must be square")));
    }
    let defect = m.hermiticity_defect();
    if defect > HERMITIAN_TOL {
        return Err(CliError::Input(format!("{what} is not Hermitian (defect {defect:.3e})")));
    }
    Ok((m + &m.adjoint()).scale_real(0.5))
}

impl ModelConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let cfg: Self = read_json(path, "config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> CliResult<()> {
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(CliError::Input(format!("tau must be positive, got {}", self.tau)));
        }
        if !self.lambda.is_finite() || !self.beta_s.is_finite() || !self.beta_e.is_finite() {
            return Err(CliError::Input("lambda, beta_S and beta_E must be finite".into()));
        }
        let missing = |block: &str| CliError::Input(format!("model_kind {:?} needs a \"{block}\" block", self.model_kind));
        match self.model_kind {
            ModelKind::SpinSpin if self.spin_spin.is_none() => Err(missing("spin_spin")),
            ModelKind::CustomFinite if self.custom.is_none() => Err(missing("custom")),
            _ => Ok(()),
        }
    }

    pub fn is_finite_model(&self) -> bool {
        matches!(self.model_kind, ModelKind::SpinSpin | ModelKind::CustomFinite)
    }

    pub fn model(&self) -> CliResult<RepeatedInteractionModel> {
        match self.model_kind {
            ModelKind::SpinSpin => {
                let p = self.spin_spin.as_ref().expect("validated");
                Ok(spin_spin_model(p, self.beta_s, self.beta_e, self.lambda, self.tau)?)
            }
            ModelKind::CustomFinite => {
                let c = self.custom.as_ref().expect("validated");
                let h_s = hermitian(&c.h_s, "h_S")?;
                let h_e = hermitian(&c.h_e, "h_E")?;
                let s = build_gns_system(&h_s, self.beta_s)?;
                let e = build_gns_system(&h_e, self.beta_e)?;
                Ok(RepeatedInteractionModel::new(s, e, c.v_terms.clone(), self.lambda, self.tau)?)
            }
            ModelKind::SfQuadratic | ModelKind::SfLinear => Err(CliError::Input(
                "spin-fermion models have infinite reservoirs; this command needs a finite model".into(),
            )),
        }
    }

    pub fn form_factor(&self) -> CliResult<FormFactor> {
        let family = self.sf.as_ref().and_then(|b| b.form_factor);
        let ff = match family {
            Some(f) => FormFactor::new(f, self.beta_e),
            None => FormFactor::default_with_beta(self.beta_e),
        };
        ff.map_err(|e| match e {
            Error::InvalidInput(msg) => CliError::Input(msg),
            e => e.into(),
        })
    }

    pub fn initial_state(&self, model: &RepeatedInteractionModel) -> CliResult<ComplexMatrix> {
        match &self.rho_s {
            Some(r) => {
                let d = model.d_s();
                if r.rows() != d || r.cols() != d {
                    return Err(CliError::Input(format!("rho_S must be {d}x{d}")));
                }
                hermitian(r, "rho_S")
            }
            None => Ok(gibbs_state(&model.sys_s.h, self.beta_s)?),
        }
    }
}
