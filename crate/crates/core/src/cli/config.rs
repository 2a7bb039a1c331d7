use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::construction::LinearModel;
use crate::harness::{Norm, Problem};
use crate::spectral::{GridSpec, InitialCondition, ModeSum, ModelKind, ModelSpec, SolveConfig, Stepper, TimeStep};
use crate::{Complex64, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Hyperbolize,
    Dispersion,
    Census,
    Solve,
    Converge,
    Reproduce,
}

impl Command {
    pub fn id(self) -> &'static str {
        match self {
            Command::Hyperbolize => "hyperbolize",
            Command::Dispersion => "dispersion",
            Command::Census => "census",
            Command::Solve => "solve",
            Command::Converge => "converge",
            Command::Reproduce => "reproduce",
        }
    }
}

/// Flat run configuration. Every key has a command-line flag of the same
/// name with `_` spelled `-`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    /// heat, linear-kdv, kdv, nls, camassa-holm (ch), kuramoto-sivashinsky
    /// (ks) or general-linear (linear).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    /// Upper end of a census range starting at `m`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma0: Option<i8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub taus: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_left: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_right: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hyperbolized: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stepper: Option<Stepper>,
    /// Stepper of original-model runs in `converge`; defaults to `stepper`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub original_stepper: Option<Stepper>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<TimeStep>,
    #[serde(rename = "T", alias = "t_final", skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snapshot_times: Option<Vec<f64>>,
    /// gaussian, nls-soliton, ch-pulse or mode (`e^{ikx}`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub soliton_alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dealias: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub norm: Option<Norm>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

pub const DEFAULT_OUT: &str = "out";

impl RunConfig {
    /// Parses a config document. A `meta.json` written by an earlier run is
    /// accepted through its `config` object.
    pub fn from_json_str(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Meta {
            config: RunConfig,
        }
        let value: Value = serde_json::from_str(text)?;
        if value.get("config").is_some_and(Value::is_object) {
            Ok(serde_json::from_str::<Meta>(text)?.config)
        } else {
            Ok(serde_json::from_str(text)?)
        }
    }

    /// `self` with every key set in `over` replaced.
    pub fn merged(&self, over: &RunConfig) -> Result<RunConfig> {
        let mut base = serde_json::to_value(self)?;
        let Value::Object(top) = serde_json::to_value(over)? else {
            unreachable!("RunConfig serializes to an object")
        };
        let map = base.as_object_mut().expect("RunConfig serializes to an object");
        map.extend(top);
        Ok(serde_json::from_value(base)?)
    }

    /// The config as echoed into `meta.json`: the output directory is left
    /// to the re-run.
    pub fn echo(&self) -> RunConfig {
        RunConfig {
            out: None,
            ..self.clone()
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
    }

    fn require<T: Copy>(v: Option<T>, key: &str) -> Result<T> {
        v.ok_or_else(|| Error::InvalidConfig(format!("missing required key {key:?}")))
    }

    pub fn tau(&self) -> Result<f64> {
        Self::require(self.tau, "tau")
    }

    pub fn m(&self) -> Result<usize> {
        Self::require(self.m, "m")
    }

    pub fn t_final(&self) -> Result<f64> {
        Self::require(self.t_final, "T")
    }

    fn is_general_linear(&self) -> bool {
        matches!(self.model.as_deref(), None | Some("general-linear" | "linear"))
    }

    /// The linear model from `m`, `sigma0` and `alpha`; `sigma0` defaults to
    /// the bounded sign and `alpha` to zero.
    pub fn linear_model(&self) -> Result<LinearModel> {
        let m = self.m()?;
        let sigma0 = self.sigma0.unwrap_or_else(|| LinearModel::natural_sigma0(m));
        let alpha = self.alpha.clone().unwrap_or_else(|| vec![0.0; m]);
        LinearModel::new(m, sigma0, alpha)
    }

    fn reject_linear_keys(&self, name: &str) -> Result<()> {
        for (key, set) in [
            ("m", self.m.is_some()),
            ("sigma0", self.sigma0.is_some()),
            ("alpha", self.alpha.is_some()),
        ] {
            if set {
                return Err(Error::InvalidConfig(format!("{key} does not apply to model {name}")));
            }
        }
        Ok(())
    }

    /// Catalog model; without `model` the linear model from `m` is used.
    pub fn model_kind(&self) -> Result<ModelKind> {
        if self.is_general_linear() {
            return ModelKind::from_name("general-linear", self.kappa, Some(self.linear_model()?));
        }
        let name = self.model.as_deref().expect("named model");
        self.reject_linear_keys(name)?;
        ModelKind::from_name(name, self.kappa, None)
    }

    /// Linear part used by `hyperbolize` and `dispersion`.
    pub fn linear_part(&self) -> Result<LinearModel> {
        let kind = self.model_kind()?;
        kind.linear_model()
            .ok_or_else(|| Error::InvalidConfig(format!("model {} has no linear relaxation system", kind.id())))
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec {
            x_left: self.x_left.unwrap_or(-16.0),
            x_right: self.x_right.unwrap_or(16.0),
            n: self.n.unwrap_or(256),
        }
    }

    pub fn initial_condition(&self, kind: &ModelKind) -> Result<InitialCondition> {
        let default = match kind {
            ModelKind::Nls { .. } => "nls-soliton",
            ModelKind::CamassaHolm => "ch-pulse",
            _ => "gaussian",
        };
        Ok(match self.initial.as_deref().unwrap_or(default) {
            "gaussian" => InitialCondition::Gaussian,
            "nls-soliton" => InitialCondition::NlsSoliton {
                alpha: self.soliton_alpha.unwrap_or(1.0),
            },
            "ch-pulse" => InitialCondition::ChPulse,
            "mode" => InitialCondition::Modes {
                modes: ModeSum::single(Self::require(self.k, "k")?, Complex64::new(1.0, 0.0)),
            },
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown initial condition {other:?} (expected gaussian, nls-soliton, ch-pulse or mode)"
                )))
            }
        })
    }

    pub fn solve_config(&self) -> Result<SolveConfig> {
        let kind = self.model_kind()?;
        let hyperbolized = self.hyperbolized.unwrap_or(false);
        let tau = if hyperbolized { self.tau()? } else { self.tau.unwrap_or(1.0) };
        let cfg = SolveConfig {
            initial: self.initial_condition(&kind)?,
            model: ModelSpec::new(kind, tau)?,
            hyperbolized,
            grid: self.grid(),
            stepper: self.stepper.unwrap_or(Stepper::Rk4),
            dt: self.dt.unwrap_or_default(),
            t_final: self.t_final()?,
            snapshot_times: self.snapshot_times.clone().unwrap_or_default(),
            dealias: self.dealias,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn problem(&self) -> Result<Problem> {
        let kind = self.model_kind()?;
        let stepper = self.stepper.unwrap_or(Stepper::Rk4);
        Ok(Problem {
            initial: self.initial_condition(&kind)?,
            kind,
            grid: self.grid(),
            t_final: self.t_final()?,
            hyperbolized_stepper: stepper,
            original_stepper: self.original_stepper.unwrap_or(stepper),
            dt: self.dt.unwrap_or_default(),
            original_dt: TimeStep::Auto,
            dealias: self.dealias,
        })
    }
}
