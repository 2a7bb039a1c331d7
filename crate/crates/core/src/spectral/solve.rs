use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::grid::{GridSpec, PeriodicGrid};
use super::model::{Dynamics, ModelSpec};
use super::state::{init_state, InitialCondition, InitialData, State};
use super::stepper::{is_finite, step, Stepper};
use super::Field;
use crate::{Error, Result};

/// CFL-type safety factor of the automatic step size.
pub const CFL: f64 = 0.4;

/// Refuses runs that would need more steps than this.
pub const MAX_STEPS: usize = 50_000_000;

/// Time step: a fixed value or `"auto"`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum TimeStep {
    #[default]
    Auto,
    Fixed(f64),
}

impl Serialize for TimeStep {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::Auto => s.serialize_str("auto"),
            Self::Fixed(dt) => s.serialize_f64(*dt),
        }
    }
}

impl<'de> Deserialize<'de> for TimeStep {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(Self::Fixed(x)),
            Raw::Text(s) if s == "auto" => Ok(Self::Auto),
            Raw::Text(s) => s
                .parse()
                .map(Self::Fixed)
                .map_err(|_| serde::de::Error::custom(format!("dt must be a number or \"auto\", got {s:?}"))),
        }
    }
}

impl std::str::FromStr for TimeStep {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "auto" {
            Ok(Self::Auto)
        } else {
            s.parse().map(Self::Fixed).map_err(|_| format!("dt must be a number or \"auto\", got {s:?}"))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub model: ModelSpec,
    pub hyperbolized: bool,
    pub grid: GridSpec,
    pub stepper: Stepper,
    #[serde(default)]
    pub dt: TimeStep,
    pub t_final: f64,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    /// Defaults to on for nonlinear models.
    #[serde(default)]
    pub dealias: Option<bool>,
    pub initial: InitialCondition,
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(Error::InvalidConfig(format!("t_final must be finite and >= 0, got {}", self.t_final)));
        }
        if let TimeStep::Fixed(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::InvalidConfig(format!("dt must be positive, got {dt}")));
            }
        }
        let mut prev = f64::NEG_INFINITY;
        for &t in &self.snapshot_times {
            if !(0.0..=self.t_final).contains(&t) || t < prev {
                return Err(Error::InvalidConfig(
                    "snapshot_times must be sorted and lie in [0, t_final]".into(),
                ));
            }
            prev = t;
        }
        PeriodicGrid::from_spec(self.grid)?;
        Ok(())
    }

    pub fn dealias(&self) -> bool {
        self.dealias.unwrap_or_else(|| self.model.kind.default_dealias())
    }

    /// Snapshot times with `t_final` appended when absent.
    pub fn output_times(&self) -> Vec<f64> {
        let mut ts = self.snapshot_times.clone();
        ts.dedup();
        if ts.last() != Some(&self.t_final) {
            ts.push(self.t_final);
        }
        ts
    }
}

#[derive(Clone, Debug)]
pub struct Snapshot {
    pub t: f64,
    pub state: State,
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub snapshots: Vec<Snapshot>,
    /// Nominal step size (auto-resolved if requested).
    pub dt: f64,
    pub steps: usize,
}

impl Solution {
    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("at least one snapshot")
    }
}

/// Automatic step size. Explicit steppers use `CFL * pi / rho`, where `rho`
/// adds the largest `|eigenvalue|` of the per-mode linear blocks to a rate
/// estimate of the nonlinear terms; for a pure advection speed `s` this is
/// `CFL * dx / s`. The IMEX stepper only has to resolve the explicit part:
/// `CFL * pi / max(k_max, nonlinear rate)`, i.e. `CFL * dx / max(1, s)`.
pub fn auto_dt(dynamics: &Dynamics, hat: &Field, stepper: Stepper) -> Result<f64> {
    let grid = dynamics.grid();
    let nl = dynamics.nonlinear_rate(hat);
    let rho = if stepper.is_implicit() {
        nl.max(grid.k_max())
    } else {
        dynamics.linear_spectral_radius()? + nl
    };
    if rho > 0.0 && rho.is_finite() {
        Ok(CFL * std::f64::consts::PI / rho)
    } else {
        Ok(CFL * grid.dx())
    }
}

pub fn initial_state(config: &SolveConfig, grid: &PeriodicGrid) -> State {
    let data = config.initial.data(grid);
    let is_real = config.model.kind.is_real()
        && match &data {
            InitialData::Field(f) => f.iter().all(|z| z.im == 0.0),
            InitialData::Modes(m) => m.is_real(),
        };
    init_state(grid, &data, config.model.kind.components(config.hyperbolized), is_real)
}

pub fn build(config: &SolveConfig) -> Result<(Dynamics, State)> {
    config.validate()?;
    let grid = PeriodicGrid::from_spec(config.grid)?;
    let dynamics = Dynamics::new(&config.model, config.hyperbolized, &grid, config.dealias())?;
    let state = initial_state(config, &grid);
    Ok((dynamics, state))
}

/// The step size `solve` would use for `config`.
pub fn resolve_dt(config: &SolveConfig) -> Result<f64> {
    let (dynamics, state) = build(config)?;
    match config.dt {
        TimeStep::Fixed(dt) => Ok(dt),
        TimeStep::Auto => auto_dt(&dynamics, &dynamics.to_hat_state(&state)?, config.stepper),
    }
}

pub fn solve(config: &SolveConfig) -> Result<Solution> {
    let (dynamics, state0) = build(config)?;
    let is_real = state0.is_real;
    let grid = state0.grid.clone();
    let mut hat = dynamics.to_hat_state(&state0)?;
    let dt = match config.dt {
        TimeStep::Fixed(dt) => dt,
        TimeStep::Auto => auto_dt(&dynamics, &hat, config.stepper)?,
    };
    let snapshot = |t: f64, hat: &Field| Snapshot {
        t,
        state: State {
            grid: grid.clone(),
            components: dynamics.to_physical(hat),
            is_real,
        },
    };

    let mut snapshots = Vec::new();
    let mut t = 0.0;
    let mut steps = 0usize;
    for target in config.output_times() {
        let interval = target - t;
        if interval > 0.0 {
            let n = (interval / dt).ceil().max(1.0);
            if steps as f64 + n > MAX_STEPS as f64 {
                return Err(Error::InvalidConfig(format!(
                    "dt = {dt:e} needs more than {MAX_STEPS} steps to reach t = {target}"
                )));
            }
            let n = n as usize;
            let h = interval / n as f64;
            for i in 0..n {
                hat = step(config.stepper, &dynamics, &hat, h)?;
                steps += 1;
                if !is_finite(&hat) {
                    return Err(Error::Instability {
                        time: t + (i + 1) as f64 * h,
                        dt: h,
                    });
                }
            }
        }
        t = target;
        snapshots.push(snapshot(t, &hat));
    }
    Ok(Solution { snapshots, dt, steps })
}

/// Values on every `factor`-th node of a refined field.
pub fn restrict(field: &[Complex64], factor: usize) -> Vec<Complex64> {
    field.iter().step_by(factor).copied().collect()
}
