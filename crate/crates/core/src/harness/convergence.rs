use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::construction::{stable_system, LinearModel};
use crate::dispersion::mode_evolution;
use crate::spectral::{
    auto_dt, build, exact_linear_field, initial_state, restrict, solve, GridSpec, InitialCondition, ModelKind, ModelSpec,
    PeriodicGrid, Solution, SolveConfig, Stepper, TimeStep,
};
use crate::{Error, Result};

/// Points whose error exceeds this fraction of the solution norm are left out
/// of the order fit when they sit at the large-tau end of the ladder.
pub const ORDER_FIT_CUTOFF: f64 = 0.5;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    #[default]
    Linf,
    L2,
}

impl Norm {
    pub fn id(self) -> &'static str {
        match self {
            Norm::Linf => "linf",
            Norm::L2 => "l2",
        }
    }
}

impl std::str::FromStr for Norm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "linf" | "inf" | "max" => Ok(Norm::Linf),
            "l2" => Ok(Norm::L2),
            _ => Err(format!("unknown norm {s:?} (expected linf or l2)")),
        }
    }
}

/// Grid norm of `values`. L2 is the trapezoidal rule on the periodic grid.
pub fn norm_of(values: &[Complex64], dx: f64, norm: Norm) -> f64 {
    match norm {
        Norm::Linf => values.iter().map(|z| z.norm()).fold(0.0, f64::max),
        Norm::L2 => (dx * values.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt(),
    }
}

fn difference_norm(a: &[Complex64], b: &[Complex64], dx: f64, norm: Norm) -> f64 {
    let d: Vec<Complex64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm_of(&d, dx, norm)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub model: String,
    pub tau_values: Vec<f64>,
    pub errors: Vec<f64>,
    pub fitted_order: f64,
    pub norm: Norm,
    #[serde(rename = "T")]
    pub t_final: f64,
    /// Norm of the reference solution at `T`.
    pub solution_norm: f64,
}

/// Least-squares slope of `log error` against `log tau`. The largest-tau
/// point is dropped when its error exceeds `ORDER_FIT_CUTOFF * solution_norm`
/// and at least two points remain.
pub fn fitted_order(tau_values: &[f64], errors: &[f64], solution_norm: f64) -> f64 {
    let mut pts: Vec<(f64, f64)> = tau_values.iter().copied().zip(errors.iter().copied()).collect();
    pts.sort_by(|a, b| b.0.total_cmp(&a.0));
    if pts.len() > 2 && pts[0].1 > ORDER_FIT_CUTOFF * solution_norm {
        pts.remove(0);
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.iter().map(|(t, e)| (t.ln(), e.ln())).unzip();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn check_ladder(tau_values: &[f64]) -> Result<()> {
    if tau_values.len() < 3 {
        return Err(Error::InvalidConfig(format!(
            "a tau sweep needs at least 3 values, got {}",
            tau_values.len()
        )));
    }
    if tau_values.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
        return Err(Error::InvalidConfig("tau values must be positive and finite".into()));
    }
    if tau_values.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidConfig("tau values must be strictly descending".into()));
    }
    Ok(())
}

/// A model, grid and initial condition shared by the original and the
/// hyperbolized runs of a convergence study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Problem {
    pub kind: ModelKind,
    pub grid: GridSpec,
    pub initial: InitialCondition,
    pub t_final: f64,
    pub hyperbolized_stepper: Stepper,
    pub original_stepper: Stepper,
    /// Step of the hyperbolized runs.
    #[serde(default)]
    pub dt: TimeStep,
    /// Step of the original-model runs; the reference refines it further.
    #[serde(default)]
    pub original_dt: TimeStep,
    #[serde(default)]
    pub dealias: Option<bool>,
}

impl Problem {
    pub fn config(&self, tau: f64, hyperbolized: bool, snapshot_times: Vec<f64>) -> Result<SolveConfig> {
        Ok(SolveConfig {
            model: ModelSpec::new(self.kind.clone(), tau)?,
            hyperbolized,
            grid: self.grid,
            stepper: if hyperbolized { self.hyperbolized_stepper } else { self.original_stepper },
            dt: if hyperbolized { self.dt } else { self.original_dt },
            t_final: self.t_final,
            snapshot_times,
            dealias: self.dealias,
            initial: self.initial.clone(),
        })
    }

    pub fn base_grid(&self) -> Result<PeriodicGrid> {
        PeriodicGrid::from_spec(self.grid)
    }
}

/// The refined reference run for an original-model config: twice the nodes
/// and a step no larger than a quarter of the base step (nor the stable step
/// on the refined grid).
pub fn reference_config(original: &SolveConfig) -> Result<SolveConfig> {
    let base_dt = match original.dt {
        TimeStep::Fixed(dt) => dt,
        TimeStep::Auto => {
            let (dyn_, state) = build(original)?;
            auto_dt(&dyn_, &dyn_.to_hat_state(&state)?, original.stepper)?
        }
    };
    let mut fine = original.clone();
    fine.grid.n *= 2;
    fine.dt = TimeStep::Auto;
    let (dyn_, state) = build(&fine)?;
    let fine_dt = auto_dt(&dyn_, &dyn_.to_hat_state(&state)?, fine.stepper)?;
    fine.dt = TimeStep::Fixed((base_dt / 4.0).min(fine_dt));
    Ok(fine)
}

/// Reference `u` on the base grid at each of `times`: the exact evolution
/// for linear models, the refined original-model solve otherwise.
pub fn reference_solution(problem: &Problem, times: &[f64]) -> Result<Vec<Vec<Complex64>>> {
    let grid = problem.base_grid()?;
    let mut original = problem.config(1.0, false, times.to_vec())?;
    original.t_final = times.iter().copied().fold(0.0, f64::max);
    if let Some(model) = problem.kind.linear_model().filter(|_| problem.kind.is_linear()) {
        original.validate()?;
        let state = initial_state(&original, &grid);
        let u0 = &state.components[0];
        return Ok(times.iter().map(|&t| exact_linear_field(&model, &grid, u0, t)).collect());
    }
    let sol = solve(&reference_config(&original)?)?;
    Ok(times
        .iter()
        .map(|&t| {
            let snap = sol.snapshots.iter().find(|s| s.t == t).expect("reference snapshot at each requested time");
            restrict(&snap.state.components[0], 2)
        })
        .collect())
}

fn hyperbolized_run(problem: &Problem, tau: f64, times: Vec<f64>) -> Result<Solution> {
    solve(&problem.config(tau, true, times)?).map_err(|e| Error::AtTau {
        tau,
        source: Box::new(e),
    })
}

/// `||q_0(T) - u_ref(T)||` for one tau.
pub fn hyperbolization_error(problem: &Problem, tau: f64, norm: Norm) -> Result<f64> {
    let reference = reference_solution(problem, &[problem.t_final])?;
    let sol = hyperbolized_run(problem, tau, vec![])?;
    let grid = problem.base_grid()?;
    Ok(difference_norm(&sol.last().state.components[0], &reference[0], grid.dx(), norm))
}

/// Errors at `T` for a descending tau ladder. Members run concurrently; the
/// report is ordered as `tau_values`.
pub fn tau_sweep(problem: &Problem, tau_values: &[f64], norm: Norm) -> Result<ConvergenceReport> {
    check_ladder(tau_values)?;
    let grid = problem.base_grid()?;
    let reference = reference_solution(problem, &[problem.t_final])?.remove(0);
    let errors = tau_values
        .par_iter()
        .map(|&tau| {
            let sol = hyperbolized_run(problem, tau, vec![])?;
            Ok(difference_norm(&sol.last().state.components[0], &reference, grid.dx(), norm))
        })
        .collect::<Result<Vec<f64>>>()?;
    let solution_norm = norm_of(&reference, grid.dx(), norm);
    Ok(ConvergenceReport {
        model: problem.kind.id().to_string(),
        tau_values: tau_values.to_vec(),
        fitted_order: fitted_order(tau_values, &errors, solution_norm),
        errors,
        norm,
        t_final: problem.t_final,
        solution_norm,
    })
}

/// Error of `q_0` for the single mode `e^{ikx}` evolved exactly in time by
/// the relaxed system, against the exact linear evolution. The L2 norm is
/// taken over one `2 pi` period.
pub fn linear_mode_error(model: &LinearModel, k: f64, tau: f64, t: f64, norm: Norm) -> Result<f64> {
    let system = stable_system(model, tau)?;
    let q = mode_evolution(&system, k, Complex64::new(1.0, 0.0), t).map_err(|e| Error::AtTau {
        tau,
        source: Box::new(e),
    })?;
    let exact = (model.symbol(k) * t).exp();
    let d = (q[0] - exact).norm();
    Ok(match norm {
        Norm::Linf => d,
        Norm::L2 => d * (2.0 * std::f64::consts::PI).sqrt(),
    })
}

/// [`tau_sweep`] for a single Fourier mode of a linear model, with no spatial
/// or temporal discretization error.
pub fn linear_mode_sweep(model: &LinearModel, k: f64, tau_values: &[f64], t: f64, norm: Norm) -> Result<ConvergenceReport> {
    check_ladder(tau_values)?;
    let errors = tau_values
        .par_iter()
        .map(|&tau| linear_mode_error(model, k, tau, t, norm))
        .collect::<Result<Vec<f64>>>()?;
    let amp = (model.symbol(k) * t).exp().norm();
    let solution_norm = match norm {
        Norm::Linf => amp,
        Norm::L2 => amp * (2.0 * std::f64::consts::PI).sqrt(),
    };
    Ok(ConvergenceReport {
        model: format!("linear-m{}", model.m()),
        tau_values: tau_values.to_vec(),
        fitted_order: fitted_order(tau_values, &errors, solution_norm),
        errors,
        norm,
        t_final: t,
        solution_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ladder() -> Vec<f64> {
        (0..5).map(|j| 1e-3 * 0.5f64.powi(j)).collect()
    }

    #[test]
    fn exact_power_law_is_recovered() {
        let taus = ladder();
        let errs: Vec<f64> = taus.iter().map(|t| 3.0 * t * t).collect();
        assert!((fitted_order(&taus, &errs, 1.0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn large_first_point_is_dropped() {
        let taus = vec![1.0, 0.1, 0.01, 0.001];
        let errs = vec![0.9, 0.01, 0.001, 0.0001];
        assert!((fitted_order(&taus, &errs, 1.0) - 1.0).abs() < 1e-12);
        // kept when below the cutoff
        assert!(fitted_order(&taus, &errs, 10.0) > 1.0);
    }

    proptest! {
        #[test]
        fn order_is_scale_invariant(scale in 1e-6f64..1e6, p in 0.5f64..3.0) {
            let taus = ladder();
            let errs: Vec<f64> = taus.iter().enumerate().map(|(i, t)| t.powf(p) * (1.0 + 0.1 * (i as f64).sin())).collect();
            let scaled: Vec<f64> = errs.iter().map(|e| e * scale).collect();
            let a = fitted_order(&taus, &errs, f64::INFINITY);
            let b = fitted_order(&taus, &scaled, f64::INFINITY);
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn ladder_validation() {
        assert!(check_ladder(&[1e-3, 5e-4]).is_err());
        assert!(check_ladder(&[1e-3, 2e-3, 1e-4]).is_err());
        assert!(check_ladder(&[1e-3, 0.0, -1.0]).is_err());
        assert!(check_ladder(&ladder()).is_ok());
    }

    #[test]
    fn linear_mode_rate_is_first_order() {
        for m in 2..=4 {
            let model = LinearModel::pure(m, LinearModel::natural_sigma0(m)).unwrap();
            let r = linear_mode_sweep(&model, 2.0, &ladder(), 0.5, Norm::Linf).unwrap();
            assert!((0.85..=1.15).contains(&r.fitted_order), "m={m}: {r:?}");
        }
    }

    #[test]
    fn fifth_order_mode_needs_smaller_tau() {
        // k^5 = 32: errors on the 1e-3 ladder are O(1), the rate only shows below ~1e-5
        let model = LinearModel::pure(5, 1).unwrap();
        let coarse = linear_mode_sweep(&model, 2.0, &ladder(), 0.5, Norm::Linf).unwrap();
        assert!(coarse.errors[0] > 1.0, "{coarse:?}");
        let deep: Vec<f64> = (0..5).map(|j| 1e-5 * 0.5f64.powi(j)).collect();
        let r = linear_mode_sweep(&model, 2.0, &deep, 0.5, Norm::Linf).unwrap();
        assert!((0.95..=1.05).contains(&r.fitted_order), "{r:?}");
    }

    #[test]
    fn heat_mode_halving_ratio() {
        let model = LinearModel::heat();
        let e1 = linear_mode_error(&model, 1.0, 1e-3, 0.5, Norm::Linf).unwrap();
        let e2 = linear_mode_error(&model, 1.0, 5e-4, 0.5, Norm::Linf).unwrap();
        assert!((e1 / e2 - 2.0).abs() < 0.05, "{}", e1 / e2);
    }

    #[test]
    fn vanishing_tau_reduces_to_the_pde() {
        for m in 2..=4 {
            let model = LinearModel::pure(m, LinearModel::natural_sigma0(m)).unwrap();
            assert!(linear_mode_error(&model, 1.0, 1e-8, 0.5, Norm::Linf).unwrap() <= 1e-6);
        }
    }

    fn heat_problem() -> Problem {
        Problem {
            kind: ModelKind::Heat,
            grid: GridSpec {
                x_left: -16.0,
                x_right: 16.0,
                n: 128,
            },
            initial: InitialCondition::Gaussian,
            t_final: 1.0,
            hyperbolized_stepper: Stepper::Ssprk33,
            original_stepper: Stepper::Ssprk33,
            dt: TimeStep::Auto,
            original_dt: TimeStep::Auto,
            dealias: None,
        }
    }

    #[test]
    fn heat_large_tau_error_is_order_one() {
        let p = heat_problem();
        let big = hyperbolization_error(&p, 1.0, Norm::Linf).unwrap();
        let small = hyperbolization_error(&p, 1e-3, Norm::Linf).unwrap();
        assert!(big > 0.1, "{big}");
        assert!(small < 0.01 * big, "{small} vs {big}");
    }

    #[test]
    fn heat_sweep_monotone() {
        let r = tau_sweep(&heat_problem(), &[0.1, 0.01, 0.001], Norm::L2).unwrap();
        assert!(r.errors.windows(2).all(|w| w[1] < w[0]), "{r:?}");
        assert!(r.fitted_order > 0.8, "{r:?}");
    }

    #[test]
    fn kdv_reference_is_resolution_independent() {
        let p = Problem {
            kind: ModelKind::Kdv,
            grid: GridSpec {
                x_left: -16.0,
                x_right: 16.0,
                n: 64,
            },
            initial: InitialCondition::Gaussian,
            t_final: 0.5,
            hyperbolized_stepper: Stepper::Rk4,
            original_stepper: Stepper::Rk4,
            dt: TimeStep::Auto,
            original_dt: TimeStep::Auto,
            dealias: None,
        };
        let tau = 1e-3;
        let e1 = hyperbolization_error(&p, tau, Norm::Linf).unwrap();
        let mut finer = p.clone();
        let coarse_ref = reference_solution(&p, &[p.t_final]).unwrap().remove(0);
        finer.grid.n = 128;
        let fine_ref = reference_solution(&finer, &[p.t_final]).unwrap().remove(0);
        let moved = difference_norm(&coarse_ref, &restrict(&fine_ref, 2), 1.0, Norm::Linf);
        assert!(moved < 0.1 * e1, "reference moved {moved} against error {e1}");
    }
}
