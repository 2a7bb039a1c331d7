use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::convergence::{norm_of, reference_config, reference_solution, Norm, Problem};
use super::output::{fmt_num, push_field_rows, svg_plot, write_file, Series};
use super::with_thread_cap;
use crate::spectral::{solve, GridSpec, InitialCondition, ModelKind, Solution, SolveConfig, Stepper, TimeStep};
use crate::{Error, Result};

pub const PRESET_NAMES: [&str; 6] = ["heat", "kdv", "nls", "ch", "ks-solution", "ks-error"];

/// What a preset writes to `data.csv`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputKind {
    /// `q_0` of each relaxed run next to the reference `u`.
    Overlay,
    /// The original model alone.
    Solution,
    /// `q_0 - u_ref` of each relaxed run.
    ErrorFields,
}

#[derive(Clone, Debug, Serialize)]
pub struct PresetSpec {
    pub name: &'static str,
    pub description: &'static str,
    pub problem: Problem,
    pub tau_inverse: Vec<f64>,
    pub snapshot_times: Vec<f64>,
    pub output: OutputKind,
    /// Parameters chosen here rather than taken from the source figures.
    pub implementation_choices: Vec<&'static str>,
}

impl PresetSpec {
    pub fn taus(&self) -> Vec<f64> {
        self.tau_inverse.iter().map(|t| 1.0 / t).collect()
    }
}

fn gaussian_problem(kind: ModelKind, grid: GridSpec, t_final: f64, stepper: Stepper) -> Problem {
    Problem {
        kind,
        grid,
        initial: InitialCondition::Gaussian,
        t_final,
        hyperbolized_stepper: stepper,
        original_stepper: stepper,
        dt: TimeStep::Auto,
        original_dt: TimeStep::Auto,
        dealias: None,
    }
}

fn unit_steps(t_final: f64) -> Vec<f64> {
    (0..=t_final as usize).map(|t| t as f64).collect()
}

pub fn preset(name: &str) -> Result<PresetSpec> {
    use std::f64::consts::PI;
    let box16 = GridSpec {
        x_left: -16.0,
        x_right: 16.0,
        n: 256,
    };
    let ks_grid = GridSpec {
        x_left: -20.0 * PI,
        x_right: 20.0 * PI,
        n: 256,
    };
    let spec = match name {
        "heat" => PresetSpec {
            name: "heat",
            description: "heat equation against its relaxation for three relaxation times",
            problem: gaussian_problem(ModelKind::Heat, box16, 1.0, Stepper::Ssprk33),
            tau_inverse: vec![10.0, 100.0, 1000.0],
            snapshot_times: vec![0.0, 1.0],
            output: OutputKind::Overlay,
            implementation_choices: vec![
                "domain [-16, 16] with 256 nodes",
                "initial data exp(-x^2)",
                "final time 1",
                "tau^-1 in {10, 100, 1000}",
                "reference is the exact Fourier evolution",
            ],
        },
        "kdv" => PresetSpec {
            name: "kdv",
            description: "KdV equation against its relaxation for three relaxation times",
            problem: gaussian_problem(ModelKind::Kdv, box16, 2.0, Stepper::Rk4),
            tau_inverse: vec![10.0, 100.0, 1000.0],
            snapshot_times: vec![0.0, 2.0],
            output: OutputKind::Overlay,
            implementation_choices: vec![
                "domain [-16, 16] with 256 nodes",
                "initial data exp(-x^2)",
                "final time 2",
                "tau^-1 in {10, 100, 1000}",
                "RK4 in time",
            ],
        },
        "nls" => PresetSpec {
            name: "nls",
            description: "focusing NLS soliton against its relaxation for three relaxation times",
            problem: Problem {
                initial: InitialCondition::NlsSoliton { alpha: 1.0 },
                ..gaussian_problem(
                    ModelKind::Nls { kappa: 1.0 },
                    GridSpec {
                        x_left: -8.0 * PI,
                        x_right: 8.0 * PI,
                        n: 512,
                    },
                    1.0,
                    Stepper::Rk4,
                )
            },
            tau_inverse: vec![10.0, 100.0, 1000.0],
            snapshot_times: vec![0.0, 1.0],
            output: OutputKind::Overlay,
            implementation_choices: vec![
                "domain [-8 pi, 8 pi] with 512 nodes so that exp(ix) is periodic",
                "soliton sqrt(2 alpha) exp(ix) sech(sqrt(alpha) x) with alpha = 1",
                "final time 1",
                "tau^-1 in {10, 100, 1000}",
                "RK4 in time",
            ],
        },
        "ch" => PresetSpec {
            name: "ch",
            description: "Camassa-Holm pulse breaking into peakons, against the relaxed system",
            problem: Problem {
                initial: InitialCondition::ChPulse,
                ..gaussian_problem(
                    ModelKind::CamassaHolm,
                    GridSpec {
                        x_left: -10.0,
                        x_right: 50.0,
                        n: 512,
                    },
                    10.0,
                    Stepper::Ssprk33,
                )
            },
            tau_inverse: vec![25.0, 50.0, 100.0],
            snapshot_times: vec![0.0, 10.0],
            output: OutputKind::Overlay,
            implementation_choices: vec!["reference is the original model on 1024 nodes"],
        },
        "ks-solution" => PresetSpec {
            name: "ks-solution",
            description: "Kuramoto-Sivashinsky solution from a Gaussian up to T = 50",
            problem: Problem {
                original_stepper: Stepper::Imex,
                ..gaussian_problem(ModelKind::KuramotoSivashinsky, ks_grid, 50.0, Stepper::Rk4)
            },
            tau_inverse: vec![],
            snapshot_times: unit_steps(50.0),
            output: OutputKind::Solution,
            implementation_choices: vec!["snapshots at every unit of time", "IMEX scheme ARS(4,4,3)"],
        },
        "ks-error" => PresetSpec {
            name: "ks-error",
            description: "pointwise error of the relaxed Kuramoto-Sivashinsky system up to T = 50",
            problem: Problem {
                original_stepper: Stepper::Imex,
                ..gaussian_problem(ModelKind::KuramotoSivashinsky, ks_grid, 50.0, Stepper::Rk4)
            },
            tau_inverse: vec![50.0, 100.0, 400.0],
            snapshot_times: unit_steps(50.0),
            output: OutputKind::ErrorFields,
            implementation_choices: vec![
                "snapshots at every unit of time",
                "reference is the original model on 512 nodes with IMEX ARS(4,4,3)",
            ],
        },
        other => return Err(Error::UnknownPreset(other.to_string())),
    };
    Ok(spec)
}

#[derive(Clone, Debug)]
pub struct PresetRun {
    pub label: String,
    pub tau: Option<f64>,
    pub config: SolveConfig,
    pub solution: Solution,
    /// L-infinity error of `q_0` against the reference at each snapshot.
    pub errors: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct PresetResult {
    pub spec: PresetSpec,
    /// Reference `u` on the base grid at each snapshot time.
    pub reference: Vec<Vec<Complex64>>,
    /// The refined solve behind `reference`; absent for the exact oracle.
    pub reference_config: Option<SolveConfig>,
    pub runs: Vec<PresetRun>,
    pub wall_time: f64,
}

impl PresetResult {
    pub fn run(&self, tau_inverse: f64) -> Option<&PresetRun> {
        self.runs.iter().find(|r| r.tau.map(|t| 1.0 / t) == Some(tau_inverse))
    }

    /// Error fields `q_0 - u_ref` of `run` at each snapshot.
    pub fn error_fields(&self, run: &PresetRun) -> Vec<Vec<Complex64>> {
        run.solution
            .snapshots
            .iter()
            .zip(&self.reference)
            .map(|(s, r)| s.state.components[0].iter().zip(r).map(|(a, b)| a - b).collect())
            .collect()
    }

    pub fn csv(&self) -> String {
        let mut s = String::from("run,t,x,component,re,im\n");
        let grid = self.spec.problem.base_grid().expect("preset grids are valid");
        let nodes = grid.nodes();
        let times = &self.spec.snapshot_times;
        if self.spec.output == OutputKind::Overlay {
            for (t, u) in times.iter().zip(&self.reference) {
                push_field_rows(&mut s, "reference", *t, nodes, 0, u);
            }
        }
        for run in &self.runs {
            match self.spec.output {
                OutputKind::Overlay | OutputKind::Solution => {
                    for snap in &run.solution.snapshots {
                        push_field_rows(&mut s, &run.label, snap.t, nodes, 0, &snap.state.components[0]);
                    }
                }
                OutputKind::ErrorFields => {
                    for (t, e) in times.iter().zip(self.error_fields(run)) {
                        push_field_rows(&mut s, &run.label, *t, nodes, 0, &e);
                    }
                }
            }
        }
        s
    }

    pub fn svg(&self) -> String {
        let grid = self.spec.problem.base_grid().expect("preset grids are valid");
        let x = grid.nodes().to_vec();
        let real = |f: &[Complex64]| f.iter().map(|z| z.re).collect::<Vec<f64>>();
        let mut series = Vec::new();
        match self.spec.output {
            OutputKind::Overlay => {
                let u = self.reference.last().expect("at least one snapshot");
                series.push(Series::new("reference", x.clone(), real(u)));
                for run in &self.runs {
                    series.push(Series::new(&run.label, x.clone(), real(&run.solution.last().state.components[0])));
                }
            }
            OutputKind::Solution => {
                let snaps = &self.runs[0].solution.snapshots;
                for snap in snaps.iter().step_by(10) {
                    series.push(Series::new(&format!("t={}", snap.t), x.clone(), real(&snap.state.components[0])));
                }
            }
            OutputKind::ErrorFields => {
                for run in &self.runs {
                    let e = self.error_fields(run).pop().expect("at least one snapshot");
                    series.push(Series::new(&run.label, x.clone(), real(&e)));
                }
            }
        }
        let title = format!("{} at t = {}", self.spec.name, fmt_num(self.spec.problem.t_final));
        svg_plot(&title, &series)
    }

    pub fn meta(&self) -> Value {
        let runs: Vec<Value> = self
            .runs
            .iter()
            .map(|r| {
                json!({
                    "label": r.label,
                    "tau": r.tau,
                    "solve_config": r.config,
                    "dt": r.solution.dt,
                    "steps": r.solution.steps,
                    "linf_error": r.errors,
                })
            })
            .collect();
        let grid = self.spec.problem.base_grid().expect("preset grids are valid");
        let reference_norm: Vec<f64> = self.reference.iter().map(|u| norm_of(u, grid.dx(), Norm::Linf)).collect();
        json!({
            "config": { "command": "reproduce", "preset": self.spec.name },
            "preset": self.spec,
            "snapshot_times": self.spec.snapshot_times,
            "csv_columns": "run,t,x,component,re,im",
            "reference": {
                "kind": if self.reference_config.is_some() { "refined-solve" } else if self.reference.is_empty() { "none" } else { "exact" },
                "solve_config": self.reference_config,
                "linf_norm": reference_norm,
            },
            "runs": runs,
            "wall_time_s": self.wall_time,
        })
    }
}

fn tau_label(tau_inverse: f64) -> String {
    format!("tau_inv={tau_inverse}")
}

/// Runs every solve of a preset without writing anything.
pub fn run_preset(name: &str) -> Result<PresetResult> {
    let spec = preset(name)?;
    let start = Instant::now();
    let problem = &spec.problem;
    let times = spec.snapshot_times.clone();

    let (runs, reference, reference_config) = if spec.output == OutputKind::Solution {
        let config = problem.config(1.0, false, times)?;
        let solution = solve(&config)?;
        let run = PresetRun {
            label: "original".into(),
            tau: None,
            config,
            solution,
            errors: vec![],
        };
        (vec![run], vec![], None)
    } else {
        let reference_config = if problem.kind.is_linear() {
            None
        } else {
            Some(reference_config(&problem.config(1.0, false, times.clone())?)?)
        };
        let (reference, runs) = with_thread_cap(|| {
            rayon::join(
                || reference_solution(problem, &times),
                || {
                    spec.tau_inverse
                        .par_iter()
                        .map(|&inv| {
                            let tau = 1.0 / inv;
                            let config = problem.config(tau, true, times.clone())?;
                            let solution = solve(&config).map_err(|e| Error::AtTau {
                                tau,
                                source: Box::new(e),
                            })?;
                            Ok(PresetRun {
                                label: tau_label(inv),
                                tau: Some(tau),
                                config,
                                solution,
                                errors: vec![],
                            })
                        })
                        .collect::<Result<Vec<_>>>()
                },
            )
        });
        let reference = reference?;
        let mut runs = runs?;
        for run in &mut runs {
            run.errors = run
                .solution
                .snapshots
                .iter()
                .zip(&reference)
                .map(|(s, u)| {
                    s.state.components[0]
                        .iter()
                        .zip(u)
                        .map(|(a, b)| (a - b).norm())
                        .fold(0.0, f64::max)
                })
                .collect();
        }
        (runs, reference, reference_config)
    };
    Ok(PresetResult {
        spec,
        reference,
        reference_config,
        runs,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Runs a preset and writes `data.csv`, `meta.json` and `plot.svg` to
/// `out_root/<name>/`.
pub fn reproduce(name: &str, out_root: &Path) -> Result<PresetResult> {
    let result = run_preset(name)?;
    let dir = out_root.join(result.spec.name);
    write_file(&dir.join("data.csv"), &result.csv())?;
    write_file(&dir.join("meta.json"), &serde_json::to_string_pretty(&result.meta())?)?;
    write_file(&dir.join("plot.svg"), &result.svg())?;
    Ok(result)
}

/// Re-runs the preset recorded in a `meta.json` document.
pub fn reproduce_from_meta(meta: &Value, out_root: &Path) -> Result<PresetResult> {
    let config = meta
        .get("config")
        .ok_or_else(|| Error::InvalidConfig("meta.json has no \"config\" object".into()))?;
    if config.get("command").and_then(Value::as_str) != Some("reproduce") {
        return Err(Error::InvalidConfig("meta.json does not describe a preset run".into()));
    }
    let name = config
        .get("preset")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::InvalidConfig("meta.json config has no preset name".into()))?;
    reproduce(name, out_root)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_presets_resolve() {
        for name in PRESET_NAMES {
            let p = preset(name).unwrap();
            assert_eq!(p.name, name);
            assert!(p.snapshot_times.windows(2).all(|w| w[0] < w[1]));
            assert_eq!(p.snapshot_times.last(), Some(&p.problem.t_final));
            assert!(p.tau_inverse.windows(2).all(|w| w[0] < w[1]));
            p.problem.config(0.01, true, p.snapshot_times.clone()).unwrap().validate().unwrap();
        }
        assert!(matches!(preset("fig7"), Err(Error::UnknownPreset(_))));
    }

    #[test]
    fn heat_bundle_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let first = reproduce("heat", dir.path()).unwrap();
        let csv = std::fs::read_to_string(dir.path().join("heat/data.csv")).unwrap();
        assert!(csv.starts_with("run,t,x,component,re,im\n"));
        // reference plus three runs, two snapshots each
        assert_eq!(csv.lines().count(), 1 + 4 * 2 * 256);
        let errs: Vec<f64> = first.runs.iter().map(|r| *r.errors.last().unwrap()).collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");

        let meta: Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("heat/meta.json")).unwrap()).unwrap();
        let other = tempfile::tempdir().unwrap();
        reproduce_from_meta(&meta, other.path()).unwrap();
        let again = std::fs::read_to_string(other.path().join("heat/data.csv")).unwrap();
        assert_eq!(csv, again);
        assert!(std::fs::read_to_string(dir.path().join("heat/plot.svg")).unwrap().starts_with("<svg"));
    }

    #[test]
    fn meta_must_name_a_preset() {
        let dir = tempfile::tempdir().unwrap();
        assert!(reproduce_from_meta(&json!({}), dir.path()).is_err());
        assert!(reproduce_from_meta(&json!({"config": {"command": "solve"}}), dir.path()).is_err());
        assert!(matches!(
            reproduce_from_meta(&json!({"config": {"command": "reproduce", "preset": "nope"}}), dir.path()),
            Err(Error::UnknownPreset(_))
        ));
    }
}
