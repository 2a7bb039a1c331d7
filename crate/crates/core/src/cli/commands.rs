use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Value};

use super::config::{Command, RunConfig};
use crate::construction::stable_system;
use crate::dispersion::{characteristic_speeds, is_unstable_branch, nls_dispersion, sweep, symmetric_log_grid, STABILITY_TOL};
use crate::harness::{census, convergence_csv, fmt_num, linear_mode_sweep, reproduce, snapshot_csv, tau_sweep, with_thread_cap, write_file};
use crate::spectral::{solve, ModelKind};
use crate::{Error, Result};

/// What a command produced.
#[derive(Debug, Default)]
pub struct Outcome {
    /// Printed on stdout.
    pub stdout: Option<String>,
    pub written: Vec<PathBuf>,
}

impl Outcome {
    fn write(&mut self, path: PathBuf, contents: &str) -> Result<()> {
        write_file(&path, contents)?;
        self.written.push(path);
        Ok(())
    }

    fn write_meta(&mut self, dir: &Path, cfg: &RunConfig, extra: Value) -> Result<()> {
        let mut meta = json!({ "config": cfg.echo() });
        if let (Value::Object(m), Value::Object(e)) = (&mut meta, extra) {
            m.extend(e);
        }
        self.write(dir.join("meta.json"), &serde_json::to_string_pretty(&meta)?)
    }
}

pub fn dispatch(cfg: &RunConfig) -> Result<Outcome> {
    let command = cfg
        .command
        .ok_or_else(|| Error::InvalidConfig("no command given (use a subcommand or the \"command\" key)".into()))?;
    with_thread_cap(|| match command {
        Command::Hyperbolize => hyperbolize(cfg),
        Command::Dispersion => dispersion(cfg),
        Command::Census => run_census(cfg),
        Command::Solve => run_solve(cfg),
        Command::Converge => converge(cfg),
        Command::Reproduce => run_reproduce(cfg),
    })
}

fn hyperbolize(cfg: &RunConfig) -> Result<Outcome> {
    let system = stable_system(&cfg.linear_part()?, cfg.tau()?)?;
    let text = serde_json::to_string_pretty(&system.to_json())?;
    let mut out = Outcome::default();
    let dir = cfg.out_dir().join("hyperbolize");
    out.write(dir.join("system.json"), &text)?;
    let speeds = characteristic_speeds(&system).ok();
    out.write_meta(&dir, cfg, json!({ "characteristic_speeds": speeds }))?;
    out.stdout = Some(text);
    Ok(out)
}

fn k_grid(cfg: &RunConfig) -> Result<Vec<f64>> {
    if let Some(k) = cfg.k {
        return Ok(vec![k]);
    }
    let lo = cfg.k_min.unwrap_or(1e-3);
    let hi = cfg.k_max.unwrap_or(1e3);
    let count = cfg.k_count.unwrap_or(200);
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) || count == 0 {
        return Err(Error::InvalidConfig(format!(
            "wavenumber grid needs 0 < k_min <= k_max and k_count > 0, got [{lo}, {hi}] x {count}"
        )));
    }
    Ok(symmetric_log_grid(lo, hi, count))
}

fn dispersion(cfg: &RunConfig) -> Result<Outcome> {
    let tau = cfg.tau()?;
    let ks = k_grid(cfg)?;
    let kind = cfg.model_kind()?;
    let branches: Vec<Vec<crate::Complex64>> = match kind {
        ModelKind::Nls { .. } => ks
            .iter()
            .map(|&k| nls_dispersion(k, tau).map(|s| s.eigenvalues))
            .collect::<Result<_>>()?,
        _ => sweep(&stable_system(&cfg.linear_part()?, tau)?, &ks, STABILITY_TOL)?.branches,
    };
    let mut csv = String::from("k,branch,re_omega,im_omega\n");
    for (k, ws) in ks.iter().zip(&branches) {
        for (b, w) in ws.iter().enumerate() {
            let _ = writeln!(csv, "{},{b},{},{}", fmt_num(*k), fmt_num(w.re), fmt_num(w.im));
        }
    }
    let max_imag = branches.iter().flatten().map(|w| w.im).fold(f64::NEG_INFINITY, f64::max);
    let stable = !branches.iter().flatten().any(|w| is_unstable_branch(*w, STABILITY_TOL));
    let summary = json!({
        "model": kind.id(),
        "tau": tau,
        "k_count": ks.len(),
        "max_imag": max_imag,
        "tolerance": STABILITY_TOL,
        "stable": stable,
    });
    let mut out = Outcome::default();
    let dir = cfg.out_dir().join("dispersion");
    out.write(dir.join("dispersion.csv"), &csv)?;
    out.write_meta(&dir, cfg, json!({ "summary": summary }))?;
    out.stdout = Some(serde_json::to_string_pretty(&summary)?);
    Ok(out)
}

fn run_census(cfg: &RunConfig) -> Result<Outcome> {
    let m = cfg.m()?;
    let m_max = cfg.m_max.unwrap_or(m);
    if m_max < m {
        return Err(Error::InvalidConfig(format!("m_max = {m_max} is below m = {m}")));
    }
    let reports = census(m..=m_max, cfg.sigma0)?;
    let text = serde_json::to_string_pretty(&reports)?;
    let mut out = Outcome::default();
    let dir = cfg.out_dir().join("census");
    out.write(dir.join("census.json"), &text)?;
    out.write_meta(&dir, cfg, json!({}))?;
    out.stdout = Some(text);
    Ok(out)
}

fn run_solve(cfg: &RunConfig) -> Result<Outcome> {
    let solve_config = cfg.solve_config()?;
    let start = Instant::now();
    let sol = solve(&solve_config)?;
    let wall = start.elapsed().as_secs_f64();
    let mut out = Outcome::default();
    let dir = cfg.out_dir().join("solve");
    out.write(dir.join("data.csv"), &snapshot_csv(&sol.snapshots))?;
    let last = sol.last();
    let summary = json!({
        "dt": sol.dt,
        "steps": sol.steps,
        "snapshots": sol.snapshots.len(),
        "max_abs_final": last.state.max_abs(),
    });
    out.write_meta(
        &dir,
        cfg,
        json!({
            "solve_config": solve_config,
            "dt": sol.dt,
            "steps": sol.steps,
            "wall_time_s": wall,
        }),
    )?;
    out.stdout = Some(serde_json::to_string_pretty(&summary)?);
    Ok(out)
}

fn converge(cfg: &RunConfig) -> Result<Outcome> {
    let taus = cfg
        .taus
        .clone()
        .ok_or_else(|| Error::InvalidConfig("missing required key \"taus\"".into()))?;
    let norm = cfg.norm.unwrap_or_default();
    let start = Instant::now();
    let linear_mode = cfg.k.is_some() && matches!(cfg.model.as_deref(), None | Some("linear" | "general-linear"));
    let report = if linear_mode {
        linear_mode_sweep(&cfg.linear_model()?, cfg.k.expect("checked"), &taus, cfg.t_final()?, norm)?
    } else {
        tau_sweep(&cfg.problem()?, &taus, norm)?
    };
    let mut out = Outcome::default();
    let dir = cfg.out_dir().join("converge");
    out.write(dir.join("convergence.csv"), &convergence_csv(&report))?;
    out.write_meta(
        &dir,
        cfg,
        json!({
            "report": report,
            "method": if linear_mode { "exact-mode" } else { "grid" },
            "wall_time_s": start.elapsed().as_secs_f64(),
        }),
    )?;
    out.stdout = Some(serde_json::to_string_pretty(&report)?);
    Ok(out)
}

fn run_reproduce(cfg: &RunConfig) -> Result<Outcome> {
    let name = cfg
        .preset
        .as_deref()
        .ok_or_else(|| Error::InvalidConfig("missing required key \"preset\"".into()))?;
    let root = cfg.out_dir();
    let result = reproduce(name, &root)?;
    let dir = root.join(result.spec.name);
    let errors: Vec<Value> = result
        .runs
        .iter()
        .map(|r| json!({ "run": r.label, "linf_error_final": r.errors.last() }))
        .collect();
    Ok(Outcome {
        stdout: Some(serde_json::to_string_pretty(&json!({ "preset": name, "runs": errors }))?),
        written: ["data.csv", "meta.json", "plot.svg"].iter().map(|f| dir.join(f)).collect(),
    })
}
