//! Dispersion relations, stability sweeps and exact single-mode evolution.
//!
//! With the plane-wave ansatz `q = q_hat exp(i(kx - wt))` the relaxation
//! `D q_t + A q_x = B q` gives `det(-iwD + ikA - B) = 0`, i.e. `w` ranges over
//! the eigenvalues of `Lambda (kA + iB)` with `Lambda = D^{-1}`. A branch is
//! stable when `Im w <= 0`.

mod eig;
mod expm;

pub use eig::{eigen_decomposition, eigenvalues_dense, EigenDecomposition, Spectrum, MAX_DIM};
pub use expm::expm;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::construction::{relaxation_generator, require_pure, HyperbolicSystem};
use crate::matrix::CMatrix;
use crate::{Error, Result};

/// Relative tolerance of the stability verdict: a branch is unstable when
/// `Im w > STABILITY_TOL * max(1, |w|)`.
pub const STABILITY_TOL: f64 = 1e-8;

/// Eigenvector condition number above which [`mode_evolution`] switches to
/// the matrix exponential.
pub const EIGENVECTOR_COND_LIMIT: f64 = 1e8;

/// `Lambda (kA + iB)`.
pub fn dispersion_matrix(system: &HyperbolicSystem, k: f64) -> CMatrix {
    let lam = system.lambda();
    let (a, b) = (system.a(), system.b());
    CMatrix::from_fn(system.m(), system.m(), |i, j| {
        Complex64::new(lam[i] * k * a[i][j], lam[i] * b[i][j])
    })
}

/// The `m` frequencies `w_i(k)`.
pub fn dispersion(system: &HyperbolicSystem, k: f64) -> Result<Spectrum> {
    eigenvalues_dense(&dispersion_matrix(system, k))
}

/// Frequencies of a linear system written as `q_hat' = M q_hat` (`w = i lambda`).
pub fn dispersion_from_mode_matrix(m: &CMatrix) -> Result<Spectrum> {
    eigenvalues_dense(&m.scale(Complex64::new(0.0, 1.0)))
}

/// Linearisation about `q_0 = 0` of the relaxed Schrödinger system
/// `i q0_t + q1_x = 0`, `i tau q1_t = q0_x - q1`; roots of `tau w^2 + w - k^2 = 0`.
pub fn nls_dispersion(k: f64, tau: f64) -> Result<Spectrum> {
    let c = Complex64::new;
    let m = CMatrix::from_fn(2, 2, |i, j| match (i, j) {
        (0, 1) => c(-k, 0.0),
        (1, 0) => c(k / tau, 0.0),
        (1, 1) => c(0.0, 1.0 / tau),
        _ => c(0.0, 0.0),
    });
    dispersion_from_mode_matrix(&m)
}

pub fn is_unstable_branch(w: Complex64, tol: f64) -> bool {
    w.im > tol * w.norm().max(1.0)
}

/// Branches over a wavenumber grid.
#[derive(Clone, Debug, Serialize)]
pub struct DispersionSweep {
    pub k_grid: Vec<f64>,
    /// `branches[i]` holds the sorted frequencies at `k_grid[i]`.
    pub branches: Vec<Vec<Complex64>>,
    pub max_imag: f64,
    pub tolerance: f64,
    pub stable: bool,
}

pub fn sweep(system: &HyperbolicSystem, k_grid: &[f64], tol: f64) -> Result<DispersionSweep> {
    let branches: Vec<Vec<Complex64>> = k_grid
        .par_iter()
        .map(|&k| dispersion(system, k).map(|s| s.eigenvalues))
        .collect::<Result<_>>()?;
    let max_imag = branches
        .iter()
        .flatten()
        .map(|w| w.im)
        .fold(f64::NEG_INFINITY, f64::max);
    let stable = !branches.iter().flatten().any(|w| is_unstable_branch(*w, tol));
    Ok(DispersionSweep {
        k_grid: k_grid.to_vec(),
        branches,
        max_imag,
        tolerance: tol,
        stable,
    })
}

/// Stability verdict over `k_grid`, stopping at the first unstable sample.
pub fn is_stable_on(system: &HyperbolicSystem, k_grid: &[f64], tol: f64) -> Result<bool> {
    for &k in k_grid {
        let s = dispersion(system, k)?;
        if s.eigenvalues.iter().any(|w| is_unstable_branch(*w, tol)) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `count` points log-spaced over `[lo, hi]`.
pub fn logspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.log10(), hi.log10());
            (0..count)
                .map(|i| 10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64))
                .collect()
        }
    }
}

/// 200 magnitudes log-spaced over `[1e-3, 1e3]`, each with both signs,
/// ascending.
pub fn census_k_grid() -> Vec<f64> {
    symmetric_log_grid(1e-3, 1e3, 200)
}

pub fn symmetric_log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let pos = logspace(lo, hi, count);
    pos.iter().rev().map(|k| -k).chain(pos.iter().copied()).collect()
}

/// Eigenvalues of `Lambda A`, ascending. These are real for a stable
/// permutation; a complex speed is reported as an error.
pub fn characteristic_speeds(system: &HyperbolicSystem) -> Result<Vec<f64>> {
    let lam = system.lambda();
    let a = system.a();
    let m = CMatrix::from_fn(system.m(), system.m(), |i, j| Complex64::new(lam[i] * a[i][j], 0.0));
    let s = eigenvalues_dense(&m)?;
    let scale = s.eigenvalues.iter().map(|z| z.norm()).fold(1.0, f64::max);
    if s.max_abs_imag() > STABILITY_TOL * scale {
        return Err(Error::InvalidModel(format!(
            "advective matrix has complex characteristic speeds (max |Im| = {:e})",
            s.max_abs_imag()
        )));
    }
    let mut speeds: Vec<f64> = s.eigenvalues.iter().map(|z| z.re).collect();
    speeds.sort_by(f64::total_cmp);
    Ok(speeds)
}

/// `q_hat_j(0) = (ik)^j u0_hat`.
pub fn consistent_mode(m: usize, k: f64, u0_hat: Complex64) -> Vec<Complex64> {
    let ik = Complex64::new(0.0, k);
    (0..m).map(|j| ik.powu(j as u32) * u0_hat).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvolutionRoute {
    /// Eigendecomposition, falling back to the exponential when the
    /// eigenvector matrix is ill-conditioned.
    Auto,
    Eigen,
    Exponential,
}

/// Exact evolution of one Fourier mode of the relaxed pure model:
/// `q_hat(t) = exp(t / tau L_tau) q_hat(0)` with consistent initial data.
pub fn mode_evolution(system: &HyperbolicSystem, k: f64, u0_hat: Complex64, t: f64) -> Result<Vec<Complex64>> {
    mode_evolution_via(system, k, u0_hat, t, EvolutionRoute::Auto)
}

pub fn mode_evolution_via(
    system: &HyperbolicSystem,
    k: f64,
    u0_hat: Complex64,
    t: f64,
    route: EvolutionRoute,
) -> Result<Vec<Complex64>> {
    require_pure(system.model())?;
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeTime(t));
    }
    let q0 = consistent_mode(system.m(), k, u0_hat);
    if t == 0.0 {
        return Ok(q0);
    }
    let l = relaxation_generator(system, k)?;
    let scale = Complex64::new(t / system.tau(), 0.0);
    let via_exp = |l: &CMatrix| -> Result<Vec<Complex64>> { Ok(expm(&l.scale(scale))?.mul_vec(&q0)) };
    if route == EvolutionRoute::Exponential {
        return via_exp(&l);
    }
    let dec = eigen_decomposition(&l)?;
    let inv = match dec.vectors.inverse() {
        Ok(inv) => inv,
        Err(_) if route == EvolutionRoute::Auto => return via_exp(&l),
        Err(e) => return Err(e),
    };
    let cond = dec.vectors.norm_one() * inv.norm_one();
    if route == EvolutionRoute::Auto && cond > EIGENVECTOR_COND_LIMIT {
        return via_exp(&l);
    }
    let coeffs = inv.mul_vec(&q0);
    let weighted: Vec<Complex64> = coeffs
        .iter()
        .zip(&dec.values)
        .map(|(c, w)| c * (w * scale).exp())
        .collect();
    Ok(dec.vectors.mul_vec(&weighted))
}

/// The eigenvalue of `L_tau` closest to zero, approximately
/// `-tau sigma0 (ik)^m` for small `tau`.
pub fn slow_eigenvalue(system: &HyperbolicSystem, k: f64) -> Result<Complex64> {
    let l = relaxation_generator(system, k)?;
    let s = eigenvalues_dense(&l)?;
    let mut values = s.eigenvalues;
    values.sort_by(|a, b| a.norm().total_cmp(&b.norm()).then(a.im.abs().total_cmp(&b.im.abs())));
    let slow = values[0];
    let next = values.get(1).map_or(f64::INFINITY, |z| z.norm());
    if slow.norm() >= 0.5 * next {
        return Err(Error::NotSeparated {
            ratio: slow.norm() / next,
        });
    }
    // The first row of L_tau vanishes at k = 0, so zero is an exact eigenvalue.
    if k == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    Ok(slow)
}

/// Leading-order prediction `-tau sigma0 (ik)^m` for the slow eigenvalue.
pub fn slow_eigenvalue_prediction(system: &HyperbolicSystem, k: f64) -> Complex64 {
    let ik = Complex64::new(0.0, k);
    -ik.powu(system.m() as u32) * system.tau() * system.model().sigma0() as f64
}
