use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::{spectral_derivative, PeriodicGrid};
use crate::construction::LinearModel;

/// One Fourier mode `amplitude * exp(i k x)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mode {
    pub k: f64,
    pub amplitude: Complex64,
}

/// A finite Fourier sum, evaluated and differentiated exactly.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModeSum {
    pub modes: Vec<Mode>,
}

impl ModeSum {
    pub fn single(k: f64, amplitude: Complex64) -> Self {
        Self {
            modes: vec![Mode { k, amplitude }],
        }
    }

    pub fn evaluate(&self, x: f64) -> Complex64 {
        self.modes
            .iter()
            .map(|m| m.amplitude * Complex64::new(0.0, m.k * x).exp())
            .sum()
    }

    pub fn evaluate_on(&self, grid: &PeriodicGrid) -> Vec<Complex64> {
        grid.nodes().iter().map(|&x| self.evaluate(x)).collect()
    }

    pub fn derivative(&self, order: u32) -> Self {
        Self {
            modes: self
                .modes
                .iter()
                .map(|m| Mode {
                    k: m.k,
                    amplitude: m.amplitude * Complex64::new(0.0, m.k).powu(order),
                })
                .collect(),
        }
    }

    /// True when the sum is real-valued: every mode is matched by its
    /// conjugate at `-k`.
    pub fn is_real(&self) -> bool {
        self.modes.iter().all(|m| {
            self.modes
                .iter()
                .any(|p| p.k == -m.k && (p.amplitude - m.amplitude.conj()).norm() <= 1e-15 * m.amplitude.norm())
        })
    }

    /// Supremum of `|sum|` over `x`, bounded above by the sum of amplitudes;
    /// exact for a single mode.
    pub fn amplitude_bound(&self) -> f64 {
        self.modes.iter().map(|m| m.amplitude.norm()).sum()
    }
}

/// Per-mode exact evolution `exp(t * symbol(k))` of the linear model.
pub fn exact_linear_solution(model: &LinearModel, u0: &ModeSum, t: f64) -> ModeSum {
    ModeSum {
        modes: u0
            .modes
            .iter()
            .map(|m| Mode {
                k: m.k,
                amplitude: m.amplitude * (model.symbol(m.k) * t).exp(),
            })
            .collect(),
    }
}

/// Exact solution of the linear model for grid data, with the same Nyquist
/// treatment as the solver.
pub fn exact_linear_field(model: &LinearModel, grid: &PeriodicGrid, u0: &[Complex64], t: f64) -> Vec<Complex64> {
    let hat = grid.fft(u0);
    let evolved: Vec<Complex64> = hat
        .iter()
        .enumerate()
        .map(|(j, z)| z * (linear_symbol(model, grid, j) * t).exp())
        .collect();
    grid.ifft(&evolved)
}

/// `-(sum_j alpha_j (ik)^j + sigma0 (ik)^m)` on grid mode `j`.
pub(crate) fn linear_symbol(model: &LinearModel, grid: &PeriodicGrid, j: usize) -> Complex64 {
    let mut s: Complex64 = model
        .alpha()
        .iter()
        .enumerate()
        .map(|(p, a)| a * grid.derivative_symbol(j, p as u32))
        .sum();
    s += grid.derivative_symbol(j, model.m() as u32) * model.sigma0() as f64;
    -s
}

/// Initial data either sampled on the grid or given as a Fourier sum.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialData {
    Field(Vec<Complex64>),
    Modes(ModeSum),
}

/// Named initial conditions used by the presets and the command line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialCondition {
    /// `exp(-x^2)`.
    Gaussian,
    /// `sqrt(2 alpha) exp(ix) sech(sqrt(alpha) x)`.
    NlsSoliton { alpha: f64 },
    /// `(pi/2) e^x - 2 sinh(x) arctan(e^x) - 1`.
    ChPulse,
    Modes { modes: ModeSum },
}

impl InitialCondition {
    pub fn data(&self, grid: &PeriodicGrid) -> InitialData {
        let field = |f: &dyn Fn(f64) -> Complex64| InitialData::Field(grid.nodes().iter().map(|&x| f(x)).collect());
        match self {
            Self::Gaussian => field(&|x| Complex64::new((-x * x).exp(), 0.0)),
            Self::NlsSoliton { alpha } => {
                let (amp, r) = ((2.0 * alpha).sqrt(), alpha.sqrt());
                field(&|x| Complex64::new(0.0, x).exp() * (amp / (r * x).cosh()))
            }
            Self::ChPulse => field(&|x| Complex64::new(ch_pulse(x), 0.0)),
            Self::Modes { modes } => InitialData::Modes(modes.clone()),
        }
    }
}

/// The pulse `(pi/2) e^x - 2 sinh(x) arctan(e^x) - 1`, evaluated in the
/// equivalent even form `(pi/2) e^{-|x|} + 2 sinh|x| arctan(e^{-|x|}) - 1`,
/// which does not cancel catastrophically for large `x`.
pub fn ch_pulse(x: f64) -> f64 {
    let y = x.abs();
    std::f64::consts::FRAC_PI_2 * (-y).exp() + 2.0 * y.sinh() * (-y).exp().atan() - 1.0
}

/// Fields `q_0..q_{m-1}` on a common grid.
#[derive(Clone, Debug)]
pub struct State {
    pub grid: PeriodicGrid,
    pub components: Vec<Vec<Complex64>>,
    pub is_real: bool,
}

impl State {
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.components.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_imag(&self) -> f64 {
        self.components.iter().flatten().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    pub fn mean(&self, component: usize) -> Complex64 {
        let c = &self.components[component];
        c.iter().sum::<Complex64>() / c.len() as f64
    }
}

/// `q_j = d^j u0` for `j < m`.
pub fn init_state(grid: &PeriodicGrid, u0: &InitialData, m: usize, is_real: bool) -> State {
    let components = match u0 {
        InitialData::Field(f) => (0..m)
            .map(|j| if j == 0 { f.clone() } else { spectral_derivative(grid, f, j as u32) })
            .collect(),
        InitialData::Modes(s) => (0..m).map(|j| s.derivative(j as u32).evaluate_on(grid)).collect(),
    };
    State {
        grid: grid.clone(),
        components,
        is_real,
    }
}
