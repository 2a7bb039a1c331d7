//! Periodic Fourier pseudospectral solver for the catalog models and their
//! relaxations.
//!
//! The solver state is kept in Fourier space: one coefficient vector per
//! component, in FFT order. Products are formed on the grid and, when
//! dealiasing is on, transformed back through the 2/3-rule mask.

mod grid;
mod model;
mod solve;
mod state;
mod stepper;

use num_complex::Complex64;

/// Components by modes (or nodes).
pub type Field = Vec<Vec<Complex64>>;

pub use grid::{spectral_derivative, GridSpec, PeriodicGrid};
pub use model::{rhs, Dynamics, ModelKind, ModelSpec};
pub use solve::{auto_dt, build, initial_state, resolve_dt, restrict, solve, Snapshot, Solution, SolveConfig, TimeStep, CFL, MAX_STEPS};
pub use state::{
    ch_pulse, exact_linear_field, exact_linear_solution, init_state, InitialCondition, InitialData, Mode, ModeSum, State,
};
pub use stepper::{axpy, is_finite, step, Semidiscrete, Stepper};
