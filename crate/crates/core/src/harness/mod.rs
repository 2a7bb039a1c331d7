//! Convergence studies in the relaxation time, permutation censuses and the
//! reproducible preset bundles.

mod census;
mod convergence;
mod output;
mod presets;

pub use census::{census, census_one, CensusReport};
pub use convergence::{
    fitted_order, hyperbolization_error, linear_mode_error, linear_mode_sweep, norm_of, reference_config,
    reference_solution, tau_sweep, ConvergenceReport, Norm, Problem, ORDER_FIT_CUTOFF,
};
pub use output::{convergence_csv, fmt_num, snapshot_csv, write_file};
pub use presets::{
    preset, reproduce, reproduce_from_meta, run_preset, OutputKind, PresetResult, PresetRun, PresetSpec, PRESET_NAMES,
};

use rayon::ThreadPool;

/// Environment variable capping sweep parallelism.
pub const THREADS_ENV: &str = "HYP_THREADS";

/// Runs `f` on a pool capped by `HYP_THREADS` when it is set to a positive
/// integer, and on the global pool otherwise.
pub fn with_thread_cap<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    match thread_pool() {
        Some(pool) => pool.install(f),
        None => f(),
    }
}

fn thread_pool() -> Option<ThreadPool> {
    let n: usize = std::env::var(THREADS_ENV).ok()?.trim().parse().ok()?;
    if n == 0 {
        return None;
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()
}
