//! Experiment orchestration for the adiabatic-evolution laboratory:
//! ε sweeps with log-log rate fitting, the example gallery with per-claim
//! verdicts, JSON report emission, and the check suites behind the CLI.

use std::sync::OnceLock;

pub mod gallery;
pub mod quad;
pub mod report;
pub mod suites;
pub mod sweep;

pub use gallery::run_example;
pub use report::{ExampleReport, SweepReport};
pub use sweep::{fit_rate, run_sweep, EpsGrid, Metric};

/// Worker pool honoring `ADIAB_THREADS`. Sweep points run in this pool;
/// report assembly stays single-threaded and results are collected by
/// index, so reports are identical for any worker count.
pub fn thread_pool() -> &'static rayon::ThreadPool {
    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Ok(n) = std::env::var("ADIAB_THREADS") {
            if let Ok(n) = n.parse::<usize>() {
                builder = builder.num_threads(n.max(1));
            }
        }
        builder.build().expect("worker pool")
    })
}
