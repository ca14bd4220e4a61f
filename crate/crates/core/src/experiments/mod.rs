//! Convergence studies, stability probes and kernel checks on the
//! manufactured problem, plus their text, CSV and JSON reports.
//!
//! Independent solver runs are spread over a bounded rayon pool; results are
//! always assembled in input order, so reports are reproducible byte for
//! byte regardless of the worker count.

mod kernel_check;
mod presets;
mod stability;
mod tables;

pub use kernel_check::{kernels_check, KernelCheckConfig, KernelCheckReport, MeshKind};
pub use presets::Preset;
pub use stability::{
    stability_probe, stability_study, Amplification, Perturbation, StabilityProbe, StabilityStudy,
};
pub use tables::{
    format_order, format_sci, measure_error, order, order_with_ratio, spatial_study, temporal_study, write_csv, Axis,
    ConvergenceTable, StudyConfig, TableRow, CSV_HEADER,
};

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Map `f` over `items` on a pool of `jobs` threads, keeping input order.
pub(crate) fn parallel_map<T, R, F>(jobs: usize, items: &[T], f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync + Send,
{
    if jobs <= 1 || items.len() <= 1 {
        return items.iter().map(&f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.min(items.len()))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| items.par_iter().map(&f).collect())
}
