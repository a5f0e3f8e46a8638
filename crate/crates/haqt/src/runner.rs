//! Parallel execution of benchmark trials.
//!
//! Every trial draws from its own seed stream, so results do not depend on
//! the worker count or scheduling. Failures are reported for the first
//! failing task in canonical order.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};

use haqt_core::bench::{aggregate, plan, run_trial, BenchReport, ExperimentSpec};
use haqt_core::{DensityMatrix, Error, Result};
use rayon::prelude::*;

/// Runs `spec` on `threads` workers (rayon's default when `None`).
/// `progress(done, total)` may be called from any worker.
pub fn run_parallel(spec: &ExperimentSpec, threads: Option<usize>, progress: &(dyn Fn(usize, usize) + Sync)) -> Result<BenchReport> {
    spec.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder.build().map_err(|e| Error::InvalidOptions(format!("thread pool: {e}")))?;

    let tasks = plan(spec);
    let keys: Vec<usize> = if spec.resample_state { (0..spec.trials).collect() } else { vec![0] };
    let truths: BTreeMap<usize, DensityMatrix> = keys.into_iter().map(|k| spec.true_state(k).map(|s| (k, s))).collect::<Result<_>>()?;

    let total = tasks.len();
    let done = AtomicUsize::new(0);
    let results: Vec<Result<_>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&task| {
                let key = if spec.resample_state { task.trial } else { 0 };
                let out = run_trial(spec, &truths[&key], task);
                progress(done.fetch_add(1, Ordering::Relaxed) + 1, total);
                out
            })
            .collect()
    });
    let outcomes = results.into_iter().collect::<Result<Vec<_>>>()?;
    aggregate(spec, outcomes)
}
