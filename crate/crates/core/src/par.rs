//! Data-parallel fan-out with a sequential fallback.
//!
//! Built with the `parallel` feature (the default), [`Execution::Parallel`]
//! runs on the rayon pool. Without it every request runs sequentially.
//! Results are collected in index order either way, so outputs do not depend
//! on the execution mode.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Execution {
    #[cfg_attr(feature = "parallel", default)]
    Parallel,
    #[cfg_attr(not(feature = "parallel"), default)]
    Sequential,
}

impl Execution {
    /// Whether this request actually fans out in the current build.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// `(0..n).map(f)` collected in order, in parallel when requested and available.
pub fn map_indexed<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}
