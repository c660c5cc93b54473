//! Node-affinity constraint analysis for cluster workload traces: trace
//! model, constraint compaction, incremental task-node matching, feature
//! encoding, classifiers and their evaluation.

pub mod classifiers;
pub mod constraint;
pub mod container;
pub mod ensemble;
pub mod features;
pub mod matcher;
pub mod trace;

use std::time::Duration;

/// Any error the library reports, tagged with a stable kind name.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Trace(#[from] trace::TraceError),
    #[error(transparent)]
    Constraint(#[from] constraint::ConstraintError),
    #[error(transparent)]
    Match(#[from] matcher::MatchError),
    #[error(transparent)]
    Feature(#[from] features::FeatureError),
    #[error(transparent)]
    Classifier(#[from] classifiers::ClassifierError),
    #[error(transparent)]
    Eval(#[from] ensemble::EvalError),
}

impl Error {
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Trace(e) => e.kind(),
            Error::Constraint(e) => e.kind(),
            Error::Match(e) => e.kind(),
            Error::Feature(e) => e.kind(),
            Error::Classifier(e) => e.kind(),
            Error::Eval(e) => e.kind(),
        }
    }
}

/// CPU time consumed so far by all threads of this process.
pub fn process_cpu_time() -> Duration {
    let mut ts = libc::timespec { tv_sec: 0, tv_nsec: 0 };
    // SAFETY: `ts` is a valid, writable timespec for the duration of the call.
    let rc = unsafe { libc::clock_gettime(libc::CLOCK_PROCESS_CPUTIME_ID, &mut ts) };
    if rc != 0 {
        return Duration::ZERO;
    }
    Duration::new(ts.tv_sec as u64, ts.tv_nsec as u32)
}
