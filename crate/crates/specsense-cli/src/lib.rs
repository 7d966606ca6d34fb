//! Scenario-file front end for the spectrum-access library: TOML schemas,
//! an execution pipeline (optimize, evaluate, simulate), and deterministic
//! CSV/summary writers.

pub mod execute;
pub mod output;
pub mod scenario;

pub use execute::{execute, Analytic, Execution, Overrides, Policy, Variant};
pub use output::{render_summary, write_all};
pub use scenario::{Resolved, Scenario, Scheme};
