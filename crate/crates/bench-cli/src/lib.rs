//! Experiment harness: seeded instance generation, config-driven batch
//! solving with deterministic trace/summary export, and the verification
//! checks run by the `check` subcommand and the acceptance tests.

// Negated comparisons like `!(x > 0.0)` are deliberate: they reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod checks;
pub mod generate;

pub use bench::{
    run_benchmark, BenchConfig, BenchError, BenchReport, SolverSettings, SummaryEntry,
};
pub use checks::{all_checks, CheckOutcome};
pub use generate::{generate_instance, GenerateError, InstanceSpec};
