//! Seeded Monte-Carlo experiments: configuration, sweeps, result files,
//! convergence traces and runtime benchmarks.

pub mod output;
pub mod plan;
pub mod study;
pub mod trial;

pub use output::{aggregate, emit_results, read_csv, AggregateRow};
pub use plan::{parse_methods, parse_values, AntennaCalibration, ConfigFile, EstimatorSettings, ExperimentPlan, OutputFormat, Sweep};
pub use study::{benchmark, convergence_study, convergence_trace, iterations_to_floor, BenchmarkRow, ConvergenceTable};
pub use trial::{evaluate, run_plan, run_trial, trial_seed, MethodOutcome, Series, TrialRecord, TrialSetup};
