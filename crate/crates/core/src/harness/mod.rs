//! Experiment driver: configuration, manufactured problems, solver
//! selection, ladders and file outputs.

pub mod config;
pub mod export;
pub mod problem;
pub mod solvers;
pub mod study;

pub use config::ExperimentConfig;
pub use export::{export_artifacts, write_solution_csv, write_subdivision_csv};
pub use problem::{manufactured_problem, Orientation, Problem};
pub use solvers::{energy_difference, expand_solvers, solver_registry, Discretization, SolveOutcome, Solver};
pub use study::{ladder, run_study, solver_disagreements, RunRecord, StudyReport, STUDY_HEADER};
