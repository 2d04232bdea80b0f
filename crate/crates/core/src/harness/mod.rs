//! Experiment configuration, report persistence, convergence sweeps and the
//! naive oracle.

mod config;
pub mod oracle;
mod run;
mod sweep;

pub use config::{ExperimentConfig, FieldSpec, Functional, LipConfig, OutputSpec, Params, SpaceSpec, OUT_DIR_ENV};
pub use oracle::{OracleCheck, OracleReport};
pub use run::{
    build_field, build_space, execute, output_dir, run_experiment, Report, RunOutput, SpaceSummary, Table, SCHEMA,
};
pub use sweep::{convergence_sweep, write_sweep, SweepResult, SweepRow};
