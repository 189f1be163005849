//! Configuration, the coupled loop, experiments and file output.

pub mod commands;
pub mod config;
pub mod experiments;
pub mod mms;
pub mod run;

pub use config::{
    ExperimentConfig, FlowConfig, InitialConfig, MmsConfig, NumericsConfig, OutputConfig, PhiInit,
    SigmaInit, SimConfig, SourcesConfig, TimeConfig,
};
pub use experiments::{darcy_sweep, frozen_force_sweep, n_sweep, p_sweep, sweep_pool};
pub use mms::run_mms;
pub use run::{run, validate_config, RunStatus, RunSummary, Simulation, ValidationReport};
