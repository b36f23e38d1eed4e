//! Experiment configuration, orchestration, results ledger and plots.

pub mod config;
pub mod experiments;
pub mod ledger;
pub mod plot;

pub use config::{
    ConvergenceConfig, DegreeFieldConfig, DimensionConfig, DistanceConfig, DivergenceConfig, Experiment, ExperimentConfig,
    FieldMethod, HolderStabilityConfig, MapSpec, Perturbation, ScalingConfig, SeminormConfig,
};
pub use experiments::{build_field, grid_for, run_and_record, run_experiment, Outcome};
pub use ledger::{Check, ResultsLedger, Summary};
pub use plot::{field_heatmap, Plot, Series, Style};
