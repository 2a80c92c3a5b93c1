//! Wireless environment, comparison schemes and Monte-Carlo experiments.

mod config;
mod environment;
mod experiment;
mod report;

pub use config::{parse_schemes, ConfigError, ExperimentConfig, ExperimentParams, Scheme, SchemeSelection};
pub use environment::{
    apply_path_loss, calibrate_power, norm_sqr, sample_channel, sample_fading, sample_shadowing_map, ChannelParams,
    Environment,
    EnvironmentError,
};
pub use experiment::{prepare, run_drop, run_experiment, DropDraw, DropOutcome, ExperimentResult, Prepared, SimError};
pub use report::{emit_cdf, emit_summary, export_report, load_report, parse_report, DropStats, ReportError, Summary};
