//! Experiment pipelines and the command-line interface.

pub mod cli;
pub mod ensemble;
pub mod ewmin;
pub mod sweep;
pub mod table;

pub use cli::{cli_main, WORKERS_ENV};
pub use ensemble::{ensemble_study, EnsembleRow, EnsembleStudyConfig, EnsembleTable, ENSEMBLE_COLUMNS};
pub use ewmin::{ew_min_config, ew_min_search, ew_min_search_state, EwMinResult};
pub use sweep::{auto_select_split, linspace, theta_sweep, SweepConfig, SweepRow, SweepTable, SWEEP_COLUMNS};
pub use table::{fmt_sig, wilson_interval};
