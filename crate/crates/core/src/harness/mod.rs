//! Multi-day experiments over fluctuating noise, comparison strategies,
//! summary tables, loss-surface scans and the command line.

mod cli;
mod metrics;
mod surface;
mod timeline;

pub use cli::cli_main;
pub use metrics::{summarize, write_table_csv, SummaryRow, DEFAULT_THRESHOLDS};
pub use surface::{
    scan_loss_surface, toy_dataset, toy_model, toy_snapshot, write_grid_csv, Grid, Surfaces,
};
pub use timeline::{
    initial_model, run_timeline, DayRecord, Experiment, ExperimentConfig, Strategy,
    TimelineResult,
};
