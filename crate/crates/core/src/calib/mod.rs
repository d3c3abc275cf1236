//! Calibration snapshots, their fixed-order vectorization, noise-model
//! construction and a synthetic drift generator.

mod io;
mod snapshot;
mod synth;

pub use io::{
    calibrations_to_string, parse_calibrations, parse_calibrations_str, series_schema,
    validate_series, write_calibrations, write_calibrations_csv,
};
pub use snapshot::{
    build_noise_model, build_noise_model_with_cost, vectorize, CalibrationSnapshot,
    CalibrationVector, Label, Schema,
};
pub use synth::{
    synth_timeseries, synth_timeseries_detailed, DriftConfig, SynthSeries, MAX_RATE, MIN_RATE,
};
