//! Noise-adaptive compression of quantum neural networks.
//!
//! The crate is organized bottom-up:
//!
//! - [`qcore`]: circuit IR and exact noisy simulation
//! - [`calib`]: device calibration snapshots, vectorization, synthetic drift
//! - [`qnn`]: encoding + ansatz models, parameter-shift training
//! - [`compress`]: noise-aware ADMM compression
//! - [`repo`]: offline model repository and the online matching manager
//! - [`harness`]: multi-day experiments, metrics and the CLI

pub mod error;
pub mod calib;
pub mod qcore;
pub mod qnn;
pub mod compress;
pub mod repo;
pub mod harness;

pub use error::{Error, Result};
