//! Tick-by-tick market data diagnostics and a non-homogeneous normal
//! compound Poisson process (NCPP) simulator.
//!
//! The crate covers the full pipeline for intraday trade records:
//!
//! - [`tickdata`]: CSV ingestion, misprint cleaning (duplicate-epoch
//!   collapsing, waiting-time cap), intertrade durations and log-returns;
//! - [`waitstats`]: Weibull survival fits by the method of moments,
//!   Anderson-Darling exponentiality tests, survival scaling collapse;
//! - [`scaling`]: return histograms, zero-return probability, Lévy
//!   stability index regression, distribution rescaling;
//! - [`seasonality`]: intraday volatility/activity profiles and the
//!   leverage correlation function;
//! - [`ncpp`]: the piecewise-stationary compound Poisson model — seasonal
//!   profile estimation, theoretical CDFs, seeded Monte Carlo simulation
//!   and convergence diagnostics;
//! - [`pipeline`]: batch orchestration, synthetic dataset generation and
//!   machine-readable reports.
//!
//! All randomness flows from explicit seeds; identical inputs and seeds
//! reproduce bit-identical outputs.

pub mod config;
pub mod error;
pub mod ncpp;
pub mod pipeline;
pub mod report;
pub mod rng;
pub mod scaling;
pub mod seasonality;
pub mod stats;
pub mod tickdata;
pub mod waitstats;

pub use error::{Error, Result};
