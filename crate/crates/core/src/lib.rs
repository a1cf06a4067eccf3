//! Joint LEO-satellite / ground-UE tracking with an extended Kalman filter,
//! and the link quantities a non-terrestrial network needs from it: timing
//! advance, Doppler shift, time difference of arrival and clock drift, over
//! the windows in which the satellite is visible.
//!
//! Modules, bottom-up:
//!
//! - [`geo`]: geodetic conversion and satellite–UE geometry
//! - [`dynamics`]: the Euler motion model, its Jacobian, and the truth orbit
//! - [`estimator`]: Kalman/EKF predict and update, steady state, densities
//! - [`link`]: TA, Doppler, TDoA, clock drift, visibility windows
//! - [`scenario`]: truth + measurement synthesis + filter, metrics, Monte Carlo
//! - [`config`], [`ephemeris`], [`output`]: the file formats behind the `ntnsim` binary
//! - [`cli`]: the run pipeline the binary drives
//!
//! Units are km, km/s, s and radians throughout; degrees appear only in
//! configuration files and on the command line.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![cfg_attr(
    test,
    allow(clippy::inconsistent_digit_grouping, clippy::excessive_precision)
)]

pub mod cli;
pub mod config;
pub mod dynamics;
pub mod ephemeris;
pub mod error;
pub mod estimator;
pub mod geo;
pub mod link;
pub mod output;
pub mod scenario;

pub use error::{Error, Result};
