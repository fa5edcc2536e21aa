//! Simulator, controllers, telemetry link and ground station for a kite-borne
//! tethered flying robot controlled solely through its winch line.

pub mod cli;
pub mod clock;
pub mod config;
pub mod controller;
pub mod error;
pub mod physics;
pub mod scenarios;
pub mod sensors;
pub mod station;
pub mod telemetry;
pub mod tuning;
pub mod wind;

pub use error::{Error, Result};
