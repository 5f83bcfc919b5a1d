//! Configuration-driven experiment runner for the RIS-assisted MIMO SNR
//! model: outage sweeps, distribution tables, and plot-script artifacts on
//! top of [`rislink_core`].

pub mod config;
pub mod experiments;
pub mod plot;
