//! Talbot-Lau matter-wave interferometry: grating coefficients, Talbot
//! coefficients, decoherence and a direct-propagation oracle.

pub mod cli;
pub mod config;
pub mod decoherence;
pub mod error;
pub mod gratings;
pub mod model;
pub mod oracle;
pub mod quadrature;
pub mod talbot;
pub mod units;
