pub mod cli;
pub mod config;
pub mod deploy;
pub mod export;
pub mod geo;
pub mod hddl;
pub mod htn;
pub mod monitor;
pub mod scenario;
pub mod sim;
