//! Scenario files, plan dumps, Monte-Carlo sweeps and the `wpcn` command
//! line on top of [`wpcn_core`].

pub mod cli;
pub mod plan_io;
pub mod scenario;
pub mod sweep;
