//! Drone routing with energy replenishment.
//!
//! A single drone visits every destination and meets a replenishment rover
//! at replenishment locations (RLs). The crate provides the instance model,
//! a very large-scale neighborhood search built from two dynamic programs,
//! an exact subset DP, comparison baselines, a benchmark generator, an
//! extended energy model and the command implementations behind the `drpe`
//! binary.

pub mod baselines;
pub mod energy;
pub mod error;
pub mod exact;
pub mod generator;
pub mod harness;
pub mod io;
pub mod meta_graph;
pub mod model;
pub mod ops_graph;
pub mod oracle;
pub mod search;

#[cfg(test)]
mod testkit;

pub use baselines::{initial_tsp_sequence, limop, rts_3nn, sa_rts_3opt, Budget, SaParams};
pub use energy::{pract, ExtendedCosts};
pub use error::{Error, Result};
pub use exact::{solve_exact, ExactConfig};
pub use generator::{generate, GeneratorSetting, SettingName, Size};
pub use model::{validate_tour, CostModel, DroneTour, Instance, Operation, RechargingLeg, TourElement};
pub use oracle::split_optimal;
pub use search::{rts, vlsn, vlsn_ls, vlsn_vnd, SearchConfig, SolveReport};
