//! Contract-theoretic incentive design for federated learning in mobile
//! networks: cost model, optimal menu solver, independent feasibility oracle,
//! Stackelberg baselines and a market simulator.

// Guards are written `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod cost;
pub mod error;
pub mod market;
pub mod oracle;
pub mod solver;
pub mod stackelberg;

pub use config::{config_to_json, parse_config, parse_config_str};
pub use cost::{ContractItem, SystemParams, TypeProfile};
pub use error::{Error, Result};
pub use market::{run_scenario, ScenarioConfig, ScenarioReport};
pub use solver::{solve, ContractMenu, SolverOptions};
