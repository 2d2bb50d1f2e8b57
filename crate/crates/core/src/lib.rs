//! Uplink spectral-efficiency simulator for cell-free massive MIMO deployed on
//! the O-RAN node hierarchy.
//!
//! O-RUs host antennas, O-DUs run the multi-antenna processing (MAP) and the
//! Near-RT RIC decides which O-DUs serve which UE. Five deployment options
//! differ in the size of the inter-working antenna set (one O-RU, one O-DU or
//! all antennas) and in whether O-DUs can exchange estimates of edge users:
//!
//! | option | inter-working set | inter-O-DU coordination |
//! |--------|-------------------|-------------------------|
//! | 1      | O-RU              | absent                  |
//! | 2      | O-RU              | present                 |
//! | 3      | O-DU              | absent                  |
//! | 4      | O-DU              | present                 |
//! | 5      | global            | n/a                     |
//!
//! [`evaluation::run_campaign`] drops UEs over many setups, evaluates every
//! option and reports SE distributions, 5% outage and fronthaul load.

pub mod channel;
pub mod clustering;
pub mod config;
pub mod error;
pub mod evaluation;
pub mod linalg;
pub mod map_engine;
pub mod topology;

pub use channel::{ChannelParams, ChannelRealization, PathLossParams};
pub use clustering::{Coordination, DeploymentOption, UserAssignment, UserCategory};
pub use config::{parse_config, ConfigOverrides, SimConfig};
pub use error::{Error, Result};
pub use evaluation::{run_campaign, LoadReport, ResultSet};
pub use map_engine::{Branch, FusionReport};
pub use topology::{build_topology, Level, Topology};

pub use nalgebra::{DMatrix, DVector};
pub use num_complex::Complex64;
