//! Shared fixtures for the criterion benches.

use cfran_core::channel::{generate_realization, setup_seed, ChannelParams};
use cfran_core::clustering::categorize_users;
use cfran_core::{build_topology, ChannelRealization, SimConfig, Topology, UserAssignment};

pub struct Fixture {
    pub config: SimConfig,
    pub topology: Topology,
    pub channel: ChannelRealization,
    pub assignment: UserAssignment,
}

/// First setup of the default scenario.
pub fn default_setup() -> Fixture {
    let config = SimConfig::default();
    let topology = build_topology(&config.topology).expect("default topology");
    let channel = generate_realization(
        &topology,
        config.campaign.k_users,
        setup_seed(config.master_seed, 0),
        &ChannelParams::from_config(&config),
    )
    .expect("default channel");
    let assignment = categorize_users(&channel, &topology, config.campaign.edge_threshold_db);
    Fixture { config, topology, channel, assignment }
}

/// First UE of each category, if present.
pub fn sample_users(f: &Fixture) -> Vec<(&'static str, usize)> {
    let mut out = vec![];
    for cat in [cfran_core::UserCategory::Local, cfran_core::UserCategory::Edge] {
        if let Some(ue) = f.assignment.category.iter().position(|&c| c == cat) {
            out.push((cat.as_str(), ue));
        }
    }
    out
}
