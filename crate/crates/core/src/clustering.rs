//! User categorization and serving-set selection (the RIC-side step).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::topology::{Level, Topology};

/// Presence of the inter-O-DU coordination interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coordination {
    Absent,
    Present,
    /// Global processing; the question does not arise.
    NotApplicable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DeploymentOption {
    pub id: u8,
    pub interworking_level: Level,
    pub coordination: Coordination,
}

impl DeploymentOption {
    pub const ALL: [DeploymentOption; 5] = [
        DeploymentOption::new(1, Level::Oru, Coordination::Absent),
        DeploymentOption::new(2, Level::Oru, Coordination::Present),
        DeploymentOption::new(3, Level::Odu, Coordination::Absent),
        DeploymentOption::new(4, Level::Odu, Coordination::Present),
        DeploymentOption::new(5, Level::Global, Coordination::NotApplicable),
    ];

    const fn new(id: u8, interworking_level: Level, coordination: Coordination) -> Self {
        Self {
            id,
            interworking_level,
            coordination,
        }
    }

    pub fn from_id(id: u8) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|o| o.id == id)
            .ok_or(Error::InvalidConfig {
                key: "campaign.options",
                reason: format!("option {id} is not one of 1..=5"),
            })
    }

    pub fn coordinated(&self) -> bool {
        self.coordination == Coordination::Present
    }
}

impl fmt::Display for DeploymentOption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "option {}", self.id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UserCategory {
    Local,
    Edge,
}

impl UserCategory {
    pub fn as_str(&self) -> &'static str {
        match self {
            UserCategory::Local => "local",
            UserCategory::Edge => "edge",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserAssignment {
    pub serving_odu: Vec<usize>,
    pub category: Vec<UserCategory>,
    /// Serving O-DU first.
    pub cooperating_odus: Vec<Vec<usize>>,
}

impl UserAssignment {
    pub fn n_users(&self) -> usize {
        self.serving_odu.len()
    }

    pub fn n_edge(&self) -> usize {
        self.category
            .iter()
            .filter(|c| **c == UserCategory::Edge)
            .count()
    }
}

/// Aggregate linear large-scale gain from one UE to every O-DU.
pub fn odu_gains(channel: &ChannelRealization, topology: &Topology, ue: usize) -> Vec<f64> {
    topology
        .odus
        .iter()
        .map(|odu| odu.antenna_range().map(|m| channel.beta(m, ue)).sum())
        .collect()
}

/// Decision for one UE given its per-O-DU aggregate gains (linear).
///
/// The best O-DU serves (ties go to the lowest id). The UE is an edge user
/// when the runner-up is within `edge_threshold_db` of the best, in which case
/// both cooperate.
pub fn categorize_from_gains(gains: &[f64], edge_threshold_db: f64) -> (UserCategory, Vec<usize>) {
    let mut order: Vec<usize> = (0..gains.len()).collect();
    order.sort_by(|&a, &b| gains[b].total_cmp(&gains[a]).then(a.cmp(&b)));
    let best = order[0];
    match order.get(1) {
        Some(&second) if 10.0 * (gains[best] / gains[second]).log10() <= edge_threshold_db => {
            (UserCategory::Edge, vec![best, second])
        }
        _ => (UserCategory::Local, vec![best]),
    }
}

pub fn categorize_users(
    channel: &ChannelRealization,
    topology: &Topology,
    edge_threshold_db: f64,
) -> UserAssignment {
    let k_users = channel.n_users();
    let mut out = UserAssignment {
        serving_odu: Vec::with_capacity(k_users),
        category: Vec::with_capacity(k_users),
        cooperating_odus: Vec::with_capacity(k_users),
    };
    for ue in 0..k_users {
        let (cat, coop) = categorize_from_gains(&odu_gains(channel, topology, ue), edge_threshold_db);
        out.serving_odu.push(coop[0]);
        out.category.push(cat);
        out.cooperating_odus.push(coop);
    }
    out
}

/// O-DUs whose antennas serve `ue` under `option`, serving O-DU first.
/// Empty for option 5, which is served by the global antenna set.
pub fn serving_odus(assignment: &UserAssignment, option: DeploymentOption, ue: usize) -> Vec<usize> {
    match option.coordination {
        Coordination::NotApplicable => Vec::new(),
        Coordination::Absent => vec![assignment.serving_odu[ue]],
        Coordination::Present => assignment.cooperating_odus[ue].clone(),
    }
}

/// Global antenna indices serving `ue`, ascending.
pub fn serving_antenna_set(
    assignment: &UserAssignment,
    option: DeploymentOption,
    topology: &Topology,
    ue: usize,
) -> Vec<usize> {
    if option.interworking_level == Level::Global {
        return (0..topology.n_antennas()).collect();
    }
    let mut set: Vec<usize> = serving_odus(assignment, option, ue)
        .into_iter()
        .flat_map(|d| topology.odus[d].antenna_range())
        .collect();
    set.sort_unstable();
    set
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HybridCluster {
    /// O-RU ids, strongest first.
    pub orus: Vec<usize>,
    /// O-DUs owning the selected O-RUs, ascending.
    pub odus: Vec<usize>,
}

/// User-centric selection on top of network-centric O-DU clusters: pick each
/// UE's `n_select` strongest O-RUs by aggregate large-scale gain (ties to the
/// lower id) and report the O-DUs that own them, which are the clusters the
/// UE's data must be distributed to.
pub fn hybrid_cluster_steps(
    channel: &ChannelRealization,
    topology: &Topology,
    n_select: usize,
) -> Result<Vec<HybridCluster>> {
    let n_orus = topology.n_orus();
    if n_select == 0 || n_select > n_orus {
        return Err(Error::InvalidConfig {
            key: "campaign.hybrid_n_select",
            reason: format!("must be in 1..={n_orus}, got {n_select}"),
        });
    }
    let clusters = (0..channel.n_users())
        .map(|ue| {
            let mut scored: Vec<(usize, usize, f64)> = topology
                .orus()
                .map(|o| {
                    let g: f64 = o.antenna_range().map(|m| channel.beta(m, ue)).sum();
                    (o.id, o.odu, g)
                })
                .collect();
            scored.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)));
            scored.truncate(n_select);
            let mut odus: Vec<usize> = scored.iter().map(|s| s.1).collect();
            odus.sort_unstable();
            odus.dedup();
            HybridCluster {
                orus: scored.iter().map(|s| s.0).collect(),
                odus,
            }
        })
        .collect();
    Ok(clusters)
}
