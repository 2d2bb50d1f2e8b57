//! Multi-antenna processing: MMSE combiners on antenna blocks, fusion of
//! block-local estimates, and per-option uplink SINR.
//!
//! Signal model on a block `B` for user `k`:
//! `y_B = sum_i h_{B,i} s_i + n_B` with `E|s_i|^2 = p` and `n_B ~ CN(0, s2 I)`.
//! A combiner `v` produces the estimate `v^H y_B`, described downstream only by
//! its effective gains `g_i = v^H h_{B,i}` and noise power `s2 |v|^2`. Fusion
//! of several such estimates is again linear, so a fused estimate is itself a
//! [`Branch`] and can be forwarded over the inter-O-DU interface.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::channel::ChannelRealization;
use crate::clustering::{serving_odus, DeploymentOption, UserAssignment};
use crate::error::{Error, Result};
use crate::linalg::HermitianCholesky;
use crate::topology::{Level, Topology};

/// One antenna block used as an inter-working unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Block {
    /// Owning O-DU; `None` for the global block.
    pub odu: Option<usize>,
    pub antennas: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BlockPartition {
    /// Serving antenna set, ascending.
    pub serving: Vec<usize>,
    pub blocks: Vec<Block>,
}

pub fn block_partition(
    option: DeploymentOption,
    assignment: &UserAssignment,
    topology: &Topology,
    ue: usize,
) -> BlockPartition {
    let blocks: Vec<Block> = match option.interworking_level {
        Level::Global => vec![Block {
            odu: None,
            antennas: 0..topology.n_antennas(),
        }],
        Level::Odu => serving_odus(assignment, option, ue)
            .into_iter()
            .map(|d| Block {
                odu: Some(d),
                antennas: topology.odus[d].antenna_range(),
            })
            .collect(),
        Level::Oru => serving_odus(assignment, option, ue)
            .into_iter()
            .flat_map(|d| {
                topology.odus[d].orus.iter().map(move |o| Block {
                    odu: Some(d),
                    antennas: o.antenna_range(),
                })
            })
            .collect(),
    };
    let mut serving: Vec<usize> = blocks.iter().flat_map(|b| b.antennas.clone()).collect();
    serving.sort_unstable();
    BlockPartition { serving, blocks }
}

fn check_noise(noise_power: f64) -> Result<()> {
    if !(noise_power.is_finite() && noise_power > 0.0) {
        return Err(Error::InvalidConfig {
            key: "channel.noise_power",
            reason: format!("must be finite and > 0, got {noise_power}"),
        });
    }
    Ok(())
}

fn check_user(h: &DMatrix<Complex64>, k: usize) -> Result<()> {
    if k >= h.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "user {k} out of range for {} users",
            h.ncols()
        )));
    }
    Ok(())
}

fn with_noise(mut gram: DMatrix<Complex64>, noise_power: f64) -> DMatrix<Complex64> {
    for i in 0..gram.nrows() {
        gram[(i, i)] += noise_power;
    }
    gram
}

/// `v = (p H H^H + s2 I)^{-1} h_k` over the block's antennas.
pub fn mmse_combiner(
    h_block: &DMatrix<Complex64>,
    tx_power: f64,
    noise_power: f64,
    k: usize,
) -> Result<DVector<Complex64>> {
    check_noise(noise_power)?;
    check_user(h_block, k)?;
    let c = with_noise(h_block * h_block.adjoint() * Complex64::from(tx_power), noise_power);
    Ok(HermitianCholesky::factor(&c)?.solve(&h_block.column(k).into_owned()))
}

/// SINR of user `k` obtained with combiner `v`. Invariant to scaling `v`.
pub fn combiner_sinr(
    v: &DVector<Complex64>,
    h_block: &DMatrix<Complex64>,
    tx_power: f64,
    noise_power: f64,
    k: usize,
) -> f64 {
    let vnorm = v.norm_squared();
    if vnorm == 0.0 {
        return 0.0;
    }
    let g = h_block.adjoint() * v;
    let signal = tx_power * g[k].norm_sqr();
    let interference: f64 = g
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != k)
        .map(|(_, gi)| tx_power * gi.norm_sqr())
        .sum();
    signal / (interference + noise_power * vnorm)
}

/// Optimal linear-combining SINR over the antenna set:
/// `p h_k^H (sum_{i != k} p h_i h_i^H + s2 I)^{-1} h_k`.
pub fn joint_sinr(
    h_set: &DMatrix<Complex64>,
    tx_power: f64,
    noise_power: f64,
    k: usize,
) -> Result<f64> {
    check_noise(noise_power)?;
    check_user(h_set, k)?;
    let others = h_set.clone().remove_column(k);
    let psi = with_noise(&others * others.adjoint() * Complex64::from(tx_power), noise_power);
    let chol = HermitianCholesky::factor(&psi)?;
    Ok(tx_power * chol.inv_quad_form(&h_set.column(k).into_owned()))
}

/// A scalar estimate of user `k`'s symbol as seen by the fusion stage.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    /// Effective gain towards every user (length K).
    pub gains: DVector<Complex64>,
    /// Noise power of the estimate.
    pub noise: f64,
}

impl Branch {
    /// Branch produced by combiner `v` on `h_block`.
    pub fn from_combiner(v: &DVector<Complex64>, h_block: &DMatrix<Complex64>, noise_power: f64) -> Self {
        Self {
            gains: h_block.adjoint() * v,
            noise: noise_power * v.norm_squared(),
        }
    }

    /// MMSE branch of user `k` on one block.
    pub fn mmse(h_block: &DMatrix<Complex64>, tx_power: f64, noise_power: f64, k: usize) -> Result<Self> {
        let v = mmse_combiner(h_block, tx_power, noise_power, k)?;
        Ok(Self::from_combiner(&v, h_block, noise_power))
    }

    pub fn sinr(&self, tx_power: f64, k: usize) -> f64 {
        let signal = tx_power * self.gains[k].norm_sqr();
        if signal == 0.0 {
            return 0.0;
        }
        let interference: f64 = self
            .gains
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != k)
            .map(|(_, g)| tx_power * g.norm_sqr())
            .sum();
        signal / (interference + self.noise)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionReport {
    /// Effective gain of user `k` on each branch.
    pub gains: DVector<Complex64>,
    /// Interference-plus-noise covariance across branches.
    pub covariance: DMatrix<Complex64>,
    /// `F^{-1} a`; the fused estimate is `w^H` applied to the branch estimates.
    pub weights: DVector<Complex64>,
    pub sinr: f64,
}

impl FusionReport {
    /// The fused estimate as a single branch.
    pub fn fused_branch(&self, branches: &[Branch]) -> Branch {
        let k_users = branches[0].gains.len();
        let mut gains = DVector::<Complex64>::zeros(k_users);
        let mut noise = 0.0;
        for (w, b) in self.weights.iter().zip(branches) {
            gains += &b.gains * w.conj();
            noise += w.norm_sqr() * b.noise;
        }
        Branch { gains, noise }
    }
}

/// Realization-optimal linear fusion of branch estimates for user `k`.
///
/// Branch noises are independent (disjoint antenna blocks); interference is
/// correlated across branches through the shared user symbols.
pub fn fuse_estimates(branches: &[Branch], tx_power: f64, k: usize) -> Result<FusionReport> {
    let j = branches.len();
    if j == 0 {
        return Err(Error::DimensionMismatch("fusion needs at least one branch".into()));
    }
    let k_users = branches[0].gains.len();
    if branches.iter().any(|b| b.gains.len() != k_users) {
        return Err(Error::DimensionMismatch("branches disagree on user count".into()));
    }
    if k >= k_users {
        return Err(Error::DimensionMismatch(format!("user {k} out of range")));
    }
    for b in branches {
        check_noise(b.noise)?;
    }

    // G is J x K with G[j, i] = g_{j,i}.
    let g = DMatrix::from_fn(j, k_users, |r, c| branches[r].gains[c]);
    let a = g.column(k).into_owned();
    let others = g.remove_column(k);
    let mut f = &others * others.adjoint() * Complex64::from(tx_power);
    for (r, b) in branches.iter().enumerate() {
        f[(r, r)] += b.noise;
    }
    let chol = HermitianCholesky::factor(&f)?;
    let weights = chol.solve(&a);
    let sinr = tx_power * chol.inv_quad_form(&a);
    Ok(FusionReport {
        gains: a,
        covariance: f,
        weights,
        sinr,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    /// Combining O-RU estimates inside one O-DU.
    IntraOdu(usize),
    /// Combining O-DU estimates over the inter-O-DU interface.
    InterOdu,
}

#[derive(Debug, Clone)]
pub struct UplinkDetail {
    pub sinr: f64,
    pub partition: BlockPartition,
    pub stages: Vec<(Stage, FusionReport)>,
}

// Fuses a group of branches into one, recording the report. Branches with a
// zero combiner (user invisible on that block) carry nothing and are dropped.
fn fuse_group(
    branches: Vec<Branch>,
    tx_power: f64,
    k: usize,
    stage: Stage,
    stages: &mut Vec<(Stage, FusionReport)>,
) -> Result<Option<Branch>> {
    let mut live: Vec<Branch> = branches.into_iter().filter(|b| b.noise > 0.0).collect();
    match live.len() {
        0 => Ok(None),
        1 => Ok(live.pop()),
        _ => {
            let report = fuse_estimates(&live, tx_power, k)?;
            let fused = report.fused_branch(&live);
            stages.push((stage, report));
            Ok(Some(fused))
        }
    }
}

fn block_rows(h: &DMatrix<Complex64>, r: &Range<usize>) -> DMatrix<Complex64> {
    h.rows(r.start, r.len()).into_owned()
}

/// Uplink SINR of `ue` under `option`, with the fusion reports of every stage.
///
/// A single block is processed jointly. Otherwise blocks are grouped by O-DU:
/// several O-RU blocks of one O-DU are fused first, then estimates of distinct
/// O-DUs are fused by the serving O-DU.
pub fn uplink_detail(
    option: DeploymentOption,
    channel: &ChannelRealization,
    assignment: &UserAssignment,
    topology: &Topology,
    ue: usize,
) -> Result<UplinkDetail> {
    let (p, s2) = (channel.tx_power, channel.noise_power);
    let partition = block_partition(option, assignment, topology, ue);
    let mut stages = Vec::new();

    if let [only] = partition.blocks.as_slice() {
        let sinr = joint_sinr(&block_rows(&channel.h, &only.antennas), p, s2, ue)?;
        return Ok(UplinkDetail {
            sinr,
            partition,
            stages,
        });
    }

    let mut odu_branches: Vec<Branch> = Vec::new();
    let mut start = 0;
    while start < partition.blocks.len() {
        let owner = partition.blocks[start].odu;
        let end = start
            + partition.blocks[start..]
                .iter()
                .take_while(|b| b.odu == owner)
                .count();
        let branches = partition.blocks[start..end]
            .iter()
            .map(|b| Branch::mmse(&block_rows(&channel.h, &b.antennas), p, s2, ue))
            .collect::<Result<Vec<_>>>()?;
        let stage = Stage::IntraOdu(owner.expect("multi-block groups belong to an O-DU"));
        if let Some(branch) = fuse_group(branches, p, ue, stage, &mut stages)? {
            odu_branches.push(branch);
        }
        start = end;
    }

    let sinr = match fuse_group(odu_branches, p, ue, Stage::InterOdu, &mut stages)? {
        Some(b) => match stages.last() {
            Some((_, r)) => r.sinr,
            None => b.sinr(p, ue),
        },
        None => 0.0,
    };
    Ok(UplinkDetail {
        sinr,
        partition,
        stages,
    })
}

pub fn uplink_sinr(
    option: DeploymentOption,
    channel: &ChannelRealization,
    assignment: &UserAssignment,
    topology: &Topology,
    ue: usize,
) -> Result<f64> {
    uplink_detail(option, channel, assignment, topology, ue).map(|d| d.sinr)
}

/// MMSE vectors of one inter-working unit for the users it serves.
#[derive(Debug, Clone, PartialEq)]
pub struct MapUnit {
    pub level: Level,
    pub owner: usize,
    pub antennas: Range<usize>,
    pub users: Vec<usize>,
    /// `|antennas| x |users|`.
    pub vectors: DMatrix<Complex64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapMatrix {
    pub units: Vec<MapUnit>,
}

/// Per-unit MAP matrices for a whole setup under `option`.
pub fn map_matrix(
    option: DeploymentOption,
    channel: &ChannelRealization,
    assignment: &UserAssignment,
    topology: &Topology,
) -> Result<MapMatrix> {
    let (p, s2) = (channel.tx_power, channel.noise_power);
    let units: Vec<(usize, Range<usize>)> = match option.interworking_level {
        Level::Oru => topology.orus().map(|o| (o.id, o.antenna_range())).collect(),
        Level::Odu => topology.odus.iter().map(|d| (d.id, d.antenna_range())).collect(),
        Level::Global => vec![(0, 0..topology.n_antennas())],
    };
    let partitions: Vec<BlockPartition> = (0..channel.n_users())
        .map(|ue| block_partition(option, assignment, topology, ue))
        .collect();

    let mut out = Vec::with_capacity(units.len());
    for (owner, antennas) in units {
        let users: Vec<usize> = partitions
            .iter()
            .enumerate()
            .filter(|(_, part)| part.blocks.iter().any(|b| b.antennas == antennas))
            .map(|(ue, _)| ue)
            .collect();
        let h_unit = block_rows(&channel.h, &antennas);
        let mut vectors = DMatrix::<Complex64>::zeros(antennas.len(), users.len());
        for (col, &ue) in users.iter().enumerate() {
            vectors.set_column(col, &mmse_combiner(&h_unit, p, s2, ue)?);
        }
        out.push(MapUnit {
            level: option.interworking_level,
            owner,
            antennas,
            users,
            vectors,
        });
    }
    Ok(MapMatrix { units: out })
}

/// Downlink transmit vector `sum_k s_k w_k` of one unit.
pub fn assemble_dl_transmit(
    symbols: &DVector<Complex64>,
    map_matrix: &DMatrix<Complex64>,
) -> Result<DVector<Complex64>> {
    if symbols.len() != map_matrix.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "{} symbols for a MAP matrix with {} columns",
            symbols.len(),
            map_matrix.ncols()
        )));
    }
    Ok(map_matrix * symbols)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn scalar_combiner() {
        let h = DMatrix::from_element(1, 1, c(1.0));
        let v = mmse_combiner(&h, 1.0, 1.0, 0).unwrap();
        assert!((v[0] - c(0.5)).norm() < 1e-15);
    }

    #[test]
    fn orthogonal_users_combiner() {
        let h = DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(1.0)]);
        let v = mmse_combiner(&h, 1.0, 1.0, 0).unwrap();
        assert!((v[0] - c(0.5)).norm() < 1e-15);
        assert!(v[1].norm() < 1e-15);
    }

    #[test]
    fn single_user_joint_sinr_is_snr() {
        let h = DMatrix::from_column_slice(3, 1, &[c(1.0), Complex64::new(0.0, 2.0), c(-0.5)]);
        let s = joint_sinr(&h, 2.0, 0.5, 0).unwrap();
        assert!((s - 2.0 * 5.25 / 0.5).abs() < 1e-12);
    }

    #[test]
    fn zero_channel_zero_sinr() {
        let mut h = DMatrix::from_element(2, 2, c(1.0));
        h.set_column(0, &DVector::zeros(2));
        assert_eq!(joint_sinr(&h, 1.0, 1.0, 0).unwrap(), 0.0);
        assert_eq!(Branch::mmse(&h, 1.0, 1.0, 0).unwrap().sinr(1.0, 0), 0.0);
    }

    #[test]
    fn rejects_nonpositive_noise() {
        let h = DMatrix::from_element(1, 1, c(1.0));
        assert!(joint_sinr(&h, 1.0, 0.0, 0).is_err());
        assert!(mmse_combiner(&h, 1.0, -1.0, 0).is_err());
    }

    #[test]
    fn two_branch_mrc_addition() {
        let branches = vec![
            Branch { gains: DVector::from_element(1, c(1.0)), noise: 1.0 },
            Branch { gains: DVector::from_element(1, c(1.0)), noise: 1.0 },
        ];
        let r = fuse_estimates(&branches, 1.0, 0).unwrap();
        assert!((r.sinr - 2.0).abs() < 1e-14);
    }

    #[test]
    fn single_branch_fusion_is_identity() {
        let b = Branch {
            gains: DVector::from_vec(vec![Complex64::new(0.3, -1.2), c(0.4), Complex64::new(0.0, 0.9)]),
            noise: 0.7,
        };
        let r = fuse_estimates(std::slice::from_ref(&b), 1.5, 0).unwrap();
        assert!((r.sinr - b.sinr(1.5, 0)).abs() < 1e-12 * r.sinr);
    }

    #[test]
    fn dl_assembly() {
        let w = DMatrix::from_column_slice(2, 1, &[c(0.5), c(0.5)]);
        let x = assemble_dl_transmit(&DVector::from_element(1, c(1.0)), &w).unwrap();
        assert_eq!(x, DVector::from_vec(vec![c(0.5), c(0.5)]));
        let w2 = DMatrix::<Complex64>::identity(2, 2);
        let x2 = assemble_dl_transmit(&DVector::from_element(2, c(1.0)), &w2).unwrap();
        assert_eq!(x2, DVector::from_vec(vec![c(1.0), c(1.0)]));
        assert!(assemble_dl_transmit(&DVector::from_element(3, c(1.0)), &w2).is_err());
    }
}
