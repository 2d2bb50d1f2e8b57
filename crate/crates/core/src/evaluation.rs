//! Monte-Carlo campaigns, outage statistics and signaling-load accounting.

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{
    generate_realization, import_realization, setup_seed, ChannelParams, ChannelRealization,
};
use crate::clustering::{
    categorize_users, hybrid_cluster_steps, serving_antenna_set, Coordination, DeploymentOption,
    HybridCluster, UserAssignment, UserCategory,
};
use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::map_engine::{block_partition, uplink_sinr};
use crate::topology::{build_topology, Level, OruCategory, Topology};

/// Outage level used throughout the reports.
pub const OUTAGE_Q: f64 = 0.05;

pub const CSV_HEADER: &str = "option,setup,ue,category,serving_antennas,sinr,se";

pub const SINR_MODEL: &str = "uplink, perfect CSI, realization-optimal linear combining \
     (MMSE per block, optimal fusion across blocks); SE = log2(1 + SINR) per subcarrier";

pub fn uplink_se(sinr: f64) -> Result<f64> {
    if sinr < 0.0 || sinr.is_nan() {
        return Err(Error::NegativeSinr(sinr));
    }
    Ok((1.0 + sinr).log2())
}

fn sorted(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Points `(x_(i), i / N)` for `i = 1..=N`, ties kept.
pub fn empirical_cdf(samples: &[f64]) -> Result<Vec<(f64, f64)>> {
    let v = sorted(samples)?;
    let n = v.len() as f64;
    Ok(v
        .into_iter()
        .enumerate()
        .map(|(i, x)| (x, (i + 1) as f64 / n))
        .collect())
}

/// Lower empirical quantile: the `ceil(q N)`-th smallest sample.
pub fn outage_quantile(samples: &[f64], q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::QuantileOutOfRange(q));
    }
    let v = sorted(samples)?;
    let n = v.len();
    let r = q * n as f64;
    // q N that is an integer up to rounding must not be bumped to the next rank.
    let rank = if (r - r.round()).abs() <= 1e-9 * n as f64 {
        r.round()
    } else {
        r.ceil()
    };
    let rank = (rank as usize).clamp(1, n);
    Ok(v[rank - 1])
}

/// Ratios of each option's outage to option 1's; option 1 maps to exactly 1.
pub fn improvement_ratios(outages: &[(u8, f64)]) -> Result<Vec<(u8, f64)>> {
    let base = outages
        .iter()
        .find(|(id, _)| *id == 1)
        .map(|(_, o)| *o)
        .ok_or(Error::MissingOption(1))?;
    if !(base > 0.0) {
        return Err(Error::UndefinedRatio);
    }
    Ok(outages
        .iter()
        .map(|&(id, o)| (id, if id == 1 { 1.0 } else { o / base }))
        .collect())
}

pub fn improvement_table(results: &ResultSet) -> Result<Vec<(u8, f64)>> {
    let outages = results
        .options
        .iter()
        .map(|&id| Ok((id, results.outage(id, OUTAGE_Q)?)))
        .collect::<Result<Vec<_>>>()?;
    improvement_ratios(&outages)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoadReport {
    pub option: u8,
    /// User-plane streams each O-RU exchanges with its O-DU per symbol.
    pub fronthaul_streams_per_oru: Vec<usize>,
    pub oru_categories: Vec<OruCategory>,
    /// Estimate scalars crossing the inter-O-DU interface per symbol.
    pub inter_odu_scalars_per_symbol: usize,
    /// Effective-gain values crossing the inter-O-DU interface per setup.
    pub inter_odu_gain_values_per_setup: usize,
    /// Largest inter-working block used to compute each UE's MAP vectors.
    pub map_antenna_set_size: Vec<usize>,
}

pub fn signaling_load(
    option: DeploymentOption,
    assignment: &UserAssignment,
    topology: &Topology,
) -> LoadReport {
    let k_users = assignment.n_users();
    let serving: Vec<Vec<usize>> = (0..k_users)
        .map(|ue| serving_antenna_set(assignment, option, topology, ue))
        .collect();
    let fronthaul_streams_per_oru = topology
        .orus()
        .map(|o| {
            let r = o.antenna_range();
            serving
                .iter()
                .filter(|set| set.iter().any(|m| r.contains(m)))
                .count()
        })
        .collect();

    let helpers: usize = if option.coordination == Coordination::Present {
        (0..k_users)
            .filter(|&ue| assignment.category[ue] == UserCategory::Edge)
            .map(|ue| assignment.cooperating_odus[ue].len().saturating_sub(1))
            .sum()
    } else {
        0
    };

    let map_antenna_set_size = (0..k_users)
        .map(|ue| {
            block_partition(option, assignment, topology, ue)
                .blocks
                .iter()
                .map(|b| b.antennas.len())
                .max()
                .unwrap_or(0)
        })
        .collect();

    LoadReport {
        option: option.id,
        fronthaul_streams_per_oru,
        oru_categories: topology.orus().map(|o| o.category).collect(),
        inter_odu_scalars_per_symbol: helpers,
        inter_odu_gain_values_per_setup: helpers * k_users,
        map_antenna_set_size,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    pub option: u8,
    pub setup: usize,
    pub ue: usize,
    pub category: UserCategory,
    pub serving_antennas: usize,
    pub sinr: f64,
    pub se: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SetupRecord {
    pub setup: usize,
    /// RNG stream seed, or `None` for imported channels.
    pub stream_seed: Option<u64>,
    pub source: Option<PathBuf>,
    pub assignment: UserAssignment,
    pub hybrid: Vec<HybridCluster>,
    pub load: Vec<LoadReport>,
}

#[derive(Debug, Clone)]
pub struct ResultSet {
    pub config: SimConfig,
    pub seed: u64,
    pub noise_power: f64,
    pub options: Vec<u8>,
    /// Ordered by option, then setup, then UE.
    pub samples: Vec<Sample>,
    pub setups: Vec<SetupRecord>,
}

impl ResultSet {
    pub fn samples_of(&self, option: u8) -> impl Iterator<Item = &Sample> {
        self.samples.iter().filter(move |s| s.option == option)
    }

    pub fn se_of(&self, option: u8) -> Vec<f64> {
        self.samples_of(option).map(|s| s.se).collect()
    }

    pub fn outage(&self, option: u8, q: f64) -> Result<f64> {
        if !self.options.contains(&option) {
            return Err(Error::MissingOption(option));
        }
        outage_quantile(&self.se_of(option), q)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for s in &self.samples {
            writeln!(
                w,
                "{},{},{},{},{},{:.12e},{:.12e}",
                s.option,
                s.setup,
                s.ue,
                s.category.as_str(),
                s.serving_antennas,
                s.sinr,
                s.se
            )?;
        }
        Ok(())
    }

    pub fn csv_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }

    pub fn summary(&self) -> Result<CampaignSummary> {
        let ratios = improvement_table(self).ok();
        let options = self
            .options
            .iter()
            .map(|&id| {
                let opt = DeploymentOption::from_id(id)?;
                let se = self.se_of(id);
                let per_category = [UserCategory::Local, UserCategory::Edge]
                    .into_iter()
                    .map(|cat| {
                        let v: Vec<f64> = self
                            .samples_of(id)
                            .filter(|s| s.category == cat)
                            .map(|s| s.se)
                            .collect();
                        CategoryStats {
                            category: cat,
                            samples: v.len(),
                            outage_5pct: outage_quantile(&v, OUTAGE_Q).ok(),
                            mean_se: mean(&v),
                        }
                    })
                    .collect();
                Ok(OptionSummary {
                    option: id,
                    interworking_level: opt.interworking_level,
                    coordination: opt.coordination,
                    samples: se.len(),
                    outage_5pct: outage_quantile(&se, OUTAGE_Q)?,
                    improvement_ratio: ratios
                        .as_ref()
                        .and_then(|r| r.iter().find(|(o, _)| *o == id).map(|(_, v)| *v)),
                    mean_se: mean(&se).unwrap_or(0.0),
                    per_category,
                    load_report: LoadSummary::collect(id, &self.setups),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CampaignSummary {
            seed: self.seed,
            sinr_model: SINR_MODEL,
            noise_power: self.noise_power,
            config: self.config.clone(),
            options,
            setups: self.setups.clone(),
        })
    }
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

#[derive(Debug, Clone, Serialize)]
pub struct CategoryStats {
    pub category: UserCategory,
    pub samples: usize,
    pub outage_5pct: Option<f64>,
    pub mean_se: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LoadSummary {
    pub mean_fronthaul_streams_per_oru: Vec<f64>,
    pub mean_inter_odu_scalars_per_symbol: f64,
    pub mean_inter_odu_gain_values_per_setup: f64,
    pub max_map_antenna_set_size: usize,
}

impl LoadSummary {
    fn collect(option: u8, setups: &[SetupRecord]) -> Option<Self> {
        let reports: Vec<&LoadReport> = setups
            .iter()
            .filter_map(|s| s.load.iter().find(|l| l.option == option))
            .collect();
        let n = reports.len() as f64;
        let first = reports.first()?;
        let mut streams = vec![0.0; first.fronthaul_streams_per_oru.len()];
        for r in &reports {
            for (acc, v) in streams.iter_mut().zip(&r.fronthaul_streams_per_oru) {
                *acc += *v as f64 / n;
            }
        }
        Some(Self {
            mean_fronthaul_streams_per_oru: streams,
            mean_inter_odu_scalars_per_symbol: reports
                .iter()
                .map(|r| r.inter_odu_scalars_per_symbol as f64)
                .sum::<f64>()
                / n,
            mean_inter_odu_gain_values_per_setup: reports
                .iter()
                .map(|r| r.inter_odu_gain_values_per_setup as f64)
                .sum::<f64>()
                / n,
            max_map_antenna_set_size: reports
                .iter()
                .flat_map(|r| r.map_antenna_set_size.iter().copied())
                .max()
                .unwrap_or(0),
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OptionSummary {
    pub option: u8,
    pub interworking_level: Level,
    pub coordination: Coordination,
    pub samples: usize,
    pub outage_5pct: f64,
    pub improvement_ratio: Option<f64>,
    pub mean_se: f64,
    pub per_category: Vec<CategoryStats>,
    pub load_report: Option<LoadSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CampaignSummary {
    pub seed: u64,
    pub sinr_model: &'static str,
    pub noise_power: f64,
    pub config: SimConfig,
    pub options: Vec<OptionSummary>,
    pub setups: Vec<SetupRecord>,
}

/// Where each setup's channel comes from.
#[derive(Debug, Clone)]
pub enum ChannelSource {
    Synthetic { master_seed: u64, params: ChannelParams },
    Files(Vec<PathBuf>),
}

impl ChannelSource {
    pub fn from_config(cfg: &SimConfig) -> Result<Self> {
        match &cfg.campaign.channel_import {
            None => Ok(ChannelSource::Synthetic {
                master_seed: cfg.master_seed,
                params: ChannelParams::from_config(cfg),
            }),
            Some(path) => Ok(ChannelSource::Files(channel_files(path)?)),
        }
    }

    pub fn n_setups(&self, cfg: &SimConfig) -> usize {
        match self {
            ChannelSource::Synthetic { .. } => cfg.campaign.n_setups,
            ChannelSource::Files(files) => files.len(),
        }
    }

    pub fn realization(
        &self,
        topology: &Topology,
        k_users: usize,
        setup: usize,
    ) -> Result<ChannelRealization> {
        let ch = match self {
            ChannelSource::Synthetic {
                master_seed,
                params,
            } => generate_realization(topology, k_users, setup_seed(*master_seed, setup as u64), params)?,
            ChannelSource::Files(files) => {
                let ch = import_realization(&files[setup])?;
                if ch.n_users() != k_users {
                    return Err(Error::DimensionMismatch(format!(
                        "{}: {} users, campaign expects {k_users} (set --users)",
                        files[setup].display(),
                        ch.n_users()
                    )));
                }
                ch
            }
        };
        ch.check_dims(topology)?;
        Ok(ch)
    }

    fn stream_seed(&self, setup: usize) -> Option<u64> {
        match self {
            ChannelSource::Synthetic { master_seed, .. } => Some(setup_seed(*master_seed, setup as u64)),
            ChannelSource::Files(_) => None,
        }
    }

    fn source_path(&self, setup: usize) -> Option<PathBuf> {
        match self {
            ChannelSource::Synthetic { .. } => None,
            ChannelSource::Files(files) => Some(files[setup].clone()),
        }
    }
}

/// A single dump file, or every regular file of a directory in name order.
pub fn channel_files(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(path)
            .map_err(|e| Error::io(path, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(Error::NoChannelFiles(path.to_path_buf()));
        }
        Ok(files)
    } else {
        Ok(vec![path.to_path_buf()])
    }
}

struct SetupOutcome {
    record: SetupRecord,
    /// One vector per requested option.
    samples: Vec<Vec<Sample>>,
}

fn run_setup(
    cfg: &SimConfig,
    topology: &Topology,
    source: &ChannelSource,
    options: &[DeploymentOption],
    setup: usize,
) -> Result<SetupOutcome> {
    let k_users = cfg.campaign.k_users;
    let channel = source.realization(topology, k_users, setup)?;
    let assignment = categorize_users(&channel, topology, cfg.campaign.edge_threshold_db);
    let hybrid = hybrid_cluster_steps(&channel, topology, cfg.campaign.hybrid_n_select)?;

    let mut samples = Vec::with_capacity(options.len());
    let mut load = Vec::with_capacity(options.len());
    for &opt in options {
        let mut per_option = Vec::with_capacity(k_users);
        for ue in 0..k_users {
            let sinr = uplink_sinr(opt, &channel, &assignment, topology, ue)?;
            per_option.push(Sample {
                option: opt.id,
                setup,
                ue,
                category: assignment.category[ue],
                serving_antennas: serving_antenna_set(&assignment, opt, topology, ue).len(),
                sinr,
                se: uplink_se(sinr)?,
            });
        }
        samples.push(per_option);
        load.push(signaling_load(opt, &assignment, topology));
    }
    Ok(SetupOutcome {
        record: SetupRecord {
            setup,
            stream_seed: source.stream_seed(setup),
            source: source.source_path(setup),
            assignment,
            hybrid,
            load,
        },
        samples,
    })
}

/// Runs every setup (in parallel, capped by `campaign.threads`) and collects
/// the samples in `(option, setup, ue)` order, so the output does not depend
/// on scheduling.
pub fn run_campaign(config: &SimConfig) -> Result<ResultSet> {
    config.validate()?;
    let mut cfg = config.clone();
    let topology = build_topology(&cfg.topology)?;
    let source = ChannelSource::from_config(&cfg)?;
    cfg.campaign.n_setups = source.n_setups(&cfg);
    let option_ids = cfg.option_ids();
    let options = option_ids
        .iter()
        .map(|&id| DeploymentOption::from_id(id))
        .collect::<Result<Vec<_>>>()?;

    let work = || {
        (0..cfg.campaign.n_setups)
            .into_par_iter()
            .map(|s| run_setup(&cfg, &topology, &source, &options, s))
            .collect::<Result<Vec<_>>>()
    };
    let outcomes = match cfg.campaign.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool construction")
            .install(work),
        None => work(),
    }?;

    let mut samples = Vec::with_capacity(options.len() * outcomes.len() * cfg.campaign.k_users);
    for i in 0..options.len() {
        for o in &outcomes {
            samples.extend(o.samples[i].iter().cloned());
        }
    }
    let noise_power = match &source {
        ChannelSource::Synthetic { params, .. } => params.noise_power,
        ChannelSource::Files(_) => f64::NAN,
    };
    Ok(ResultSet {
        seed: cfg.master_seed,
        noise_power,
        options: option_ids,
        samples,
        setups: outcomes.into_iter().map(|o| o.record).collect(),
        config: cfg,
    })
}

/// Categorization and load accounting only, no SINR evaluation.
pub fn load_campaign(config: &SimConfig) -> Result<Vec<SetupRecord>> {
    config.validate()?;
    let topology = build_topology(&config.topology)?;
    let source = ChannelSource::from_config(config)?;
    let options = config
        .option_ids()
        .into_iter()
        .map(DeploymentOption::from_id)
        .collect::<Result<Vec<_>>>()?;
    (0..source.n_setups(config))
        .into_par_iter()
        .map(|setup| {
            let channel = source.realization(&topology, config.campaign.k_users, setup)?;
            let assignment = categorize_users(&channel, &topology, config.campaign.edge_threshold_db);
            let hybrid = hybrid_cluster_steps(&channel, &topology, config.campaign.hybrid_n_select)?;
            let load = options
                .iter()
                .map(|&o| signaling_load(o, &assignment, &topology))
                .collect();
            Ok(SetupRecord {
                setup,
                stream_seed: source.stream_seed(setup),
                source: source.source_path(setup),
                assignment,
                hybrid,
                load,
            })
        })
        .collect()
}
