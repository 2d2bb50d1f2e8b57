//! Simulation configuration.
//!
//! The on-disk format is TOML with four sections (`[topology]`, `[channel]`,
//! `[campaign]`, `[output]`) plus a top-level `master_seed`. Every key is
//! optional; an empty file yields the default indoor scenario: two O-DUs with
//! four 8-antenna O-RUs each, 10 UEs and 100 setups. Unknown keys are
//! rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::PathLossParams;
use crate::error::{Error, Result};

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub master_seed: u64,
    pub topology: TopologyConfig,
    pub channel: ChannelConfig,
    pub campaign: CampaignConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopologyConfig {
    pub n_odus: usize,
    pub orus_per_odu: usize,
    pub antennas_per_oru: usize,
    pub area_width_m: f64,
    pub area_height_m: f64,
    pub carrier_frequency_hz: f64,
    pub bandwidth_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    pub pl0_db: f64,
    pub path_loss_exponent: f64,
    pub shadowing_db: f64,
    pub d_min_m: f64,
    pub tx_power: f64,
    /// Per-antenna noise variance. When absent it is derived from
    /// `target_snr_db`, see [`SimConfig::noise_power`].
    pub noise_power: Option<f64>,
    pub target_snr_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    pub k_users: usize,
    pub n_setups: usize,
    pub edge_threshold_db: f64,
    pub hybrid_n_select: usize,
    pub options: Vec<u8>,
    pub threads: Option<usize>,
    pub channel_import: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub csv_name: String,
    pub json_name: String,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            master_seed: DEFAULT_SEED,
            topology: TopologyConfig::default(),
            channel: ChannelConfig::default(),
            campaign: CampaignConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

impl Default for TopologyConfig {
    fn default() -> Self {
        Self {
            n_odus: 2,
            orus_per_odu: 4,
            antennas_per_oru: 8,
            area_width_m: 60.0,
            area_height_m: 30.0,
            carrier_frequency_hz: 2.6e9,
            bandwidth_hz: 20e6,
        }
    }
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            pl0_db: 40.0,
            path_loss_exponent: 3.0,
            shadowing_db: 4.0,
            d_min_m: 1.0,
            tx_power: 1.0,
            noise_power: None,
            target_snr_db: 10.0,
        }
    }
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            k_users: 10,
            n_setups: 100,
            edge_threshold_db: 6.0,
            hybrid_n_select: 2,
            options: vec![1, 2, 3, 4, 5],
            threads: None,
            channel_import: None,
        }
    }
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("results"),
            csv_name: "samples.csv".into(),
            json_name: "summary.json".into(),
        }
    }
}

/// Command-line overrides; every config key has a twin here.
#[derive(Debug, Clone, Default)]
pub struct ConfigOverrides {
    pub master_seed: Option<u64>,
    pub n_odus: Option<usize>,
    pub orus_per_odu: Option<usize>,
    pub antennas_per_oru: Option<usize>,
    pub area_width_m: Option<f64>,
    pub area_height_m: Option<f64>,
    pub carrier_frequency_hz: Option<f64>,
    pub bandwidth_hz: Option<f64>,
    pub pl0_db: Option<f64>,
    pub path_loss_exponent: Option<f64>,
    pub shadowing_db: Option<f64>,
    pub d_min_m: Option<f64>,
    pub tx_power: Option<f64>,
    pub noise_power: Option<f64>,
    pub target_snr_db: Option<f64>,
    pub k_users: Option<usize>,
    pub n_setups: Option<usize>,
    pub edge_threshold_db: Option<f64>,
    pub hybrid_n_select: Option<usize>,
    pub options: Option<Vec<u8>>,
    pub threads: Option<usize>,
    pub channel_import: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub csv_name: Option<String>,
    pub json_name: Option<String>,
}

macro_rules! apply {
    ($src:expr, $dst:expr) => {
        if let Some(v) = $src {
            $dst = v;
        }
    };
}

impl ConfigOverrides {
    pub fn apply(self, cfg: &mut SimConfig) {
        apply!(self.master_seed, cfg.master_seed);
        apply!(self.n_odus, cfg.topology.n_odus);
        apply!(self.orus_per_odu, cfg.topology.orus_per_odu);
        apply!(self.antennas_per_oru, cfg.topology.antennas_per_oru);
        apply!(self.area_width_m, cfg.topology.area_width_m);
        apply!(self.area_height_m, cfg.topology.area_height_m);
        apply!(self.carrier_frequency_hz, cfg.topology.carrier_frequency_hz);
        apply!(self.bandwidth_hz, cfg.topology.bandwidth_hz);
        apply!(self.pl0_db, cfg.channel.pl0_db);
        apply!(self.path_loss_exponent, cfg.channel.path_loss_exponent);
        apply!(self.shadowing_db, cfg.channel.shadowing_db);
        apply!(self.d_min_m, cfg.channel.d_min_m);
        apply!(self.tx_power, cfg.channel.tx_power);
        if self.noise_power.is_some() {
            cfg.channel.noise_power = self.noise_power;
        }
        apply!(self.target_snr_db, cfg.channel.target_snr_db);
        apply!(self.k_users, cfg.campaign.k_users);
        apply!(self.n_setups, cfg.campaign.n_setups);
        apply!(self.edge_threshold_db, cfg.campaign.edge_threshold_db);
        apply!(self.hybrid_n_select, cfg.campaign.hybrid_n_select);
        apply!(self.options, cfg.campaign.options);
        if self.threads.is_some() {
            cfg.campaign.threads = self.threads;
        }
        if self.channel_import.is_some() {
            cfg.campaign.channel_import = self.channel_import;
        }
        apply!(self.output_dir, cfg.output.dir);
        apply!(self.csv_name, cfg.output.csv_name);
        apply!(self.json_name, cfg.output.json_name);
    }
}

/// Reads `path` (or uses the built-in defaults when `path` is `None`), applies
/// `overrides` on top and validates the result.
pub fn parse_config(path: Option<&Path>, overrides: ConfigOverrides) -> Result<SimConfig> {
    let mut cfg = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            SimConfig::from_toml_str(&text)?
        }
        None => SimConfig::default(),
    };
    overrides.apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

impl SimConfig {
    /// Parses TOML text without validating invariants.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::ConfigSyntax(e.to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config is always representable as TOML")
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.topology;
        let c = &self.channel;
        let k = &self.campaign;
        positive_count("topology.n_odus", t.n_odus)?;
        positive_count("topology.orus_per_odu", t.orus_per_odu)?;
        positive_count("topology.antennas_per_oru", t.antennas_per_oru)?;
        positive_real("topology.area_width_m", t.area_width_m)?;
        positive_real("topology.area_height_m", t.area_height_m)?;
        positive_real("topology.carrier_frequency_hz", t.carrier_frequency_hz)?;
        positive_real("topology.bandwidth_hz", t.bandwidth_hz)?;
        finite("channel.pl0_db", c.pl0_db)?;
        finite("channel.path_loss_exponent", c.path_loss_exponent)?;
        if !(c.shadowing_db.is_finite() && c.shadowing_db >= 0.0) {
            return Err(invalid("channel.shadowing_db", "must be finite and >= 0"));
        }
        positive_real("channel.d_min_m", c.d_min_m)?;
        positive_real("channel.tx_power", c.tx_power)?;
        if let Some(n) = c.noise_power {
            positive_real("channel.noise_power", n)?;
        }
        finite("channel.target_snr_db", c.target_snr_db)?;
        positive_count("campaign.k_users", k.k_users)?;
        positive_count("campaign.n_setups", k.n_setups)?;
        if !(k.edge_threshold_db.is_finite() && k.edge_threshold_db >= 0.0) {
            return Err(invalid("campaign.edge_threshold_db", "must be finite and >= 0"));
        }
        let n_orus = t.n_odus * t.orus_per_odu;
        if k.hybrid_n_select == 0 || k.hybrid_n_select > n_orus {
            return Err(invalid(
                "campaign.hybrid_n_select",
                format!("must be in 1..={n_orus}"),
            ));
        }
        if k.options.is_empty() {
            return Err(invalid("campaign.options", "must list at least one option"));
        }
        if let Some(bad) = k.options.iter().find(|o| !(1..=5).contains(*o)) {
            return Err(invalid(
                "campaign.options",
                format!("option {bad} is not one of 1..=5"),
            ));
        }
        if k.threads == Some(0) {
            return Err(invalid("campaign.threads", "must be >= 1"));
        }
        if self.output.csv_name.is_empty() {
            return Err(invalid("output.csv_name", "must not be empty"));
        }
        if self.output.json_name.is_empty() {
            return Err(invalid("output.json_name", "must not be empty"));
        }
        Ok(())
    }

    /// Requested deployment options, sorted and deduplicated.
    pub fn option_ids(&self) -> Vec<u8> {
        let mut ids = self.campaign.options.clone();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    pub fn path_loss(&self) -> PathLossParams {
        PathLossParams {
            pl0_db: self.channel.pl0_db,
            exponent: self.channel.path_loss_exponent,
            d_min_m: self.channel.d_min_m,
        }
    }

    /// Median distance from a uniformly dropped UE to its nearest O-RU,
    /// treating each O-RU as the center of a disc-shaped cell of area
    /// `area / n_orus`: the median radius solves `pi r^2 = cell_area / 2`.
    pub fn median_nearest_distance_m(&self) -> f64 {
        let t = &self.topology;
        let cell = t.area_width_m * t.area_height_m / (t.n_odus * t.orus_per_odu) as f64;
        (cell / (2.0 * std::f64::consts::PI)).sqrt()
    }

    /// Noise variance per antenna.
    ///
    /// If not given explicitly: `tx_power * 10^(-PL(d_med)/10) / 10^(snr/10)`
    /// where `d_med` is [`Self::median_nearest_distance_m`] and `snr` is
    /// `target_snr_db`, so that the median per-antenna SNR towards the
    /// nearest O-RU (without shadowing) equals the target.
    pub fn noise_power(&self) -> f64 {
        if let Some(n) = self.channel.noise_power {
            return n;
        }
        let pl = self
            .path_loss()
            .loss_db(self.median_nearest_distance_m())
            .expect("median distance is non-negative");
        self.channel.tx_power * 10f64.powf(-(pl + self.channel.target_snr_db) / 10.0)
    }
}

fn invalid(key: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidConfig {
        key,
        reason: reason.into(),
    }
}

fn positive_count(key: &'static str, v: usize) -> Result<()> {
    if v == 0 {
        return Err(invalid(key, "must be >= 1"));
    }
    Ok(())
}

fn positive_real(key: &'static str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(invalid(key, format!("must be finite and > 0, got {v}")));
    }
    Ok(())
}

fn finite(key: &'static str, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(invalid(key, "must be finite"));
    }
    Ok(())
}
