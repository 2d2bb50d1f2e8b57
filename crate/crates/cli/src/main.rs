use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use cfran_core::channel::write_dump;
use cfran_core::evaluation::{load_campaign, ChannelSource};
use cfran_core::{build_topology, parse_config, run_campaign, ConfigOverrides, SimConfig};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

/// Uplink spectral-efficiency campaigns for cell-free massive MIMO on the
/// O-RAN O-DU / O-RU hierarchy.
#[derive(Parser, Debug)]
#[command(name = "cfran", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the Monte-Carlo campaign and write the sample CSV and JSON summary.
    Run(ConfigArgs),
    /// Write one channel-dump file per setup.
    DumpChannels(ConfigArgs),
    /// Categorize users and write the signaling-load report only.
    LoadReport(ConfigArgs),
    /// Check the configuration; writes nothing.
    Validate(ConfigArgs),
}

#[derive(Args, Debug, Clone)]
struct ConfigArgs {
    /// TOML config file; `default` uses the built-in scenario.
    #[arg(long, value_name = "PATH")]
    config: Option<String>,
    /// Master seed.
    #[arg(long, env = "CFRAN_SEED", value_name = "U64")]
    seed: Option<u64>,
    /// Number of independent setups.
    #[arg(long, value_name = "N")]
    setups: Option<usize>,
    /// UEs per setup.
    #[arg(long, value_name = "N")]
    users: Option<usize>,
    /// Deployment options to evaluate, e.g. `1,3,5`.
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    options: Option<Vec<u8>>,
    /// Worker threads (default: all cores).
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Channel-dump file or directory to use instead of synthetic channels.
    #[arg(long, value_name = "PATH")]
    import_channels: Option<PathBuf>,

    #[arg(long, value_name = "N")]
    n_odus: Option<usize>,
    #[arg(long, value_name = "N")]
    orus_per_odu: Option<usize>,
    #[arg(long, value_name = "N")]
    antennas_per_oru: Option<usize>,
    #[arg(long, value_name = "M")]
    area_width_m: Option<f64>,
    #[arg(long, value_name = "M")]
    area_height_m: Option<f64>,
    #[arg(long, value_name = "HZ")]
    carrier_frequency_hz: Option<f64>,
    #[arg(long, value_name = "HZ")]
    bandwidth_hz: Option<f64>,
    /// Path loss at 1 m.
    #[arg(long, value_name = "DB", allow_negative_numbers = true)]
    pl0_db: Option<f64>,
    #[arg(long, value_name = "X")]
    path_loss_exponent: Option<f64>,
    /// Log-normal shadowing standard deviation.
    #[arg(long, value_name = "DB")]
    shadowing_db: Option<f64>,
    #[arg(long, value_name = "M")]
    d_min_m: Option<f64>,
    #[arg(long, value_name = "W")]
    tx_power: Option<f64>,
    /// Fixed noise power; overrides --target-snr-db.
    #[arg(long, value_name = "W")]
    noise_power: Option<f64>,
    /// Median single-antenna SNR used to calibrate the noise power.
    #[arg(long, value_name = "DB", allow_negative_numbers = true)]
    target_snr_db: Option<f64>,
    /// O-DU gain gap under which a UE counts as an edge user.
    #[arg(long, value_name = "DB")]
    edge_threshold_db: Option<f64>,
    /// O-RUs picked per UE by the hybrid clustering step.
    #[arg(long, value_name = "N")]
    hybrid_n_select: Option<usize>,
    #[arg(long, value_name = "NAME")]
    csv_name: Option<String>,
    #[arg(long, value_name = "NAME")]
    json_name: Option<String>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<SimConfig> {
        let file = match self.config.as_deref() {
            None | Some("default") => None,
            Some(p) => Some(Path::new(p)),
        };
        let overrides = ConfigOverrides {
            master_seed: self.seed,
            n_odus: self.n_odus,
            orus_per_odu: self.orus_per_odu,
            antennas_per_oru: self.antennas_per_oru,
            area_width_m: self.area_width_m,
            area_height_m: self.area_height_m,
            carrier_frequency_hz: self.carrier_frequency_hz,
            bandwidth_hz: self.bandwidth_hz,
            pl0_db: self.pl0_db,
            path_loss_exponent: self.path_loss_exponent,
            shadowing_db: self.shadowing_db,
            d_min_m: self.d_min_m,
            tx_power: self.tx_power,
            noise_power: self.noise_power,
            target_snr_db: self.target_snr_db,
            k_users: self.users,
            n_setups: self.setups,
            edge_threshold_db: self.edge_threshold_db,
            hybrid_n_select: self.hybrid_n_select,
            options: self.options.clone(),
            threads: self.threads,
            channel_import: self.import_channels.clone(),
            output_dir: self.out.clone(),
            csv_name: self.csv_name.clone(),
            json_name: self.json_name.clone(),
        };
        Ok(parse_config(file, overrides)?)
    }
}

/// Writes through a temp file in the target directory, then renames.
fn write_atomic(path: &Path, fill: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating temp file in {}", dir.display()))?;
    {
        let mut w = std::io::BufWriter::new(tmp.as_file_mut());
        fill(&mut w).with_context(|| format!("writing {}", path.display()))?;
        w.flush()?;
    }
    tmp.persist(path)
        .with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    write_atomic(path, |w| writeln!(w, "{text}"))
}

fn out_dir(cfg: &SimConfig) -> Result<&Path> {
    let dir = cfg.output.dir.as_path();
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn run(cfg: &SimConfig) -> Result<()> {
    let results = run_campaign(cfg)?;
    let summary = results.summary()?;
    let dir = out_dir(cfg)?;
    let csv = dir.join(&cfg.output.csv_name);
    let json = dir.join(&cfg.output.json_name);
    write_atomic(&csv, |w| results.write_csv(w))?;
    write_json(&json, &summary)?;
    for o in &summary.options {
        let ratio = o.improvement_ratio.map_or("-".to_string(), |r| format!("x{r:.3}"));
        println!(
            "option {}: 5% SE {:.4}  mean SE {:.4}  {ratio}",
            o.option, o.outage_5pct, o.mean_se
        );
    }
    println!("wrote {} and {} (seed {})", csv.display(), json.display(), results.seed);
    Ok(())
}

fn dump_channels(cfg: &SimConfig) -> Result<()> {
    let topology = build_topology(&cfg.topology)?;
    let source = ChannelSource::from_config(cfg)?;
    let dir = out_dir(cfg)?;
    let n = source.n_setups(cfg);
    for setup in 0..n {
        let ch = source.realization(&topology, cfg.campaign.k_users, setup)?;
        write_atomic(&dir.join(format!("setup_{setup:04}.chan")), |w| write_dump(&ch, w))?;
    }
    println!("wrote {n} channel dumps to {} (seed {})", dir.display(), cfg.master_seed);
    Ok(())
}

#[derive(Serialize)]
struct LoadFile<'a> {
    seed: u64,
    config: &'a SimConfig,
    setups: Vec<cfran_core::evaluation::SetupRecord>,
}

fn load_report(cfg: &SimConfig) -> Result<()> {
    let setups = load_campaign(cfg)?;
    let path = out_dir(cfg)?.join("load_report.json");
    write_json(&path, &LoadFile { seed: cfg.master_seed, config: cfg, setups })?;
    println!("wrote {}", path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(a) => a.resolve().and_then(|c| run(&c)),
        Command::DumpChannels(a) => a.resolve().and_then(|c| dump_channels(&c)),
        Command::LoadReport(a) => a.resolve().and_then(|c| load_report(&c)),
        Command::Validate(a) => a.resolve().map(|c| print!("{}", c.to_toml_string())),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
