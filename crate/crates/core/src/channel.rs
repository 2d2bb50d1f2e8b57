//! Synthetic narrowband channel generation and the channel-dump file format.
//!
//! A realization holds one flat-fading subcarrier: `h` is `M x K` (antennas by
//! users) and `beta_db` the matching large-scale gain in dB. Randomness comes
//! from a ChaCha8 stream seeded per setup (see [`setup_seed`]); draws happen in
//! a fixed order (UE positions, then shadowing per O-RU and UE, then
//! small-scale fading per user and antenna) so a seed pins the realization
//! bit for bit.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::topology::{Point, Topology};

/// Log-distance path loss `PL0 + 10 n log10(max(d, d_min) / 1 m)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossParams {
    pub pl0_db: f64,
    pub exponent: f64,
    pub d_min_m: f64,
}

impl Default for PathLossParams {
    fn default() -> Self {
        Self {
            pl0_db: 40.0,
            exponent: 3.0,
            d_min_m: 1.0,
        }
    }
}

impl PathLossParams {
    pub fn loss_db(&self, distance_m: f64) -> Result<f64> {
        if distance_m < 0.0 || distance_m.is_nan() {
            return Err(Error::NegativeDistance(distance_m));
        }
        Ok(self.pl0_db + 10.0 * self.exponent * distance_m.max(self.d_min_m).log10())
    }
}

pub fn path_loss_db(distance_m: f64, model: &PathLossParams) -> Result<f64> {
    model.loss_db(distance_m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub path_loss: PathLossParams,
    pub shadowing_db: f64,
    pub tx_power: f64,
    pub noise_power: f64,
}

impl ChannelParams {
    pub fn from_config(cfg: &SimConfig) -> Self {
        Self {
            path_loss: cfg.path_loss(),
            shadowing_db: cfg.channel.shadowing_db,
            tx_power: cfg.channel.tx_power,
            noise_power: cfg.noise_power(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// `M x K` complex gains.
    pub h: DMatrix<Complex64>,
    /// `M x K` large-scale gain in dB (negative of path loss plus shadowing).
    pub beta_db: DMatrix<f64>,
    /// Empty for imported realizations.
    pub ue_positions: Vec<Point>,
    pub tx_power: f64,
    pub noise_power: f64,
}

impl ChannelRealization {
    pub fn n_antennas(&self) -> usize {
        self.h.nrows()
    }

    pub fn n_users(&self) -> usize {
        self.h.ncols()
    }

    pub fn beta(&self, m: usize, k: usize) -> f64 {
        db_to_linear(self.beta_db[(m, k)])
    }

    pub fn check_dims(&self, topology: &Topology) -> Result<()> {
        let m = topology.n_antennas();
        if self.h.nrows() != m || self.beta_db.nrows() != m {
            return Err(Error::DimensionMismatch(format!(
                "channel has {} antennas, topology has {m}",
                self.h.nrows()
            )));
        }
        if self.beta_db.ncols() != self.h.ncols() {
            return Err(Error::DimensionMismatch(
                "beta and h disagree on user count".into(),
            ));
        }
        Ok(())
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Per-setup stream seed: `splitmix64(master ^ setup_index)`.
pub fn setup_seed(master: u64, setup_index: u64) -> u64 {
    splitmix64(master ^ setup_index)
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Circularly-symmetric standard complex normal sample.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Drops `k_users` UEs uniformly over the area and draws their channels.
pub fn generate_realization(
    topology: &Topology,
    k_users: usize,
    rng_seed: u64,
    params: &ChannelParams,
) -> Result<ChannelRealization> {
    if k_users == 0 {
        return Err(Error::DimensionMismatch("k_users must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let positions: Vec<Point> = (0..k_users)
        .map(|_| {
            let x = rng.random::<f64>() * topology.area_width_m;
            let y = rng.random::<f64>() * topology.area_height_m;
            Point::new(x, y)
        })
        .collect();
    realization_at(topology, positions, params, &mut rng)
}

/// Draws shadowing and small-scale fading for UEs at fixed positions.
pub fn realization_at<R: Rng + ?Sized>(
    topology: &Topology,
    positions: Vec<Point>,
    params: &ChannelParams,
    rng: &mut R,
) -> Result<ChannelRealization> {
    let m_total = topology.n_antennas();
    let k_users = positions.len();
    let shadowing = Normal::new(0.0, params.shadowing_db)
        .map_err(|_| Error::InvalidConfig {
            key: "channel.shadowing_db",
            reason: "must be finite and >= 0".into(),
        })?;

    let mut beta_db = DMatrix::<f64>::zeros(m_total, k_users);
    for oru in topology.orus() {
        for (k, p) in positions.iter().enumerate() {
            let loss = params.path_loss.loss_db(oru.position.distance(p))?;
            let shadow = if params.shadowing_db > 0.0 {
                shadowing.sample(rng)
            } else {
                0.0
            };
            for m in oru.antenna_range() {
                beta_db[(m, k)] = -(loss + shadow);
            }
        }
    }

    let mut h = DMatrix::<Complex64>::zeros(m_total, k_users);
    for k in 0..k_users {
        for m in 0..m_total {
            h[(m, k)] = complex_normal(rng) * db_to_linear(beta_db[(m, k)]).sqrt();
        }
    }

    Ok(ChannelRealization {
        h,
        beta_db,
        ue_positions: positions,
        tx_power: params.tx_power,
        noise_power: params.noise_power,
    })
}

/// Writes the text channel dump: header `M K tx_power noise_power`, then one
/// `m k beta_db re im` line per entry, antenna-major.
pub fn write_dump<W: Write>(ch: &ChannelRealization, mut w: W) -> std::io::Result<()> {
    writeln!(
        w,
        "{} {} {:.17e} {:.17e}",
        ch.n_antennas(),
        ch.n_users(),
        ch.tx_power,
        ch.noise_power
    )?;
    for m in 0..ch.n_antennas() {
        for k in 0..ch.n_users() {
            let z = ch.h[(m, k)];
            writeln!(
                w,
                "{m} {k} {:.17e} {:.17e} {:.17e}",
                ch.beta_db[(m, k)],
                z.re,
                z.im
            )?;
        }
    }
    Ok(())
}

pub fn export_realization(ch: &ChannelRealization, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_dump(ch, &mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn import_realization(path: &Path) -> Result<ChannelRealization> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_dump(BufReader::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn read_dump<R: BufRead>(r: R) -> Result<ChannelRealization> {
    let mut lines = r
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty()));

    let (line_no, header) = match lines.next() {
        Some((n, l)) => (n, l.map_err(|e| Error::io("<dump>", e))?),
        None => {
            return Err(Error::MalformedRecord {
                line: 1,
                reason: "missing header".into(),
            })
        }
    };
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 {
        return Err(Error::MalformedRecord {
            line: line_no,
            reason: format!("header needs 4 fields, found {}", fields.len()),
        });
    }
    let m_total: usize = parse_field(fields[0], line_no, "M")?;
    let k_users: usize = parse_field(fields[1], line_no, "K")?;
    let tx_power: f64 = parse_real(fields[2], line_no)?;
    let noise_power: f64 = parse_real(fields[3], line_no)?;
    if m_total == 0 || k_users == 0 {
        return Err(Error::DimensionMismatch(format!(
            "header declares M={m_total}, K={k_users}"
        )));
    }
    if tx_power <= 0.0 || noise_power <= 0.0 {
        return Err(Error::MalformedRecord {
            line: line_no,
            reason: "powers must be > 0".into(),
        });
    }

    let mut h = DMatrix::<Complex64>::zeros(m_total, k_users);
    let mut beta_db = DMatrix::<f64>::zeros(m_total, k_users);
    let mut seen = vec![false; m_total * k_users];
    let mut rows = 0usize;
    for (line_no, line) in lines {
        let line = line.map_err(|e| Error::io("<dump>", e))?;
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 5 {
            return Err(Error::MalformedRecord {
                line: line_no,
                reason: format!("expected 5 fields, found {}", f.len()),
            });
        }
        let m: usize = parse_field(f[0], line_no, "m")?;
        let k: usize = parse_field(f[1], line_no, "k")?;
        if m >= m_total || k >= k_users {
            return Err(Error::DimensionMismatch(format!(
                "line {line_no}: index ({m}, {k}) outside {m_total}x{k_users}"
            )));
        }
        let slot = m * k_users + k;
        if std::mem::replace(&mut seen[slot], true) {
            return Err(Error::MalformedRecord {
                line: line_no,
                reason: format!("duplicate entry ({m}, {k})"),
            });
        }
        beta_db[(m, k)] = parse_real(f[2], line_no)?;
        h[(m, k)] = Complex64::new(parse_real(f[3], line_no)?, parse_real(f[4], line_no)?);
        rows += 1;
    }
    if rows != m_total * k_users {
        return Err(Error::DimensionMismatch(format!(
            "header declares M={m_total}, K={k_users} ({} rows) but {rows} rows present",
            m_total * k_users
        )));
    }

    Ok(ChannelRealization {
        h,
        beta_db,
        ue_positions: Vec::new(),
        tx_power,
        noise_power,
    })
}

fn parse_field<T: std::str::FromStr>(s: &str, line: usize, what: &str) -> Result<T> {
    s.parse().map_err(|_| Error::MalformedRecord {
        line,
        reason: format!("cannot parse {what} from `{s}`"),
    })
}

fn parse_real(s: &str, line: usize) -> Result<f64> {
    let v: f64 = parse_field(s, line, "real")?;
    if !v.is_finite() {
        return Err(Error::NonFinite { line });
    }
    Ok(v)
}
