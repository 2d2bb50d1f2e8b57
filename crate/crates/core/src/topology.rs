//! Network geometry: O-DUs, their O-RUs, antenna indexing and coverage.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::config::TopologyConfig;
use crate::error::{Error, Result};

/// Grid spacing below which O-RUs are considered not placeable.
pub const MIN_ORU_SPACING_M: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Axis-aligned rectangle, half-open on the upper edges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.x >= self.x0 && p.x < self.x1 && p.y >= self.y0 && p.y < self.y1
    }

    pub fn center(&self) -> Point {
        Point::new(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }
}

/// Split 7-2x O-RU category. Only affects load accounting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum OruCategory {
    A,
    #[default]
    B,
}

/// Granularity of the inter-working antenna set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Oru,
    Odu,
    Global,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Oru {
    pub id: usize,
    pub odu: usize,
    pub position: Point,
    pub antennas: usize,
    pub category: OruCategory,
    /// First global antenna index owned by this O-RU.
    pub first_antenna: usize,
}

impl Oru {
    pub fn antenna_range(&self) -> Range<usize> {
        self.first_antenna..self.first_antenna + self.antennas
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Odu {
    pub id: usize,
    pub orus: Vec<Oru>,
    pub coverage: Rect,
}

impl Odu {
    pub fn antenna_range(&self) -> Range<usize> {
        let first = self.orus.first().map_or(0, |o| o.first_antenna);
        first..first + self.orus.iter().map(|o| o.antennas).sum::<usize>()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub odus: Vec<Odu>,
    pub area_width_m: f64,
    pub area_height_m: f64,
    pub carrier_frequency_hz: f64,
    pub bandwidth_hz: f64,
}

/// Builds the default grid layout.
///
/// The area is bisected vertically into `n_odus` equal strips, one per O-DU.
/// Inside each strip the O-DU's O-RUs sit at the centers of an `rows x cols`
/// grid, where `rows * cols = orus_per_odu` and the factorisation is chosen to
/// make grid cells as square as possible. O-RU ids run column-major within an
/// O-DU and O-DUs are numbered left to right; antenna indices follow O-RU ids.
pub fn build_topology(cfg: &TopologyConfig) -> Result<Topology> {
    if cfg.n_odus == 0 {
        return Err(bad("topology.n_odus", "must be >= 1"));
    }
    if cfg.orus_per_odu == 0 {
        return Err(bad("topology.orus_per_odu", "must be >= 1"));
    }
    if cfg.antennas_per_oru == 0 {
        return Err(bad("topology.antennas_per_oru", "must be >= 1"));
    }
    for (key, v) in [
        ("topology.area_width_m", cfg.area_width_m),
        ("topology.area_height_m", cfg.area_height_m),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(bad(key, "must be finite and > 0"));
        }
    }

    let strip_w = cfg.area_width_m / cfg.n_odus as f64;
    let height = cfg.area_height_m;
    let (rows, cols) = grid_shape(cfg.orus_per_odu, strip_w, height);
    let dx = strip_w / cols as f64;
    let dy = height / rows as f64;
    if dx.min(dy) < MIN_ORU_SPACING_M {
        return Err(bad(
            "topology.orus_per_odu",
            format!(
                "{} O-RUs per O-DU need a {rows}x{cols} grid with {:.3} m spacing, \
                 below the {MIN_ORU_SPACING_M} m minimum",
                cfg.orus_per_odu,
                dx.min(dy)
            ),
        ));
    }

    let mut odus = Vec::with_capacity(cfg.n_odus);
    let mut next_oru = 0;
    let mut next_antenna = 0;
    for d in 0..cfg.n_odus {
        let x0 = d as f64 * strip_w;
        let x1 = if d + 1 == cfg.n_odus {
            cfg.area_width_m
        } else {
            (d + 1) as f64 * strip_w
        };
        let mut orus = Vec::with_capacity(cfg.orus_per_odu);
        for i in 0..cols {
            for j in 0..rows {
                orus.push(Oru {
                    id: next_oru,
                    odu: d,
                    position: Point::new(x0 + (i as f64 + 0.5) * dx, (j as f64 + 0.5) * dy),
                    antennas: cfg.antennas_per_oru,
                    category: OruCategory::default(),
                    first_antenna: next_antenna,
                });
                next_oru += 1;
                next_antenna += cfg.antennas_per_oru;
            }
        }
        odus.push(Odu {
            id: d,
            orus,
            coverage: Rect {
                x0,
                y0: 0.0,
                x1,
                y1: height,
            },
        });
    }

    Ok(Topology {
        odus,
        area_width_m: cfg.area_width_m,
        area_height_m: cfg.area_height_m,
        carrier_frequency_hz: cfg.carrier_frequency_hz,
        bandwidth_hz: cfg.bandwidth_hz,
    })
}

fn bad(key: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidConfig {
        key,
        reason: reason.into(),
    }
}

// (rows, cols) with rows * cols = n and cell aspect closest to 1.
fn grid_shape(n: usize, width: f64, height: f64) -> (usize, usize) {
    (1..=n)
        .filter(|r| n % r == 0)
        .map(|r| (r, n / r))
        .min_by(|a, b| {
            let skew = |(r, c): (usize, usize)| ((width / c as f64) / (height / r as f64)).ln().abs();
            skew(*a).total_cmp(&skew(*b))
        })
        .expect("n >= 1 has at least one divisor")
}

impl Topology {
    pub fn area(&self) -> Rect {
        Rect {
            x0: 0.0,
            y0: 0.0,
            x1: self.area_width_m,
            y1: self.area_height_m,
        }
    }

    pub fn n_antennas(&self) -> usize {
        self.orus().map(|o| o.antennas).sum()
    }

    pub fn n_orus(&self) -> usize {
        self.odus.iter().map(|d| d.orus.len()).sum()
    }

    pub fn orus(&self) -> impl Iterator<Item = &Oru> {
        self.odus.iter().flat_map(|d| d.orus.iter())
    }

    pub fn oru(&self, id: usize) -> Result<&Oru> {
        self.orus()
            .find(|o| o.id == id)
            .ok_or(Error::UnknownOwner { level: "O-RU", id })
    }

    pub fn odu(&self, id: usize) -> Result<&Odu> {
        self.odus
            .get(id)
            .ok_or(Error::UnknownOwner { level: "O-DU", id })
    }

    /// Global antenna indices owned by a node. `owner_id` is ignored for
    /// [`Level::Global`].
    pub fn antenna_index_set(&self, level: Level, owner_id: usize) -> Result<Range<usize>> {
        match level {
            Level::Oru => Ok(self.oru(owner_id)?.antenna_range()),
            Level::Odu => Ok(self.odu(owner_id)?.antenna_range()),
            Level::Global => Ok(0..self.n_antennas()),
        }
    }

    /// Checks the structural invariants. [`build_topology`] always produces a
    /// valid topology; this is for hand-assembled or deserialized ones.
    pub fn validate(&self) -> Result<()> {
        if self.odus.is_empty() {
            return Err(Error::DimensionMismatch("topology has no O-DU".into()));
        }
        let area = self.area();
        let mut expected_first = 0;
        let mut covered = 0.0;
        for (d, odu) in self.odus.iter().enumerate() {
            if odu.id != d {
                return Err(Error::DimensionMismatch(format!(
                    "O-DU at position {d} has id {}",
                    odu.id
                )));
            }
            covered += odu.coverage.area();
            for other in &self.odus[d + 1..] {
                let a = odu.coverage;
                let b = other.coverage;
                let overlap_w = a.x1.min(b.x1) - a.x0.max(b.x0);
                let overlap_h = a.y1.min(b.y1) - a.y0.max(b.y0);
                if overlap_w > 0.0 && overlap_h > 0.0 {
                    return Err(Error::DimensionMismatch(format!(
                        "coverage of O-DU {d} overlaps O-DU {}",
                        other.id
                    )));
                }
            }
            for oru in &odu.orus {
                if oru.antennas == 0 {
                    return Err(Error::DimensionMismatch(format!("O-RU {} has no antenna", oru.id)));
                }
                if oru.odu != d {
                    return Err(Error::DimensionMismatch(format!(
                        "O-RU {} claims O-DU {} but is listed under {d}",
                        oru.id, oru.odu
                    )));
                }
                if oru.first_antenna != expected_first {
                    return Err(Error::DimensionMismatch(format!(
                        "O-RU {} antenna indices are not contiguous",
                        oru.id
                    )));
                }
                let p = oru.position;
                if !(p.x >= area.x0 && p.x <= area.x1 && p.y >= area.y0 && p.y <= area.y1) {
                    return Err(Error::DimensionMismatch(format!(
                        "O-RU {} lies outside the area",
                        oru.id
                    )));
                }
                expected_first += oru.antennas;
            }
        }
        let total = area.area();
        if (covered - total).abs() > 1e-9 * total {
            return Err(Error::DimensionMismatch(
                "O-DU coverage regions do not tile the area".into(),
            ));
        }
        Ok(())
    }
}
