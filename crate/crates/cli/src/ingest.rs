// Copyright 2026 The hoctree Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! CSV loading, min-max scaling into the index domain, and synthetic data.
//!
//! CSV schema: one header row, then `id,lon,lat,timestamp` per line, comma
//! separated, `.` as decimal point. Ids are unsigned 64-bit integers.
//!
//! Synthetic data uses ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! `seed_from_u64`, which produces the same stream on every platform.

use std::fs::File;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use hoctree::{IndexConfig, StObject};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub const CSV_HEADER: &str = "id,lon,lat,timestamp";

/// One input row before scaling.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRecord {
    pub id: String,
    pub lon: f64,
    pub lat: f64,
    pub timestamp: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("line {line}: expected 4 fields, found {found}")]
    FieldCount { line: u64, found: usize },
    #[error("line {line}: field `{field}` is not a finite number: {value:?}")]
    NotNumeric { line: u64, field: &'static str, value: String },
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("record id {0:?} is not an unsigned integer")]
    NonNumericId(String),
    #[error("cannot scale an empty record set")]
    Empty,
}

pub fn load_csv(path: &Path) -> Result<Vec<RawRecord>, IngestError> {
    let file = File::open(path).map_err(|source| IngestError::Io { path: path.to_owned(), source })?;
    read_csv(file)
}

pub fn read_csv<R: Read>(reader: R) -> Result<Vec<RawRecord>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| IngestError::Malformed { line: e.position().map_or(0, csv::Position::line), message: e.to_string() })?;
        let line = row.position().map_or(0, csv::Position::line);
        if row.len() != 4 {
            return Err(IngestError::FieldCount { line, found: row.len() });
        }
        let num = |i: usize, field: &'static str| -> Result<f64, IngestError> {
            row[i].parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| IngestError::NotNumeric {
                line,
                field,
                value: row[i].to_owned(),
            })
        };
        out.push(RawRecord { id: row[0].to_owned(), lon: num(1, "lon")?, lat: num(2, "lat")?, timestamp: num(3, "timestamp")? });
    }
    Ok(out)
}

/// Domain objects written back out in the CSV schema, coordinates in
/// shortest round-trip form.
pub fn write_csv<W: Write>(mut w: W, objects: &[StObject]) -> io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for o in objects {
        writeln!(w, "{},{},{},{}", o.id, o.x, o.y, o.t)?;
    }
    w.flush()
}

/// Reads records whose coordinates are already in domain units.
pub fn records_to_objects(records: &[RawRecord]) -> Result<Vec<StObject>, IngestError> {
    records.iter().map(|r| Ok(StObject::new(parse_id(&r.id)?, r.lon, r.lat, r.timestamp))).collect()
}

fn parse_id(id: &str) -> Result<u64, IngestError> {
    id.parse().map_err(|_| IngestError::NonNumericId(id.to_owned()))
}

/// Per-axis affine min-max map onto the domain of `cfg`. Input extremes land
/// exactly on the domain bounds; an axis with a single distinct value maps to
/// the middle of its range.
pub fn scale_to_domain(records: &[RawRecord], cfg: &IndexConfig) -> Result<Vec<StObject>, IngestError> {
    if records.is_empty() {
        return Err(IngestError::Empty);
    }
    let lon = AxisScale::fit(records.iter().map(|r| r.lon), cfg.x_lo, cfg.x_hi, "lon");
    let lat = AxisScale::fit(records.iter().map(|r| r.lat), cfg.y_lo, cfg.y_hi, "lat");
    let time = AxisScale::fit(records.iter().map(|r| r.timestamp), cfg.t_lo, cfg.t_hi, "timestamp");
    records.iter().map(|r| Ok(StObject::new(parse_id(&r.id)?, lon.apply(r.lon), lat.apply(r.lat), time.apply(r.timestamp)))).collect()
}

struct AxisScale {
    src_lo: f64,
    src_hi: f64,
    dst_lo: f64,
    dst_hi: f64,
}

impl AxisScale {
    fn fit(values: impl Iterator<Item = f64>, dst_lo: f64, dst_hi: f64, name: &str) -> Self {
        let (src_lo, src_hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        if src_lo == src_hi {
            log::warn!("axis `{name}` has zero extent; mapping every value to the domain midpoint");
        }
        AxisScale { src_lo, src_hi, dst_lo, dst_hi }
    }

    fn apply(&self, v: f64) -> f64 {
        if self.src_lo == self.src_hi {
            return self.dst_lo + (self.dst_hi - self.dst_lo) / 2.0;
        }
        if v == self.src_hi {
            return self.dst_hi;
        }
        let scaled = self.dst_lo + (v - self.src_lo) / (self.src_hi - self.src_lo) * (self.dst_hi - self.dst_lo);
        scaled.clamp(self.dst_lo, self.dst_hi)
    }
}

/// `n` points drawn uniformly over the domain of `cfg`.
pub fn gen_uniform(n: usize, seed: u64, cfg: &IndexConfig) -> Vec<StObject> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n as u64)
        .map(|id| {
            let x = rng.random_range(cfg.x_lo..=cfg.x_hi);
            let y = rng.random_range(cfg.y_lo..=cfg.y_hi);
            let t = rng.random_range(cfg.t_lo..=cfg.t_hi);
            StObject::new(id, x, y, t)
        })
        .collect()
}

/// `n` points around `clusters` uniformly placed centres, Gaussian with
/// standard deviation `sigma` on every axis, clamped to the domain.
pub fn gen_clustered(n: usize, clusters: usize, sigma: f64, seed: u64, cfg: &IndexConfig) -> Vec<StObject> {
    assert!(clusters >= 1, "at least one cluster required");
    assert!(sigma > 0.0 && sigma.is_finite(), "sigma must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centres: Vec<(f64, f64, f64)> = (0..clusters)
        .map(|_| (rng.random_range(cfg.x_lo..=cfg.x_hi), rng.random_range(cfg.y_lo..=cfg.y_hi), rng.random_range(cfg.t_lo..=cfg.t_hi)))
        .collect();
    let noise = Normal::new(0.0, sigma).expect("sigma validated above");
    (0..n as u64)
        .map(|id| {
            let (cx, cy, ct) = centres[rng.random_range(0..clusters)];
            let x = (cx + noise.sample(&mut rng)).clamp(cfg.x_lo, cfg.x_hi);
            let y = (cy + noise.sample(&mut rng)).clamp(cfg.y_lo, cfg.y_hi);
            let t = (ct + noise.sample(&mut rng)).clamp(cfg.t_lo, cfg.t_hi);
            StObject::new(id, x, y, t)
        })
        .collect()
}
