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

//! Domain records, index configuration, query boxes and the cell grid that
//! ties continuous coordinates to octree cubes.

use crate::curves::{CellCoord, MAX_ORDER};

/// One spatio-temporal record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StObject {
    pub id: u64,
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

impl StObject {
    pub const fn new(id: u64, x: f64, y: f64, t: f64) -> Self {
        StObject { id, x, y, t }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("domain bounds must be finite with lo < hi on every axis")]
    InvalidBounds,
    #[error("deepest level {0} outside 1..={MAX_ORDER}")]
    InvalidDepth(u32),
    #[error("split threshold must be at least 1")]
    InvalidThreshold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("malformed range query: bounds must be ordered and not NaN")]
pub struct MalformedQuery;

/// Domain bounds, deepest level and leaf split threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexConfig {
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
    pub t_lo: f64,
    pub t_hi: f64,
    /// Deepest level `L`.
    pub max_depth: u32,
    /// Leaf capacity above which a leaf shallower than `max_depth` splits.
    pub split_threshold: usize,
}

impl Default for IndexConfig {
    /// Spatial domain `[0, 10000]^2`, temporal `[0, 5000]`, `L = 16`, threshold 200.
    fn default() -> Self {
        IndexConfig { x_lo: 0.0, x_hi: 10_000.0, y_lo: 0.0, y_hi: 10_000.0, t_lo: 0.0, t_hi: 5_000.0, max_depth: 16, split_threshold: 200 }
    }
}

impl IndexConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let axes = [(self.x_lo, self.x_hi), (self.y_lo, self.y_hi), (self.t_lo, self.t_hi)];
        if axes.iter().any(|&(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo < hi)) {
            return Err(ConfigError::InvalidBounds);
        }
        if !(1..=MAX_ORDER).contains(&self.max_depth) {
            return Err(ConfigError::InvalidDepth(self.max_depth));
        }
        if self.split_threshold == 0 {
            return Err(ConfigError::InvalidThreshold);
        }
        Ok(())
    }

    pub fn with_limits(mut self, max_depth: u32, split_threshold: usize) -> Self {
        self.max_depth = max_depth;
        self.split_threshold = split_threshold;
        self
    }

    pub fn contains(&self, o: &StObject) -> bool {
        self.x_lo <= o.x && o.x <= self.x_hi && self.y_lo <= o.y && o.y <= self.y_hi && self.t_lo <= o.t && o.t <= self.t_hi
    }

    pub(crate) fn grid(&self) -> Grid {
        Grid {
            x: AxisGrid::new(self.x_lo, self.x_hi, self.max_depth),
            y: AxisGrid::new(self.y_lo, self.y_hi, self.max_depth),
            t: AxisGrid::new(self.t_lo, self.t_hi, self.max_depth),
            depth: self.max_depth,
        }
    }

    /// Cell index of `o` at `depth` on each axis.
    ///
    /// Cells are half-open `[lo, hi)` except the last one, which also takes the
    /// domain maximum. Boundaries are computed once at the deepest level, so a
    /// cell at any shallower depth is exactly the union of its descendants.
    pub fn quantize(&self, o: &StObject, depth: u32) -> Option<CellCoord> {
        if !self.contains(o) || depth > self.max_depth {
            return None;
        }
        let leaf = self.grid().quantize(o);
        Some(leaf.ancestor(depth))
    }

    /// Closed geometric bounds of a cell.
    pub fn cube(&self, cell: CellCoord) -> Cube {
        self.grid().cube(cell)
    }
}

/// Per-axis boundaries at the deepest level `depth`:
/// `b(j) = lo + j * (w / 2^depth)` for `j < 2^depth`, and `b(2^depth) = hi`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct AxisGrid {
    lo: f64,
    hi: f64,
    width: f64,
    step: f64,
    cells: u32,
}

impl AxisGrid {
    fn new(lo: f64, hi: f64, depth: u32) -> Self {
        let cells = 1u32 << depth;
        let width = hi - lo;
        AxisGrid { lo, hi, width, step: width * (1.0 / f64::from(cells)), cells }
    }

    pub(crate) fn boundary(&self, j: u32) -> f64 {
        if j >= self.cells {
            self.hi
        } else {
            self.lo + f64::from(j) * self.step
        }
    }

    /// Largest `j < 2^depth` with `boundary(j) <= v`.
    pub(crate) fn cell_of(&self, v: f64) -> u32 {
        let last = self.cells - 1;
        // Truncation is floor here since the operand is non-negative.
        let est = ((v - self.lo) / self.width * f64::from(self.cells)) as i64;
        let mut j = est.clamp(0, i64::from(last)) as u32;
        while j > 0 && self.boundary(j) > v {
            j -= 1;
        }
        while j < last && self.boundary(j + 1) <= v {
            j += 1;
        }
        j
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Grid {
    pub(crate) x: AxisGrid,
    pub(crate) y: AxisGrid,
    pub(crate) t: AxisGrid,
    pub(crate) depth: u32,
}

impl Grid {
    /// Deepest-level cell of an in-domain point.
    pub(crate) fn quantize(&self, o: &StObject) -> CellCoord {
        CellCoord::new(self.x.cell_of(o.x), self.y.cell_of(o.y), self.t.cell_of(o.t), self.depth)
            .expect("cell indices are clamped to the grid")
    }

    pub(crate) fn cube(&self, cell: CellCoord) -> Cube {
        let k = self.depth - cell.depth();
        let span = |axis: &AxisGrid, c: u32| (axis.boundary(c << k), axis.boundary((c + 1) << k));
        Cube { x: span(&self.x, cell.cx()), y: span(&self.y, cell.cy()), t: span(&self.t, cell.ct()) }
    }
}

/// Closed axis-aligned box `[lo, hi]` per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cube {
    pub x: (f64, f64),
    pub y: (f64, f64),
    pub t: (f64, f64),
}

/// Closed query box `[x_min, x_max] x [y_min, y_max] x [t_start, t_end]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeQuery {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub t_start: f64,
    pub t_end: f64,
}

impl RangeQuery {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64, t_start: f64, t_end: f64) -> Result<Self, MalformedQuery> {
        let q = RangeQuery { x_min, x_max, y_min, y_max, t_start, t_end };
        q.validate()?;
        Ok(q)
    }

    /// The whole domain of `cfg`.
    pub fn covering(cfg: &IndexConfig) -> Self {
        RangeQuery { x_min: cfg.x_lo, x_max: cfg.x_hi, y_min: cfg.y_lo, y_max: cfg.y_hi, t_start: cfg.t_lo, t_end: cfg.t_hi }
    }

    pub fn validate(&self) -> Result<(), MalformedQuery> {
        // `<=` is false for NaN, so NaN bounds are rejected too.
        if self.x_min <= self.x_max && self.y_min <= self.y_max && self.t_start <= self.t_end {
            Ok(())
        } else {
            Err(MalformedQuery)
        }
    }

    pub fn contains(&self, o: &StObject) -> bool {
        self.x_min <= o.x && o.x <= self.x_max && self.y_min <= o.y && o.y <= self.y_max && self.t_start <= o.t && o.t <= self.t_end
    }

    pub fn contains_cube(&self, c: &Cube) -> bool {
        self.x_min <= c.x.0
            && c.x.1 <= self.x_max
            && self.y_min <= c.y.0
            && c.y.1 <= self.y_max
            && self.t_start <= c.t.0
            && c.t.1 <= self.t_end
    }

    pub fn intersects_cube(&self, c: &Cube) -> bool {
        self.x_min <= c.x.1
            && c.x.0 <= self.x_max
            && self.y_min <= c.y.1
            && c.y.0 <= self.y_max
            && self.t_start <= c.t.1
            && c.t.0 <= self.t_end
    }

    /// Intersection with the domain of `cfg`, or `None` when disjoint.
    pub fn clip(&self, cfg: &IndexConfig) -> Option<RangeQuery> {
        let q = RangeQuery {
            x_min: self.x_min.max(cfg.x_lo),
            x_max: self.x_max.min(cfg.x_hi),
            y_min: self.y_min.max(cfg.y_lo),
            y_max: self.y_max.min(cfg.y_hi),
            t_start: self.t_start.max(cfg.t_lo),
            t_end: self.t_end.min(cfg.t_hi),
        };
        q.validate().ok().map(|_| q)
    }
}
