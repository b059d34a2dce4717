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

#![no_std]
#![forbid(unsafe_code)]
//! HOC-Tree: an octree over `(x, y, t)` whose leaves carry 3D Morton labels and
//! 16-byte spatial MBR tags, searched through a Hilbert-curve decomposition of
//! the query's spatial footprint.
//!
//! ```
//! use hoctree::{HocTree, IndexConfig, RangeQuery, StObject};
//!
//! let cfg = IndexConfig::default();
//! let points = [
//!     StObject::new(1, 100.0, 100.0, 100.0),
//!     StObject::new(2, 700.0, 700.0, 700.0),
//!     StObject::new(3, 5000.0, 5000.0, 2500.0),
//! ];
//! let tree = HocTree::build(points, cfg).unwrap();
//! let q = RangeQuery::new(0.0, 1000.0, 0.0, 1000.0, 0.0, 1000.0).unwrap();
//! let found = hoctree::range_search(&tree, &q).unwrap();
//! assert_eq!(found.objects.len(), 2);
//! ```
//!
//! The crate only needs `alloc`. File formats, data generation and the
//! command-line front end live in `hoctree-cli`.

extern crate alloc;

pub mod curves;
pub mod geometry;
pub mod index;
pub mod oracle;
pub mod query;

pub use curves::{CellCoord, CellRect, CurveError, HilbertIndex, HilbertRange, MortonKey};
pub use geometry::{Cube, IndexConfig, RangeQuery, StObject};
pub use index::{HocTree, IndexError, InvariantViolation, Leaf, MbrSign, Node};
pub use oracle::scan_range;
pub use query::{range_search, range_search_with, CoveringNodes, QueryPlan, QueryStats, SearchOptions, SearchResult};
