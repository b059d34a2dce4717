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

//! The HOC-Tree: an octree over `(x, y, t)` with regular midpoint splits,
//! Morton-labelled leaves and a 16-byte spatial MBR tag on every non-empty leaf.

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::curves::{self, morton3_decode, morton3_encode, CellCoord, HilbertRange, MortonKey};
use crate::geometry::{ConfigError, Cube, Grid, IndexConfig, StObject};

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum IndexError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("object {id} lies outside the index domain")]
    OutOfBounds { id: u64 },
    #[error("object id {id} is already indexed")]
    DuplicateId { id: u64 },
    #[error("cannot compute an MBR over zero entries")]
    EmptyEntries,
    #[error("structural invariant violated: {0}")]
    Invariant(#[from] InvariantViolation),
}

/// Conservative single-precision spatial MBR of a leaf: minima are rounded
/// toward negative infinity and maxima toward positive infinity, so the exact
/// double-precision rectangle is always inside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MbrSign {
    pub x_min: f32,
    pub y_min: f32,
    pub x_max: f32,
    pub y_max: f32,
}

pub const MBR_SIGN_BYTES: usize = 16;

fn round_down(v: f64) -> f32 {
    let f = v as f32;
    if f64::from(f) > v {
        f.next_down()
    } else {
        f
    }
}

fn round_up(v: f64) -> f32 {
    let f = v as f32;
    if f64::from(f) < v {
        f.next_up()
    } else {
        f
    }
}

impl MbrSign {
    fn point(x: f64, y: f64) -> Self {
        MbrSign { x_min: round_down(x), y_min: round_down(y), x_max: round_up(x), y_max: round_up(y) }
    }

    fn extend(&mut self, x: f64, y: f64) {
        let p = MbrSign::point(x, y);
        self.x_min = self.x_min.min(p.x_min);
        self.y_min = self.y_min.min(p.y_min);
        self.x_max = self.x_max.max(p.x_max);
        self.y_max = self.y_max.max(p.y_max);
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        f64::from(self.x_min) <= x && x <= f64::from(self.x_max) && f64::from(self.y_min) <= y && y <= f64::from(self.y_max)
    }

    /// Little-endian `x_min, y_min, x_max, y_max`.
    pub fn to_bytes(&self) -> [u8; MBR_SIGN_BYTES] {
        let mut out = [0u8; MBR_SIGN_BYTES];
        for (chunk, v) in out.chunks_exact_mut(4).zip([self.x_min, self.y_min, self.x_max, self.y_max]) {
            chunk.copy_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: [u8; MBR_SIGN_BYTES]) -> Self {
        let f = |i: usize| f32::from_le_bytes([bytes[i], bytes[i + 1], bytes[i + 2], bytes[i + 3]]);
        MbrSign { x_min: f(0), y_min: f(4), x_max: f(8), y_max: f(12) }
    }
}

/// Tag covering every `(x, y)` of `entries`.
pub fn compute_mbrsign(entries: &[StObject]) -> Result<MbrSign, IndexError> {
    let (first, rest) = entries.split_first().ok_or(IndexError::EmptyEntries)?;
    let mut tag = MbrSign::point(first.x, first.y);
    for e in rest {
        tag.extend(e.x, e.y);
    }
    Ok(tag)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Leaf {
    label: MortonKey,
    entries: Vec<StObject>,
    mbr: Option<MbrSign>,
}

impl Leaf {
    fn empty(cell: CellCoord) -> Self {
        Leaf { label: morton3_encode(cell), entries: Vec::new(), mbr: None }
    }

    fn push(&mut self, o: StObject) {
        match &mut self.mbr {
            Some(tag) => tag.extend(o.x, o.y),
            None => self.mbr = Some(MbrSign::point(o.x, o.y)),
        }
        self.entries.push(o);
    }

    pub fn label(&self) -> MortonKey {
        self.label
    }

    pub fn entries(&self) -> &[StObject] {
        &self.entries
    }

    pub fn mbr(&self) -> Option<&MbrSign> {
        self.mbr.as_ref()
    }
}

pub type Children = [Option<Box<Node>>; 8];

#[derive(Debug, Clone, PartialEq)]
enum NodeBody {
    Internal(Box<Children>),
    Leaf(Leaf),
}

/// A cube of the octree: either eight optional octant children or a leaf.
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    cell: CellCoord,
    // Order-`depth` Hilbert index of the cell's spatial projection.
    hilbert: u64,
    body: NodeBody,
}

impl Node {
    fn empty_leaf(cell: CellCoord) -> Self {
        Node { cell, hilbert: hilbert_prefix(cell), body: NodeBody::Leaf(Leaf::empty(cell)) }
    }

    /// Leaf with precomputed tag. Used when reloading a persisted tree; the
    /// label is derived from `cell`.
    pub fn new_leaf(cell: CellCoord, entries: Vec<StObject>, mbr: Option<MbrSign>) -> Self {
        Node { cell, hilbert: hilbert_prefix(cell), body: NodeBody::Leaf(Leaf { label: morton3_encode(cell), entries, mbr }) }
    }

    pub fn new_internal(cell: CellCoord, children: Children) -> Self {
        Node { cell, hilbert: hilbert_prefix(cell), body: NodeBody::Internal(Box::new(children)) }
    }

    pub fn cell(&self) -> CellCoord {
        self.cell
    }

    pub fn depth(&self) -> u32 {
        self.cell.depth()
    }

    /// See [`spatial_footprint`].
    pub fn footprint(&self, max_depth: u32) -> HilbertRange {
        let shift = 2 * (max_depth - self.cell.depth());
        let lo = self.hilbert << shift;
        HilbertRange::new(lo, lo + ((1u64 << shift) - 1))
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self.body, NodeBody::Leaf(_))
    }

    pub fn as_leaf(&self) -> Option<&Leaf> {
        match &self.body {
            NodeBody::Leaf(leaf) => Some(leaf),
            NodeBody::Internal(_) => None,
        }
    }

    /// Octant slots of an internal node; `None` for a leaf.
    pub fn children(&self) -> Option<&Children> {
        match &self.body {
            NodeBody::Internal(children) => Some(children),
            NodeBody::Leaf(_) => None,
        }
    }

    fn leaf_count_into(&self, count: &mut usize) {
        match &self.body {
            NodeBody::Leaf(_) => *count += 1,
            NodeBody::Internal(children) => children.iter().flatten().for_each(|c| c.leaf_count_into(count)),
        }
    }
}

/// Structural check failure reported by [`HocTree::check_invariants`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum InvariantViolation {
    #[error("child in slot {slot} of {parent:?} has cell {child:?}")]
    Partition { parent: CellCoord, slot: u8, child: CellCoord },
    #[error("leaf {cell:?} above the deepest level holds {len} entries")]
    Capacity { cell: CellCoord, len: usize },
    #[error("object {id} does not quantize into leaf {cell:?}")]
    Containment { id: u64, cell: CellCoord },
    #[error("leaf {cell:?} MBR tag missing or not covering object {id}")]
    MbrSoundness { id: u64, cell: CellCoord },
    #[error("empty leaf {cell:?} carries an MBR tag")]
    StrayTag { cell: CellCoord },
    #[error("leaf {cell:?} label does not decode to its cell")]
    Label { cell: CellCoord },
    #[error("object count {recorded} but leaves hold {actual}")]
    Count { recorded: usize, actual: usize },
    #[error("object id {id} appears more than once")]
    DuplicateId { id: u64 },
    #[error("node {cell:?} is deeper than the configured maximum")]
    TooDeep { cell: CellCoord },
}

#[derive(Debug, Clone)]
pub struct HocTree {
    config: IndexConfig,
    grid: Grid,
    root: Node,
    object_count: usize,
    ids: BTreeSet<u64>,
}

impl HocTree {
    pub fn new(config: IndexConfig) -> Result<Self, IndexError> {
        config.validate()?;
        Ok(HocTree { config, grid: config.grid(), root: Node::empty_leaf(CellCoord::ROOT), object_count: 0, ids: BTreeSet::new() })
    }

    /// Inserts `objects` in iteration order. Fails on the first object that
    /// is out of bounds or repeats an id.
    pub fn build<I: IntoIterator<Item = StObject>>(objects: I, config: IndexConfig) -> Result<Self, IndexError> {
        let mut tree = HocTree::new(config)?;
        for o in objects {
            tree.insert(o)?;
        }
        Ok(tree)
    }

    /// Reassembles a tree from a root node, recomputing the object count and
    /// verifying every structural invariant.
    pub fn from_root(config: IndexConfig, root: Node) -> Result<Self, IndexError> {
        config.validate()?;
        let mut tree = HocTree { config, grid: config.grid(), root, object_count: 0, ids: BTreeSet::new() };
        let mut ids = BTreeSet::new();
        let mut count = 0usize;
        for leaf in tree.leaves() {
            for e in leaf.as_leaf().map(Leaf::entries).unwrap_or_default() {
                ids.insert(e.id);
                count += 1;
            }
        }
        tree.ids = ids;
        tree.object_count = count;
        tree.check_invariants()?;
        Ok(tree)
    }

    pub fn insert(&mut self, o: StObject) -> Result<(), IndexError> {
        if !self.config.contains(&o) {
            return Err(IndexError::OutOfBounds { id: o.id });
        }
        if !self.ids.insert(o.id) {
            return Err(IndexError::DuplicateId { id: o.id });
        }
        let cell = self.grid.quantize(&o);
        insert_into(&mut self.root, o, cell, &self.grid, self.config.split_threshold);
        self.object_count += 1;
        Ok(())
    }

    pub fn config(&self) -> &IndexConfig {
        &self.config
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn object_count(&self) -> usize {
        self.object_count
    }

    pub fn is_empty(&self) -> bool {
        self.object_count == 0
    }

    pub fn leaf_count(&self) -> usize {
        let mut n = 0;
        self.root.leaf_count_into(&mut n);
        n
    }

    pub fn cube(&self, cell: CellCoord) -> Cube {
        self.grid.cube(cell)
    }

    /// Depth-first pre-order walk over all leaves, octants in ascending order.
    pub fn leaves(&self) -> Leaves<'_> {
        Leaves { stack: alloc::vec![&self.root], filter: None }
    }

    /// Leaves whose spatial footprint at the deepest level shares a cell with
    /// the Hilbert run `r`.
    pub fn leaf_cells_in_hilbert_range(&self, r: HilbertRange) -> Leaves<'_> {
        Leaves { stack: alloc::vec![&self.root], filter: Some((r, self.config.max_depth)) }
    }

    /// Every stored object, in leaf order.
    pub fn objects(&self) -> impl Iterator<Item = &StObject> {
        self.leaves().filter_map(Node::as_leaf).flat_map(|l| l.entries().iter())
    }

    pub fn check_invariants(&self) -> Result<(), InvariantViolation> {
        let mut seen = BTreeSet::new();
        let mut total = 0usize;
        self.check_node(&self.root, &mut seen, &mut total)?;
        if total != self.object_count {
            return Err(InvariantViolation::Count { recorded: self.object_count, actual: total });
        }
        Ok(())
    }

    fn check_node(&self, node: &Node, seen: &mut BTreeSet<u64>, total: &mut usize) -> Result<(), InvariantViolation> {
        let cell = node.cell;
        if node.depth() > self.config.max_depth {
            return Err(InvariantViolation::TooDeep { cell });
        }
        match &node.body {
            NodeBody::Internal(children) => {
                for (slot, child) in children.iter().enumerate() {
                    if let Some(child) = child {
                        if child.cell != cell.child(slot as u8) {
                            return Err(InvariantViolation::Partition { parent: cell, slot: slot as u8, child: child.cell });
                        }
                        self.check_node(child, seen, total)?;
                    }
                }
            }
            NodeBody::Leaf(leaf) => {
                if node.depth() < self.config.max_depth && leaf.entries.len() > self.config.split_threshold {
                    return Err(InvariantViolation::Capacity { cell, len: leaf.entries.len() });
                }
                if morton3_decode(leaf.label) != cell {
                    return Err(InvariantViolation::Label { cell });
                }
                if leaf.entries.is_empty() && leaf.mbr.is_some() {
                    return Err(InvariantViolation::StrayTag { cell });
                }
                for e in &leaf.entries {
                    if !self.config.contains(e) || self.grid.quantize(e).ancestor(node.depth()) != cell {
                        return Err(InvariantViolation::Containment { id: e.id, cell });
                    }
                    if !leaf.mbr.is_some_and(|tag| tag.contains(e.x, e.y)) {
                        return Err(InvariantViolation::MbrSoundness { id: e.id, cell });
                    }
                    if !seen.insert(e.id) {
                        return Err(InvariantViolation::DuplicateId { id: e.id });
                    }
                }
                *total += leaf.entries.len();
            }
        }
        Ok(())
    }
}

/// Inclusive range of deepest-level Hilbert indices covered by a cell's
/// spatial projection.
pub fn spatial_footprint(cell: CellCoord, max_depth: u32) -> HilbertRange {
    let shift = 2 * (max_depth - cell.depth());
    let lo = hilbert_prefix(cell) << shift;
    HilbertRange::new(lo, lo + ((1u64 << shift) - 1))
}

fn hilbert_prefix(cell: CellCoord) -> u64 {
    match cell.depth() {
        0 => 0,
        d => curves::hilbert_encode_unchecked(cell.cx(), cell.cy(), d),
    }
}

fn insert_into(node: &mut Node, o: StObject, deep: CellCoord, grid: &Grid, psi: usize) {
    match &mut node.body {
        NodeBody::Internal(children) => {
            let child_cell = deep.ancestor(node.cell.depth() + 1);
            let slot = &mut children[usize::from(child_cell.octant())];
            let child = slot.get_or_insert_with(|| Box::new(Node::empty_leaf(child_cell)));
            insert_into(child, o, deep, grid, psi);
        }
        NodeBody::Leaf(leaf) => {
            leaf.push(o);
            if leaf.entries.len() > psi && node.cell.depth() < grid.depth {
                let entries = core::mem::take(&mut leaf.entries);
                node.body = NodeBody::Internal(Box::default());
                for e in entries {
                    let cell = grid.quantize(&e);
                    insert_into(node, e, cell, grid, psi);
                }
            }
        }
    }
}

pub struct Leaves<'a> {
    stack: Vec<&'a Node>,
    filter: Option<(HilbertRange, u32)>,
}

impl<'a> Iterator for Leaves<'a> {
    type Item = &'a Node;

    fn next(&mut self) -> Option<&'a Node> {
        while let Some(node) = self.stack.pop() {
            if let Some((r, depth)) = self.filter {
                if !node.footprint(depth).overlaps(&r) {
                    continue;
                }
            }
            match &node.body {
                NodeBody::Leaf(_) => return Some(node),
                NodeBody::Internal(children) => {
                    self.stack.extend(children.iter().rev().flatten().map(|c| &**c));
                }
            }
        }
        None
    }
}
