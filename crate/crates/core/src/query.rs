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

//! Range search over a [`HocTree`].
//!
//! The pipeline: map the query's spatial rectangle to deepest-level Hilbert
//! runs ("regions"); for each region find the leaves whose cubes overlap the
//! query box; split them into fully and partially covered leaves; drop
//! partial leaves whose MBR tag misses the spatial rectangle; return full
//! leaves wholesale and refine partial-leaf entries one by one.
//!
//! [`range_search`] does not materialize the regions: a node's Hilbert
//! footprint is a square block of deepest-level cells, so it meets some
//! region exactly when that block meets the quantized rectangle, and the
//! descent tests the block directly. [`QueryPlan`] runs the staged form.

use alloc::vec::Vec;
use core::ops::AddAssign;

use crate::curves::{hilbert_ranges, CellRect, HilbertRange};
use crate::geometry::{MalformedQuery, RangeQuery, StObject};
use crate::index::{HocTree, MbrSign, Node};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchOptions {
    /// Skip partial leaves whose MBR tag misses the query rectangle.
    pub use_mbr: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { use_mbr: true }
    }
}

/// Leaves overlapping a query, split by containment.
#[derive(Debug, Clone, Default)]
pub struct CoveringNodes<'a> {
    /// Leaves whose cube lies inside the query box.
    pub full: Vec<&'a Node>,
    /// Leaves whose cube meets the query box without lying inside it.
    pub partial: Vec<&'a Node>,
}

impl<'a> CoveringNodes<'a> {
    pub fn is_empty(&self) -> bool {
        self.full.is_empty() && self.partial.is_empty()
    }

    pub fn append(&mut self, other: &mut CoveringNodes<'a>) {
        self.full.append(&mut other.full);
        self.partial.append(&mut other.partial);
    }
}

/// Work counters for one search.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct QueryStats {
    /// Tree nodes entered, summed over regions.
    pub nodes_visited: u64,
    /// Leaves returned without per-entry checks.
    pub leaves_full: u64,
    /// Partial leaves whose entries were refined.
    pub leaves_partial: u64,
    /// Partial leaves skipped because their MBR tag missed the query.
    pub leaves_pruned_by_mbr: u64,
    /// Entries tested individually.
    pub candidates_refined: u64,
    pub results: u64,
}

impl AddAssign for QueryStats {
    fn add_assign(&mut self, rhs: QueryStats) {
        self.nodes_visited += rhs.nodes_visited;
        self.leaves_full += rhs.leaves_full;
        self.leaves_partial += rhs.leaves_partial;
        self.leaves_pruned_by_mbr += rhs.leaves_pruned_by_mbr;
        self.candidates_refined += rhs.candidates_refined;
        self.results += rhs.results;
    }
}

#[derive(Debug, Clone, Default)]
pub struct SearchResult {
    pub objects: Vec<StObject>,
    pub stats: QueryStats,
}

impl SearchResult {
    pub fn merge(&mut self, mut other: SearchResult) {
        self.objects.append(&mut other.objects);
        self.stats += other.stats;
    }

    /// Result ids, ascending.
    pub fn sorted_ids(&self) -> Vec<u64> {
        let mut ids: Vec<u64> = self.objects.iter().map(|o| o.id).collect();
        ids.sort_unstable();
        ids
    }
}

/// A query clipped to the index domain together with its Hilbert regions.
#[derive(Debug, Clone)]
pub struct QueryPlan {
    pub query: RangeQuery,
    pub regions: Vec<HilbertRange>,
}

impl QueryPlan {
    /// `Ok(None)` when the query misses the domain entirely.
    pub fn new(tree: &HocTree, q: &RangeQuery) -> Result<Option<QueryPlan>, MalformedQuery> {
        q.validate()?;
        let Some(query) = q.clip(tree.config()) else {
            return Ok(None);
        };
        let regions = spatial_regions(tree, &query);
        Ok(Some(QueryPlan { query, regions }))
    }

    /// Overlapping leaves owned by region `index`, classified and, when
    /// enabled, filtered by MBR tag.
    ///
    /// A leaf whose footprint spans several regions is owned by the first of
    /// them, so every leaf is reported by exactly one region.
    pub fn region_coverage<'a>(&self, tree: &'a HocTree, index: usize, opts: SearchOptions) -> (CoveringNodes<'a>, QueryStats) {
        let region = self.regions[index];
        let previous_hi = index.checked_sub(1).map(|i| self.regions[i].hi);
        let mut stats = QueryStats::default();
        let mut leaves = Vec::new();
        overlapping_leaves(tree, tree.root(), &region, previous_hi, &self.query, &mut leaves, &mut stats);
        let coverage = self.classify(tree, &leaves, opts, &mut stats);
        (coverage, stats)
    }

    pub fn search_region(&self, tree: &HocTree, index: usize, opts: SearchOptions) -> SearchResult {
        let (coverage, stats) = self.region_coverage(tree, index, opts);
        let mut out = collect(&coverage, &self.query);
        out.stats += stats;
        out
    }

    /// Coverage over all regions in one descent. Equal, leaf for leaf, to
    /// appending [`QueryPlan::region_coverage`] over every region.
    pub fn coverage<'a>(&self, tree: &'a HocTree, opts: SearchOptions) -> (CoveringNodes<'a>, QueryStats) {
        let mut stats = QueryStats::default();
        let mut leaves = Vec::new();
        if !self.regions.is_empty() {
            leaves_in_regions(tree, tree.root(), &self.regions, &self.query, &mut leaves, &mut stats);
        }
        let coverage = self.classify(tree, &leaves, opts, &mut stats);
        (coverage, stats)
    }

    /// Result over all regions, computed with a single descent.
    pub fn search(&self, tree: &HocTree, opts: SearchOptions) -> SearchResult {
        let (coverage, stats) = self.coverage(tree, opts);
        let mut out = collect(&coverage, &self.query);
        out.stats += stats;
        out
    }

    fn classify<'a>(&self, tree: &HocTree, leaves: &[&'a Node], opts: SearchOptions, stats: &mut QueryStats) -> CoveringNodes<'a> {
        let mut coverage = identify(tree, leaves, &self.query);
        if opts.use_mbr {
            stats.leaves_pruned_by_mbr += mbr_filter(&mut coverage, &self.query);
        }
        coverage
    }
}

/// Hilbert runs covering the deepest-level cells touched by the spatial
/// rectangle of `q`, which must already lie inside the domain.
pub fn spatial_regions(tree: &HocTree, q: &RangeQuery) -> Vec<HilbertRange> {
    match spatial_cells(tree, q) {
        Some(rect) => hilbert_ranges(rect, tree.config().max_depth).expect("quantized rectangle is within the grid"),
        None => Vec::new(),
    }
}

fn spatial_cells(tree: &HocTree, q: &RangeQuery) -> Option<CellRect> {
    let cfg = tree.config();
    let lo = cfg.quantize(&StObject::new(0, q.x_min, q.y_min, cfg.t_lo), cfg.max_depth)?;
    let hi = cfg.quantize(&StObject::new(0, q.x_max, q.y_max, cfg.t_lo), cfg.max_depth)?;
    Some(CellRect::new(lo.cx(), hi.cx(), lo.cy(), hi.cy()))
}

fn leaves_in_rect<'a>(tree: &'a HocTree, node: &'a Node, rect: &CellRect, q: &RangeQuery, out: &mut Vec<&'a Node>, stats: &mut QueryStats) {
    let cell = node.cell();
    let shift = tree.config().max_depth - cell.depth();
    let (x0, y0) = (cell.cx() << shift, cell.cy() << shift);
    let side = (1u32 << shift) - 1;
    let meets = x0 <= rect.x_hi && rect.x_lo <= x0 + side && y0 <= rect.y_hi && rect.y_lo <= y0 + side;
    if !meets || !q.intersects_cube(&tree.cube(cell)) {
        return;
    }
    stats.nodes_visited += 1;
    match node.children() {
        Some(children) => {
            for child in children.iter().flatten() {
                leaves_in_rect(tree, child, rect, q, out, stats);
            }
        }
        None => {
            if node.as_leaf().is_some_and(|l| !l.entries().is_empty()) {
                out.push(node);
            }
        }
    }
}

fn overlapping_leaves<'a>(
    tree: &'a HocTree,
    node: &'a Node,
    region: &HilbertRange,
    previous_hi: Option<u64>,
    q: &RangeQuery,
    out: &mut Vec<&'a Node>,
    stats: &mut QueryStats,
) {
    let footprint = node.footprint(tree.config().max_depth);
    if !footprint.overlaps(region) || !q.intersects_cube(&tree.cube(node.cell())) {
        return;
    }
    stats.nodes_visited += 1;
    match node.children() {
        Some(children) => {
            for child in children.iter().flatten() {
                overlapping_leaves(tree, child, region, previous_hi, q, out, stats);
            }
        }
        None => {
            let owned = footprint.lo >= region.lo || previous_hi.is_none_or(|p| p < footprint.lo);
            let non_empty = node.as_leaf().is_some_and(|l| !l.entries().is_empty());
            if owned && non_empty {
                out.push(node);
            }
        }
    }
}

/// Like `overlapping_leaves` but against a sorted, disjoint region list, so
/// every leaf is reached at most once.
fn leaves_in_regions<'a>(
    tree: &'a HocTree,
    node: &'a Node,
    regions: &[HilbertRange],
    q: &RangeQuery,
    out: &mut Vec<&'a Node>,
    stats: &mut QueryStats,
) {
    let footprint = node.footprint(tree.config().max_depth);
    let first = regions.partition_point(|r| r.hi < footprint.lo);
    if regions.get(first).is_none_or(|r| r.lo > footprint.hi) || !q.intersects_cube(&tree.cube(node.cell())) {
        return;
    }
    stats.nodes_visited += 1;
    match node.children() {
        Some(children) => {
            for child in children.iter().flatten() {
                leaves_in_regions(tree, child, regions, q, out, stats);
            }
        }
        None => {
            if node.as_leaf().is_some_and(|l| !l.entries().is_empty()) {
                out.push(node);
            }
        }
    }
}

/// Every non-empty leaf whose spatial footprint meets `region` and whose cube
/// meets `q`, classified by [`identify`].
pub fn get_overlapping_cubes<'a>(tree: &'a HocTree, region: HilbertRange, q: &RangeQuery) -> CoveringNodes<'a> {
    let mut leaves = Vec::new();
    let mut stats = QueryStats::default();
    overlapping_leaves(tree, tree.root(), &region, None, q, &mut leaves, &mut stats);
    identify(tree, &leaves, q)
}

/// Full iff the leaf's closed cube lies inside the closed query box.
pub fn identify<'a>(tree: &HocTree, candidates: &[&'a Node], q: &RangeQuery) -> CoveringNodes<'a> {
    let mut out = CoveringNodes::default();
    for &leaf in candidates {
        if q.contains_cube(&tree.cube(leaf.cell())) {
            out.full.push(leaf);
        } else {
            out.partial.push(leaf);
        }
    }
    out
}

/// Closed-interval intersection of the tag with the query rectangle.
pub fn mbr_check(tag: &MbrSign, q: &RangeQuery) -> bool {
    f64::from(tag.x_min) <= q.x_max && q.x_min <= f64::from(tag.x_max) && f64::from(tag.y_min) <= q.y_max && q.y_min <= f64::from(tag.y_max)
}

/// Drops partial leaves whose tag misses the rectangle; returns how many.
fn mbr_filter(coverage: &mut CoveringNodes<'_>, q: &RangeQuery) -> u64 {
    let before = coverage.partial.len();
    coverage.partial.retain(|n| n.as_leaf().and_then(|l| l.mbr()).is_some_and(|tag| mbr_check(tag, q)));
    (before - coverage.partial.len()) as u64
}

/// Candidates inside the closed query box, order preserved.
pub fn prune(candidates: &[StObject], q: &RangeQuery) -> Vec<StObject> {
    candidates.iter().filter(|o| q.contains(o)).copied().collect()
}

/// Entries of full leaves unchecked, plus refined entries of partial leaves.
pub fn collect(coverage: &CoveringNodes<'_>, q: &RangeQuery) -> SearchResult {
    let mut stats = QueryStats::default();
    let mut objects = Vec::new();
    for leaf in coverage.full.iter().filter_map(|n| n.as_leaf()) {
        stats.leaves_full += 1;
        objects.extend_from_slice(leaf.entries());
    }
    for leaf in coverage.partial.iter().filter_map(|n| n.as_leaf()) {
        stats.leaves_partial += 1;
        stats.candidates_refined += leaf.entries().len() as u64;
        objects.extend(leaf.entries().iter().filter(|o| q.contains(o)));
    }
    stats.results = objects.len() as u64;
    SearchResult { objects, stats }
}

/// Objects inside the closed box `q`, with MBR pruning enabled.
pub fn range_search(tree: &HocTree, q: &RangeQuery) -> Result<SearchResult, MalformedQuery> {
    range_search_with(tree, q, SearchOptions::default())
}

pub fn range_search_with(tree: &HocTree, q: &RangeQuery, opts: SearchOptions) -> Result<SearchResult, MalformedQuery> {
    q.validate()?;
    let Some(query) = q.clip(tree.config()) else {
        return Ok(SearchResult::default());
    };
    let mut stats = QueryStats::default();
    let mut leaves = Vec::new();
    if let Some(rect) = spatial_cells(tree, &query) {
        leaves_in_rect(tree, tree.root(), &rect, &query, &mut leaves, &mut stats);
    }
    let mut coverage = identify(tree, &leaves, &query);
    if opts.use_mbr {
        stats.leaves_pruned_by_mbr = mbr_filter(&mut coverage, &query);
    }
    let mut out = collect(&coverage, &query);
    out.stats += stats;
    Ok(out)
}
