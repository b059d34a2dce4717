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

//! Query workloads and timing of the index against the linear scan.

use std::fmt;
use std::hint::black_box;
use std::str::FromStr;
use std::time::Instant;

use hoctree::query::QueryPlan;
use hoctree::{range_search_with, scan_range, HocTree, IndexConfig, QueryStats, RangeQuery, SearchOptions, SearchResult, StObject};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Index search with MBR tag pruning.
    Hoc,
    /// Index search with tag pruning disabled.
    HocNotag,
    /// Linear scan over all objects.
    Scan,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Hoc, Method::HocNotag, Method::Scan];

    pub fn name(self) -> &'static str {
        match self {
            Method::Hoc => "hoc",
            Method::HocNotag => "hoc-notag",
            Method::Scan => "scan",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Method::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| format!("unknown method `{s}` (expected hoc, hoc-notag or scan)"))
    }
}

/// `count` boxes of fixed extents with uniformly random origins such that each
/// box fits inside the domain. An extent larger than the domain spans it.
pub fn random_queries(count: usize, spatial_extent: f64, temporal_extent: f64, seed: u64, cfg: &IndexConfig) -> Vec<RangeQuery> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut axis = |lo: f64, hi: f64, extent: f64| {
        let slack = (hi - lo - extent).max(0.0);
        let start = lo + rng.random_range(0.0..=1.0) * slack;
        (start, (start + extent).min(hi))
    };
    (0..count)
        .map(|_| {
            let (x0, x1) = axis(cfg.x_lo, cfg.x_hi, spatial_extent);
            let (y0, y1) = axis(cfg.y_lo, cfg.y_hi, spatial_extent);
            let (t0, t1) = axis(cfg.t_lo, cfg.t_hi, temporal_extent);
            RangeQuery { x_min: x0, x_max: x1, y_min: y0, y_max: y1, t_start: t0, t_end: t1 }
        })
        .collect()
}

/// Fraction of the domain volume covered by a box of the given extents.
pub fn selectivity(spatial_extent: f64, temporal_extent: f64, cfg: &IndexConfig) -> f64 {
    let frac = |e: f64, lo: f64, hi: f64| (e / (hi - lo)).min(1.0);
    frac(spatial_extent, cfg.x_lo, cfg.x_hi) * frac(spatial_extent, cfg.y_lo, cfg.y_hi) * frac(temporal_extent, cfg.t_lo, cfg.t_hi)
}

/// Range search with the per-region work spread over the rayon pool and the
/// partial results merged afterwards.
pub fn par_range_search(tree: &HocTree, q: &RangeQuery, opts: SearchOptions) -> Result<SearchResult, hoctree::geometry::MalformedQuery> {
    let Some(plan) = QueryPlan::new(tree, q)? else {
        return Ok(SearchResult::default());
    };
    Ok((0..plan.regions.len()).into_par_iter().map(|i| plan.search_region(tree, i, opts)).reduce(SearchResult::default, |mut a, b| {
        a.merge(b);
        a
    }))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchSettings {
    pub spatial_extent: f64,
    pub temporal_extent: f64,
    pub queries: usize,
    pub reps: usize,
    pub seed: u64,
    pub parallel: bool,
}

impl Default for BenchSettings {
    fn default() -> Self {
        BenchSettings { spatial_extent: 600.0, temporal_extent: 600.0, queries: 50, reps: 5, seed: 7, parallel: false }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StatsSummary {
    pub nodes_visited: u64,
    pub leaves_full: u64,
    pub leaves_partial: u64,
    pub leaves_pruned_by_mbr: u64,
    pub candidates_refined: u64,
    pub results: u64,
}

impl From<QueryStats> for StatsSummary {
    fn from(s: QueryStats) -> Self {
        StatsSummary {
            nodes_visited: s.nodes_visited,
            leaves_full: s.leaves_full,
            leaves_partial: s.leaves_partial,
            leaves_pruned_by_mbr: s.leaves_pruned_by_mbr,
            candidates_refined: s.candidates_refined,
            results: s.results,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodReport {
    pub method: Method,
    /// Mean per-query latency, averaged over the repetitions.
    pub mean_ms: f64,
    /// Median over every timed query of every repetition.
    pub median_ms: f64,
    /// Mean per-query latency of each repetition.
    pub rep_means_ms: Vec<f64>,
    /// Counters summed over the query set; absent for the scan.
    pub stats_total: Option<StatsSummary>,
    /// Counters of each query, in query order; absent for the scan.
    #[serde(skip)]
    pub per_query: Vec<QueryStats>,
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("repetitions and query count must both be at least 1")]
    EmptyWorkload,
    #[error("no methods selected")]
    NoMethods,
    #[error("query {query} ({bounds:?}): {method} returned {got} ids, {reference} returned {expected}; first differing id {first_diff:?}")]
    Mismatch { query: usize, bounds: RangeQuery, method: Method, got: usize, reference: Method, expected: usize, first_diff: Option<u64> },
}

fn run_once(method: Method, tree: &HocTree, objects: &[StObject], q: &RangeQuery, parallel: bool) -> SearchResult {
    let search = |opts| {
        if parallel { par_range_search(tree, q, opts) } else { range_search_with(tree, q, opts) }
            .expect("generated queries are well formed")
    };
    match method {
        Method::Hoc => search(SearchOptions { use_mbr: true }),
        Method::HocNotag => search(SearchOptions { use_mbr: false }),
        Method::Scan => {
            SearchResult { objects: scan_range(objects, q).expect("generated queries are well formed"), stats: QueryStats::default() }
        }
    }
}

/// Checks that every method returns the same id set for every query, then
/// times `reps` passes over the query set.
pub fn run_bench(
    tree: &HocTree,
    objects: &[StObject],
    methods: &[Method],
    settings: &BenchSettings,
) -> Result<Vec<MethodReport>, BenchError> {
    if settings.reps == 0 || settings.queries == 0 {
        return Err(BenchError::EmptyWorkload);
    }
    if methods.is_empty() {
        return Err(BenchError::NoMethods);
    }
    let queries = random_queries(settings.queries, settings.spatial_extent, settings.temporal_extent, settings.seed, tree.config());

    let mut per_query: Vec<Vec<QueryStats>> = vec![Vec::with_capacity(queries.len()); methods.len()];
    for (qi, q) in queries.iter().enumerate() {
        let mut reference: Option<(Method, Vec<u64>)> = None;
        for (mi, &m) in methods.iter().enumerate() {
            let r = run_once(m, tree, objects, q, settings.parallel);
            per_query[mi].push(r.stats);
            let ids = r.sorted_ids();
            match &reference {
                None => reference = Some((m, ids)),
                Some((rm, expected)) if *expected != ids => {
                    let first_diff = expected.iter().zip(&ids).find(|(a, b)| a != b).map(|(a, _)| *a).or_else(|| {
                        let (long, short) = if expected.len() > ids.len() { (expected, &ids) } else { (&ids, expected) };
                        long.get(short.len()).copied()
                    });
                    return Err(BenchError::Mismatch {
                        query: qi,
                        bounds: *q,
                        method: m,
                        got: ids.len(),
                        reference: *rm,
                        expected: expected.len(),
                        first_diff,
                    });
                }
                Some(_) => {}
            }
        }
    }

    let mut samples: Vec<Vec<f64>> = vec![Vec::with_capacity(settings.reps * queries.len()); methods.len()];
    let mut rep_means: Vec<Vec<f64>> = vec![Vec::with_capacity(settings.reps); methods.len()];
    // Methods are interleaved per query, in alternating order, so drift and
    // cache warm-up fall evenly on all of them.
    let n = methods.len();
    for rep in 0..settings.reps {
        let mut totals = vec![0.0; n];
        for (qi, q) in queries.iter().enumerate() {
            let forward = (rep + qi) % 2 == 0;
            for k in 0..n {
                let mi = if forward { k } else { n - 1 - k };
                let start = Instant::now();
                black_box(run_once(methods[mi], tree, objects, black_box(q), settings.parallel));
                let ms = start.elapsed().as_secs_f64() * 1e3;
                samples[mi].push(ms);
                totals[mi] += ms;
            }
        }
        for (mi, total) in totals.into_iter().enumerate() {
            rep_means[mi].push(total / queries.len() as f64);
        }
    }

    Ok(methods
        .iter()
        .enumerate()
        .map(|(mi, &m)| {
            let means = std::mem::take(&mut rep_means[mi]);
            let stats = &per_query[mi];
            MethodReport {
                method: m,
                mean_ms: means.iter().sum::<f64>() / means.len() as f64,
                median_ms: median(&mut samples[mi]),
                rep_means_ms: means,
                stats_total: (m != Method::Scan).then(|| {
                    let mut total = QueryStats::default();
                    stats.iter().for_each(|s| total += *s);
                    total.into()
                }),
                per_query: if m == Method::Scan { Vec::new() } else { stats.clone() },
            }
        })
        .collect())
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}
