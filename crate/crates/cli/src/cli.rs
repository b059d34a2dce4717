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

//! Command-line front end: `gen`, `build`, `query` and `bench`.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 verification
//! mismatch.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hoctree::{range_search_with, scan_range, HocTree, IndexConfig, RangeQuery, SearchOptions, StObject};
use serde::Serialize;

use crate::bench::{par_range_search, run_bench, selectivity, BenchSettings, Method, MethodReport, StatsSummary};
use crate::ingest::{self, IngestError};
use crate::persist::{self, PersistError, SaveOptions};

pub const DEFAULT_CLUSTERS: usize = 10;
pub const DEFAULT_SIGMA: f64 = 200.0;

#[derive(Debug, Parser)]
#[command(name = "hoc", version, about = "Spatio-temporal range search with a Hilbert-assisted octree")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset as CSV.
    Gen(GenArgs),
    /// Build an index file from a CSV dataset.
    Build(BuildArgs),
    /// Run one range query against an index file.
    Query(QueryArgs),
    /// Time the index against a linear scan on random queries.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DataKind {
    Uniform,
    Clustered,
}

#[derive(Debug, Args)]
pub struct DomainArgs {
    /// Domain as `x_lo,x_hi,y_lo,y_hi,t_lo,t_hi`.
    #[arg(long, value_delimiter = ',', num_args = 6, allow_hyphen_values = true)]
    pub domain: Option<Vec<f64>>,
}

impl DomainArgs {
    fn config(&self) -> IndexConfig {
        let mut cfg = IndexConfig::default();
        if let Some(d) = &self.domain {
            (cfg.x_lo, cfg.x_hi, cfg.y_lo, cfg.y_hi, cfg.t_lo, cfg.t_hi) = (d[0], d[1], d[2], d[3], d[4], d[5]);
        }
        cfg
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = DataKind::Uniform)]
    pub kind: DataKind,
    /// Cluster count for `--kind clustered` (default 10).
    #[arg(long)]
    pub clusters: Option<usize>,
    /// Per-axis standard deviation for `--kind clustered` (default 200).
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub domain: DomainArgs,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Deepest level L.
    #[arg(long, default_value_t = 16)]
    pub levels: u32,
    /// Leaf split threshold.
    #[arg(long, default_value_t = 200)]
    pub psi: usize,
    /// Min-max scale raw coordinates into the domain instead of reading them as domain units.
    #[arg(long)]
    pub scale: bool,
    /// Omit the per-leaf MBR tags from the file.
    #[arg(long)]
    pub no_tags: bool,
    #[command(flatten)]
    pub domain: DomainArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Ids,
    Json,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    #[arg(long)]
    pub index: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    pub x_min: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub x_max: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub y_min: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub y_max: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub t_start: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub t_end: f64,
    #[arg(long, value_enum, default_value_t = OutputFormat::Ids)]
    pub format: OutputFormat,
    /// Compare against a linear scan and exit with code 3 on mismatch.
    #[arg(long)]
    pub verify: bool,
    /// Source dataset for `--verify`; defaults to the objects stored in the index.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// The CSV was indexed with `build --scale`.
    #[arg(long)]
    pub scale: bool,
    /// Disable MBR tag pruning.
    #[arg(long)]
    pub no_mbr: bool,
    /// Search Hilbert regions concurrently.
    #[arg(long)]
    pub parallel: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub index: PathBuf,
    #[arg(long)]
    pub csv: PathBuf,
    #[arg(long, default_value_t = 600.0)]
    pub spatial_extent: f64,
    #[arg(long, default_value_t = 600.0)]
    pub temporal_extent: f64,
    #[arg(long, default_value_t = 50)]
    pub queries: usize,
    #[arg(long, default_value_t = 5)]
    pub reps: usize,
    #[arg(long, value_delimiter = ',', default_value = "hoc,hoc-notag,scan")]
    pub methods: Vec<Method>,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// The CSV was indexed with `build --scale`.
    #[arg(long)]
    pub scale: bool,
    /// Search Hilbert regions of each query concurrently.
    #[arg(long)]
    pub parallel: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Verification(_) => 3,
        }
    }
}

impl From<PersistError> for CliError {
    fn from(e: PersistError) -> Self {
        CliError::Data(e.to_string())
    }
}

fn io_error(path: &Path, e: io::Error) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

fn ingest_error(path: &Path, e: IngestError) -> CliError {
    match e {
        IngestError::Io { .. } => CliError::Data(e.to_string()),
        other => CliError::Data(format!("{}: {other}", path.display())),
    }
}

/// Runs one command, writing results to `out` and diagnostics to `err`.
pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Gen(a) => cmd_gen(&a, err),
        Command::Build(a) => cmd_build(&a, out),
        Command::Query(a) => cmd_query(&a, out, err),
        Command::Bench(a) => cmd_bench(&a, out),
    }
}

pub fn cmd_gen(args: &GenArgs, err: &mut dyn Write) -> Result<(), CliError> {
    let cfg = args.domain.config();
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let objects = match args.kind {
        DataKind::Uniform => ingest::gen_uniform(args.n, args.seed, &cfg),
        DataKind::Clustered => {
            let clusters = args.clusters.unwrap_or_else(|| {
                let _ = writeln!(err, "note: --clusters not given, using {DEFAULT_CLUSTERS}");
                DEFAULT_CLUSTERS
            });
            let sigma = args.sigma.unwrap_or_else(|| {
                let _ = writeln!(err, "note: --sigma not given, using {DEFAULT_SIGMA}");
                DEFAULT_SIGMA
            });
            if clusters == 0 {
                return Err(CliError::Usage("--clusters must be at least 1".into()));
            }
            if !(sigma > 0.0 && sigma.is_finite()) {
                return Err(CliError::Usage("--sigma must be positive".into()));
            }
            ingest::gen_clustered(args.n, clusters, sigma, args.seed, &cfg)
        }
    };
    let file = File::create(&args.out).map_err(|e| io_error(&args.out, e))?;
    ingest::write_csv(BufWriter::new(file), &objects).map_err(|e| io_error(&args.out, e))
}

/// Loads a CSV dataset as domain objects.
pub fn load_objects(path: &Path, scale: bool, cfg: &IndexConfig) -> Result<Vec<StObject>, CliError> {
    let records = ingest::load_csv(path).map_err(|e| ingest_error(path, e))?;
    let objects = if scale && !records.is_empty() { ingest::scale_to_domain(&records, cfg) } else { ingest::records_to_objects(&records) };
    objects.map_err(|e| ingest_error(path, e))
}

#[derive(Debug, Serialize)]
struct BuildSummary {
    objects: usize,
    leaves: usize,
    tagged_leaves: usize,
    levels: u32,
    psi: usize,
    build_ms: f64,
    file_bytes: u64,
    tags: bool,
}

pub fn cmd_build(args: &BuildArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = args.domain.config().with_limits(args.levels, args.psi);
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let objects = load_objects(&args.input, args.scale, &cfg)?;
    let start = Instant::now();
    let tree = HocTree::build(objects, cfg).map_err(|e| CliError::Data(format!("{}: {e}", args.input.display())))?;
    let build_ms = start.elapsed().as_secs_f64() * 1e3;
    let file_bytes = persist::save_with(&tree, &args.output, SaveOptions { with_tags: !args.no_tags })?;
    let summary = BuildSummary {
        objects: tree.object_count(),
        leaves: tree.leaf_count(),
        tagged_leaves: persist::tagged_leaf_count(&tree),
        levels: cfg.max_depth,
        psi: cfg.split_threshold,
        build_ms,
        file_bytes,
        tags: !args.no_tags,
    };
    write_json_line(out, &summary)
}

#[derive(Debug, Serialize)]
struct QueryOutput<'a> {
    ids: &'a [u64],
    stats: StatsSummary,
}

pub fn cmd_query(args: &QueryArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let q = RangeQuery::new(args.x_min, args.x_max, args.y_min, args.y_max, args.t_start, args.t_end)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let tree = persist::load(&args.index)?;
    let opts = SearchOptions { use_mbr: !args.no_mbr };
    let result = if args.parallel { par_range_search(&tree, &q, opts) } else { range_search_with(&tree, &q, opts) }
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let ids = result.sorted_ids();
    let stats = StatsSummary::from(result.stats);

    match args.format {
        OutputFormat::Ids => {
            for id in &ids {
                writeln!(out, "{id}").map_err(|e| CliError::Data(e.to_string()))?;
            }
            write_json_line(err, &stats)?;
        }
        OutputFormat::Json => write_json_line(out, &QueryOutput { ids: &ids, stats })?,
    }

    if args.verify {
        let objects = match &args.csv {
            Some(path) => load_objects(path, args.scale, tree.config())?,
            None => tree.objects().copied().collect(),
        };
        let mut expected: Vec<u64> = scan_range(&objects, &q).map_err(|e| CliError::Usage(e.to_string()))?.iter().map(|o| o.id).collect();
        expected.sort_unstable();
        if expected != ids {
            return Err(CliError::Verification(format!("index returned {} ids but the linear scan found {}", ids.len(), expected.len())));
        }
        let _ = writeln!(err, "verified: {} results match the linear scan", ids.len());
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct DatasetInfo {
    pub csv: String,
    pub index: String,
    pub objects: usize,
}

#[derive(Debug, Serialize)]
pub struct QueryParams {
    pub spatial_extent: f64,
    pub temporal_extent: f64,
    pub queries: usize,
    pub seed: u64,
    pub selectivity: f64,
}

#[derive(Debug, Serialize)]
pub struct IndexInfo {
    pub build_ms: f64,
    pub file_bytes: u64,
    pub file_bytes_with_tags: u64,
    pub file_bytes_without_tags: u64,
    pub leaves: usize,
    pub tagged_leaves: usize,
}

#[derive(Debug, Serialize)]
pub struct BenchReport {
    pub dataset: DatasetInfo,
    pub query: QueryParams,
    pub repetitions: usize,
    pub timing: &'static str,
    pub index: IndexInfo,
    pub methods: Vec<MethodReport>,
}

pub fn cmd_bench(args: &BenchArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if args.reps == 0 || args.queries == 0 {
        return Err(CliError::Usage("--reps and --queries must be at least 1".into()));
    }
    if !(args.spatial_extent >= 0.0 && args.temporal_extent >= 0.0) {
        return Err(CliError::Usage("extents must be non-negative".into()));
    }
    let tree = persist::load(&args.index)?;
    let cfg = *tree.config();
    let objects = load_objects(&args.csv, args.scale, &cfg)?;

    let start = Instant::now();
    let rebuilt = HocTree::build(objects.iter().copied(), cfg).map_err(|e| CliError::Data(format!("{}: {e}", args.csv.display())))?;
    let build_ms = start.elapsed().as_secs_f64() * 1e3;
    drop(rebuilt);

    let settings = BenchSettings {
        spatial_extent: args.spatial_extent,
        temporal_extent: args.temporal_extent,
        queries: args.queries,
        reps: args.reps,
        seed: args.seed,
        parallel: args.parallel,
    };
    let methods = run_bench(&tree, &objects, &args.methods, &settings).map_err(|e| CliError::Verification(e.to_string()))?;

    let file_bytes = std::fs::metadata(&args.index).map_err(|e| io_error(&args.index, e))?.len();
    let report = BenchReport {
        dataset: DatasetInfo { csv: args.csv.display().to_string(), index: args.index.display().to_string(), objects: objects.len() },
        query: QueryParams {
            spatial_extent: args.spatial_extent,
            temporal_extent: args.temporal_extent,
            queries: args.queries,
            seed: args.seed,
            selectivity: selectivity(args.spatial_extent, args.temporal_extent, &cfg),
        },
        repetitions: args.reps,
        timing: if args.parallel {
            "wall clock per query, Hilbert regions searched on the rayon pool; methods interleaved per query in alternating order"
        } else {
            "wall clock per query, single thread; methods interleaved per query in alternating order"
        },
        index: IndexInfo {
            build_ms,
            file_bytes,
            file_bytes_with_tags: persist::encode(&tree, SaveOptions { with_tags: true }).len() as u64,
            file_bytes_without_tags: persist::encode(&tree, SaveOptions { with_tags: false }).len() as u64,
            leaves: tree.leaf_count(),
            tagged_leaves: persist::tagged_leaf_count(&tree),
        },
        methods,
    };
    write_json_line(out, &report)
}

fn write_json_line<T: Serialize>(w: &mut dyn Write, value: &T) -> Result<(), CliError> {
    let line = serde_json::to_string(value).map_err(|e| CliError::Data(e.to_string()))?;
    writeln!(w, "{line}").map_err(|e| CliError::Data(e.to_string()))
}
