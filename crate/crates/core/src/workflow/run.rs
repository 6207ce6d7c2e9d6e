use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::clustering::{run_clustering, ClusteringResult, DistanceMatrix};
use crate::container::load_stack;
use crate::csv_import::import_csv;
use crate::preprocess::{apply_setup, PreparedChannels, PreprocSetup};
use crate::report::{export_scores, render_barchart_table, render_comparison_grid, ReportSpec};
use crate::scoring::{cluster_indices, score_setups, ClusterIndices, PipelineSetup, ScoreRecord};
use crate::similarity::{build_similarity_matrix, SimilarityFunctionId, SimilarityMatrix};
use crate::stack::MassChannelStack;

use super::cache::{cache_key, sha256_hex, MatrixCache, TOOL_VERSION};
use super::config::{ConfigError, WorkflowConfig};
use super::grid::enumerate_setups;

#[derive(Debug, Error)]
pub enum WorkflowError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot read input {path}: {message}")]
    Input { path: PathBuf, message: String },
    #[error("cannot write {path}: {message}")]
    Output { path: PathBuf, message: String },
    #[error("internal failure: {0}")]
    Internal(String),
}

impl WorkflowError {
    /// Process exit status for the command line.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 1,
            Self::Input { .. } => 2,
            Self::Output { .. } | Self::Internal(_) => 3,
        }
    }
}

/// Per-invocation overrides of the config file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub threads: Option<usize>,
    pub use_cache: Option<bool>,
    /// Makes every matrix of this function fail. Used to test that one
    /// failing function leaves the other setups untouched.
    pub fail_function: Option<SimilarityFunctionId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SetupStatus {
    Ok,
    Degenerate,
    Failed,
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifestEntry {
    pub setup: PipelineSetup,
    pub label: String,
    pub status: SetupStatus,
    pub error: Option<String>,
    pub cache_key: String,
    pub cache_hit: bool,
    pub similarity_ms: f64,
    pub clustering_ms: f64,
    pub labels: Option<Vec<usize>>,
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub dataset: String,
    pub input: PathBuf,
    pub input_digest: String,
    pub channels: usize,
    pub threads: usize,
    pub config: WorkflowConfig,
    pub entries: Vec<ManifestEntry>,
    pub outputs: Vec<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    /// One record per setup, in enumeration order.
    pub records: Vec<ScoreRecord>,
    pub clusterings: Vec<Option<ClusteringResult>>,
}

/// Loads a `.csv` table or a stack container, returning it with the digest
/// of the file bytes.
pub fn load_input(path: &Path) -> Result<(MassChannelStack, String), WorkflowError> {
    let input_error = |message: String| WorkflowError::Input {
        path: path.to_path_buf(),
        message,
    };
    let bytes = fs::read(path).map_err(|e| input_error(e.to_string()))?;
    let digest = sha256_hex(&bytes);
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let stack = if is_csv {
        import_csv(path).map_err(|e| input_error(e.to_string()))?
    } else {
        load_stack(path).map_err(|e| input_error(e.to_string()))?
    };
    Ok((stack, digest))
}

struct MatrixJob {
    key: String,
    hit: bool,
    millis: f64,
    matrix: Result<SimilarityMatrix, String>,
}

struct SetupRun {
    indices: ClusterIndices,
    result: Option<ClusteringResult>,
    error: Option<String>,
    millis: f64,
}

fn elapsed_ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn level0_points(prepared: &PreparedChannels) -> Vec<Vec<f64>> {
    prepared
        .stacks
        .iter()
        .map(|s| s.mask.positions().iter().map(|&p| s.levels[0][p]).collect())
        .collect()
}

fn write_file(path: &Path, contents: &str) -> Result<(), WorkflowError> {
    fs::write(path, contents).map_err(|e| WorkflowError::Output {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Runs every setup of the grid and writes scores, reports and manifest
/// into the output directory. Failing setups are recorded and ranked last.
pub fn run_workflow(config: &WorkflowConfig, options: &RunOptions) -> Result<RunOutcome, WorkflowError> {
    config.validate()?;
    let setups = enumerate_setups(config)?;
    let (stack, digest) = load_input(&config.input)?;
    let stack = stack.normalize_channels();
    let threads = options.threads.unwrap_or(config.threads);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| WorkflowError::Internal(e.to_string()))?;
    let use_cache = options.use_cache.unwrap_or(config.cache);
    let cache = use_cache.then(|| MatrixCache::new(config.output.join("cache")));
    fs::create_dir_all(&config.output).map_err(|e| WorkflowError::Output {
        path: config.output.clone(),
        message: e.to_string(),
    })?;
    info!(
        "running {} setups on {} channels with {} threads",
        setups.len(),
        stack.channels(),
        pool.current_num_threads()
    );

    let (jobs, runs, prepared) = pool.install(|| execute(config, options, &setups, &stack, &digest, cache.as_ref()));

    let mut records = Vec::with_capacity(setups.len());
    let mut by_method: BTreeMap<_, Vec<usize>> = BTreeMap::new();
    for (k, s) in setups.iter().enumerate() {
        by_method.entry(s.clustering).or_default().push(k);
    }
    let mut slots: Vec<Option<ScoreRecord>> = vec![None; setups.len()];
    for members in by_method.values() {
        let group: Vec<PipelineSetup> = members.iter().map(|&k| setups[k]).collect();
        let indices: Vec<ClusterIndices> = members.iter().map(|&k| runs[k].indices).collect();
        let scored = score_setups(&group, &indices).map_err(|e| WorkflowError::Internal(e.to_string()))?;
        for (&k, r) in members.iter().zip(scored) {
            slots[k] = Some(r);
        }
    }
    records.extend(slots.into_iter().map(|r| r.expect("every setup scored")));

    let entries = setups
        .iter()
        .zip(&runs)
        .map(|(s, run)| {
            let job = &jobs[&(s.preproc(), s.function)];
            let status = if run.error.is_some() {
                SetupStatus::Failed
            } else if run.indices.degenerate {
                SetupStatus::Degenerate
            } else {
                SetupStatus::Ok
            };
            let mut flags = run.result.as_ref().map(|r| r.flags.clone()).unwrap_or_default();
            if let Ok(m) = &job.matrix {
                flags.extend(m.flags.iter().map(|f| format!("pair ({}, {}): {}", f.i, f.j, f.reason)));
            }
            if let Some(Ok(p)) = prepared.get(&s.preproc()) {
                if !p.otsu_skipped.is_empty() {
                    flags.push(format!("otsu skipped on constant channels {:?}", p.otsu_skipped));
                }
            }
            ManifestEntry {
                setup: *s,
                label: s.label(),
                status,
                error: run.error.clone(),
                cache_key: job.key.clone(),
                cache_hit: job.hit,
                similarity_ms: job.millis,
                clustering_ms: run.millis,
                labels: run.result.as_ref().map(|r| r.labels.clone()),
                flags,
            }
        })
        .collect();

    let outputs = write_outputs(config, &records)?;
    let manifest = RunManifest {
        tool_version: TOOL_VERSION.to_string(),
        dataset: config.dataset_name(),
        input: config.input.clone(),
        input_digest: digest,
        channels: stack.channels(),
        threads: pool.current_num_threads(),
        config: config.clone(),
        entries,
        outputs,
    };
    let manifest_path = config.output.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| WorkflowError::Internal(e.to_string()))?;
    write_file(&manifest_path, &text)?;
    Ok(RunOutcome {
        manifest,
        clusterings: runs.into_iter().map(|r| r.result).collect(),
        records,
    })
}

type Prepared = BTreeMap<PreprocSetup, Result<PreparedChannels, String>>;
type Jobs = BTreeMap<(PreprocSetup, SimilarityFunctionId), MatrixJob>;

fn execute(
    config: &WorkflowConfig,
    options: &RunOptions,
    setups: &[PipelineSetup],
    stack: &MassChannelStack,
    digest: &str,
    cache: Option<&MatrixCache>,
) -> (Jobs, Vec<SetupRun>, Prepared) {
    let params = &config.params;
    let mut preprocs: Vec<PreprocSetup> = setups.iter().map(|s| s.preproc()).collect();
    preprocs.dedup();
    let prepared: Prepared = preprocs
        .par_iter()
        .map(|&p| (p, apply_setup(stack, p, &params.preproc()).map_err(|e| e.to_string())))
        .collect::<Vec<_>>()
        .into_iter()
        .collect();

    let mut job_ids: Vec<(PreprocSetup, SimilarityFunctionId)> = setups.iter().map(|s| (s.preproc(), s.function)).collect();
    job_ids.sort();
    job_ids.dedup();
    let jobs: Jobs = job_ids
        .par_iter()
        .map(|&(p, f)| {
            let started = Instant::now();
            let key = cache_key(digest, p, f, params, TOOL_VERSION);
            let cached = cache.and_then(|c| c.load(&key));
            let hit = cached.is_some();
            let matrix = match cached {
                Some(m) => Ok(m),
                None if options.fail_function == Some(f) => Err(format!("injected failure in {}", f.slug())),
                None => match &prepared[&p] {
                    Ok(ch) => build_similarity_matrix(&ch.stacks, f, &params.similarity()).map_err(|e| e.to_string()),
                    Err(e) => Err(e.clone()),
                },
            };
            if let (Some(c), Ok(m), false) = (cache, &matrix, hit) {
                if let Err(e) = c.store(&key, m) {
                    warn!("cache write failed for {key}: {e}");
                }
            }
            let matrix = matrix.map(|m| m.with_setup(p));
            ((p, f), MatrixJob {
                key,
                hit,
                millis: elapsed_ms(started),
                matrix,
            })
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect();

    let points: BTreeMap<PreprocSetup, Vec<Vec<f64>>> = prepared
        .iter()
        .filter_map(|(p, r)| r.as_ref().ok().map(|ch| (*p, level0_points(ch))))
        .collect();
    let clustering_params = params.clustering();
    let runs = setups
        .par_iter()
        .map(|s| {
            let started = Instant::now();
            let job = &jobs[&(s.preproc(), s.function)];
            let outcome = job.matrix.as_ref().map_err(Clone::clone).and_then(|m| {
                let result = run_clustering(s.clustering, m, &clustering_params).map_err(|e| e.to_string())?;
                let indices = cluster_indices(&DistanceMatrix::from_similarity(m), &points[&s.preproc()], &result.labels);
                Ok((result, indices))
            });
            match outcome {
                Ok((result, indices)) => SetupRun {
                    indices,
                    result: Some(result),
                    error: None,
                    millis: elapsed_ms(started),
                },
                Err(e) => {
                    warn!("setup {s} failed: {e}");
                    SetupRun {
                        indices: ClusterIndices::degenerate(),
                        result: None,
                        error: Some(e),
                        millis: elapsed_ms(started),
                    }
                }
            }
        })
        .collect();
    (jobs, runs, prepared)
}

fn write_outputs(config: &WorkflowConfig, records: &[ScoreRecord]) -> Result<Vec<PathBuf>, WorkflowError> {
    let out = &config.output;
    let dataset = config.dataset_name();
    let scores = out.join("scores.csv");
    export_scores(records, &scores).map_err(|e| WorkflowError::Output {
        path: scores.clone(),
        message: e.to_string(),
    })?;
    let mut written = vec![scores.clone(), scores.with_extension("json")];
    let mut methods: Vec<_> = records.iter().map(|r| r.setup.clustering).collect();
    methods.sort();
    methods.dedup();
    let specs: Vec<ReportSpec> = methods
        .iter()
        .map(|&m| ReportSpec {
            title: format!("{dataset}: {}", m.display_name()),
            dataset: dataset.clone(),
            clustering: Some(m),
            top_n: config.top_n,
            records: records.to_vec(),
        })
        .collect();
    for (m, spec) in methods.iter().zip(&specs) {
        let path = out.join(format!("report_{}.html", m.slug()));
        let html = render_barchart_table(spec).map_err(|e| WorkflowError::Internal(e.to_string()))?;
        write_file(&path, &html)?;
        written.push(path);
    }
    let grid = render_comparison_grid(&format!("{dataset}: top setups"), &specs)
        .map_err(|e| WorkflowError::Internal(e.to_string()))?;
    let path = out.join("comparison.html");
    write_file(&path, &grid)?;
    written.push(path);
    Ok(written)
}
