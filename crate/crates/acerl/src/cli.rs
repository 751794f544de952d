//! Command-line front end: dataset simulation, model fitting, downstream
//! task evaluation, the replicated experiment harness, and tuning profiles.
//!
//! All JSON documents carry a `schema_version` field; all randomness derives
//! from explicit seeds, so every command is reproducible byte-for-byte.
//! Exit codes: 0 success, 1 I/O or configuration problems, 2 numerical
//! failures.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write as IoWrite;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::core::{
    load_model, read_json, save_model, write_json, write_matrix_csv, EmbeddingMatrix,
    NetworkDataset, SubjectEmbedding, SCHEMA_VERSION,
};
use crate::downstream::{
    build_similarity, fit_classifier, select_edges, spectral_communities, subject_embeddings,
    CommunityAssignment, KmeansOptions,
};
use crate::error::{Error, Result};
use crate::estimator::{fit, AcerlConfig, DiagWeight, InitMethod};
use crate::metrics::{
    classification_accuracy, edge_norm_profile, explained_variance_profile, format_mean_se_percent,
    gram_error, misclustering_losses, procrustes_dist, rand_index, selection_recall,
    ExperimentRecord,
};
use crate::simgen::{
    gen_community, gen_sparse, split_train_test, CommunitySimSpec, SparseSimSpec,
};
use crate::linalg;
use crate::spca::{fit_spca, load_spca_model, save_spca_model, spca_embed_all, SpcaResult};

/// Estimation method selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodKind {
    Acerl,
    Spca,
}

impl fmt::Display for MethodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MethodKind::Acerl => write!(f, "acerl"),
            MethodKind::Spca => write!(f, "spca"),
        }
    }
}

/// Downstream task selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    /// Train a classifier on train-split embeddings, report test accuracy.
    Classify,
    /// Rank edges by row norm, report recall of the true support.
    Select,
    /// Spectral community detection on the induced node similarity.
    Community,
    /// Rotation-invariant estimation error against the true embedding.
    Error,
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TaskKind::Classify => write!(f, "classify"),
            TaskKind::Select => write!(f, "select"),
            TaskKind::Community => write!(f, "community"),
            TaskKind::Error => write!(f, "error"),
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "acerl",
    version,
    about = "Adaptive contrastive edge representation learning for network data"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic dataset from a JSON spec.
    Simulate(SimulateArgs),
    /// Fit a model to a dataset CSV and persist it.
    Fit(FitArgs),
    /// Evaluate downstream tasks for a fitted model.
    Tasks(TasksArgs),
    /// Run a replicated experiment plan and aggregate results.
    Experiment(ExperimentArgs),
    /// Emit tuning profiles (explained variance, edge norms).
    Tune(TuneArgs),
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// JSON simulation spec (fields: schema_version, kind, design params).
    pub spec: PathBuf,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// Dataset CSV (subjects as rows).
    pub data: PathBuf,
    /// Output directory of the model container.
    #[arg(long)]
    pub out: PathBuf,
    /// Latent dimension.
    #[arg(long)]
    pub r: Option<usize>,
    /// Working row sparsity.
    #[arg(long)]
    pub s: Option<usize>,
    /// Step-size scale.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Inner iterations per outer iteration.
    #[arg(long)]
    pub inner: Option<usize>,
    /// Outer iterations.
    #[arg(long)]
    pub outer: Option<usize>,
    /// Mask-stream seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Initializer: fantope or gram_pca.
    #[arg(long)]
    pub init: Option<InitMethod>,
    /// Estimation method.
    #[arg(long, value_enum)]
    pub method: Option<MethodKind>,
    /// Diagonal weighting of the loss surrogate: enumerated or squared.
    #[arg(long)]
    pub diag_weight: Option<DiagWeight>,
    /// JSON config file; its fields override the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TasksArgs {
    /// Model directory (as written by `fit`).
    pub model: PathBuf,
    /// Dataset CSV the tasks run on.
    pub data: PathBuf,
    /// Comma-separated tasks: classify,select,community,error.
    #[arg(long, value_enum, value_delimiter = ',', required = true)]
    pub tasks: Vec<TaskKind>,
    /// Ground-truth sidecar JSON (labels, support, communities, true matrix).
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Community count for the community task (defaults to the sidecar's).
    #[arg(long)]
    pub g: Option<usize>,
    /// Number of edges the selection task keeps (defaults to the model's
    /// sparsity).
    #[arg(long)]
    pub top: Option<usize>,
    /// Train fraction of the internal split used by the classify task.
    #[arg(long, default_value_t = 0.6)]
    pub train_frac: f64,
    /// Seed of the internal train/test split.
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
    /// Seed of the k-means stage of the community task.
    #[arg(long, default_value_t = 0)]
    pub kmeans_seed: u64,
    /// Optional path for the metrics JSON (always printed to stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ExperimentArgs {
    /// JSON experiment plan.
    pub plan: PathBuf,
    /// Output directory; a plan-file `out_dir` takes precedence.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Recompute every cell even when a checkpoint exists.
    #[arg(long, default_value_t = false)]
    pub no_resume: bool,
}

#[derive(Args, Debug)]
pub struct TuneArgs {
    /// Dataset CSV.
    pub data: PathBuf,
    /// Number of leading variance fractions to emit.
    #[arg(long)]
    pub r_max: usize,
    /// Optional fitted model directory for the edge-norm profile.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

/// Map an error to the process exit code: configuration and I/O problems are
/// 1, numerical failures 2.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io { .. }
        | Error::Json { .. }
        | Error::Csv { .. }
        | Error::SchemaVersion { .. }
        | Error::InvalidConfig(_)
        | Error::DimensionMismatch { .. } => 1,
        _ => 2,
    }
}

/// Execute a parsed command line.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Fit(args) => cmd_fit(&args),
        Command::Tasks(args) => cmd_tasks(&args),
        Command::Experiment(args) => cmd_experiment(&args),
        Command::Tune(args) => cmd_tune(&args),
    }
}

// ---------------------------------------------------------------------------
// JSON document schemas
// ---------------------------------------------------------------------------

/// Simulation spec file: `{"schema_version": 1, "kind": "sparse", ...}`.
#[derive(Serialize, Deserialize)]
pub struct SimSpecDoc {
    pub schema_version: u32,
    #[serde(flatten)]
    pub spec: SimSpec,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SimSpec {
    Sparse(SparseSimSpec),
    Community(CommunitySimSpec),
}

/// Ground-truth sidecar written next to simulated datasets.
#[derive(Serialize, Deserialize, Default)]
pub struct TruthSidecar {
    pub schema_version: u32,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<u8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub communities: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<f64>>,
    /// True-embedding CSV, relative to the sidecar's directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_star_csv: Option<String>,
}

/// Optional fit config file; present fields override the command-line flags.
#[derive(Serialize, Deserialize, Default)]
pub struct FitConfigDoc {
    pub schema_version: u32,
    #[serde(default)]
    pub r: Option<usize>,
    #[serde(default)]
    pub s: Option<usize>,
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub inner: Option<usize>,
    #[serde(default)]
    pub outer: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub init: Option<InitMethod>,
    #[serde(default)]
    pub method: Option<MethodKind>,
    #[serde(default)]
    pub diag_weight: Option<DiagWeight>,
}

fn default_reps() -> usize {
    50
}

fn default_plan_s_star() -> usize {
    50
}

fn default_g() -> usize {
    3
}

fn default_train_frac() -> f64 {
    0.6
}

/// Replicated experiment plan: the full design grid is the cross product of
/// the `n`, `v`, `r`, and `sigma_xi` lists.
#[derive(Serialize, Deserialize, Clone)]
pub struct ExperimentPlan {
    pub schema_version: u32,
    pub n: Vec<usize>,
    pub v: Vec<usize>,
    pub r: Vec<usize>,
    pub sigma_xi: Vec<f64>,
    pub methods: Vec<MethodKind>,
    pub tasks: Vec<TaskKind>,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    /// Planted support size of the sparse design.
    #[serde(default = "default_plan_s_star")]
    pub s_star: usize,
    /// Working sparsity of the fits (default `3 * s_star`, capped at `d`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<usize>,
    /// Community count of the community design.
    #[serde(default = "default_g")]
    pub g: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outer: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<InitMethod>,
    #[serde(default = "default_train_frac")]
    pub train_frac: f64,
}

impl ExperimentPlan {
    fn validate(&self) -> Result<()> {
        if self.n.is_empty() || self.v.is_empty() || self.r.is_empty() || self.sigma_xi.is_empty() {
            return Err(Error::InvalidConfig("experiment plan grid must be non-empty".into()));
        }
        if self.methods.is_empty() || self.tasks.is_empty() {
            return Err(Error::InvalidConfig("experiment plan needs at least one method and one task".into()));
        }
        if self.reps < 1 {
            return Err(Error::InvalidConfig("experiment plan needs reps >= 1".into()));
        }
        Ok(())
    }
}

/// Per-cell checkpoint written by the experiment harness.
#[derive(Serialize, Deserialize)]
struct CellCheckpoint {
    schema_version: u32,
    records: Vec<ExperimentRecord>,
}

// ---------------------------------------------------------------------------
// Seed derivation
// ---------------------------------------------------------------------------

/// 64-bit FNV-1a hash of a canonical cell string.
fn fnv1a64(s: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in s.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Stable per-cell seed: `base + hash(cell string)`, so editing the grid
/// never shifts other cells' random streams. The cell string excludes the
/// method, so methods compared in one cell see identical data.
fn derive_seed(base: u64, key: &str) -> u64 {
    base.wrapping_add(fnv1a64(key))
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let doc: SimSpecDoc = read_json(&args.spec)?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(Error::SchemaVersion {
            path: args.spec.display().to_string(),
            found: doc.schema_version,
            expected: SCHEMA_VERSION,
        });
    }
    fs::create_dir_all(&args.out).map_err(|e| Error::io(args.out.display().to_string(), e))?;
    let data_path = args.out.join("dataset.csv");
    let truth_path = args.out.join("truth.json");
    let q_path = args.out.join("q_star.csv");
    match &doc.spec {
        SimSpec::Sparse(spec) => {
            let (data, truth) = gen_sparse(spec)?;
            data.write_csv(&data_path)?;
            write_matrix_csv(&q_path, &truth.q_star)?;
            let sidecar = TruthSidecar {
                schema_version: SCHEMA_VERSION,
                kind: "sparse".into(),
                support: Some(truth.support),
                labels: Some(truth.labels),
                q_star_csv: Some("q_star.csv".into()),
                ..TruthSidecar::default()
            };
            write_json(&truth_path, &sidecar)?;
        }
        SimSpec::Community(spec) => {
            let (data, truth) = gen_community(spec)?;
            data.write_csv(&data_path)?;
            write_matrix_csv(&q_path, &truth.q_eff)?;
            let sidecar = TruthSidecar {
                schema_version: SCHEMA_VERSION,
                kind: "community".into(),
                communities: Some(truth.assignment.labels()),
                levels: Some(truth.levels.to_vec()),
                q_star_csv: Some("q_star.csv".into()),
                ..TruthSidecar::default()
            };
            write_json(&truth_path, &sidecar)?;
        }
    }
    println!("wrote {}", data_path.display());
    println!("wrote {}", q_path.display());
    println!("wrote {}", truth_path.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

fn cmd_fit(args: &FitArgs) -> Result<()> {
    let data = NetworkDataset::read_csv(&args.data)?;
    let d = data.num_edges();
    let n = data.num_subjects();
    let overrides = match &args.config {
        Some(path) => {
            let doc: FitConfigDoc = read_json(path)?;
            if doc.schema_version != SCHEMA_VERSION {
                return Err(Error::SchemaVersion {
                    path: path.display().to_string(),
                    found: doc.schema_version,
                    expected: SCHEMA_VERSION,
                });
            }
            doc
        }
        None => FitConfigDoc::default(),
    };
    let r = overrides
        .r
        .or(args.r)
        .ok_or_else(|| Error::InvalidConfig("missing latent dimension: pass --r or a config file".into()))?;
    let s = overrides
        .s
        .or(args.s)
        .ok_or_else(|| Error::InvalidConfig("missing sparsity: pass --s or a config file".into()))?;
    let method = overrides.method.or(args.method).unwrap_or(MethodKind::Acerl);
    match method {
        MethodKind::Acerl => {
            let mut config = AcerlConfig::new(r, s, d, n);
            if let Some(eta) = overrides.eta.or(args.eta) {
                config.eta = eta;
            }
            if let Some(t) = overrides.inner.or(args.inner) {
                config.inner_iters = t;
            }
            if let Some(k) = overrides.outer.or(args.outer) {
                config.outer_iters = k;
            }
            if let Some(seed) = overrides.seed.or(args.seed) {
                config.seed = seed;
            }
            if let Some(init) = overrides.init.or(args.init) {
                config.init = init;
            }
            if let Some(w) = overrides.diag_weight.or(args.diag_weight) {
                config.diag_weight = w;
            }
            let result = fit(&data, &config, None)?;
            save_model(&result, &args.out)?;
            println!("fit: d={d} n={n} r={r} s={s} eta={} init={}", config.eta, config.init);
            for rec in &result.trace {
                println!(
                    "k={} mean_p={:.4} surrogate={:.6} support={}",
                    rec.k, rec.mean_p, rec.surrogate_loss, rec.support_size
                );
            }
            println!("wrote model to {}", args.out.display());
        }
        MethodKind::Spca => {
            let result = fit_spca(&data, r, s)?;
            save_spca_model(&result, &args.out)?;
            println!(
                "spca: d={d} n={n} r={r} s={s} iterations={} converged={}",
                result.iterations, result.converged
            );
            println!("support size {}", result.support.len());
            println!("wrote model to {}", args.out.display());
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Shared model wrapper
// ---------------------------------------------------------------------------

/// A fitted model of either method, reduced to what the tasks need: an
/// effective edge-loading matrix plus a method-specific embedding rule.
struct FittedModel {
    estimate: EmbeddingMatrix,
    spca: Option<SpcaResult>,
    sparsity: usize,
}

impl FittedModel {
    fn from_acerl(result: crate::core::FitResult) -> FittedModel {
        let sparsity = result.config.s;
        FittedModel { estimate: result.q_hat, spca: None, sparsity }
    }

    fn from_spca(result: SpcaResult) -> Result<FittedModel> {
        let estimate = spca_effective_loadings(&result)?;
        let sparsity = result.support.len().max(1);
        Ok(FittedModel { estimate, spca: Some(result), sparsity })
    }

    fn embed(&self, data: &NetworkDataset) -> Result<SubjectEmbedding> {
        match &self.spca {
            Some(res) => spca_embed_all(res, data),
            None => subject_embeddings(&self.estimate, data),
        }
    }
}

/// Scale sparse-PCA loadings by the square roots of their variances (clamped
/// at zero), making row norms comparable to the main method's estimate.
fn spca_effective_loadings(res: &SpcaResult) -> Result<EmbeddingMatrix> {
    let mut m = res.u_x.clone();
    for (j, mut col) in m.columns_mut().into_iter().enumerate() {
        let scale = res.lambda_r[j].max(0.0).sqrt();
        col.mapv_inplace(|x| x * scale);
    }
    EmbeddingMatrix::new(m)
}

fn load_any_model(dir: &Path) -> Result<FittedModel> {
    let meta_path = dir.join("model.json");
    let meta: serde_json::Value = read_json(&meta_path)?;
    match meta.get("kind").and_then(|k| k.as_str()) {
        Some("acerl") => Ok(FittedModel::from_acerl(load_model(dir)?)),
        Some("spca") => FittedModel::from_spca(load_spca_model(dir)?),
        other => Err(Error::Json {
            path: meta_path.display().to_string(),
            message: format!("unknown model kind {other:?}"),
        }),
    }
}

/// Node count `v` with `v(v-1)/2 = d`.
fn nodes_from_edges(d: usize) -> Result<usize> {
    let v = (1.0 + (1.0 + 8.0 * d as f64).sqrt()) / 2.0;
    let v = v.round() as usize;
    if v < 2 || v * (v - 1) / 2 != d {
        return Err(Error::InvalidConfig(format!("edge count {d} is not v(v-1)/2 for any integer v")));
    }
    Ok(v)
}

// ---------------------------------------------------------------------------
// tasks
// ---------------------------------------------------------------------------

fn cmd_tasks(args: &TasksArgs) -> Result<()> {
    let model = load_any_model(&args.model)?;
    let data = NetworkDataset::read_csv(&args.data)?;
    let (d, _) = model.estimate.dims();
    if data.num_edges() != d {
        return Err(Error::dim("tasks", format!("{d} edges (model)"), format!("{} edges (data)", data.num_edges())));
    }
    let truth: Option<TruthSidecar> = match &args.truth {
        Some(path) => {
            let sidecar: TruthSidecar = read_json(path)?;
            if sidecar.schema_version != SCHEMA_VERSION {
                return Err(Error::SchemaVersion {
                    path: path.display().to_string(),
                    found: sidecar.schema_version,
                    expected: SCHEMA_VERSION,
                });
            }
            Some(sidecar)
        }
        None => None,
    };
    let mut out = serde_json::Map::new();
    for task in &args.tasks {
        let value = match task {
            TaskKind::Classify => task_classify(&model, &data, truth.as_ref(), args)?,
            TaskKind::Select => task_select(&model, truth.as_ref(), args)?,
            TaskKind::Community => task_community(&model, truth.as_ref(), args)?,
            TaskKind::Error => task_error(&model, truth.as_ref(), args)?,
        };
        out.insert(task.to_string(), value);
    }
    let doc = serde_json::json!({ "schema_version": SCHEMA_VERSION, "metrics": out });
    let text = serde_json::to_string_pretty(&doc).expect("metrics serialize");
    println!("{text}");
    if let Some(path) = &args.out {
        fs::write(path, format!("{text}\n")).map_err(|e| Error::io(path.display().to_string(), e))?;
    }
    Ok(())
}

fn predictions(model: &FittedModel, clf: &crate::downstream::LinearClassifier, data: &NetworkDataset) -> Result<Vec<u8>> {
    let z = model.embed(data)?;
    Ok((0..data.num_subjects())
        .map(|i| u8::from(clf.w.dot(&z.matrix().column(i)) + clf.intercept >= 0.0))
        .collect())
}

fn task_classify(
    model: &FittedModel,
    data: &NetworkDataset,
    truth: Option<&TruthSidecar>,
    args: &TasksArgs,
) -> Result<serde_json::Value> {
    let labels = truth
        .and_then(|t| t.labels.clone())
        .ok_or_else(|| Error::InvalidConfig("classify needs a --truth sidecar with labels".into()))?;
    let labeled = data.clone().with_labels(labels)?;
    let (train, test) = split_train_test(&labeled, args.train_frac, args.split_seed)?;
    let z_train = model.embed(&train)?;
    let clf = fit_classifier(&z_train, train.labels().expect("labels survive the split"))?;
    let preds = predictions(model, &clf, &test)?;
    let accuracy = classification_accuracy(&preds, test.labels().expect("labels survive the split"))?;
    Ok(serde_json::json!({
        "accuracy": accuracy,
        "train_subjects": train.num_subjects(),
        "test_subjects": test.num_subjects(),
    }))
}

fn task_select(model: &FittedModel, truth: Option<&TruthSidecar>, args: &TasksArgs) -> Result<serde_json::Value> {
    let top = args.top.unwrap_or(model.sparsity);
    let selected = select_edges(&model.estimate, top)?;
    let mut value = serde_json::json!({ "top": top, "selected": &selected });
    if let Some(support) = truth.and_then(|t| t.support.as_ref()) {
        let recall = selection_recall(&selected, support)?;
        value["recall"] = serde_json::json!(recall);
    }
    Ok(value)
}

fn task_community(model: &FittedModel, truth: Option<&TruthSidecar>, args: &TasksArgs) -> Result<serde_json::Value> {
    let (d, _) = model.estimate.dims();
    let v = nodes_from_edges(d)?;
    let map = crate::core::EdgeIndexMap::new(v)?;
    let truth_labels = truth.and_then(|t| t.communities.clone());
    let g = args
        .g
        .or_else(|| truth_labels.as_ref().map(|l| l.iter().max().map_or(1, |m| m + 1)))
        .ok_or_else(|| Error::InvalidConfig("community needs --g or a --truth sidecar with communities".into()))?;
    let similarity = build_similarity(&model.estimate, &map)?;
    let opts = KmeansOptions { seed: args.kmeans_seed, ..KmeansOptions::default() };
    let assignment = spectral_communities(&similarity.view(), g, &opts)?;
    let labels = assignment.labels();
    let mut value = serde_json::json!({ "g": g, "labels": &labels });
    if let Some(truth_labels) = truth_labels {
        let truth_assignment = CommunityAssignment::from_labels(&truth_labels, g)?;
        value["rand_index"] = serde_json::json!(rand_index(&labels, &truth_labels)?);
        let (l, lt) = misclustering_losses(&assignment, &truth_assignment)?;
        value["miscluster_overall"] = serde_json::json!(l);
        value["miscluster_worst"] = serde_json::json!(lt);
    }
    Ok(value)
}

fn task_error(model: &FittedModel, truth: Option<&TruthSidecar>, args: &TasksArgs) -> Result<serde_json::Value> {
    let truth = truth.ok_or_else(|| Error::InvalidConfig("error metrics need a --truth sidecar".into()))?;
    let rel_csv = truth
        .q_star_csv
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("truth sidecar has no true-embedding path".into()))?;
    let base = args
        .truth
        .as_ref()
        .and_then(|p| p.parent().map(Path::to_path_buf))
        .unwrap_or_else(|| PathBuf::from("."));
    let q_star = crate::core::read_matrix_csv(&base.join(rel_csv))?;
    let est = model.estimate.matrix();
    let dist = procrustes_dist(&est.view(), &q_star.view())?;
    let scale = linalg::fro(&q_star.view());
    let rel = if scale > 0.0 { dist / scale } else { dist };
    let gerr = gram_error(&est.view(), &q_star.view())?;
    Ok(serde_json::json!({
        "procrustes_dist": dist,
        "procrustes_rel": rel,
        "gram_error": gerr,
    }))
}

// ---------------------------------------------------------------------------
// experiment
// ---------------------------------------------------------------------------

/// Metric names each task contributes to the results table.
fn task_metrics(task: TaskKind) -> &'static [&'static str] {
    match task {
        TaskKind::Classify => &["accuracy"],
        TaskKind::Select => &["recall"],
        TaskKind::Community => &["rand_index", "miscluster_overall", "miscluster_worst"],
        TaskKind::Error => &["procrustes_dist", "procrustes_rel", "gram_error"],
    }
}

/// Percent-formatted metrics in the human tables; the rest print raw.
fn is_percent_metric(metric: &str) -> bool {
    matches!(metric, "accuracy" | "recall" | "rand_index" | "miscluster_overall" | "miscluster_worst")
}

/// One evaluated value (or failure) from one replication.
struct RepEntry {
    method: MethodKind,
    task: TaskKind,
    metric: &'static str,
    outcome: std::result::Result<f64, String>,
}

fn cmd_experiment(args: &ExperimentArgs) -> Result<()> {
    let plan: ExperimentPlan = read_json(&args.plan)?;
    if plan.schema_version != SCHEMA_VERSION {
        return Err(Error::SchemaVersion {
            path: args.plan.display().to_string(),
            found: plan.schema_version,
            expected: SCHEMA_VERSION,
        });
    }
    plan.validate()?;
    let out_dir = plan
        .out_dir
        .clone()
        .or_else(|| args.out.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    let ckpt_dir = out_dir.join("checkpoints");
    fs::create_dir_all(&ckpt_dir).map_err(|e| Error::io(ckpt_dir.display().to_string(), e))?;
    let resume = !args.no_resume;
    let sparse_tasks: Vec<TaskKind> = plan
        .tasks
        .iter()
        .copied()
        .filter(|t| !matches!(t, TaskKind::Community))
        .collect();
    let community = plan.tasks.contains(&TaskKind::Community);
    let mut records: Vec<ExperimentRecord> = Vec::new();
    for &n in &plan.n {
        for &v in &plan.v {
            for &r in &plan.r {
                for &sigma in &plan.sigma_xi {
                    if !sparse_tasks.is_empty() {
                        records.extend(run_cell(&plan, n, v, r, sigma, false, &sparse_tasks, &ckpt_dir, resume)?);
                    }
                    if community {
                        records.extend(run_cell(&plan, n, v, r, sigma, true, &[TaskKind::Community], &ckpt_dir, resume)?);
                    }
                }
            }
        }
    }
    records.sort_by(|a, b| {
        (a.task.clone(), a.metric.clone(), a.n, a.v, a.r)
            .partial_cmp(&(b.task.clone(), b.metric.clone(), b.n, b.v, b.r))
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.sigma_xi.partial_cmp(&b.sigma_xi).unwrap_or(std::cmp::Ordering::Equal))
            .then(a.method.cmp(&b.method))
    });
    let results_path = out_dir.join("results.csv");
    write_results_csv(&results_path, &records)?;
    let tables = render_tables(&plan, &records);
    let tables_path = out_dir.join("tables.txt");
    fs::write(&tables_path, &tables).map_err(|e| Error::io(tables_path.display().to_string(), e))?;
    print!("{tables}");
    println!("wrote {}", results_path.display());
    println!("wrote {}", tables_path.display());
    Ok(())
}

/// Run (or restore) all replications of one design cell.
#[allow(clippy::too_many_arguments)]
fn run_cell(
    plan: &ExperimentPlan,
    n: usize,
    v: usize,
    r: usize,
    sigma: f64,
    community: bool,
    tasks: &[TaskKind],
    ckpt_dir: &Path,
    resume: bool,
) -> Result<Vec<ExperimentRecord>> {
    let design = if community { "community" } else { "sparse" };
    let cell_name = format!("{design}_n{n}_v{v}_r{r}_sig{}", fmt_sigma(sigma));
    let ckpt_path = ckpt_dir.join(format!("{cell_name}.json"));
    if resume && ckpt_path.exists() {
        let ckpt: CellCheckpoint = read_json(&ckpt_path)?;
        if ckpt.schema_version == SCHEMA_VERSION {
            return Ok(ckpt.records);
        }
    }
    let per_rep: Vec<Vec<RepEntry>> = (0..plan.reps)
        .into_par_iter()
        .map(|rep| {
            if community {
                run_community_rep(plan, n, v, r, sigma, rep)
            } else {
                run_sparse_rep(plan, n, v, r, sigma, tasks, rep)
            }
        })
        .collect();
    // Aggregate in (method, task, metric) plan order.
    let mut grouped: BTreeMap<(usize, usize, &'static str), (Vec<f64>, usize)> = BTreeMap::new();
    for (mi, _) in plan.methods.iter().enumerate() {
        for (ti, task) in tasks.iter().enumerate() {
            for metric in task_metrics(*task) {
                grouped.insert((mi, ti, metric), (Vec::new(), 0));
            }
        }
    }
    for entries in &per_rep {
        for entry in entries {
            let mi = plan.methods.iter().position(|m| *m == entry.method).expect("method in plan");
            let ti = tasks.iter().position(|t| *t == entry.task).expect("task in cell");
            let slot = grouped.get_mut(&(mi, ti, entry.metric)).expect("slot prepared");
            match &entry.outcome {
                Ok(value) => slot.0.push(*value),
                Err(_) => slot.1 += 1,
            }
        }
    }
    let d = v * (v - 1) / 2;
    let mut records = Vec::new();
    for ((mi, ti, metric), (values, failures)) in grouped {
        let status = if failures == 0 {
            "ok".to_string()
        } else {
            format!("{failures}/{} reps failed", plan.reps)
        };
        records.push(ExperimentRecord::from_values(
            n,
            v,
            d,
            r,
            sigma,
            plan.methods[mi].to_string(),
            tasks[ti].to_string(),
            metric.to_string(),
            values,
            status,
        ));
    }
    let ckpt = CellCheckpoint { schema_version: SCHEMA_VERSION, records: records.clone() };
    write_json(&ckpt_path, &ckpt)?;
    Ok(records)
}

fn fmt_sigma(sigma: f64) -> String {
    format!("{sigma}").replace('.', "p").replace('-', "m")
}

/// All per-method entries of one sparse-design replication.
fn run_sparse_rep(
    plan: &ExperimentPlan,
    n: usize,
    v: usize,
    r: usize,
    sigma: f64,
    tasks: &[TaskKind],
    rep: usize,
) -> Vec<RepEntry> {
    let key = |stage: &str| format!("design=sparse;n={n};v={v};r={r};sigma_xi={sigma};rep={rep};stage={stage}");
    let data_seed = derive_seed(plan.base_seed, &key("data"));
    let split_seed = derive_seed(plan.base_seed, &key("split"));
    let d = v * (v - 1) / 2;
    let s_fit = plan.s.unwrap_or(3 * plan.s_star).min(d);
    let spec = SparseSimSpec { n, v, r, s_star: plan.s_star, sigma_xi: sigma, seed: data_seed };
    let prepared = gen_sparse(&spec)
        .and_then(|(data, truth)| split_train_test(&data, plan.train_frac, split_seed).map(|tt| (tt, truth)));
    let ((train, test), truth) = match prepared {
        Ok(p) => p,
        Err(e) => return all_failed(plan, tasks, &e.to_string()),
    };
    let mut entries = Vec::new();
    for &method in &plan.methods {
        let fitted = fit_method(method, &train, r, s_fit, plan, data_seed);
        let fitted = match fitted {
            Ok(f) => f,
            Err(e) => {
                push_method_failures(&mut entries, method, tasks, &e.to_string());
                continue;
            }
        };
        for &task in tasks {
            match task {
                TaskKind::Classify => {
                    let outcome = eval_classify(&fitted, &train, &test);
                    push_outcomes(&mut entries, method, task, &[("accuracy", outcome)]);
                }
                TaskKind::Select => {
                    let outcome = select_edges(&fitted.estimate, s_fit)
                        .and_then(|sel| selection_recall(&sel, &truth.support));
                    push_outcomes(&mut entries, method, task, &[("recall", outcome)]);
                }
                TaskKind::Error => {
                    let est = fitted.estimate.matrix();
                    let dist = procrustes_dist(&est.view(), &truth.q_star.view());
                    let scale = linalg::fro(&truth.q_star.view());
                    let rel = dist
                        .as_ref()
                        .map(|&x| if scale > 0.0 { x / scale } else { x })
                        .map_err(|e| e.to_string());
                    let gerr = gram_error(&est.view(), &truth.q_star.view());
                    push_outcomes(
                        &mut entries,
                        method,
                        task,
                        &[
                            ("procrustes_dist", dist),
                            ("procrustes_rel", rel.map_err(Error::InvalidConfig)),
                            ("gram_error", gerr),
                        ],
                    );
                }
                TaskKind::Community => unreachable!("community runs in its own cell"),
            }
        }
    }
    entries
}

/// All per-method entries of one community-design replication.
fn run_community_rep(plan: &ExperimentPlan, n: usize, v: usize, r: usize, sigma: f64, rep: usize) -> Vec<RepEntry> {
    let key =
        |stage: &str| format!("design=community;n={n};v={v};r={r};g={};sigma_xi={sigma};rep={rep};stage={stage}", plan.g);
    let data_seed = derive_seed(plan.base_seed, &key("data"));
    let split_seed = derive_seed(plan.base_seed, &key("split"));
    let kmeans_seed = derive_seed(plan.base_seed, &key("kmeans"));
    let d = v * (v - 1) / 2;
    let tasks = [TaskKind::Community];
    let spec = CommunitySimSpec::new(n, v, r, plan.g, sigma, data_seed);
    let prepared = gen_community(&spec)
        .and_then(|(data, truth)| split_train_test(&data, plan.train_frac, split_seed).map(|tt| (tt, truth)));
    let ((train, _test), truth) = match prepared {
        Ok(p) => p,
        Err(e) => return all_failed(plan, &tasks, &e.to_string()),
    };
    let mut entries = Vec::new();
    for &method in &plan.methods {
        // The community design has no planted sparsity; fit with s = d.
        let outcome = fit_method(method, &train, r, d, plan, data_seed).and_then(|fitted| {
            let map = crate::core::EdgeIndexMap::new(v)?;
            let similarity = build_similarity(&fitted.estimate, &map)?;
            let opts = KmeansOptions { seed: kmeans_seed, ..KmeansOptions::default() };
            let assignment = spectral_communities(&similarity.view(), plan.g, &opts)?;
            let rand = rand_index(&assignment.labels(), &truth.assignment.labels())?;
            let (l, lt) = misclustering_losses(&assignment, &truth.assignment)?;
            Ok((rand, l, lt))
        });
        match outcome {
            Ok((rand, l, lt)) => push_outcomes(
                &mut entries,
                method,
                TaskKind::Community,
                &[
                    ("rand_index", Ok(rand)),
                    ("miscluster_overall", Ok(l)),
                    ("miscluster_worst", Ok(lt)),
                ],
            ),
            Err(e) => push_method_failures(&mut entries, method, &tasks, &e.to_string()),
        }
    }
    entries
}

fn all_failed(plan: &ExperimentPlan, tasks: &[TaskKind], message: &str) -> Vec<RepEntry> {
    let mut entries = Vec::new();
    for &method in &plan.methods {
        push_method_failures(&mut entries, method, tasks, message);
    }
    entries
}

fn push_method_failures(entries: &mut Vec<RepEntry>, method: MethodKind, tasks: &[TaskKind], message: &str) {
    for &task in tasks {
        for metric in task_metrics(task) {
            entries.push(RepEntry { method, task, metric, outcome: Err(message.to_string()) });
        }
    }
}

fn push_outcomes(entries: &mut Vec<RepEntry>, method: MethodKind, task: TaskKind, outcomes: &[(&'static str, Result<f64>)]) {
    for (metric, outcome) in outcomes {
        entries.push(RepEntry {
            method,
            task,
            metric,
            outcome: outcome.as_ref().map(|v| *v).map_err(|e| e.to_string()),
        });
    }
}

/// Fit one method on the training split.
fn fit_method(
    method: MethodKind,
    train: &NetworkDataset,
    r: usize,
    s: usize,
    plan: &ExperimentPlan,
    seed: u64,
) -> Result<FittedModel> {
    match method {
        MethodKind::Acerl => {
            let mut config = AcerlConfig::new(r, s, train.num_edges(), train.num_subjects());
            config.seed = seed;
            if let Some(eta) = plan.eta {
                config.eta = eta;
            }
            if let Some(t) = plan.inner {
                config.inner_iters = t;
            }
            if let Some(k) = plan.outer {
                config.outer_iters = k;
            }
            if let Some(init) = plan.init {
                config.init = init;
            }
            Ok(FittedModel::from_acerl(fit(train, &config, None)?))
        }
        MethodKind::Spca => FittedModel::from_spca(fit_spca(train, r, s)?),
    }
}

fn eval_classify(fitted: &FittedModel, train: &NetworkDataset, test: &NetworkDataset) -> Result<f64> {
    let z_train = fitted.embed(train)?;
    let y_train = train
        .labels()
        .ok_or_else(|| Error::InvalidConfig("training data carries no labels".into()))?;
    let clf = fit_classifier(&z_train, y_train)?;
    let z_test = fitted.embed(test)?;
    let preds: Vec<u8> = (0..test.num_subjects())
        .map(|i| u8::from(clf.w.dot(&z_test.matrix().column(i)) + clf.intercept >= 0.0))
        .collect();
    let y_test = test
        .labels()
        .ok_or_else(|| Error::InvalidConfig("test data carries no labels".into()))?;
    classification_accuracy(&preds, y_test)
}

fn write_results_csv(path: &Path, records: &[ExperimentRecord]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| Error::Csv { path: path.display().to_string(), message: e.to_string() })?;
    let io_err = |e: csv::Error| Error::Csv { path: path.display().to_string(), message: e.to_string() };
    writer
        .write_record([
            "n", "v", "d", "r", "sigma_xi", "method", "task", "metric", "mean", "se", "reps",
            "values_json", "status",
        ])
        .map_err(io_err)?;
    for rec in records {
        let values_json = serde_json::to_string(&rec.values).expect("values serialize");
        writer
            .write_record([
                rec.n.to_string(),
                rec.v.to_string(),
                rec.d.to_string(),
                rec.r.to_string(),
                format!("{}", rec.sigma_xi),
                rec.method.clone(),
                rec.task.clone(),
                rec.metric.clone(),
                format!("{}", rec.mean),
                format!("{}", rec.se),
                rec.values.len().to_string(),
                values_json,
                rec.status.clone(),
            ])
            .map_err(io_err)?;
    }
    writer.flush().map_err(|e| Error::io(path.display().to_string(), e))
}

/// Human-readable tables: one block per (task, metric), design cells as rows
/// and methods as columns, "mean(se)" entries.
fn render_tables(plan: &ExperimentPlan, records: &[ExperimentRecord]) -> String {
    let mut blocks: BTreeMap<(String, String), BTreeMap<(usize, usize, usize, String), Vec<(String, String)>>> =
        BTreeMap::new();
    for rec in records {
        let entry = if is_percent_metric(&rec.metric) {
            format_mean_se_percent(rec.mean, rec.se)
        } else {
            format!("{:.3}({:.3})", rec.mean, rec.se)
        };
        let entry = if rec.status == "ok" { entry } else { format!("{entry} [{}]", rec.status) };
        blocks
            .entry((rec.task.clone(), rec.metric.clone()))
            .or_default()
            .entry((rec.n, rec.v, rec.r, fmt_sigma(rec.sigma_xi)))
            .or_default()
            .push((rec.method.clone(), entry));
    }
    let methods: Vec<String> = plan.methods.iter().map(|m| m.to_string()).collect();
    let mut out = String::new();
    for ((task, metric), rows) in blocks {
        let unit = if is_percent_metric(&metric) { "percent, mean(se)" } else { "mean(se)" };
        out.push_str(&format!("== task={task} metric={metric} ({unit}) ==\n"));
        out.push_str(&format!("{:<6}{:<6}{:<6}{:<10}", "n", "v", "r", "sigma_xi"));
        for m in &methods {
            out.push_str(&format!("{m:<16}"));
        }
        out.push('\n');
        for ((n, v, r, sigma), cells) in rows {
            out.push_str(&format!("{n:<6}{v:<6}{r:<6}{:<10}", sigma.replace('p', ".")));
            for m in &methods {
                let cell = cells
                    .iter()
                    .find(|(method, _)| method == m)
                    .map(|(_, text)| text.as_str())
                    .unwrap_or("-");
                out.push_str(&format!("{cell:<16}"));
            }
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------------------
// tune
// ---------------------------------------------------------------------------

fn cmd_tune(args: &TuneArgs) -> Result<()> {
    let data = NetworkDataset::read_csv(&args.data)?;
    let profile = explained_variance_profile(&data, args.r_max)?;
    fs::create_dir_all(&args.out).map_err(|e| Error::io(args.out.display().to_string(), e))?;
    let var_path = args.out.join("variance_profile.csv");
    {
        let file = fs::File::create(&var_path).map_err(|e| Error::io(var_path.display().to_string(), e))?;
        let mut w = std::io::BufWriter::new(file);
        writeln!(w, "component,fraction").map_err(|e| Error::io(var_path.display().to_string(), e))?;
        for (i, frac) in profile.iter().enumerate() {
            writeln!(w, "{},{}", i + 1, frac).map_err(|e| Error::io(var_path.display().to_string(), e))?;
        }
        w.flush().map_err(|e| Error::io(var_path.display().to_string(), e))?;
    }
    println!("wrote {}", var_path.display());
    if let Some(model_dir) = &args.model {
        let model = load_any_model(model_dir)?;
        let norms = edge_norm_profile(&model.estimate);
        let norm_path = args.out.join("edge_norms.csv");
        let file = fs::File::create(&norm_path).map_err(|e| Error::io(norm_path.display().to_string(), e))?;
        let mut w = std::io::BufWriter::new(file);
        writeln!(w, "rank,norm").map_err(|e| Error::io(norm_path.display().to_string(), e))?;
        for (i, norm) in norms.iter().enumerate() {
            writeln!(w, "{},{}", i + 1, norm).map_err(|e| Error::io(norm_path.display().to_string(), e))?;
        }
        w.flush().map_err(|e| Error::io(norm_path.display().to_string(), e))?;
        println!("wrote {}", norm_path.display());
    }
    Ok(())
}

/// Seed derivation, exposed for the integration tests' determinism checks.
#[doc(hidden)]
pub fn derive_cell_seed(base: u64, key: &str) -> u64 {
    derive_seed(base, key)
}
