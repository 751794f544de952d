//! Domain types shared by every other module: edge indexing for vectorized
//! undirected graphs, the dataset container, embedding matrices, fit results,
//! and model persistence.
//!
//! Conventions fixed here and relied on everywhere else:
//! - An undirected graph on `v` nodes has `d = v(v-1)/2` edges, enumerated
//!   lexicographically over ordered pairs `(u, u')` with `u < u'`, 0-based:
//!   `(0,1), (0,2), ..., (0,v-1), (1,2), ...`.
//! - Data matrices are `d x n` (edges by subjects); dataset CSV files store
//!   one subject per row and are transposed on ingestion.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::AcerlConfig;
use crate::masking::MaskingParams;

/// Version stamp embedded in every persisted JSON document.
pub const SCHEMA_VERSION: u32 = 1;

// ---------------------------------------------------------------------------
// Edge indexing
// ---------------------------------------------------------------------------

/// Bijection between edge indices `0..d` and unordered node pairs of an
/// undirected graph on `v` nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeIndexMap {
    v: usize,
}

impl EdgeIndexMap {
    /// A map for `v >= 2` nodes.
    pub fn new(v: usize) -> Result<Self> {
        if v < 2 {
            return Err(Error::InvalidConfig(format!("EdgeIndexMap needs v >= 2, got {v}")));
        }
        Ok(EdgeIndexMap { v })
    }

    pub fn node_count(&self) -> usize {
        self.v
    }

    /// Number of edges, `v(v-1)/2`.
    pub fn edge_count(&self) -> usize {
        self.v * (self.v - 1) / 2
    }

    /// Edge index of the unordered pair `{u, w}`; accepts either argument
    /// order, rejects loops and out-of-range nodes.
    pub fn index_of(&self, u: usize, w: usize) -> Result<usize> {
        if u == w {
            return Err(Error::InvalidConfig(format!("no self-loop edges: ({u},{w})")));
        }
        if u >= self.v || w >= self.v {
            return Err(Error::InvalidConfig(format!(
                "node pair ({u},{w}) out of range for v={}",
                self.v
            )));
        }
        let (a, b) = if u < w { (u, w) } else { (w, u) };
        Ok(a * self.v - a * (a + 1) / 2 + (b - a - 1))
    }

    /// Node pair `(u, w)` with `u < w` for edge index `e`.
    pub fn pair_of(&self, e: usize) -> Result<(usize, usize)> {
        if e >= self.edge_count() {
            return Err(Error::InvalidConfig(format!(
                "edge index {e} out of range for d={}",
                self.edge_count()
            )));
        }
        let mut rem = e;
        for u in 0..self.v - 1 {
            let row_len = self.v - 1 - u;
            if rem < row_len {
                return Ok((u, u + 1 + rem));
            }
            rem -= row_len;
        }
        unreachable!("edge index bounds already checked")
    }

    /// All pairs in edge-index order.
    pub fn iter_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.edge_count()).map(move |e| self.pair_of(e).expect("in-range index"))
    }
}

/// Extract the strict upper triangle of a symmetric `v x v` matrix into an
/// edge vector of length `v(v-1)/2`, in edge-index order.
///
/// The matrix must be symmetric within an absolute tolerance of `1e-9`;
/// its diagonal is ignored.
pub fn vectorize_adjacency(a_sym: &Array2<f64>, map: &EdgeIndexMap) -> Result<Array1<f64>> {
    let v = map.node_count();
    if a_sym.nrows() != v || a_sym.ncols() != v {
        return Err(Error::dim(
            "vectorize_adjacency",
            format!("{v}x{v}"),
            format!("{}x{}", a_sym.nrows(), a_sym.ncols()),
        ));
    }
    const TOL: f64 = 1e-9;
    let mut max_dev = 0.0f64;
    for i in 0..v {
        for j in i + 1..v {
            let dev = (a_sym[[i, j]] - a_sym[[j, i]]).abs();
            if dev > max_dev {
                max_dev = dev;
            }
        }
    }
    if max_dev > TOL {
        return Err(Error::Asymmetric { max_dev, tol: TOL });
    }
    let mut out = Array1::zeros(map.edge_count());
    for (e, (u, w)) in map.iter_pairs().enumerate() {
        out[e] = a_sym[[u, w]];
    }
    Ok(out)
}

/// Inverse of [`vectorize_adjacency`] on off-diagonal entries: rebuild the
/// symmetric matrix with zero diagonal.
pub fn devectorize_edges(x: &Array1<f64>, map: &EdgeIndexMap) -> Result<Array2<f64>> {
    if x.len() != map.edge_count() {
        return Err(Error::dim(
            "devectorize_edges",
            format!("length {}", map.edge_count()),
            format!("length {}", x.len()),
        ));
    }
    let v = map.node_count();
    let mut a = Array2::zeros((v, v));
    for (e, (u, w)) in map.iter_pairs().enumerate() {
        a[[u, w]] = x[e];
        a[[w, u]] = x[e];
    }
    Ok(a)
}

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

/// A network dataset: `d x n` matrix of edge measurements (subjects are
/// columns), with optional edge indexing, binary labels, and a continuous
/// trait per subject.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkDataset {
    x: Array2<f64>,
    edge_map: Option<EdgeIndexMap>,
    labels: Option<Vec<u8>>,
    trait_values: Option<Vec<f64>>,
}

impl NetworkDataset {
    pub fn new(
        x: Array2<f64>,
        edge_map: Option<EdgeIndexMap>,
        labels: Option<Vec<u8>>,
        trait_values: Option<Vec<f64>>,
    ) -> Result<Self> {
        let (d, n) = x.dim();
        if n < 2 {
            return Err(Error::InvalidConfig(format!("a dataset needs n >= 2 subjects, got {n}")));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dataset matrix".into()));
        }
        if let Some(map) = &edge_map {
            if map.edge_count() != d {
                return Err(Error::dim(
                    "NetworkDataset",
                    format!("{} rows for v={}", map.edge_count(), map.node_count()),
                    format!("{d} rows"),
                ));
            }
        }
        if let Some(y) = &labels {
            if y.len() != n {
                return Err(Error::dim("NetworkDataset labels", format!("length {n}"), format!("length {}", y.len())));
            }
            if y.iter().any(|&b| b > 1) {
                return Err(Error::InvalidConfig("labels must be 0 or 1".into()));
            }
        }
        if let Some(t) = &trait_values {
            if t.len() != n {
                return Err(Error::dim("NetworkDataset trait", format!("length {n}"), format!("length {}", t.len())));
            }
            if t.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("trait vector".into()));
            }
        }
        Ok(NetworkDataset { x, edge_map, labels, trait_values })
    }

    /// Dataset from a bare edge-vector matrix, no indexing or labels.
    pub fn from_matrix(x: Array2<f64>) -> Result<Self> {
        NetworkDataset::new(x, None, None, None)
    }

    /// Build a dataset from per-subject symmetric adjacency matrices.
    pub fn from_adjacency_matrices(mats: &[Array2<f64>], labels: Option<Vec<u8>>) -> Result<Self> {
        if mats.len() < 2 {
            return Err(Error::InvalidConfig(format!(
                "need at least 2 adjacency matrices, got {}",
                mats.len()
            )));
        }
        let v = mats[0].nrows();
        let map = EdgeIndexMap::new(v)?;
        let d = map.edge_count();
        let mut x = Array2::zeros((d, mats.len()));
        for (i, m) in mats.iter().enumerate() {
            let col = vectorize_adjacency(m, &map)?;
            x.column_mut(i).assign(&col);
        }
        NetworkDataset::new(x, Some(map), labels, None)
    }

    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }

    pub fn num_edges(&self) -> usize {
        self.x.nrows()
    }

    pub fn num_subjects(&self) -> usize {
        self.x.ncols()
    }

    pub fn edge_map(&self) -> Option<&EdgeIndexMap> {
        self.edge_map.as_ref()
    }

    pub fn labels(&self) -> Option<&[u8]> {
        self.labels.as_deref()
    }

    pub fn trait_values(&self) -> Option<&[f64]> {
        self.trait_values.as_deref()
    }

    /// Attach (or replace) an edge index map; its edge count must match.
    pub fn with_edge_map(mut self, map: EdgeIndexMap) -> Result<Self> {
        if map.edge_count() != self.num_edges() {
            return Err(Error::dim(
                "with_edge_map",
                format!("{} rows", map.edge_count()),
                format!("{} rows", self.num_edges()),
            ));
        }
        self.edge_map = Some(map);
        Ok(self)
    }

    /// Attach (or replace) per-subject binary labels.
    pub fn with_labels(self, labels: Vec<u8>) -> Result<Self> {
        NetworkDataset::new(self.x, self.edge_map, Some(labels), self.trait_values)
    }

    /// New dataset restricted to the given subject (column) indices, in the
    /// given order.
    pub fn subset_subjects(&self, idx: &[usize]) -> Result<Self> {
        if idx.iter().any(|&i| i >= self.num_subjects()) {
            return Err(Error::InvalidConfig("subject index out of range".into()));
        }
        let d = self.num_edges();
        let mut x = Array2::zeros((d, idx.len()));
        for (k, &i) in idx.iter().enumerate() {
            x.column_mut(k).assign(&self.x.column(i));
        }
        let labels = self.labels.as_ref().map(|y| idx.iter().map(|&i| y[i]).collect());
        let trait_values = self.trait_values.as_ref().map(|t| idx.iter().map(|&i| t[i]).collect());
        NetworkDataset::new(x, self.edge_map, labels, trait_values)
    }

    /// Write the data matrix as CSV, one subject per row, header
    /// `subject_id,e0,e1,...`. Floats use shortest round-trip formatting.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut w = BufWriter::new(file);
        let (d, n) = self.x.dim();
        let mut header = String::from("subject_id");
        for e in 0..d {
            write!(header, ",e{e}").expect("string write");
        }
        writeln!(w, "{header}").map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut line = String::new();
        for i in 0..n {
            line.clear();
            write!(line, "{i}").expect("string write");
            for e in 0..d {
                write!(line, ",{}", self.x[[e, i]]).expect("string write");
            }
            writeln!(w, "{line}").map_err(|e| Error::io(path.display().to_string(), e))?;
        }
        w.flush().map_err(|e| Error::io(path.display().to_string(), e))
    }

    /// Read a dataset written by [`NetworkDataset::write_csv`] (or any CSV in
    /// the same layout). Subjects come back in file order; the edge map is
    /// left unset.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = read_to_string(path)?;
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Csv { path: path.display().to_string(), message: "empty file".into() })?;
        let cols: Vec<&str> = header.split(',').collect();
        if cols.is_empty() || cols[0] != "subject_id" {
            return Err(Error::Csv {
                path: path.display().to_string(),
                message: format!("expected header starting with subject_id, found {:?}", cols.first()),
            });
        }
        let d = cols.len() - 1;
        if d == 0 {
            return Err(Error::Csv { path: path.display().to_string(), message: "no edge columns".into() });
        }
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (lineno, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != d + 1 {
                return Err(Error::Csv {
                    path: path.display().to_string(),
                    message: format!("row {} has {} fields, expected {}", lineno + 2, fields.len(), d + 1),
                });
            }
            let mut vals = Vec::with_capacity(d);
            for f in &fields[1..] {
                let v: f64 = f.parse().map_err(|_| Error::Csv {
                    path: path.display().to_string(),
                    message: format!("row {}: cannot parse {f:?} as a number", lineno + 2),
                })?;
                vals.push(v);
            }
            rows.push(vals);
        }
        let n = rows.len();
        let mut x = Array2::zeros((d, n));
        for (i, row) in rows.iter().enumerate() {
            for e in 0..d {
                x[[e, i]] = row[e];
            }
        }
        NetworkDataset::from_matrix(x)
    }

    /// Read a directory of per-subject symmetric adjacency CSV files
    /// (plain `v x v` numeric grids, no header), sorted by file name.
    pub fn read_adjacency_dir(dir: &Path) -> Result<Self> {
        let mut paths: Vec<_> = fs::read_dir(dir)
            .map_err(|e| Error::io(dir.display().to_string(), e))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.extension().map(|e| e == "csv").unwrap_or(false))
            .collect();
        paths.sort();
        let mut mats = Vec::new();
        for p in &paths {
            mats.push(read_square_matrix_csv(p)?);
        }
        NetworkDataset::from_adjacency_matrices(&mats, None)
    }
}

fn read_square_matrix_csv(path: &Path) -> Result<Array2<f64>> {
    let rows = read_matrix_csv(path)?;
    let v = rows.nrows();
    if rows.ncols() != v {
        return Err(Error::Csv {
            path: path.display().to_string(),
            message: format!("adjacency matrix must be square, found {}x{}", v, rows.ncols()),
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Embeddings
// ---------------------------------------------------------------------------

/// A `d x r` edge embedding matrix; row `e` is the latent vector of edge `e`.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingMatrix {
    q: Array2<f64>,
}

impl EmbeddingMatrix {
    pub fn new(q: Array2<f64>) -> Result<Self> {
        if q.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("embedding matrix".into()));
        }
        Ok(EmbeddingMatrix { q })
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.q
    }

    pub fn into_matrix(self) -> Array2<f64> {
        self.q
    }

    /// `(d, r)`.
    pub fn dims(&self) -> (usize, usize) {
        self.q.dim()
    }

    /// Euclidean norm of each row.
    pub fn row_norms(&self) -> Array1<f64> {
        Array1::from_iter(
            self.q
                .rows()
                .into_iter()
                .map(|row| row.iter().map(|x| x * x).sum::<f64>().sqrt()),
        )
    }

    /// Indices of rows with strictly positive norm.
    pub fn row_support(&self) -> Vec<usize> {
        self.row_norms()
            .iter()
            .enumerate()
            .filter(|(_, &n)| n > 0.0)
            .map(|(e, _)| e)
            .collect()
    }

    /// Number of nonzero rows.
    pub fn support_size(&self) -> usize {
        self.row_support().len()
    }
}

/// An `r x n` subject embedding matrix; column `i` is the latent vector of
/// subject `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct SubjectEmbedding {
    z: Array2<f64>,
}

impl SubjectEmbedding {
    pub fn new(z: Array2<f64>) -> Result<Self> {
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("subject embedding".into()));
        }
        Ok(SubjectEmbedding { z })
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.z
    }

    /// `(r, n)`.
    pub fn dims(&self) -> (usize, usize) {
        self.z.dim()
    }
}

// ---------------------------------------------------------------------------
// Fit results and persistence
// ---------------------------------------------------------------------------

/// One record per outer iteration of the fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    /// Outer iteration number, 1-based.
    pub k: usize,
    /// Mean of the masking parameter vector after this iteration's update.
    pub mean_p: f64,
    /// Expected-loss surrogate value at this iteration's end.
    pub surrogate_loss: f64,
    /// Number of nonzero rows of the current iterate.
    pub support_size: usize,
}

/// Everything produced by a fit: the estimate, the final masking parameters,
/// the per-outer-iteration trace, and the exact configuration and seed that
/// produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    pub q_hat: EmbeddingMatrix,
    pub masking: MaskingParams,
    pub trace: Vec<TraceRecord>,
    pub config: AcerlConfig,
    pub seed: u64,
}

#[derive(Serialize, Deserialize)]
struct ModelMetadata {
    schema_version: u32,
    kind: String,
    config: AcerlConfig,
    seed: u64,
    masking: Vec<f64>,
    trace: Vec<TraceRecord>,
    rows: usize,
    cols: usize,
    matrix_csv: String,
}

/// Persist a fit result into `dir` as `model.json` (metadata) plus
/// `q_hat.csv` (the matrix, shortest round-trip float formatting).
pub fn save_model(fit: &FitResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let (rows, cols) = fit.q_hat.dims();
    let meta = ModelMetadata {
        schema_version: SCHEMA_VERSION,
        kind: "acerl".into(),
        config: fit.config.clone(),
        seed: fit.seed,
        masking: fit.masking.values().to_vec(),
        trace: fit.trace.clone(),
        rows,
        cols,
        matrix_csv: "q_hat.csv".into(),
    };
    write_json(&dir.join("model.json"), &meta)?;
    write_matrix_csv(&dir.join("q_hat.csv"), fit.q_hat.matrix())
}

/// Load a fit result saved by [`save_model`].
pub fn load_model(dir: &Path) -> Result<FitResult> {
    let meta_path = dir.join("model.json");
    let meta: ModelMetadata = read_json(&meta_path)?;
    if meta.schema_version != SCHEMA_VERSION {
        return Err(Error::SchemaVersion {
            path: meta_path.display().to_string(),
            found: meta.schema_version,
            expected: SCHEMA_VERSION,
        });
    }
    if meta.kind != "acerl" {
        return Err(Error::Json {
            path: meta_path.display().to_string(),
            message: format!("expected an acerl model, found kind {:?}", meta.kind),
        });
    }
    let q = read_matrix_csv(&dir.join(&meta.matrix_csv))?;
    if q.dim() != (meta.rows, meta.cols) {
        return Err(Error::dim(
            "load_model",
            format!("{}x{}", meta.rows, meta.cols),
            format!("{}x{}", q.nrows(), q.ncols()),
        ));
    }
    Ok(FitResult {
        q_hat: EmbeddingMatrix::new(q)?,
        masking: MaskingParams::new(Array1::from_vec(meta.masking))?,
        trace: meta.trace,
        config: meta.config,
        seed: meta.seed,
    })
}

// ---------------------------------------------------------------------------
// Shared low-level file helpers (also used by spca and cli persistence)
// ---------------------------------------------------------------------------

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(|e| Error::Json { path: path.display().to_string(), message: e.to_string() })?;
    w.write_all(b"\n").map_err(|e| Error::io(path.display().to_string(), e))?;
    w.flush().map_err(|e| Error::io(path.display().to_string(), e))
}

pub(crate) fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = read_to_string(path)?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Json { path: path.display().to_string(), message: e.to_string() })
}

pub(crate) fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Plain numeric CSV, no header: one matrix row per line.
pub(crate) fn write_matrix_csv(path: &Path, m: &Array2<f64>) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut w = BufWriter::new(file);
    let mut line = String::new();
    for i in 0..m.nrows() {
        line.clear();
        for j in 0..m.ncols() {
            if j > 0 {
                line.push(',');
            }
            write!(line, "{}", m[[i, j]]).expect("string write");
        }
        writeln!(w, "{line}").map_err(|e| Error::io(path.display().to_string(), e))?;
    }
    w.flush().map_err(|e| Error::io(path.display().to_string(), e))
}

pub(crate) fn read_matrix_csv(path: &Path) -> Result<Array2<f64>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let reader = BufReader::new(file);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
        if line.is_empty() {
            continue;
        }
        let mut vals = Vec::new();
        for f in line.split(',') {
            let v: f64 = f.trim().parse().map_err(|_| Error::Csv {
                path: path.display().to_string(),
                message: format!("line {}: cannot parse {f:?} as a number", lineno + 1),
            })?;
            vals.push(v);
        }
        if let Some(first) = rows.first() {
            if vals.len() != first.len() {
                return Err(Error::Csv {
                    path: path.display().to_string(),
                    message: format!("line {}: ragged row ({} vs {} fields)", lineno + 1, vals.len(), first.len()),
                });
            }
        }
        rows.push(vals);
    }
    if rows.is_empty() {
        return Err(Error::Csv { path: path.display().to_string(), message: "empty matrix file".into() });
    }
    let (nr, nc) = (rows.len(), rows[0].len());
    let mut m = Array2::zeros((nr, nc));
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            m[[i, j]] = v;
        }
    }
    Ok(m)
}
