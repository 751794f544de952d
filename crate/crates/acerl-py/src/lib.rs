//! Python bindings for the `acerl` edge-embedding library.
//!
//! Conventions at the Python boundary:
//! - A dataset `x` is a nested list with `d` rows (one per network edge),
//!   each of length `n` (one entry per subject) — the same edges-by-subjects
//!   orientation the Rust library and the CLI CSV format use.
//! - Embedding matrices (`q_hat`, `q_star`, loadings) are `d x r` nested
//!   lists, one row per edge.
//! - Subject embeddings returned by `embed` have one row per subject
//!   (`n x r`), ready for downstream tooling that expects sample rows.

use ndarray::{Array2, Axis};
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use std::path::PathBuf;

use acerl::core::{
    load_model, save_model, EdgeIndexMap, EmbeddingMatrix, FitResult, NetworkDataset,
    SubjectEmbedding,
};
use acerl::downstream::{
    build_similarity, classify_all, fit_classifier, select_edges, spectral_communities,
    subject_embeddings, CommunityAssignment, KmeansOptions,
};
use acerl::estimator::{AcerlConfig, DiagWeight, InitMethod};
use acerl::simgen::{CommunitySimSpec, SparseSimSpec};
use acerl::spca::{load_spca_model, save_spca_model, spca_embed_all, SpcaResult};

// ---------------------------------------------------------------------------
// Conversions
// ---------------------------------------------------------------------------

fn to_py_err(e: acerl::Error) -> PyErr {
    match &e {
        acerl::Error::Io { .. } => PyIOError::new_err(e.to_string()),
        // The CLI maps usage/config/data errors to exit code 1 and numeric
        // failures to 2; mirror that split as ValueError vs RuntimeError.
        _ if acerl::cli::exit_code(&e) == 1 => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn mat_to_lists(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.rows().into_iter().map(|row| row.to_vec()).collect()
}

fn lists_to_mat(rows: &[Vec<f64>], what: &str) -> PyResult<Array2<f64>> {
    if rows.is_empty() {
        return Err(PyValueError::new_err(format!("{what} must have at least one row")));
    }
    let ncols = rows[0].len();
    if ncols == 0 {
        return Err(PyValueError::new_err(format!("{what} rows must be nonempty")));
    }
    if let Some((i, bad)) = rows.iter().enumerate().find(|(_, r)| r.len() != ncols) {
        return Err(PyValueError::new_err(format!(
            "{what} is ragged: row 0 has {ncols} entries but row {i} has {}",
            bad.len()
        )));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Array2::from_shape_vec((rows.len(), ncols), flat)
        .map_err(|e| PyValueError::new_err(format!("{what}: {e}")))
    // shape_vec cannot actually fail after the rectangularity check above
}

fn dataset_from(x: &[Vec<f64>], labels: Option<Vec<u8>>, what: &str) -> PyResult<NetworkDataset> {
    let m = lists_to_mat(x, what)?;
    let data = NetworkDataset::from_matrix(m).map_err(to_py_err)?;
    match labels {
        Some(y) => data.with_labels(y).map_err(to_py_err),
        None => Ok(data),
    }
}

fn embedding_from(q: &[Vec<f64>], what: &str) -> PyResult<EmbeddingMatrix> {
    EmbeddingMatrix::new(lists_to_mat(q, what)?).map_err(to_py_err)
}

/// Subject embeddings are stored with one column per subject; hand them to
/// Python with one row per subject instead.
fn subjects_as_rows(z: &SubjectEmbedding) -> Vec<Vec<f64>> {
    z.matrix()
        .axis_iter(Axis(1))
        .map(|col| col.to_vec())
        .collect()
}

fn parse_init(name: &str, d: usize) -> PyResult<InitMethod> {
    match name {
        "auto" => Ok(acerl::estimator::default_init(d)),
        "fantope" => Ok(InitMethod::Fantope),
        "gram_pca" => Ok(InitMethod::GramPca),
        other => Err(PyValueError::new_err(format!(
            "unknown init {other:?}; expected \"auto\", \"fantope\", or \"gram_pca\""
        ))),
    }
}

fn parse_diag_weight(name: &str) -> PyResult<DiagWeight> {
    match name {
        "enumerated" => Ok(DiagWeight::Enumerated),
        "squared" => Ok(DiagWeight::Squared),
        other => Err(PyValueError::new_err(format!(
            "unknown diag_weight {other:?}; expected \"enumerated\" or \"squared\""
        ))),
    }
}

// ---------------------------------------------------------------------------
// Fitted models
// ---------------------------------------------------------------------------

/// A fitted edge embedding: the `d x r` estimate plus the masking
/// parameters, the per-iteration trace, and the exact configuration that
/// produced it.
#[pyclass(module = "acerl_py")]
pub struct Model {
    inner: FitResult,
}

#[pymethods]
impl Model {
    /// The fitted `d x r` embedding matrix as nested lists.
    #[getter]
    fn q_hat(&self) -> Vec<Vec<f64>> {
        mat_to_lists(self.inner.q_hat.matrix())
    }

    /// Final per-edge masking probabilities.
    #[getter]
    fn masking(&self) -> Vec<f64> {
        self.inner.masking.values().to_vec()
    }

    /// Sorted indices of the nonzero rows of the estimate.
    #[getter]
    fn support(&self) -> Vec<usize> {
        self.inner.q_hat.row_support()
    }

    /// Mask-stream seed the fit ran with.
    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    /// Per-outer-iteration trace: a list of dicts with keys
    /// `k`, `mean_p`, `surrogate_loss`, and `support_size`.
    #[getter]
    fn trace<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.inner
            .trace
            .iter()
            .map(|t| {
                let d = PyDict::new(py);
                d.set_item("k", t.k)?;
                d.set_item("mean_p", t.mean_p)?;
                d.set_item("surrogate_loss", t.surrogate_loss)?;
                d.set_item("support_size", t.support_size)?;
                Ok(d)
            })
            .collect()
    }

    /// The configuration the fit ran with, as a dict.
    #[getter]
    fn config<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let c = &self.inner.config;
        let d = PyDict::new(py);
        d.set_item("r", c.r)?;
        d.set_item("s", c.s)?;
        d.set_item("eta", c.eta)?;
        d.set_item("inner_iters", c.inner_iters)?;
        d.set_item("outer_iters", c.outer_iters)?;
        d.set_item("seed", c.seed)?;
        d.set_item("init", c.init.to_string())?;
        d.set_item("diag_weight", c.diag_weight.to_string())?;
        Ok(d)
    }

    /// Least-squares subject embeddings for a `d x n` dataset; returns one
    /// row of length `r` per subject.
    fn embed(&self, x: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        let data = dataset_from(&x, None, "x")?;
        let z = subject_embeddings(&self.inner.q_hat, &data).map_err(to_py_err)?;
        Ok(subjects_as_rows(&z))
    }

    /// Fit a linear classifier on `(train_x, train_y)` embeddings and return
    /// predicted labels for the subjects of `test_x`.
    fn classify(
        &self,
        train_x: Vec<Vec<f64>>,
        train_y: Vec<u8>,
        test_x: Vec<Vec<f64>>,
    ) -> PyResult<Vec<u8>> {
        let train = dataset_from(&train_x, None, "train_x")?;
        let test = dataset_from(&test_x, None, "test_x")?;
        let z = subject_embeddings(&self.inner.q_hat, &train).map_err(to_py_err)?;
        let clf = fit_classifier(&z, &train_y).map_err(to_py_err)?;
        classify_all(&clf, &self.inner.q_hat, &test).map_err(to_py_err)
    }

    /// Indices of the `s` largest-norm rows of the estimate, descending;
    /// ties prefer the smaller index.
    fn select(&self, s: usize) -> PyResult<Vec<usize>> {
        select_edges(&self.inner.q_hat, s).map_err(to_py_err)
    }

    /// Spectral community detection on the edge similarity graph implied by
    /// the estimate: partition the `v` nodes into `g` groups.
    #[pyo3(signature = (v, g, seed = 0))]
    fn communities(&self, v: usize, g: usize, seed: u64) -> PyResult<Vec<usize>> {
        let map = EdgeIndexMap::new(v).map_err(to_py_err)?;
        let s_hat = build_similarity(&self.inner.q_hat, &map).map_err(to_py_err)?;
        let opts = KmeansOptions { seed, ..KmeansOptions::default() };
        let assignment = spectral_communities(&s_hat.view(), g, &opts).map_err(to_py_err)?;
        Ok(assignment.labels())
    }

    /// Persist to a directory as `model.json` plus `q_hat.csv`; reload with
    /// `Model.load`. The round trip is bit-exact.
    fn save(&self, dir: PathBuf) -> PyResult<()> {
        save_model(&self.inner, &dir).map_err(to_py_err)
    }

    /// Load a model previously written by `save` (or by the CLI `fit`).
    #[staticmethod]
    fn load(dir: PathBuf) -> PyResult<Self> {
        Ok(Model { inner: load_model(&dir).map_err(to_py_err)? })
    }

    fn __repr__(&self) -> String {
        let (d, r) = self.inner.q_hat.dims();
        format!(
            "Model(d={d}, r={r}, support_size={}, seed={})",
            self.inner.q_hat.support_size(),
            self.inner.seed
        )
    }
}

/// A fitted sparse-PCA baseline: orthonormal row-sparse loadings and the
/// per-component variance estimates.
#[pyclass(module = "acerl_py")]
pub struct SpcaModel {
    inner: SpcaResult,
}

impl SpcaModel {
    /// Loadings with rows weighted by component standard deviation, the
    /// edge-importance matrix used for selection and similarity.
    fn effective(&self) -> PyResult<EmbeddingMatrix> {
        let mut u = self.inner.u_x.clone();
        for (j, mut col) in u.columns_mut().into_iter().enumerate() {
            let w = self.inner.lambda_r[j].max(0.0).sqrt();
            col.mapv_inplace(|v| v * w);
        }
        EmbeddingMatrix::new(u).map_err(to_py_err)
    }
}

#[pymethods]
impl SpcaModel {
    /// The `d x r` orthonormal loading matrix.
    #[getter]
    fn loadings(&self) -> Vec<Vec<f64>> {
        mat_to_lists(&self.inner.u_x)
    }

    /// Estimated variances `diag(U_x' Sigma U_x)`, one per component.
    #[getter]
    fn variances(&self) -> Vec<f64> {
        self.inner.lambda_r.to_vec()
    }

    /// Sorted indices of the nonzero loading rows.
    #[getter]
    fn support(&self) -> Vec<usize> {
        self.inner.support.clone()
    }

    /// False when the iteration cap was reached before the subspace
    /// stabilized.
    #[getter]
    fn converged(&self) -> bool {
        self.inner.converged
    }

    /// Number of update steps performed.
    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations
    }

    /// Loadings scaled column-wise by component standard deviation
    /// (`d x r`); row norms rank edges by explained variance.
    fn effective_loadings(&self) -> PyResult<Vec<Vec<f64>>> {
        Ok(mat_to_lists(self.effective()?.matrix()))
    }

    /// Whitened principal-component scores for a `d x n` dataset; one row of
    /// length `r` per subject.
    fn embed(&self, x: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        let data = dataset_from(&x, None, "x")?;
        let z = spca_embed_all(&self.inner, &data).map_err(to_py_err)?;
        Ok(subjects_as_rows(&z))
    }

    /// Fit a linear classifier on `(train_x, train_y)` scores and return
    /// predicted labels for the subjects of `test_x`.
    fn classify(
        &self,
        train_x: Vec<Vec<f64>>,
        train_y: Vec<u8>,
        test_x: Vec<Vec<f64>>,
    ) -> PyResult<Vec<u8>> {
        let train = dataset_from(&train_x, None, "train_x")?;
        let test = dataset_from(&test_x, None, "test_x")?;
        let z_tr = spca_embed_all(&self.inner, &train).map_err(to_py_err)?;
        let clf = fit_classifier(&z_tr, &train_y).map_err(to_py_err)?;
        let z_te = spca_embed_all(&self.inner, &test).map_err(to_py_err)?;
        Ok(z_te
            .matrix()
            .axis_iter(Axis(1))
            .map(|z| u8::from(clf.w.dot(&z) + clf.intercept >= 0.0))
            .collect())
    }

    /// Indices of the `s` largest-norm rows of the effective loadings.
    fn select(&self, s: usize) -> PyResult<Vec<usize>> {
        select_edges(&self.effective()?, s).map_err(to_py_err)
    }

    /// Spectral community detection using the effective loadings as the
    /// edge-importance matrix.
    #[pyo3(signature = (v, g, seed = 0))]
    fn communities(&self, v: usize, g: usize, seed: u64) -> PyResult<Vec<usize>> {
        let map = EdgeIndexMap::new(v).map_err(to_py_err)?;
        let s_hat = build_similarity(&self.effective()?, &map).map_err(to_py_err)?;
        let opts = KmeansOptions { seed, ..KmeansOptions::default() };
        let assignment = spectral_communities(&s_hat.view(), g, &opts).map_err(to_py_err)?;
        Ok(assignment.labels())
    }

    /// Persist to a directory as `model.json` plus `u_x.csv`; reload with
    /// `SpcaModel.load`. The round trip is bit-exact.
    fn save(&self, dir: PathBuf) -> PyResult<()> {
        save_spca_model(&self.inner, &dir).map_err(to_py_err)
    }

    /// Load a model previously written by `save` (or by the CLI `fit --method spca`).
    #[staticmethod]
    fn load(dir: PathBuf) -> PyResult<Self> {
        Ok(SpcaModel { inner: load_spca_model(&dir).map_err(to_py_err)? })
    }

    fn __repr__(&self) -> String {
        format!(
            "SpcaModel(d={}, r={}, support_size={}, converged={})",
            self.inner.u_x.nrows(),
            self.inner.u_x.ncols(),
            self.inner.support.len(),
            self.inner.converged
        )
    }
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

/// Generate a planted row-sparse dataset.
///
/// Returns a dict with keys `x` (`d x n` data, `d = v(v-1)/2`), `labels`
/// (binary, one per subject), `q_star` (`d x r` effective embedding),
/// `support` (sorted planted edge indices), and `z` (`r x n` latent subject
/// positions).
#[pyfunction]
#[pyo3(signature = (n, v, r, s_star = 50, sigma_xi = 0.0, seed = 0))]
fn simulate_sparse<'py>(
    py: Python<'py>,
    n: usize,
    v: usize,
    r: usize,
    s_star: usize,
    sigma_xi: f64,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let mut spec = SparseSimSpec::new(n, v, r, sigma_xi, seed);
    spec.s_star = s_star;
    let (data, truth) = acerl::simgen::gen_sparse(&spec).map_err(to_py_err)?;
    let d = PyDict::new(py);
    d.set_item("x", mat_to_lists(data.x()))?;
    d.set_item("labels", truth.labels)?;
    d.set_item("q_star", mat_to_lists(&truth.q_star))?;
    d.set_item("support", truth.support)?;
    d.set_item("z", mat_to_lists(&truth.z))?;
    Ok(d)
}

/// Generate a community-structured dataset.
///
/// Returns a dict with keys `x` (`d x n` data), `communities` (one label per
/// node, block-contiguous), `levels` (per-community signal level), and
/// `q_eff` (`d x r` effective embedding).
#[pyfunction]
#[pyo3(signature = (n, v, r, g, sigma_xi = 0.0, seed = 0, jitter = 0.0))]
fn simulate_community<'py>(
    py: Python<'py>,
    n: usize,
    v: usize,
    r: usize,
    g: usize,
    sigma_xi: f64,
    seed: u64,
    jitter: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let mut spec = CommunitySimSpec::new(n, v, r, g, sigma_xi, seed);
    spec.jitter = jitter;
    let (data, truth) = acerl::simgen::gen_community(&spec).map_err(to_py_err)?;
    let d = PyDict::new(py);
    d.set_item("x", mat_to_lists(data.x()))?;
    d.set_item("communities", truth.assignment.labels())?;
    d.set_item("levels", truth.levels.to_vec())?;
    d.set_item("q_eff", mat_to_lists(&truth.q_eff))?;
    Ok(d)
}

/// Seeded subject split. Returns `(train_x, train_y, test_x, test_y)`; the
/// label entries are `None` when no labels are supplied.
#[pyfunction]
#[pyo3(signature = (x, labels = None, frac = 0.6, seed = 0))]
#[allow(clippy::type_complexity)]
fn split_train_test(
    x: Vec<Vec<f64>>,
    labels: Option<Vec<u8>>,
    frac: f64,
    seed: u64,
) -> PyResult<(Vec<Vec<f64>>, Option<Vec<u8>>, Vec<Vec<f64>>, Option<Vec<u8>>)> {
    let data = dataset_from(&x, labels, "x")?;
    let (train, test) = acerl::simgen::split_train_test(&data, frac, seed).map_err(to_py_err)?;
    Ok((
        mat_to_lists(train.x()),
        train.labels().map(|y| y.to_vec()),
        mat_to_lists(test.x()),
        test.labels().map(|y| y.to_vec()),
    ))
}

// ---------------------------------------------------------------------------
// Fitting
// ---------------------------------------------------------------------------

/// Fit the adaptive masked contrastive embedding on a `d x n` dataset.
///
/// `r` is the latent dimension, `s` the row-sparsity budget. `inner_iters`
/// and `outer_iters` default to `ceil(ln n)`. `init` is `"auto"`
/// (dimension-dependent default), `"fantope"`, or `"gram_pca"`; `diag_weight`
/// is `"enumerated"` or `"squared"`.
#[pyfunction]
#[pyo3(signature = (
    x, r, s,
    eta = 0.5,
    inner_iters = None,
    outer_iters = None,
    seed = 0,
    init = "auto",
    diag_weight = "enumerated",
))]
#[allow(clippy::too_many_arguments)]
fn fit(
    x: Vec<Vec<f64>>,
    r: usize,
    s: usize,
    eta: f64,
    inner_iters: Option<usize>,
    outer_iters: Option<usize>,
    seed: u64,
    init: &str,
    diag_weight: &str,
) -> PyResult<Model> {
    let data = dataset_from(&x, None, "x")?;
    let (d, n) = (data.num_edges(), data.num_subjects());
    let mut config = AcerlConfig::new(r, s, d, n);
    config.eta = eta;
    if let Some(t) = inner_iters {
        config.inner_iters = t;
    }
    if let Some(k) = outer_iters {
        config.outer_iters = k;
    }
    config.seed = seed;
    config.init = parse_init(init, d)?;
    config.diag_weight = parse_diag_weight(diag_weight)?;
    let result = acerl::estimator::fit(&data, &config, None).map_err(to_py_err)?;
    Ok(Model { inner: result })
}

/// Fit the sparse-PCA baseline with latent dimension `r` and row-sparsity
/// budget `s` (`s = d` reduces to ordinary PCA).
#[pyfunction]
fn fit_spca(x: Vec<Vec<f64>>, r: usize, s: usize) -> PyResult<SpcaModel> {
    let data = dataset_from(&x, None, "x")?;
    Ok(SpcaModel { inner: acerl::spca::fit_spca(&data, r, s).map_err(to_py_err)? })
}

// ---------------------------------------------------------------------------
// Edge indexing
// ---------------------------------------------------------------------------

/// Upper-triangle edge order for a `v`-node network: the list of node pairs
/// `(u, w)`, `u < w`, in edge-index order.
#[pyfunction]
fn edge_pairs(v: usize) -> PyResult<Vec<(usize, usize)>> {
    let map = EdgeIndexMap::new(v).map_err(to_py_err)?;
    Ok(map.iter_pairs().collect())
}

/// Edge index of the node pair `(u, w)` in a `v`-node network.
#[pyfunction]
fn edge_of(v: usize, u: usize, w: usize) -> PyResult<usize> {
    EdgeIndexMap::new(v).map_err(to_py_err)?.index_of(u, w).map_err(to_py_err)
}

/// Node pair `(u, w)` of edge index `e` in a `v`-node network.
#[pyfunction]
fn pair_of(v: usize, e: usize) -> PyResult<(usize, usize)> {
    EdgeIndexMap::new(v).map_err(to_py_err)?.pair_of(e).map_err(to_py_err)
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

/// Fraction of positions where `pred == truth`.
#[pyfunction]
fn accuracy(pred: Vec<u8>, truth: Vec<u8>) -> PyResult<f64> {
    acerl::metrics::classification_accuracy(&pred, &truth).map_err(to_py_err)
}

/// Fraction of `true_support` contained in `selected`.
#[pyfunction]
fn selection_recall(selected: Vec<usize>, true_support: Vec<usize>) -> PyResult<f64> {
    acerl::metrics::selection_recall(&selected, &true_support).map_err(to_py_err)
}

/// Rand index between two labelings of the same items.
#[pyfunction]
fn rand_index(labels_a: Vec<usize>, labels_b: Vec<usize>) -> PyResult<f64> {
    acerl::metrics::rand_index(&labels_a, &labels_b).map_err(to_py_err)
}

/// Permutation-minimal misclustering losses `(overall, worst_community)`
/// between an estimated and a true assignment into `g` communities.
#[pyfunction]
fn misclustering(est: Vec<usize>, truth: Vec<usize>, g: usize) -> PyResult<(f64, f64)> {
    let est = CommunityAssignment::from_labels(&est, g).map_err(to_py_err)?;
    let truth = CommunityAssignment::from_labels(&truth, g).map_err(to_py_err)?;
    acerl::metrics::misclustering_losses(&est, &truth).map_err(to_py_err)
}

/// Frobenius distance between two `d x r` matrices minimized over right
/// rotations of the first.
#[pyfunction]
fn procrustes_dist(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>) -> PyResult<f64> {
    let a = lists_to_mat(&a, "a")?;
    let b = lists_to_mat(&b, "b")?;
    acerl::metrics::procrustes_dist(&a.view(), &b.view()).map_err(to_py_err)
}

/// Rotation-invariant estimation error `||QQ' - Q*Q*'||_F` between two
/// `d x r` matrices, computed without forming the `d x d` products.
#[pyfunction]
fn gram_error(q_hat: Vec<Vec<f64>>, q_star: Vec<Vec<f64>>) -> PyResult<f64> {
    let a = lists_to_mat(&q_hat, "q_hat")?;
    let b = lists_to_mat(&q_star, "q_star")?;
    acerl::metrics::gram_error(&a.view(), &b.view()).map_err(to_py_err)
}

/// Fractions of centered-data variance explained by the top `r_max`
/// principal components of a `d x n` dataset, descending.
#[pyfunction]
fn variance_profile(x: Vec<Vec<f64>>, r_max: usize) -> PyResult<Vec<f64>> {
    let data = dataset_from(&x, None, "x")?;
    Ok(acerl::metrics::explained_variance_profile(&data, r_max)
        .map_err(to_py_err)?
        .to_vec())
}

/// Row norms of a `d x r` embedding matrix, descending.
#[pyfunction]
fn edge_norm_profile(q: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
    Ok(acerl::metrics::edge_norm_profile(&embedding_from(&q, "q")?).to_vec())
}

// ---------------------------------------------------------------------------
// Module
// ---------------------------------------------------------------------------

#[pymodule]
fn acerl_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("SCHEMA_VERSION", acerl::core::SCHEMA_VERSION)?;
    m.add_class::<Model>()?;
    m.add_class::<SpcaModel>()?;
    m.add_function(wrap_pyfunction!(simulate_sparse, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_community, m)?)?;
    m.add_function(wrap_pyfunction!(split_train_test, m)?)?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(fit_spca, m)?)?;
    m.add_function(wrap_pyfunction!(edge_pairs, m)?)?;
    m.add_function(wrap_pyfunction!(edge_of, m)?)?;
    m.add_function(wrap_pyfunction!(pair_of, m)?)?;
    m.add_function(wrap_pyfunction!(accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(selection_recall, m)?)?;
    m.add_function(wrap_pyfunction!(rand_index, m)?)?;
    m.add_function(wrap_pyfunction!(misclustering, m)?)?;
    m.add_function(wrap_pyfunction!(procrustes_dist, m)?)?;
    m.add_function(wrap_pyfunction!(gram_error, m)?)?;
    m.add_function(wrap_pyfunction!(variance_profile, m)?)?;
    m.add_function(wrap_pyfunction!(edge_norm_profile, m)?)?;
    Ok(())
}
