//! Sparse PCA baseline: row-truncated power iteration on the sample
//! covariance, with QR re-orthonormalization and whitened embeddings.

use ndarray::{Array1, Array2, ArrayView1};

use crate::core::{NetworkDataset, SubjectEmbedding};
use crate::error::{Error, Result};
use crate::estimator::hard_threshold_in_place;
use crate::init::centered_gram;
use crate::linalg;

/// Iteration cap of the truncated power method.
pub const SPCA_MAX_ITER: usize = 500;
/// Subspace-change tolerance that stops the iteration.
pub const SPCA_TOL: f64 = 1e-8;

/// Result of [`fit_spca`].
#[derive(Clone, Debug)]
pub struct SpcaResult {
    /// `d x r` loading matrix; columns orthonormal, at most `s` nonzero rows.
    pub u_x: Array2<f64>,
    /// Top-`r` variance estimates `diag(U_xᵀ Σ̂ U_x)`.
    pub lambda_r: Array1<f64>,
    /// Sorted indices of the nonzero rows of `u_x`.
    pub support: Vec<usize>,
    /// False when the iteration cap was reached before the subspace
    /// stabilized; the last iterate is still returned.
    pub converged: bool,
    /// Number of update steps performed.
    pub iterations: usize,
}

/// Fit sparse PCA with latent dimension `r` and row-sparsity budget `s`.
///
/// Starts from the dense top-`r` eigenvectors of the sample covariance
/// `Σ̂ = (1/n) Σ_i (x_i - x̄)(x_i - x̄)ᵀ` and repeats
/// {`V ← Σ̂U`; keep the `s` largest-norm rows of `V`; `U ← qr(V)`}
/// until the projector changes by at most [`SPCA_TOL`] in Frobenius norm or
/// [`SPCA_MAX_ITER`] steps have run. `s = d` reduces to ordinary PCA.
pub fn fit_spca(data: &NetworkDataset, r: usize, s: usize) -> Result<SpcaResult> {
    let d = data.num_edges();
    let n = data.num_subjects();
    if r < 1 || r > d.min(n) {
        return Err(Error::InvalidConfig(format!(
            "need 1 <= r <= min(d, n) = {}; got r = {r}",
            d.min(n)
        )));
    }
    if s < r || s > d {
        return Err(Error::InvalidConfig(format!("need r <= s <= d; got r = {r}, s = {s}, d = {d}")));
    }
    let sigma = centered_gram(data);
    let sigma = sigma.matrix();
    let (_, vectors) = linalg::sym_eigen_desc(&sigma.view())?;
    let mut u = vectors.slice(ndarray::s![.., ..r]).to_owned();
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..SPCA_MAX_ITER {
        let mut v = sigma.dot(&u);
        hard_threshold_in_place(&mut v, s);
        let u_next = linalg::qr_orthonormal(&v.view())?;
        iterations += 1;
        // ||UUᵀ - PPᵀ||_F² = 2r - 2||UᵀP||_F² for orthonormal U, P.
        let overlap = u_next.t().dot(&u);
        let cross = overlap.iter().map(|x| x * x).sum::<f64>();
        let delta = (2.0 * r as f64 - 2.0 * cross).max(0.0).sqrt();
        u = u_next;
        if delta <= SPCA_TOL {
            converged = true;
            break;
        }
    }
    let lambda_r = Array1::from_iter((0..r).map(|j| {
        let col = u.column(j);
        col.dot(&sigma.dot(&col))
    }));
    let support: Vec<usize> = u
        .rows()
        .into_iter()
        .enumerate()
        .filter(|(_, row)| row.iter().any(|&x| x != 0.0))
        .map(|(i, _)| i)
        .collect();
    Ok(SpcaResult { u_x: u, lambda_r, support, converged, iterations })
}

/// Whitened embedding of one edge vector: `Λ̂^{-1/2} U_xᵀ x`.
///
/// Every variance estimate must be strictly positive; otherwise the model is
/// degenerate and the offending component is reported.
pub fn spca_embed(res: &SpcaResult, x: &ArrayView1<f64>) -> Result<Array1<f64>> {
    if x.len() != res.u_x.nrows() {
        return Err(Error::dim("spca_embed", format!("{} entries", res.u_x.nrows()), format!("{}", x.len())));
    }
    check_positive_spectrum(res)?;
    let proj = res.u_x.t().dot(x);
    Ok(Array1::from_iter(proj.iter().zip(res.lambda_r.iter()).map(|(&p, &l)| p / l.sqrt())))
}

/// [`spca_embed`] applied to every subject of a dataset; returns `r x n`.
pub fn spca_embed_all(res: &SpcaResult, data: &NetworkDataset) -> Result<SubjectEmbedding> {
    if data.num_edges() != res.u_x.nrows() {
        return Err(Error::dim(
            "spca_embed_all",
            format!("{} edges", res.u_x.nrows()),
            format!("{}", data.num_edges()),
        ));
    }
    check_positive_spectrum(res)?;
    let proj = res.u_x.t().dot(data.x());
    let mut z = proj;
    for (j, mut row) in z.rows_mut().into_iter().enumerate() {
        let scale = res.lambda_r[j].sqrt();
        row.mapv_inplace(|v| v / scale);
    }
    SubjectEmbedding::new(z)
}

fn check_positive_spectrum(res: &SpcaResult) -> Result<()> {
    for (j, &l) in res.lambda_r.iter().enumerate() {
        if !(l > 0.0) {
            return Err(Error::DegenerateModel { index: j, value: l });
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Persistence (same container layout as the main model: model.json + matrix)
// ---------------------------------------------------------------------------

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::core::SCHEMA_VERSION;

#[derive(Serialize, Deserialize)]
struct SpcaMetadata {
    schema_version: u32,
    kind: String,
    rows: usize,
    cols: usize,
    lambda_r: Vec<f64>,
    support: Vec<usize>,
    converged: bool,
    iterations: usize,
    matrix_csv: String,
}

/// Persist a sparse-PCA result into `dir` as `model.json` plus `u_x.csv`.
pub fn save_spca_model(res: &SpcaResult, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let meta = SpcaMetadata {
        schema_version: SCHEMA_VERSION,
        kind: "spca".into(),
        rows: res.u_x.nrows(),
        cols: res.u_x.ncols(),
        lambda_r: res.lambda_r.to_vec(),
        support: res.support.clone(),
        converged: res.converged,
        iterations: res.iterations,
        matrix_csv: "u_x.csv".into(),
    };
    crate::core::write_json(&dir.join("model.json"), &meta)?;
    crate::core::write_matrix_csv(&dir.join("u_x.csv"), &res.u_x)
}

/// Load a sparse-PCA result saved by [`save_spca_model`].
pub fn load_spca_model(dir: &Path) -> Result<SpcaResult> {
    let meta_path = dir.join("model.json");
    let meta: SpcaMetadata = crate::core::read_json(&meta_path)?;
    if meta.schema_version != SCHEMA_VERSION {
        return Err(Error::SchemaVersion {
            path: meta_path.display().to_string(),
            found: meta.schema_version,
            expected: SCHEMA_VERSION,
        });
    }
    if meta.kind != "spca" {
        return Err(Error::Json {
            path: meta_path.display().to_string(),
            message: format!("expected an spca model, found kind {:?}", meta.kind),
        });
    }
    let u = crate::core::read_matrix_csv(&dir.join(&meta.matrix_csv))?;
    if u.dim() != (meta.rows, meta.cols) {
        return Err(Error::dim(
            "load_spca_model",
            format!("{}x{}", meta.rows, meta.cols),
            format!("{}x{}", u.nrows(), u.ncols()),
        ));
    }
    Ok(SpcaResult {
        u_x: u,
        lambda_r: Array1::from_vec(meta.lambda_r),
        support: meta.support,
        converged: meta.converged,
        iterations: meta.iterations,
    })
}
