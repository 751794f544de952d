//! Centered Gram matrix construction and the initial embedding estimate,
//! either from a sparse Fantope-projection program solved by ADMM or from
//! plain eigendecomposition of the off-diagonal Gram part.

use ndarray::{Array1, Array2};

use crate::core::{EmbeddingMatrix, NetworkDataset};
use crate::error::{Error, Result};
use crate::estimator::{hard_threshold_in_place, InitMethod};
use crate::linalg;

/// The biased centered Gram matrix `M = (1/n) Σ_i (x_i - x̄)(x_i - x̄)ᵀ`
/// of a dataset, with views of its diagonal and off-diagonal parts.
#[derive(Clone, Debug, PartialEq)]
pub struct CenteredGram {
    m: Array2<f64>,
}

impl CenteredGram {
    /// The full matrix `M`.
    pub fn matrix(&self) -> &Array2<f64> {
        &self.m
    }

    /// Diagonal part `D(M)` as a vector (the per-edge biased variances).
    pub fn diagonal(&self) -> Array1<f64> {
        self.m.diag().to_owned()
    }

    /// Off-diagonal part `Δ(M)`: a copy of `M` with the diagonal zeroed,
    /// so that `M = Δ(M) + D(M)` exactly.
    pub fn off_diagonal(&self) -> Array2<f64> {
        let mut delta = self.m.clone();
        for i in 0..delta.nrows() {
            delta[[i, i]] = 0.0;
        }
        delta
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }
}

/// Compute the centered Gram matrix of a dataset. The product is formed once
/// and symmetrized, so the result is symmetric to machine precision.
pub fn centered_gram(data: &NetworkDataset) -> CenteredGram {
    let x = data.x();
    let n = data.num_subjects() as f64;
    let row_means = x.sum_axis(ndarray::Axis(1)) / n;
    let xc = x - &row_means.view().insert_axis(ndarray::Axis(1));
    let raw = xc.dot(&xc.t()) / n;
    let m = (&raw + &raw.t()) * 0.5;
    CenteredGram { m }
}

/// Euclidean projection of a symmetric matrix onto the Fantope
/// `{ H : 0 ⪯ H ⪯ I, tr H = r }`.
///
/// The input is symmetrized, eigendecomposed, and its spectrum water-filled:
/// each eigenvalue maps to `clamp(γ - θ, 0, 1)` with the shift `θ` found by
/// bisection until the clamped values sum to `r` within `1e-10`.
pub fn fantope_project(a: &Array2<f64>, r: usize) -> Result<Array2<f64>> {
    let d = a.nrows();
    if a.ncols() != d {
        return Err(Error::dim("fantope_project", "square matrix", format!("{}x{}", d, a.ncols())));
    }
    if r < 1 || r > d {
        return Err(Error::InvalidConfig(format!("fantope_project needs 1 <= r <= d, got r={r}, d={d}")));
    }
    let sym = (a + &a.t()) * 0.5;
    let (gamma, u) = linalg::sym_eigen_desc(&sym.view())?;
    let clamped_sum = |theta: f64| -> f64 {
        gamma.iter().map(|&g| (g - theta).clamp(0.0, 1.0)).sum()
    };
    // The clamped sum decreases continuously from d (at theta = min-1) to 0
    // (at theta = max), so a root with sum = r exists in between.
    let mut lo = gamma[d - 1] - 1.0;
    let mut hi = gamma[0];
    let mut theta = lo;
    let mut converged = clamped_sum(theta) - r as f64 <= 1e-10; // r = d case
    if !converged {
        for _ in 0..200 {
            theta = 0.5 * (lo + hi);
            let diff = clamped_sum(theta) - r as f64;
            if diff.abs() <= 1e-10 {
                converged = true;
                break;
            }
            if diff > 0.0 {
                lo = theta;
            } else {
                hi = theta;
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence(
            "fantope projection bisection did not reach trace tolerance in 200 iterations".into(),
        ));
    }
    let weights = gamma.mapv(|g| (g - theta).clamp(0.0, 1.0));
    // H = U diag(w) Uᵀ, assembled as (U * w) Uᵀ and symmetrized.
    let mut uw = u.clone();
    for (j, &w) in weights.iter().enumerate() {
        uw.column_mut(j).mapv_inplace(|x| x * w);
    }
    let h = uw.dot(&u.t());
    Ok((&h + &h.t()) * 0.5)
}

/// Hyperparameters of the ADMM solver behind the `fantope` initializer.
#[derive(Clone, Debug, PartialEq)]
pub struct AdmmParams {
    /// Augmented-Lagrangian penalty.
    pub rho: f64,
    /// Entrywise soft-threshold level; `None` selects `sqrt(ln d / n)`.
    pub lambda: Option<f64>,
    /// Maximum ADMM iterations.
    pub max_iter: usize,
    /// Relative primal/dual stopping tolerance.
    pub tol: f64,
}

impl Default for AdmmParams {
    fn default() -> Self {
        AdmmParams { rho: 1.0, lambda: None, max_iter: 50, tol: 1e-4 }
    }
}

/// Initial embedding estimate from the data.
///
/// `gram_pca` eigendecomposes the off-diagonal Gram part `Δ(M)` and scales
/// the top-r eigenvectors by the square roots of the (clamped) eigenvalues.
/// `fantope` first denoises `Δ(M)` through the sparse Fantope program
/// (three-block ADMM alternating a Fantope projection, entrywise soft
/// thresholding, and a dual update), then extracts the same kind of scaled
/// eigenbasis restricted to the solution's principal subspace. Both finish
/// by hard thresholding to `s` rows.
pub fn initial_embedding(
    data: &NetworkDataset,
    r: usize,
    s: usize,
    method: InitMethod,
    admm: &AdmmParams,
) -> Result<EmbeddingMatrix> {
    let gram = centered_gram(data);
    initial_from_gram(&gram, data.num_subjects(), r, s, method, admm)
}

/// [`initial_embedding`] on a precomputed Gram matrix (used by the fit loop
/// to avoid recomputing `M`).
pub(crate) fn initial_from_gram(
    gram: &CenteredGram,
    n: usize,
    r: usize,
    s: usize,
    method: InitMethod,
    admm: &AdmmParams,
) -> Result<EmbeddingMatrix> {
    let d = gram.dim();
    if r < 1 || r > d.min(n) {
        return Err(Error::InvalidConfig(format!(
            "initial embedding needs 1 <= r <= min(d, n) = {}, got r={r}",
            d.min(n)
        )));
    }
    if s > d {
        return Err(Error::InvalidConfig(format!("initial embedding needs s <= d = {d}, got s={s}")));
    }
    let delta = gram.off_diagonal();
    let mut q0 = match method {
        InitMethod::GramPca => scaled_top_eigenbasis(&delta, r)?,
        InitMethod::Fantope => {
            let h = fantope_admm(&delta, r, n, admm)?;
            let (_, u) = linalg::sym_eigen_desc(&h.view())?;
            let u_r = u.slice(ndarray::s![.., ..r]).to_owned();
            // Scale the subspace basis by the spectrum of Δ(M) restricted to it.
            let small = u_r.t().dot(&delta).dot(&u_r);
            let small_sym = (&small + &small.t()) * 0.5;
            let (mu, v) = linalg::sym_eigen_desc(&small_sym.view())?;
            let mut basis = u_r.dot(&v);
            for (j, &m) in mu.iter().enumerate() {
                let scale = m.max(0.0).sqrt();
                basis.column_mut(j).mapv_inplace(|x| x * scale);
            }
            basis
        }
    };
    hard_threshold_in_place(&mut q0, s);
    EmbeddingMatrix::new(q0)
}

/// Top-r eigenvectors of a symmetric matrix scaled by sqrt of the clamped
/// eigenvalues: `U_r diag(max(λ_j, 0))^{1/2}`.
fn scaled_top_eigenbasis(a: &Array2<f64>, r: usize) -> Result<Array2<f64>> {
    let (vals, vecs) = linalg::sym_eigen_desc(&a.view())?;
    let mut q = vecs.slice(ndarray::s![.., ..r]).to_owned();
    for j in 0..r {
        let scale = vals[j].max(0.0).sqrt();
        q.column_mut(j).mapv_inplace(|x| x * scale);
    }
    Ok(q)
}

/// Three-block ADMM for the sparse Fantope relaxation on the target matrix:
/// maximize `<target, H> - λ‖H‖_1` over the Fantope, split into an `H` block
/// (Fantope projection), a `Y` block (entrywise soft thresholding), and a
/// scaled dual `W`. Returns the final `H`, which is always Fantope-feasible
/// because it is the output of a projection.
fn fantope_admm(target: &Array2<f64>, r: usize, n: usize, admm: &AdmmParams) -> Result<Array2<f64>> {
    let d = target.nrows();
    let rho = admm.rho;
    if !(rho > 0.0) || !(admm.tol > 0.0) || admm.max_iter == 0 {
        return Err(Error::InvalidConfig("ADMM needs rho > 0, tol > 0, max_iter >= 1".into()));
    }
    let lambda = admm.lambda.unwrap_or_else(|| ((d as f64).ln() / n as f64).sqrt());
    let thr = lambda / rho;
    let scaled_target = target / rho;
    let mut y: Array2<f64> = Array2::zeros((d, d));
    let mut w: Array2<f64> = Array2::zeros((d, d));
    let mut h: Array2<f64> = Array2::zeros((d, d));
    for _ in 0..admm.max_iter {
        h = fantope_project(&(&y - &w + &scaled_target), r)?;
        let y_prev = std::mem::replace(&mut y, (&h + &w).mapv(|x| soft_threshold(x, thr)));
        w = &w + &h - &y;
        let primal = linalg::fro(&(&h - &y).view());
        let dual = rho * linalg::fro(&(&y - &y_prev).view());
        if primal.max(dual) <= admm.tol * linalg::fro(&h.view()).max(1.0) {
            break;
        }
    }
    Ok(h)
}

fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}
