//! The contrastive loss, its analytic gradient, hard thresholding, and the
//! two-level fitting procedure: inner masked gradient steps with row-sparsity
//! projection, outer adaptive updates of the masking parameters.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::core::{EmbeddingMatrix, FitResult, NetworkDataset, TraceRecord};
use crate::error::{Error, Result};
use crate::init::{centered_gram, initial_from_gram, AdmmParams, CenteredGram};
use crate::linalg;
use crate::masking::{params_from_parts, sample_mask, MaskDiagonal, MaskingParams};

/// Initializer choice for the fit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMethod {
    /// Sparse Fantope relaxation solved by ADMM (slower, more accurate under
    /// heteroscedastic noise).
    Fantope,
    /// Direct eigendecomposition of the off-diagonal Gram part (fast).
    GramPca,
}

impl fmt::Display for InitMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitMethod::Fantope => write!(f, "fantope"),
            InitMethod::GramPca => write!(f, "gram_pca"),
        }
    }
}

impl FromStr for InitMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fantope" => Ok(InitMethod::Fantope),
            "gram_pca" => Ok(InitMethod::GramPca),
            other => Err(Error::InvalidConfig(format!(
                "unknown init method {other:?}; expected fantope or gram_pca"
            ))),
        }
    }
}

/// Diagonal weighting used by the expected-loss surrogate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagWeight {
    /// Weight `p_e`, from exact enumeration of the three mask outcomes.
    Enumerated,
    /// Weight `p_e^2`, the alternative closed form.
    Squared,
}

impl fmt::Display for DiagWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiagWeight::Enumerated => write!(f, "enumerated"),
            DiagWeight::Squared => write!(f, "squared"),
        }
    }
}

impl FromStr for DiagWeight {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "enumerated" => Ok(DiagWeight::Enumerated),
            "squared" => Ok(DiagWeight::Squared),
            other => Err(Error::InvalidConfig(format!(
                "unknown diagonal weighting {other:?}; expected enumerated or squared"
            ))),
        }
    }
}

/// Datasets up to this edge count default to the `fantope` initializer;
/// larger ones fall back to `gram_pca` for runtime.
pub const FANTOPE_DIM_LIMIT: usize = 1500;

/// Default inner and outer iteration count, `ceil(ln n)`.
pub fn default_iteration_count(n: usize) -> usize {
    ((n as f64).ln().ceil() as usize).max(1)
}

/// Default initializer for a dataset with `d` edges.
pub fn default_init(d: usize) -> InitMethod {
    if d <= FANTOPE_DIM_LIMIT {
        InitMethod::Fantope
    } else {
        InitMethod::GramPca
    }
}

/// Full configuration of a fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcerlConfig {
    /// Latent dimension.
    pub r: usize,
    /// Working sparsity: rows kept by each hard-threshold step (`s = d`
    /// disables sparsity).
    pub s: usize,
    /// Step-size scale. The gradient step uses `eta / λ̂₁`, where `λ̂₁` is
    /// the top eigenvalue of the centered Gram matrix, so useful values are
    /// data-scale-free; the stable range is roughly (0, 2).
    pub eta: f64,
    /// Inner (gradient) steps per outer iteration.
    pub inner_iters: usize,
    /// Outer (masking-update) iterations.
    pub outer_iters: usize,
    /// Optional per-outer-iteration override of the inner step count; when
    /// set, its length must equal `outer_iters`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner_schedule: Option<Vec<usize>>,
    /// Seed of the mask-sampling random stream.
    pub seed: u64,
    /// Initializer for the starting estimate when none is supplied.
    pub init: InitMethod,
    /// Diagonal weighting of the expected-loss surrogate (trace reporting).
    pub diag_weight: DiagWeight,
}

impl AcerlConfig {
    /// Defaults for a `d x n` dataset: `eta = 0.5`, inner and outer iteration
    /// counts `ceil(ln n)`, seed 0, initializer by [`default_init`],
    /// enumerated diagonal weighting.
    pub fn new(r: usize, s: usize, d: usize, n: usize) -> Self {
        AcerlConfig {
            r,
            s,
            eta: 0.5,
            inner_iters: default_iteration_count(n),
            outer_iters: default_iteration_count(n),
            inner_schedule: None,
            seed: 0,
            init: default_init(d),
            diag_weight: DiagWeight::Enumerated,
        }
    }

    /// Check the configuration against data dimensions.
    pub fn validate(&self, d: usize, n: usize) -> Result<()> {
        if self.r < 1 || self.r > d.min(n) {
            return Err(Error::InvalidConfig(format!(
                "need 1 <= r <= min(d, n) = {}; got r = {}",
                d.min(n),
                self.r
            )));
        }
        if self.s < 1 || self.s > d {
            return Err(Error::InvalidConfig(format!("need 1 <= s <= d = {d}; got s = {}", self.s)));
        }
        if !(self.eta > 0.0) || !self.eta.is_finite() {
            return Err(Error::InvalidConfig(format!("need a finite eta > 0; got {}", self.eta)));
        }
        if self.inner_iters < 1 || self.outer_iters < 1 {
            return Err(Error::InvalidConfig(format!(
                "need inner_iters >= 1 and outer_iters >= 1; got {} and {}",
                self.inner_iters, self.outer_iters
            )));
        }
        if let Some(sched) = &self.inner_schedule {
            if sched.len() != self.outer_iters {
                return Err(Error::InvalidConfig(format!(
                    "inner_schedule length {} must equal outer_iters {}",
                    sched.len(),
                    self.outer_iters
                )));
            }
            if sched.iter().any(|&t| t < 1) {
                return Err(Error::InvalidConfig("inner_schedule entries must be >= 1".into()));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Loss, gradient, threshold
// ---------------------------------------------------------------------------

fn center_columns(data: &NetworkDataset) -> Array2<f64> {
    let x = data.x();
    let n = data.num_subjects() as f64;
    let row_means = x.sum_axis(Axis(1)) / n;
    x - &row_means.insert_axis(Axis(1))
}

fn scale_rows(a: &Array2<f64>, s: &Array1<f64>) -> Array2<f64> {
    a * &s.view().insert_axis(Axis(1))
}

fn check_dims(q: &EmbeddingMatrix, data: &NetworkDataset, a: &MaskDiagonal, context: &'static str) -> Result<()> {
    let (d, _) = q.dims();
    if data.num_edges() != d || a.len() != d {
        return Err(Error::dim(
            context,
            format!("{d} rows in data and mask"),
            format!("data {} rows, mask {} entries", data.num_edges(), a.len()),
        ));
    }
    Ok(())
}

/// The masked contrastive loss
/// `-(1/n) Σ_i <QᵀA x_i, Qᵀ(I-A) x_i> + (1/n²) Σ_{i,j} <QᵀA x_i, Qᵀ(I-A) x_j>
///  + (1/8) ||QQᵀ||_F²`,
/// evaluated as `-tr(QQᵀ(I-A)MA) + (1/8)||QQᵀ||_F²` with `M` the centered
/// Gram matrix. The trace factors through `n x r` products, so the cost is
/// `O(ndr + dr²)` and no `d x d` matrix is formed.
pub fn empirical_loss(q: &EmbeddingMatrix, data: &NetworkDataset, a: &MaskDiagonal) -> Result<f64> {
    check_dims(q, data, a, "empirical_loss")?;
    let qm = q.matrix();
    let n = data.num_subjects() as f64;
    let xc = center_columns(data);
    let av = a.values();
    let one_minus = av.mapv(|x| 1.0 - x);
    // <Q, (I-A) M A Q> = (1/n) <Xcᵀ((1-a)∘Q), Xcᵀ(a∘Q)>
    let left = xc.t().dot(&scale_rows(qm, &one_minus));
    let right = xc.t().dot(&scale_rows(qm, av));
    let trace_term = left.iter().zip(right.iter()).map(|(l, r)| l * r).sum::<f64>() / n;
    let qtq = qm.t().dot(qm);
    let reg = qtq.iter().map(|x| x * x).sum::<f64>() / 8.0;
    Ok(-trace_term + reg)
}

/// Analytic gradient of [`empirical_loss`] in `Q`:
/// `-(B + Bᵀ)Q + (1/2) Q (QᵀQ)` with `B = (I-A)MA`, evaluated without any
/// `d x d` intermediate.
pub fn loss_gradient(q: &EmbeddingMatrix, data: &NetworkDataset, a: &MaskDiagonal) -> Result<Array2<f64>> {
    check_dims(q, data, a, "loss_gradient")?;
    let qm = q.matrix();
    let n = data.num_subjects() as f64;
    let xc = center_columns(data);
    let av = a.values();
    let one_minus = av.mapv(|x| 1.0 - x);
    // B Q = (1-a) ∘ (M (a ∘ Q)) with M applied as (1/n) Xc (Xcᵀ ·)
    let m_aq = xc.dot(&xc.t().dot(&scale_rows(qm, av))) / n;
    let bq = scale_rows(&m_aq, &one_minus);
    let m_omq = xc.dot(&xc.t().dot(&scale_rows(qm, &one_minus))) / n;
    let btq = scale_rows(&m_omq, av);
    let qtq = qm.t().dot(qm);
    Ok(-(bq + btq) + qm.dot(&qtq) * 0.5)
}

/// Keep the `s` rows with the largest Euclidean norms, zero the rest; ties
/// keep the smaller row index. `s >= d` leaves the matrix unchanged.
pub fn hard_threshold(q: &EmbeddingMatrix, s: usize) -> EmbeddingMatrix {
    let mut m = q.matrix().clone();
    hard_threshold_in_place(&mut m, s);
    EmbeddingMatrix::new(m).expect("thresholding preserves finiteness")
}

/// In-place version of [`hard_threshold`] on a raw matrix.
pub(crate) fn hard_threshold_in_place(q: &mut Array2<f64>, s: usize) {
    let d = q.nrows();
    if s >= d {
        return;
    }
    let norms2: Vec<f64> = q
        .rows()
        .into_iter()
        .map(|row| row.iter().map(|x| x * x).sum::<f64>())
        .collect();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| {
        norms2[j]
            .partial_cmp(&norms2[i])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let mut keep = vec![false; d];
    for &i in order.iter().take(s) {
        keep[i] = true;
    }
    for (i, mut row) in q.rows_mut().into_iter().enumerate() {
        if !keep[i] {
            row.fill(0.0);
        }
    }
}

fn surrogate_weights(p: &MaskingParams, weight: DiagWeight) -> Array1<f64> {
    match weight {
        DiagWeight::Enumerated => p.values().clone(),
        DiagWeight::Squared => p.values().mapv(|x| x * x),
    }
}

/// The mask-averaged loss surrogate `(1/8) ||QQᵀ - N||_F²`, where
/// `N = Δ(M) + W · D(M)` combines the off-diagonal Gram part with a
/// reweighted diagonal (`W = diag(p_e)` under enumerated weighting,
/// `diag(p_e²)` under squared). Expanded into small products; no `d x d`
/// matrix is formed.
pub fn expected_loss_surrogate(
    q: &EmbeddingMatrix,
    data: &NetworkDataset,
    p: &MaskingParams,
    weight: DiagWeight,
) -> Result<f64> {
    let (d, _) = q.dims();
    if data.num_edges() != d || p.len() != d {
        return Err(Error::dim(
            "expected_loss_surrogate",
            format!("{d} rows in data and masking params"),
            format!("data {} rows, params {} entries", data.num_edges(), p.len()),
        ));
    }
    let qm = q.matrix();
    let n = data.num_subjects() as f64;
    let xc = center_columns(data);
    // ||M||_F² = (1/n²) ||XcᵀXc||_F²
    let inner = xc.t().dot(&xc);
    let m_fro2 = inner.iter().map(|x| x * x).sum::<f64>() / (n * n);
    let mdiag = Array1::from_iter(xc.rows().into_iter().map(|row| row.iter().map(|x| x * x).sum::<f64>() / n));
    // <QQᵀ, M> = (1/n) ||XcᵀQ||_F²
    let xtq = xc.t().dot(qm);
    let qq_m = xtq.iter().map(|x| x * x).sum::<f64>() / n;
    let row_norms2 = Array1::from_iter(qm.rows().into_iter().map(|row| row.iter().map(|x| x * x).sum::<f64>()));
    let w = surrogate_weights(p, weight);
    Ok(surrogate_from_parts(qm, qq_m, m_fro2, &mdiag, &row_norms2, &w))
}

/// Shared final assembly of the surrogate from precomputed pieces.
fn surrogate_from_parts(
    qm: &Array2<f64>,
    qq_m: f64,
    m_fro2: f64,
    mdiag: &Array1<f64>,
    row_norms2: &Array1<f64>,
    w: &Array1<f64>,
) -> f64 {
    let qtq = qm.t().dot(qm);
    let qq_fro2 = qtq.iter().map(|x| x * x).sum::<f64>();
    // <QQᵀ, N> = <QQᵀ, M> + Σ_e (w_e - 1) ||q_e||² M_ee
    let qq_n = qq_m
        + w.iter()
            .zip(row_norms2.iter())
            .zip(mdiag.iter())
            .map(|((&we, &rn), &me)| (we - 1.0) * rn * me)
            .sum::<f64>();
    // ||N||_F² = ||M||_F² + Σ_e (w_e² - 1) M_ee²
    let n_fro2 = m_fro2
        + w.iter()
            .zip(mdiag.iter())
            .map(|(&we, &me)| (we * we - 1.0) * me * me)
            .sum::<f64>();
    (qq_fro2 - 2.0 * qq_n + n_fro2) / 8.0
}

/// Surrogate evaluation against a precomputed Gram matrix (fit-loop path).
fn surrogate_from_gram(
    qm: &Array2<f64>,
    gram: &CenteredGram,
    m_fro2: f64,
    mdiag: &Array1<f64>,
    p: &MaskingParams,
    weight: DiagWeight,
) -> f64 {
    let mq = gram.matrix().dot(qm);
    let qq_m = qm.iter().zip(mq.iter()).map(|(a, b)| a * b).sum::<f64>();
    let row_norms2 = Array1::from_iter(qm.rows().into_iter().map(|row| row.iter().map(|x| x * x).sum::<f64>()));
    let w = surrogate_weights(p, weight);
    surrogate_from_parts(qm, qq_m, m_fro2, mdiag, &row_norms2, &w)
}

// ---------------------------------------------------------------------------
// Fit
// ---------------------------------------------------------------------------

/// Run the full two-level procedure.
///
/// Outer iterations `k = 1..=K` each run `T` inner steps of
/// {draw mask, gradient step, hard threshold}, then update the masking
/// parameters from the current iterate. The starting estimate is `q0` when
/// supplied (taken as-is), otherwise built by the configured initializer; the
/// initial masking parameters are computed from that starting estimate. The
/// gradient step size is `eta / λ̂₁` with `λ̂₁` the top Gram eigenvalue.
///
/// All randomness comes from one stream seeded with `config.seed`, consuming
/// exactly `d` uniform draws per inner step, so results are bit-reproducible.
pub fn fit(data: &NetworkDataset, config: &AcerlConfig, q0: Option<&EmbeddingMatrix>) -> Result<FitResult> {
    let d = data.num_edges();
    let n = data.num_subjects();
    config.validate(d, n)?;
    let gram = centered_gram(data);
    let lam1 = linalg::top_eigenvalue_psd(&gram.matrix().view(), 100);
    let eta_eff = config.eta / lam1.max(1e-12);
    let mut q = match q0 {
        Some(start) => {
            let (d0, r0) = start.dims();
            if d0 != d || r0 != config.r {
                return Err(Error::dim(
                    "fit initial estimate",
                    format!("{d}x{}", config.r),
                    format!("{d0}x{r0}"),
                ));
            }
            start.matrix().clone()
        }
        None => initial_from_gram(&gram, n, config.r, config.s, config.init, &AdmmParams::default())?
            .into_matrix(),
    };
    let mdiag = gram.diagonal();
    let m_fro2 = {
        let f = linalg::fro(&gram.matrix().view());
        f * f
    };
    let mut p = params_from_parts(&row_norms_of(&q), &mdiag);
    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    let mut trace = Vec::with_capacity(config.outer_iters);
    for k in 1..=config.outer_iters {
        let t_count = config
            .inner_schedule
            .as_ref()
            .map(|sched| sched[k - 1])
            .unwrap_or(config.inner_iters);
        for t in 1..=t_count {
            let a = sample_mask(&p, &mut rng);
            let av = a.values();
            let one_minus = av.mapv(|x| 1.0 - x);
            let bq = scale_rows(&gram.matrix().dot(&scale_rows(&q, av)), &one_minus);
            let btq = scale_rows(&gram.matrix().dot(&scale_rows(&q, &one_minus)), av);
            let qtq = q.t().dot(&q);
            let grad = -(bq + btq) + q.dot(&qtq) * 0.5;
            if grad.iter().any(|x| !x.is_finite()) {
                return Err(Error::DivergentFit { what: "gradient", k, t });
            }
            q.scaled_add(-eta_eff, &grad);
            hard_threshold_in_place(&mut q, config.s);
        }
        p = params_from_parts(&row_norms_of(&q), &mdiag);
        let surrogate = surrogate_from_gram(&q, &gram, m_fro2, &mdiag, &p, config.diag_weight);
        if !surrogate.is_finite() {
            return Err(Error::DivergentFit { what: "loss", k, t: t_count });
        }
        let support_size = q
            .rows()
            .into_iter()
            .filter(|row| row.iter().any(|&x| x != 0.0))
            .count();
        trace.push(TraceRecord { k, mean_p: p.mean(), surrogate_loss: surrogate, support_size });
    }
    Ok(FitResult {
        q_hat: EmbeddingMatrix::new(q)?,
        masking: p,
        trace,
        config: config.clone(),
        seed: config.seed,
    })
}

fn row_norms_of(q: &Array2<f64>) -> Array1<f64> {
    Array1::from_iter(
        q.rows()
            .into_iter()
            .map(|row| row.iter().map(|x| x * x).sum::<f64>().sqrt()),
    )
}
