//! Three-point random masking: the masking distribution, mask sampling, and
//! the adaptive update of the per-edge masking parameters.
//!
//! Each edge `e` carries a parameter `p_e ∈ [0,1]`. A mask diagonal entry is
//! drawn as `a_e = 0` with probability `(1-p_e)/2`, `a_e = 1/2` with
//! probability `p_e`, and `a_e = 1` with probability `(1-p_e)/2`. High-signal
//! edges (large fitted row norm relative to their sample variance) get
//! `p_e → 1` and are split evenly across the two contrastive views; noise
//! edges are randomly zeroed in one view.

use ndarray::Array1;
use rand::Rng;

use crate::core::{EmbeddingMatrix, NetworkDataset};
use crate::error::{Error, Result};

/// Variance floor used before dividing in the masking-parameter update, so
/// constant rows with nonzero estimated signal saturate at `p_e = 1`.
pub const VARIANCE_FLOOR: f64 = 1e-12;

/// Per-edge masking probabilities, all in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MaskingParams {
    p: Array1<f64>,
}

impl MaskingParams {
    pub fn new(p: Array1<f64>) -> Result<Self> {
        if p.iter().any(|x| !x.is_finite() || *x < 0.0 || *x > 1.0) {
            return Err(Error::InvalidConfig(
                "masking parameters must be finite and within [0, 1]".into(),
            ));
        }
        Ok(MaskingParams { p })
    }

    /// All entries equal to `p`.
    pub fn constant(d: usize, p: f64) -> Result<Self> {
        MaskingParams::new(Array1::from_elem(d, p))
    }

    pub fn values(&self) -> &Array1<f64> {
        &self.p
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    /// Mean of the parameter vector (0 for an empty vector).
    pub fn mean(&self) -> f64 {
        if self.p.is_empty() {
            0.0
        } else {
            self.p.sum() / self.p.len() as f64
        }
    }
}

/// A sampled mask diagonal; every entry is exactly 0, 1/2, or 1.
#[derive(Clone, Debug, PartialEq)]
pub struct MaskDiagonal {
    a: Array1<f64>,
}

impl MaskDiagonal {
    pub fn new(a: Array1<f64>) -> Result<Self> {
        if a.iter().any(|&x| x != 0.0 && x != 0.5 && x != 1.0) {
            return Err(Error::InvalidConfig("mask entries must be 0, 0.5, or 1".into()));
        }
        Ok(MaskDiagonal { a })
    }

    pub fn values(&self) -> &Array1<f64> {
        &self.a
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }
}

/// Draw one mask: independently per edge, `P(0) = P(1) = (1-p_e)/2` and
/// `P(1/2) = p_e`. Consumes exactly one uniform draw per edge, in edge order,
/// so the stream is reproducible for a seeded generator.
pub fn sample_mask<R: Rng + ?Sized>(p: &MaskingParams, rng: &mut R) -> MaskDiagonal {
    let a = p.values().mapv(|pe| {
        let u: f64 = rng.random();
        if u < (1.0 - pe) / 2.0 {
            0.0
        } else if u < (1.0 + pe) / 2.0 {
            0.5
        } else {
            1.0
        }
    });
    MaskDiagonal { a }
}

/// Exact expectation of `a_e (1 - a_e)` under the three-point distribution:
/// the outcomes 0 and 1 contribute nothing and 1/2 contributes 1/4, so the
/// value is `p_e / 4`.
pub fn mask_moment(p_e: f64) -> f64 {
    p_e * 0.25
}

/// Adaptive update of the masking parameters from a current estimate:
/// `p_e = min( ||q_e|| / sqrt(max(Var(x_e), 1e-12)), 1 )`, where `Var(x_e)`
/// is the biased (divide-by-n) sample variance of edge `e` across subjects.
pub fn update_masking_params(q_hat: &EmbeddingMatrix, data: &NetworkDataset) -> Result<MaskingParams> {
    let (d, _) = q_hat.dims();
    if d != data.num_edges() {
        return Err(Error::dim(
            "update_masking_params",
            format!("{} rows", data.num_edges()),
            format!("{d} rows"),
        ));
    }
    let norms = q_hat.row_norms();
    let vars = row_variances(data);
    Ok(params_from_parts(&norms, &vars))
}

/// Biased per-row sample variance of the data matrix.
pub(crate) fn row_variances(data: &NetworkDataset) -> Array1<f64> {
    let x = data.x();
    let n = data.num_subjects() as f64;
    Array1::from_iter(x.rows().into_iter().map(|row| {
        let mean = row.sum() / n;
        row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
    }))
}

/// The update formula on precomputed row norms and variances.
pub(crate) fn params_from_parts(norms: &Array1<f64>, vars: &Array1<f64>) -> MaskingParams {
    let p = Array1::from_iter(
        norms
            .iter()
            .zip(vars.iter())
            .map(|(&nrm, &var)| (nrm / var.max(VARIANCE_FLOOR).sqrt()).min(1.0)),
    );
    MaskingParams { p }
}
