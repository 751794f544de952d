//! Evaluation functionals: rotation-invariant subspace distances, task
//! accuracies, clustering losses, tuning profiles, and the aggregation
//! record used by the experiment harness.

use std::collections::HashSet;

use ndarray::{Array1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::core::{EmbeddingMatrix, NetworkDataset};
use crate::downstream::CommunityAssignment;
use crate::error::{Error, Result};
use crate::init::centered_gram;
use crate::linalg;

/// Rotation-minimal Frobenius distance `min_O ||A O - B||_F` over orthogonal
/// `O`, computed from the singular value decomposition of `AᵀB`.
pub fn procrustes_dist(a: &ArrayView2<f64>, b: &ArrayView2<f64>) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::dim("procrustes_dist", format!("{:?}", a.dim()), format!("{:?}", b.dim())));
    }
    let cross = a.t().dot(b);
    let o = linalg::polar_orthogonal(&cross.view())?;
    let aligned = a.dot(&o);
    let diff = &aligned - b;
    Ok(linalg::fro(&diff.view()))
}

/// `||Q̂Q̂ᵀ - Q*Q*ᵀ||_F`, evaluated through `r x r` products only.
pub fn gram_error(q_hat: &ArrayView2<f64>, q_star: &ArrayView2<f64>) -> Result<f64> {
    if q_hat.nrows() != q_star.nrows() {
        return Err(Error::dim(
            "gram_error",
            format!("{} rows", q_hat.nrows()),
            format!("{} rows", q_star.nrows()),
        ));
    }
    let aa = q_hat.t().dot(q_hat);
    let ab = q_hat.t().dot(q_star);
    let bb = q_star.t().dot(q_star);
    let sq = |m: &ndarray::Array2<f64>| m.iter().map(|x| x * x).sum::<f64>();
    Ok((sq(&aa) - 2.0 * sq(&ab) + sq(&bb)).max(0.0).sqrt())
}

/// Fraction of matching predictions.
pub fn classification_accuracy(pred: &[u8], truth: &[u8]) -> Result<f64> {
    if truth.is_empty() {
        return Err(Error::InvalidConfig("empty truth labels".into()));
    }
    if pred.len() != truth.len() {
        return Err(Error::dim("classification_accuracy", format!("{} labels", truth.len()), format!("{}", pred.len())));
    }
    let hits = pred.iter().zip(truth.iter()).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Fraction of the true support recovered by the selection:
/// `|selected ∩ true| / |true|`.
pub fn selection_recall(selected: &[usize], true_support: &[usize]) -> Result<f64> {
    if true_support.is_empty() {
        return Err(Error::InvalidConfig("empty true support".into()));
    }
    let chosen: HashSet<usize> = selected.iter().copied().collect();
    let hit = true_support.iter().filter(|e| chosen.contains(e)).count();
    Ok(hit as f64 / true_support.len() as f64)
}

/// Classic Rand index: the fraction of node pairs on which two partitions
/// agree (both together or both apart).
pub fn rand_index(labels_a: &[usize], labels_b: &[usize]) -> Result<f64> {
    let v = labels_a.len();
    if labels_b.len() != v {
        return Err(Error::dim("rand_index", format!("{v} labels"), format!("{}", labels_b.len())));
    }
    if v < 2 {
        return Err(Error::InvalidConfig("need at least 2 nodes".into()));
    }
    let mut agree = 0usize;
    for i in 0..v {
        for j in 0..i {
            let same_a = labels_a[i] == labels_a[j];
            let same_b = labels_b[i] == labels_b[j];
            if same_a == same_b {
                agree += 1;
            }
        }
    }
    Ok(agree as f64 / (v * (v - 1) / 2) as f64)
}

/// Overall and worst-community misclustering losses `(L, L̃)` under the best
/// relabeling of the estimated communities.
///
/// `L = v^{-1} min_J ||Θ̂J - Θ||_0` counts changed matrix entries (each
/// misplaced node contributes 2), and `L̃ = min_J max_g v_g^{-1} ||(Θ̂J)_g -
/// Θ_g||_0` is its worst-community counterpart. Both minima are exhaustive
/// over the `G!` relabelings when `G <= 8`; for `8 < G <= 12` an assignment
/// solver minimizes `L` and `L̃` is evaluated at that relabeling. Larger `G`
/// is rejected.
pub fn misclustering_losses(theta_hat: &CommunityAssignment, theta: &CommunityAssignment) -> Result<(f64, f64)> {
    let v = theta.num_nodes();
    let g = theta.num_communities();
    if theta_hat.num_nodes() != v || theta_hat.num_communities() != g {
        return Err(Error::dim(
            "misclustering_losses",
            format!("{v} nodes, {g} communities"),
            format!("{} nodes, {} communities", theta_hat.num_nodes(), theta_hat.num_communities()),
        ));
    }
    if g > 12 {
        return Err(Error::InvalidConfig(format!("misclustering losses support at most 12 communities; got {g}")));
    }
    let hat = theta_hat.labels();
    let truth = theta.labels();
    // agree[j][h] = nodes with estimated label j and true label h.
    let mut agree = vec![vec![0usize; g]; g];
    let mut sizes = vec![0usize; g];
    for u in 0..v {
        agree[hat[u]][truth[u]] += 1;
        sizes[truth[u]] += 1;
    }
    let eval = |sigma: &[usize]| -> (f64, f64) {
        // sigma maps estimated label j to relabeled community sigma[j].
        let mut inv = vec![0usize; g];
        for (j, &h) in sigma.iter().enumerate() {
            inv[h] = j;
        }
        let total_agree: usize = (0..g).map(|j| agree[j][sigma[j]]).sum();
        let l = 2.0 * (v - total_agree) as f64 / v as f64;
        let l_tilde = (0..g)
            .filter(|&h| sizes[h] > 0)
            .map(|h| 2.0 * (sizes[h] - agree[inv[h]][h]) as f64 / sizes[h] as f64)
            .fold(0.0f64, f64::max);
        (l, l_tilde)
    };
    if g <= 8 {
        let mut best_l = f64::INFINITY;
        let mut best_lt = f64::INFINITY;
        let mut sigma: Vec<usize> = (0..g).collect();
        permutations(&mut sigma, 0, &mut |perm| {
            let (l, lt) = eval(perm);
            best_l = best_l.min(l);
            best_lt = best_lt.min(lt);
        });
        Ok((best_l, best_lt))
    } else {
        let mut cost = ndarray::Array2::zeros((g, g));
        for j in 0..g {
            for h in 0..g {
                cost[[j, h]] = -(agree[j][h] as f64);
            }
        }
        let (sigma, _) = linalg::min_cost_assignment(&cost.view())?;
        Ok(eval(&sigma))
    }
}

/// Visit all permutations of `items[at..]` in place.
fn permutations(items: &mut Vec<usize>, at: usize, visit: &mut impl FnMut(&[usize])) {
    if at == items.len() {
        visit(items);
        return;
    }
    for i in at..items.len() {
        items.swap(at, i);
        permutations(items, at + 1, visit);
        items.swap(at, i);
    }
    let _ = items;
}

/// Fractions of total variance carried by the top `r_max` principal
/// components of the sample covariance (eigenvalues clamped at zero and
/// divided by the trace).
pub fn explained_variance_profile(data: &NetworkDataset, r_max: usize) -> Result<Array1<f64>> {
    let d = data.num_edges();
    let n = data.num_subjects();
    if r_max < 1 || r_max > d.min(n) {
        return Err(Error::InvalidConfig(format!(
            "need 1 <= r_max <= min(d, n) = {}; got {r_max}",
            d.min(n)
        )));
    }
    let gram = centered_gram(data);
    let total: f64 = gram.diagonal().sum();
    let (values, _) = linalg::sym_eigen_desc(&gram.matrix().view())?;
    Ok(Array1::from_iter(values.iter().take(r_max).map(|&l| {
        if total > 0.0 {
            l.max(0.0) / total
        } else {
            0.0
        }
    })))
}

/// Row norms of an embedding sorted in descending order.
pub fn edge_norm_profile(q_hat: &EmbeddingMatrix) -> Array1<f64> {
    let mut norms: Vec<f64> = q_hat.row_norms().to_vec();
    norms.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    Array1::from_vec(norms)
}

/// One aggregated experiment result: a design cell, a method, a metric, and
/// its per-replication values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub n: usize,
    pub v: usize,
    pub d: usize,
    pub r: usize,
    pub sigma_xi: f64,
    pub method: String,
    pub task: String,
    pub metric: String,
    /// Per-replication values (successful replications only).
    pub values: Vec<f64>,
    pub mean: f64,
    /// Standard error: sample standard deviation over `sqrt(len(values))`.
    pub se: f64,
    /// `"ok"`, or a note on how many replications failed.
    pub status: String,
}

impl ExperimentRecord {
    /// Build a record, computing the mean and standard error.
    #[allow(clippy::too_many_arguments)]
    pub fn from_values(
        n: usize,
        v: usize,
        d: usize,
        r: usize,
        sigma_xi: f64,
        method: impl Into<String>,
        task: impl Into<String>,
        metric: impl Into<String>,
        values: Vec<f64>,
        status: impl Into<String>,
    ) -> Self {
        let (mean, se) = mean_se(&values);
        ExperimentRecord {
            n,
            v,
            d,
            r,
            sigma_xi,
            method: method.into(),
            task: task.into(),
            metric: metric.into(),
            values,
            mean,
            se,
            status: status.into(),
        }
    }
}

/// Mean and standard error (sample sd / sqrt(count)); both zero for empty
/// input, se zero for a single value.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let k = values.len();
    if k == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / k as f64;
    if k == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (k - 1) as f64;
    (mean, (var / k as f64).sqrt())
}

/// Format a fraction-valued mean and standard error as percentages:
/// `"97.6(0.4)"`.
pub fn format_mean_se_percent(mean: f64, se: f64) -> String {
    format!("{:.1}({:.1})", mean * 100.0, se * 100.0)
}
