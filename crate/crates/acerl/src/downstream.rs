//! Downstream tasks on a fitted edge embedding: subject embeddings and
//! classification, edge selection by row norm, and spectral community
//! detection on the induced node similarity.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::core::{EdgeIndexMap, EmbeddingMatrix, NetworkDataset, SubjectEmbedding};
use crate::error::{Error, Result};
use crate::linalg;

/// Condition-number threshold beyond which the normal equations are ridged.
const COND_LIMIT: f64 = 1e12;
/// Node degrees at or below this are treated as isolated.
const DEGREE_FLOOR: f64 = 1e-12;
/// Ridge scale of the logistic Newton solver.
/// Ridge strength for the logistic readout. Kept near zero on purpose: the
/// readout should approximate the unregularized maximum-likelihood rule —
/// the best linear classifier the embedding supports — and the ridge exists
/// only to keep the optimum finite and the Newton system well posed when
/// the classes are separable.
const LOGISTIC_RIDGE: f64 = 1e-6;

/// Linear classifier on subject embeddings with a logistic link.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LinearClassifier {
    /// Coefficients, one per embedding dimension.
    pub w: Array1<f64>,
    /// Intercept.
    pub intercept: f64,
}

impl LinearClassifier {
    /// Class-1 probability for one embedding.
    pub fn probability(&self, z: &ArrayView1<f64>) -> f64 {
        sigmoid(self.w.dot(z) + self.intercept)
    }
}

/// Hard community assignment of `v` nodes into `G` groups.
#[derive(Clone, Debug, PartialEq)]
pub struct CommunityAssignment {
    theta: Array2<f64>,
    g: usize,
}

impl CommunityAssignment {
    /// Build from per-node labels in `0..g`.
    pub fn from_labels(labels: &[usize], g: usize) -> Result<Self> {
        if g < 1 {
            return Err(Error::InvalidConfig("need at least one community".into()));
        }
        if labels.is_empty() {
            return Err(Error::InvalidConfig("an assignment needs at least one node".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= g) {
            return Err(Error::InvalidConfig(format!("label {bad} out of range for {g} communities")));
        }
        let mut theta = Array2::zeros((labels.len(), g));
        for (u, &l) in labels.iter().enumerate() {
            theta[[u, l]] = 1.0;
        }
        Ok(CommunityAssignment { theta, g })
    }

    /// One-hot membership matrix, `v x G`.
    pub fn theta(&self) -> &Array2<f64> {
        &self.theta
    }

    /// Per-node labels.
    pub fn labels(&self) -> Vec<usize> {
        self.theta
            .rows()
            .into_iter()
            .map(|row| row.iter().position(|&x| x == 1.0).expect("one-hot row"))
            .collect()
    }

    pub fn num_nodes(&self) -> usize {
        self.theta.nrows()
    }

    pub fn num_communities(&self) -> usize {
        self.g
    }
}

/// Options of the k-means stage of [`spectral_communities`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KmeansOptions {
    /// Independent k-means++ restarts; the lowest-objective run wins.
    pub restarts: usize,
    /// Lloyd iteration cap per restart.
    pub max_iter: usize,
    /// Base seed; restart `t` uses `seed + t`.
    pub seed: u64,
}

impl Default for KmeansOptions {
    fn default() -> Self {
        KmeansOptions { restarts: 20, max_iter: 100, seed: 0 }
    }
}

// ---------------------------------------------------------------------------
// Embeddings and classification
// ---------------------------------------------------------------------------

/// The `r x r` system matrix `Q̂ᵀQ̂`, ridged by `1e-10 tr(Q̂ᵀQ̂)/r` when it is
/// singular or has condition number above 1e12.
fn embedding_system(q_hat: &EmbeddingMatrix) -> Result<Array2<f64>> {
    let qm = q_hat.matrix();
    let r = qm.ncols();
    let mut gram = qm.t().dot(qm);
    let trace: f64 = gram.diag().sum();
    if trace <= 0.0 {
        return Err(Error::DegenerateEmbedding);
    }
    let (lam_max, lam_min) = linalg::sym_extreme_eigenvalues(&gram.view())?;
    if lam_min <= 0.0 || lam_max / lam_min > COND_LIMIT {
        let ridge = 1e-10 * trace / r as f64;
        for j in 0..r {
            gram[[j, j]] += ridge;
        }
    }
    Ok(gram)
}

/// Least-squares subject embeddings `ẑ_i = (Q̂ᵀQ̂)^{-1} Q̂ᵀ x_i` for every
/// subject, ridged on near-singularity; `r x n`.
pub fn subject_embeddings(q_hat: &EmbeddingMatrix, data: &NetworkDataset) -> Result<SubjectEmbedding> {
    let (d, _) = q_hat.dims();
    if data.num_edges() != d {
        return Err(Error::dim("subject_embeddings", format!("{d} edges"), format!("{}", data.num_edges())));
    }
    let system = embedding_system(q_hat)?;
    let rhs = q_hat.matrix().t().dot(data.x());
    SubjectEmbedding::new(linalg::solve_spd(&system.view(), &rhs.view())?)
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^t)` without overflow.
fn log1p_exp(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

/// Fit a ridged logistic regression on subject embeddings by damped Newton
/// iteration (at most 100 steps, gradient-norm tolerance 1e-8). The small
/// ridge (1e-6, intercept included) keeps the optimum finite even on
/// linearly separable data.
pub fn fit_classifier(z: &SubjectEmbedding, y: &[u8]) -> Result<LinearClassifier> {
    let (r, n) = z.dims();
    if y.len() != n {
        return Err(Error::dim("fit_classifier", format!("{n} labels"), format!("{}", y.len())));
    }
    if let Some(&bad) = y.iter().find(|&&l| l > 1) {
        return Err(Error::InvalidConfig(format!("labels must be 0 or 1; got {bad}")));
    }
    if y.iter().all(|&l| l == 0) || y.iter().all(|&l| l == 1) {
        return Err(Error::SingleClass);
    }
    let p = r + 1; // coefficients plus intercept
    let zm = z.matrix();
    let objective = |w: &Array1<f64>| -> f64 {
        let mut obj = 0.5 * LOGISTIC_RIDGE * w.dot(w);
        for i in 0..n {
            let t = margin(w, &zm.column(i));
            obj += log1p_exp(t) - f64::from(y[i]) * t;
        }
        obj
    };
    let mut w = Array1::zeros(p);
    let mut obj = objective(&w);
    for _ in 0..100 {
        let mut grad = &w * LOGISTIC_RIDGE;
        let mut hess = Array2::eye(p) * LOGISTIC_RIDGE;
        for i in 0..n {
            let zi = zm.column(i);
            let mu = sigmoid(margin(&w, &zi));
            let resid = mu - f64::from(y[i]);
            let weight = (mu * (1.0 - mu)).max(1e-12);
            for a in 0..p {
                let ua = feature(&zi, a);
                grad[a] += resid * ua;
                for b in 0..p {
                    hess[[a, b]] += weight * ua * feature(&zi, b);
                }
            }
        }
        if linalg::norm2(&grad) <= 1e-8 {
            break;
        }
        let step = linalg::solve_spd(&hess.view(), &grad.clone().insert_axis(Axis(1)).view())?;
        let step = step.column(0).to_owned();
        // Damping: halve the step until the objective stops increasing.
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let candidate = &w - &(&step * scale);
            let cand_obj = objective(&candidate);
            if cand_obj <= obj {
                w = candidate;
                obj = cand_obj;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let intercept = w[r];
    let coeffs = w.slice(ndarray::s![..r]).to_owned();
    Ok(LinearClassifier { w: coeffs, intercept })
}

fn margin(w: &Array1<f64>, zi: &ArrayView1<f64>) -> f64 {
    w.slice(ndarray::s![..zi.len()]).dot(zi) + w[zi.len()]
}

fn feature(zi: &ArrayView1<f64>, a: usize) -> f64 {
    if a < zi.len() {
        zi[a]
    } else {
        1.0
    }
}

/// Classify one raw edge vector: embed via the fitted `Q̂`, apply the linear
/// rule, and return 1 when the class-1 probability is at least 1/2 (ties go
/// to 1).
pub fn classify(clf: &LinearClassifier, q_hat: &EmbeddingMatrix, x0: &ArrayView1<f64>) -> Result<u8> {
    let (d, r) = q_hat.dims();
    if x0.len() != d {
        return Err(Error::dim("classify", format!("{d} entries"), format!("{}", x0.len())));
    }
    if clf.w.len() != r {
        return Err(Error::dim("classify", format!("{r} coefficients"), format!("{}", clf.w.len())));
    }
    let system = embedding_system(q_hat)?;
    let rhs = q_hat.matrix().t().dot(x0).insert_axis(Axis(1));
    let z0 = linalg::solve_spd(&system.view(), &rhs.view())?;
    let u = clf.w.dot(&z0.column(0)) + clf.intercept;
    Ok(u8::from(u >= 0.0))
}

/// [`classify`] over every subject of a dataset.
pub fn classify_all(clf: &LinearClassifier, q_hat: &EmbeddingMatrix, data: &NetworkDataset) -> Result<Vec<u8>> {
    let z = subject_embeddings(q_hat, data)?;
    if clf.w.len() != z.dims().0 {
        return Err(Error::dim("classify_all", format!("{} coefficients", z.dims().0), format!("{}", clf.w.len())));
    }
    Ok((0..data.num_subjects())
        .map(|i| u8::from(clf.w.dot(&z.matrix().column(i)) + clf.intercept >= 0.0))
        .collect())
}

// ---------------------------------------------------------------------------
// Edge selection and community detection
// ---------------------------------------------------------------------------

/// Indices of the `s` rows of `Q̂` with the largest Euclidean norms,
/// descending; ties prefer the smaller index.
pub fn select_edges(q_hat: &EmbeddingMatrix, s: usize) -> Result<Vec<usize>> {
    let (d, _) = q_hat.dims();
    if s < 1 || s > d {
        return Err(Error::InvalidConfig(format!("need 1 <= s <= d = {d}; got s = {s}")));
    }
    let norms = q_hat.row_norms();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| {
        norms[j]
            .partial_cmp(&norms[i])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    order.truncate(s);
    Ok(order)
}

/// Node similarity induced by an embedding: `Ŝ[u, u'] = ‖q̂_e‖₂` for the edge
/// `e = (u, u')`, with a zero diagonal.
pub fn build_similarity(q_hat: &EmbeddingMatrix, map: &EdgeIndexMap) -> Result<Array2<f64>> {
    let (d, _) = q_hat.dims();
    if map.edge_count() != d {
        return Err(Error::dim("build_similarity", format!("map with {d} edges"), format!("{}", map.edge_count())));
    }
    let norms = q_hat.row_norms();
    let v = map.node_count();
    let mut s = Array2::zeros((v, v));
    for (e, (u, w)) in map.iter_pairs().enumerate() {
        s[[u, w]] = norms[e];
        s[[w, u]] = norms[e];
    }
    Ok(s)
}

/// Spectral clustering of a node similarity matrix into `g` communities.
///
/// Forms the normalized matrix `L̂ = D̂^{-1/2} Ŝ D̂^{-1/2}`, takes its `g`
/// leading eigenvectors (eigenvalues in descending order), and clusters the
/// rows with k-means++ restarts, keeping the lowest within-cluster sum of
/// squares (ties go to the earlier restart). Isolated nodes (degree below
/// 1e-12) are an error, as are runs where every restart ends with an empty
/// cluster.
pub fn spectral_communities(s_hat: &ArrayView2<f64>, g: usize, opts: &KmeansOptions) -> Result<CommunityAssignment> {
    let v = s_hat.nrows();
    if s_hat.ncols() != v {
        return Err(Error::dim("spectral_communities", format!("{v}x{v}"), format!("{v}x{}", s_hat.ncols())));
    }
    if g < 1 || g > v {
        return Err(Error::InvalidConfig(format!("need 1 <= g <= v = {v}; got g = {g}")));
    }
    let max_dev = (0..v)
        .flat_map(|i| (0..i).map(move |j| (i, j)))
        .map(|(i, j)| (s_hat[[i, j]] - s_hat[[j, i]]).abs())
        .fold(0.0f64, f64::max);
    if max_dev > 1e-10 {
        return Err(Error::Asymmetric { max_dev, tol: 1e-10 });
    }
    let degrees = s_hat.sum_axis(Axis(1));
    if let Some((u, &deg)) = degrees.iter().enumerate().find(|(_, &x)| x <= DEGREE_FLOOR) {
        return Err(Error::IsolatedNode { vertex: u, degree: deg });
    }
    let inv_sqrt = degrees.mapv(|x| 1.0 / x.sqrt());
    let mut l = s_hat.to_owned();
    for i in 0..v {
        for j in 0..v {
            l[[i, j]] *= inv_sqrt[i] * inv_sqrt[j];
        }
    }
    let (_, vectors) = linalg::sym_eigen_desc(&l.view())?;
    let gamma = vectors.slice(ndarray::s![.., ..g]).to_owned();
    let labels = kmeans_rows(&gamma.view(), g, opts)?;
    CommunityAssignment::from_labels(&labels, g)
}

/// Restarted k-means++ on the rows of a matrix; returns the best run's
/// labels. Restarts ending with an empty cluster are discarded.
fn kmeans_rows(points: &ArrayView2<f64>, k: usize, opts: &KmeansOptions) -> Result<Vec<usize>> {
    let v = points.nrows();
    let mut best: Option<(f64, Vec<usize>)> = None;
    for restart in 0..opts.restarts.max(1) {
        let mut rng = ChaCha12Rng::seed_from_u64(opts.seed.wrapping_add(restart as u64));
        if let Some((objective, labels)) = lloyd_once(points, k, opts.max_iter, &mut rng) {
            let better = match &best {
                None => true,
                Some((best_obj, _)) => objective < *best_obj,
            };
            if better {
                best = Some((objective, labels));
            }
        }
    }
    match best {
        Some((_, labels)) => Ok(labels),
        None => Err(Error::EmptyCluster { k, v }),
    }
}

/// One k-means++ seeded Lloyd run; `None` when a cluster empties.
fn lloyd_once(points: &ArrayView2<f64>, k: usize, max_iter: usize, rng: &mut ChaCha12Rng) -> Option<(f64, Vec<usize>)> {
    let v = points.nrows();
    let dim = points.ncols();
    let mut centers = Array2::zeros((k, dim));
    // k-means++ seeding.
    let first = rng.random_range(0..v);
    centers.row_mut(0).assign(&points.row(first));
    let mut dist2: Vec<f64> = (0..v).map(|u| row_dist2(points, u, &centers.row(0))).collect();
    for c in 1..k {
        let total: f64 = dist2.iter().sum();
        let chosen = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = v - 1;
            for (u, &w) in dist2.iter().enumerate() {
                if target < w {
                    pick = u;
                    break;
                }
                target -= w;
            }
            pick
        } else {
            rng.random_range(0..v)
        };
        centers.row_mut(c).assign(&points.row(chosen));
        for u in 0..v {
            dist2[u] = dist2[u].min(row_dist2(points, u, &centers.row(c)));
        }
    }
    // Lloyd iterations.
    let mut labels = vec![0usize; v];
    for _ in 0..max_iter {
        let mut changed = false;
        for u in 0..v {
            let mut best_c = 0;
            let mut best_d = f64::INFINITY;
            for c in 0..k {
                let d2 = row_dist2(points, u, &centers.row(c));
                if d2 < best_d {
                    best_d = d2;
                    best_c = c;
                }
            }
            if labels[u] != best_c {
                labels[u] = best_c;
                changed = true;
            }
        }
        let mut counts = vec![0usize; k];
        let mut sums = Array2::<f64>::zeros((k, dim));
        for u in 0..v {
            counts[labels[u]] += 1;
            let mut row = sums.row_mut(labels[u]);
            row += &points.row(u);
        }
        if counts.iter().any(|&c| c == 0) {
            return None;
        }
        for c in 0..k {
            let mut row = sums.row_mut(c);
            row.mapv_inplace(|x| x / counts[c] as f64);
        }
        centers = sums;
        if !changed {
            break;
        }
    }
    let objective: f64 = (0..v).map(|u| row_dist2(points, u, &centers.row(labels[u]))).sum();
    let mut counts = vec![0usize; k];
    for &l in &labels {
        counts[l] += 1;
    }
    if counts.iter().any(|&c| c == 0) {
        return None;
    }
    Some((objective, labels))
}

fn row_dist2(points: &ArrayView2<f64>, u: usize, center: &ArrayView1<f64>) -> f64 {
    points
        .row(u)
        .iter()
        .zip(center.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}
