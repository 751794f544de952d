//! Seeded synthetic-data generators: a planted row-sparse design, a
//! community-structured design, and randomized train/test splits.
//!
//! All generators consume a single ChaCha12 stream per call in a fixed draw
//! order, so identical specs produce bit-identical outputs.

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::core::{EdgeIndexMap, NetworkDataset};
use crate::downstream::CommunityAssignment;
use crate::error::{Error, Result};

fn default_s_star() -> usize {
    50
}

/// Specification of the planted row-sparse design.
///
/// Signal rows (a uniformly random subset `C*` of `s_star` edges) follow
/// `x_{i,e} = 1.25 q_eᵀ z_i + σ_ξ ((e+1)/d) ξ_{i,e}` with `q_e`, `z_i`,
/// `ξ_{i,e}` all standard normal; the remaining rows are pure noise. Labels
/// are `y_i = 1{z_{i,1} > z_{i,2}}`, so `r >= 2` is required. The benchmark
/// grid uses `sigma_xi ∈ {0, 2, 4, 6}`, but any finite `sigma_xi >= 0` is
/// accepted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseSimSpec {
    /// Number of subjects.
    pub n: usize,
    /// Number of network nodes; the edge count is `d = v(v-1)/2`.
    pub v: usize,
    /// Latent dimension (at least 2; labels compare the first two entries).
    pub r: usize,
    /// Planted support size.
    #[serde(default = "default_s_star")]
    pub s_star: usize,
    /// Noise level.
    pub sigma_xi: f64,
    /// Generator seed.
    pub seed: u64,
}

impl SparseSimSpec {
    /// Spec with the default support size of 50.
    pub fn new(n: usize, v: usize, r: usize, sigma_xi: f64, seed: u64) -> Self {
        SparseSimSpec { n, v, r, s_star: default_s_star(), sigma_xi, seed }
    }

    /// Check field consistency; `d` is derived from `v`.
    pub fn validate(&self) -> Result<()> {
        if self.v < 2 {
            return Err(Error::InvalidConfig(format!("need v >= 2 nodes; got {}", self.v)));
        }
        let d = self.v * (self.v - 1) / 2;
        if self.n < 2 {
            return Err(Error::InvalidConfig(format!("need n >= 2 subjects; got {}", self.n)));
        }
        if self.r < 2 {
            return Err(Error::InvalidConfig(format!(
                "need r >= 2 (labels compare the first two latent entries); got {}",
                self.r
            )));
        }
        if self.s_star < 1 || self.s_star > d {
            return Err(Error::InvalidConfig(format!(
                "need 1 <= s_star <= d = {d}; got {}",
                self.s_star
            )));
        }
        if !self.sigma_xi.is_finite() || self.sigma_xi < 0.0 {
            return Err(Error::InvalidConfig(format!("need finite sigma_xi >= 0; got {}", self.sigma_xi)));
        }
        Ok(())
    }
}

/// Ground truth attached to a planted sparse dataset.
#[derive(Clone, Debug)]
pub struct SparseGroundTruth {
    /// Effective embedding: row `e` is `1.25 q_e` on the support, zero off it.
    pub q_star: Array2<f64>,
    /// Latent subject positions, `r x n`.
    pub z: Array2<f64>,
    /// Planted support `C*`, sorted ascending.
    pub support: Vec<usize>,
    /// Binary subject labels.
    pub labels: Vec<u8>,
}

/// Generate a planted row-sparse dataset with its ground truth.
///
/// Draw order per call: `Q` (row-major), `Z` (subject-major), support
/// indices, then one noise variate per (subject, edge) pair. Noise is drawn
/// even when `sigma_xi = 0`, so changing only the noise level keeps the
/// signal identical for a given seed.
pub fn gen_sparse(spec: &SparseSimSpec) -> Result<(NetworkDataset, SparseGroundTruth)> {
    spec.validate()?;
    let d = spec.v * (spec.v - 1) / 2;
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    let q = draw_normal_matrix(&mut rng, d, spec.r);
    let z = draw_latents(&mut rng, spec.r, spec.n);
    let mut support = rand::seq::index::sample(&mut rng, d, spec.s_star).into_vec();
    support.sort_unstable();
    let mut on_support = vec![false; d];
    for &e in &support {
        on_support[e] = true;
    }
    let mut q_star = Array2::zeros((d, spec.r));
    for &e in &support {
        for j in 0..spec.r {
            q_star[[e, j]] = 1.25 * q[[e, j]];
        }
    }
    let mut x = Array2::zeros((d, spec.n));
    for i in 0..spec.n {
        for e in 0..d {
            let xi: f64 = rng.sample(StandardNormal);
            let signal = if on_support[e] {
                1.25 * q.row(e).dot(&z.column(i))
            } else {
                0.0
            };
            let noise_sd = (e + 1) as f64 / d as f64;
            x[[e, i]] = signal + spec.sigma_xi * noise_sd * xi;
        }
    }
    let labels: Vec<u8> = (0..spec.n).map(|i| u8::from(z[[0, i]] > z[[1, i]])).collect();
    let data = NetworkDataset::from_matrix(x)?
        .with_edge_map(EdgeIndexMap::new(spec.v)?)?
        .with_labels(labels.clone())?;
    Ok((data, SparseGroundTruth { q_star, z, support, labels }))
}

fn default_jitter() -> f64 {
    0.0
}

/// Specification of the community-structured design.
///
/// Nodes split into `g` near-equal communities; community `h` draws a level
/// `c_h ~ Uniform(0.1, 1.1)` shared by its members. Edge `e = (u, u')` gets
/// scale `5 sqrt(c_u c_{u'}) 10^{-|c_u - c_{u'}|}`, and
/// `x_{i,e} = scale_e q_eᵀ z_i + σ_ξ ((e+1)/d) ξ_{i,e}`. An optional
/// `jitter` adds per-node normal noise (sd = `jitter`) to the levels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommunitySimSpec {
    /// Number of subjects.
    pub n: usize,
    /// Number of network nodes.
    pub v: usize,
    /// Latent dimension.
    pub r: usize,
    /// Number of communities.
    pub g: usize,
    /// Noise level.
    pub sigma_xi: f64,
    /// Generator seed.
    pub seed: u64,
    /// Per-node level noise (0 keeps levels exactly block-constant).
    #[serde(default = "default_jitter")]
    pub jitter: f64,
}

impl CommunitySimSpec {
    pub fn new(n: usize, v: usize, r: usize, g: usize, sigma_xi: f64, seed: u64) -> Self {
        CommunitySimSpec { n, v, r, g, sigma_xi, seed, jitter: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.v < 2 {
            return Err(Error::InvalidConfig(format!("need v >= 2 nodes; got {}", self.v)));
        }
        if self.n < 2 {
            return Err(Error::InvalidConfig(format!("need n >= 2 subjects; got {}", self.n)));
        }
        if self.r < 1 {
            return Err(Error::InvalidConfig("need r >= 1".into()));
        }
        if self.g < 1 || self.g > self.v {
            return Err(Error::InvalidConfig(format!(
                "need 1 <= g <= v = {}; got g = {}",
                self.v, self.g
            )));
        }
        if !self.sigma_xi.is_finite() || self.sigma_xi < 0.0 {
            return Err(Error::InvalidConfig(format!("need finite sigma_xi >= 0; got {}", self.sigma_xi)));
        }
        if !self.jitter.is_finite() || self.jitter < 0.0 {
            return Err(Error::InvalidConfig(format!("need finite jitter >= 0; got {}", self.jitter)));
        }
        Ok(())
    }
}

/// Ground truth attached to a community dataset.
#[derive(Clone, Debug)]
pub struct CommunityGroundTruth {
    /// True membership (block-contiguous: the first nodes form community 0).
    pub assignment: CommunityAssignment,
    /// Community levels `c_h` in community order.
    pub levels: Array1<f64>,
    /// Effective embedding: row `e` is `scale_e q_e`.
    pub q_eff: Array2<f64>,
}

/// Generate a community-structured dataset with its ground truth.
///
/// Community sizes differ by at most one (the first `v mod g` communities
/// take the extra node) and membership is block-contiguous in node order.
/// Draw order: levels (community order), per-node jitter (only when
/// `jitter > 0`), `Q` (row-major), `Z` (subject-major), then noise as in
/// [`gen_sparse`].
pub fn gen_community(spec: &CommunitySimSpec) -> Result<(NetworkDataset, CommunityGroundTruth)> {
    spec.validate()?;
    let d = spec.v * (spec.v - 1) / 2;
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    let node_labels = block_labels(spec.v, spec.g);
    let levels = Array1::from_iter((0..spec.g).map(|_| rng.random_range(0.1..1.1)));
    let node_levels: Vec<f64> = if spec.jitter > 0.0 {
        node_labels
            .iter()
            .map(|&gl| {
                let eps: f64 = rng.sample(StandardNormal);
                levels[gl] + spec.jitter * eps
            })
            .collect()
    } else {
        node_labels.iter().map(|&gl| levels[gl]).collect()
    };
    let q = draw_normal_matrix(&mut rng, d, spec.r);
    let z = draw_latents(&mut rng, spec.r, spec.n);
    let map = EdgeIndexMap::new(spec.v)?;
    let scales: Vec<f64> = (0..d)
        .map(|e| {
            let (u, w) = map.pair_of(e).expect("edge index in range");
            let (cu, cw) = (node_levels[u], node_levels[w]);
            5.0 * (cu * cw).sqrt() * 10f64.powf(-(cu - cw).abs())
        })
        .collect();
    let mut q_eff = q.clone();
    for (e, mut row) in q_eff.rows_mut().into_iter().enumerate() {
        row.mapv_inplace(|x| scales[e] * x);
    }
    let mut x = Array2::zeros((d, spec.n));
    for i in 0..spec.n {
        for e in 0..d {
            let xi: f64 = rng.sample(StandardNormal);
            let noise_sd = (e + 1) as f64 / d as f64;
            x[[e, i]] = q_eff.row(e).dot(&z.column(i)) + spec.sigma_xi * noise_sd * xi;
        }
    }
    let data = NetworkDataset::from_matrix(x)?.with_edge_map(map)?;
    let assignment = CommunityAssignment::from_labels(&node_labels, spec.g)?;
    Ok((data, CommunityGroundTruth { assignment, levels, q_eff }))
}

/// Block-contiguous community labels with sizes differing by at most one.
fn block_labels(v: usize, g: usize) -> Vec<usize> {
    let base = v / g;
    let extra = v % g;
    let mut labels = Vec::with_capacity(v);
    for h in 0..g {
        let size = base + usize::from(h < extra);
        labels.extend(std::iter::repeat_n(h, size));
    }
    labels
}

/// Randomly split subjects into a training set of `floor(frac * n)` and the
/// complement; both sides keep subjects in their original order and carry
/// labels and trait values through.
pub fn split_train_test(
    data: &NetworkDataset,
    frac: f64,
    seed: u64,
) -> Result<(NetworkDataset, NetworkDataset)> {
    if !(frac > 0.0 && frac < 1.0) {
        return Err(Error::InvalidConfig(format!("need 0 < frac < 1; got {frac}")));
    }
    let n = data.num_subjects();
    let n_train = (frac * n as f64).floor() as usize;
    if n_train < 2 || n - n_train < 2 {
        return Err(Error::InvalidConfig(format!(
            "split leaves fewer than 2 subjects on one side ({n_train} train, {} test)",
            n - n_train
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let mut train_idx = order[..n_train].to_vec();
    let mut test_idx = order[n_train..].to_vec();
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    Ok((data.subset_subjects(&train_idx)?, data.subset_subjects(&test_idx)?))
}

fn draw_normal_matrix(rng: &mut ChaCha12Rng, rows: usize, cols: usize) -> Array2<f64> {
    let mut m = Array2::zeros((rows, cols));
    for i in 0..rows {
        for j in 0..cols {
            m[[i, j]] = rng.sample(StandardNormal);
        }
    }
    m
}

/// Latents are stored `r x n` but drawn subject-by-subject.
fn draw_latents(rng: &mut ChaCha12Rng, r: usize, n: usize) -> Array2<f64> {
    let mut z = Array2::zeros((r, n));
    for i in 0..n {
        for j in 0..r {
            z[[j, i]] = rng.sample(StandardNormal);
        }
    }
    z
}
