//! Sparse-PCA baseline tests: agreement with dense PCA at full sparsity,
//! planted-support recovery, the variance-chasing failure mode under
//! heteroscedastic noise, and the whitened embedding map.

use acerl::core::NetworkDataset;
use acerl::estimator::{fit, AcerlConfig};
use acerl::spca::{
    fit_spca, load_spca_model, save_spca_model, spca_embed, spca_embed_all, SpcaResult,
};
use acerl::Error;
use approx::assert_abs_diff_eq;
use ndarray::{array, Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

fn normal_matrix(rows: usize, cols: usize, rng: &mut ChaCha12Rng) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.sample::<f64, _>(StandardNormal))
}

/// Sample covariance of the dataset, assembled the slow way.
fn covariance(x: &Array2<f64>) -> Array2<f64> {
    let (d, n) = x.dim();
    let mut m = Array2::zeros((d, d));
    let means: Vec<f64> = (0..d).map(|e| x.row(e).sum() / n as f64).collect();
    for i in 0..n {
        for e in 0..d {
            for f in 0..d {
                m[[e, f]] += (x[[e, i]] - means[e]) * (x[[f, i]] - means[f]) / n as f64;
            }
        }
    }
    m
}

#[test]
fn full_sparsity_reduces_to_dense_pca() {
    let mut rng = ChaCha12Rng::seed_from_u64(300);
    let (d, n, r) = (12, 60, 3);
    let x = normal_matrix(d, n, &mut rng);
    let data = NetworkDataset::from_matrix(x.clone()).unwrap();
    let res = fit_spca(&data, r, d).unwrap();
    assert!(res.converged);
    // compare subspace projectors against a power-iteration-free oracle:
    // U must span the same top-r eigenspace, so P = U U' reproduces itself
    // under the covariance up to the captured eigenvalues
    let sigma = covariance(&x);
    let proj = res.u_x.dot(&res.u_x.t());
    let left = sigma.dot(&proj);
    let right = proj.dot(&sigma.dot(&proj));
    let diff = (&left - &right).mapv(|v| v * v).sum().sqrt();
    assert!(diff < 1e-6, "top eigenspace not invariant: residual {diff:.2e}");
    // orthonormal columns
    let gram = res.u_x.t().dot(&res.u_x);
    assert_abs_diff_eq!(gram, Array2::eye(r), epsilon = 1e-8);
    // captured variances match the quadratic form and come out descending
    for j in 0..r {
        let col = res.u_x.column(j);
        let quad = col.dot(&sigma.dot(&col));
        assert_abs_diff_eq!(res.lambda_r[j], quad, epsilon = 1e-8);
    }
    assert!(res.lambda_r[0] >= res.lambda_r[1] && res.lambda_r[1] >= res.lambda_r[2]);
}

#[test]
fn planted_support_is_recovered_under_homogeneous_noise() {
    let (d, r, s_star, n) = (40, 2, 10, 1000);
    for seed in 0..10 {
        let mut rng = ChaCha12Rng::seed_from_u64(400 + seed);
        let mut q = Array2::zeros((d, r));
        for e in 0..s_star {
            for j in 0..r {
                q[[e, j]] = rng.sample::<f64, _>(StandardNormal);
            }
        }
        let z = normal_matrix(r, n, &mut rng);
        let noise = normal_matrix(d, n, &mut rng) * 0.5;
        let x = q.dot(&z) + &noise;
        let data = NetworkDataset::from_matrix(x).unwrap();
        let res = fit_spca(&data, r, s_star).unwrap();
        assert_eq!(res.support, (0..s_star).collect::<Vec<_>>(), "seed {seed}");
    }
}

#[test]
fn heteroscedastic_noise_lures_spca_away_from_the_signal() {
    // planted signal rows have variance about two; the remaining rows carry
    // pure noise with variance twenty-five. A variance-seeking method must
    // spend its sparsity budget on the noise rows, while the masked
    // contrastive fit keeps the planted ones.
    let (d, r, s_star, n) = (40, 2, 10, 2000);
    let mut rng = ChaCha12Rng::seed_from_u64(500);
    let mut q = Array2::zeros((d, r));
    for e in 0..s_star {
        for j in 0..r {
            q[[e, j]] = rng.sample::<f64, _>(StandardNormal);
        }
    }
    let z = normal_matrix(r, n, &mut rng);
    let mut x = q.dot(&z);
    for e in s_star..d {
        for i in 0..n {
            x[[e, i]] += 5.0 * rng.sample::<f64, _>(StandardNormal);
        }
    }
    let data = NetworkDataset::from_matrix(x).unwrap();
    let spca = fit_spca(&data, r, s_star).unwrap();
    let spca_hits = spca.support.iter().filter(|&&e| e < s_star).count();
    assert!(
        spca_hits <= s_star / 2,
        "spca should chase the loud noise rows, yet kept {spca_hits}/{s_star} signal rows"
    );
    let mut config = AcerlConfig::new(r, s_star, d, n);
    config.seed = 1;
    let masked = fit(&data, &config, None).unwrap();
    let masked_hits = masked.q_hat.row_support().iter().filter(|&&e| e < s_star).count();
    assert!(
        masked_hits >= s_star - 1,
        "masked fit should keep the signal rows, got {masked_hits}/{s_star}"
    );
}

#[test]
fn embedding_whitens_by_the_captured_variances() {
    let res = SpcaResult {
        u_x: array![[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]],
        lambda_r: array![4.0, 1.0],
        support: vec![0, 1],
        converged: true,
        iterations: 3,
    };
    let z = spca_embed(&res, &array![2.0, 3.0, 7.0].view()).unwrap();
    assert_abs_diff_eq!(z, array![1.0, 3.0], epsilon = 1e-15);
}

#[test]
fn embedding_rejects_nonpositive_variances() {
    let res = SpcaResult {
        u_x: array![[1.0, 0.0], [0.0, 1.0]],
        lambda_r: array![1.0, 0.0],
        support: vec![0, 1],
        converged: true,
        iterations: 1,
    };
    match spca_embed(&res, &array![1.0, 1.0].view()) {
        Err(Error::DegenerateModel { index: 1, .. }) => {}
        other => panic!("expected a degenerate-model error, got {other:?}"),
    }
}

#[test]
fn batch_embedding_matches_the_single_vector_map() {
    let mut rng = ChaCha12Rng::seed_from_u64(600);
    let x = normal_matrix(8, 30, &mut rng);
    let data = NetworkDataset::from_matrix(x.clone()).unwrap();
    let res = fit_spca(&data, 2, 5).unwrap();
    let all = spca_embed_all(&res, &data).unwrap();
    for i in 0..30 {
        let single = spca_embed(&res, &x.column(i)).unwrap();
        assert_abs_diff_eq!(all.matrix().column(i).to_owned(), single, epsilon = 1e-12);
    }
}

#[test]
fn dimension_requests_are_validated() {
    let mut rng = ChaCha12Rng::seed_from_u64(601);
    let x = normal_matrix(6, 10, &mut rng);
    let data = NetworkDataset::from_matrix(x).unwrap();
    assert!(fit_spca(&data, 0, 6).is_err());
    assert!(fit_spca(&data, 7, 6).is_err());
    assert!(fit_spca(&data, 2, 1).is_err(), "s below r cannot hold r orthonormal rows");
    assert!(fit_spca(&data, 2, 7).is_err());
    // embedding dimension mismatch
    let res = fit_spca(&data, 2, 6).unwrap();
    assert!(spca_embed(&res, &Array1::zeros(5).view()).is_err());
}

#[test]
fn spca_models_round_trip_through_their_container() {
    let mut rng = ChaCha12Rng::seed_from_u64(602);
    let x = normal_matrix(7, 25, &mut rng);
    let data = NetworkDataset::from_matrix(x).unwrap();
    let res = fit_spca(&data, 2, 4).unwrap();
    let dir = tempfile::tempdir().unwrap();
    save_spca_model(&res, dir.path()).unwrap();
    let loaded = load_spca_model(dir.path()).unwrap();
    assert_eq!(loaded.u_x, res.u_x);
    assert_eq!(loaded.lambda_r, res.lambda_r);
    assert_eq!(loaded.support, res.support);
    assert_eq!(loaded.converged, res.converged);
    assert_eq!(loaded.iterations, res.iterations);
    // the container is typed: the other loader refuses it
    assert!(acerl::core::load_model(dir.path()).is_err());
}
