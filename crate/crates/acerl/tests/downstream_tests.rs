//! Downstream-task tests: least-squares subject embeddings, the logistic
//! classifier, norm-ranked edge selection, and spectral community detection.

use acerl::core::{EdgeIndexMap, EmbeddingMatrix, NetworkDataset, SubjectEmbedding};
use acerl::downstream::{
    build_similarity, classify, classify_all, fit_classifier, select_edges, spectral_communities,
    subject_embeddings, CommunityAssignment, KmeansOptions, LinearClassifier,
};
use acerl::metrics::rand_index;
use acerl::Error;
use approx::assert_abs_diff_eq;
use ndarray::{array, Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

fn normal_matrix(rows: usize, cols: usize, rng: &mut ChaCha12Rng) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.sample::<f64, _>(StandardNormal))
}

#[test]
fn orthonormal_embeddings_project_subjects_exactly() {
    // Q = first two coordinate axes: the least-squares embedding is the
    // plain coordinate projection
    let q = EmbeddingMatrix::new(array![[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]).unwrap();
    let x = array![[1.5, -2.0], [0.25, 4.0], [9.0, 9.0]];
    let data = NetworkDataset::from_matrix(x).unwrap();
    let z = subject_embeddings(&q, &data).unwrap();
    assert_abs_diff_eq!(*z.matrix(), array![[1.5, -2.0], [0.25, 4.0]], epsilon = 1e-12);
}

#[test]
fn subject_embeddings_satisfy_the_normal_equations() {
    let mut rng = ChaCha12Rng::seed_from_u64(700);
    let q_raw = normal_matrix(8, 3, &mut rng);
    let x = normal_matrix(8, 5, &mut rng);
    let q = EmbeddingMatrix::new(q_raw.clone()).unwrap();
    let data = NetworkDataset::from_matrix(x.clone()).unwrap();
    let z = subject_embeddings(&q, &data).unwrap();
    // residuals are orthogonal to the fitted subspace
    let resid = &x - &q_raw.dot(z.matrix());
    let orth = q_raw.t().dot(&resid);
    assert!(orth.mapv(f64::abs).sum() < 1e-8, "normal equations violated: {orth:?}");
}

#[test]
fn a_zero_embedding_cannot_embed_subjects() {
    let q = EmbeddingMatrix::new(Array2::zeros((4, 2))).unwrap();
    let data = NetworkDataset::from_matrix(Array2::zeros((4, 3))).unwrap();
    match subject_embeddings(&q, &data) {
        Err(Error::DegenerateEmbedding) => {}
        other => panic!("expected a degenerate-embedding error, got {other:?}"),
    }
}

#[test]
fn rank_deficient_embeddings_fall_back_to_a_ridged_solve() {
    // two identical columns: Q'Q is singular, yet the solve must succeed
    let q = EmbeddingMatrix::new(array![[1.0, 1.0], [1.0, 1.0], [0.0, 0.0]]).unwrap();
    let data = NetworkDataset::from_matrix(array![[2.0, -1.0], [2.0, 0.5], [5.0, 0.0]]).unwrap();
    let z = subject_embeddings(&q, &data).unwrap();
    assert!(z.matrix().iter().all(|v| v.is_finite()));
}

#[test]
fn separable_embeddings_classify_their_training_data_perfectly() {
    let z = SubjectEmbedding::new(array![[-2.0, -1.5, -1.0, 1.0, 1.5, 2.0]]).unwrap();
    let y = vec![0, 0, 0, 1, 1, 1];
    let clf = fit_classifier(&z, &y).unwrap();
    let q = EmbeddingMatrix::new(array![[1.0]]).unwrap();
    let x = NetworkDataset::from_matrix(array![[-2.0, -1.5, -1.0, 1.0, 1.5, 2.0]]).unwrap();
    let preds = classify_all(&clf, &q, &x).unwrap();
    assert_eq!(preds, y);
}

#[test]
fn labels_uncorrelated_with_the_embedding_stay_near_chance() {
    let mut rng = ChaCha12Rng::seed_from_u64(701);
    let n = 1000;
    let z = SubjectEmbedding::new(normal_matrix(2, n, &mut rng)).unwrap();
    let y: Vec<u8> = (0..n).map(|_| u8::from(rng.random::<f64>() < 0.5)).collect();
    let clf = fit_classifier(&z, &y).unwrap();
    let hits = (0..n)
        .filter(|&i| {
            let u = clf.w.dot(&z.matrix().column(i)) + clf.intercept;
            u8::from(u >= 0.0) == y[i]
        })
        .count();
    let acc = hits as f64 / n as f64;
    assert!((0.4..=0.62).contains(&acc), "null accuracy {acc} strays far from one half");
}

#[test]
fn a_well_specified_logistic_model_is_recovered_to_five_degrees() {
    let mut rng = ChaCha12Rng::seed_from_u64(702);
    let n = 10_000;
    let z = normal_matrix(2, n, &mut rng);
    let w_star = array![2.0, -1.0];
    let b_star = 0.5;
    let y: Vec<u8> = (0..n)
        .map(|i| {
            let u: f64 = w_star.dot(&z.column(i)) + b_star;
            let p = 1.0 / (1.0 + (-u).exp());
            u8::from(rng.random::<f64>() < p)
        })
        .collect();
    let clf = fit_classifier(&SubjectEmbedding::new(z).unwrap(), &y).unwrap();
    let cosine = clf.w.dot(&w_star) / (clf.w.dot(&clf.w).sqrt() * w_star.dot(&w_star).sqrt());
    let degrees = cosine.clamp(-1.0, 1.0).acos().to_degrees();
    assert!(degrees < 5.0, "fitted direction {degrees:.2} degrees off the truth");
    assert!((clf.intercept - b_star).abs() < 0.2, "intercept {} far from {b_star}", clf.intercept);
}

#[test]
fn the_decision_tie_goes_to_the_positive_class() {
    let clf = LinearClassifier { w: Array1::zeros(2), intercept: 0.0 };
    let q = EmbeddingMatrix::new(array![[1.0, 0.0], [0.0, 1.0]]).unwrap();
    let x0 = array![0.7, -0.3];
    assert_eq!(classify(&clf, &q, &x0.view()).unwrap(), 1);
    assert_eq!(clf.probability(&array![0.0, 0.0].view()), 0.5);
}

#[test]
fn classification_flips_with_the_sign_of_the_score() {
    let clf = LinearClassifier { w: array![1.0], intercept: -1.0 };
    let q = EmbeddingMatrix::new(array![[1.0]]).unwrap();
    assert_eq!(classify(&clf, &q, &array![2.0].view()).unwrap(), 1);
    assert_eq!(classify(&clf, &q, &array![0.5].view()).unwrap(), 0);
    // score exactly zero: positive by the tie rule
    assert_eq!(classify(&clf, &q, &array![1.0].view()).unwrap(), 1);
}

#[test]
fn classifier_requires_binary_labels_with_both_classes_present() {
    let z = SubjectEmbedding::new(array![[0.0, 1.0, 2.0]]).unwrap();
    match fit_classifier(&z, &[1, 1, 1]) {
        Err(Error::SingleClass) => {}
        other => panic!("expected a single-class error, got {other:?}"),
    }
    assert!(fit_classifier(&z, &[0, 1, 2]).is_err());
    assert!(fit_classifier(&z, &[0, 1]).is_err(), "label count must match subjects");
}

#[test]
fn edges_are_selected_by_descending_norm_with_index_ties() {
    let q = EmbeddingMatrix::new(array![[1.0, 0.0], [3.0, 0.0], [0.0, 3.0], [0.5, 0.0]]).unwrap();
    assert_eq!(select_edges(&q, 2).unwrap(), vec![1, 2]);
    assert_eq!(select_edges(&q, 3).unwrap(), vec![1, 2, 0]);
    assert_eq!(select_edges(&q, 4).unwrap(), vec![1, 2, 0, 3]);
    assert!(select_edges(&q, 0).is_err());
    assert!(select_edges(&q, 5).is_err());
}

#[test]
fn similarity_places_edge_norms_off_diagonal() {
    let q = EmbeddingMatrix::new(array![[1.0, 0.0], [2.0, 0.0], [0.0, 3.0]]).unwrap();
    let map = EdgeIndexMap::new(3).unwrap();
    let s = build_similarity(&q, &map).unwrap();
    let expected = array![[0.0, 1.0, 2.0], [1.0, 0.0, 3.0], [2.0, 3.0, 0.0]];
    assert_abs_diff_eq!(s, expected, epsilon = 1e-14);
}

/// Two well-separated cliques on six nodes.
fn two_clique_similarity() -> Array2<f64> {
    let v = 6;
    let mut s = Array2::zeros((v, v));
    for u in 0..v {
        for w in 0..v {
            if u != w && (u < 3) == (w < 3) {
                s[[u, w]] = 1.0;
            }
        }
    }
    // a faint bridge so no node is isolated-ish, still clearly two blocks
    s[[2, 3]] = 0.05;
    s[[3, 2]] = 0.05;
    s
}

#[test]
fn two_cliques_split_into_their_blocks() {
    let s = two_clique_similarity();
    let got = spectral_communities(&s.view(), 2, &KmeansOptions::default()).unwrap();
    let truth = vec![0, 0, 0, 1, 1, 1];
    assert_abs_diff_eq!(rand_index(&got.labels(), &truth).unwrap(), 1.0, epsilon = 0.0);
    assert_eq!(got.num_communities(), 2);
    assert_eq!(got.num_nodes(), 6);
}

#[test]
fn relabeling_nodes_relabels_communities_consistently() {
    let s = two_clique_similarity();
    // swap nodes 0 and 5
    let perm = [5, 1, 2, 3, 4, 0];
    let mut sp = Array2::zeros((6, 6));
    for u in 0..6 {
        for w in 0..6 {
            sp[[perm[u], perm[w]]] = s[[u, w]];
        }
    }
    let opts = KmeansOptions::default();
    let base = spectral_communities(&s.view(), 2, &opts).unwrap().labels();
    let moved = spectral_communities(&sp.view(), 2, &opts).unwrap().labels();
    let mut expected = vec![0; 6];
    for u in 0..6 {
        expected[perm[u]] = base[u];
    }
    assert_abs_diff_eq!(rand_index(&moved, &expected).unwrap(), 1.0, epsilon = 0.0);
}

#[test]
fn a_single_community_swallows_every_node() {
    let s = two_clique_similarity();
    let got = spectral_communities(&s.view(), 1, &KmeansOptions::default()).unwrap();
    assert_eq!(got.labels(), vec![0; 6]);
}

#[test]
fn isolated_nodes_are_reported_by_index() {
    let mut s = two_clique_similarity();
    for w in 0..6 {
        s[[4, w]] = 0.0;
        s[[w, 4]] = 0.0;
    }
    match spectral_communities(&s.view(), 2, &KmeansOptions::default()) {
        Err(Error::IsolatedNode { vertex: 4, .. }) => {}
        other => panic!("expected an isolated-node error, got {other:?}"),
    }
}

#[test]
fn asymmetric_similarities_are_rejected() {
    let mut s = two_clique_similarity();
    s[[0, 1]] += 1e-6;
    assert!(matches!(
        spectral_communities(&s.view(), 2, &KmeansOptions::default()),
        Err(Error::Asymmetric { .. })
    ));
}

#[test]
fn community_counts_are_validated() {
    let s = two_clique_similarity();
    assert!(spectral_communities(&s.view(), 0, &KmeansOptions::default()).is_err());
    assert!(spectral_communities(&s.view(), 7, &KmeansOptions::default()).is_err());
}

#[test]
fn community_detection_is_deterministic_in_its_seed() {
    let s = two_clique_similarity();
    let a = spectral_communities(&s.view(), 2, &KmeansOptions { seed: 5, ..KmeansOptions::default() }).unwrap();
    let b = spectral_communities(&s.view(), 2, &KmeansOptions { seed: 5, ..KmeansOptions::default() }).unwrap();
    assert_eq!(a.labels(), b.labels());
    assert_eq!(a.theta(), b.theta());
}

#[test]
fn membership_matrices_are_one_hot_rows() {
    let assignment = CommunityAssignment::from_labels(&[0, 2, 1, 2], 3).unwrap();
    let theta = assignment.theta();
    assert_eq!(theta.dim(), (4, 3));
    for u in 0..4 {
        let row_sum: f64 = theta.row(u).sum();
        assert_eq!(row_sum, 1.0);
    }
    assert_eq!(assignment.labels(), vec![0, 2, 1, 2]);
    assert!(CommunityAssignment::from_labels(&[0, 3], 3).is_err());
    assert!(CommunityAssignment::from_labels(&[], 2).is_err());
}
