//! Generator tests: planted-sparse and community designs, their documented
//! draw-order guarantees, and the train/test split.

use acerl::core::{EmbeddingMatrix, NetworkDataset};
use acerl::downstream::subject_embeddings;
use acerl::simgen::{gen_community, gen_sparse, split_train_test, CommunitySimSpec, SparseSimSpec};
use approx::assert_abs_diff_eq;
use ndarray::Array2;

#[test]
fn noiseless_sparse_data_factor_exactly_through_the_ground_truth() {
    let spec = SparseSimSpec { n: 40, v: 8, r: 3, s_star: 10, sigma_xi: 0.0, seed: 31 };
    let (data, truth) = gen_sparse(&spec).unwrap();
    let reconstructed = truth.q_star.dot(&truth.z);
    let diff = (data.x() - &reconstructed).mapv(f64::abs).sum();
    assert!(diff < 1e-10, "x must equal q_star z when sigma is zero, off by {diff:.2e}");
}

#[test]
fn sparse_ground_truth_is_exactly_row_sparse() {
    let spec = SparseSimSpec { n: 10, v: 10, r: 2, s_star: 12, sigma_xi: 1.0, seed: 5 };
    let (data, truth) = gen_sparse(&spec).unwrap();
    let d = 45;
    assert_eq!(data.num_edges(), d);
    assert_eq!(truth.support.len(), 12);
    assert!(truth.support.windows(2).all(|w| w[0] < w[1]), "support must be sorted unique");
    assert!(truth.support.iter().all(|&e| e < d));
    for e in 0..d {
        let row_norm: f64 = truth.q_star.row(e).dot(&truth.q_star.row(e));
        if truth.support.contains(&e) {
            assert!(row_norm > 0.0);
        } else {
            assert_eq!(row_norm, 0.0);
        }
    }
}

#[test]
fn labels_compare_the_first_two_latent_coordinates() {
    let spec = SparseSimSpec { n: 200, v: 6, r: 4, s_star: 5, sigma_xi: 3.0, seed: 77 };
    let (data, truth) = gen_sparse(&spec).unwrap();
    let expected: Vec<u8> = (0..200).map(|i| u8::from(truth.z[[0, i]] > truth.z[[1, i]])).collect();
    assert_eq!(truth.labels, expected);
    assert_eq!(data.labels(), Some(&expected[..]));
}

#[test]
fn label_fractions_hover_around_one_half() {
    for seed in 0..20 {
        let spec = SparseSimSpec { n: 500, v: 5, r: 2, s_star: 4, sigma_xi: 1.0, seed };
        let (_, truth) = gen_sparse(&spec).unwrap();
        let frac = truth.labels.iter().map(|&y| y as usize).sum::<usize>() as f64 / 500.0;
        assert!((0.4..=0.6).contains(&frac), "seed {seed}: label fraction {frac}");
    }
}

#[test]
fn noise_standard_deviation_grows_linearly_with_the_edge_rank() {
    // one planted edge; the rest are pure noise with sd sigma (e+1)/d,
    // counting the rank from one
    let n = 200_000;
    let sigma = 3.0;
    let spec = SparseSimSpec { n, v: 5, r: 2, s_star: 1, sigma_xi: sigma, seed: 404 };
    let (data, truth) = gen_sparse(&spec).unwrap();
    let d = 10;
    let planted = truth.support[0];
    for e in [0, d - 1] {
        if e == planted {
            continue;
        }
        let row = data.x().row(e);
        let mean = row.sum() / n as f64;
        let var = row.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        let expected = (sigma * (e + 1) as f64 / d as f64).powi(2);
        let rel = (var - expected).abs() / expected;
        assert!(rel < 0.02, "edge {e}: variance {var:.5} vs expected {expected:.5}");
    }
}

#[test]
fn planted_rows_carry_amplified_signal_plus_ranked_noise() {
    let n = 200_000;
    let sigma = 2.0;
    let spec = SparseSimSpec { n, v: 5, r: 2, s_star: 3, sigma_xi: sigma, seed: 405 };
    let (data, truth) = gen_sparse(&spec).unwrap();
    let d = 10;
    let e = truth.support[1];
    let signal_var: f64 = truth.q_star.row(e).dot(&truth.q_star.row(e));
    let expected = signal_var + (sigma * (e + 1) as f64 / d as f64).powi(2);
    let row = data.x().row(e);
    let mean = row.sum() / n as f64;
    let var = row.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
    let rel = (var - expected).abs() / expected;
    assert!(rel < 0.02, "edge {e}: variance {var:.5} vs expected {expected:.5}");
}

#[test]
fn generation_is_bit_for_bit_deterministic_in_the_seed() {
    let spec = SparseSimSpec { n: 30, v: 7, r: 2, s_star: 6, sigma_xi: 1.5, seed: 1234 };
    let (d1, t1) = gen_sparse(&spec).unwrap();
    let (d2, t2) = gen_sparse(&spec).unwrap();
    assert_eq!(d1.x(), d2.x());
    assert_eq!(t1.support, t2.support);
    assert_eq!(t1.labels, t2.labels);
    assert_eq!(t1.q_star, t2.q_star);
    let other = SparseSimSpec { seed: 1235, ..spec };
    let (d3, _) = gen_sparse(&other).unwrap();
    assert_ne!(d1.x(), d3.x());
}

#[test]
fn the_noise_level_does_not_disturb_the_planted_signal() {
    // noise variates are drawn even at sigma = 0, so only the noise term
    // changes between noise levels at a fixed seed
    let quiet = SparseSimSpec { n: 25, v: 6, r: 2, s_star: 5, sigma_xi: 0.0, seed: 88 };
    let loud = SparseSimSpec { sigma_xi: 2.0, ..quiet.clone() };
    let (dq, tq) = gen_sparse(&quiet).unwrap();
    let (dl, tl) = gen_sparse(&loud).unwrap();
    assert_eq!(tq.support, tl.support);
    assert_eq!(tq.q_star, tl.q_star);
    assert_eq!(tq.labels, tl.labels);
    let d = 15.0;
    let resid = dl.x() - dq.x();
    // residual standard deviations follow the ranked-noise profile
    for e in [0usize, 14] {
        let row = resid.row(e);
        let var = row.iter().map(|x| x * x).sum::<f64>() / 25.0;
        let expected = (2.0 * (e + 1) as f64 / d).powi(2);
        assert!(var < 9.0 * expected && var > expected / 9.0, "edge {e}: residual var {var:.4}");
    }
}

#[test]
fn sparse_spec_validation_catches_inconsistencies() {
    let good = SparseSimSpec { n: 10, v: 5, r: 2, s_star: 5, sigma_xi: 1.0, seed: 0 };
    assert!(gen_sparse(&good).is_ok());
    assert!(gen_sparse(&SparseSimSpec { v: 1, ..good.clone() }).is_err());
    assert!(gen_sparse(&SparseSimSpec { n: 1, ..good.clone() }).is_err());
    assert!(gen_sparse(&SparseSimSpec { r: 1, ..good.clone() }).is_err());
    assert!(gen_sparse(&SparseSimSpec { s_star: 0, ..good.clone() }).is_err());
    assert!(gen_sparse(&SparseSimSpec { s_star: 11, ..good.clone() }).is_err());
    assert!(gen_sparse(&SparseSimSpec { sigma_xi: -0.5, ..good.clone() }).is_err());
    assert!(gen_sparse(&SparseSimSpec { sigma_xi: f64::NAN, ..good }).is_err());
}

#[test]
fn community_sizes_differ_by_at_most_one_and_stay_contiguous() {
    let spec = CommunitySimSpec::new(10, 10, 2, 3, 0.0, 9);
    let (_, truth) = gen_community(&spec).unwrap();
    assert_eq!(truth.assignment.labels(), vec![0, 0, 0, 0, 1, 1, 1, 2, 2, 2]);
    let even = CommunitySimSpec::new(10, 21, 2, 3, 0.0, 9);
    let (_, t2) = gen_community(&even).unwrap();
    let labels = t2.assignment.labels();
    for h in 0..3 {
        assert_eq!(labels.iter().filter(|&&l| l == h).count(), 7);
    }
}

#[test]
fn community_levels_live_in_their_documented_range() {
    let spec = CommunitySimSpec::new(5, 12, 2, 4, 0.0, 17);
    let (_, truth) = gen_community(&spec).unwrap();
    assert_eq!(truth.levels.len(), 4);
    for &c in truth.levels.iter() {
        assert!((0.1..1.1).contains(&c), "level {c} out of range");
    }
}

#[test]
fn noiseless_community_data_lie_in_the_span_of_the_effective_embedding() {
    let spec = CommunitySimSpec::new(50, 9, 3, 3, 0.0, 23);
    let (data, truth) = gen_community(&spec).unwrap();
    let q = EmbeddingMatrix::new(truth.q_eff.clone()).unwrap();
    let z_hat = subject_embeddings(&q, &data).unwrap();
    let resid = data.x() - &truth.q_eff.dot(z_hat.matrix());
    assert!(resid.mapv(f64::abs).sum() < 1e-8, "x must lie in span(q_eff) at sigma 0");
}

#[test]
fn effective_rows_scale_by_the_level_coupling_rule() {
    // ratio ||q_eff_e||^2 / scale_e^2 is a chi-square with r degrees of
    // freedom; averaged over hundreds of edges it pins the scale formula
    // 5 sqrt(c_u c_w) 10^(-|c_u - c_w|)
    let v = 40;
    let r = 6;
    let spec = CommunitySimSpec::new(5, v, r, 4, 0.0, 29);
    let (data, truth) = gen_community(&spec).unwrap();
    let labels = truth.assignment.labels();
    let map = data.edge_map().expect("generator attaches an edge map");
    let d = map.edge_count();
    let mut ratio_sum = 0.0;
    for e in 0..d {
        let (u, w) = map.pair_of(e).unwrap();
        let (cu, cw) = (truth.levels[labels[u]], truth.levels[labels[w]]);
        let scale = 5.0 * (cu * cw).sqrt() * 10f64.powf(-(cu - cw).abs());
        let norm2: f64 = truth.q_eff.row(e).dot(&truth.q_eff.row(e));
        ratio_sum += norm2 / (scale * scale);
    }
    let mean_ratio = ratio_sum / (d as f64 * r as f64);
    assert_abs_diff_eq!(mean_ratio, 1.0, epsilon = 0.1);
}

#[test]
fn level_jitter_perturbs_the_edge_scales() {
    let flat = CommunitySimSpec::new(20, 8, 2, 2, 0.0, 41);
    let wobbly = CommunitySimSpec { jitter: 0.3, ..flat.clone() };
    let (df, tf) = gen_community(&flat).unwrap();
    let (dw, tw) = gen_community(&wobbly).unwrap();
    assert_eq!(tf.levels, tw.levels, "community levels come first in the draw order");
    assert_ne!(df.x(), dw.x());
    assert_ne!(tf.q_eff, tw.q_eff);
    assert!(gen_community(&CommunitySimSpec { jitter: -0.1, ..flat }).is_err());
}

#[test]
fn community_generation_is_deterministic_and_validated() {
    let spec = CommunitySimSpec::new(15, 7, 2, 3, 1.0, 55);
    let (d1, t1) = gen_community(&spec).unwrap();
    let (d2, t2) = gen_community(&spec).unwrap();
    assert_eq!(d1.x(), d2.x());
    assert_eq!(t1.q_eff, t2.q_eff);
    assert!(gen_community(&CommunitySimSpec { g: 0, ..spec.clone() }).is_err());
    assert!(gen_community(&CommunitySimSpec { g: 8, ..spec.clone() }).is_err());
    assert!(gen_community(&CommunitySimSpec { r: 0, ..spec }).is_err());
}

#[test]
fn splits_partition_subjects_and_keep_their_order() {
    let x = Array2::from_shape_fn((3, 10), |(i, j)| (10 * i + j) as f64);
    let labels: Vec<u8> = (0..10).map(|j| (j % 2) as u8).collect();
    let data = NetworkDataset::from_matrix(x).unwrap().with_labels(labels.clone()).unwrap();
    let (train, test) = split_train_test(&data, 0.6, 99).unwrap();
    assert_eq!(train.num_subjects(), 6);
    assert_eq!(test.num_subjects(), 4);
    // row 0 of x encodes the original subject index, so order and
    // disjointness are visible in the data itself
    let train_ids: Vec<f64> = train.x().row(0).to_vec();
    let test_ids: Vec<f64> = test.x().row(0).to_vec();
    assert!(train_ids.windows(2).all(|w| w[0] < w[1]), "train keeps subject order");
    assert!(test_ids.windows(2).all(|w| w[0] < w[1]), "test keeps subject order");
    let mut all: Vec<f64> = train_ids.iter().chain(test_ids.iter()).copied().collect();
    all.sort_by(f64::total_cmp);
    assert_eq!(all, (0..10).map(f64::from).collect::<Vec<_>>());
    // labels follow their subjects
    for (pos, &id) in train_ids.iter().enumerate() {
        assert_eq!(train.labels().unwrap()[pos], labels[id as usize]);
    }
}

#[test]
fn splits_are_seeded_and_refuse_tiny_sides() {
    let x = Array2::from_shape_fn((2, 12), |(i, j)| (i + j) as f64);
    let data = NetworkDataset::from_matrix(x).unwrap();
    let (a_train, _) = split_train_test(&data, 0.5, 1).unwrap();
    let (b_train, _) = split_train_test(&data, 0.5, 1).unwrap();
    let (c_train, _) = split_train_test(&data, 0.5, 2).unwrap();
    assert_eq!(a_train.x(), b_train.x());
    assert_ne!(a_train.x(), c_train.x());
    assert!(split_train_test(&data, 0.05, 1).is_err(), "train side below two subjects");
    assert!(split_train_test(&data, 0.95, 1).is_err(), "test side below two subjects");
    assert!(split_train_test(&data, 0.0, 1).is_err());
    assert!(split_train_test(&data, 1.0, 1).is_err());
}
