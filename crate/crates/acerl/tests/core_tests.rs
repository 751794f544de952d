//! Data-layer tests: edge indexing, vectorization, dataset CSV round trips,
//! and model persistence.

use acerl::core::{
    devectorize_edges, load_model, save_model, vectorize_adjacency, EdgeIndexMap, EmbeddingMatrix,
    FitResult, NetworkDataset, TraceRecord,
};
use acerl::estimator::AcerlConfig;
use acerl::masking::MaskingParams;
use acerl::Error;
use approx::assert_abs_diff_eq;
use ndarray::{array, Array1, Array2};

#[test]
fn edge_indices_enumerate_the_upper_triangle_in_row_major_order() {
    let map = EdgeIndexMap::new(4).unwrap();
    assert_eq!(map.edge_count(), 6);
    let expected = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
    for (e, want) in expected.iter().enumerate() {
        assert_eq!(map.pair_of(e).unwrap(), *want);
        assert_eq!(map.index_of(want.0, want.1).unwrap(), e);
        // unordered pairs: swapping the arguments hits the same edge
        assert_eq!(map.index_of(want.1, want.0).unwrap(), e);
    }
    let pairs: Vec<(usize, usize)> = map.iter_pairs().collect();
    assert_eq!(pairs, expected);
}

#[test]
fn edge_index_map_rejects_degenerate_inputs() {
    assert!(EdgeIndexMap::new(1).is_err());
    let map = EdgeIndexMap::new(5).unwrap();
    assert!(map.index_of(2, 2).is_err());
    assert!(map.index_of(0, 5).is_err());
    assert!(map.pair_of(10).is_err());
}

#[test]
fn index_and_pair_are_mutually_inverse_for_a_medium_graph() {
    let map = EdgeIndexMap::new(37).unwrap();
    for e in 0..map.edge_count() {
        let (u, w) = map.pair_of(e).unwrap();
        assert!(u < w && w < 37);
        assert_eq!(map.index_of(u, w).unwrap(), e);
    }
}

#[test]
fn vectorize_extracts_the_strict_upper_triangle() {
    let map = EdgeIndexMap::new(3).unwrap();
    let a = array![[0.0, 1.5, -2.0], [1.5, 0.0, 7.25], [-2.0, 7.25, 0.0]];
    let x = vectorize_adjacency(&a, &map).unwrap();
    assert_eq!(x, array![1.5, -2.0, 7.25]);
    let back = devectorize_edges(&x, &map).unwrap();
    assert_abs_diff_eq!(back, a, epsilon = 0.0);
    // the diagonal is ignored by vectorization and zeroed by devectorization
    let mut with_diag = a.clone();
    with_diag[[1, 1]] = 9.0;
    let x2 = vectorize_adjacency(&with_diag, &map).unwrap();
    assert_eq!(x, x2);
}

#[test]
fn vectorize_rejects_asymmetric_matrices() {
    let map = EdgeIndexMap::new(3).unwrap();
    let mut a = Array2::zeros((3, 3));
    a[[0, 1]] = 1.0;
    a[[1, 0]] = 1.0 + 1e-6;
    match vectorize_adjacency(&a, &map) {
        Err(Error::Asymmetric { .. }) => {}
        other => panic!("expected an asymmetry error, got {other:?}"),
    }
}

#[test]
fn datasets_stack_adjacency_matrices_as_edge_columns() {
    let a1 = array![[0.0, 1.0, 2.0], [1.0, 0.0, 3.0], [2.0, 3.0, 0.0]];
    let a2 = array![[0.0, -1.0, 0.5], [-1.0, 0.0, 4.0], [0.5, 4.0, 0.0]];
    let data = NetworkDataset::from_adjacency_matrices(&[a1, a2], Some(vec![0, 1])).unwrap();
    assert_eq!(data.num_edges(), 3);
    assert_eq!(data.num_subjects(), 2);
    assert_eq!(data.x().column(0).to_vec(), vec![1.0, 2.0, 3.0]);
    assert_eq!(data.x().column(1).to_vec(), vec![-1.0, 0.5, 4.0]);
    assert_eq!(data.labels(), Some(&[0u8, 1u8][..]));
    assert!(data.edge_map().is_some());
}

#[test]
fn dataset_csv_round_trip_preserves_every_float_bit() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("data.csv");
    let x = array![
        [0.1 + 0.2, 1.0 / 3.0, -5.5e-13],
        [f64::MIN_POSITIVE, 2.0_f64.powi(60), 0.0],
    ];
    let data = NetworkDataset::from_matrix(x.clone()).unwrap();
    data.write_csv(&path).unwrap();
    let back = NetworkDataset::read_csv(&path).unwrap();
    assert_eq!(back.num_edges(), 2);
    assert_eq!(back.num_subjects(), 3);
    for i in 0..2 {
        for j in 0..3 {
            assert_eq!(back.x()[[i, j]].to_bits(), x[[i, j]].to_bits());
        }
    }
}

#[test]
fn ragged_and_empty_csv_files_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let ragged = dir.path().join("ragged.csv");
    std::fs::write(&ragged, "subject_id,e0,e1\ns0,1.0,2.0\ns1,3.0\n").unwrap();
    assert!(NetworkDataset::read_csv(&ragged).is_err());
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    assert!(NetworkDataset::read_csv(&empty).is_err());
}

#[test]
fn subject_subsets_carry_their_labels_along() {
    let x = Array2::from_shape_fn((2, 5), |(i, j)| (i * 5 + j) as f64);
    let data = NetworkDataset::from_matrix(x)
        .unwrap()
        .with_labels(vec![0, 1, 0, 1, 1])
        .unwrap();
    let sub = data.subset_subjects(&[4, 1, 2]).unwrap();
    assert_eq!(sub.num_subjects(), 3);
    assert_eq!(sub.x().column(0).to_vec(), vec![4.0, 9.0]);
    assert_eq!(sub.labels(), Some(&[1u8, 1u8, 0u8][..]));
    assert!(data.subset_subjects(&[5]).is_err());
}

#[test]
fn embedding_matrices_must_be_finite() {
    let ok = EmbeddingMatrix::new(array![[1.0, 2.0], [0.0, 0.0]]).unwrap();
    assert_eq!(ok.support_size(), 1);
    assert_eq!(ok.row_support(), vec![0]);
    assert_abs_diff_eq!(ok.row_norms()[0], 5.0_f64.sqrt(), epsilon = 1e-15);
    assert!(EmbeddingMatrix::new(array![[f64::NAN]]).is_err());
    assert!(EmbeddingMatrix::new(array![[f64::INFINITY]]).is_err());
}

fn toy_fit_result() -> FitResult {
    let q = EmbeddingMatrix::new(array![[0.5, -1.25], [0.0, 0.0], [3.5, 2.0]]).unwrap();
    let masking = MaskingParams::new(array![0.25, 0.0, 1.0]).unwrap();
    let trace = vec![TraceRecord { k: 1, mean_p: 0.4, surrogate_loss: 1.5, support_size: 2 }];
    let config = AcerlConfig::new(2, 2, 3, 4);
    FitResult { q_hat: q, masking, trace, config, seed: 99 }
}

#[test]
fn model_persistence_round_trips_estimates_and_config() {
    let dir = tempfile::tempdir().unwrap();
    let fit = toy_fit_result();
    save_model(&fit, dir.path()).unwrap();
    assert!(dir.path().join("model.json").exists());
    assert!(dir.path().join("q_hat.csv").exists());
    let loaded = load_model(dir.path()).unwrap();
    assert_eq!(loaded.q_hat.matrix(), fit.q_hat.matrix());
    assert_eq!(loaded.masking.values(), fit.masking.values());
    assert_eq!(loaded.trace, fit.trace);
    assert_eq!(loaded.config.r, 2);
    assert_eq!(loaded.config.s, 2);
    assert_eq!(loaded.seed, 99);
}

#[test]
fn model_loading_rejects_wrong_schema_versions() {
    let dir = tempfile::tempdir().unwrap();
    save_model(&toy_fit_result(), dir.path()).unwrap();
    let meta_path = dir.path().join("model.json");
    let text = std::fs::read_to_string(&meta_path).unwrap();
    let bumped = text.replacen("\"schema_version\": 1", "\"schema_version\": 42", 1);
    assert_ne!(text, bumped, "metadata must spell out its schema version");
    std::fs::write(&meta_path, bumped).unwrap();
    match load_model(dir.path()) {
        Err(Error::SchemaVersion { found: 42, expected: 1, .. }) => {}
        other => panic!("expected a schema-version error, got {other:?}"),
    }
}

#[test]
fn model_loading_reports_missing_files_as_io_errors() {
    let dir = tempfile::tempdir().unwrap();
    match load_model(dir.path()) {
        Err(Error::Io { .. }) => {}
        other => panic!("expected an i/o error, got {other:?}"),
    }
}

#[test]
fn adjacency_directories_load_in_sorted_file_order() {
    let dir = tempfile::tempdir().unwrap();
    // deliberately create the files out of order
    for (name, value) in [("b.csv", 2.0), ("a.csv", 1.0), ("c.csv", 3.0)] {
        let a = array![[0.0, value, 0.0], [value, 0.0, 0.0], [0.0, 0.0, 0.0]];
        let mut text = String::new();
        for row in a.rows() {
            let cells: Vec<String> = row.iter().map(|x| format!("{x}")).collect();
            text.push_str(&cells.join(","));
            text.push('\n');
        }
        std::fs::write(dir.path().join(name), text).unwrap();
    }
    let data = NetworkDataset::read_adjacency_dir(dir.path()).unwrap();
    assert_eq!(data.num_subjects(), 3);
    assert_eq!(data.num_edges(), 3);
    let first_edge: Array1<f64> = data.x().row(0).to_owned();
    assert_eq!(first_edge.to_vec(), vec![1.0, 2.0, 3.0]);
}
