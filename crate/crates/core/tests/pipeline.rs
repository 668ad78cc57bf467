use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use veriscribe::daam::{self, OcsMode};
use veriscribe::data::{read_any, write_labels_csv, write_soft_records};
use veriscribe::evaluation::{self, compare_methods, EvalConfig, Method};
use veriscribe::laam::{self, DistanceVector, NetworkStructure, TrainedBayesNet};
use veriscribe::partition::{generate_pairs, PairStrategy, PartitionMode};
use veriscribe::schema::CARDINALITIES;
use veriscribe::synthetic::{generate_dataset, soften};
use veriscribe::{builtin_schema, Dataset, Decision};

fn soft_data(writers: usize, samples: usize, consistency: f64, sharpness: f64, seed: u64) -> Dataset {
    let labels = generate_dataset(&builtin_schema(), writers, samples, consistency, seed).unwrap();
    soften(&labels, sharpness).unwrap()
}

#[test]
fn daam_separates_consistent_writers_in_every_regime() {
    let data = soft_data(20, 10, 0.9, 0.9, 7);
    let reports = compare_methods(
        &data,
        &PartitionMode::ALL,
        &[Method::Daam],
        &[1, 2, 3, 4, 5],
        &EvalConfig::default(),
    )
    .unwrap();
    assert_eq!(reports.len(), 3);
    for r in &reports {
        assert!(r.overall > 0.9, "{} {}: overall {}", r.method, r.regime, r.overall);
    }
}

#[test]
fn calibrated_threshold_is_pinned_for_seed_42() {
    let data = soft_data(20, 10, 0.9, 0.9, 42);
    let prepared = evaluation::prepare(&data, PartitionMode::Unseen, &EvalConfig::default(), 42).unwrap();
    let cal = daam::calibrate(&data, &prepared.val, OcsMode::Mean).unwrap();
    assert_eq!(cal.chosen_threshold, 0.8);
    assert_eq!(cal.table.len(), 9);
}

#[test]
fn same_writer_pairs_score_higher() {
    for (c, s) in [(0.8, 0.8), (0.9, 0.9), (1.0, 0.8)] {
        let data = soft_data(15, 6, c, s, 3);
        let all: Vec<usize> = (0..data.len()).collect();
        let pairs = generate_pairs(&data, &all, PairStrategy::AllPairs, 0).unwrap();
        let scores = daam::score_pairs(&data, &pairs, OcsMode::Mean).unwrap();
        let mean = |label| {
            let v: Vec<f64> = scores
                .iter()
                .zip(&pairs.pairs)
                .filter(|(_, p)| p.label == label)
                .map(|(s, _)| *s)
                .collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        assert!(mean(Decision::Same) > mean(Decision::Different), "c={c} s={s}");
    }
}

/// Tables where each row concentrates on a code picked by the row index.
fn dependent_network(structure: &NetworkStructure) -> TrainedBayesNet {
    let rows = (0..15)
        .map(|j| {
            let k = structure.code_counts()[j];
            (0..structure.row_count(j))
                .map(|r| {
                    let mut row = vec![0.2 / (k - 1) as f64; k];
                    row[(r * 7 + j) % k] = 0.8;
                    row
                })
                .collect()
        })
        .collect();
    TrainedBayesNet::from_rows(structure.clone(), Decision::Same, rows, 1.0).unwrap()
}

#[test]
fn bic_prefers_generating_structure() {
    let schema = builtin_schema();
    let structure = NetworkStructure::from_schema(&schema);
    let truth = dependent_network(&structure);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let vectors: Vec<DistanceVector> = (0..5000).map(|_| truth.sample(&mut rng)).collect();
    let with_edges = laam::bic_score(&schema, structure.edges(), &vectors, 1.0).unwrap();
    let empty = laam::bic_score(&schema, &[], &vectors, 1.0).unwrap();
    assert!(with_edges > empty, "{with_edges} <= {empty}");
}

#[test]
fn bic_prefers_empty_structure_on_independent_codes() {
    let schema = builtin_schema();
    let structure = NetworkStructure::from_schema(&schema);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let vectors: Vec<DistanceVector> = (0..5000)
        .map(|_| {
            let mut v = [0; 15];
            for (j, n) in CARDINALITIES.iter().enumerate() {
                v[j] = rng.gen_range(0..n * (n + 1) / 2);
            }
            DistanceVector(v)
        })
        .collect();
    let with_edges = laam::bic_score(&schema, structure.edges(), &vectors, 1.0).unwrap();
    let empty = laam::bic_score(&schema, &[], &vectors, 1.0).unwrap();
    assert!(empty >= with_edges, "{empty} < {with_edges}");
}

#[test]
fn files_round_trip_through_read_any() {
    let dir = tempfile::tempdir().unwrap();
    let schema = builtin_schema();
    let labels = generate_dataset(&schema, 4, 3, 0.7, 9).unwrap();
    let soft = soften(&labels, 0.85).unwrap();
    let csv = dir.path().join("d.csv");
    let jsonl = dir.path().join("d.jsonl");
    write_labels_csv(&csv, &labels).unwrap();
    write_soft_records(&jsonl, &soft).unwrap();

    assert_eq!(read_any(&csv, &schema).unwrap(), labels);
    let back = read_any(&jsonl, &schema).unwrap();
    assert_eq!(back.len(), soft.len());
    for (a, b) in soft.records().iter().zip(back.records()) {
        assert_eq!(a.key(), b.key());
        assert_eq!(a.labels, b.labels);
        for (va, vb) in a.soft.as_ref().unwrap().iter().zip(b.soft.as_ref().unwrap()) {
            for (x, y) in va.iter().zip(vb) {
                assert!((x - y).abs() < 1e-8);
            }
        }
    }
}

#[test]
fn laam_model_survives_save_and_load() {
    let dir = tempfile::tempdir().unwrap();
    let schema = builtin_schema();
    let data = generate_dataset(&schema, 10, 5, 0.9, 4).unwrap();
    let prepared = evaluation::prepare(&data, PartitionMode::Unseen, &EvalConfig::default(), 4).unwrap();
    let model = laam::LaamModel::train(&data, &prepared.train, &NetworkStructure::from_schema(&schema), 1.0).unwrap();
    let path = dir.path().join("m.json");
    model.save(&path).unwrap();
    let loaded = laam::LaamModel::load(&path, &schema).unwrap();
    // tables are stored at 12 significant digits
    let before = model.llr_pairs(&data, &prepared.test).unwrap();
    let after = loaded.llr_pairs(&data, &prepared.test).unwrap();
    for (a, b) in before.iter().zip(&after) {
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }
    assert_eq!(loaded.to_document(), model.to_document());
}
