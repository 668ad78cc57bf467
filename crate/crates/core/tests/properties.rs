use std::collections::BTreeSet;

use proptest::prelude::*;

use veriscribe::daam::{self, OcsMode};
use veriscribe::data::{format_labels_csv, format_soft_records, parse_labels_csv, parse_soft_records, SampleRecord};
use veriscribe::evaluation::{evaluate, EvalReport};
use veriscribe::laam::{self, fit_vectors, DistanceVector, NetworkStructure};
use veriscribe::partition::{generate_pairs, split, PairStrategy, PartitionMode, Ratios};
use veriscribe::schema::CARDINALITIES;
use veriscribe::synthetic::{generate_dataset, soften};
use veriscribe::{builtin_schema, Dataset, Decision};

fn prob_vector(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, len).prop_filter_map("nonzero", |v| {
        let z: f64 = v.iter().sum();
        (z > 1e-6).then(|| v.iter().map(|x| x / z).collect())
    })
}

fn vector_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..=6).prop_flat_map(|n| (prob_vector(n), prob_vector(n)))
}

fn soft_record(writer: usize, sample: usize) -> impl Strategy<Value = SampleRecord> {
    let heads: Vec<_> = CARDINALITIES.iter().map(|&n| prob_vector(n)).collect();
    heads.prop_map(move |soft| SampleRecord::from_soft(format!("w{writer}"), format!("s{sample}"), soft))
}

fn distance_vector() -> impl Strategy<Value = DistanceVector> {
    let codes: Vec<_> = CARDINALITIES.iter().map(|&n| 0..n * (n + 1) / 2).collect();
    codes.prop_map(|v| DistanceVector(v.try_into().unwrap()))
}

fn dataset_params() -> impl Strategy<Value = (usize, usize, f64, u64)> {
    (3usize..9, 1usize..8, 0.0f64..=1.0, any::<u64>())
}

proptest! {
    #[test]
    fn cosine_in_range_and_symmetric((a, b) in vector_pair()) {
        let ab = daam::cosine_sim(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert_eq!(ab, daam::cosine_sim(&b, &a).unwrap());
        prop_assert!((daam::cosine_sim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cosine_scale_invariant((a, b) in vector_pair(), s in 0.01f64..100.0) {
        let scaled: Vec<f64> = a.iter().map(|x| x * s).collect();
        let base = daam::cosine_sim(&a, &b).unwrap();
        prop_assert!((daam::cosine_sim(&scaled, &b).unwrap() - base).abs() < 1e-12);
    }

    #[test]
    fn score_pair_symmetric(q in soft_record(1, 1), k in soft_record(2, 1)) {
        let a = daam::score_pair(&q, &k, OcsMode::Mean).unwrap();
        let b = daam::score_pair(&k, &q, OcsMode::Mean).unwrap();
        prop_assert_eq!(a.per_feature, b.per_feature);
        prop_assert_eq!(a.overall, b.overall);
        let mean = a.per_feature.iter().sum::<f64>() / 15.0;
        prop_assert!((a.overall - mean).abs() < 1e-15);
        // reordering features leaves the mean unchanged
        let mut shuffled = a.per_feature;
        shuffled.reverse();
        prop_assert!((shuffled.iter().sum::<f64>() / 15.0 - a.overall).abs() < 1e-12);
        let sum = daam::score_pair(&q, &k, OcsMode::Sum).unwrap().overall;
        prop_assert!((sum - 15.0 * a.overall).abs() < 1e-12);
    }

    #[test]
    fn soft_records_round_trip(records in prop::collection::vec(soft_record(0, 0), 1..6)) {
        let records: Vec<SampleRecord> = records
            .into_iter()
            .enumerate()
            .map(|(i, r)| SampleRecord { writer_id: format!("w{}", i % 2), sample_id: format!("s{i}"), ..r })
            .collect();
        let schema = builtin_schema();
        let d = Dataset::new(schema.clone(), records).unwrap();
        let text = format_soft_records(&d).unwrap();
        let back = parse_soft_records(&text, &schema).unwrap();
        prop_assert_eq!(back.len(), d.len());
        for (a, b) in d.records().iter().zip(back.records()) {
            prop_assert_eq!(&a.writer_id, &b.writer_id);
            for (va, vb) in a.soft.as_ref().unwrap().iter().zip(b.soft.as_ref().unwrap()) {
                prop_assert!((vb.iter().sum::<f64>() - 1.0).abs() < 1e-6);
                for (x, y) in va.iter().zip(vb) {
                    prop_assert!((x - y).abs() < 1e-8);
                }
            }
        }
        // rewriting what was read is a fixed point
        prop_assert_eq!(format_soft_records(&back).unwrap(), format_soft_records(&parse_soft_records(&format_soft_records(&back).unwrap(), &schema).unwrap()).unwrap());
    }

    #[test]
    fn labels_csv_round_trip((w, s, c, seed) in dataset_params()) {
        let schema = builtin_schema();
        let d = generate_dataset(&schema, w, s, c, seed).unwrap();
        let back = parse_labels_csv(&format_labels_csv(&d), &schema).unwrap();
        prop_assert_eq!(back, d);
    }

    #[test]
    fn split_partitions_records((w, s, c, seed) in dataset_params(), mode in prop::sample::select(PartitionMode::ALL.to_vec())) {
        let schema = builtin_schema();
        let d = generate_dataset(&schema, w, s.max(1), c, seed).unwrap();
        let Ok(sp) = split(&d, mode, Ratios::default(), seed) else {
            // seen mode with no writer of 5+ samples
            prop_assert!(mode == PartitionMode::Seen && s < 5);
            return Ok(());
        };
        let mut all: Vec<usize> = sp.train.iter().chain(&sp.val).chain(&sp.test).copied().collect();
        let n = all.len();
        all.sort_unstable();
        all.dedup();
        prop_assert_eq!(all.len(), n, "record in two parts");
        let excluded: usize = d
            .writers()
            .filter(|w| mode == PartitionMode::Seen && d.writer_records(w).len() < 5)
            .map(|w| d.writer_records(w).len())
            .sum();
        prop_assert_eq!(n + excluded, d.len());
        if mode == PartitionMode::Unseen {
            let writers = |part: &[usize]| -> BTreeSet<String> {
                part.iter().map(|&p| d.record(p).writer_id.clone()).collect()
            };
            let (a, b, c) = (writers(&sp.train), writers(&sp.val), writers(&sp.test));
            prop_assert!(a.is_disjoint(&b) && a.is_disjoint(&c) && b.is_disjoint(&c));
        }
        prop_assert_eq!(split(&d, mode, Ratios::default(), seed).unwrap(), sp);
    }

    #[test]
    fn pair_labels_match_writers((w, s, c, seed) in dataset_params(), k in 1usize..4, all in any::<bool>()) {
        let schema = builtin_schema();
        let d = generate_dataset(&schema, w, s.max(2), c, seed).unwrap();
        let part: Vec<usize> = (0..d.len()).collect();
        let strategy = if all { PairStrategy::AllPairs } else { PairStrategy::Balanced(k) };
        let pairs = generate_pairs(&d, &part, strategy, seed).unwrap();
        let mut seen = BTreeSet::new();
        for p in &pairs.pairs {
            prop_assert!(p.a < p.b);
            prop_assert!(seen.insert((p.a, p.b)));
            let same = d.record(p.a).writer_id == d.record(p.b).writer_id;
            prop_assert_eq!(p.label == Decision::Same, same);
        }
        let n = d.len();
        if all {
            prop_assert_eq!(pairs.len(), n * (n - 1) / 2);
        } else {
            let possible = n * (n - 1) / 2 - pairs.same_count();
            prop_assert_eq!(pairs.different_count(), (k * pairs.same_count()).min(possible));
        }
    }

    #[test]
    fn distance_codes_symmetric_and_invertible(j in 0usize..15, q in 0usize..4, k in 0usize..4) {
        let schema = builtin_schema();
        let n = schema.cardinality(j);
        prop_assume!(q < n && k < n);
        let c = laam::encode_distance(&schema, j, q, k).unwrap();
        prop_assert_eq!(c, laam::encode_distance(&schema, j, k, q).unwrap());
        prop_assert!(c < n * (n + 1) / 2);
        prop_assert_eq!(laam::code_classes(n, c), Some((q.min(k), q.max(k))));
    }

    #[test]
    fn fitted_rows_sum_to_one(vectors in prop::collection::vec(distance_vector(), 1..60), alpha in prop::sample::select(vec![0.0, 0.5, 1.0, 3.0])) {
        let structure = NetworkStructure::from_schema(&builtin_schema());
        let net = fit_vectors(&structure, &vectors, alpha, Decision::Same).unwrap();
        for cpd in net.cpds() {
            for row in &cpd.rows {
                prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }
        if alpha > 0.0 {
            for v in &vectors {
                prop_assert!(net.joint_log_prob(v).unwrap().is_finite());
            }
        }
    }

    #[test]
    fn llr_antisymmetric(a in prop::collection::vec(distance_vector(), 1..30), b in prop::collection::vec(distance_vector(), 1..30), d in distance_vector()) {
        let structure = NetworkStructure::from_schema(&builtin_schema());
        let same = fit_vectors(&structure, &a, 1.0, Decision::Same).unwrap();
        let diff = fit_vectors(&structure, &b, 1.0, Decision::Different).unwrap();
        let forward = laam::log_ratio(&same, &diff, &d).unwrap();
        prop_assert_eq!(forward, -laam::log_ratio(&diff, &same, &d).unwrap());
        prop_assert_eq!(forward, laam::llr(&same, &diff, &d).unwrap());
    }

    #[test]
    fn metrics_permutation_invariant(labels in prop::collection::vec((any::<bool>(), any::<bool>()), 1..80), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let to_dec = |b: bool| if b { Decision::Same } else { Decision::Different };
        let build = |rows: &[(bool, bool)]| {
            let pairs = veriscribe::partition::PairSet {
                pairs: rows.iter().enumerate().map(|(i, (l, _))| veriscribe::partition::Pair { a: i, b: i + 1, label: to_dec(*l) }).collect(),
            };
            let decisions: Vec<Decision> = rows.iter().map(|(_, d)| to_dec(*d)).collect();
            evaluate(&pairs, &decisions, "m", "r").unwrap()
        };
        let mut shuffled = labels.clone();
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let (a, b): (EvalReport, EvalReport) = (build(&labels), build(&shuffled));
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.total(), labels.len());
        for x in [a.type1, a.type2, a.type2_literal, a.overall, a.precision, a.recall] {
            prop_assert!((0.0..=1.0).contains(&x));
        }
    }

    #[test]
    fn soften_keeps_labels((w, s, c, seed) in dataset_params(), sharp in 0.5f64..=1.0) {
        let schema = builtin_schema();
        let d = generate_dataset(&schema, w, s, c, seed).unwrap();
        let soft = soften(&d, sharp).unwrap();
        for r in soft.records() {
            prop_assert_eq!(veriscribe::data::argmax_assignment(r).unwrap(), r.labels);
            for v in r.soft.as_ref().unwrap() {
                prop_assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }
    }
}
