//! Seeded synthetic writers and samples.
//!
//! Each writer gets a "home" class per feature drawn from the schema's
//! default marginal; its class distribution is the mixture
//! `c * onehot(home) + (1 - c) * marginal`. The consistency `c` controls how
//! separable same-writer pairs are from different-writer pairs.
//!
//! Writer `i` draws from its own ChaCha stream `i` under the given seed, so
//! output does not depend on generation order.

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{Dataset, Labels, SampleRecord};
use crate::error::{Error, Result};
use crate::schema::{FeatureSchema, NUM_FEATURES};

#[derive(Clone, Debug, PartialEq)]
pub struct WriterProfile {
    pub writer_id: String,
    /// Home class per feature.
    pub home: Labels,
    /// Class distribution per feature.
    pub distributions: Vec<Vec<f64>>,
    pub consistency: f64,
}

fn writer_rng(seed: u64, writer: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(writer as u64);
    rng
}

fn draw(rng: &mut ChaCha8Rng, probs: &[f64]) -> usize {
    // Zero-weight classes are never drawn; weights always contain a positive entry.
    WeightedIndex::new(probs)
        .expect("probability vector has positive mass")
        .sample(rng)
}

fn writer_id(i: usize, n: usize) -> String {
    let width = n.to_string().len().max(3);
    format!("w{:0width$}", i + 1)
}

pub fn generate_profiles(
    schema: &FeatureSchema,
    n_writers: usize,
    consistency: f64,
    seed: u64,
) -> Result<Vec<WriterProfile>> {
    if n_writers == 0 {
        return Err(Error::validation("writers", "need at least one writer"));
    }
    if !(0.0..=1.0).contains(&consistency) {
        return Err(Error::validation(
            "consistency",
            format!("{consistency} is outside [0, 1]"),
        ));
    }
    let profiles = (0..n_writers)
        .map(|i| {
            let mut rng = writer_rng(seed, i);
            let mut home = [0usize; NUM_FEATURES];
            let distributions = (0..NUM_FEATURES)
                .map(|j| {
                    let marginal = &schema.feature(j).default_marginal;
                    home[j] = draw(&mut rng, marginal);
                    marginal
                        .iter()
                        .enumerate()
                        .map(|(k, &m)| {
                            let hot = if k == home[j] { 1.0 } else { 0.0 };
                            consistency * hot + (1.0 - consistency) * m
                        })
                        .collect()
                })
                .collect();
            WriterProfile {
                writer_id: writer_id(i, n_writers),
                home,
                distributions,
                consistency,
            }
        })
        .collect();
    Ok(profiles)
}

/// Draw `samples_per_writer` records per profile, features independent.
pub fn sample_dataset(
    schema: &FeatureSchema,
    profiles: &[WriterProfile],
    samples_per_writer: usize,
    seed: u64,
) -> Result<Dataset> {
    if samples_per_writer == 0 {
        return Err(Error::validation("samples", "need at least one sample per writer"));
    }
    let width = samples_per_writer.to_string().len().max(3);
    let mut records = Vec::with_capacity(profiles.len() * samples_per_writer);
    for (i, profile) in profiles.iter().enumerate() {
        let mut rng = writer_rng(seed, i);
        for s in 0..samples_per_writer {
            let labels = std::array::from_fn(|j| draw(&mut rng, &profile.distributions[j]));
            records.push(SampleRecord::new(
                profile.writer_id.clone(),
                format!("s{:0width$}", s + 1),
                labels,
            ));
        }
    }
    Dataset::new(schema.clone(), records)
}

/// Attach soft vectors `s * onehot(label) + (1 - s) * uniform` to every record.
/// For `s >= 0.5` the argmax of each vector is the original label.
pub fn soften(dataset: &Dataset, sharpness: f64) -> Result<Dataset> {
    if !(sharpness > 0.0 && sharpness <= 1.0) {
        return Err(Error::validation("sharpness", format!("{sharpness} is outside (0, 1]")));
    }
    let schema = dataset.schema();
    let records = dataset
        .records()
        .iter()
        .map(|r| {
            let soft = (0..NUM_FEATURES)
                .map(|j| {
                    let card = schema.cardinality(j);
                    let floor = (1.0 - sharpness) / card as f64;
                    (0..card)
                        .map(|k| if k == r.labels[j] { sharpness + floor } else { floor })
                        .collect()
                })
                .collect();
            SampleRecord {
                soft: Some(soft),
                ..r.clone()
            }
        })
        .collect();
    Dataset::new(schema.clone(), records)
}

/// Profiles plus samples in one call.
pub fn generate_dataset(
    schema: &FeatureSchema,
    n_writers: usize,
    samples_per_writer: usize,
    consistency: f64,
    seed: u64,
) -> Result<Dataset> {
    let profiles = generate_profiles(schema, n_writers, consistency, seed)?;
    // distinct stream family for sampling
    sample_dataset(schema, &profiles, samples_per_writer, seed ^ 0x9e37_79b9_7f4a_7c15)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::argmax_assignment;
    use crate::schema::builtin_schema;

    #[test]
    fn full_consistency_is_one_hot() {
        let s = builtin_schema();
        for p in generate_profiles(&s, 5, 1.0, 1).unwrap() {
            for (j, d) in p.distributions.iter().enumerate() {
                assert_eq!(d[p.home[j]], 1.0);
                assert_eq!(d.iter().sum::<f64>(), 1.0);
            }
        }
    }

    #[test]
    fn zero_consistency_is_marginal() {
        let s = builtin_schema();
        for p in generate_profiles(&s, 5, 0.0, 1).unwrap() {
            for (j, d) in p.distributions.iter().enumerate() {
                assert_eq!(d, &s.feature(j).default_marginal);
            }
        }
    }

    #[test]
    fn half_consistency_pen_pressure() {
        let s = builtin_schema();
        let profiles = generate_profiles(&s, 40, 0.5, 2).unwrap();
        let strong = profiles
            .iter()
            .find(|p| p.home[0] == 0)
            .expect("some writer has Strong");
        // 0.5 * (1, 0) + 0.5 * (0.406, 0.594)
        assert!((strong.distributions[0][0] - 0.703).abs() < 1e-12);
        assert!((strong.distributions[0][1] - 0.297).abs() < 1e-12);
    }

    #[test]
    fn identical_samples_at_full_consistency() {
        let s = builtin_schema();
        let d = generate_dataset(&s, 4, 6, 1.0, 3).unwrap();
        for w in d.writers() {
            let recs = d.writer_records(w);
            for &p in recs {
                assert_eq!(d.record(p).labels, d.record(recs[0]).labels);
            }
        }
    }

    #[test]
    fn deterministic() {
        let s = builtin_schema();
        assert_eq!(
            generate_dataset(&s, 6, 4, 0.7, 9).unwrap(),
            generate_dataset(&s, 6, 4, 0.7, 9).unwrap()
        );
        assert_ne!(
            generate_dataset(&s, 6, 4, 0.7, 9).unwrap(),
            generate_dataset(&s, 6, 4, 0.7, 10).unwrap()
        );
    }

    #[test]
    fn soften_example() {
        let s = builtin_schema();
        let mut labels = [0usize; 15];
        labels[4] = 2; // f5, cardinality 3
        let d = Dataset::new(s, vec![SampleRecord::new("w", "s", labels)]).unwrap();
        let soft = soften(&d, 0.7).unwrap();
        let v = &soft.record(0).soft.as_ref().unwrap()[4];
        let expected = [0.1, 0.1, 0.8];
        for (a, b) in v.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{v:?}");
        }
        let one_hot = soften(&d, 1.0).unwrap();
        assert_eq!(one_hot.record(0).soft.as_ref().unwrap()[4], vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn soften_keeps_argmax() {
        let s = builtin_schema();
        let d = generate_dataset(&s, 5, 5, 0.3, 4).unwrap();
        let soft = soften(&d, 0.9).unwrap();
        for r in soft.records() {
            assert_eq!(argmax_assignment(r).unwrap(), r.labels);
        }
    }

    #[test]
    fn bad_parameters() {
        let s = builtin_schema();
        assert!(generate_profiles(&s, 0, 0.5, 0).is_err());
        assert!(generate_profiles(&s, 1, 1.5, 0).is_err());
        let d = generate_dataset(&s, 2, 2, 0.5, 0).unwrap();
        assert!(soften(&d, 0.0).is_err());
        assert!(sample_dataset(&s, &[], 0, 0).is_err());
    }
}
