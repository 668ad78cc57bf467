//! Distance-as-a-measure scoring.
//!
//! Each feature of a questioned/known pair is compared by the cosine
//! similarity of its class-probability vectors; the overall score is the
//! mean over the 15 features (or the plain sum under [`OcsMode::Sum`]).
//! A pair is called same-writer when the overall score is at least the
//! threshold `T`, which is calibrated on validation pairs by sweeping
//! `T = 0.1, 0.2, ..., 0.9` and keeping the value where precision and recall
//! are closest.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::data::{Dataset, SampleRecord};
use crate::error::{Error, Result};
use crate::partition::PairSet;
use crate::schema::NUM_FEATURES;
use crate::Decision;

/// Thresholds tried by [`calibrate`].
pub fn daam_sweep() -> Vec<f64> {
    (1..=9).map(|i| i as f64 / 10.0).collect()
}

/// How per-feature similarities are aggregated into the overall score.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OcsMode {
    /// Mean over features, in `[0, 1]`.
    #[default]
    Mean,
    /// Sum over features, in `[0, 15]`.
    Sum,
}

impl FromStr for OcsMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "mean" => Ok(OcsMode::Mean),
            "sum" => Ok(OcsMode::Sum),
            other => Err(format!("unknown ocs mode '{other}' (mean|sum)")),
        }
    }
}

/// Cosine similarity of two non-negative vectors, in `[0, 1]`.
pub fn cosine_sim(q: &[f64], k: &[f64]) -> Result<f64> {
    if q.len() != k.len() {
        return Err(Error::LengthMismatch {
            expected: q.len(),
            actual: k.len(),
        });
    }
    if q.iter().chain(k).any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::validation("vector", "entries must be finite and non-negative"));
    }
    let dot: f64 = q.iter().zip(k).map(|(a, b)| a * b).sum();
    let nq = q.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nk = k.iter().map(|b| b * b).sum::<f64>().sqrt();
    if nq == 0.0 || nk == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok((dot / (nq * nk)).min(1.0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct DaamScore {
    pub per_feature: [f64; NUM_FEATURES],
    pub overall: f64,
}

pub fn score_pair(q: &SampleRecord, k: &SampleRecord, mode: OcsMode) -> Result<DaamScore> {
    let qs = q.soft()?;
    let ks = k.soft()?;
    if qs.len() != NUM_FEATURES || ks.len() != NUM_FEATURES {
        return Err(Error::SchemaMismatch(format!(
            "{} and {} do not both carry {NUM_FEATURES} soft vectors",
            q.key(),
            k.key()
        )));
    }
    let mut per_feature = [0.0; NUM_FEATURES];
    for (j, slot) in per_feature.iter_mut().enumerate() {
        if qs[j].len() != ks[j].len() {
            return Err(Error::SchemaMismatch(format!(
                "f{}: {} has {} classes, {} has {}",
                j + 1,
                q.key(),
                qs[j].len(),
                k.key(),
                ks[j].len()
            )));
        }
        *slot = cosine_sim(&qs[j], &ks[j])?;
    }
    let sum: f64 = per_feature.iter().sum();
    let overall = match mode {
        OcsMode::Mean => sum / NUM_FEATURES as f64,
        OcsMode::Sum => sum,
    };
    Ok(DaamScore { per_feature, overall })
}

/// Same-writer iff `overall >= threshold`.
pub fn classify(overall: f64, threshold: f64) -> Decision {
    if overall >= threshold {
        Decision::Same
    } else {
        Decision::Different
    }
}

pub fn classify_pair(q: &SampleRecord, k: &SampleRecord, threshold: f64, mode: OcsMode) -> Result<Decision> {
    Ok(classify(score_pair(q, k, mode)?.overall, threshold))
}

/// Overall scores of every pair in `pairs`, in pair order.
pub fn score_pairs(dataset: &Dataset, pairs: &PairSet, mode: OcsMode) -> Result<Vec<f64>> {
    pairs
        .pairs
        .iter()
        .map(|p| Ok(score_pair(dataset.record(p.a), dataset.record(p.b), mode)?.overall))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub threshold: f64,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationResult {
    pub chosen_threshold: f64,
    pub table: Vec<SweepRow>,
}

impl CalibrationResult {
    pub fn chosen_row(&self) -> &SweepRow {
        self.table
            .iter()
            .find(|r| r.threshold == self.chosen_threshold)
            .expect("chosen threshold comes from the table")
    }

    /// `threshold,TP,FP,TN,FN,precision,recall`, fractions with 4 decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("threshold,TP,FP,TN,FN,precision,recall\n");
        for r in &self.table {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{:.4},{:.4}",
                r.threshold, r.tp, r.fp, r.tn, r.fn_, r.precision, r.recall
            );
        }
        out
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Sweep `thresholds` over labeled scores and choose the one minimizing
/// `|precision - recall|`, ties to the larger threshold. Zero denominators
/// give precision or recall 0.
pub fn calibrate_scores(scores: &[f64], labels: &[Decision], thresholds: &[f64]) -> Result<CalibrationResult> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch {
            expected: labels.len(),
            actual: scores.len(),
        });
    }
    let positives = labels.iter().filter(|&&l| l == Decision::Same).count();
    if positives == 0 || positives == labels.len() {
        return Err(Error::DegenerateLabels);
    }
    if thresholds.is_empty() {
        return Err(Error::validation("thresholds", "sweep is empty"));
    }
    let table: Vec<SweepRow> = thresholds
        .iter()
        .map(|&t| {
            let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
            for (&s, &l) in scores.iter().zip(labels) {
                match (classify(s, t), l) {
                    (Decision::Same, Decision::Same) => tp += 1,
                    (Decision::Same, Decision::Different) => fp += 1,
                    (Decision::Different, Decision::Different) => tn += 1,
                    (Decision::Different, Decision::Same) => fn_ += 1,
                }
            }
            SweepRow {
                threshold: t,
                tp,
                fp,
                tn,
                fn_,
                precision: ratio(tp, tp + fp),
                recall: ratio(tp, tp + fn_),
            }
        })
        .collect();
    let mut best = &table[0];
    for row in &table[1..] {
        let gap = (row.precision - row.recall).abs();
        let best_gap = (best.precision - best.recall).abs();
        if gap < best_gap || (gap == best_gap && row.threshold > best.threshold) {
            best = row;
        }
    }
    Ok(CalibrationResult {
        chosen_threshold: best.threshold,
        table,
    })
}

/// Calibrate `T` on labeled validation pairs with the standard sweep.
pub fn calibrate(dataset: &Dataset, pairs: &PairSet, mode: OcsMode) -> Result<CalibrationResult> {
    let scores = score_pairs(dataset, pairs, mode)?;
    calibrate_scores(&scores, &pairs.labels(), &daam_sweep())
}

/// Linear-interpolation quantiles of `values` at each level in `[0, 1]`.
pub fn quantiles(values: &[f64], levels: &[f64]) -> Vec<f64> {
    if values.is_empty() {
        return Vec::new();
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let last = (sorted.len() - 1) as f64;
    levels
        .iter()
        .map(|&q| {
            let pos = q.clamp(0.0, 1.0) * last;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            let frac = pos - lo as f64;
            sorted[lo] + (sorted[hi] - sorted[lo]) * frac
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(soft: Vec<Vec<f64>>) -> SampleRecord {
        SampleRecord::from_soft("w", "s", soft)
    }

    fn one_hot_all(card: &[usize], hot: &[usize]) -> Vec<Vec<f64>> {
        card.iter()
            .zip(hot)
            .map(|(&c, &h)| {
                let mut v = vec![0.0; c];
                v[h] = 1.0;
                v
            })
            .collect()
    }

    const CARDS: [usize; 15] = crate::schema::CARDINALITIES;

    #[test]
    fn cosine_examples() {
        assert_eq!(cosine_sim(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(cosine_sim(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        // 0.5 / (sqrt(0.5) * 1)
        assert!((cosine_sim(&[0.5, 0.5], &[1.0, 0.0]).unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-6);
    }

    #[test]
    fn cosine_errors() {
        assert!(matches!(cosine_sim(&[0.0, 0.0], &[1.0, 0.0]), Err(Error::ZeroVector)));
        assert!(matches!(
            cosine_sim(&[1.0], &[1.0, 0.0]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn identical_records_score_one() {
        let r = rec(one_hot_all(&CARDS, &[0; 15]));
        let s = score_pair(&r, &r, OcsMode::Mean).unwrap();
        assert!(s.per_feature.iter().all(|&x| x == 1.0));
        assert_eq!(s.overall, 1.0);
    }

    #[test]
    fn two_orthogonal_features() {
        let q = rec(one_hot_all(&CARDS, &[0; 15]));
        let mut hot = [0; 15];
        hot[3] = 1;
        hot[9] = 1;
        let k = rec(one_hot_all(&CARDS, &hot));
        let s = score_pair(&q, &k, OcsMode::Mean).unwrap();
        assert!((s.overall - 13.0 / 15.0).abs() < 1e-12);
        assert_eq!(score_pair(&k, &q, OcsMode::Mean).unwrap(), s);
        assert!((score_pair(&q, &k, OcsMode::Sum).unwrap().overall - 13.0).abs() < 1e-12);
    }

    #[test]
    fn missing_soft() {
        let q = SampleRecord::new("w", "s", [0; 15]);
        assert!(matches!(score_pair(&q, &q, OcsMode::Mean), Err(Error::MissingSoft(_))));
    }

    #[test]
    fn mismatched_lengths() {
        let q = rec(one_hot_all(&CARDS, &[0; 15]));
        let mut soft = one_hot_all(&CARDS, &[0; 15]);
        soft[0] = vec![1.0, 0.0, 0.0];
        let k = rec(soft);
        assert!(matches!(
            score_pair(&q, &k, OcsMode::Mean),
            Err(Error::SchemaMismatch(_))
        ));
    }

    #[test]
    fn classify_rule() {
        assert_eq!(classify(0.3784, 0.5), Decision::Different);
        assert_eq!(classify(0.5, 0.5), Decision::Same);
        for t in daam_sweep() {
            assert_eq!(classify(1.0, t), Decision::Same);
        }
    }

    #[test]
    fn separable_scores_choose_largest() {
        let scores = [0.95, 0.95, 0.95, 0.05, 0.05];
        let labels = [
            Decision::Same,
            Decision::Same,
            Decision::Same,
            Decision::Different,
            Decision::Different,
        ];
        let c = calibrate_scores(&scores, &labels, &daam_sweep()).unwrap();
        assert_eq!(c.chosen_threshold, 0.9);
        let row = c.chosen_row();
        assert_eq!((row.precision, row.recall), (1.0, 1.0));
        assert_eq!(c.table.len(), 9);
    }

    #[test]
    fn identical_scores_do_not_raise() {
        let scores = [0.5; 4];
        let labels = [Decision::Same, Decision::Different, Decision::Same, Decision::Different];
        let c = calibrate_scores(&scores, &labels, &daam_sweep()).unwrap();
        // T <= 0.5: all positive, P = 0.5, R = 1; T > 0.5: no positives, P = R = 0
        assert_eq!(c.chosen_threshold, 0.9);
        let low = &c.table[0];
        assert_eq!((low.precision, low.recall), (0.5, 1.0));
        assert_eq!((c.chosen_row().precision, c.chosen_row().recall), (0.0, 0.0));
    }

    #[test]
    fn degenerate_labels() {
        let labels = [Decision::Same; 3];
        assert!(matches!(
            calibrate_scores(&[0.1, 0.2, 0.3], &labels, &daam_sweep()),
            Err(Error::DegenerateLabels)
        ));
    }

    #[test]
    fn sweep_values_are_exact_decimals() {
        assert_eq!(daam_sweep()[2], 0.3);
        assert_eq!(daam_sweep()[6], 0.7);
    }

    #[test]
    fn quantile_interpolation() {
        let v = [4.0, 1.0, 3.0, 2.0, 5.0];
        assert_eq!(quantiles(&v, &[0.0, 0.5, 1.0, 0.125]), vec![1.0, 3.0, 5.0, 1.5]);
    }
}
