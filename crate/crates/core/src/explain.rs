//! Per-feature verification reports.
//!
//! A DAAM report lists each feature's cosine similarity; a LAAM report
//! decomposes the log-likelihood ratio into one additive term per network
//! node. Reports render as text (with similarity bars), JSON, or a plot-data
//! CSV of paired per-feature series.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;

use crate::daam::{self, OcsMode};
use crate::data::{argmax_assignment, SampleRecord};
use crate::error::Result;
use crate::laam::{self, LaamModel};
use crate::schema::{FeatureSchema, NUM_FEATURES};
use crate::Decision;

/// DAAM features below this similarity are flagged.
pub const DEFAULT_SALIENCE: f64 = 0.5;
/// LAAM flags this many of the most negative contributions.
pub const DEFAULT_LAAM_LOWLIGHTS: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FeatureEntry {
    pub name: String,
    pub q_class: String,
    pub k_class: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_probs: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_probs: Option<Vec<f64>>,
    /// Distance code as `'ik'`, LAAM only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub code: Option<String>,
    /// Paired plot series: for DAAM the questioned sample's top-class
    /// probability and the known sample's probability of that same class; for
    /// LAAM the node's log factor under each network.
    pub q_score: f64,
    pub k_score: f64,
    /// Similarity in `[0, 1]` (DAAM) or log-factor difference (LAAM).
    pub contribution: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub method: String,
    pub questioned: String,
    pub known: String,
    pub features: Vec<FeatureEntry>,
    pub overall: f64,
    pub threshold: f64,
    pub verdict: Decision,
    /// Names of the weakest features.
    pub lowlights: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Json,
    PlotData,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "text" => Ok(ReportFormat::Text),
            "json" => Ok(ReportFormat::Json),
            "plotdata" => Ok(ReportFormat::PlotData),
            other => Err(format!("unknown format '{other}' (text|json|plotdata)")),
        }
    }
}

fn class_name(schema: &FeatureSchema, j: usize, class: usize) -> String {
    schema.feature(j).class_labels[class].clone()
}

pub fn explain_daam(
    schema: &FeatureSchema,
    q: &SampleRecord,
    k: &SampleRecord,
    threshold: f64,
    mode: OcsMode,
    salience: f64,
) -> Result<VerificationReport> {
    let score = daam::score_pair(q, k, mode)?;
    let (qs, ks) = (q.soft()?, k.soft()?);
    let q_labels = argmax_assignment(q)?;
    let k_labels = argmax_assignment(k)?;
    let features: Vec<FeatureEntry> = (0..NUM_FEATURES)
        .map(|j| FeatureEntry {
            name: schema.feature(j).name.clone(),
            q_class: class_name(schema, j, q_labels[j]),
            k_class: class_name(schema, j, k_labels[j]),
            q_probs: Some(qs[j].clone()),
            k_probs: Some(ks[j].clone()),
            code: None,
            q_score: qs[j][q_labels[j]],
            k_score: ks[j][q_labels[j]],
            contribution: score.per_feature[j],
        })
        .collect();
    let lowlights = features
        .iter()
        .filter(|f| f.contribution < salience)
        .map(|f| f.name.clone())
        .collect();
    Ok(VerificationReport {
        method: "daam".into(),
        questioned: q.key(),
        known: k.key(),
        features,
        overall: score.overall,
        threshold,
        verdict: daam::classify(score.overall, threshold),
        lowlights,
    })
}

/// Hard labels for LAAM: argmax of soft vectors when present.
fn hard_labels(r: &SampleRecord) -> Result<[usize; NUM_FEATURES]> {
    if r.soft.is_some() {
        argmax_assignment(r)
    } else {
        Ok(r.labels)
    }
}

pub fn explain_laam(
    schema: &FeatureSchema,
    q: &SampleRecord,
    k: &SampleRecord,
    model: &LaamModel,
    tau: f64,
    lowlight_count: usize,
) -> Result<VerificationReport> {
    let mut qh = q.clone();
    qh.labels = hard_labels(q)?;
    let mut kh = k.clone();
    kh.labels = hard_labels(k)?;
    let d = laam::distance_vector(schema, &qh, &kh)?;
    let total = model.llr(&d)?;
    let same = model.same.log_factors(&d)?;
    let different = model.different.log_factors(&d)?;
    let features: Vec<FeatureEntry> = (0..NUM_FEATURES)
        .map(|j| FeatureEntry {
            name: schema.feature(j).name.clone(),
            q_class: class_name(schema, j, qh.labels[j]),
            k_class: class_name(schema, j, kh.labels[j]),
            q_probs: None,
            k_probs: None,
            code: Some(laam::code_label(schema.cardinality(j), d.0[j])),
            q_score: same[j],
            k_score: different[j],
            contribution: same[j] - different[j],
        })
        .collect();
    let mut negative: Vec<&FeatureEntry> = features.iter().filter(|f| f.contribution < 0.0).collect();
    negative.sort_by(|a, b| a.contribution.total_cmp(&b.contribution));
    let lowlights = negative
        .into_iter()
        .take(lowlight_count)
        .map(|f| f.name.clone())
        .collect();
    Ok(VerificationReport {
        method: "laam".into(),
        questioned: q.key(),
        known: k.key(),
        features,
        overall: total,
        threshold: tau,
        verdict: laam::classify_llr(total, tau),
        lowlights,
    })
}

const BAR_WIDTH: usize = 20;

impl VerificationReport {
    pub fn render(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Text => self.to_text(),
            ReportFormat::Json => {
                let mut s = serde_json::to_string_pretty(self).expect("report serializes");
                s.push('\n');
                s
            }
            ReportFormat::PlotData => self.to_plot_data(),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{} verification: {} (questioned) vs {} (known)",
            self.method.to_uppercase(),
            self.questioned,
            self.known
        );
        let name_w = self.features.iter().map(|f| f.name.len()).max().unwrap_or(7).max(7);
        let class_w = self
            .features
            .iter()
            .flat_map(|f| [f.q_class.len(), f.k_class.len()])
            .max()
            .unwrap_or(1)
            .max(9);
        let is_daam = self.method == "daam";
        let _ = writeln!(
            out,
            "{:<name_w$}  {:<class_w$}  {:<class_w$}  {}",
            "feature",
            "q",
            "k",
            if is_daam { "similarity" } else { "code  log-ratio" }
        );
        for f in &self.features {
            let detail = if is_daam {
                let filled = (f.contribution.clamp(0.0, 1.0) * BAR_WIDTH as f64).round() as usize;
                format!("{:.4} {}", f.contribution, "#".repeat(filled))
            } else {
                format!("{:<4}  {:+.4}", f.code.as_deref().unwrap_or(""), f.contribution)
            };
            let _ = writeln!(
                out,
                "{:<name_w$}  {:<class_w$}  {:<class_w$}  {detail}",
                f.name, f.q_class, f.k_class
            );
        }
        let score_name = if is_daam {
            "overall similarity"
        } else {
            "log-likelihood ratio"
        };
        let _ = writeln!(
            out,
            "{score_name} {:.4}, threshold {}, verdict: {}",
            self.overall, self.threshold, self.verdict
        );
        if self.lowlights.is_empty() {
            let _ = writeln!(out, "lowlights: none");
        } else {
            let _ = writeln!(out, "lowlights: {}", self.lowlights.join(", "));
        }
        out
    }

    /// `feature,q_score,k_score,contribution`, one row per feature.
    pub fn to_plot_data(&self) -> String {
        let mut out = String::from("feature,q_score,k_score,contribution\n");
        for f in &self.features {
            let _ = writeln!(
                out,
                "{},{:.6},{:.6},{:.6}",
                f.name, f.q_score, f.k_score, f.contribution
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laam::{fit_vectors, DistanceVector, NetworkStructure};
    use crate::schema::builtin_schema;
    use crate::synthetic::{generate_dataset, soften};

    #[test]
    fn identical_records_have_no_lowlights() {
        let s = builtin_schema();
        let d = soften(&generate_dataset(&s, 2, 2, 0.8, 1).unwrap(), 0.9).unwrap();
        let r = d.record(0);
        let rep = explain_daam(&s, r, r, 0.5, OcsMode::Mean, DEFAULT_SALIENCE).unwrap();
        assert!(rep.features.iter().all(|f| (f.contribution - 1.0).abs() < 1e-12));
        assert!(rep.lowlights.is_empty());
        assert_eq!(rep.verdict, Decision::Same);
        assert_eq!(rep.features.len(), 15);
    }

    #[test]
    fn weak_features_become_lowlights() {
        let s = builtin_schema();
        let base = soften(&generate_dataset(&s, 1, 1, 1.0, 2).unwrap(), 0.9).unwrap();
        let q = base.record(0).clone();
        let mut k_labels = q.labels;
        // flip is_lowercase, staff_of_d and exit_stroke_d
        for j in [7, 11, 12] {
            k_labels[j] = (k_labels[j] + 1) % s.cardinality(j);
        }
        let k_plain = crate::data::Dataset::new(s.clone(), vec![SampleRecord::new("w2", "s1", k_labels)]).unwrap();
        let k = soften(&k_plain, 0.9).unwrap().record(0).clone();
        let rep = explain_daam(&s, &q, &k, 0.5, OcsMode::Mean, DEFAULT_SALIENCE).unwrap();
        assert_eq!(rep.lowlights, ["is_lowercase", "staff_of_d", "exit_stroke_d"]);
        let back = explain_daam(&s, &k, &q, 0.5, OcsMode::Mean, DEFAULT_SALIENCE).unwrap();
        assert_eq!(back.lowlights, rep.lowlights);
        assert_eq!(back.overall, rep.overall);
        assert_eq!(back.verdict, rep.verdict);
        let text = rep.to_text();
        assert!(text.contains("lowlights: is_lowercase, staff_of_d, exit_stroke_d"));
        assert_eq!(rep.to_plot_data().lines().count(), 16);
    }

    #[test]
    fn laam_identical_networks() {
        let s = builtin_schema();
        let st = NetworkStructure::from_schema(&s);
        let v = vec![DistanceVector([0; 15]), DistanceVector([1; 15])];
        let same = fit_vectors(&st, &v, 1.0, Decision::Same).unwrap();
        let mut different = same.clone();
        different.hypothesis = Decision::Different;
        let model = LaamModel {
            same,
            different,
            tau: 0.0,
        };
        let q = SampleRecord::new("w1", "s1", [0; 15]);
        let k = SampleRecord::new("w2", "s1", [1; 15]);
        let rep = explain_laam(&s, &q, &k, &model, 0.0, DEFAULT_LAAM_LOWLIGHTS).unwrap();
        assert!(rep.features.iter().all(|f| f.contribution == 0.0));
        assert_eq!(rep.overall, 0.0);
        assert!(rep.lowlights.is_empty());
        assert_eq!(rep.verdict, Decision::Same);
        let json = rep.render(ReportFormat::Json);
        assert!(json.contains("\"verdict\": \"same\""));
    }
}
