//! Sample records and their on-disk formats.
//!
//! Two formats are supported:
//!
//! * labels CSV: header `writer_id,sample_id,f1,...,f15`, one record per
//!   line, integer class indices, LF line endings;
//! * soft records: JSON lines. An optional first line
//!   `{"format":"veriscribe-soft-records","version":1}` identifies the file;
//!   every other line is `{"writer_id":..,"sample_id":..,"soft":[[..],..]}`
//!   with 15 probability vectors. Probabilities are written with 9
//!   significant digits.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::schema::{FeatureSchema, NUM_FEATURES};

pub const SOFT_FORMAT: &str = "veriscribe-soft-records";
pub const SOFT_VERSION: u32 = 1;

const SOFT_SUM_TOLERANCE: f64 = 1e-6;
const WRITE_ROUNDING_TOLERANCE: f64 = 1e-8;

/// Hard class assignment for all 15 features.
pub type Labels = [usize; NUM_FEATURES];

#[derive(Clone, Debug, PartialEq)]
pub struct SampleRecord {
    pub writer_id: String,
    pub sample_id: String,
    pub labels: Labels,
    /// Per-feature class probabilities; `soft[j].len()` is feature j's cardinality.
    pub soft: Option<Vec<Vec<f64>>>,
}

impl SampleRecord {
    pub fn new(writer_id: impl Into<String>, sample_id: impl Into<String>, labels: Labels) -> Self {
        SampleRecord {
            writer_id: writer_id.into(),
            sample_id: sample_id.into(),
            labels,
            soft: None,
        }
    }

    /// Record whose labels are the argmax of `soft`.
    pub fn from_soft(writer_id: impl Into<String>, sample_id: impl Into<String>, soft: Vec<Vec<f64>>) -> Self {
        let labels = std::array::from_fn(|j| soft.get(j).map_or(0, |v| argmax(v)));
        SampleRecord {
            writer_id: writer_id.into(),
            sample_id: sample_id.into(),
            labels,
            soft: Some(soft),
        }
    }

    /// `writer_id/sample_id`, used in diagnostics.
    pub fn key(&self) -> String {
        format!("{}/{}", self.writer_id, self.sample_id)
    }

    pub fn soft(&self) -> Result<&[Vec<f64>]> {
        self.soft.as_deref().ok_or_else(|| Error::MissingSoft(self.key()))
    }

    /// Check labels and soft vectors against `schema`.
    pub fn validate(&self, schema: &FeatureSchema) -> Result<()> {
        for (j, &label) in self.labels.iter().enumerate() {
            let card = schema.cardinality(j);
            if label >= card {
                return Err(Error::validation(
                    format!("record {} f{}", self.key(), j + 1),
                    format!("label {label} out of range for cardinality {card}"),
                ));
            }
        }
        if let Some(soft) = &self.soft {
            if soft.len() != NUM_FEATURES {
                return Err(Error::validation(
                    format!("record {} soft", self.key()),
                    format!("expected {NUM_FEATURES} vectors, found {}", soft.len()),
                ));
            }
            for (j, v) in soft.iter().enumerate() {
                check_probability_vector(v, schema.cardinality(j), || format!("record {} f{}", self.key(), j + 1))?;
            }
        }
        Ok(())
    }
}

fn check_probability_vector(v: &[f64], card: usize, field: impl Fn() -> String) -> Result<()> {
    if v.len() != card {
        return Err(Error::validation(
            field(),
            format!("vector of length {} for cardinality {card}", v.len()),
        ));
    }
    if v.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::validation(field(), "entries must be finite and non-negative"));
    }
    let sum: f64 = v.iter().sum();
    if (sum - 1.0).abs() > SOFT_SUM_TOLERANCE {
        return Err(Error::validation(field(), format!("vector sums to {sum}")));
    }
    Ok(())
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in v.iter().enumerate().skip(1) {
        if p > v[best] {
            best = i;
        }
    }
    best
}

/// Per-feature argmax of the record's soft vectors.
pub fn argmax_assignment(record: &SampleRecord) -> Result<Labels> {
    let soft = record.soft()?;
    if soft.len() != NUM_FEATURES {
        return Err(Error::LengthMismatch {
            expected: NUM_FEATURES,
            actual: soft.len(),
        });
    }
    Ok(std::array::from_fn(|j| argmax(&soft[j])))
}

/// A validated collection of records over one schema.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    schema: FeatureSchema,
    records: Vec<SampleRecord>,
    index: BTreeMap<String, Vec<usize>>,
}

impl Dataset {
    /// Validates every record; the whole dataset is rejected on the first error.
    pub fn new(schema: FeatureSchema, records: Vec<SampleRecord>) -> Result<Self> {
        let mut keys = HashSet::new();
        let mut index: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (pos, r) in records.iter().enumerate() {
            r.validate(&schema)?;
            if !keys.insert((r.writer_id.as_str(), r.sample_id.as_str())) {
                return Err(Error::validation(
                    format!("record {}", r.key()),
                    "duplicate (writer_id, sample_id)",
                ));
            }
            index.entry(r.writer_id.clone()).or_default().push(pos);
        }
        Ok(Dataset { schema, records, index })
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn records(&self) -> &[SampleRecord] {
        &self.records
    }

    pub fn record(&self, pos: usize) -> &SampleRecord {
        &self.records[pos]
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Writer ids in sorted order.
    pub fn writers(&self) -> impl Iterator<Item = &str> {
        self.index.keys().map(String::as_str)
    }

    pub fn writer_count(&self) -> usize {
        self.index.len()
    }

    /// Record positions of one writer, in file order.
    pub fn writer_records(&self, writer_id: &str) -> &[usize] {
        self.index.get(writer_id).map_or(&[], Vec::as_slice)
    }

    pub fn find(&self, writer_id: &str, sample_id: &str) -> Option<usize> {
        self.writer_records(writer_id)
            .iter()
            .copied()
            .find(|&p| self.records[p].sample_id == sample_id)
    }

    /// True when every record carries soft vectors (and there is at least one record).
    pub fn has_soft(&self) -> bool {
        !self.records.is_empty() && self.records.iter().all(|r| r.soft.is_some())
    }

    pub fn into_records(self) -> Vec<SampleRecord> {
        self.records
    }
}

fn labels_header() -> String {
    let mut h = String::from("writer_id,sample_id");
    for j in 1..=NUM_FEATURES {
        h.push_str(&format!(",f{j}"));
    }
    h
}

pub fn parse_labels_csv(text: &str, schema: &FeatureSchema) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::None)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| Error::parse(1, e.to_string()))?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if header.is_empty() && text.trim().is_empty() {
        return Err(Error::parse(1, "missing header"));
    }
    if header != labels_header() {
        return Err(Error::parse(1, format!("expected header '{}'", labels_header())));
    }
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::parse(line, e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        if row.len() != NUM_FEATURES + 2 {
            return Err(Error::parse(
                line,
                format!("expected {} fields, found {}", NUM_FEATURES + 2, row.len()),
            ));
        }
        let mut labels = [0usize; NUM_FEATURES];
        for (j, slot) in labels.iter_mut().enumerate() {
            let field = &row[j + 2];
            *slot = field
                .parse()
                .map_err(|_| Error::parse(line, format!("f{}: '{field}' is not a class index", j + 1)))?;
        }
        if row[0].is_empty() || row[1].is_empty() {
            return Err(Error::parse(line, "empty writer_id or sample_id"));
        }
        records.push(SampleRecord::new(&row[0], &row[1], labels));
    }
    Dataset::new(schema.clone(), records)
}

pub fn read_labels_csv(path: &Path, schema: &FeatureSchema) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_labels_csv(&text, schema)
}

pub fn format_labels_csv(dataset: &Dataset) -> String {
    let mut out = labels_header();
    out.push('\n');
    for r in dataset.records() {
        out.push_str(&r.writer_id);
        out.push(',');
        out.push_str(&r.sample_id);
        for l in r.labels {
            out.push(',');
            out.push_str(&l.to_string());
        }
        out.push('\n');
    }
    out
}

pub fn write_labels_csv(path: &Path, dataset: &Dataset) -> Result<()> {
    write_atomic(path, format_labels_csv(dataset).as_bytes())
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SoftHeader {
    format: String,
    version: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SoftLine {
    writer_id: String,
    sample_id: String,
    soft: Vec<Vec<f64>>,
}

/// Round to `digits` significant decimal digits.
pub(crate) fn round_significant(x: f64, digits: usize) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", digits - 1, x).parse().unwrap_or(x)
}

pub fn parse_soft_records(text: &str, schema: &FeatureSchema) -> Result<Dataset> {
    let mut records = Vec::new();
    let mut first = true;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(line).map_err(|e| Error::parse(line_no, e.to_string()))?;
        if value.get("format").is_some() {
            if !first {
                return Err(Error::parse(line_no, "format header must be the first line"));
            }
            let header: SoftHeader = serde_json::from_value(value).map_err(|e| Error::parse(line_no, e.to_string()))?;
            if header.format != SOFT_FORMAT || header.version != SOFT_VERSION {
                return Err(Error::parse(
                    line_no,
                    format!(
                        "unsupported format '{}' version {} (expected {SOFT_FORMAT} v{SOFT_VERSION})",
                        header.format, header.version
                    ),
                ));
            }
            first = false;
            continue;
        }
        first = false;
        let rec: SoftLine = serde_json::from_value(value).map_err(|e| Error::parse(line_no, e.to_string()))?;
        let key = format!("{}/{}", rec.writer_id, rec.sample_id);
        if rec.soft.len() != NUM_FEATURES {
            return Err(Error::validation(
                format!("record {key} soft"),
                format!("expected {NUM_FEATURES} vectors, found {}", rec.soft.len()),
            ));
        }
        let mut soft = rec.soft;
        for (j, v) in soft.iter_mut().enumerate() {
            check_probability_vector(v, schema.cardinality(j), || format!("record {key} f{}", j + 1))?;
            let sum: f64 = v.iter().sum();
            // values written at 9 significant digits are kept verbatim
            if (sum - 1.0).abs() > WRITE_ROUNDING_TOLERANCE {
                v.iter_mut().for_each(|p| *p /= sum);
            }
        }
        records.push(SampleRecord::from_soft(rec.writer_id, rec.sample_id, soft));
    }
    Dataset::new(schema.clone(), records)
}

pub fn read_soft_records(path: &Path, schema: &FeatureSchema) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_soft_records(&text, schema)
}

/// Serialize records carrying soft vectors. Errors with `MissingSoft` on the
/// first record without them.
pub fn format_soft_records(dataset: &Dataset) -> Result<String> {
    let header = SoftHeader {
        format: SOFT_FORMAT.to_string(),
        version: SOFT_VERSION,
    };
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    for r in dataset.records() {
        let soft = r
            .soft()?
            .iter()
            .map(|v| v.iter().map(|&p| round_significant(p, 9)).collect())
            .collect();
        let line = SoftLine {
            writer_id: r.writer_id.clone(),
            sample_id: r.sample_id.clone(),
            soft,
        };
        out.push_str(&serde_json::to_string(&line).expect("record serializes"));
        out.push('\n');
    }
    Ok(out)
}

pub fn write_soft_records(path: &Path, dataset: &Dataset) -> Result<()> {
    write_atomic(path, format_soft_records(dataset)?.as_bytes())
}

/// Read either format, choosing by extension: `.csv` is a labels file,
/// anything else is a soft-record file.
pub fn read_any(path: &Path, schema: &FeatureSchema) -> Result<Dataset> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        read_labels_csv(path, schema)
    } else {
        read_soft_records(path, schema)
    }
}
