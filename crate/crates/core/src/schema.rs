//! The 15-feature domain model.
//!
//! Every other module is parameterized by a [`FeatureSchema`]: feature names,
//! class labels, cardinalities and the dependency DAG used by the distance
//! networks. Features are addressed by zero-based position internally and
//! printed as `f1..f15`.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

pub const NUM_FEATURES: usize = 15;

/// Required cardinality of each feature position.
pub const CARDINALITIES: [usize; NUM_FEATURES] = [2, 2, 2, 4, 3, 3, 3, 2, 2, 2, 4, 3, 4, 2, 2];

/// Parent → child edges of the default distance network (1-based).
const DEFAULT_EDGES: [(usize, usize); 10] = [
    (1, 2),
    (3, 4),
    (11, 12),
    (13, 14),
    (7, 8),
    (8, 9),
    (9, 10),
    (5, 7),
    (6, 7),
    (15, 7),
];

/// Builtin feature table: name, labels, class percentages as annotated.
/// Percentages are normalized when the schema is built.
const BUILTIN: [(&str, &[&str], &[f64]); NUM_FEATURES] = [
    ("pen_pressure", &["Strong", "Medium"], &[40.6, 59.4]),
    ("tilt", &["Normal", "Tilted"], &[81.24, 18.76]),
    ("entry_stroke_a", &["No Stroke", "Downstroke"], &[94.32, 5.68]),
    (
        "slantness",
        &["Normal", "Slight Right", "Very Right", "Left"],
        &[52.41, 29.38, 11.05, 7.58],
    ),
    ("size", &["Small", "Medium", "Large"], &[23.01, 52.41, 24.58]),
    ("dimension", &["Low", "Medium", "High"], &[29.75, 52.18, 18.07]),
    ("letter_spacing", &["Less", "Medium", "High"], &[22.49, 43.09, 25.78]),
    ("is_lowercase", &["No", "Yes"], &[1.5, 98.5]),
    ("is_continuous", &["No", "Yes"], &[33.38, 66.62]),
    ("constancy", &["Irregular", "Regular"], &[39.65, 60.35]),
    (
        "staff_of_a",
        &["No Staff", "Retraced", "Loopy", "Tented"],
        &[18.04, 58.45, 7.0, 16.51],
    ),
    ("staff_of_d", &["No Staff", "Retraced", "Loopy"], &[9.86, 49.63, 40.51]),
    (
        "exit_stroke_d",
        &["No Stroke", "Down Stroke", "Curved Up", "Straight"],
        &[24.86, 44.02, 12.6, 18.53],
    ),
    ("word_formation", &["Not Well Formed", "Well Formed"], &[56.91, 43.09]),
    ("formation_n", &["No Formation", "Normal"], &[22.97, 77.03]),
];

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureDef {
    /// 1-based feature number (`f1` is 1).
    pub index: usize,
    pub name: String,
    pub class_labels: Vec<String>,
    pub cardinality: usize,
    pub default_marginal: Vec<f64>,
}

/// Validated, immutable feature schema.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureSchema {
    features: Vec<FeatureDef>,
    /// `(parent, child)` as zero-based positions.
    edges: Vec<(usize, usize)>,
    parents: Vec<Vec<usize>>,
    topo_order: Vec<usize>,
}

/// Number of unordered class pairs `(i, k)`, `i <= k`, for `n` classes.
pub fn distance_code_count(cardinality: usize) -> usize {
    cardinality * (cardinality + 1) / 2
}

/// Parents per node (ascending) and a topological order, or the node on
/// which a cycle was detected.
pub(crate) fn analyze_dag(
    n: usize,
    edges: &[(usize, usize)],
) -> std::result::Result<(Vec<Vec<usize>>, Vec<usize>), usize> {
    let mut parents = vec![Vec::new(); n];
    let mut children = vec![Vec::new(); n];
    for &(p, c) in edges {
        parents[c].push(p);
        children[p].push(c);
    }
    for ps in &mut parents {
        ps.sort_unstable();
    }
    let mut indegree: Vec<usize> = parents.iter().map(Vec::len).collect();
    // Kahn's algorithm, smallest ready index first so the order is canonical.
    let mut ready: std::collections::BTreeSet<usize> = (0..n).filter(|&j| indegree[j] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(j) = ready.pop_first() {
        order.push(j);
        for &c in &children[j] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.insert(c);
            }
        }
    }
    if order.len() < n {
        let stuck = (0..n).find(|&j| indegree[j] > 0).unwrap_or(0);
        return Err(stuck);
    }
    Ok((parents, order))
}

impl FeatureSchema {
    /// Validate and build a schema. `edges` are zero-based `(parent, child)`.
    pub fn new(features: Vec<FeatureDef>, edges: Vec<(usize, usize)>) -> Result<Self> {
        if features.len() != NUM_FEATURES {
            return Err(Error::validation(
                "features",
                format!("expected {NUM_FEATURES} features, found {}", features.len()),
            ));
        }
        let mut names = HashSet::new();
        for (pos, f) in features.iter().enumerate() {
            let field = format!("f{}", pos + 1);
            if f.index != pos + 1 {
                return Err(Error::validation(
                    &field,
                    format!("index {} is not contiguous (expected {})", f.index, pos + 1),
                ));
            }
            if f.name.is_empty() || !f.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(Error::validation(
                    format!("{field}.name"),
                    format!("'{}' is not an identifier", f.name),
                ));
            }
            if !names.insert(f.name.as_str()) {
                return Err(Error::validation(
                    format!("{field}.name"),
                    format!("duplicate feature name '{}'", f.name),
                ));
            }
            if f.cardinality != CARDINALITIES[pos] {
                return Err(Error::validation(
                    format!("{field}.cardinality"),
                    format!("expected {}, found {}", CARDINALITIES[pos], f.cardinality),
                ));
            }
            if f.class_labels.len() != f.cardinality {
                return Err(Error::validation(
                    format!("{field}.labels"),
                    format!("{} labels for cardinality {}", f.class_labels.len(), f.cardinality),
                ));
            }
            if f.default_marginal.len() != f.cardinality {
                return Err(Error::validation(
                    format!("{field}.marginal"),
                    format!("{} entries for cardinality {}", f.default_marginal.len(), f.cardinality),
                ));
            }
            if f.default_marginal
                .iter()
                .any(|p| !p.is_finite() || !(0.0..=1.0).contains(p))
            {
                return Err(Error::validation(
                    format!("{field}.marginal"),
                    "entries must lie in [0, 1]",
                ));
            }
            let sum: f64 = f.default_marginal.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::validation(
                    format!("{field}.marginal"),
                    format!("entries sum to {sum}, not 1"),
                ));
            }
        }

        let mut seen = HashSet::new();
        for &(p, c) in &edges {
            if p >= NUM_FEATURES || c >= NUM_FEATURES {
                return Err(Error::validation(
                    "edges",
                    format!("edge f{}->f{} references an unknown feature", p + 1, c + 1),
                ));
            }
            if p == c {
                return Err(Error::validation("edges", format!("self-loop on f{}", p + 1)));
            }
            if !seen.insert((p, c)) {
                return Err(Error::validation(
                    "edges",
                    format!("duplicate edge f{}->f{}", p + 1, c + 1),
                ));
            }
        }
        let (parents, topo_order) = analyze_dag(NUM_FEATURES, &edges)
            .map_err(|node| Error::validation("edges", format!("cycle through f{}", node + 1)))?;

        Ok(FeatureSchema {
            features,
            edges,
            parents,
            topo_order,
        })
    }

    pub fn features(&self) -> &[FeatureDef] {
        &self.features
    }

    pub fn feature(&self, pos: usize) -> &FeatureDef {
        &self.features[pos]
    }

    /// Zero-based `(parent, child)` edges in declaration order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Parents of `pos`, ascending.
    pub fn parents(&self, pos: usize) -> &[usize] {
        &self.parents[pos]
    }

    pub fn topological_order(&self) -> &[usize] {
        &self.topo_order
    }

    pub fn roots(&self) -> Vec<usize> {
        (0..NUM_FEATURES).filter(|&j| self.parents[j].is_empty()).collect()
    }

    pub fn cardinality(&self, pos: usize) -> usize {
        self.features[pos].cardinality
    }

    pub fn cardinalities(&self) -> [usize; NUM_FEATURES] {
        std::array::from_fn(|j| self.features[j].cardinality)
    }

    /// Distance-code count per feature.
    pub fn code_counts(&self) -> [usize; NUM_FEATURES] {
        std::array::from_fn(|j| distance_code_count(self.features[j].cardinality))
    }

    /// Size of the joint distance-code space (product of code counts).
    pub fn code_space_size(&self) -> u128 {
        self.code_counts().iter().map(|&k| k as u128).product()
    }

    pub fn position_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    /// Render as a schema document (see [`parse_schema`]).
    pub fn to_document(&self) -> String {
        let mut out = String::from("# veriscribe feature schema v1\n");
        for f in &self.features {
            let marginal: Vec<String> = f.default_marginal.iter().map(|p| p.to_string()).collect();
            let _ = write!(
                out,
                "\nfeature f{}\nname: {}\nlabels: {}\nmarginal: {}\n",
                f.index,
                f.name,
                f.class_labels.join(" | "),
                marginal.join(" ")
            );
        }
        let edges: Vec<String> = self
            .edges
            .iter()
            .map(|(p, c)| format!("f{}->f{}", p + 1, c + 1))
            .collect();
        let _ = writeln!(out, "\nedges: {}", edges.join(" "));
        out
    }
}

/// Default schema: builtin feature table, normalized class marginals and the
/// default distance-network edges.
pub fn builtin_schema() -> FeatureSchema {
    let features = BUILTIN
        .iter()
        .enumerate()
        .map(|(pos, (name, labels, pct))| {
            let total: f64 = pct.iter().sum();
            FeatureDef {
                index: pos + 1,
                name: (*name).to_string(),
                class_labels: labels.iter().map(|s| (*s).to_string()).collect(),
                cardinality: labels.len(),
                default_marginal: pct.iter().map(|p| p / total).collect(),
            }
        })
        .collect();
    let edges = DEFAULT_EDGES.iter().map(|&(p, c)| (p - 1, c - 1)).collect();
    FeatureSchema::new(features, edges).expect("builtin schema is valid")
}

fn parse_feature_ref(token: &str, line: usize) -> Result<usize> {
    let n: usize = token
        .strip_prefix('f')
        .and_then(|d| d.parse().ok())
        .ok_or_else(|| Error::parse(line, format!("expected a feature reference like f7, got '{token}'")))?;
    if n == 0 {
        return Err(Error::parse(line, "feature references start at f1"));
    }
    Ok(n)
}

#[derive(Default)]
struct PartialFeature {
    index: usize,
    line: usize,
    name: Option<String>,
    labels: Option<Vec<String>>,
    marginal: Option<Vec<f64>>,
}

impl PartialFeature {
    fn finish(self) -> Result<FeatureDef> {
        let missing = |key: &str| Error::parse(self.line, format!("feature f{} has no '{key}:'", self.index));
        let name = self.name.clone().ok_or_else(|| missing("name"))?;
        let labels = self.labels.clone().ok_or_else(|| missing("labels"))?;
        let marginal = self.marginal.clone().ok_or_else(|| missing("marginal"))?;
        Ok(FeatureDef {
            index: self.index,
            name,
            cardinality: labels.len(),
            class_labels: labels,
            default_marginal: marginal,
        })
    }
}

/// Parse and validate a schema document.
///
/// Grammar (line oriented, `#` starts a comment line, blank lines ignored):
///
/// ```text
/// feature f<N>
/// name: <identifier>
/// labels: <label> | <label> [| <label> ...]
/// marginal: <p> <p> [<p> ...]
/// ...
/// edges: f<P>->f<C> [f<P>->f<C> ...]
/// ```
///
/// `name`, `labels` and `marginal` belong to the most recent `feature`
/// header. `edges` may appear at most once, anywhere in the document; without
/// it the schema has no edges. Unknown keys are rejected.
pub fn parse_schema(text: &str) -> Result<FeatureSchema> {
    let mut features: Vec<FeatureDef> = Vec::new();
    let mut current: Option<PartialFeature> = None;
    let mut edges: Option<Vec<(usize, usize)>> = None;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("feature ") {
            if let Some(done) = current.take() {
                features.push(done.finish()?);
            }
            let index = parse_feature_ref(rest.trim(), line_no)?;
            current = Some(PartialFeature {
                index,
                line: line_no,
                ..Default::default()
            });
            continue;
        }
        let (key, value) = line
            .split_once(':')
            .ok_or_else(|| Error::parse(line_no, format!("expected 'key: value', got '{line}'")))?;
        let key = key.trim();
        let value = value.trim();
        if key == "edges" {
            if edges.is_some() {
                return Err(Error::parse(line_no, "duplicate 'edges:' line"));
            }
            let mut list = Vec::new();
            for tok in value
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
            {
                let (p, c) = tok
                    .split_once("->")
                    .ok_or_else(|| Error::parse(line_no, format!("bad edge token '{tok}'")))?;
                let p = parse_feature_ref(p, line_no)?;
                let c = parse_feature_ref(c, line_no)?;
                list.push((p - 1, c - 1));
            }
            edges = Some(list);
            continue;
        }
        let feat = current
            .as_mut()
            .ok_or_else(|| Error::parse(line_no, format!("key '{key}' outside a feature section")))?;
        let slot_taken = |taken: bool| -> Result<()> {
            if taken {
                Err(Error::parse(line_no, format!("duplicate key '{key}'")))
            } else {
                Ok(())
            }
        };
        match key {
            "name" => {
                slot_taken(feat.name.is_some())?;
                feat.name = Some(value.to_string());
            }
            "labels" => {
                slot_taken(feat.labels.is_some())?;
                feat.labels = Some(value.split('|').map(|s| s.trim().to_string()).collect());
            }
            "marginal" => {
                slot_taken(feat.marginal.is_some())?;
                let vals = value
                    .split_whitespace()
                    .map(|t| {
                        t.parse::<f64>()
                            .map_err(|_| Error::parse(line_no, format!("bad probability '{t}'")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                feat.marginal = Some(vals);
            }
            other => return Err(Error::parse(line_no, format!("unknown key '{other}'"))),
        }
    }
    if let Some(done) = current.take() {
        features.push(done.finish()?);
    }
    FeatureSchema::new(features, edges.unwrap_or_default())
}

pub fn load_schema(path: &Path) -> Result<FeatureSchema> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_schema(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_matches_table_data() {
        let s = builtin_schema();
        let staff = &s.features()[10];
        assert_eq!(staff.name, "staff_of_a");
        assert_eq!(staff.cardinality, 4);
        assert_eq!(staff.class_labels, ["No Staff", "Retraced", "Loopy", "Tented"]);
        assert_eq!(s.features()[0].default_marginal, vec![0.406, 0.594]);
        assert_eq!(s.edges().len(), 10);
    }

    #[test]
    fn cardinality_arithmetic() {
        let s = builtin_schema();
        assert_eq!(s.cardinalities(), CARDINALITIES);
        assert_eq!(s.cardinalities().iter().sum::<usize>(), 40);
        assert_eq!(s.code_space_size(), 3u128.pow(8) * 6u128.pow(4) * 10u128.pow(3));
    }

    #[test]
    fn marginals_normalized() {
        for f in builtin_schema().features() {
            let sum: f64 = f.default_marginal.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9, "{}", f.name);
        }
    }

    #[test]
    fn default_dag_roots_and_order() {
        let s = builtin_schema();
        assert_eq!(s.roots(), vec![0, 2, 4, 5, 10, 12, 14]);
        let order = s.topological_order();
        let at = |j: usize| order.iter().position(|&x| x == j).unwrap();
        for p in [4, 5, 14] {
            assert!(at(p) < at(6));
        }
        assert_eq!(s.parents(6), &[4, 5, 14]);
    }

    #[test]
    fn document_round_trip() {
        let s = builtin_schema();
        let back = parse_schema(&s.to_document()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn rejects_cycle() {
        let doc = builtin_schema().to_document().replace("edges: ", "edges: f2->f1 ");
        let err = parse_schema(&doc).unwrap_err();
        assert!(
            matches!(err, Error::Validation { ref field, .. } if field == "edges"),
            "{err}"
        );
    }

    #[test]
    fn rejects_fourteen_features() {
        let doc = builtin_schema().to_document();
        let cut = doc.find("feature f15").unwrap();
        let end = doc.find("edges:").unwrap();
        let doc = format!("{}{}", &doc[..cut], &doc[end..]).replace(" f15->f7", "");
        let err = parse_schema(&doc).unwrap_err();
        assert!(
            matches!(err, Error::Validation { ref field, .. } if field == "features"),
            "{err}"
        );
    }

    #[test]
    fn rejects_unknown_key() {
        let doc = builtin_schema()
            .to_document()
            .replace("name: tilt", "name: tilt\ncolour: blue");
        assert!(matches!(parse_schema(&doc), Err(Error::Parse { .. })));
    }

    #[test]
    fn rejects_wrong_cardinality() {
        let doc = builtin_schema()
            .to_document()
            .replace("labels: Normal | Tilted", "labels: Normal | Tilted | Other");
        let err = parse_schema(&doc).unwrap_err();
        assert!(
            matches!(err, Error::Validation { ref field, .. } if field == "f2.cardinality"),
            "{err}"
        );
    }

    #[test]
    fn remapped_names_are_data() {
        let doc = builtin_schema()
            .to_document()
            .replace("name: tilt", "name: tilt_renamed");
        let s = parse_schema(&doc).unwrap();
        assert_eq!(s.position_of("tilt_renamed"), Some(1));
    }
}
