//! Likelihood-as-a-measure scoring.
//!
//! A questioned/known pair is reduced to a [`DistanceVector`]: per feature,
//! the unordered pair of classes the two samples take, encoded as a
//! zero-based index into the lexicographic enumeration
//! `(0,0), (0,1), ..., (0,n-1), (1,1), ..., (n-1,n-1)`.
//!
//! Two discrete Bayesian networks share one DAG over the 15 distance codes:
//! one fitted on same-writer pairs, one on different-writer pairs. Each node
//! holds a conditional probability table indexed by its parents' codes,
//! estimated by additive-smoothed maximum likelihood. The joint probability of
//! a vector factorizes over the nodes, and the evidence score is the
//! log-likelihood ratio `ln P(d | same) - ln P(d | different)`, computed in
//! log space throughout.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{round_significant, Dataset, SampleRecord};
use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::partition::PairSet;
use crate::schema::{analyze_dag, FeatureSchema, NUM_FEATURES};
use crate::Decision;

pub const MODEL_FORMAT: &str = "veriscribe-laam";
pub const MODEL_VERSION: u32 = 1;

/// Default additive smoothing.
pub const DEFAULT_ALPHA: f64 = 1.0;

/// Code of the unordered class pair `{q, k}` for a feature with `cardinality`
/// classes, or `None` when either class is out of range.
pub fn pair_code(cardinality: usize, q: usize, k: usize) -> Option<usize> {
    if q >= cardinality || k >= cardinality {
        return None;
    }
    let (i, k) = (q.min(k), q.max(k));
    // rows 0..i of the upper triangle hold n, n-1, ..., n-i+1 entries
    Some(i * cardinality - i * (i.saturating_sub(1)) / 2 + (k - i))
}

/// Inverse of [`pair_code`]: the `(i, k)` pair, `i <= k`.
pub fn code_classes(cardinality: usize, code: usize) -> Option<(usize, usize)> {
    let mut base = 0;
    for i in 0..cardinality {
        let width = cardinality - i;
        if code < base + width {
            return Some((i, i + code - base));
        }
        base += width;
    }
    None
}

/// Printable form of a code, e.g. `"12"` for classes (1, 2).
pub fn code_label(cardinality: usize, code: usize) -> String {
    match code_classes(cardinality, code) {
        Some((i, k)) => format!("{i}{k}"),
        None => format!("?{code}"),
    }
}

pub fn encode_distance(schema: &FeatureSchema, feature: usize, q: usize, k: usize) -> Result<usize> {
    let cardinality = schema.cardinality(feature);
    pair_code(cardinality, q, k).ok_or(Error::OutOfRange {
        feature: feature + 1,
        class: q.max(k),
        cardinality,
    })
}

/// One distance code per feature.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DistanceVector(pub [usize; NUM_FEATURES]);

impl DistanceVector {
    pub fn code(&self, feature: usize) -> usize {
        self.0[feature]
    }

    /// Codes as `'ik'` strings.
    pub fn labels(&self, schema: &FeatureSchema) -> Vec<String> {
        (0..NUM_FEATURES)
            .map(|j| code_label(schema.cardinality(j), self.0[j]))
            .collect()
    }
}

/// Distance vector of two records from their hard labels.
pub fn distance_vector(schema: &FeatureSchema, q: &SampleRecord, k: &SampleRecord) -> Result<DistanceVector> {
    let mut codes = [0usize; NUM_FEATURES];
    for (j, slot) in codes.iter_mut().enumerate() {
        *slot = encode_distance(schema, j, q.labels[j], k.labels[j])
            .map_err(|e| Error::SchemaMismatch(format!("{} vs {}: {e}", q.key(), k.key())))?;
    }
    Ok(DistanceVector(codes))
}

/// Distance vectors of every pair, in pair order.
pub fn pair_vectors(dataset: &Dataset, pairs: &PairSet) -> Result<Vec<DistanceVector>> {
    pairs
        .pairs
        .iter()
        .map(|p| distance_vector(dataset.schema(), dataset.record(p.a), dataset.record(p.b)))
        .collect()
}

/// DAG over the 15 distance-code nodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetworkStructure {
    code_counts: [usize; NUM_FEATURES],
    edges: Vec<(usize, usize)>,
    parents: Vec<Vec<usize>>,
    order: Vec<usize>,
}

impl NetworkStructure {
    /// `edges` are zero-based `(parent, child)`.
    pub fn new(code_counts: [usize; NUM_FEATURES], edges: Vec<(usize, usize)>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for &(p, c) in &edges {
            if p >= NUM_FEATURES || c >= NUM_FEATURES {
                return Err(Error::validation(
                    "edges",
                    format!("edge f{}->f{} references an unknown node", p + 1, c + 1),
                ));
            }
            if p == c {
                return Err(Error::CyclicStructure(p + 1));
            }
            if !seen.insert((p, c)) {
                return Err(Error::validation(
                    "edges",
                    format!("duplicate edge f{}->f{}", p + 1, c + 1),
                ));
            }
        }
        if code_counts.contains(&0) {
            return Err(Error::validation("code_counts", "every node needs at least one code"));
        }
        let (parents, order) = analyze_dag(NUM_FEATURES, &edges).map_err(|node| Error::CyclicStructure(node + 1))?;
        Ok(NetworkStructure {
            code_counts,
            edges,
            parents,
            order,
        })
    }

    /// The schema's DAG over its distance codes.
    pub fn from_schema(schema: &FeatureSchema) -> Self {
        NetworkStructure::new(schema.code_counts(), schema.edges().to_vec())
            .expect("schema edges are already validated")
    }

    pub fn with_edges(schema: &FeatureSchema, edges: Vec<(usize, usize)>) -> Result<Self> {
        NetworkStructure::new(schema.code_counts(), edges)
    }

    pub fn code_counts(&self) -> &[usize; NUM_FEATURES] {
        &self.code_counts
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn parents(&self, node: usize) -> &[usize] {
        &self.parents[node]
    }

    pub fn topological_order(&self) -> &[usize] {
        &self.order
    }

    /// Number of parent-code combinations of `node`.
    pub fn row_count(&self, node: usize) -> usize {
        self.parents[node].iter().map(|&p| self.code_counts[p]).product()
    }

    /// CPD row of `node` selected by the parents' codes in `d`; parents in
    /// ascending order, first parent most significant.
    pub fn row_index(&self, node: usize, d: &DistanceVector) -> usize {
        self.parents[node]
            .iter()
            .fold(0, |acc, &p| acc * self.code_counts[p] + d.0[p])
    }

    /// Free parameters: `rows * (codes - 1)` summed over nodes.
    pub fn free_parameters(&self) -> usize {
        (0..NUM_FEATURES)
            .map(|j| self.row_count(j) * (self.code_counts[j] - 1))
            .sum()
    }

    fn check_vector(&self, d: &DistanceVector) -> Result<()> {
        for (j, (&code, &k)) in d.0.iter().zip(&self.code_counts).enumerate() {
            if code >= k {
                return Err(Error::NonconformantVector(format!(
                    "f{} code {code} out of range (node has {k} codes)",
                    j + 1
                )));
            }
        }
        Ok(())
    }
}

/// Conditional distribution of one node given its parents' codes.
#[derive(Clone, Debug, PartialEq)]
pub struct CpdTable {
    pub node: usize,
    pub parents: Vec<usize>,
    pub code_count: usize,
    /// One probability vector over the node's codes per parent combination.
    pub rows: Vec<Vec<f64>>,
    /// Training observations that fell in each row.
    pub row_counts: Vec<u64>,
}

impl CpdTable {
    pub fn prob(&self, row: usize, code: usize) -> f64 {
        self.rows[row][code]
    }
}

/// Raw code counts per node, `rows * codes` each, row-major.
struct Counts {
    cells: Vec<Vec<u64>>,
    n: usize,
}

fn count(structure: &NetworkStructure, vectors: &[DistanceVector]) -> Result<Counts> {
    let mut cells: Vec<Vec<u64>> = (0..NUM_FEATURES)
        .map(|j| vec![0u64; structure.row_count(j) * structure.code_counts[j]])
        .collect();
    for d in vectors {
        structure.check_vector(d)?;
        for (j, node_cells) in cells.iter_mut().enumerate() {
            let row = structure.row_index(j, d);
            node_cells[row * structure.code_counts[j] + d.0[j]] += 1;
        }
    }
    Ok(Counts {
        cells,
        n: vectors.len(),
    })
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(Error::validation(
            "alpha",
            format!("{alpha} must be finite and non-negative"),
        ));
    }
    Ok(())
}

/// Smoothed estimates from counts. Rows with no mass (only possible when
/// `alpha == 0` and nothing was observed) are set uniform.
fn estimate(structure: &NetworkStructure, counts: &Counts, alpha: f64) -> Vec<CpdTable> {
    (0..NUM_FEATURES)
        .map(|j| {
            let k = structure.code_counts[j];
            let mut rows = Vec::with_capacity(structure.row_count(j));
            let mut row_counts = Vec::with_capacity(structure.row_count(j));
            for cells in counts.cells[j].chunks(k) {
                let total: u64 = cells.iter().sum();
                let denom = total as f64 + alpha * k as f64;
                row_counts.push(total);
                if denom == 0.0 {
                    rows.push(vec![1.0 / k as f64; k]);
                } else {
                    rows.push(cells.iter().map(|&c| (c as f64 + alpha) / denom).collect());
                }
            }
            CpdTable {
                node: j,
                parents: structure.parents[j].clone(),
                code_count: k,
                rows,
                row_counts,
            }
        })
        .collect()
}

/// A network with fitted (or supplied) conditional tables.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainedBayesNet {
    pub hypothesis: Decision,
    pub alpha: f64,
    pub training_pairs: usize,
    structure: NetworkStructure,
    cpds: Vec<CpdTable>,
}

impl TrainedBayesNet {
    /// Build a network from explicit tables; `rows[j]` is node j's table.
    pub fn from_rows(
        structure: NetworkStructure,
        hypothesis: Decision,
        rows: Vec<Vec<Vec<f64>>>,
        alpha: f64,
    ) -> Result<Self> {
        if rows.len() != NUM_FEATURES {
            return Err(Error::LengthMismatch {
                expected: NUM_FEATURES,
                actual: rows.len(),
            });
        }
        let cpds = rows
            .into_iter()
            .enumerate()
            .map(|(j, table)| {
                let k = structure.code_counts[j];
                if table.len() != structure.row_count(j) {
                    return Err(Error::validation(
                        format!("cpd f{}", j + 1),
                        format!("{} rows, expected {}", table.len(), structure.row_count(j)),
                    ));
                }
                for (r, row) in table.iter().enumerate() {
                    if row.len() != k {
                        return Err(Error::validation(
                            format!("cpd f{} row {r}", j + 1),
                            format!("{} entries, expected {k}", row.len()),
                        ));
                    }
                    if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                        return Err(Error::validation(
                            format!("cpd f{} row {r}", j + 1),
                            "entries must be finite and non-negative",
                        ));
                    }
                    let sum: f64 = row.iter().sum();
                    if (sum - 1.0).abs() > 1e-9 {
                        return Err(Error::validation(
                            format!("cpd f{} row {r}", j + 1),
                            format!("row sums to {sum}"),
                        ));
                    }
                }
                Ok(CpdTable {
                    node: j,
                    parents: structure.parents[j].clone(),
                    code_count: k,
                    row_counts: vec![0; table.len()],
                    rows: table,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TrainedBayesNet {
            hypothesis,
            alpha,
            training_pairs: 0,
            structure,
            cpds,
        })
    }

    pub fn structure(&self) -> &NetworkStructure {
        &self.structure
    }

    pub fn cpds(&self) -> &[CpdTable] {
        &self.cpds
    }

    pub fn cpd(&self, node: usize) -> &CpdTable {
        &self.cpds[node]
    }

    /// Natural-log factor of each node for `d`, indexed by node.
    pub fn log_factors(&self, d: &DistanceVector) -> Result<[f64; NUM_FEATURES]> {
        self.structure.check_vector(d)?;
        Ok(std::array::from_fn(|j| {
            let row = self.structure.row_index(j, d);
            self.cpds[j].prob(row, d.0[j]).ln()
        }))
    }

    /// `ln P(d)` under the factorization, summed in node order.
    pub fn joint_log_prob(&self, d: &DistanceVector) -> Result<f64> {
        Ok(self.log_factors(d)?.iter().sum())
    }

    /// Ancestral sample.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DistanceVector {
        let mut d = DistanceVector([0; NUM_FEATURES]);
        for &j in self.structure.topological_order() {
            let row = &self.cpds[j].rows[self.structure.row_index(j, &d)];
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut code = row.len() - 1;
            for (c, &p) in row.iter().enumerate() {
                acc += p;
                if u < acc {
                    code = c;
                    break;
                }
            }
            d.0[j] = code;
        }
        d
    }
}

/// Fit all tables from distance vectors observed under `hypothesis`.
pub fn fit_vectors(
    structure: &NetworkStructure,
    vectors: &[DistanceVector],
    alpha: f64,
    hypothesis: Decision,
) -> Result<TrainedBayesNet> {
    check_alpha(alpha)?;
    if vectors.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let counts = count(structure, vectors)?;
    Ok(TrainedBayesNet {
        hypothesis,
        alpha,
        training_pairs: vectors.len(),
        cpds: estimate(structure, &counts, alpha),
        structure: structure.clone(),
    })
}

/// Fit one network on pairs that all carry the same label.
pub fn fit(dataset: &Dataset, pairs: &PairSet, structure: &NetworkStructure, alpha: f64) -> Result<TrainedBayesNet> {
    let first = pairs.pairs.first().ok_or(Error::EmptyTrainingSet)?.label;
    if pairs.pairs.iter().any(|p| p.label != first) {
        return Err(Error::HypothesisMismatch(
            "training pairs mix same-writer and different-writer labels".into(),
        ));
    }
    fit_vectors(structure, &pair_vectors(dataset, pairs)?, alpha, first)
}

fn check_compatible(a: &TrainedBayesNet, b: &TrainedBayesNet) -> Result<()> {
    if a.structure != b.structure {
        return Err(Error::SchemaMismatch("networks do not share one structure".into()));
    }
    Ok(())
}

/// `ln P(d | numerator) - ln P(d | denominator)` with no hypothesis check.
pub fn log_ratio(numerator: &TrainedBayesNet, denominator: &TrainedBayesNet, d: &DistanceVector) -> Result<f64> {
    check_compatible(numerator, denominator)?;
    Ok(numerator.joint_log_prob(d)? - denominator.joint_log_prob(d)?)
}

/// Log-likelihood ratio of same-writer (`same_net`) against different-writer
/// (`diff_net`).
pub fn llr(same_net: &TrainedBayesNet, diff_net: &TrainedBayesNet, d: &DistanceVector) -> Result<f64> {
    if same_net.hypothesis != Decision::Same || diff_net.hypothesis != Decision::Different {
        return Err(Error::HypothesisMismatch(format!(
            "expected (same, different) networks, got ({}, {})",
            same_net.hypothesis, diff_net.hypothesis
        )));
    }
    log_ratio(same_net, diff_net, d)
}

/// Same-writer iff `llr >= tau`.
pub fn classify_llr(value: f64, tau: f64) -> Decision {
    if value >= tau {
        Decision::Same
    } else {
        Decision::Different
    }
}

pub fn classify(
    same_net: &TrainedBayesNet,
    diff_net: &TrainedBayesNet,
    d: &DistanceVector,
    tau: f64,
) -> Result<Decision> {
    Ok(classify_llr(llr(same_net, diff_net, d)?, tau))
}

/// BIC of a candidate structure on `vectors`: maximized log-likelihood
/// (smoothed when `alpha > 0`) minus `params / 2 * ln N`.
pub fn bic_score(
    schema: &FeatureSchema,
    edges: &[(usize, usize)],
    vectors: &[DistanceVector],
    alpha: f64,
) -> Result<f64> {
    check_alpha(alpha)?;
    let structure = NetworkStructure::with_edges(schema, edges.to_vec())?;
    if vectors.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let counts = count(&structure, vectors)?;
    let cpds = estimate(&structure, &counts, alpha);
    let mut log_lik = 0.0;
    for (j, cpd) in cpds.iter().enumerate() {
        let k = structure.code_counts[j];
        for (r, cells) in counts.cells[j].chunks(k).enumerate() {
            for (c, &n) in cells.iter().enumerate() {
                if n > 0 {
                    log_lik += n as f64 * cpd.rows[r][c].ln();
                }
            }
        }
    }
    let penalty = structure.free_parameters() as f64 / 2.0 * (counts.n as f64).ln();
    Ok(log_lik - penalty)
}

/// Both networks plus the decision threshold.
#[derive(Clone, Debug, PartialEq)]
pub struct LaamModel {
    pub same: TrainedBayesNet,
    pub different: TrainedBayesNet,
    pub tau: f64,
}

impl LaamModel {
    /// Fit the same-writer and different-writer networks from one labeled pair set.
    pub fn train(dataset: &Dataset, pairs: &PairSet, structure: &NetworkStructure, alpha: f64) -> Result<Self> {
        let same = fit(dataset, &pairs.restricted(Decision::Same), structure, alpha)?;
        let different = fit(dataset, &pairs.restricted(Decision::Different), structure, alpha)?;
        Ok(LaamModel {
            same,
            different,
            tau: 0.0,
        })
    }

    pub fn llr(&self, d: &DistanceVector) -> Result<f64> {
        llr(&self.same, &self.different, d)
    }

    pub fn classify(&self, d: &DistanceVector) -> Result<Decision> {
        Ok(classify_llr(self.llr(d)?, self.tau))
    }

    pub fn llr_pairs(&self, dataset: &Dataset, pairs: &PairSet) -> Result<Vec<f64>> {
        pair_vectors(dataset, pairs)?.iter().map(|d| self.llr(d)).collect()
    }

    pub fn to_document(&self) -> String {
        let doc = ModelDoc {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            tau: self.tau,
            code_counts: self.same.structure.code_counts.to_vec(),
            edges: self
                .same
                .structure
                .edges
                .iter()
                .map(|(p, c)| format!("f{}->f{}", p + 1, c + 1))
                .collect(),
            networks: vec![NetDoc::from_net(&self.same), NetDoc::from_net(&self.different)],
        };
        let mut out = serde_json::to_string_pretty(&doc).expect("model serializes");
        out.push('\n');
        out
    }

    pub fn from_document(text: &str, schema: &FeatureSchema) -> Result<Self> {
        let doc: ModelDoc = serde_json::from_str(text).map_err(|e| Error::parse(e.line(), e.to_string()))?;
        if doc.format != MODEL_FORMAT || doc.version != MODEL_VERSION {
            return Err(Error::parse(
                0,
                format!(
                    "unsupported model format '{}' version {} (expected {MODEL_FORMAT} v{MODEL_VERSION})",
                    doc.format, doc.version
                ),
            ));
        }
        if doc.code_counts != schema.code_counts() {
            return Err(Error::SchemaMismatch(format!(
                "model code counts {:?} do not match the schema's {:?}",
                doc.code_counts,
                schema.code_counts()
            )));
        }
        let mut edges = Vec::with_capacity(doc.edges.len());
        for tok in &doc.edges {
            let parsed = tok.split_once("->").and_then(|(p, c)| {
                let p: usize = p.strip_prefix('f')?.parse().ok()?;
                let c: usize = c.strip_prefix('f')?.parse().ok()?;
                (p >= 1 && c >= 1).then(|| (p - 1, c - 1))
            });
            edges.push(parsed.ok_or_else(|| Error::parse(0, format!("bad edge '{tok}'")))?);
        }
        let structure = NetworkStructure::with_edges(schema, edges)?;
        if doc.networks.len() != 2 {
            return Err(Error::validation("networks", "expected exactly two networks"));
        }
        let mut nets = doc
            .networks
            .into_iter()
            .map(|n| n.into_net(&structure))
            .collect::<Result<Vec<_>>>()?;
        let different = nets.pop().expect("two networks");
        let same = nets.pop().expect("two networks");
        if same.hypothesis != Decision::Same || different.hypothesis != Decision::Different {
            return Err(Error::HypothesisMismatch(
                "model must list the same-writer network first, then the different-writer network".into(),
            ));
        }
        if !doc.tau.is_finite() {
            return Err(Error::validation("tau", "threshold must be finite"));
        }
        Ok(LaamModel {
            same,
            different,
            tau: doc.tau,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_document().as_bytes())
    }

    pub fn load(path: &Path, schema: &FeatureSchema) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        LaamModel::from_document(&text, schema)
    }

    /// Human-readable table dump, one block per node.
    pub fn describe(&self, schema: &FeatureSchema) -> String {
        let mut out = String::new();
        for (name, net) in [("same", &self.same), ("different", &self.different)] {
            let _ = writeln!(
                out,
                "network {name}: {} training pairs, alpha {}",
                net.training_pairs, net.alpha
            );
            for cpd in &net.cpds {
                let parents: Vec<String> = cpd.parents.iter().map(|p| format!("f{}", p + 1)).collect();
                let _ = writeln!(
                    out,
                    "  f{} {} | {} : {} rows x {} codes",
                    cpd.node + 1,
                    schema.feature(cpd.node).name,
                    if parents.is_empty() {
                        "-".to_string()
                    } else {
                        parents.join(",")
                    },
                    cpd.rows.len(),
                    cpd.code_count
                );
            }
        }
        out
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    format: String,
    version: u32,
    tau: f64,
    code_counts: Vec<usize>,
    edges: Vec<String>,
    networks: Vec<NetDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetDoc {
    hypothesis: Decision,
    alpha: f64,
    training_pairs: usize,
    cpds: Vec<CpdDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CpdDoc {
    node: String,
    parents: Vec<String>,
    row_counts: Vec<u64>,
    rows: Vec<Vec<f64>>,
}

impl NetDoc {
    fn from_net(net: &TrainedBayesNet) -> Self {
        NetDoc {
            hypothesis: net.hypothesis,
            alpha: net.alpha,
            training_pairs: net.training_pairs,
            cpds: net
                .cpds
                .iter()
                .map(|c| CpdDoc {
                    node: format!("f{}", c.node + 1),
                    parents: c.parents.iter().map(|p| format!("f{}", p + 1)).collect(),
                    row_counts: c.row_counts.clone(),
                    rows: c
                        .rows
                        .iter()
                        .map(|r| r.iter().map(|&p| round_significant(p, 12)).collect())
                        .collect(),
                })
                .collect(),
        }
    }

    fn into_net(self, structure: &NetworkStructure) -> Result<TrainedBayesNet> {
        if self.cpds.len() != NUM_FEATURES {
            return Err(Error::validation(
                "cpds",
                format!("expected {NUM_FEATURES} tables, found {}", self.cpds.len()),
            ));
        }
        let mut rows = Vec::with_capacity(NUM_FEATURES);
        let mut row_counts = Vec::with_capacity(NUM_FEATURES);
        for (j, cpd) in self.cpds.into_iter().enumerate() {
            let expected_parents: Vec<String> = structure.parents(j).iter().map(|p| format!("f{}", p + 1)).collect();
            if cpd.node != format!("f{}", j + 1) || cpd.parents != expected_parents {
                return Err(Error::validation(
                    format!("cpd {}", cpd.node),
                    format!("expected node f{} with parents {:?}", j + 1, expected_parents),
                ));
            }
            if cpd.row_counts.len() != cpd.rows.len() {
                return Err(Error::validation(
                    format!("cpd f{}", j + 1),
                    "row_counts length differs from rows",
                ));
            }
            rows.push(cpd.rows);
            row_counts.push(cpd.row_counts);
        }
        let mut net = TrainedBayesNet::from_rows(structure.clone(), self.hypothesis, rows, self.alpha)?;
        net.training_pairs = self.training_pairs;
        for (cpd, counts) in net.cpds.iter_mut().zip(row_counts) {
            cpd.row_counts = counts;
        }
        Ok(net)
    }
}
