//! Train/validation/test splits and labeled record pairs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::Decision;

/// Minimum samples a writer needs to take part in a seen-writer split.
pub const SEEN_MIN_SAMPLES: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PartitionMode {
    /// Writer-disjoint parts.
    Unseen,
    /// Global record shuffle, then slicing by ratio.
    Shuffled,
    /// Every writer split across all three parts.
    Seen,
}

impl PartitionMode {
    pub const ALL: [PartitionMode; 3] = [PartitionMode::Seen, PartitionMode::Unseen, PartitionMode::Shuffled];

    pub fn as_str(self) -> &'static str {
        match self {
            PartitionMode::Unseen => "unseen",
            PartitionMode::Shuffled => "shuffled",
            PartitionMode::Seen => "seen",
        }
    }
}

impl fmt::Display for PartitionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PartitionMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "unseen" => Ok(PartitionMode::Unseen),
            "shuffled" => Ok(PartitionMode::Shuffled),
            "seen" => Ok(PartitionMode::Seen),
            other => Err(format!("unknown partition mode '{other}' (unseen|shuffled|seen)")),
        }
    }
}

/// Train/validation/test proportions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ratios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for Ratios {
    fn default() -> Self {
        Ratios {
            train: 0.6,
            val: 0.2,
            test: 0.2,
        }
    }
}

impl Ratios {
    pub fn new(train: f64, val: f64, test: f64) -> Result<Self> {
        let r = Ratios { train, val, test };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.val, self.test];
        if parts.iter().any(|p| !p.is_finite() || *p <= 0.0) {
            return Err(Error::validation("ratios", "every ratio must be positive"));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::validation("ratios", format!("ratios sum to {sum}, not 1")));
        }
        Ok(())
    }

    /// `(train, val, test)` sizes for `n` items: val and test are floored,
    /// train takes the remainder.
    fn sizes(&self, n: usize) -> (usize, usize, usize) {
        let val = (self.val * n as f64 + 1e-9).floor() as usize;
        let test = (self.test * n as f64 + 1e-9).floor() as usize;
        (n - val - test, val, test)
    }

    /// Like `sizes`, but every part gets at least one item. Needs `n >= 3`.
    fn sizes_nonempty(&self, n: usize) -> (usize, usize, usize) {
        let (_, val, test) = self.sizes(n);
        let (mut val, mut test) = (val.max(1), test.max(1));
        while val + test > n - 1 {
            if val >= test {
                val -= 1;
            } else {
                test -= 1;
            }
        }
        (n - val - test, val, test)
    }
}

impl FromStr for Ratios {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| format!("bad ratio '{t}'")))
            .collect::<std::result::Result<_, _>>()?;
        if parts.len() != 3 {
            return Err(format!("expected three comma-separated ratios, got {}", parts.len()));
        }
        Ratios::new(parts[0], parts[1], parts[2]).map_err(|e| e.to_string())
    }
}

/// Record positions (into the source dataset) of each part.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
    pub mode: PartitionMode,
    pub seed: u64,
    /// Writers dropped from a seen-writer split for having too few samples.
    pub excluded_writers: usize,
}

impl Split {
    pub fn parts(&self) -> [(&'static str, &[usize]); 3] {
        [("train", &self.train), ("val", &self.val), ("test", &self.test)]
    }
}

pub fn split(dataset: &Dataset, mode: PartitionMode, ratios: Ratios, seed: u64) -> Result<Split> {
    ratios.validate()?;
    if dataset.is_empty() {
        return Err(Error::InsufficientData("dataset is empty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Split {
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
        mode,
        seed,
        excluded_writers: 0,
    };
    match mode {
        PartitionMode::Unseen => {
            let mut writers: Vec<&str> = dataset.writers().collect();
            if writers.len() < 3 {
                return Err(Error::InsufficientData(format!(
                    "unseen-writer split needs at least 3 writers, found {}",
                    writers.len()
                )));
            }
            writers.shuffle(&mut rng);
            let (n_train, n_val, _) = ratios.sizes_nonempty(writers.len());
            for (i, w) in writers.iter().enumerate() {
                let part = if i < n_train {
                    &mut out.train
                } else if i < n_train + n_val {
                    &mut out.val
                } else {
                    &mut out.test
                };
                part.extend_from_slice(dataset.writer_records(w));
            }
        }
        PartitionMode::Shuffled => {
            if dataset.len() < 3 {
                return Err(Error::InsufficientData(format!(
                    "shuffled split needs at least 3 records, found {}",
                    dataset.len()
                )));
            }
            let mut all: Vec<usize> = (0..dataset.len()).collect();
            all.shuffle(&mut rng);
            let (n_train, n_val, _) = ratios.sizes_nonempty(all.len());
            out.train = all[..n_train].to_vec();
            out.val = all[n_train..n_train + n_val].to_vec();
            out.test = all[n_train + n_val..].to_vec();
        }
        PartitionMode::Seen => {
            for w in dataset.writers() {
                let mut recs = dataset.writer_records(w).to_vec();
                if recs.len() < SEEN_MIN_SAMPLES {
                    out.excluded_writers += 1;
                    continue;
                }
                recs.shuffle(&mut rng);
                let (n_train, n_val, _) = ratios.sizes(recs.len());
                out.train.extend_from_slice(&recs[..n_train]);
                out.val.extend_from_slice(&recs[n_train..n_train + n_val]);
                out.test.extend_from_slice(&recs[n_train + n_val..]);
            }
            if out.train.is_empty() {
                return Err(Error::InsufficientData(format!(
                    "no writer has {SEEN_MIN_SAMPLES} or more samples"
                )));
            }
        }
    }
    out.train.sort_unstable();
    out.val.sort_unstable();
    out.test.sort_unstable();
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairStrategy {
    /// Every unordered record pair.
    AllPairs,
    /// All same-writer pairs plus `k` times as many different-writer pairs,
    /// sampled without replacement.
    Balanced(usize),
}

impl Default for PairStrategy {
    fn default() -> Self {
        PairStrategy::Balanced(1)
    }
}

impl fmt::Display for PairStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PairStrategy::AllPairs => f.write_str("all"),
            PairStrategy::Balanced(k) => write!(f, "balanced:{k}"),
        }
    }
}

impl FromStr for PairStrategy {
    type Err = String;

    /// `all`, `balanced` (k = 1) or `balanced:<k>`.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "all" => Ok(PairStrategy::AllPairs),
            "balanced" => Ok(PairStrategy::Balanced(1)),
            _ => {
                let k = s
                    .strip_prefix("balanced:")
                    .and_then(|k| k.parse::<usize>().ok())
                    .filter(|&k| k >= 1)
                    .ok_or_else(|| format!("unknown pair strategy '{s}' (all|balanced|balanced:<k>)"))?;
                Ok(PairStrategy::Balanced(k))
            }
        }
    }
}

/// Two record positions (`a < b`) and the ground-truth relation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pair {
    pub a: usize,
    pub b: usize,
    pub label: Decision,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PairSet {
    pub pairs: Vec<Pair>,
}

impl PairSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn same_count(&self) -> usize {
        self.pairs.iter().filter(|p| p.label == Decision::Same).count()
    }

    pub fn different_count(&self) -> usize {
        self.len() - self.same_count()
    }

    pub fn labels(&self) -> Vec<Decision> {
        self.pairs.iter().map(|p| p.label).collect()
    }

    /// Pairs with the given label only.
    pub fn restricted(&self, label: Decision) -> PairSet {
        PairSet {
            pairs: self.pairs.iter().copied().filter(|p| p.label == label).collect(),
        }
    }
}

pub fn generate_pairs(dataset: &Dataset, part: &[usize], strategy: PairStrategy, seed: u64) -> Result<PairSet> {
    if part.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "pair generation needs at least 2 records, found {}",
            part.len()
        )));
    }
    let mut members = part.to_vec();
    members.sort_unstable();
    members.dedup();
    let writer = |pos: usize| dataset.record(pos).writer_id.as_str();

    let mut by_writer: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for &p in &members {
        by_writer.entry(writer(p)).or_default().push(p);
    }
    let mut same = Vec::new();
    for recs in by_writer.values() {
        for (i, &a) in recs.iter().enumerate() {
            for &b in &recs[i + 1..] {
                same.push((a, b));
            }
        }
    }

    let n = members.len();
    let total_pairs = n * (n - 1) / 2;
    let total_diff = total_pairs - same.len();

    let diff: Vec<(usize, usize)> = match strategy {
        PairStrategy::AllPairs => enumerate_different(&members, &writer),
        PairStrategy::Balanced(k) => {
            let wanted = k.saturating_mul(same.len());
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            if wanted >= total_diff {
                enumerate_different(&members, &writer)
            } else if wanted.saturating_mul(2) >= total_diff {
                let all = enumerate_different(&members, &writer);
                let mut picked: Vec<(usize, usize)> = rand::seq::index::sample(&mut rng, all.len(), wanted)
                    .into_iter()
                    .map(|i| all[i])
                    .collect();
                picked.sort_unstable();
                picked
            } else {
                // Sparse request: rejection-sample distinct cross-writer pairs.
                let mut picked = BTreeSet::new();
                while picked.len() < wanted {
                    let i = rng.gen_range(0..n);
                    let j = rng.gen_range(0..n);
                    let (a, b) = (members[i.min(j)], members[i.max(j)]);
                    if a != b && writer(a) != writer(b) {
                        picked.insert((a, b));
                    }
                }
                picked.into_iter().collect()
            }
        }
    };

    let mut pairs: Vec<Pair> = same
        .into_iter()
        .map(|(a, b)| Pair {
            a,
            b,
            label: Decision::Same,
        })
        .chain(diff.into_iter().map(|(a, b)| Pair {
            a,
            b,
            label: Decision::Different,
        }))
        .collect();
    pairs.sort_unstable_by_key(|p| (p.a, p.b));
    Ok(PairSet { pairs })
}

fn enumerate_different<'a>(members: &[usize], writer: &impl Fn(usize) -> &'a str) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (i, &a) in members.iter().enumerate() {
        for &b in &members[i + 1..] {
            if writer(a) != writer(b) {
                out.push((a, b));
            }
        }
    }
    out
}
