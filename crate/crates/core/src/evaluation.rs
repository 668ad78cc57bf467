//! Confusion counts, accuracy metrics and method/regime comparison tables.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::daam::{self, OcsMode};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::laam::{self, LaamModel, NetworkStructure};
use crate::partition::{generate_pairs, split, PairSet, PairStrategy, PartitionMode, Ratios, Split};
use crate::Decision;

pub const REPORT_HEADER: &str = "method,regime,TP,FP,TN,FN,type1,type2,type2_literal,overall,precision,recall";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Daam,
    Laam,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Daam => "daam",
            Method::Laam => "laam",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "daam" => Ok(Method::Daam),
            "laam" => Ok(Method::Laam),
            other => Err(format!("unknown method '{other}' (daam|laam)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub method: String,
    pub regime: String,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
    /// Same-writer accuracy, `TP / #same`.
    pub type1: f64,
    /// Different-writer accuracy, `TN / #different`.
    pub type2: f64,
    /// `FP / #pairs`, as the metric is literally printed.
    pub type2_literal: f64,
    pub overall: f64,
    pub precision: f64,
    pub recall: f64,
}

fn frac(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl EvalReport {
    pub fn from_counts(method: &str, regime: &str, tp: usize, fp: usize, tn: usize, fn_: usize) -> Self {
        let same = tp + fn_;
        let different = tn + fp;
        let total = same + different;
        EvalReport {
            method: method.to_string(),
            regime: regime.to_string(),
            tp,
            fp,
            tn,
            fn_,
            type1: frac(tp, same),
            type2: frac(tn, different),
            type2_literal: frac(fp, total),
            overall: frac(tp + tn, total),
            precision: frac(tp, tp + fp),
            recall: frac(tp, same),
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4}",
            self.method,
            self.regime,
            self.tp,
            self.fp,
            self.tn,
            self.fn_,
            self.type1,
            self.type2,
            self.type2_literal,
            self.overall,
            self.precision,
            self.recall
        )
    }
}

pub fn report_csv(reports: &[EvalReport]) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for r in reports {
        let _ = writeln!(out, "{}", r.csv_row());
    }
    out
}

/// Confusion counts of `decisions` against the pairs' ground truth.
pub fn evaluate(pairs: &PairSet, decisions: &[Decision], method: &str, regime: &str) -> Result<EvalReport> {
    if pairs.len() != decisions.len() {
        return Err(Error::LengthMismatch {
            expected: pairs.len(),
            actual: decisions.len(),
        });
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (p, &d) in pairs.pairs.iter().zip(decisions) {
        match (p.label, d) {
            (Decision::Same, Decision::Same) => tp += 1,
            (Decision::Same, Decision::Different) => fn_ += 1,
            (Decision::Different, Decision::Different) => tn += 1,
            (Decision::Different, Decision::Same) => fp += 1,
        }
    }
    Ok(EvalReport::from_counts(method, regime, tp, fp, tn, fn_))
}

/// How LAAM picks its decision threshold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TauMode {
    Fixed(f64),
    /// Sweep the 10%..90% quantiles of validation LLRs with the DAAM rule.
    Calibrated,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalConfig {
    pub ratios: Ratios,
    pub pair_strategy: PairStrategy,
    pub ocs: OcsMode,
    pub alpha: f64,
    pub tau: TauMode,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            ratios: Ratios::default(),
            pair_strategy: PairStrategy::default(),
            ocs: OcsMode::Mean,
            alpha: laam::DEFAULT_ALPHA,
            tau: TauMode::Fixed(0.0),
        }
    }
}

/// Seeds for each stage of one run, derived from the run seed.
#[derive(Clone, Copy, Debug)]
pub struct StageSeeds {
    pub split: u64,
    pub train_pairs: u64,
    pub val_pairs: u64,
    pub test_pairs: u64,
}

impl StageSeeds {
    pub fn derive(seed: u64) -> Self {
        let mix = |k: u64| seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(k);
        StageSeeds {
            split: seed,
            train_pairs: mix(1),
            val_pairs: mix(2),
            test_pairs: mix(3),
        }
    }
}

/// Pairs for each part of a split.
#[derive(Clone, Debug)]
pub struct SplitPairs {
    pub split: Split,
    pub train: PairSet,
    pub val: PairSet,
    pub test: PairSet,
}

pub fn prepare(dataset: &Dataset, mode: PartitionMode, config: &EvalConfig, seed: u64) -> Result<SplitPairs> {
    let seeds = StageSeeds::derive(seed);
    let split = split(dataset, mode, config.ratios, seeds.split)?;
    let train = generate_pairs(dataset, &split.train, config.pair_strategy, seeds.train_pairs)?;
    let val = generate_pairs(dataset, &split.val, config.pair_strategy, seeds.val_pairs)?;
    let test = generate_pairs(dataset, &split.test, config.pair_strategy, seeds.test_pairs)?;
    Ok(SplitPairs {
        split,
        train,
        val,
        test,
    })
}

/// Result of one method on one prepared split.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub report: EvalReport,
    /// `T` for DAAM, `tau` for LAAM.
    pub threshold: f64,
    pub decisions: Vec<Decision>,
}

pub fn laam_tau_sweep(val_llrs: &[f64]) -> Vec<f64> {
    let levels = daam::daam_sweep();
    let mut t = daam::quantiles(val_llrs, &levels);
    t.dedup();
    t
}

/// Calibrate on validation pairs, train where needed, then decide the test pairs.
pub fn run_method(dataset: &Dataset, pairs: &SplitPairs, method: Method, config: &EvalConfig) -> Result<RunOutcome> {
    let regime = pairs.split.mode.as_str();
    let (threshold, decisions) = match method {
        Method::Daam => {
            if !dataset.has_soft() {
                return Err(Error::MissingSoft(
                    "dataset (DAAM needs soft probability vectors)".into(),
                ));
            }
            let cal = daam::calibrate(dataset, &pairs.val, config.ocs)?;
            let t = cal.chosen_threshold;
            let scores = daam::score_pairs(dataset, &pairs.test, config.ocs)?;
            (t, scores.iter().map(|&s| daam::classify(s, t)).collect::<Vec<_>>())
        }
        Method::Laam => {
            let structure = NetworkStructure::from_schema(dataset.schema());
            let mut model = LaamModel::train(dataset, &pairs.train, &structure, config.alpha)?;
            model.tau = match config.tau {
                TauMode::Fixed(t) => t,
                TauMode::Calibrated => {
                    let llrs = model.llr_pairs(dataset, &pairs.val)?;
                    daam::calibrate_scores(&llrs, &pairs.val.labels(), &laam_tau_sweep(&llrs))?.chosen_threshold
                }
            };
            let llrs = model.llr_pairs(dataset, &pairs.test)?;
            (
                model.tau,
                llrs.iter().map(|&v| laam::classify_llr(v, model.tau)).collect(),
            )
        }
    };
    let report = evaluate(&pairs.test, &decisions, method.as_str(), regime)?;
    Ok(RunOutcome {
        report,
        threshold,
        decisions,
    })
}

/// One report per `(method, regime)`, confusion counts pooled over `seeds`.
pub fn compare_methods(
    dataset: &Dataset,
    regimes: &[PartitionMode],
    methods: &[Method],
    seeds: &[u64],
    config: &EvalConfig,
) -> Result<Vec<EvalReport>> {
    if methods.is_empty() || regimes.is_empty() {
        return Ok(Vec::new());
    }
    if seeds.is_empty() {
        return Err(Error::validation("seeds", "need at least one seed"));
    }
    if methods.contains(&Method::Daam) && !dataset.has_soft() {
        return Err(Error::MissingSoft(
            "dataset (DAAM needs soft probability vectors)".into(),
        ));
    }
    let mut out = Vec::new();
    for &method in methods {
        for &regime in regimes {
            let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
            for &seed in seeds {
                let prepared = prepare(dataset, regime, config, seed)?;
                let r = run_method(dataset, &prepared, method, config)?.report;
                tp += r.tp;
                fp += r.fp;
                tn += r.tn;
                fn_ += r.fn_;
            }
            out.push(EvalReport::from_counts(
                method.as_str(),
                regime.as_str(),
                tp,
                fp,
                tn,
                fn_,
            ));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::Pair;

    fn pairs(same: usize, different: usize) -> PairSet {
        let mut v = Vec::new();
        for i in 0..same {
            v.push(Pair {
                a: i,
                b: i + 1,
                label: Decision::Same,
            });
        }
        for i in 0..different {
            v.push(Pair {
                a: i,
                b: i + 2,
                label: Decision::Different,
            });
        }
        PairSet { pairs: v }
    }

    #[test]
    fn worked_example() {
        let p = pairs(10, 10);
        let mut d = vec![Decision::Same; 8];
        d.extend([Decision::Different; 2]);
        d.extend([Decision::Different; 9]);
        d.push(Decision::Same);
        let r = evaluate(&p, &d, "daam", "seen").unwrap();
        assert_eq!((r.tp, r.fn_, r.tn, r.fp), (8, 2, 9, 1));
        assert!((r.type1 - 0.8).abs() < 1e-15);
        assert!((r.type2 - 0.9).abs() < 1e-15);
        assert!((r.overall - 0.85).abs() < 1e-15);
        assert!((r.type2_literal - 0.05).abs() < 1e-15);
    }

    #[test]
    fn perfect_decisions() {
        let p = pairs(4, 6);
        let r = evaluate(&p, &p.labels(), "laam", "unseen").unwrap();
        assert_eq!(
            (r.type1, r.type2, r.overall, r.precision, r.recall),
            (1.0, 1.0, 1.0, 1.0, 1.0)
        );
        assert_eq!(r.type2_literal, 0.0);
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(
            evaluate(&pairs(2, 2), &[Decision::Same], "daam", "seen"),
            Err(Error::LengthMismatch { expected: 4, actual: 1 })
        ));
    }

    #[test]
    fn csv_format() {
        let r = EvalReport::from_counts("daam", "seen", 8, 1, 9, 2);
        assert_eq!(
            r.csv_row(),
            "daam,seen,8,1,9,2,0.8000,0.9000,0.0500,0.8500,0.8889,0.8000"
        );
        assert!(report_csv(&[r]).starts_with(REPORT_HEADER));
    }

    #[test]
    fn empty_method_list() {
        let ds = Dataset::new(crate::builtin_schema(), vec![]).unwrap();
        let out = compare_methods(&ds, &PartitionMode::ALL, &[], &[1], &EvalConfig::default()).unwrap();
        assert!(out.is_empty());
    }
}
