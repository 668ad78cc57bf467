//! `veriscribe` command-line pipeline.
//!
//! Exit status: 0 on success, 1 when input fails validation, 2 on usage errors.
//! Every output file is written atomically.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use veriscribe::daam::{self, OcsMode};
use veriscribe::data::{read_labels_csv, read_soft_records, write_labels_csv, write_soft_records};
use veriscribe::evaluation::{self, EvalConfig, Method, TauMode};
use veriscribe::explain::{self, ReportFormat};
use veriscribe::io::write_atomic;
use veriscribe::laam::{self, LaamModel, NetworkStructure};
use veriscribe::partition::{split, PairStrategy, PartitionMode, Ratios};
use veriscribe::schema::{builtin_schema, load_schema};
use veriscribe::synthetic::{generate_dataset, soften};
use veriscribe::{Dataset, Error, FeatureSchema};

const FLAG_SUMMARY: &str = "\
Common flags (see `veriscribe <command> --help`):
  --mode <seen|unseen|shuffled>     partition regime for a split
  --regime <seen|unseen|shuffled|all>  regimes to evaluate
  --ratios <train,val,test>         split proportions [default: 0.6,0.2,0.2]
  --seed <u64>                      RNG seed [env: VERISCRIBE_SEED] [default: 0]
  --pair-strategy <all|balanced|balanced:k>  pair generation [default: balanced]
  --ocs <mean|sum>                  DAAM overall-score aggregation [default: mean]
  --alpha <f64>                     LAAM additive smoothing [default: 1]
  --threshold <f64>                 DAAM decision threshold T
  --tau <f64|calibrated>            LAAM decision threshold on the LLR
  --format <text|json|plotdata>     explanation output format
  --schema <path>                   feature schema document [default: built-in]";

#[derive(Parser)]
#[command(name = "veriscribe", version, about = "Explainable handwriting verification", after_help = FLAG_SUMMARY)]
struct Cli {
    /// Feature schema document; the built-in schema when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    schema: Option<PathBuf>,

    #[arg(long, global = true, env = "VERISCRIBE_SEED", default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print or write the feature schema document.
    Schema {
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Generate a synthetic labeled dataset.
    Synth(SynthArgs),
    /// Attach synthetic soft vectors to a labels file.
    Soften {
        #[arg(long)]
        labels: PathBuf,
        #[arg(long, default_value_t = 0.9)]
        sharpness: f64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Split records into train/val/test and optionally list their pairs.
    Partition(PartitionArgs),
    /// Sweep decision thresholds on validation pairs.
    Calibrate(CalibrateArgs),
    /// Fit the same-writer and different-writer networks.
    TrainLaam(TrainArgs),
    /// Decide one questioned/known pair.
    Verify(VerifyArgs),
    /// Score methods across partition regimes.
    Evaluate(EvaluateArgs),
    /// Per-feature explanation of one pair.
    Explain(ExplainArgs),
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Input {
    /// Hard labels CSV.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Soft-record JSON lines.
    #[arg(long)]
    soft: Option<PathBuf>,
}

#[derive(Args)]
struct SplitOpts {
    #[arg(long, default_value = "unseen")]
    mode: PartitionMode,
    #[arg(long, default_value = "0.6,0.2,0.2")]
    ratios: Ratios,
    #[arg(long, default_value = "balanced")]
    pair_strategy: PairStrategy,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    writers: usize,
    #[arg(long)]
    samples: usize,
    #[arg(long, default_value_t = 0.9)]
    consistency: f64,
    /// Labels CSV output.
    #[arg(short, long)]
    output: PathBuf,
    /// Also write soft records here.
    #[arg(long)]
    soft_out: Option<PathBuf>,
    #[arg(long, default_value_t = 0.9)]
    sharpness: f64,
}

#[derive(Args)]
struct PartitionArgs {
    #[command(flatten)]
    input: Input,
    #[command(flatten)]
    split: SplitOpts,
    /// `part,writer_id,sample_id` CSV.
    #[arg(short, long)]
    output: PathBuf,
    /// `part,questioned,known,label` CSV.
    #[arg(long)]
    pairs_out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Daam,
    Laam,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Daam => Method::Daam,
            MethodArg::Laam => Method::Laam,
        }
    }
}

#[derive(Args)]
struct CalibrateArgs {
    method: MethodArg,
    #[command(flatten)]
    input: Input,
    #[command(flatten)]
    split: SplitOpts,
    #[arg(long, default_value = "mean")]
    ocs: OcsMode,
    #[arg(long, default_value_t = laam::DEFAULT_ALPHA)]
    alpha: f64,
    /// Sweep table CSV; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Write the chosen threshold as a config file for `verify`/`explain`.
    #[arg(long)]
    config_out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    input: Input,
    #[command(flatten)]
    split: SplitOpts,
    #[arg(long, default_value_t = laam::DEFAULT_ALPHA)]
    alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    tau: f64,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct PairOpts {
    #[arg(long)]
    method: MethodArg,
    #[command(flatten)]
    input: Input,
    /// Questioned record as `writer/sample`.
    #[arg(long)]
    q: String,
    /// Known record as `writer/sample`.
    #[arg(long)]
    k: String,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    /// Config written by `calibrate --config-out`.
    #[arg(long)]
    config: Option<PathBuf>,
    /// LAAM model written by `train-laam`.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value = "mean")]
    ocs: OcsMode,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    pair: PairOpts,
}

#[derive(Args)]
struct ExplainArgs {
    #[command(flatten)]
    pair: PairOpts,
    #[arg(long, default_value = "text")]
    format: ReportFormat,
    /// DAAM features below this similarity are listed as lowlights.
    #[arg(long, default_value_t = explain::DEFAULT_SALIENCE)]
    salience: f64,
    /// Number of LAAM lowlights.
    #[arg(long, default_value_t = explain::DEFAULT_LAAM_LOWLIGHTS)]
    lowlights: usize,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodSel {
    Daam,
    Laam,
    Both,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RegimeSel {
    Seen,
    Unseen,
    Shuffled,
    All,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long, default_value = "both")]
    method: MethodSel,
    #[arg(long, default_value = "all")]
    regime: RegimeSel,
    /// Hard labels CSV (LAAM only).
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Soft-record JSON lines (required for DAAM).
    #[arg(long)]
    soft: Option<PathBuf>,
    #[arg(long, default_value = "0.6,0.2,0.2")]
    ratios: Ratios,
    #[arg(long, default_value = "balanced")]
    pair_strategy: PairStrategy,
    #[arg(long, default_value = "mean")]
    ocs: OcsMode,
    #[arg(long, default_value_t = laam::DEFAULT_ALPHA)]
    alpha: f64,
    /// Fixed LLR threshold or `calibrated`.
    #[arg(long, default_value = "0", value_parser = parse_tau)]
    tau: TauMode,
    /// Number of consecutive seeds starting at `--seed`; counts are pooled.
    #[arg(long, default_value_t = 1)]
    runs: u64,
    /// Report CSV; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn parse_tau(s: &str) -> Result<TauMode, String> {
    if s == "calibrated" {
        return Ok(TauMode::Calibrated);
    }
    s.parse::<f64>()
        .ok()
        .filter(|t| t.is_finite())
        .map(TauMode::Fixed)
        .ok_or_else(|| format!("expected a number or 'calibrated', got '{s}'"))
}

/// Threshold file shared by `calibrate`, `verify` and `explain`.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ThresholdConfig {
    method: String,
    threshold: f64,
    regime: String,
    seed: u64,
    ocs: String,
}

type CliResult<T> = Result<T, Error>;

fn cli_error(field: &str, message: impl Into<String>) -> Error {
    Error::Validation {
        field: field.into(),
        message: message.into(),
    }
}

fn read_input(input: &Input, schema: &FeatureSchema) -> CliResult<Dataset> {
    match (&input.labels, &input.soft) {
        (_, Some(p)) => read_soft_records(p, schema),
        (Some(p), None) => read_labels_csv(p, schema),
        (None, None) => unreachable!("clap requires one input"),
    }
}

fn emit(output: Option<&Path>, text: &str) -> CliResult<()> {
    match output {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn eval_config(split: &SplitOpts, ocs: OcsMode, alpha: f64) -> EvalConfig {
    EvalConfig {
        ratios: split.ratios,
        pair_strategy: split.pair_strategy,
        ocs,
        alpha,
        tau: TauMode::Fixed(0.0),
    }
}

fn warn_excluded(n: usize) {
    if n > 0 {
        eprintln!(
            "warning: {n} writer(s) with fewer than {} samples excluded",
            veriscribe::partition::SEEN_MIN_SAMPLES
        );
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let schema = match &cli.schema {
        Some(p) => load_schema(p)?,
        None => builtin_schema(),
    };
    let seed = cli.seed;
    match cli.command {
        Command::Schema { output } => emit(output.as_deref(), &schema.to_document()),
        Command::Synth(a) => {
            let d = generate_dataset(&schema, a.writers, a.samples, a.consistency, seed)?;
            write_labels_csv(&a.output, &d)?;
            if let Some(p) = &a.soft_out {
                write_soft_records(p, &soften(&d, a.sharpness)?)?;
            }
            Ok(())
        }
        Command::Soften {
            labels,
            sharpness,
            output,
        } => {
            let d = read_labels_csv(&labels, &schema)?;
            write_soft_records(&output, &soften(&d, sharpness)?)
        }
        Command::Partition(a) => partition(a, &schema, seed),
        Command::Calibrate(a) => calibrate(a, &schema, seed),
        Command::TrainLaam(a) => {
            let d = read_input(&a.input, &schema)?;
            let config = eval_config(&a.split, OcsMode::Mean, a.alpha);
            let prepared = evaluation::prepare(&d, a.split.mode, &config, seed)?;
            warn_excluded(prepared.split.excluded_writers);
            let structure = NetworkStructure::from_schema(&schema);
            let mut model = LaamModel::train(&d, &prepared.train, &structure, a.alpha)?;
            model.tau = a.tau;
            model.save(&a.output)
        }
        Command::Verify(a) => {
            let (d, q, k) = resolve_pair(&a.pair, &schema)?;
            let method = a.pair.method;
            let t = decision_threshold(&a.pair)?;
            let (score, t, verdict) = match method {
                MethodArg::Daam => {
                    let t = t.expect("DAAM threshold is required");
                    let s = daam::score_pair(d.record(q), d.record(k), a.pair.ocs)?.overall;
                    (s, t, daam::classify(s, t))
                }
                MethodArg::Laam => {
                    let model = load_model(&a.pair, &schema)?;
                    let t = t.unwrap_or(model.tau);
                    let rep = explain::explain_laam(&schema, d.record(q), d.record(k), &model, t, 0)?;
                    (rep.overall, t, rep.verdict)
                }
            };
            let name = if method == MethodArg::Daam { "score" } else { "llr" };
            println!("{verdict}\t{name}={score:.6}\tthreshold={t}");
            Ok(())
        }
        Command::Explain(a) => {
            let (d, q, k) = resolve_pair(&a.pair, &schema)?;
            let t = decision_threshold(&a.pair)?;
            let report = match a.pair.method {
                MethodArg::Daam => {
                    let t = t.expect("DAAM threshold is required");
                    explain::explain_daam(&schema, d.record(q), d.record(k), t, a.pair.ocs, a.salience)?
                }
                MethodArg::Laam => {
                    let model = load_model(&a.pair, &schema)?;
                    let t = t.unwrap_or(model.tau);
                    explain::explain_laam(&schema, d.record(q), d.record(k), &model, t, a.lowlights)?
                }
            };
            emit(a.output.as_deref(), &report.render(a.format))
        }
        Command::Evaluate(a) => evaluate(a, &schema, seed),
    }
}

fn partition(a: PartitionArgs, schema: &FeatureSchema, seed: u64) -> CliResult<()> {
    let d = read_input(&a.input, schema)?;
    let config = eval_config(&a.split, OcsMode::Mean, laam::DEFAULT_ALPHA);
    let s = split(&d, a.split.mode, a.split.ratios, seed)?;
    warn_excluded(s.excluded_writers);
    let mut out = String::from("part,writer_id,sample_id\n");
    for (part, members) in s.parts() {
        for &p in members {
            let r = d.record(p);
            let _ = writeln!(out, "{part},{},{}", r.writer_id, r.sample_id);
        }
    }
    write_atomic(&a.output, out.as_bytes())?;
    if let Some(path) = &a.pairs_out {
        let prepared = evaluation::prepare(&d, a.split.mode, &config, seed)?;
        let mut out = String::from("part,questioned,known,label\n");
        for (part, pairs) in [
            ("train", &prepared.train),
            ("val", &prepared.val),
            ("test", &prepared.test),
        ] {
            for p in &pairs.pairs {
                let _ = writeln!(
                    out,
                    "{part},{},{},{}",
                    d.record(p.a).key(),
                    d.record(p.b).key(),
                    p.label
                );
            }
        }
        write_atomic(path, out.as_bytes())?;
    }
    Ok(())
}

fn calibrate(a: CalibrateArgs, schema: &FeatureSchema, seed: u64) -> CliResult<()> {
    let d = read_input(&a.input, schema)?;
    let config = eval_config(&a.split, a.ocs, a.alpha);
    let prepared = evaluation::prepare(&d, a.split.mode, &config, seed)?;
    warn_excluded(prepared.split.excluded_writers);
    let cal = match a.method {
        MethodArg::Daam => {
            if !d.has_soft() {
                return Err(cli_error("--soft", "DAAM calibration needs soft probability vectors"));
            }
            daam::calibrate(&d, &prepared.val, a.ocs)?
        }
        MethodArg::Laam => {
            let structure = NetworkStructure::from_schema(schema);
            let model = LaamModel::train(&d, &prepared.train, &structure, a.alpha)?;
            let llrs = model.llr_pairs(&d, &prepared.val)?;
            daam::calibrate_scores(&llrs, &prepared.val.labels(), &evaluation::laam_tau_sweep(&llrs))?
        }
    };
    emit(a.output.as_deref(), &cal.to_csv())?;
    eprintln!("chosen threshold: {}", cal.chosen_threshold);
    if let Some(p) = &a.config_out {
        let doc = ThresholdConfig {
            method: Method::from(a.method).as_str().into(),
            threshold: cal.chosen_threshold,
            regime: a.split.mode.as_str().into(),
            seed,
            ocs: match a.ocs {
                OcsMode::Mean => "mean".into(),
                OcsMode::Sum => "sum".into(),
            },
        };
        let text = toml::to_string(&doc).map_err(|e| cli_error("config", e.to_string()))?;
        write_atomic(p, text.as_bytes())?;
    }
    Ok(())
}

fn evaluate(a: EvaluateArgs, schema: &FeatureSchema, seed: u64) -> CliResult<()> {
    let methods: Vec<Method> = match a.method {
        MethodSel::Daam => vec![Method::Daam],
        MethodSel::Laam => vec![Method::Laam],
        MethodSel::Both => vec![Method::Daam, Method::Laam],
    };
    let d = match (&a.soft, &a.labels) {
        (Some(p), _) => read_soft_records(p, schema)?,
        (None, Some(p)) => {
            if methods.contains(&Method::Daam) {
                return Err(cli_error(
                    "--soft",
                    "DAAM needs soft probability vectors and none were given",
                ));
            }
            read_labels_csv(p, schema)?
        }
        (None, None) => return Err(cli_error("--soft", "no input given (--labels suffices for LAAM alone)")),
    };
    let regimes: Vec<PartitionMode> = match a.regime {
        RegimeSel::Seen => vec![PartitionMode::Seen],
        RegimeSel::Unseen => vec![PartitionMode::Unseen],
        RegimeSel::Shuffled => vec![PartitionMode::Shuffled],
        RegimeSel::All => PartitionMode::ALL.to_vec(),
    };
    if a.runs == 0 {
        return Err(cli_error("runs", "need at least one run"));
    }
    let seeds: Vec<u64> = (0..a.runs).map(|i| seed.wrapping_add(i)).collect();
    let config = EvalConfig {
        ratios: a.ratios,
        pair_strategy: a.pair_strategy,
        ocs: a.ocs,
        alpha: a.alpha,
        tau: a.tau,
    };
    let reports = evaluation::compare_methods(&d, &regimes, &methods, &seeds, &config)?;
    emit(a.output.as_deref(), &evaluation::report_csv(&reports))
}

fn resolve_pair(p: &PairOpts, schema: &FeatureSchema) -> CliResult<(Dataset, usize, usize)> {
    let d = read_input(&p.input, schema)?;
    let find = |flag: &str, key: &str| -> CliResult<usize> {
        let (w, s) = key
            .split_once('/')
            .ok_or_else(|| cli_error(flag, format!("expected writer/sample, got '{key}'")))?;
        d.find(w, s)
            .ok_or_else(|| cli_error(flag, format!("no record '{key}' in the input")))
    };
    let q = find("--q", &p.q)?;
    let k = find("--k", &p.k)?;
    Ok((d, q, k))
}

fn read_config(path: &Path) -> CliResult<ThresholdConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    toml::from_str(&text).map_err(|e| Error::Parse {
        line: 0,
        message: format!("{}: {}", path.display(), e.message()),
    })
}

/// Flag, then config file. `None` means LAAM falls back to the model's tau.
fn decision_threshold(p: &PairOpts) -> CliResult<Option<f64>> {
    let (flag, name) = match p.method {
        MethodArg::Daam => (p.threshold, "--threshold"),
        MethodArg::Laam => (p.tau, "--tau"),
    };
    if flag.is_some() {
        return Ok(flag);
    }
    if let Some(path) = &p.config {
        let c = read_config(path)?;
        let want = Method::from(p.method).as_str();
        if c.method != want {
            return Err(cli_error(
                "--config",
                format!("config holds a {} threshold, not {want}", c.method),
            ));
        }
        return Ok(Some(c.threshold));
    }
    match p.method {
        MethodArg::Daam => Err(cli_error(name, format!("pass {name} or --config"))),
        MethodArg::Laam => Ok(None),
    }
}

fn load_model(p: &PairOpts, schema: &FeatureSchema) -> CliResult<LaamModel> {
    let path = p
        .model
        .as_ref()
        .ok_or_else(|| cli_error("--model", "LAAM needs a model from train-laam"))?;
    LaamModel::load(path, schema)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
