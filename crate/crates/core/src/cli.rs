//! `hetreg` command-line front end.
//!
//! Every subcommand writes its outputs into one directory together with a
//! `manifest.json` describing the invocation. Run settings can be given as a
//! TOML file:
//!
//! ```toml
//! split_seed = 0
//! heads = ["gaussian-hetero", "laplace-homo"]
//!
//! [generator]
//! n_records = 50000
//! hetero_strength = 16.0
//!
//! [schema]
//! min_category_count = 1
//!
//! [train]
//! dropout_rate = 0.2
//! initial_lr = 0.1
//! lr_halving_period_epochs = 50
//! epochs = 200
//! batch_size = 256
//! ```
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
//! failure.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::data::{self, Corpus, GeneratorConfig, Split};
use crate::distributions::Family;
use crate::error::{Error, Result};
use crate::eval::{self, AblationReport, BookingStrategy, EvalOptions};
use crate::features::{fit_schema, FeatureSchema, SchemaConfig};
use crate::train::{self, Dataset, ModelBundle, TrainConfig, TrainedModel};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CORPUS_FILE: &str = "corpus.csv";
pub const TRUTH_FILE: &str = "truth.csv";
pub const BUNDLE_FILE: &str = "bundle.json";

#[derive(Debug, Parser)]
#[command(
    name = "hetreg",
    version,
    about = "Heteroscedastic surgery-duration regression"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Run seed; overrides the seeds in the config file.
    #[arg(long)]
    pub seed: Option<u64>,
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ModelInputs {
    /// Bundle file or a directory containing `bundle.json`.
    #[arg(long)]
    pub bundle: PathBuf,
    /// Corpus CSV or a directory containing `corpus.csv`.
    #[arg(long)]
    pub corpus: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic corpus and its ground-truth sidecar.
    Generate {
        #[command(flatten)]
        common: Common,
        /// Number of records.
        #[arg(long)]
        n: Option<usize>,
        /// Ratio of largest to smallest conditional standard deviation; 1 gives a homoscedastic corpus.
        #[arg(long)]
        hetero_strength: Option<f64>,
    },
    /// Filter and split a corpus, then train the baselines and MLP heads.
    Train {
        #[command(flatten)]
        common: Common,
        /// Corpus CSV or a directory containing `corpus.csv`.
        #[arg(long)]
        corpus: PathBuf,
        /// MLP head such as `gaussian`, `laplace-homo` or `gamma-hetero`; `all` trains every variant.
        #[arg(long = "head", value_name = "HEAD")]
        heads: Vec<String>,
        /// Grid-search depth and width for every head.
        #[arg(long)]
        grid: bool,
        /// Override the epoch budget of the linear and MLP models.
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Evaluate every model of a bundle on the test split.
    Eval {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        inputs: ModelInputs,
        /// Comma-separated booking strategies (default: all).
        #[arg(long, value_delimiter = ',')]
        booking: Option<Vec<String>>,
        /// Also run the feature-group ablation for each MLP.
        #[arg(long)]
        ablate: bool,
    },
    /// Retrain MLPs with each feature group zeroed and report metric deltas.
    Ablate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        inputs: ModelInputs,
        /// Restrict to one model of the bundle.
        #[arg(long)]
        model: Option<String>,
    },
    /// Booking curves and cost-optimal knobs on the test split.
    Booking {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        inputs: ModelInputs,
        /// Comma-separated booking strategies (default: all).
        #[arg(long, value_delimiter = ',')]
        booking: Option<Vec<String>>,
        /// Cost per overbooked minute.
        #[arg(long, default_value_t = 1.0)]
        cost_over: f64,
        /// Cost per underbooked minute.
        #[arg(long, default_value_t = 1.0)]
        cost_under: f64,
    },
}

/// Settings read from `--config`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub split_seed: u64,
    /// MLP heads to train when `--head` is not given; empty means the `train` section alone.
    pub heads: Vec<String>,
    pub generator: GeneratorConfig,
    pub schema: SchemaConfig,
    pub train: TrainConfig,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text)
            .map_err(|e| Error::config("config", format!("{}: {}", path.display(), e.message())))
    }
}

/// Description of the invocation that produced an output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub config_path: Option<PathBuf>,
    pub seeds: BTreeMap<String, u64>,
    pub inputs: Vec<PathBuf>,
    pub output_dir: PathBuf,
    pub outputs: Vec<String>,
    pub schema_hash: Option<String>,
}

impl RunManifest {
    fn new(subcommand: &str, common: &Common) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: subcommand.to_string(),
            config_path: common.config.clone(),
            seeds: BTreeMap::new(),
            inputs: Vec::new(),
            output_dir: common.out.clone(),
            outputs: Vec::new(),
            schema_hash: None,
        }
    }

    fn write(mut self, dir: &Path) -> Result<()> {
        self.outputs.sort();
        self.outputs.push(MANIFEST_FILE.to_string());
        std::fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&self)?)?;
        Ok(())
    }
}

/// Parse `family[-hetero|-homo]`; `all` expands to the five trainable variants.
pub fn parse_heads(specs: &[String], base: &TrainConfig) -> Result<Vec<TrainConfig>> {
    let mut out = Vec::new();
    for spec in specs {
        if spec.eq_ignore_ascii_case("all") {
            for (f, h) in [
                (Family::Gaussian, true),
                (Family::Gaussian, false),
                (Family::Laplace, true),
                (Family::Laplace, false),
                (Family::Gamma, true),
            ] {
                out.push(head_config(base, f, h));
            }
            continue;
        }
        let (family, hetero) = match spec.rsplit_once('-') {
            Some((f, "hetero")) => (f, true),
            Some((f, "homo")) => (f, false),
            _ => (spec.as_str(), true),
        };
        let cfg = head_config(base, family.parse()?, hetero);
        cfg.validate()?;
        out.push(cfg);
    }
    Ok(out)
}

/// `base` with the head swapped and the width reset to the standard one for
/// that head unless the base width was customised.
fn head_config(base: &TrainConfig, family: Family, heteroscedastic: bool) -> TrainConfig {
    let standard = TrainConfig::standard(base.family, base.heteroscedastic);
    let width = if base.hidden_width == standard.hidden_width {
        TrainConfig::standard(family, heteroscedastic).hidden_width
    } else {
        base.hidden_width
    };
    TrainConfig {
        family,
        heteroscedastic,
        hidden_width: width,
        ..base.clone()
    }
}

fn parse_strategies(list: &Option<Vec<String>>) -> Result<Vec<BookingStrategy>> {
    match list {
        None => Ok(BookingStrategy::ALL.to_vec()),
        Some(v) => v.iter().map(|s| s.trim().parse()).collect(),
    }
}

/// `path`, or `path/default_name` when `path` is a directory; the result must exist.
fn resolve(path: &Path, default_name: &str) -> Result<PathBuf> {
    let p = if path.is_dir() {
        path.join(default_name)
    } else {
        path.to_path_buf()
    };
    if !p.is_file() {
        return Err(Error::Data(format!("input file {} not found", p.display())));
    }
    Ok(p)
}

/// Filtered corpus with splits assigned.
fn load_split_corpus(path: &Path, split_seed: u64) -> Result<(Corpus, data::FilterOutcome)> {
    let (mut corpus, outcome) = Corpus::from_file(path)?.filtered();
    corpus.assign_splits(split_seed)?;
    Ok((corpus, outcome))
}

fn encode_splits(corpus: &Corpus, schema: &FeatureSchema) -> Result<[Dataset; 3]> {
    Ok([
        Dataset::encode(schema, corpus.view(Split::Train)?),
        Dataset::encode(schema, corpus.view(Split::Valid)?),
        Dataset::encode(schema, corpus.view(Split::Test)?),
    ])
}

fn write_csv_rows(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_generate(common: &Common, n: Option<usize>, hetero_strength: Option<f64>) -> Result<()> {
    let run = RunConfig::load(common.config.as_deref())?;
    let mut cfg = run.generator;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(n) = n {
        cfg.n_records = n;
    }
    if let Some(h) = hetero_strength {
        cfg.hetero_strength = h;
    }
    let corpus = data::generate(&cfg)?;
    std::fs::create_dir_all(&common.out)?;
    data::write_records_file(&common.out.join(CORPUS_FILE), &corpus.records)?;
    let truth = corpus.truth.as_deref().unwrap_or_default();
    data::write_truth(std::fs::File::create(common.out.join(TRUTH_FILE))?, truth)?;
    std::fs::write(
        common.out.join("generator.toml"),
        toml::to_string(&cfg).map_err(|e| Error::Data(e.to_string()))?,
    )?;

    let mut m = RunManifest::new("generate", common);
    m.seeds.insert("generator".into(), cfg.seed);
    m.outputs = vec![CORPUS_FILE.into(), TRUTH_FILE.into(), "generator.toml".into()];
    m.write(&common.out)
}

fn cmd_train(
    common: &Common,
    corpus: &Path,
    heads: &[String],
    grid: bool,
    epochs: Option<usize>,
) -> Result<()> {
    let mut run = RunConfig::load(common.config.as_deref())?;
    if let Some(s) = common.seed {
        run.split_seed = s;
        run.train.sgd.seed = s;
    }
    if let Some(e) = epochs {
        run.train.sgd.epochs = e;
    }
    let heads = if heads.is_empty() {
        run.heads.clone()
    } else {
        heads.to_vec()
    };
    let configs = if heads.is_empty() {
        run.train.validate()?;
        vec![run.train.clone()]
    } else {
        parse_heads(&heads, &run.train)?
    };

    let corpus_path = resolve(corpus, CORPUS_FILE)?;
    let (corpus, outcome) = load_split_corpus(&corpus_path, run.split_seed)?;
    let schema = fit_schema(&corpus.view(Split::Train)?, &run.schema)?;
    let [train_set, valid_set, _] = encode_splits(&corpus, &schema)?;

    let mut models: Vec<TrainedModel> = vec![
        train::current_method(&valid_set)?,
        train::train_procedure_means(&train_set, &valid_set)?,
        train::train_linear(&run.train.sgd, &train_set, &valid_set)?,
    ];
    let mut grid_rows = Vec::new();
    for cfg in &configs {
        if grid {
            let g = train::grid_search(cfg, &train::standard_grid(), &train_set, &valid_set)?;
            for (i, r) in g.results.iter().enumerate() {
                grid_rows.push(vec![
                    cfg.model_name(),
                    r.hidden_layers.to_string(),
                    r.hidden_width.to_string(),
                    r.valid_nll.to_string(),
                    r.best_epoch.map(|e| e.to_string()).unwrap_or_default(),
                    (i == g.best_index).to_string(),
                ]);
            }
            models.push(g.best_model);
        } else {
            models.push(train::train_mlp(cfg, &train_set, &valid_set)?);
        }
    }

    std::fs::create_dir_all(&common.out)?;
    let bundle = ModelBundle::new(schema, run.split_seed, models);
    std::fs::write(common.out.join(BUNDLE_FILE), bundle.to_json()?)?;
    let mut log_rows = Vec::new();
    for m in &bundle.models {
        for e in &m.log.epochs {
            log_rows.push(vec![
                m.name.clone(),
                e.epoch.to_string(),
                e.learning_rate.to_string(),
                e.train_loss.to_string(),
                e.valid_nll.to_string(),
            ]);
        }
    }
    write_csv_rows(
        &common.out.join("training_log.csv"),
        &["model", "epoch", "learning_rate", "train_loss", "valid_nll"],
        log_rows,
    )?;
    let filter_rows = outcome
        .tally()
        .into_iter()
        .map(|(reason, n)| vec![reason.name().to_string(), n.to_string()])
        .chain(std::iter::once(vec![
            "kept".to_string(),
            outcome.kept.len().to_string(),
        ]))
        .collect();
    write_csv_rows(&common.out.join("filter.csv"), &["outcome", "count"], filter_rows)?;
    std::fs::write(
        common.out.join("run_config.toml"),
        toml::to_string(&run).map_err(|e| Error::Data(e.to_string()))?,
    )?;

    let mut m = RunManifest::new("train", common);
    m.seeds.insert("split".into(), run.split_seed);
    m.seeds.insert("sgd".into(), run.train.sgd.seed);
    m.inputs.push(corpus_path);
    m.schema_hash = Some(bundle.schema_hash.clone());
    m.outputs = vec![
        BUNDLE_FILE.into(),
        "training_log.csv".into(),
        "filter.csv".into(),
        "run_config.toml".into(),
    ];
    if grid {
        write_csv_rows(
            &common.out.join("grid_results.csv"),
            &[
                "model",
                "hidden_layers",
                "hidden_width",
                "valid_nll",
                "best_epoch",
                "selected",
            ],
            grid_rows,
        )?;
        m.outputs.push("grid_results.csv".into());
    }
    m.write(&common.out)
}

struct Loaded {
    bundle: ModelBundle,
    splits: [Dataset; 3],
    bundle_path: PathBuf,
    corpus_path: PathBuf,
}

fn load_inputs(inputs: &ModelInputs) -> Result<Loaded> {
    let bundle_path = resolve(&inputs.bundle, BUNDLE_FILE)?;
    let corpus_path = resolve(&inputs.corpus, CORPUS_FILE)?;
    let bundle = ModelBundle::from_json(&std::fs::read_to_string(&bundle_path)?)?;
    let (corpus, _) = load_split_corpus(&corpus_path, bundle.split_seed)?;
    let splits = encode_splits(&corpus, &bundle.schema)?;
    Ok(Loaded {
        bundle,
        splits,
        bundle_path,
        corpus_path,
    })
}

fn manifest_for(subcommand: &str, common: &Common, l: &Loaded) -> RunManifest {
    let mut m = RunManifest::new(subcommand, common);
    m.seeds.insert("split".into(), l.bundle.split_seed);
    m.inputs = vec![l.bundle_path.clone(), l.corpus_path.clone()];
    m.schema_hash = Some(l.bundle.schema_hash.clone());
    m
}

fn run_ablation(l: &Loaded, only: Option<&str>) -> Result<Vec<AblationReport>> {
    let [train_set, valid_set, test_set] = &l.splits;
    let groups = l.bundle.schema.feature_groups();
    let mut reports = Vec::new();
    for m in &l.bundle.models {
        if only.is_some_and(|n| n != m.name) {
            continue;
        }
        let Some(cfg) = &m.config else {
            if only.is_some() {
                return Err(Error::config(
                    "model",
                    format!("`{}` has no MLP training config to ablate", m.name),
                ));
            }
            continue;
        };
        reports.push(eval::ablation(cfg, train_set, valid_set, test_set, &groups)?);
    }
    if let Some(name) = only {
        if reports.is_empty() {
            return Err(Error::config(
                "model",
                format!("no model named `{name}` in the bundle"),
            ));
        }
    }
    Ok(reports)
}

fn write_ablation(dir: &Path, reports: &[AblationReport]) -> Result<()> {
    eval::write_ablation_csv(reports, std::fs::File::create(dir.join("ablation.csv"))?)
}

fn cmd_eval(
    common: &Common,
    inputs: &ModelInputs,
    booking: &Option<Vec<String>>,
    ablate: bool,
) -> Result<()> {
    let opts = EvalOptions {
        booking: parse_strategies(booking)?,
        include_qq: true,
    };
    let l = load_inputs(inputs)?;
    let summary = eval::evaluate(&l.bundle.models, &l.splits[2], &opts)?;
    summary.write_files(&common.out)?;
    let mut m = manifest_for("eval", common, &l);
    m.outputs = [
        "report.json",
        "metrics.csv",
        "calibration.csv",
        "qq.csv",
        "booking_curve.csv",
    ]
    .map(String::from)
    .to_vec();
    if ablate {
        write_ablation(&common.out, &run_ablation(&l, None)?)?;
        m.outputs.push("ablation.csv".into());
    }
    m.write(&common.out)
}

fn cmd_ablate(common: &Common, inputs: &ModelInputs, model: Option<&str>) -> Result<()> {
    let l = load_inputs(inputs)?;
    let reports = run_ablation(&l, model)?;
    std::fs::create_dir_all(&common.out)?;
    write_ablation(&common.out, &reports)?;
    let mut m = manifest_for("ablate", common, &l);
    m.outputs = vec!["ablation.csv".into()];
    m.write(&common.out)
}

fn cmd_booking(
    common: &Common,
    inputs: &ModelInputs,
    booking: &Option<Vec<String>>,
    cost_over: f64,
    cost_under: f64,
) -> Result<()> {
    if !(cost_over >= 0.0 && cost_under >= 0.0 && cost_over + cost_under > 0.0) {
        return Err(Error::config(
            "cost",
            "costs must be non-negative and not both zero",
        ));
    }
    let opts = EvalOptions {
        booking: parse_strategies(booking)?,
        include_qq: false,
    };
    let l = load_inputs(inputs)?;
    let test = &l.splits[2];
    let mut curve_rows = Vec::new();
    let mut optima = Vec::new();
    for model in &l.bundle.models {
        let dists = model.predict(test)?;
        for &s in &opts.booking {
            let c = eval::booking_curve(
                eval::BookingInput::Distributions(&dists),
                &test.y,
                s,
                &s.default_grid(),
            )?;
            for p in &c.points {
                curve_rows.push(vec![
                    model.name.clone(),
                    s.name().to_string(),
                    p.knob.to_string(),
                    p.overbooked_minutes.to_string(),
                    p.underbooked_minutes.to_string(),
                ]);
            }
            let best = c
                .optimal_knob(cost_over, cost_under)
                .map(|k| k.to_string())
                .unwrap_or_default();
            optima.push(vec![
                model.name.clone(),
                s.name().to_string(),
                cost_over.to_string(),
                cost_under.to_string(),
                best,
            ]);
        }
    }
    std::fs::create_dir_all(&common.out)?;
    write_csv_rows(
        &common.out.join("booking_curve.csv"),
        &[
            "model",
            "strategy",
            "knob",
            "overbooked_minutes",
            "underbooked_minutes",
        ],
        curve_rows,
    )?;
    write_csv_rows(
        &common.out.join("booking_optima.csv"),
        &["model", "strategy", "cost_over", "cost_under", "optimal_knob"],
        optima,
    )?;
    let mut m = manifest_for("booking", common, &l);
    m.outputs = vec!["booking_curve.csv".into(), "booking_optima.csv".into()];
    m.write(&common.out)
}

pub fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Generate {
            common,
            n,
            hetero_strength,
        } => cmd_generate(common, *n, *hetero_strength),
        Command::Train {
            common,
            corpus,
            heads,
            grid,
            epochs,
        } => cmd_train(common, corpus, heads, *grid, *epochs),
        Command::Eval {
            common,
            inputs,
            booking,
            ablate,
        } => cmd_eval(common, inputs, booking, *ablate),
        Command::Ablate {
            common,
            inputs,
            model,
        } => cmd_ablate(common, inputs, model.as_deref()),
        Command::Booking {
            common,
            inputs,
            booking,
            cost_over,
            cost_under,
        } => cmd_booking(common, inputs, booking, *cost_over, *cost_under),
    }
}

/// Parse `args`, run, and return the process exit code. Errors are printed
/// to stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
