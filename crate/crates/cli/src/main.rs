use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use lexidot::dataset::{self, BuildConfig, CategoryMap, Corpus, FixtureClient, LabelRecord, LiveClient, WikidataClient};
use lexidot::eval::{self, AgreementMatrix, EvalOptions};
use lexidot::{
    jsonl, pairs, BackendSpec, Condition, Conditions, DotRegistry, Error, PairBuilder, Prediction, PredictionStatus,
    ScorerSession, SenseInventory, Sources, Task, TestInstance, FORMAT_VERSION,
};

mod output;

use output::{write_atomic, write_json_atomic};

#[derive(Parser)]
#[command(name = "lexidot", version, about = "Sense and regular-polysemy disambiguation")]
struct Cli {
    /// Output schema version; only the current version is accepted.
    #[arg(long, global = true, default_value_t = FORMAT_VERSION)]
    format_version: u32,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Flatten instances into context-gloss pairs.
    BuildPairs(PairArgs),
    /// Score and pick a candidate for every instance.
    Disambiguate(DisambiguateArgs),
    /// Accuracy report with buckets and baselines.
    Evaluate(EvaluateArgs),
    /// Fleiss' kappa over an item-by-category count CSV.
    Kappa(KappaArgs),
    /// Build the proper-noun dataset from a tagged corpus.
    BuildDataset(DatasetArgs),
    /// Attach gold labels to instances after checking them.
    ImportLabels(ImportArgs),
}

#[derive(Args)]
struct Inputs {
    #[arg(long)]
    inventory: Option<PathBuf>,
    #[arg(long)]
    registry: Option<PathBuf>,
    #[arg(long)]
    instances: PathBuf,
    /// Candidate condition; give once per task to override both defaults.
    #[arg(long = "mode")]
    modes: Vec<Condition>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct PairArgs {
    #[command(flatten)]
    inputs: Inputs,
    /// Pair records (JSONL).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DisambiguateArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long, default_value = "overlap")]
    backend: BackendSpec,
    #[arg(long, default_value_t = 30)]
    timeout_secs: u64,
    /// Predictions (JSONL).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    inputs: Inputs,
    /// Predictions from `disambiguate`. Without it, `--backend` is run.
    #[arg(long)]
    predictions: Option<PathBuf>,
    #[arg(long, default_value = "overlap")]
    backend: BackendSpec,
    #[arg(long, default_value_t = 30)]
    timeout_secs: u64,
    /// Labelled training split for the frequency baselines.
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct KappaArgs {
    /// CSV, one row per item and one count column per category.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DatasetArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Fixture lookups (JSONL). Required unless `--live`.
    #[arg(long, conflicts_with = "live")]
    wikidata: Option<PathBuf>,
    /// Query the endpoint in LEXIDOT_WIKIDATA_ENDPOINT (or the public API).
    #[arg(long)]
    live: bool,
    /// Category to dot object map (JSONL); the built-in table by default.
    #[arg(long)]
    categories: Option<PathBuf>,
    #[arg(long, default_value_t = 0.99)]
    percentile: f64,
    #[arg(long, default_value_t = 30)]
    sample_size: usize,
    #[arg(long, default_value_t = 0.2)]
    test_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ImportArgs {
    #[arg(long)]
    instances: PathBuf,
    /// JSONL of {"id", "label"}.
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    inventory: Option<PathBuf>,
    #[arg(long)]
    registry: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

/// Exit codes: 2 bad input, 3 scoring backend, 4 network.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Backend(_) => 3,
        Error::Transport(_) => 4,
        _ => 2,
    }
}

fn open(path: &Path) -> lexidot::Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))
}

struct Loaded {
    inventory: Option<SenseInventory>,
    registry: Option<DotRegistry>,
    instances: Vec<TestInstance>,
    conditions: Conditions,
}

impl Loaded {
    fn sources(&self) -> Sources<'_> {
        Sources::new(self.inventory.as_ref(), self.registry.as_ref())
    }
}

fn load(inputs: &Inputs) -> lexidot::Result<Loaded> {
    let inventory = inputs.inventory.as_deref().map(|p| SenseInventory::load(open(p)?)).transpose()?;
    let registry = inputs.registry.as_deref().map(|p| DotRegistry::load(open(p)?)).transpose()?;
    let instances = pairs::load_instances(open(&inputs.instances)?)?;
    let mut conditions = Conditions::default();
    for m in &inputs.modes {
        conditions = conditions.with(*m);
    }
    for inst in &instances {
        match inst.task {
            Task::Wsd if inventory.is_none() => {
                return Err(Error::InvalidArgument("WSD instances need --inventory".into()))
            }
            Task::Rp if registry.is_none() => {
                return Err(Error::InvalidArgument("RP instances need --registry".into()))
            }
            _ => {}
        }
    }
    Ok(Loaded {
        inventory,
        registry,
        instances,
        conditions,
    })
}

#[derive(Serialize)]
struct PairSummary {
    examples: usize,
    sequences: usize,
    discarded: usize,
    fallbacks: usize,
    seed: u64,
    format_version: u32,
}

fn print_json<T: Serialize>(v: &T) -> lexidot::Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer(&mut out, v).map_err(std::io::Error::from)?;
    writeln!(out)?;
    Ok(())
}

fn build_pairs(args: PairArgs) -> lexidot::Result<()> {
    let l = load(&args.inputs)?;
    let flat = PairBuilder::default().flatten(&l.instances, l.sources(), l.conditions, args.inputs.seed)?;
    if let Some(out) = &args.out {
        let records: Vec<_> = flat.records().collect();
        write_atomic(out, |w| jsonl::write_records(w, &records))?;
    }
    print_json(&PairSummary {
        examples: flat.examples(),
        sequences: flat.sequences(),
        discarded: flat.discarded.len(),
        fallbacks: flat.fallbacks,
        seed: args.inputs.seed,
        format_version: FORMAT_VERSION,
    })
}

#[derive(Serialize)]
struct RunSummary {
    instances: usize,
    scored: usize,
    discarded: usize,
    backend_failed: usize,
    backend: String,
    seed: u64,
    format_version: u32,
}

fn run_backend(
    l: &Loaded,
    backend: &BackendSpec,
    timeout_secs: u64,
    seed: u64,
    instances: &[TestInstance],
) -> lexidot::Result<Vec<Prediction>> {
    let mut session = ScorerSession::open(backend, seed, Duration::from_secs(timeout_secs))?;
    lexidot::disambiguate_all(&PairBuilder::default(), instances, l.sources(), &mut session, l.conditions, seed)
}

fn count(preds: &[Prediction], status: PredictionStatus) -> usize {
    preds.iter().filter(|p| p.status == status).count()
}

fn disambiguate(args: DisambiguateArgs) -> lexidot::Result<()> {
    let l = load(&args.inputs)?;
    let preds = run_backend(&l, &args.backend, args.timeout_secs, args.inputs.seed, &l.instances)?;
    match &args.out {
        Some(out) => write_atomic(out, |w| jsonl::write_records(w, &preds))?,
        None => jsonl::write_records(std::io::stdout().lock(), &preds)?,
    }
    let failed = count(&preds, PredictionStatus::BackendFailed);
    let summary = RunSummary {
        instances: preds.len(),
        scored: count(&preds, PredictionStatus::Scored),
        discarded: count(&preds, PredictionStatus::Discarded),
        backend_failed: failed,
        backend: args.backend.to_string(),
        seed: args.inputs.seed,
        format_version: FORMAT_VERSION,
    };
    if args.out.is_some() {
        print_json(&summary)?;
    }
    if failed > 0 {
        return Err(lexidot::BackendError::Protocol(format!("{failed} instance(s) could not be scored")).into());
    }
    Ok(())
}

fn evaluate(args: EvaluateArgs) -> lexidot::Result<()> {
    let l = load(&args.inputs)?;
    let condition = match args.inputs.modes.as_slice() {
        [m] => *m,
        [] => {
            let rp = l.instances.iter().any(|i| i.task == Task::Rp);
            let wsd = l.instances.iter().any(|i| i.task == Task::Wsd);
            match (wsd, rp) {
                (true, true) => {
                    return Err(Error::InvalidArgument(
                        "instances mix WSD and RP; choose one with --mode".into(),
                    ))
                }
                (_, true) => Condition::Dotted,
                _ => Condition::PosGuided,
            }
        }
        _ => return Err(Error::InvalidArgument("evaluate takes a single --mode".into())),
    };
    let task = condition.task();
    let selected: Vec<TestInstance> = l.instances.iter().filter(|i| i.task == task).cloned().collect();
    let train = args
        .train
        .as_deref()
        .map(|p| pairs::load_instances(open(p)?))
        .transpose()?
        .map(|t| t.into_iter().filter(|i| i.task == task).collect::<Vec<_>>());
    let (predictions, backend) = match &args.predictions {
        Some(p) => {
            let preds: Vec<Prediction> = jsonl::read_records(open(p)?)?.into_iter().map(|(_, p)| p).collect();
            (preds, None)
        }
        None => {
            let l = Loaded {
                conditions: Conditions::default().with(condition),
                ..l
            };
            let preds = run_backend(&l, &args.backend, args.timeout_secs, args.inputs.seed, &selected)?;
            return finish_eval(&args, &l, condition, &l.instances, &preds, train.as_deref(), Some(args.backend.to_string()));
        }
    };
    finish_eval(&args, &l, condition, &l.instances, &predictions, train.as_deref(), backend)
}

fn finish_eval(
    args: &EvaluateArgs,
    l: &Loaded,
    condition: Condition,
    instances: &[TestInstance],
    predictions: &[Prediction],
    train: Option<&[TestInstance]>,
    backend: Option<String>,
) -> lexidot::Result<()> {
    let opts = EvalOptions {
        condition,
        seed: args.inputs.seed,
        trials: args.trials,
    };
    let mut report = match condition.task() {
        Task::Wsd => {
            let inv = l
                .inventory
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("WSD evaluation needs --inventory".into()))?;
            eval::evaluate_wsd(instances, predictions, inv, train, &opts)?
        }
        Task::Rp => {
            let reg = l
                .registry
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("RP evaluation needs --registry".into()))?;
            eval::evaluate_rp(instances, predictions, reg, train, &opts)?
        }
    };
    report.config.backend = backend;
    match &args.out {
        Some(out) => {
            write_json_atomic(out, &report)?;
            print_json(&report)
        }
        None => print_json(&report),
    }
}

#[derive(Serialize)]
struct KappaReport {
    kappa: f64,
    observed_agreement: f64,
    expected_agreement: f64,
    items: usize,
    raters: u64,
    categories: Vec<String>,
    format_version: u32,
}

fn kappa(args: KappaArgs) -> lexidot::Result<()> {
    let m = AgreementMatrix::from_csv(open(&args.input)?)?;
    let report = KappaReport {
        kappa: eval::fleiss_kappa(&m),
        observed_agreement: m.observed_agreement(),
        expected_agreement: m.expected_agreement(),
        items: m.items(),
        raters: m.raters(),
        categories: m.categories().to_vec(),
        format_version: FORMAT_VERSION,
    };
    if let Some(out) = &args.out {
        write_json_atomic(out, &report)?;
    }
    print_json(&report)
}

fn build_dataset(args: DatasetArgs) -> lexidot::Result<()> {
    let corpus = Corpus::load(open(&args.corpus)?)?;
    let map = match &args.categories {
        Some(p) => CategoryMap::load(open(p)?)?,
        None => CategoryMap::builtin(),
    };
    let client: Box<dyn WikidataClient> = match (&args.wikidata, args.live) {
        (Some(p), _) => Box::new(FixtureClient::load(open(p)?)?),
        (None, true) => Box::new(LiveClient::from_env()),
        (None, false) => return Err(Error::InvalidArgument("give --wikidata FILE or --live".into())),
    };
    let config = BuildConfig {
        percentile: args.percentile,
        sample_size: args.sample_size,
        test_fraction: args.test_fraction,
        seed: args.seed,
    };
    let build = dataset::build_dataset(&corpus, client.as_ref(), &map, &config)?;
    std::fs::create_dir_all(&args.out)?;
    write_atomic(&args.out.join("registry.jsonl"), |w| build.registry.write(w))?;
    write_atomic(&args.out.join("train.jsonl"), |w| jsonl::write_records(w, &build.train))?;
    write_atomic(&args.out.join("test.jsonl"), |w| jsonl::write_records(w, &build.test))?;
    write_json_atomic(&args.out.join("manifest.json"), &build.manifest)?;
    print_json(&build.manifest)
}

fn import_labels(args: ImportArgs) -> lexidot::Result<()> {
    let mut instances = pairs::load_instances(open(&args.instances)?)?;
    let labels: Vec<LabelRecord> = jsonl::read_records(open(&args.labels)?)?.into_iter().map(|(_, r)| r).collect();
    let inventory = args.inventory.as_deref().map(|p| SenseInventory::load(open(p)?)).transpose()?;
    let registry = args.registry.as_deref().map(|p| DotRegistry::load(open(p)?)).transpose()?;
    let n = dataset::import_labels(&mut instances, &labels, inventory.as_ref(), registry.as_ref())?;
    write_atomic(&args.out, |w| jsonl::write_records(w, &instances))?;
    print_json(&serde_json::json!({
        "instances": instances.len(),
        "labelled": n,
        "format_version": FORMAT_VERSION,
    }))
}

fn run(cli: Cli) -> lexidot::Result<()> {
    if cli.format_version != FORMAT_VERSION {
        return Err(Error::InvalidArgument(format!(
            "format version {} is not supported (this build writes {FORMAT_VERSION})",
            cli.format_version
        )));
    }
    match cli.command {
        Command::BuildPairs(a) => build_pairs(a),
        Command::Disambiguate(a) => disambiguate(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Kappa(a) => kappa(a),
        Command::BuildDataset(a) => build_dataset(a),
        Command::ImportLabels(a) => import_labels(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let body = serde_json::json!({"error": e.kind(), "message": e.to_string()});
            eprintln!("{body}");
            ExitCode::from(exit_code(&e))
        }
    }
}
