mod error;
mod input;

use std::collections::BTreeSet;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde::Serialize;
use serde_json::json;
use zsa::affinity::GridEmbeddingBundle;
use zsa::compiler::{load_app, save_app, CompileConfig};
use zsa::embedding_store::{encode_json_mirror, LabelEmbeddingSet};
use zsa::evaluation::{
    compare_runs, evaluate_binary_roc, evaluate_multiclass, per_class_csv, roc_points_csv,
    DatasetManifest, LoopTools, RunReport,
};
use zsa::inference::{InferenceError, LoopConfig, Reasoner};
use zsa::provider::EmbeddingProvider;
use zsa::{
    compile_app, compute_grid_affinities, heatmap, load_embeddings, load_ontology, run_inference,
    save_embeddings, semantic_expand, AnalyticsApp,
};

use error::CliError;

#[derive(Parser)]
#[command(
    name = "zsa",
    version,
    about = "Zero-shot analytics over joint image/text embeddings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Expand seed keywords and embed every label into an app package
    Compile(CompileArgs),
    /// Score one image embedding against an app
    Infer(InferArgs),
    /// Per-cell affinity heatmap for one label
    Grid(GridArgs),
    /// Print the semantic expansion without embedding anything
    Expand(ExpandArgs),
    /// Multi-class metrics over a labeled manifest
    Evaluate(EvaluateArgs),
    /// Binary ROC curve over a labeled manifest
    Roc(RocArgs),
    /// Write an app's expansion back out as ontology TSV
    ExportOntology(ExportArgs),
    /// Embed a list of labels into an embedding file
    EmbedFile(EmbedFileArgs),
}

#[derive(Args)]
struct ExpansionFlags {
    /// Comma-separated relations treated as positive evidence
    #[arg(long, default_value = "hyponym,related,synonym")]
    positive: String,
    /// Comma-separated relations treated as negative evidence
    #[arg(long, default_value = "antonym")]
    negative: String,
    #[arg(long, default_value_t = 2)]
    max_depth: u32,
    #[arg(long, default_value_t = 32)]
    max_terms: usize,
    /// Softmax temperature stored in the package
    #[arg(long, default_value_t = 1.0)]
    temperature: f64,
    /// Grid shape recorded in the package, e.g. 3x3
    #[arg(long)]
    grid: Option<String>,
    /// Reasoner endpoint recorded in the package
    #[arg(long)]
    reasoner_endpoint: Option<String>,
}

impl ExpansionFlags {
    fn config(&self) -> Result<CompileConfig, CliError> {
        let cfg = CompileConfig {
            relations_positive: input::parse_relations(&self.positive)?,
            relations_negative: input::parse_relations(&self.negative)?,
            max_depth: self.max_depth,
            max_terms_per_seed: self.max_terms,
            temperature: self.temperature,
            grid: self.grid.as_deref().map(input::parse_grid).transpose()?,
            reasoner_endpoint: self.reasoner_endpoint.clone(),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct CompileArgs {
    /// JSON file: {"classes": {"name": ["seed", ...]}}
    #[arg(long)]
    seeds: PathBuf,
    /// Ontology TSV: source, relation, target[, weight]
    #[arg(long)]
    ontology: PathBuf,
    /// synthetic:SEED:DIM, file:PATH or http:URL
    #[arg(long)]
    provider: String,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    expansion: ExpansionFlags,
    /// Remote request timeout in seconds
    #[arg(long, default_value_t = 30.0)]
    timeout: f64,
}

#[derive(Args)]
struct ExpandArgs {
    #[arg(long)]
    seeds: PathBuf,
    #[arg(long)]
    ontology: PathBuf,
    #[command(flatten)]
    expansion: ExpansionFlags,
}

#[derive(Args)]
struct LoopFlags {
    /// Run the reasoning loop (needs --reasoner and --provider)
    #[arg(long)]
    reason: bool,
    /// walk:ONTOLOGY or http:URL
    #[arg(long)]
    reasoner: Option<String>,
    /// Provider used to embed proposed labels
    #[arg(long)]
    provider: Option<String>,
    #[arg(long, default_value_t = 10)]
    max_cycles: usize,
    /// Ranking depth compared between cycles
    #[arg(long, default_value_t = 5)]
    top_x: usize,
    /// Jaccard overlap at which the loop stops
    #[arg(long, default_value_t = 1.0)]
    jaccard: f64,
    /// Softmax temperature; defaults to the one stored in the app
    #[arg(long)]
    temperature: Option<f64>,
    /// Remote request timeout in seconds
    #[arg(long, default_value_t = 30.0)]
    timeout: f64,
}

/// Reasoner and provider opened from the loop flags.
struct LoopSetup {
    cfg: LoopConfig,
    reasoner: Option<Box<dyn Reasoner>>,
    provider: Option<Box<dyn EmbeddingProvider>>,
}

impl LoopSetup {
    fn tools(&self) -> LoopTools<'_> {
        LoopTools {
            reasoner: self.reasoner.as_deref(),
            provider: self.provider.as_deref(),
        }
    }
}

impl LoopFlags {
    fn setup(&self, app: &AnalyticsApp) -> Result<LoopSetup, CliError> {
        let cfg = LoopConfig {
            max_cycles: self.max_cycles,
            top_x: self.top_x,
            convergence_jaccard: self.jaccard,
            temperature: self.temperature.unwrap_or(app.config.temperature),
            reasoning_enabled: self.reason,
            ..LoopConfig::default()
        };
        cfg.validate()?;
        if !self.reason {
            return Ok(LoopSetup {
                cfg,
                reasoner: None,
                provider: None,
            });
        }
        let (Some(reasoner), Some(provider)) = (&self.reasoner, &self.provider) else {
            return Err(CliError::usage(
                "--reason requires both --reasoner and --provider",
            ));
        };
        let timeout = timeout(self.timeout)?;
        Ok(LoopSetup {
            reasoner: Some(input::open_reasoner(reasoner, &app.config, timeout)?),
            provider: Some(input::open_provider(provider, timeout)?),
            cfg,
        })
    }
}

#[derive(Args)]
struct InferArgs {
    #[arg(long)]
    app: PathBuf,
    /// Embedding file, or an inline vector such as "[0.1, 0.2]"
    #[arg(long)]
    embedding: String,
    /// Entry to use when the embedding file holds several
    #[arg(long)]
    label: Option<String>,
    /// Number of ranked labels shown per affinity listing
    #[arg(long, default_value_t = 100)]
    top: usize,
    #[command(flatten)]
    run: LoopFlags,
}

#[derive(Clone, Copy, ValueEnum)]
enum GridFormat {
    Json,
    Csv,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long)]
    app: PathBuf,
    /// Embedding file with cell_R_C (and optionally global) entries
    #[arg(long)]
    grid_bundle: PathBuf,
    #[arg(long)]
    label: String,
    #[arg(long, value_enum, default_value = "json")]
    format: GridFormat,
    #[arg(long)]
    temperature: Option<f64>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    app: PathBuf,
    /// JSONL manifest of labeled items
    #[arg(long)]
    manifest: PathBuf,
    /// Earlier report to diff against; prints the delta instead
    #[arg(long)]
    compare: Option<PathBuf>,
    /// Also write per-class metrics as CSV
    #[arg(long)]
    per_class_csv: Option<PathBuf>,
    #[command(flatten)]
    run: LoopFlags,
}

#[derive(Args)]
struct RocArgs {
    #[arg(long)]
    app: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    /// Comma-separated classes counted as positives
    #[arg(long)]
    positive: String,
    #[arg(long)]
    compare: Option<PathBuf>,
    /// Also write the curve points as CSV
    #[arg(long)]
    points_csv: Option<PathBuf>,
    #[command(flatten)]
    run: LoopFlags,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    app: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EmbedFileArgs {
    #[arg(long)]
    provider: String,
    /// File with one label per line
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Extra label; repeatable
    #[arg(long = "label")]
    label: Vec<String>,
    #[arg(long)]
    out: PathBuf,
    /// Write the JSON mirror instead of binary
    #[arg(long)]
    json: bool,
    #[arg(long, default_value_t = 30.0)]
    timeout: f64,
}

fn timeout(secs: f64) -> Result<Duration, CliError> {
    Duration::try_from_secs_f64(secs)
        .ok()
        .filter(|d| !d.is_zero())
        .ok_or_else(|| CliError::usage(format!("invalid timeout {secs}")))
}

/// Writes to stdout; a reader that went away early is not an error.
fn write_stdout(text: &str) -> Result<(), CliError> {
    match io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        other => other.map_err(CliError::from),
    }
}

fn emit<T: Serialize>(value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_stdout(&text)
}

fn open_app(path: &Path) -> Result<AnalyticsApp, CliError> {
    load_app(path).map_err(|e| CliError::from(e).context(path.display()))
}

fn open_manifest(path: &Path) -> Result<DatasetManifest, CliError> {
    DatasetManifest::load(path).map_err(|e| CliError::from(e).context(path.display()))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::from(e).context(path.display()))
}

fn compile(args: CompileArgs) -> Result<(), CliError> {
    let cfg = args.expansion.config()?;
    let seeds = input::read_seeds(&args.seeds)?;
    let g = load_ontology(&args.ontology)
        .map_err(|e| CliError::from(e).context(args.ontology.display()))?;
    let provider = input::open_provider(&args.provider, timeout(args.timeout)?)?;
    let app = compile_app(&seeds, &g, &provider, &cfg)?;
    save_app(&app, &args.out).map_err(|e| CliError::from(e).context(args.out.display()))?;
    info!(
        "wrote {} labels to {}",
        app.label_embeddings.len(),
        args.out.display()
    );
    emit(&json!({
        "out": args.out,
        "classes": app.classes.len(),
        "labels": app.label_embeddings.len(),
        "dim": app.dim(),
        "provenance": app.provenance,
    }))
}

fn expand(args: ExpandArgs) -> Result<(), CliError> {
    let cfg = args.expansion.config()?;
    let seeds = input::read_seeds(&args.seeds)?;
    let g = load_ontology(&args.ontology)
        .map_err(|e| CliError::from(e).context(args.ontology.display()))?;
    emit(&semantic_expand(&seeds, &g, &cfg)?)
}

fn infer(args: InferArgs) -> Result<(), CliError> {
    let app = open_app(&args.app)?;
    let v = input::read_embedding(&args.embedding, args.label.as_deref())?;
    let setup = args.run.setup(&app)?;
    let tools = setup.tools();
    match run_inference(&app, &v, tools.reasoner, tools.provider, &setup.cfg) {
        Ok(report) => emit(&report.truncated(args.top)),
        Err(e) => {
            // a failed loop still reports the cycles it completed
            if let InferenceError::Reasoner { partial, .. }
            | InferenceError::Provider { partial, .. } = &e
            {
                emit(&partial.truncated(args.top))?;
            }
            Err(e.into())
        }
    }
}

fn grid(args: GridArgs) -> Result<(), CliError> {
    let app = open_app(&args.app)?;
    let cells = load_embeddings(&args.grid_bundle)
        .map_err(|e| CliError::from(e).context(args.grid_bundle.display()))?
        .set;
    let bundle = GridEmbeddingBundle::from_label_set(&cells)?;
    let temperature = args.temperature.unwrap_or(app.config.temperature);
    let map = compute_grid_affinities(&bundle, &app.label_embeddings, temperature)?;
    let hm = heatmap(&map, &args.label)?;
    match args.format {
        GridFormat::Csv => write_stdout(&hm.to_csv()),
        GridFormat::Json => {
            let (r, c) = hm.argmax();
            let global = map
                .global_result
                .as_ref()
                .and_then(|g| g.score_of(&hm.label));
            emit(&json!({
                "label": hm.label,
                "rows": hm.rows,
                "cols": hm.cols,
                "values": hm.values,
                "argmax": [r, c],
                "global": global,
            }))
        }
    }
}

fn read_report(path: &Path) -> Result<RunReport, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::from(e).context(path.display()))?;
    serde_json::from_str(&text).map_err(|e| CliError::from(e).context(path.display()))
}

fn emit_or_compare(report: RunReport, compare: Option<&Path>) -> Result<(), CliError> {
    match compare {
        Some(path) => {
            let earlier = read_report(path)?;
            emit(&compare_runs(&earlier, &report)?)
        }
        None => emit(&report),
    }
}

fn evaluate(args: EvaluateArgs) -> Result<(), CliError> {
    let app = open_app(&args.app)?;
    let manifest = open_manifest(&args.manifest)?;
    let setup = args.run.setup(&app)?;
    let report = evaluate_multiclass(&app, &manifest, &setup.cfg, setup.tools())?;
    if let Some(path) = &args.per_class_csv {
        write_file(path, per_class_csv(&report)?)?;
    }
    emit_or_compare(RunReport::Metrics(report), args.compare.as_deref())
}

fn roc(args: RocArgs) -> Result<(), CliError> {
    let app = open_app(&args.app)?;
    let manifest = open_manifest(&args.manifest)?;
    let positive: BTreeSet<String> = args
        .positive
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(zsa::text::canonical_label)
        .collect();
    if positive.is_empty() {
        return Err(CliError::usage("--positive needs at least one class"));
    }
    let setup = args.run.setup(&app)?;
    let curve = evaluate_binary_roc(&app, &manifest, &positive, &setup.cfg, setup.tools())?;
    if let Some(path) = &args.points_csv {
        write_file(path, roc_points_csv(&curve))?;
    }
    emit_or_compare(RunReport::Roc(curve), args.compare.as_deref())
}

fn export_ontology(args: ExportArgs) -> Result<(), CliError> {
    let g = open_app(&args.app)?.export_ontology();
    write_file(&args.out, g.to_tsv())?;
    emit(&json!({
        "out": args.out,
        "nodes": g.node_count(),
        "edges": g.edge_count(),
    }))
}

fn embed_file(args: EmbedFileArgs) -> Result<(), CliError> {
    let mut labels = match &args.labels {
        Some(path) => input::read_label_list(path)?,
        None => Vec::new(),
    };
    labels.extend(args.label.iter().cloned());
    if labels.is_empty() {
        return Err(CliError::usage(
            "no labels given; use --labels FILE or --label",
        ));
    }
    let provider = input::open_provider(&args.provider, timeout(args.timeout)?)?;
    let mut set = LabelEmbeddingSet::new(provider.dim());
    for label in &labels {
        let canonical = zsa::text::canonical_label(label);
        if set.contains(&canonical) {
            continue;
        }
        set.insert(&canonical, provider.embed_text(&canonical)?)?;
    }
    if args.json {
        write_file(&args.out, encode_json_mirror(&set)?)?;
    } else {
        save_embeddings(&set, &args.out)
            .map_err(|e| CliError::from(e).context(args.out.display()))?;
    }
    emit(&json!({
        "out": args.out,
        "provider": provider.id(),
        "dim": set.dim(),
        "count": set.len(),
    }))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ETHOS_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Compile(a) => compile(a),
        Command::Infer(a) => infer(a),
        Command::Grid(a) => grid(a),
        Command::Expand(a) => expand(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Roc(a) => roc(a),
        Command::ExportOntology(a) => export_ontology(a),
        Command::EmbedFile(a) => embed_file(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
