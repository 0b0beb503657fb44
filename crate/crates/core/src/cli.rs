//! Command-line front end. Each subcommand loads its inputs, calls library
//! operations and writes results atomically.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data errors.

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::chart::{emit_linechart, ChartOptions};
use crate::cluster::{build_dendrogram, cut, format_assignment, format_dendrogram, parse_assignment, Engine, LinkageKind, DEFAULT_MAX_ITERS};
use crate::embedding::{l2_normalize, load_embeddings, save_embeddings, EmbeddingMatrix};
use crate::error::Error;
use crate::fsio::write_atomic;
use crate::labels::{format_labels, load_labels, LabelTable, LabeledDataset};
use crate::manifest::{load_run, write_manifest, LayerEntry, RunManifest};
use crate::probe::{evaluate_probe, ProbeOptions};
use crate::protocol::{
    cluster_within_superclasses, cross_run_consistency, eval_external, eval_within_superclasses, export_exemplars,
    format_exemplars, relabel_labels, report_from_json, report_to_json, reports_csv, shuffle_hierarchy,
    sweep_chart_series, sweep_layers, HierarchySpec, LayerReport, ProtocolConfig, MAX_OVERCLUSTERING,
};
use crate::synth::{generate, SynthConfig, SynthMode};

/// Caps the worker threads; `0` runs everything on one thread.
pub const THREADS_ENV: &str = "CLUSTERLENS_THREADS";

#[derive(Parser, Debug)]
#[command(name = "clusterlens", version, about = "Subclass clusterability of neural-network embeddings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Cluster one embedding file into k groups.
    Cluster(ClusterArgs),
    /// Cluster within each superclass and score against subclasses.
    EvalWithin(EvalArgs),
    /// Cluster a whole dataset and score against its labels.
    EvalExternal(EvalArgs),
    /// Within-superclass evaluation of every layer of a run.
    Sweep(SweepArgs),
    /// Agreement between the clusterings of two runs, layer by layer.
    Consistency(ConsistencyArgs),
    /// Fit a linear probe from embeddings to subclass labels.
    Probe(ProbeArgs),
    /// Randomly regroup subclasses into superclasses of the same sizes.
    Shuffle(ShuffleArgs),
    /// Write a synthetic hierarchical run directory.
    Synth(SynthArgs),
    /// List the lowest-index members of every cluster.
    Exemplars(ExemplarArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum EngineArg {
    Ward,
    Average,
    Complete,
    Single,
    Kmeans,
}

#[derive(Args, Debug)]
struct EngineOpts {
    #[arg(long, value_enum, default_value = "ward")]
    engine: EngineArg,
    /// Seed for k-means and any other random step.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Lloyd iteration cap for k-means.
    #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
    max_iters: usize,
}

impl EngineOpts {
    fn engine(&self) -> Engine {
        let linkage = match self.engine {
            EngineArg::Ward => LinkageKind::Ward,
            EngineArg::Average => LinkageKind::Average,
            EngineArg::Complete => LinkageKind::Complete,
            EngineArg::Single => LinkageKind::Single,
            EngineArg::Kmeans => {
                return Engine::Kmeans {
                    seed: self.seed,
                    max_iters: self.max_iters,
                }
            }
        };
        Engine::Agglomerative { linkage }
    }
}

#[derive(Args, Debug)]
struct ProtocolOpts {
    #[command(flatten)]
    engine: EngineOpts,
    /// Clusters per subclass.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..=MAX_OVERCLUSTERING as u64))]
    factor: u64,
    /// Cluster raw embeddings instead of unit-normalized ones.
    #[arg(long)]
    no_normalize: bool,
}

impl ProtocolOpts {
    fn config(&self) -> ProtocolConfig {
        ProtocolConfig {
            overclustering_factor: self.factor as usize,
            engine: self.engine.engine(),
            normalize: !self.no_normalize,
        }
    }
}

#[derive(Args, Debug)]
struct ClusterArgs {
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(long)]
    k: usize,
    #[command(flatten)]
    engine: EngineOpts,
    #[arg(long)]
    no_normalize: bool,
    /// Assignment CSV.
    #[arg(long)]
    out: PathBuf,
    /// Merge table CSV; agglomerative engines only.
    #[arg(long)]
    dendrogram: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[command(flatten)]
    protocol: ProtocolOpts,
    /// JSON report.
    #[arg(long)]
    out: PathBuf,
    /// Per-group CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Run directory or its run.json.
    #[arg(long)]
    run: PathBuf,
    #[command(flatten)]
    protocol: ProtocolOpts,
    /// JSON list of per-layer reports.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    csv: Option<PathBuf>,
    /// SVG line chart of the headline scores per layer.
    #[arg(long)]
    chart: Option<PathBuf>,
    /// Also fit a linear probe on every layer.
    #[arg(long)]
    probe: bool,
    /// Fit probes on raw embeddings.
    #[arg(long, requires = "probe")]
    probe_raw: bool,
    #[arg(long, default_value_t = ProbeOptions::default().weight_decay)]
    weight_decay: f64,
    /// Fraction of samples held out to score the probe.
    #[arg(long, default_value_t = 0.0)]
    holdout: f64,
}

#[derive(Args, Debug)]
struct ConsistencyArgs {
    #[arg(long)]
    run_a: PathBuf,
    #[arg(long)]
    run_b: PathBuf,
    #[command(flatten)]
    protocol: ProtocolOpts,
    /// Write the full layer-by-layer ARI matrix instead of the diagonal.
    #[arg(long)]
    pairs: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ProbeArgs {
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    /// Skip unit normalization.
    #[arg(long)]
    raw: bool,
    #[arg(long, default_value_t = ProbeOptions::default().weight_decay)]
    weight_decay: f64,
    #[arg(long, default_value_t = ProbeOptions::default().max_iters)]
    max_iters: usize,
    #[arg(long, default_value_t = ProbeOptions::default().tol)]
    tol: f64,
    #[arg(long, default_value_t = 0.0)]
    holdout: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ShuffleArgs {
    /// Hierarchy JSON to shuffle.
    #[arg(long, required_unless_present = "labels")]
    hierarchy: Option<PathBuf>,
    /// Label CSV; its hierarchy is shuffled when --hierarchy is absent.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Shuffled hierarchy JSON.
    #[arg(long)]
    out: PathBuf,
    /// Label CSV rewritten to the shuffled superclasses.
    #[arg(long, requires = "labels")]
    relabel_out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ModeArg {
    Natural,
    Shuffled,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, default_value_t = 13)]
    superclasses: usize,
    #[arg(long, default_value_t = 4)]
    subclasses: usize,
    #[arg(long, default_value_t = 64)]
    dim: usize,
    #[arg(long, default_value_t = 1.0)]
    sigma_super: f64,
    #[arg(long, default_value_t = 0.3)]
    sigma_sub: f64,
    #[arg(long, default_value_t = 0.5)]
    sigma_noise: f64,
    #[arg(long, default_value_t = 100)]
    n_per_subclass: usize,
    #[arg(long, value_enum, default_value = "natural")]
    mode: ModeArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct ExemplarArgs {
    /// Assignment CSV as written by `cluster`.
    #[arg(long)]
    assignment: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[arg(long, default_value_t = 5)]
    per_cluster: usize,
    #[arg(long)]
    out: PathBuf,
}

enum Failure {
    Usage(String),
    Data { context: Option<String>, error: Error },
}

impl From<Error> for Failure {
    fn from(error: Error) -> Self {
        match error {
            Error::InvalidConfig(msg) => Failure::Usage(msg),
            error => Failure::Data { context: None, error },
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(msg) => write!(f, "{msg}"),
            Failure::Data { context: Some(c), error } => write!(f, "{c}: {error}"),
            Failure::Data { context: None, error } => write!(f, "{error}"),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn in_file<T>(path: &Path, r: crate::error::Result<T>) -> CliResult<T> {
    r.map_err(|error| match error {
        // Io errors already name their path.
        Error::Io { .. } => Failure::from(error),
        error => Failure::Data {
            context: Some(path.display().to_string()),
            error,
        },
    })
}

fn read_embeddings(path: &Path) -> CliResult<EmbeddingMatrix> {
    in_file(path, load_embeddings(path))
}

fn read_labels(path: &Path) -> CliResult<LabelTable> {
    in_file(path, load_labels(path))
}

fn read_dataset(embeddings: &Path, labels: &Path) -> CliResult<LabeledDataset> {
    Ok(LabeledDataset::new(read_embeddings(embeddings)?, read_labels(labels)?)?)
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    Ok(write_atomic(path, text.as_bytes())?)
}

fn thread_pool() -> CliResult<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(raw) = std::env::var_os(THREADS_ENV) {
        let n: usize = raw
            .to_str()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| Failure::Usage(format!("{THREADS_ENV} must be a non-negative integer")))?;
        builder = builder.num_threads(n.max(1));
    }
    builder
        .build()
        .map_err(|e| Failure::Usage(format!("cannot start worker threads: {e}")))
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let outcome = thread_pool().and_then(|pool| pool.install(|| execute(cli.command)));
    match outcome {
        Ok(()) => 0,
        Err(f @ Failure::Usage(_)) => {
            eprintln!("error: {f}");
            1
        }
        Err(f) => {
            eprintln!("error: {f}");
            2
        }
    }
}

fn execute(command: Command) -> CliResult<()> {
    match command {
        Command::Cluster(a) => cluster(a),
        Command::EvalWithin(a) => evaluate(a, true),
        Command::EvalExternal(a) => evaluate(a, false),
        Command::Sweep(a) => sweep(a),
        Command::Consistency(a) => consistency(a),
        Command::Probe(a) => probe(a),
        Command::Shuffle(a) => shuffle(a),
        Command::Synth(a) => synth(a),
        Command::Exemplars(a) => exemplars(a),
    }
}

fn cluster(a: ClusterArgs) -> CliResult<()> {
    let mut x = read_embeddings(&a.embeddings)?;
    if !a.no_normalize {
        let (unit, summary) = l2_normalize(&x);
        warn_zero_rows(&a.embeddings.display().to_string(), summary.zero_rows.len());
        x = unit;
    }
    let assignment = match a.engine.engine() {
        Engine::Agglomerative { linkage } => {
            let tree = build_dendrogram(&x, linkage)?;
            let assignment = cut(&tree, a.k)?;
            if let Some(path) = &a.dendrogram {
                write(path, &format_dendrogram(&tree))?;
            }
            assignment
        }
        engine => {
            if a.dendrogram.is_some() {
                return Err(Failure::Usage("--dendrogram needs an agglomerative engine".into()));
            }
            engine.run(&x, a.k)?
        }
    };
    write(&a.out, &format_assignment(&assignment))
}

/// Zero rows cannot be normalized and are clustered as-is.
fn warn_zero_rows(layer: &str, count: usize) {
    if count > 0 {
        eprintln!("warning: {layer}: {count} zero-norm rows left unnormalized");
    }
}

fn evaluate(a: EvalArgs, within: bool) -> CliResult<()> {
    let ds = read_dataset(&a.embeddings, &a.labels)?;
    let cfg = a.protocol.config();
    let report = if within {
        eval_within_superclasses(&ds, &cfg)?
    } else {
        eval_external(&ds, &cfg)?
    };
    warn_zero_rows(&report.layer, report.zero_norm_rows);
    if let Some(path) = &a.csv {
        let row = LayerReport {
            layer: report.layer.clone(),
            report: report.clone(),
            probe_acc: None,
        };
        write(path, &reports_csv(&[row]))?;
    }
    write(&a.out, &report_to_json(&report)?)
}

fn sweep(a: SweepArgs) -> CliResult<()> {
    let run = load_run(&a.run)?;
    let cfg = a.protocol.config();
    let reports = sweep_layers(&run.layers, &cfg)?;
    for (layer, report) in &reports {
        warn_zero_rows(layer, report.zero_norm_rows);
    }
    let probe_acc: Vec<Option<f64>> = if a.probe {
        let opts = ProbeOptions {
            weight_decay: a.weight_decay,
            ..ProbeOptions::default()
        };
        run.layers
            .par_iter()
            .map(|(_, ds)| {
                evaluate_probe(ds, !a.probe_raw, &opts, a.holdout, a.protocol.engine.seed).map(|r| Some(r.accuracy()))
            })
            .collect::<crate::error::Result<_>>()?
    } else {
        vec![None; reports.len()]
    };
    let layers: Vec<LayerReport> = reports
        .into_iter()
        .zip(probe_acc)
        .map(|((layer, report), probe_acc)| LayerReport {
            layer,
            report,
            probe_acc,
        })
        .collect();
    if let Some(path) = &a.csv {
        write(path, &reports_csv(&layers))?;
    }
    if let Some(path) = &a.chart {
        let opts = ChartOptions {
            title: format!("{} by layer", run.run_id),
            ..ChartOptions::default()
        };
        emit_linechart(&sweep_chart_series(&layers), &opts, path)?;
    }
    write(&a.out, &report_to_json(&layers)?)
}

fn pooled_assignments(
    layers: &[(String, LabeledDataset)],
    cfg: &ProtocolConfig,
) -> CliResult<Vec<(String, crate::cluster::ClusterAssignment)>> {
    Ok(layers
        .par_iter()
        .map(|(name, ds)| Ok((name.clone(), cluster_within_superclasses(ds, cfg)?.pooled)))
        .collect::<crate::error::Result<Vec<_>>>()?)
}

fn consistency(a: ConsistencyArgs) -> CliResult<()> {
    let cfg = a.protocol.config();
    let run_a = pooled_assignments(&load_run(&a.run_a)?.layers, &cfg)?;
    let run_b = pooled_assignments(&load_run(&a.run_b)?.layers, &cfg)?;
    let report = cross_run_consistency(&run_a, &run_b, a.pairs)?;
    let text = match &report.matrix {
        Some(m) => m.to_csv(),
        None => report.per_layer_csv(),
    };
    write(&a.out, &text)
}

fn probe(a: ProbeArgs) -> CliResult<()> {
    let ds = read_dataset(&a.embeddings, &a.labels)?;
    let opts = ProbeOptions {
        weight_decay: a.weight_decay,
        max_iters: a.max_iters,
        tol: a.tol,
    };
    let report = evaluate_probe(&ds, !a.raw, &opts, a.holdout, a.seed)?;
    write(&a.out, &report_to_json(&report)?)
}

fn shuffle(a: ShuffleArgs) -> CliResult<()> {
    let labels = a.labels.as_deref().map(read_labels).transpose()?;
    let spec = match (&a.hierarchy, &labels) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let spec: HierarchySpec = in_file(path, report_from_json(&text))?;
            in_file(path, spec.validate())?;
            spec
        }
        (None, Some(table)) => HierarchySpec::from_labels("labels", table)?,
        (None, None) => return Err(Failure::Usage("one of --hierarchy or --labels is required".into())),
    };
    let shuffled = shuffle_hierarchy(&spec, a.seed)?;
    if let (Some(path), Some(table)) = (&a.relabel_out, &labels) {
        write(path, &format_labels(&relabel_labels(table, &shuffled)?))?;
    }
    write(&a.out, &report_to_json(&shuffled)?)
}

fn synth(a: SynthArgs) -> CliResult<()> {
    let cfg = SynthConfig {
        spec: HierarchySpec::uniform("synthetic", a.superclasses, a.subclasses),
        d: a.dim,
        sigma_super: a.sigma_super,
        sigma_sub: a.sigma_sub,
        sigma_noise: a.sigma_noise,
        n_per_subclass: a.n_per_subclass,
        mode: match a.mode {
            ModeArg::Natural => SynthMode::Natural,
            ModeArg::Shuffled => SynthMode::Shuffled,
        },
        seed: a.seed,
    };
    if a.superclasses == 0 || a.subclasses == 0 {
        return Err(Failure::Usage("--superclasses and --subclasses must be at least 1".into()));
    }
    let ds = generate(&cfg)?;
    std::fs::create_dir_all(&a.out_dir).map_err(|e| Error::io(&a.out_dir, e))?;
    let layer = ds.embeddings.layer_name.clone();
    let file = format!("{layer}.emb");
    save_embeddings(&ds.embeddings, a.out_dir.join(&file))?;
    write(&a.out_dir.join("labels.csv"), &format_labels(&ds.labels))?;
    write(&a.out_dir.join("hierarchy.json"), &report_to_json(&cfg.spec)?)?;
    let manifest = RunManifest {
        run_id: ds.embeddings.run_id.clone(),
        layers: vec![LayerEntry { name: layer, file }],
        labels: "labels.csv".into(),
    };
    Ok(write_manifest(&manifest, &a.out_dir)?)
}

fn exemplars(a: ExemplarArgs) -> CliResult<()> {
    let text = std::fs::read_to_string(&a.assignment).map_err(|e| Error::io(&a.assignment, e))?;
    let assignment = in_file(&a.assignment, parse_assignment(&text))?;
    let labels = read_labels(&a.labels)?;
    let groups = export_exemplars(&assignment, &labels, a.per_cluster)?;
    write(&a.out, &format_exemplars(&groups))
}
