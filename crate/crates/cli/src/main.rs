//! `instsel` command-line frontend.

mod manifest;

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use instsel::io::{
    index_list_path, load_clustering, load_features, load_labels, load_selection, read_index_list,
    save_clustering, save_features, save_labels, save_selection, write_json,
};
use instsel::metrics::{ami, balance_report, segmentation_scores};
use instsel::synth::{generate, SyntheticSpec};
use instsel::{ClusterSelection, Clustering, Config, FeatureSet, SelectionResult};
use serde::Serialize;

use manifest::RunManifest;

#[derive(Parser)]
#[command(
    name = "instsel",
    version,
    about = "Entropy clustering and convex-hull instance selection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate labelled Gaussian blobs.
    Synth(SynthArgs),
    /// Cluster a feature matrix.
    Cluster(ClusterArgs),
    /// Select a fraction of every cluster.
    Select(SelectArgs),
    /// Score labels, segmentations or a selection; prints JSON.
    Eval(EvalArgs),
    /// Run synth, cluster and eval over a parameter grid.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Rzf,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    nc: usize,
    #[arg(long)]
    ns: usize,
    #[arg(long)]
    m: usize,
    #[arg(long, allow_negative_numbers = true)]
    mu: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    scale: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ConfigArgs {
    /// `key = value` file of pipeline parameters.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one parameter, e.g. `--set seed=3`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long, env = "RAZOR_WORKERS")]
    workers: Option<usize>,
}

#[derive(Args)]
struct ClusterArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    cfg: ConfigArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SelectArgs {
    #[arg(long)]
    input: PathBuf,
    /// Existing clustering JSON; the pipeline runs when omitted.
    #[arg(long, conflicts_with = "per_label")]
    clustering: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    tau: Option<f64>,
    /// Label CSV; the pipeline runs separately on every label value.
    #[arg(long)]
    per_label: Option<PathBuf>,
    #[command(flatten)]
    cfg: ConfigArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Ami,
    Seg,
    Balance,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long, value_enum)]
    mode: Mode,
    /// Predicted labels (CSV) or a clustering JSON.
    #[arg(long)]
    pred: Option<PathBuf>,
    #[arg(long)]
    truth: PathBuf,
    /// Selection JSON or `.idx` list, for balance mode.
    #[arg(long)]
    selection: Option<PathBuf>,
    /// Restrict seg mode to these classes.
    #[arg(long, value_delimiter = ',')]
    classes: Option<Vec<usize>>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    nc: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    ns: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    m: Vec<usize>,
    #[arg(long, default_value_t = 0.01)]
    mu: f64,
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(
        long,
        value_delimiter = ',',
        env = "RAZOR_WORKERS",
        default_value = "1"
    )]
    workers: Vec<usize>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    out: PathBuf,
}

/// Bad flags or parameters; exits with 2.
#[derive(Debug)]
struct Usage(String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use instsel::Error as E;
    for cause in err.chain() {
        if cause.is::<Usage>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::Config { .. } | E::InvalidArgument(_) => 2,
                E::Io(io) if io.kind() == std::io::ErrorKind::NotFound => 2,
                _ => 3,
            };
        }
        if let Some(io) = cause.downcast_ref::<std::io::Error>() {
            return if io.kind() == std::io::ErrorKind::NotFound {
                2
            } else {
                3
            };
        }
    }
    3
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Synth(a) => synth(a),
        Command::Cluster(a) => cluster(a),
        Command::Select(a) => select(a),
        Command::Eval(a) => eval(a),
        Command::Bench(a) => bench(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn build_config(
    file: Option<&Path>,
    overrides: &[String],
    workers: Option<usize>,
) -> Result<Config> {
    let mut cfg = match file {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Config::from_kv_str(&text).map_err(|e| usage(format!("{}: {e}", p.display())))?
        }
        None => Config::default(),
    };
    for kv in overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| usage(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        cfg.set(k.trim(), v).map_err(|e| usage(e.to_string()))?;
    }
    if let Some(w) = workers {
        cfg.workers = w;
    }
    Ok(cfg.validate()?)
}

fn load(path: &Path) -> Result<FeatureSet> {
    load_features(path).with_context(|| format!("loading {}", path.display()))
}

fn out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn finish(mut m: RunManifest, dir: &Path, outputs: &[PathBuf]) -> Result<()> {
    for p in outputs {
        m.output(p)?;
    }
    write_json(&m, dir.join("manifest.json"))?;
    Ok(())
}

fn synth(a: SynthArgs) -> Result<()> {
    let spec = SyntheticSpec {
        n_clusters: a.nc,
        points_per_cluster: a.ns,
        dims: a.m,
        mu: a.mu,
        center_scale: a.scale,
        seed: a.seed,
    };
    spec.validate()?;
    out_dir(&a.out)?;
    let t0 = Instant::now();
    let (fs, labels) = generate::<f64>(&spec)?;
    let features = a.out.join(match a.format {
        Format::Csv => "features.csv",
        Format::Rzf => "features.rzf",
    });
    let label_file = a.out.join("labels.csv");
    save_features(&fs, &features)?;
    save_labels(&labels, &label_file)?;
    let mut m = RunManifest::new("synth", &spec);
    m.time("generate", t0.elapsed().as_secs_f64());
    log::info!(
        "wrote {}x{} matrix to {}",
        fs.n(),
        fs.m(),
        features.display()
    );
    finish(m, &a.out, &[features, label_file])
}

fn cluster(a: ClusterArgs) -> Result<()> {
    let cfg = build_config(a.cfg.config.as_deref(), &a.cfg.overrides, a.cfg.workers)?;
    let fs = load(&a.input)?;
    out_dir(&a.out)?;
    let mut m = RunManifest::new("cluster", &cfg);
    m.input(&a.input)?;
    let t0 = Instant::now();
    let (c, trace) = instsel::cluster(&fs, &cfg)?;
    m.time("cluster", t0.elapsed().as_secs_f64());
    log::info!(
        "{} clusters, converged at {:?}",
        c.len(),
        trace.converged_at
    );
    let cpath = a.out.join("clustering.json");
    let tpath = a.out.join("trace.json");
    save_clustering(&c, &cpath)?;
    write_json(&trace, &tpath)?;
    finish(m, &a.out, &[cpath, tpath])
}

#[derive(Serialize)]
struct LabelSelection {
    label: usize,
    size: usize,
    clusters: usize,
    selected: Vec<usize>,
}

fn select(a: SelectArgs) -> Result<()> {
    let mut overrides = a.cfg.overrides.clone();
    if let Some(t) = a.tau {
        overrides.push(format!("tau={t}"));
    }
    let cfg = build_config(a.cfg.config.as_deref(), &overrides, a.cfg.workers)?;
    let fs = load(&a.input)?;
    out_dir(&a.out)?;
    let mut m = RunManifest::new("select", &cfg);
    m.input(&a.input)?;
    let mut outputs = Vec::new();
    let spath = a.out.join("selection.json");

    let sel = if let Some(lp) = &a.per_label {
        m.input(lp)?;
        let labels = load_labels(lp).with_context(|| format!("loading {}", lp.display()))?;
        if labels.len() != fs.n() {
            return Err(instsel::Error::LengthMismatch {
                left: labels.len(),
                right: fs.n(),
            }
            .into());
        }
        let mut by_label: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, &l) in labels.iter().enumerate() {
            by_label.entry(l).or_default().push(i);
        }
        let t0 = Instant::now();
        let mut groups = Vec::new();
        let mut per_cluster = Vec::new();
        let mut report = Vec::new();
        for (&label, idx) in &by_label {
            let sub = fs.subset(idx);
            let (c, _) = instsel::cluster(&sub, &cfg)?;
            let s = instsel::select(&c, &sub, &cfg)?;
            for cl in &c.clusters {
                groups.push(cl.members.iter().map(|&i| idx[i]).collect::<Vec<_>>());
            }
            for cs in s.per_cluster {
                per_cluster.push(ClusterSelection {
                    cluster: per_cluster.len(),
                    selected: cs.selected.iter().map(|&i| idx[i]).collect(),
                    n_samp: cs.n_samp,
                });
            }
            let mut selected: Vec<usize> = s.global.iter().map(|&i| idx[i]).collect();
            selected.sort_unstable();
            report.push(LabelSelection {
                label,
                size: idx.len(),
                clusters: c.len(),
                selected,
            });
        }
        m.time("per_label", t0.elapsed().as_secs_f64());
        let c = Clustering::from_groups(groups, &fs);
        let cpath = a.out.join("clustering.json");
        let lpath = a.out.join("per_label.json");
        save_clustering(&c, &cpath)?;
        write_json(&report, &lpath)?;
        outputs.extend([cpath, lpath]);
        SelectionResult::from_clusters(per_cluster)
    } else {
        let c = match &a.clustering {
            Some(p) => {
                m.input(p)?;
                let c: Clustering<f64> =
                    load_clustering(p).with_context(|| format!("loading {}", p.display()))?;
                if c.source_n != fs.n() {
                    return Err(instsel::Error::LengthMismatch {
                        left: c.source_n,
                        right: fs.n(),
                    }
                    .into());
                }
                c
            }
            None => {
                let t0 = Instant::now();
                let (c, _) = instsel::cluster(&fs, &cfg)?;
                m.time("cluster", t0.elapsed().as_secs_f64());
                let cpath = a.out.join("clustering.json");
                save_clustering(&c, &cpath)?;
                outputs.push(cpath);
                c
            }
        };
        let t0 = Instant::now();
        let s = instsel::select(&c, &fs, &cfg)?;
        m.time("select", t0.elapsed().as_secs_f64());
        s
    };
    log::info!("selected {} of {}", sel.len(), fs.n());
    save_selection(&sel, &spath)?;
    outputs.push(index_list_path(&spath));
    outputs.push(spath);
    finish(m, &a.out, &outputs)
}

fn labels_or_clustering(path: &Path) -> Result<Vec<usize>> {
    let ctx = || format!("loading {}", path.display());
    if path.extension().is_some_and(|e| e == "json") {
        let c: Clustering<f64> = load_clustering(path).with_context(ctx)?;
        Ok(c.labels())
    } else {
        load_labels(path).with_context(ctx)
    }
}

fn print_json(v: &impl Serialize) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

fn eval(a: EvalArgs) -> Result<()> {
    let truth = labels_or_clustering(&a.truth)?;
    match a.mode {
        Mode::Ami => {
            let pred = a.pred.ok_or_else(|| usage("ami mode needs --pred"))?;
            let score = ami(&labels_or_clustering(&pred)?, &truth)?;
            print_json(&serde_json::json!({ "ami": score, "n": truth.len() }))
        }
        Mode::Seg => {
            let pred = a.pred.ok_or_else(|| usage("seg mode needs --pred"))?;
            let pred = labels_or_clustering(&pred)?;
            print_json(&segmentation_scores(&pred, &truth, a.classes.as_deref())?)
        }
        Mode::Balance => {
            let sp = a
                .selection
                .ok_or_else(|| usage("balance mode needs --selection"))?;
            let selected = if sp.extension().is_some_and(|e| e == "json") {
                load_selection(&sp)?.global
            } else {
                read_index_list(&sp)?
            };
            print_json(&balance_report(&selected, &truth)?)
        }
    }
}

fn bench(a: BenchArgs) -> Result<()> {
    let base = build_config(a.config.as_deref(), &a.overrides, None)?;
    if a.workers.contains(&0) {
        return Err(usage("--workers values must be positive"));
    }
    out_dir(&a.out)?;
    let mut m = RunManifest::new("bench", &base);
    let path = a.out.join("bench.csv");
    let mut rows = String::from("nc,ns,m,n,workers,ami,converged_at,iterations,clusters,seconds\n");
    let t_all = Instant::now();
    for &nc in &a.nc {
        for &ns in &a.ns {
            for &dims in &a.m {
                let spec = SyntheticSpec {
                    n_clusters: nc,
                    points_per_cluster: ns,
                    dims,
                    mu: a.mu,
                    center_scale: a.scale,
                    seed: a.seed,
                };
                spec.validate()?;
                let (fs, truth) = generate::<f64>(&spec)?;
                for &w in &a.workers {
                    let cfg = Config {
                        workers: w,
                        ..base.clone()
                    };
                    let t0 = Instant::now();
                    let (c, trace) = instsel::cluster(&fs, &cfg)?;
                    let secs = t0.elapsed().as_secs_f64();
                    let score = ami(&c.labels(), &truth)?;
                    let conv = trace
                        .converged_at
                        .map(|k| k.to_string())
                        .unwrap_or_default();
                    rows.push_str(&format!(
                        "{nc},{ns},{dims},{},{w},{score:.6},{conv},{},{},{secs:.4}\n",
                        fs.n(),
                        trace.records.len(),
                        c.len()
                    ));
                    log::info!(
                        "nc={nc} ns={ns} m={dims} workers={w}: ami {score:.4} in {secs:.2}s"
                    );
                }
            }
        }
    }
    m.time("bench", t_all.elapsed().as_secs_f64());
    fs::write(&path, rows)?;
    finish(m, &a.out, &[path])
}
