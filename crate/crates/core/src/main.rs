use std::io::{self, Write};
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use ordtree::bench::{self, ExperimentConfig, Protocol};
use ordtree::criteria::{CriterionKind, CriterionSpec};
use ordtree::dataset::{self, make_partition, Manifest, OrdinalLabel};
use ordtree::metrics::EvalReport;
use ordtree::tree::{DecisionTree, GrowConfig};

#[derive(Parser)]
#[command(
    name = "ordtree",
    version,
    about = "Ordinal decision trees and their benchmark harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the dataset x criterion x seed grid and write runs/summary CSVs.
    Run(RunArgs),
    /// Summarise a runs.csv as Mean_STD tables.
    Report(ReportArgs),
    /// Train one tree on a seeded train partition and save it as JSON.
    Train(TrainArgs),
    /// Predict classes for the rows of a CSV file.
    Predict(PredictArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    data_dir: PathBuf,
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Comma-separated dataset names; defaults to the manifest or the data dir.
    #[arg(long)]
    datasets: Option<String>,
    #[arg(long, default_value = "gini,ig,ogini,wig,ri")]
    criteria: String,
    #[arg(long, default_value = "0..19")]
    seeds: String,
    #[arg(long, default_value = "3,5,8,16")]
    depth_grid: String,
    #[arg(long, default_value_t = 5)]
    cv_folds: usize,
    #[arg(long)]
    out: PathBuf,
    /// Worker threads (0 = all cores). ORDTREE_WORKERS takes precedence.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long)]
    fail_fast: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Csv,
}

#[derive(clap::Args)]
struct ReportArgs {
    #[arg(long)]
    runs: PathBuf,
    /// Enables the q>=6 / q<6 scopes.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(clap::Args)]
struct TrainArgs {
    #[arg(long, default_value = ".")]
    data_dir: PathBuf,
    #[arg(long)]
    dataset: String,
    #[arg(long)]
    criterion: CriterionKind,
    #[arg(long)]
    depth: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    save_tree: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(clap::Args)]
struct PredictArgs {
    #[arg(long)]
    tree: PathBuf,
    /// CSV with K feature columns, optionally followed by a label column.
    #[arg(long)]
    input: PathBuf,
    /// Print class probabilities instead of class indices.
    #[arg(long)]
    proba: bool,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::Report(args) => report(args),
        Command::Train(args) => train(args),
        Command::Predict(args) => predict(args),
    }
}

fn workers(flag: usize) -> Result<usize> {
    match std::env::var("ORDTREE_WORKERS") {
        Ok(v) => v
            .trim()
            .parse()
            .with_context(|| format!("ORDTREE_WORKERS={v} is not a count")),
        Err(_) => Ok(flag),
    }
}

fn load_manifest(path: Option<&PathBuf>) -> Result<Option<Manifest>> {
    path.map(|p| Manifest::load(p).with_context(|| format!("reading manifest {}", p.display())))
        .transpose()
}

fn run(args: RunArgs) -> Result<()> {
    let kinds: Vec<CriterionKind> = bench::parse_list(&args.criteria)?;
    let config = ExperimentConfig {
        data_dir: args.data_dir,
        manifest: load_manifest(args.manifest.as_ref())?,
        datasets: args
            .datasets
            .as_deref()
            .map(bench::parse_list)
            .transpose()?
            .unwrap_or_default(),
        criteria: kinds
            .into_iter()
            .map(|k| CriterionSpec::new(k).with_alpha(args.alpha))
            .collect(),
        seeds: bench::parse_seeds(&args.seeds)?,
        protocol: Protocol {
            depth_grid: bench::parse_list(&args.depth_grid)?,
            cv_folds: args.cv_folds,
            ..Protocol::default()
        },
        output_dir: Some(args.out.clone()),
        workers: workers(args.workers)?,
        fail_fast: args.fail_fast,
    };
    std::fs::create_dir_all(&args.out)?;
    let start = Instant::now();
    let output = bench::run_experiment(&config)?;
    eprintln!(
        "{} runs, {} failures in {:.1}s (peak RSS {} kB); results in {}",
        output.runs.len(),
        output.failures.len(),
        start.elapsed().as_secs_f64(),
        bench::peak_rss_kb().map_or("n/a".to_string(), |k| k.to_string()),
        args.out.display()
    );
    for f in &output.failures {
        eprintln!("error: {}: {}", f.dataset, f.error);
    }
    print!("{}", bench::Report::from_summary(output.summary).to_text());
    Ok(())
}

fn report(args: ReportArgs) -> Result<()> {
    let manifest = load_manifest(args.manifest.as_ref())?;
    let report = bench::report(&args.runs, manifest.as_ref())?;
    match args.format {
        Format::Text => print!("{}", report.to_text()),
        Format::Csv => print!("{}", report.to_csv()),
    }
    Ok(())
}

fn train(args: TrainArgs) -> Result<()> {
    let manifest = load_manifest(args.manifest.as_ref())?;
    let declared = manifest
        .as_ref()
        .and_then(|m| m.get(&args.dataset))
        .map(|e| e.num_classes);
    let ds = dataset::load_named(&args.data_dir, &args.dataset, declared)?;
    let plan = make_partition(&ds, ds.original_train_size(), args.seed)?;
    let config = GrowConfig::new(
        CriterionSpec::new(args.criterion).with_alpha(args.alpha),
        args.depth,
    );
    let tree = DecisionTree::fit(&ds, &plan.train_indices, &config)?;
    tree.save(&args.save_tree)?;

    let truth: Vec<OrdinalLabel> = plan.test_indices.iter().map(|&r| ds.label(r)).collect();
    let pred = plan
        .test_indices
        .iter()
        .map(|&r| tree.predict(ds.row(r)))
        .collect::<Result<Vec<_>, _>>()?;
    let probas = plan
        .test_indices
        .iter()
        .map(|&r| tree.predict_proba(ds.row(r)))
        .collect::<Result<Vec<_>, _>>()?;
    let eval = EvalReport::compute(
        &truth,
        &pred,
        &probas,
        ds.num_classes(),
        &config.criterion.scores,
    )?;
    println!(
        "{} {} depth={} leaves={} test: mae={:.4} qwk={:.4} rps={:.4}",
        ds.name(),
        args.criterion,
        tree.depth(),
        tree.leaf_count(),
        eval.mae,
        eval.qwk,
        eval.rps
    );
    Ok(())
}

fn predict(args: PredictArgs) -> Result<()> {
    let tree = DecisionTree::load(&args.tree)?;
    let k = tree.num_features;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let mut first = true;
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let header = first && record.iter().any(|c| c.parse::<f64>().is_err());
        first = false;
        if header {
            continue;
        }
        if record.len() != k && record.len() != k + 1 {
            bail!(
                "{}:{line}: expected {k} or {} columns, found {}",
                args.input.display(),
                k + 1,
                record.len()
            );
        }
        let x = record
            .iter()
            .take(k)
            .map(|c| c.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .with_context(|| format!("{}:{line}: non-numeric feature", args.input.display()))?;
        if args.proba {
            let p = tree.predict_proba(&x)?;
            let cells: Vec<String> = p.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", cells.join(","))?;
        } else {
            writeln!(out, "{}", tree.predict(&x)?)?;
        }
    }
    Ok(())
}
