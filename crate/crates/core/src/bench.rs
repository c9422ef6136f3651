//! Benchmark harness: seeded reshuffles, cross-validated depth selection,
//! evaluation of every criterion and aggregation of the results.
//!
//! One grid cell is a `(dataset, criterion, seed)` triple. For each cell:
//!
//! 1. the pooled dataset is split into train/test with [`make_partition`],
//!    seeded from `(dataset, seed)` only, so every criterion sees the same
//!    split;
//! 2. the depth is chosen from the grid by stratified k-fold CV on the train
//!    side, minimising mean validation MAE (ties go to the smaller depth);
//! 3. a tree is grown on the whole train side at that depth and scored on the
//!    test side.
//!
//! Cells are independent and may run in parallel; outputs are always written
//! in grid order.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::criteria::{CriterionKind, CriterionSpec, ScoreMap};
use crate::dataset::{
    derive_seed, load_named, make_partition, stratified_kfold, Dataset, DatasetError, Manifest,
    OrdinalLabel,
};
use crate::metrics::{mae, ConfusionMatrix, EvalReport, MetricError};
use crate::tree::{DecisionTree, GrowConfig, TreeError};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{dataset}/{criterion}/seed {seed}: {source}")]
    Cell {
        dataset: String,
        criterion: CriterionKind,
        seed: u64,
        #[source]
        source: Box<BenchError>,
    },
    #[error("fold {fold} leaves no training patterns")]
    EmptyFold { fold: usize },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{0}: no runs to report")]
    NoRuns(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> BenchError + '_ {
    move |source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> BenchError + '_ {
    move |source| BenchError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// Settings shared by every grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Protocol {
    pub depth_grid: Vec<usize>,
    pub cv_folds: usize,
    pub min_samples_split: usize,
    /// Class scores used by MAE and QWK.
    pub scores: ScoreMap,
}

impl Default for Protocol {
    fn default() -> Self {
        Protocol {
            depth_grid: vec![3, 5, 8, 16],
            cv_folds: 5,
            min_samples_split: 2,
            scores: ScoreMap::Identity,
        }
    }
}

impl Protocol {
    pub fn validate(&self) -> Result<(), BenchError> {
        if self.depth_grid.is_empty() {
            return Err(BenchError::Config("depth grid is empty".into()));
        }
        if self.depth_grid[0] == 0 || self.depth_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(BenchError::Config(
                "depth grid must be positive and strictly increasing".into(),
            ));
        }
        if self.cv_folds < 2 {
            return Err(BenchError::Config("cv_folds must be at least 2".into()));
        }
        Ok(())
    }

    fn grow_config(&self, criterion: &CriterionSpec, max_depth: usize) -> GrowConfig {
        GrowConfig {
            criterion: criterion.clone(),
            max_depth,
            min_samples_split: self.min_samples_split,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DepthSelection {
    pub chosen_depth: usize,
    /// Mean validation MAE per grid depth; empty for a single-depth grid.
    pub cv_mae: Vec<f64>,
}

/// Picks the grid depth with the lowest mean k-fold validation MAE.
///
/// Folds are drawn once from `seed` and reused for every depth. Each fold
/// grows one tree at the largest grid depth; shallower candidates are
/// obtained by truncation, which matches growing them directly.
pub fn select_depth(
    ds: &Dataset,
    train_rows: &[usize],
    criterion: &CriterionSpec,
    protocol: &Protocol,
    seed: u64,
) -> Result<DepthSelection, BenchError> {
    protocol.validate()?;
    if protocol.depth_grid.len() == 1 {
        return Ok(DepthSelection {
            chosen_depth: protocol.depth_grid[0],
            cv_mae: Vec::new(),
        });
    }
    let labels: Vec<OrdinalLabel> = train_rows.iter().map(|&r| ds.label(r)).collect();
    let folds = stratified_kfold(train_rows, &labels, protocol.cv_folds, seed)?;
    let deepest = *protocol.depth_grid.last().unwrap();
    let config = protocol.grow_config(criterion, deepest);

    let mut totals = vec![0.0; protocol.depth_grid.len()];
    for (f, validation) in folds.iter().enumerate() {
        let fit_rows: Vec<usize> = folds
            .iter()
            .enumerate()
            .filter(|&(g, _)| g != f)
            .flat_map(|(_, fold)| fold.iter().copied())
            .collect();
        if fit_rows.is_empty() {
            return Err(BenchError::EmptyFold { fold: f });
        }
        let full = DecisionTree::fit(ds, &fit_rows, &config)?;
        let truth: Vec<OrdinalLabel> = validation.iter().map(|&r| ds.label(r)).collect();
        for (slot, &depth) in totals.iter_mut().zip(&protocol.depth_grid) {
            let tree = full.truncated(depth);
            let pred = validation
                .iter()
                .map(|&r| tree.predict(ds.row(r)))
                .collect::<Result<Vec<_>, _>>()?;
            *slot += mae(&truth, &pred, &protocol.scores)?;
        }
    }
    let cv_mae: Vec<f64> = totals.iter().map(|t| t / folds.len() as f64).collect();
    let mut best = 0;
    for (i, &m) in cv_mae.iter().enumerate() {
        if m < cv_mae[best] {
            best = i;
        }
    }
    Ok(DepthSelection {
        chosen_depth: protocol.depth_grid[best],
        cv_mae,
    })
}

/// One evaluated grid cell, as written to `runs.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub dataset: String,
    pub criterion: CriterionKind,
    pub seed: u64,
    pub chosen_depth: usize,
    pub mae: f64,
    pub qwk: f64,
    pub rps: f64,
    pub wall_time_s: f64,
    #[serde(skip)]
    pub confusion_path: Option<PathBuf>,
}

/// A [`RunRecord`] plus the data that does not go into `runs.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub record: RunRecord,
    pub confusion: ConfusionMatrix,
    pub degenerate_qwk: bool,
    pub partition_hash: String,
    pub cv_mae: Vec<f64>,
}

/// Runs one `(dataset, criterion, seed)` cell.
///
/// The train side has the dataset's original train size.
pub fn run_single(
    ds: &Dataset,
    criterion: &CriterionSpec,
    seed: u64,
    protocol: &Protocol,
) -> Result<RunOutcome, BenchError> {
    let wrap = |e: BenchError| BenchError::Cell {
        dataset: ds.name().to_string(),
        criterion: criterion.kind,
        seed,
        source: Box::new(e),
    };
    run_single_inner(ds, criterion, seed, protocol).map_err(wrap)
}

fn run_single_inner(
    ds: &Dataset,
    criterion: &CriterionSpec,
    seed: u64,
    protocol: &Protocol,
) -> Result<RunOutcome, BenchError> {
    let start = Instant::now();
    criterion
        .validate(ds.num_classes())
        .map_err(TreeError::from)?;
    let plan = make_partition(ds, ds.original_train_size(), seed)?;
    let cv_seed = derive_seed("cv", ds.name(), seed);
    let selection = select_depth(ds, &plan.train_indices, criterion, protocol, cv_seed)?;
    let config = protocol.grow_config(criterion, selection.chosen_depth);
    let tree = DecisionTree::fit(ds, &plan.train_indices, &config)?;

    let truth: Vec<OrdinalLabel> = plan.test_indices.iter().map(|&r| ds.label(r)).collect();
    let mut pred = Vec::with_capacity(truth.len());
    let mut probas = Vec::with_capacity(truth.len());
    for &r in &plan.test_indices {
        pred.push(tree.predict(ds.row(r))?);
        probas.push(tree.predict_proba(ds.row(r))?);
    }
    let report = EvalReport::compute(&truth, &pred, &probas, ds.num_classes(), &protocol.scores)?;
    Ok(RunOutcome {
        record: RunRecord {
            dataset: ds.name().to_string(),
            criterion: criterion.kind,
            seed,
            chosen_depth: selection.chosen_depth,
            mae: report.mae,
            qwk: report.qwk,
            rps: report.rps,
            wall_time_s: start.elapsed().as_secs_f64(),
            confusion_path: None,
        },
        confusion: report.confusion,
        degenerate_qwk: report.degenerate_qwk,
        partition_hash: plan.fingerprint(),
        cv_mae: selection.cv_mae,
    })
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub data_dir: PathBuf,
    pub manifest: Option<Manifest>,
    /// Dataset names; when empty, the manifest's names or every
    /// `<name>_train.csv` in `data_dir`.
    pub datasets: Vec<String>,
    pub criteria: Vec<CriterionSpec>,
    pub seeds: Vec<u64>,
    pub protocol: Protocol,
    pub output_dir: Option<PathBuf>,
    /// Worker threads; 0 uses the rayon default.
    pub workers: usize,
    pub fail_fast: bool,
}

impl ExperimentConfig {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        ExperimentConfig {
            data_dir: data_dir.into(),
            manifest: None,
            datasets: Vec::new(),
            criteria: CriterionKind::ALL
                .into_iter()
                .map(CriterionSpec::new)
                .collect(),
            seeds: (0..20).collect(),
            protocol: Protocol::default(),
            output_dir: None,
            workers: 0,
            fail_fast: false,
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        self.protocol.validate()?;
        if self.criteria.is_empty() {
            return Err(BenchError::Config("no criteria selected".into()));
        }
        if self.seeds.is_empty() {
            return Err(BenchError::Config("no seeds selected".into()));
        }
        let mut seeds = self.seeds.clone();
        seeds.sort_unstable();
        seeds.dedup();
        if seeds.len() != self.seeds.len() {
            return Err(BenchError::Config("seeds must be distinct".into()));
        }
        Ok(())
    }

    fn dataset_names(&self) -> Result<Vec<String>, BenchError> {
        if !self.datasets.is_empty() {
            return Ok(self.datasets.clone());
        }
        if let Some(m) = &self.manifest {
            return Ok(m.entries.iter().map(|e| e.name.clone()).collect());
        }
        let dir = &self.data_dir;
        let mut names = Vec::new();
        for entry in fs::read_dir(dir).map_err(io_err(dir))? {
            let entry = entry.map_err(io_err(dir))?;
            let file = entry.file_name().to_string_lossy().into_owned();
            if let Some(name) = file.strip_suffix("_train.csv") {
                names.push(name.to_string());
            }
        }
        names.sort();
        Ok(names)
    }
}

/// A grid cell (or a whole dataset, when loading failed) that produced an
/// error instead of a record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub dataset: String,
    pub criterion: Option<CriterionKind>,
    pub seed: Option<u64>,
    pub error: String,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub runs: Vec<RunOutcome>,
    pub summary: Vec<SummaryRow>,
    pub failures: Vec<CellFailure>,
    /// Number of classes per dataset, used for the summary scopes.
    pub num_classes: HashMap<String, usize>,
}

impl ExperimentOutput {
    pub fn records(&self) -> Vec<RunRecord> {
        self.runs.iter().map(|r| r.record.clone()).collect()
    }
}

/// Runs the full `dataset x criterion x seed` grid.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput, BenchError> {
    config.validate()?;
    let names = config.dataset_names()?;
    let mut failures = Vec::new();
    let mut datasets = Vec::new();
    let mut num_classes = HashMap::new();
    for name in names {
        let entry = config.manifest.as_ref().and_then(|m| m.get(&name));
        let loaded = load_named(&config.data_dir, &name, entry.map(|e| e.num_classes))
            .and_then(|ds| entry.map_or(Ok(()), |e| e.check(&ds)).map(|_| ds));
        match loaded {
            Ok(ds) => {
                num_classes.insert(name, entry.map_or(ds.num_classes(), |e| e.num_classes));
                datasets.push(ds);
            }
            Err(e) if config.fail_fast => return Err(e.into()),
            Err(e) => failures.push(CellFailure {
                dataset: name,
                criterion: None,
                seed: None,
                error: e.to_string(),
            }),
        }
    }

    let cells: Vec<(&Dataset, &CriterionSpec, u64)> = datasets
        .iter()
        .flat_map(|ds| {
            config
                .criteria
                .iter()
                .flat_map(move |c| config.seeds.iter().map(move |&s| (ds, c, s)))
        })
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| BenchError::Config(e.to_string()))?;
    let protocol = &config.protocol;
    let results: Vec<Result<RunOutcome, BenchError>> = pool.install(|| {
        if config.fail_fast {
            cells
                .par_iter()
                .map(|&(ds, c, s)| run_single(ds, c, s, protocol))
                .collect::<Result<Vec<_>, _>>()
                .map(|v| v.into_iter().map(Ok).collect())
        } else {
            Ok(cells
                .par_iter()
                .map(|&(ds, c, s)| run_single(ds, c, s, protocol))
                .collect())
        }
    })?;

    let mut runs = Vec::with_capacity(results.len());
    for (result, &(ds, c, s)) in results.into_iter().zip(&cells) {
        match result {
            Ok(outcome) => runs.push(outcome),
            Err(e) => failures.push(CellFailure {
                dataset: ds.name().to_string(),
                criterion: Some(c.kind),
                seed: Some(s),
                error: e.to_string(),
            }),
        }
    }

    let records: Vec<RunRecord> = runs.iter().map(|r| r.record.clone()).collect();
    let summary = summarize(&records, |name| num_classes.get(name).copied());
    let mut output = ExperimentOutput {
        runs,
        summary,
        failures,
        num_classes,
    };
    if let Some(dir) = &config.output_dir {
        write_outputs(dir, &mut output)?;
    }
    Ok(output)
}

fn write_outputs(dir: &Path, output: &mut ExperimentOutput) -> Result<(), BenchError> {
    let confusion_dir = dir.join("confusion");
    fs::create_dir_all(&confusion_dir).map_err(io_err(&confusion_dir))?;
    for run in &mut output.runs {
        let r = &run.record;
        let path = confusion_dir.join(format!("{}_{}_seed{}.csv", r.dataset, r.criterion, r.seed));
        fs::write(&path, run.confusion.to_csv()).map_err(io_err(&path))?;
        run.record.confusion_path = Some(path);
    }
    write_runs(&dir.join("runs.csv"), &output.records())?;
    write_summary(&dir.join("summary.csv"), &output.summary)?;

    let path = dir.join("errors.csv");
    let mut w = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
    w.write_record(["dataset", "criterion", "seed", "error"])
        .map_err(csv_err(&path))?;
    for f in &output.failures {
        let criterion = f.criterion.map(|c| c.to_string()).unwrap_or_default();
        let seed = f.seed.map(|s| s.to_string()).unwrap_or_default();
        w.write_record([f.dataset.as_str(), &criterion, &seed, &f.error])
            .map_err(csv_err(&path))?;
    }
    w.flush().map_err(io_err(&path))?;
    Ok(())
}

/// Writes `dataset,criterion,seed,chosen_depth,mae,qwk,rps,wall_time_s`.
pub fn write_runs(path: &Path, records: &[RunRecord]) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    if records.is_empty() {
        w.write_record(RUNS_HEADER).map_err(csv_err(path))?;
    }
    for r in records {
        w.serialize(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub const RUNS_HEADER: [&str; 8] = [
    "dataset",
    "criterion",
    "seed",
    "chosen_depth",
    "mae",
    "qwk",
    "rps",
    "wall_time_s",
];

pub fn read_runs(path: &Path) -> Result<Vec<RunRecord>, BenchError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    r.deserialize()
        .collect::<Result<Vec<RunRecord>, _>>()
        .map_err(csv_err(path))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scope {
    #[serde(rename = "all")]
    All,
    #[serde(rename = "q>=6")]
    ManyClasses,
    #[serde(rename = "q<6")]
    FewClasses,
}

impl Scope {
    /// Class count separating the two per-Q scopes.
    pub const CLASS_THRESHOLD: usize = 6;

    pub fn as_str(self) -> &'static str {
        match self {
            Scope::All => "all",
            Scope::ManyClasses => "q>=6",
            Scope::FewClasses => "q<6",
        }
    }

    fn includes(self, num_classes: Option<usize>) -> bool {
        match (self, num_classes) {
            (Scope::All, _) => true,
            (Scope::ManyClasses, Some(q)) => q >= Self::CLASS_THRESHOLD,
            (Scope::FewClasses, Some(q)) => q < Self::CLASS_THRESHOLD,
            (_, None) => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Mae,
    Qwk,
    Rps,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Mae, Metric::Qwk, Metric::Rps];

    pub fn of(self, r: &RunRecord) -> f64 {
        match self {
            Metric::Mae => r.mae,
            Metric::Qwk => r.qwk,
            Metric::Rps => r.rps,
        }
    }

    pub fn higher_is_better(self) -> bool {
        self == Metric::Qwk
    }

    pub fn label(self) -> &'static str {
        match self {
            Metric::Mae => "MAE",
            Metric::Qwk => "QWK",
            Metric::Rps => "RPS",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub scope: Scope,
    pub criterion: CriterionKind,
    pub metric: Metric,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Aggregates runs per scope, criterion and metric. Criteria keep their
/// first-appearance order; empty scopes are omitted.
pub fn summarize(
    records: &[RunRecord],
    num_classes: impl Fn(&str) -> Option<usize>,
) -> Vec<SummaryRow> {
    let mut criteria: Vec<CriterionKind> = Vec::new();
    for r in records {
        if !criteria.contains(&r.criterion) {
            criteria.push(r.criterion);
        }
    }
    let mut rows = Vec::new();
    for scope in [Scope::All, Scope::ManyClasses, Scope::FewClasses] {
        for &criterion in &criteria {
            let included: Vec<&RunRecord> = records
                .iter()
                .filter(|r| r.criterion == criterion && scope.includes(num_classes(&r.dataset)))
                .collect();
            if included.is_empty() {
                continue;
            }
            for metric in Metric::ALL {
                let values: Vec<f64> = included.iter().map(|r| metric.of(r)).collect();
                let (mean, std) = mean_std(&values);
                rows.push(SummaryRow {
                    scope,
                    criterion,
                    metric,
                    mean,
                    std,
                });
            }
        }
    }
    rows
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    if rows.is_empty() {
        w.write_record(["scope", "criterion", "metric", "mean", "std"])
            .map_err(csv_err(path))?;
    }
    for r in rows {
        w.serialize(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mark {
    Best,
    Second,
    None,
}

/// Summary rows annotated with best / second-best markers per scope and
/// metric. Equal means share a marker.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub rows: Vec<(SummaryRow, Mark)>,
}

impl Report {
    pub fn from_summary(summary: Vec<SummaryRow>) -> Self {
        let mut rows = Vec::with_capacity(summary.len());
        for row in &summary {
            let mut distinct: Vec<f64> = summary
                .iter()
                .filter(|o| o.scope == row.scope && o.metric == row.metric)
                .map(|o| o.mean)
                .collect();
            distinct.sort_by(f64::total_cmp);
            if row.metric.higher_is_better() {
                distinct.reverse();
            }
            distinct.dedup();
            let mark = if row.mean == distinct[0] {
                Mark::Best
            } else if distinct.get(1) == Some(&row.mean) {
                Mark::Second
            } else {
                Mark::None
            };
            rows.push((row.clone(), mark));
        }
        Report { rows }
    }

    pub fn mark(&self, scope: Scope, criterion: CriterionKind, metric: Metric) -> Option<Mark> {
        self.rows
            .iter()
            .find(|(r, _)| r.scope == scope && r.criterion == criterion && r.metric == metric)
            .map(|(_, m)| *m)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["scope", "criterion", "metric", "mean", "std", "mark"])
            .unwrap();
        for (r, m) in &self.rows {
            let mark = match m {
                Mark::Best => "best",
                Mark::Second => "second",
                Mark::None => "",
            };
            w.write_record([
                r.scope.as_str(),
                r.criterion.as_str(),
                r.metric.label(),
                &r.mean.to_string(),
                &r.std.to_string(),
                mark,
            ])
            .unwrap();
        }
        String::from_utf8(w.into_inner().unwrap()).unwrap()
    }

    /// Mean_STD table per scope; `**` marks the best value, `*` the second.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut scopes: Vec<Scope> = self.rows.iter().map(|(r, _)| r.scope).collect();
        scopes.dedup();
        for scope in scopes {
            writeln!(out, "scope: {}", scope.as_str()).unwrap();
            writeln!(
                out,
                "{:<10}{:>20}{:>20}{:>20}",
                "criterion", "MAE (min)", "QWK (max)", "RPS (min)"
            )
            .unwrap();
            let mut criteria: Vec<CriterionKind> = Vec::new();
            for (r, _) in self.rows.iter().filter(|(r, _)| r.scope == scope) {
                if !criteria.contains(&r.criterion) {
                    criteria.push(r.criterion);
                }
            }
            for c in criteria {
                write!(out, "{:<10}", c.as_str()).unwrap();
                for metric in Metric::ALL {
                    let cell = self
                        .rows
                        .iter()
                        .find(|(r, _)| r.scope == scope && r.criterion == c && r.metric == metric)
                        .map(|(r, m)| {
                            let tag = match m {
                                Mark::Best => "**",
                                Mark::Second => "*",
                                Mark::None => "",
                            };
                            format!("{:.3}_{:.3}{tag}", r.mean, r.std)
                        })
                        .unwrap_or_default();
                    write!(out, "{cell:>20}").unwrap();
                }
                out.push('\n');
            }
            out.push('\n');
        }
        out.push_str("** best, * second best\n");
        out
    }
}

/// Builds the report for a `runs.csv` file.
pub fn report(runs_path: &Path, manifest: Option<&Manifest>) -> Result<Report, BenchError> {
    let records = read_runs(runs_path)?;
    if records.is_empty() {
        return Err(BenchError::NoRuns(runs_path.display().to_string()));
    }
    let summary = summarize(&records, |name| {
        manifest.and_then(|m| m.get(name)).map(|e| e.num_classes)
    });
    Ok(Report::from_summary(summary))
}

/// Parses seed lists such as `0..19` (inclusive), `0..=19`, `1,4,9` or a mix.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>, BenchError> {
    let bad = || BenchError::Config(format!("cannot parse seeds `{text}`"));
    let mut seeds = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let b = b.strip_prefix('=').unwrap_or(b);
            let (a, b): (u64, u64) = (
                a.trim().parse().map_err(|_| bad())?,
                b.trim().parse().map_err(|_| bad())?,
            );
            if a > b {
                return Err(bad());
            }
            seeds.extend(a..=b);
        } else {
            seeds.push(part.parse().map_err(|_| bad())?);
        }
    }
    if seeds.is_empty() {
        return Err(bad());
    }
    Ok(seeds)
}

pub fn parse_list<T: std::str::FromStr>(text: &str) -> Result<Vec<T>, BenchError> {
    text.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.parse()
                .map_err(|_| BenchError::Config(format!("cannot parse `{p}`")))
        })
        .collect()
}

/// Peak resident set size of this process in kilobytes, where available.
pub fn peak_rss_kb() -> Option<u64> {
    let status = fs::read_to_string("/proc/self/status").ok()?;
    status
        .lines()
        .find_map(|l| l.strip_prefix("VmHWM:"))
        .and_then(|v| v.trim().trim_end_matches("kB").trim().parse().ok())
}
