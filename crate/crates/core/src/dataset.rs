//! Ordinal datasets: CSV loading, manifests, stratified partitions and folds.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::criteria::ClassHistogram;

#[derive(Debug, Error)]
pub enum DatasetError {
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
    #[error("{file}:{line}: expected {expected} columns, found {found}")]
    RowLength {
        file: String,
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("{file}:{line}: column {column} is not a finite number: `{value}`")]
    NonNumeric {
        file: String,
        line: u64,
        column: usize,
        value: String,
    },
    #[error("{file}:{line}: label `{value}` is not an integer class code")]
    InvalidLabel {
        file: String,
        line: u64,
        value: String,
    },
    #[error("{file}:{line}: label {label} out of range for {num_classes} classes")]
    LabelOutOfRange {
        file: String,
        line: u64,
        label: i64,
        num_classes: usize,
    },
    #[error("{file}: no data rows")]
    NoRows { file: String },
    #[error("dataset needs at least 2 classes, found {0}")]
    TooFewClasses(usize),
    #[error("feature matrix has {rows} rows but {labels} labels")]
    ShapeMismatch { rows: usize, labels: usize },
    #[error("row {row} has {found} features, expected {expected}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row} has a non-finite feature value")]
    NonFinite { row: usize },
    #[error("label index {label} out of range 1..={num_classes}")]
    BadLabelIndex { label: u32, num_classes: usize },
    #[error("train size {n_train} must be strictly between 0 and {n}")]
    InvalidTrainSize { n_train: usize, n: usize },
    #[error("class {class} has {pooled} patterns but none would be assigned to train")]
    EmptyTrainClass { class: u32, pooled: u64 },
    #[error("cannot make {k} folds from {n} patterns")]
    TooManyFolds { k: usize, n: usize },
    #[error("need at least 2 folds, got {0}")]
    TooFewFolds(usize),
    #[error("labels ({labels}) and indices ({indices}) differ in length")]
    FoldLabelMismatch { indices: usize, labels: usize },
    #[error("manifest: {0}")]
    ManifestJson(#[from] serde_json::Error),
    #[error("manifest has no entry for dataset `{0}`")]
    NotInManifest(String),
    #[error("dataset `{name}`: manifest says {field} = {expected}, data has {found}")]
    ManifestMismatch {
        name: String,
        field: &'static str,
        expected: String,
        found: String,
    },
}

/// A one-based ordinal class index. Ordering follows the class order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OrdinalLabel(u32);

impl OrdinalLabel {
    /// `None` for index 0.
    pub fn new(index: u32) -> Option<Self> {
        (index >= 1).then_some(OrdinalLabel(index))
    }

    pub fn from_zero_based(index: usize) -> Self {
        OrdinalLabel(index as u32 + 1)
    }

    pub fn index(self) -> u32 {
        self.0
    }

    pub fn zero_based(self) -> usize {
        (self.0 - 1) as usize
    }
}

impl fmt::Display for OrdinalLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Labelled patterns with real-valued features, stored row-major.
///
/// Loaded datasets pool the published train file followed by the test file;
/// the original split sizes are kept so that reshuffled partitions can
/// reproduce them.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    features: Vec<f64>,
    num_features: usize,
    labels: Vec<OrdinalLabel>,
    num_classes: usize,
    original_sizes: (usize, usize),
    label_codes: Vec<i64>,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        rows: Vec<Vec<f64>>,
        labels: Vec<OrdinalLabel>,
        num_classes: usize,
    ) -> Result<Self, DatasetError> {
        if rows.len() != labels.len() {
            return Err(DatasetError::ShapeMismatch {
                rows: rows.len(),
                labels: labels.len(),
            });
        }
        let num_features = rows.first().map_or(0, Vec::len);
        let mut features = Vec::with_capacity(rows.len() * num_features);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != num_features {
                return Err(DatasetError::RaggedRow {
                    row: i,
                    expected: num_features,
                    found: row.len(),
                });
            }
            features.extend(row);
        }
        Self::from_flat(name, features, num_features, labels, num_classes)
    }

    pub fn from_flat(
        name: impl Into<String>,
        features: Vec<f64>,
        num_features: usize,
        labels: Vec<OrdinalLabel>,
        num_classes: usize,
    ) -> Result<Self, DatasetError> {
        if num_classes < 2 {
            return Err(DatasetError::TooFewClasses(num_classes));
        }
        if features.len() != labels.len() * num_features {
            return Err(DatasetError::ShapeMismatch {
                rows: features.len() / num_features.max(1),
                labels: labels.len(),
            });
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(DatasetError::NonFinite {
                row: pos / num_features,
            });
        }
        if let Some(bad) = labels.iter().find(|l| l.zero_based() >= num_classes) {
            return Err(DatasetError::BadLabelIndex {
                label: bad.index(),
                num_classes,
            });
        }
        let n = labels.len();
        Ok(Dataset {
            name: name.into(),
            features,
            num_features,
            labels,
            num_classes,
            original_sizes: (n, 0),
            label_codes: (1..=num_classes as i64).collect(),
        })
    }

    /// Records the sizes of the published train/test files.
    pub fn with_original_split(mut self, n_train: usize, n_test: usize) -> Self {
        self.original_sizes = (n_train, n_test);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.num_features..(i + 1) * self.num_features]
    }

    #[inline]
    pub fn feature(&self, row: usize, feature: usize) -> f64 {
        self.features[row * self.num_features + feature]
    }

    pub fn labels(&self) -> &[OrdinalLabel] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> OrdinalLabel {
        self.labels[i]
    }

    /// Train size of the original files.
    pub fn original_train_size(&self) -> usize {
        self.original_sizes.0
    }

    pub fn original_test_size(&self) -> usize {
        self.original_sizes.1
    }

    /// File label code for each class, in class order.
    pub fn label_codes(&self) -> &[i64] {
        &self.label_codes
    }

    pub fn histogram(&self) -> ClassHistogram {
        self.histogram_of(0..self.len())
    }

    pub fn histogram_of<I: IntoIterator<Item = usize>>(&self, rows: I) -> ClassHistogram {
        ClassHistogram::from_class_indices(
            self.num_classes,
            rows.into_iter().map(|i| self.labels[i].zero_based()),
        )
    }

    /// Most represented class count over least represented (present) class.
    pub fn imbalance_ratio(&self) -> f64 {
        let h = self.histogram();
        let present = h.counts().iter().copied().filter(|&c| c > 0);
        let max = present.clone().max().unwrap_or(0);
        let min = present.min().unwrap_or(0);
        if min == 0 {
            return f64::NAN;
        }
        max as f64 / min as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HeaderMode {
    /// Treat the first row as a header when any cell is non-numeric.
    #[default]
    Auto,
    Present,
    Absent,
}

/// Format options for [`load_dataset`].
#[derive(Debug, Clone, Default)]
pub struct CsvSchema {
    pub header: HeaderMode,
    /// Declared number of classes. When absent, every distinct label code
    /// becomes a class.
    pub num_classes: Option<usize>,
    pub name: Option<String>,
}

struct RawRow {
    line: u64,
    features: Vec<f64>,
    label_code: i64,
}

struct RawFile {
    display: String,
    rows: Vec<RawRow>,
}

fn is_numeric(cell: &str) -> bool {
    cell.trim().parse::<f64>().is_ok()
}

fn parse_label(cell: &str) -> Option<i64> {
    let cell = cell.trim();
    if let Ok(v) = cell.parse::<i64>() {
        return Some(v);
    }
    let v: f64 = cell.parse().ok()?;
    (v.is_finite() && v.fract() == 0.0 && v.abs() < 1e15).then_some(v as i64)
}

fn read_raw(
    path: &Path,
    header: HeaderMode,
    width: &mut Option<usize>,
) -> Result<RawFile, DatasetError> {
    let display = path
        .file_name()
        .map(|f| f.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    let text = fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    let mut first = true;
    for record in reader.records() {
        let record = record.map_err(|source| DatasetError::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(|c| c.is_empty()) {
            continue;
        }
        if first {
            first = false;
            let skip = match header {
                HeaderMode::Present => true,
                HeaderMode::Absent => false,
                HeaderMode::Auto => !record.iter().all(is_numeric),
            };
            if skip {
                continue;
            }
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected || expected < 2 {
            return Err(DatasetError::RowLength {
                file: display,
                line,
                expected: expected.max(2),
                found: record.len(),
            });
        }
        let mut features = Vec::with_capacity(expected - 1);
        for (column, cell) in record.iter().take(expected - 1).enumerate() {
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => features.push(v),
                _ => {
                    return Err(DatasetError::NonNumeric {
                        file: display,
                        line,
                        column: column + 1,
                        value: cell.to_string(),
                    })
                }
            }
        }
        let label_cell = &record[expected - 1];
        let label_code = parse_label(label_cell).ok_or_else(|| DatasetError::InvalidLabel {
            file: display.clone(),
            line,
            value: label_cell.to_string(),
        })?;
        rows.push(RawRow {
            line,
            features,
            label_code,
        });
    }
    if rows.is_empty() {
        return Err(DatasetError::NoRows { file: display });
    }
    Ok(RawFile { display, rows })
}

type CodeMap = Box<dyn Fn(i64) -> Option<usize>>;

/// Loads and pools a train/test CSV pair.
///
/// Rows are K numeric feature columns followed by an integer label code.
/// Label codes are mapped to classes `1..=Q` preserving their order: with a
/// declared `Q`, codes are read as 0-based when any code is 0 and 1-based
/// otherwise; without one, the distinct codes are ranked.
pub fn load_dataset(
    train_path: impl AsRef<Path>,
    test_path: impl AsRef<Path>,
    schema: &CsvSchema,
) -> Result<Dataset, DatasetError> {
    let train_path = train_path.as_ref();
    let mut width = None;
    let train = read_raw(train_path, schema.header, &mut width)?;
    let test = read_raw(test_path.as_ref(), schema.header, &mut width)?;

    let all_rows = || {
        train
            .rows
            .iter()
            .map(|r| (&train.display, r))
            .chain(test.rows.iter().map(|r| (&test.display, r)))
    };

    let (num_classes, label_codes, to_class): (usize, Vec<i64>, CodeMap) = match schema.num_classes
    {
        Some(q) => {
            let offset = if all_rows().any(|(_, r)| r.label_code == 0) {
                0
            } else {
                1
            };
            let codes = (0..q as i64).map(|c| c + offset).collect();
            (
                q,
                codes,
                Box::new(move |code| {
                    let idx = code - offset;
                    (0..q as i64).contains(&idx).then_some(idx as usize)
                }),
            )
        }
        None => {
            let mut codes: Vec<i64> = all_rows().map(|(_, r)| r.label_code).collect();
            codes.sort_unstable();
            codes.dedup();
            let lookup = codes.clone();
            (
                codes.len(),
                codes,
                Box::new(move |code| lookup.binary_search(&code).ok()),
            )
        }
    };

    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (file, row) in all_rows() {
        let class = to_class(row.label_code).ok_or_else(|| DatasetError::LabelOutOfRange {
            file: file.clone(),
            line: row.line,
            label: row.label_code,
            num_classes,
        })?;
        features.extend_from_slice(&row.features);
        labels.push(OrdinalLabel::from_zero_based(class));
    }

    let distinct = {
        let mut seen: Vec<_> = labels.clone();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    };
    if distinct < 2 || num_classes < 2 {
        return Err(DatasetError::TooFewClasses(distinct.min(num_classes)));
    }

    let name = schema
        .name
        .clone()
        .unwrap_or_else(|| dataset_name_from_path(train_path));
    let num_features = width.unwrap_or(1) - 1;
    let mut ds = Dataset::from_flat(name, features, num_features, labels, num_classes)?
        .with_original_split(train.rows.len(), test.rows.len());
    ds.label_codes = label_codes;
    Ok(ds)
}

fn dataset_name_from_path(path: &Path) -> String {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    stem.strip_suffix("_train").unwrap_or(&stem).to_string()
}

/// Loads `<dir>/<name>_train.csv` and `<dir>/<name>_test.csv`.
pub fn load_named(
    dir: impl AsRef<Path>,
    name: &str,
    num_classes: Option<usize>,
) -> Result<Dataset, DatasetError> {
    let dir = dir.as_ref();
    let schema = CsvSchema {
        num_classes,
        name: Some(name.to_string()),
        ..CsvSchema::default()
    };
    load_dataset(
        dir.join(format!("{name}_train.csv")),
        dir.join(format!("{name}_test.csv")),
        &schema,
    )
}

/// Summary characteristics of one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub n_train: usize,
    pub n_test: usize,
    #[serde(rename = "Q")]
    pub num_classes: usize,
    #[serde(rename = "K")]
    pub num_features: usize,
    pub imbalance_ratio: f64,
}

impl ManifestEntry {
    pub fn describe(ds: &Dataset) -> Self {
        ManifestEntry {
            name: ds.name().to_string(),
            n_train: ds.original_train_size(),
            n_test: ds.original_test_size(),
            num_classes: ds.num_classes(),
            num_features: ds.num_features(),
            imbalance_ratio: ds.imbalance_ratio(),
        }
    }

    /// Compares against loaded data. The imbalance ratio is checked to the
    /// three decimals manifests are usually published with.
    pub fn check(&self, ds: &Dataset) -> Result<(), DatasetError> {
        let mismatch = |field, expected: String, found: String| DatasetError::ManifestMismatch {
            name: self.name.clone(),
            field,
            expected,
            found,
        };
        let ints = [
            ("n_train", self.n_train, ds.original_train_size()),
            ("n_test", self.n_test, ds.original_test_size()),
            ("Q", self.num_classes, ds.num_classes()),
            ("K", self.num_features, ds.num_features()),
        ];
        for (field, expected, found) in ints {
            if expected != found {
                return Err(mismatch(field, expected.to_string(), found.to_string()));
            }
        }
        let ir = ds.imbalance_ratio();
        let close = (ir - self.imbalance_ratio).abs() <= 5e-4 + 1e-9;
        if !close {
            return Err(mismatch(
                "imbalance_ratio",
                format!("{:.3}", self.imbalance_ratio),
                format!("{ir:.3}"),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn from_json(text: &str) -> Result<Self, DatasetError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, DatasetError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| DatasetError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn get(&self, name: &str) -> Option<&ManifestEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn validate(&self, ds: &Dataset) -> Result<(), DatasetError> {
        self.get(ds.name())
            .ok_or_else(|| DatasetError::NotInManifest(ds.name().to_string()))?
            .check(ds)
    }
}

/// Characteristics of the 45-dataset ordinal benchmark archive.
pub fn archive_manifest() -> Manifest {
    Manifest::from_json(include_str!("../data/archive_manifest.json"))
        .expect("bundled manifest is valid")
}

/// Derives a 64-bit seed for one named random stream.
///
/// All randomness in the crate goes through this, so results depend only on
/// `(stream, name, seed)`.
pub fn derive_seed(stream: &str, name: &str, seed: u64) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(stream.as_bytes());
    hasher.update([0]);
    hasher.update(name.as_bytes());
    hasher.update([0]);
    hasher.update(seed.to_le_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

/// One seeded train/test split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionPlan {
    pub seed: u64,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    /// Singleton classes forced into train.
    pub warnings: Vec<String>,
}

impl PartitionPlan {
    /// Hex SHA-256 of the index lists.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for list in [&self.train_indices, &self.test_indices] {
            hasher.update((list.len() as u64).to_le_bytes());
            for &i in list.iter() {
                hasher.update((i as u64).to_le_bytes());
            }
        }
        hex::encode(hasher.finalize())
    }
}

/// Draws a stratified train/test split of `n_train` patterns.
///
/// Each class contributes the floor or ceiling of its proportional share
/// (largest remainder, ties to the lower class). A class with a single
/// pattern is always placed in train and produces a warning.
pub fn make_partition(
    ds: &Dataset,
    n_train: usize,
    seed: u64,
) -> Result<PartitionPlan, DatasetError> {
    let n = ds.len();
    if n_train == 0 || n_train >= n {
        return Err(DatasetError::InvalidTrainSize { n_train, n });
    }
    let hist = ds.histogram();
    let counts = hist.counts();
    let mut alloc = largest_remainder(counts, n_train as u64, n as u64);

    let mut warnings = Vec::new();
    for (q, &c) in counts.iter().enumerate() {
        if c == 1 && alloc[q] == 0 {
            alloc[q] = 1;
            warnings.push(format!(
                "class {} has a single pattern; assigned to train",
                q + 1
            ));
        }
    }
    let mut excess = alloc.iter().sum::<u64>() - n_train as u64;
    while excess > 0 {
        // take back from the class furthest above its proportional share
        let surplus = |q: usize| alloc[q] as i128 * n as i128 - counts[q] as i128 * n_train as i128;
        let q = (0..counts.len())
            .filter(|&q| alloc[q] > 1)
            .max_by(|&a, &b| surplus(a).cmp(&surplus(b)).then(b.cmp(&a)))
            .ok_or(DatasetError::InvalidTrainSize { n_train, n })?;
        alloc[q] -= 1;
        excess -= 1;
    }
    for (q, &c) in counts.iter().enumerate() {
        if c >= 2 && alloc[q] == 0 {
            return Err(DatasetError::EmptyTrainClass {
                class: q as u32 + 1,
                pooled: c,
            });
        }
    }

    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); ds.num_classes()];
    for (i, l) in ds.labels().iter().enumerate() {
        by_class[l.zero_based()].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed("partition", ds.name(), seed));
    let mut train = Vec::with_capacity(n_train);
    let mut test = Vec::with_capacity(n - n_train);
    for (members, &take) in by_class.iter_mut().zip(&alloc) {
        members.shuffle(&mut rng);
        let (a, b) = members.split_at(take as usize);
        train.extend_from_slice(a);
        test.extend_from_slice(b);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(PartitionPlan {
        seed,
        train_indices: train,
        test_indices: test,
        warnings,
    })
}

/// Floor of each `count * take / total`, topped up by largest remainder.
fn largest_remainder(counts: &[u64], take: u64, total: u64) -> Vec<u64> {
    let mut alloc: Vec<u64> = counts.iter().map(|&c| c * take / total).collect();
    let assigned: u64 = alloc.iter().sum();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by_key(|&q| (std::cmp::Reverse(counts[q] * take % total), q));
    for &q in order.iter().take((take - assigned) as usize) {
        alloc[q] += 1;
    }
    alloc
}

/// Splits `indices` into `k` stratified folds.
///
/// `labels[i]` is the label of `indices[i]`. Within each class the members are
/// shuffled and dealt round-robin, continuing across classes, so fold sizes
/// and per-class fold counts each differ by at most one.
pub fn stratified_kfold(
    indices: &[usize],
    labels: &[OrdinalLabel],
    k: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>, DatasetError> {
    if k < 2 {
        return Err(DatasetError::TooFewFolds(k));
    }
    if indices.len() != labels.len() {
        return Err(DatasetError::FoldLabelMismatch {
            indices: indices.len(),
            labels: labels.len(),
        });
    }
    if k > indices.len() {
        return Err(DatasetError::TooManyFolds {
            k,
            n: indices.len(),
        });
    }
    let mut by_class: BTreeMap<OrdinalLabel, Vec<usize>> = BTreeMap::new();
    for (&idx, &label) in indices.iter().zip(labels) {
        by_class.entry(label).or_default().push(idx);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::with_capacity(indices.len() / k + 1); k];
    let mut next = 0;
    for members in by_class.values_mut() {
        members.shuffle(&mut rng);
        for &idx in members.iter() {
            folds[next % k].push(idx);
            next += 1;
        }
    }
    for fold in &mut folds {
        fold.sort_unstable();
    }
    Ok(folds)
}
