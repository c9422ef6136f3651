//! Impurity measures and the splitting criteria built on them.
//!
//! Every criterion has the same shape: an impurity `I` evaluated on the class
//! histogram of a node, and a gain
//!
//! ```text
//! gain = I(parent) - (p_left * I(left) + p_right * I(right))
//! ```
//!
//! where `p_left`/`p_right` are the fractions of the parent's patterns routed
//! to each child. The five criteria differ only in `I`:
//!
//! | criterion | impurity                  | uses class scores |
//! |-----------|---------------------------|-------------------|
//! | Gini      | `1 - sum p_q^2`           | no                |
//! | IG        | `-sum p_q log2 p_q`       | no                |
//! | OGini     | `sum c_q (1 - c_q)`       | no                |
//! | WIG       | `-sum w_q p_q log2 p_q`   | yes               |
//! | RI        | `sum_{j<=q} b(q,j) N_q N_j` | yes             |
//!
//! `c_q` is the cumulative relative frequency and `w_q` weights a class by its
//! score distance from the node's mode class.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CriterionError {
    #[error("impurity of an empty histogram is undefined")]
    EmptyHistogram,
    #[error("histograms have different class counts ({0} vs {1})")]
    ClassCountMismatch(usize, usize),
    #[error("parent histogram is not the sum of its children")]
    HistogramMismatch,
    #[error("split has an empty child")]
    EmptyChild,
    #[error("at least two classes are required, got {0}")]
    TooFewClasses(usize),
    #[error("alpha must be a positive finite number, got {0}")]
    InvalidAlpha(f64),
    #[error("score map must be strictly increasing and finite")]
    ScoresNotIncreasing,
    #[error("score map covers {have} classes but {need} are required")]
    ScoresTooShort { have: usize, need: usize },
    #[error("beta matrix must be at least {need}x{need}")]
    BetaTooSmall { need: usize },
    #[error("unknown criterion `{0}` (expected one of gini, ig, ogini, wig, ri)")]
    UnknownCriterion(String),
}

/// Per-class pattern counts at a node.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "Vec<u64>", into = "Vec<u64>")]
pub struct ClassHistogram {
    counts: Vec<u64>,
    total: u64,
}

impl ClassHistogram {
    /// An all-zero histogram over `num_classes` classes.
    pub fn zeros(num_classes: usize) -> Self {
        ClassHistogram {
            counts: vec![0; num_classes],
            total: 0,
        }
    }

    pub fn from_counts(counts: impl Into<Vec<u64>>) -> Self {
        let counts = counts.into();
        let total = counts.iter().sum();
        ClassHistogram { counts, total }
    }

    /// Counts zero-based class indices.
    pub fn from_class_indices<I>(num_classes: usize, indices: I) -> Self
    where
        I: IntoIterator<Item = usize>,
    {
        let mut h = Self::zeros(num_classes);
        for idx in indices {
            h.increment(idx);
        }
        h
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn num_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn increment(&mut self, class_index: usize) {
        self.counts[class_index] += 1;
        self.total += 1;
    }

    pub fn decrement(&mut self, class_index: usize) {
        self.counts[class_index] -= 1;
        self.total -= 1;
    }

    /// `N_q / N`; `None` for an empty histogram.
    pub fn relative_frequency(&self, class_index: usize) -> Option<f64> {
        (self.total > 0).then(|| self.counts[class_index] as f64 / self.total as f64)
    }

    pub fn relative_frequencies(&self) -> Option<Vec<f64>> {
        if self.total == 0 {
            return None;
        }
        let n = self.total as f64;
        Some(self.counts.iter().map(|&c| c as f64 / n).collect())
    }

    /// Running sums of the relative frequencies. The last entry is exactly 1.
    pub fn cumulative_frequencies(&self) -> Option<Vec<f64>> {
        if self.total == 0 {
            return None;
        }
        let n = self.total as f64;
        let mut running = 0u64;
        Some(
            self.counts
                .iter()
                .map(|&c| {
                    running += c;
                    running as f64 / n
                })
                .collect(),
        )
    }

    /// Zero-based index of the most populated class; ties go to the lowest index.
    pub fn mode(&self) -> usize {
        let mut best = 0;
        for (i, &c) in self.counts.iter().enumerate() {
            if c > self.counts[best] {
                best = i;
            }
        }
        best
    }

    /// Number of classes with a non-zero count.
    pub fn occupied_classes(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    pub fn is_pure(&self) -> bool {
        self.occupied_classes() <= 1
    }

    /// Elementwise sum; `None` when the class counts differ.
    pub fn checked_add(&self, other: &ClassHistogram) -> Option<ClassHistogram> {
        if self.counts.len() != other.counts.len() {
            return None;
        }
        Some(ClassHistogram::from_counts(
            self.counts
                .iter()
                .zip(&other.counts)
                .map(|(a, b)| a + b)
                .collect::<Vec<_>>(),
        ))
    }

    /// Multiplies every count by `factor`.
    pub fn scaled(&self, factor: u64) -> ClassHistogram {
        ClassHistogram::from_counts(self.counts.iter().map(|c| c * factor).collect::<Vec<_>>())
    }
}

impl From<Vec<u64>> for ClassHistogram {
    fn from(counts: Vec<u64>) -> Self {
        ClassHistogram::from_counts(counts)
    }
}

impl From<ClassHistogram> for Vec<u64> {
    fn from(h: ClassHistogram) -> Self {
        h.counts
    }
}

/// Strictly increasing numeric scores assigned to the ordered classes.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreMap {
    /// `v(C_q) = q` with one-based `q`.
    #[default]
    Identity,
    Custom(Vec<f64>),
}

impl ScoreMap {
    pub fn custom(scores: Vec<f64>) -> Result<Self, CriterionError> {
        let increasing =
            scores.iter().all(|s| s.is_finite()) && scores.windows(2).all(|w| w[0] < w[1]);
        if !increasing {
            return Err(CriterionError::ScoresNotIncreasing);
        }
        Ok(ScoreMap::Custom(scores))
    }

    /// Score of the zero-based class index.
    #[inline]
    pub fn score(&self, class_index: usize) -> f64 {
        match self {
            ScoreMap::Identity => (class_index + 1) as f64,
            ScoreMap::Custom(s) => s[class_index],
        }
    }

    pub fn check_covers(&self, num_classes: usize) -> Result<(), CriterionError> {
        match self {
            ScoreMap::Identity => Ok(()),
            ScoreMap::Custom(s) if s.len() >= num_classes => Ok(()),
            ScoreMap::Custom(s) => Err(CriterionError::ScoresTooShort {
                have: s.len(),
                need: num_classes,
            }),
        }
    }
}

/// Pair weighting used by the ranking impurity.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Beta {
    /// `b(C_q, C_j) = v(C_q) - v(C_j)`.
    #[default]
    ScoreDifference,
    /// Explicit matrix indexed `[q][j]` by zero-based class index.
    Matrix(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CriterionKind {
    Gini,
    Ig,
    OGini,
    Wig,
    Ri,
}

impl CriterionKind {
    pub const ALL: [CriterionKind; 5] = [
        CriterionKind::Gini,
        CriterionKind::Ig,
        CriterionKind::OGini,
        CriterionKind::Wig,
        CriterionKind::Ri,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CriterionKind::Gini => "gini",
            CriterionKind::Ig => "ig",
            CriterionKind::OGini => "ogini",
            CriterionKind::Wig => "wig",
            CriterionKind::Ri => "ri",
        }
    }

    /// Gini, IG and OGini ignore the score map.
    pub fn is_score_free(self) -> bool {
        matches!(
            self,
            CriterionKind::Gini | CriterionKind::Ig | CriterionKind::OGini
        )
    }
}

impl fmt::Display for CriterionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CriterionKind {
    type Err = CriterionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gini" => Ok(CriterionKind::Gini),
            "ig" | "entropy" => Ok(CriterionKind::Ig),
            "ogini" => Ok(CriterionKind::OGini),
            "wig" => Ok(CriterionKind::Wig),
            "ri" => Ok(CriterionKind::Ri),
            _ => Err(CriterionError::UnknownCriterion(s.to_string())),
        }
    }
}

/// A splitting criterion together with its hyperparameters.
///
/// `alpha` only affects WIG; `scores` only affects WIG and RI; `beta` only RI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionSpec {
    pub kind: CriterionKind,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub scores: ScoreMap,
    #[serde(default)]
    pub beta: Beta,
}

fn default_alpha() -> f64 {
    1.0
}

impl CriterionSpec {
    pub fn new(kind: CriterionKind) -> Self {
        CriterionSpec {
            kind,
            alpha: default_alpha(),
            scores: ScoreMap::Identity,
            beta: Beta::ScoreDifference,
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_scores(mut self, scores: ScoreMap) -> Self {
        self.scores = scores;
        self
    }

    pub fn with_beta(mut self, beta: Beta) -> Self {
        self.beta = beta;
        self
    }

    pub fn beta_is_default(&self) -> bool {
        self.beta == Beta::ScoreDifference
    }

    /// Checks the hyperparameters against a problem with `num_classes` classes.
    pub fn validate(&self, num_classes: usize) -> Result<(), CriterionError> {
        if num_classes < 2 {
            return Err(CriterionError::TooFewClasses(num_classes));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(CriterionError::InvalidAlpha(self.alpha));
        }
        if let ScoreMap::Custom(s) = &self.scores {
            ScoreMap::custom(s.clone())?;
        }
        self.scores.check_covers(num_classes)?;
        if let Beta::Matrix(m) = &self.beta {
            if m.len() < num_classes || m.iter().any(|row| row.len() < num_classes) {
                return Err(CriterionError::BetaTooSmall { need: num_classes });
            }
        }
        Ok(())
    }

    #[inline]
    fn beta(&self, q: usize, j: usize) -> f64 {
        match &self.beta {
            Beta::ScoreDifference => self.scores.score(q) - self.scores.score(j),
            Beta::Matrix(m) => m[q][j],
        }
    }

    /// Impurity of `h` under this criterion.
    pub fn impurity(&self, h: &ClassHistogram) -> Result<f64, CriterionError> {
        match self.kind {
            CriterionKind::Gini => impurity_gini(h),
            CriterionKind::Ig => impurity_entropy(h),
            CriterionKind::OGini => impurity_ogini(h),
            CriterionKind::Wig => impurity_weighted_entropy(h, self),
            CriterionKind::Ri => Ok(impurity_ranking(h, self)),
        }
    }
}

impl Default for CriterionSpec {
    fn default() -> Self {
        CriterionSpec::new(CriterionKind::Gini)
    }
}

fn require_nonempty(h: &ClassHistogram) -> Result<f64, CriterionError> {
    if h.total == 0 {
        Err(CriterionError::EmptyHistogram)
    } else {
        Ok(h.total as f64)
    }
}

/// Gini index, `1 - sum p_q^2`.
pub fn impurity_gini(h: &ClassHistogram) -> Result<f64, CriterionError> {
    let n = require_nonempty(h)?;
    let sum_sq: f64 = h
        .counts
        .iter()
        .map(|&c| {
            let p = c as f64 / n;
            p * p
        })
        .sum();
    Ok(1.0 - sum_sq)
}

#[inline]
fn neg_p_log2_p(p: f64) -> f64 {
    // 0 log 0 = 0
    if p > 0.0 {
        -p * p.log2()
    } else {
        0.0
    }
}

/// Shannon entropy in bits.
pub fn impurity_entropy(h: &ClassHistogram) -> Result<f64, CriterionError> {
    let n = require_nonempty(h)?;
    Ok(h.counts.iter().map(|&c| neg_p_log2_p(c as f64 / n)).sum())
}

/// Ordinal Gini index, `sum c_q (1 - c_q)` over cumulative frequencies.
pub fn impurity_ogini(h: &ClassHistogram) -> Result<f64, CriterionError> {
    let n = require_nonempty(h)?;
    let mut running = 0u64;
    let mut total = 0.0;
    for &c in &h.counts {
        running += c;
        let cq = running as f64 / n;
        total += cq * (1.0 - cq);
    }
    Ok(total)
}

/// Class weights `|v(q) - v(mode)|^alpha`, normalised over all classes.
///
/// The mode is recomputed from `h`, with ties resolved to the lowest class
/// index. The mode class always gets weight 0.
pub fn class_weights(h: &ClassHistogram, spec: &CriterionSpec) -> Result<Vec<f64>, CriterionError> {
    require_nonempty(h)?;
    let q = h.num_classes();
    if q < 2 {
        return Err(CriterionError::TooFewClasses(q));
    }
    spec.scores.check_covers(q)?;
    let mode_score = spec.scores.score(h.mode());
    let raw: Vec<f64> = (0..q)
        .map(|i| (spec.scores.score(i) - mode_score).abs().powf(spec.alpha))
        .collect();
    let denom: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|r| r / denom).collect())
}

/// Weighted entropy (bits), weights from [`class_weights`] on `h` itself.
pub fn impurity_weighted_entropy(
    h: &ClassHistogram,
    spec: &CriterionSpec,
) -> Result<f64, CriterionError> {
    let n = h.total as f64;
    let weights = class_weights(h, spec)?;
    Ok(h.counts
        .iter()
        .zip(&weights)
        .map(|(&c, w)| w * neg_p_log2_p(c as f64 / n))
        .sum())
}

/// Ranking impurity `sum_q sum_{j<=q} b(q,j) N_q N_j`.
///
/// Unnormalised, so it grows with the square of the node size. An empty
/// histogram has impurity 0.
pub fn impurity_ranking(h: &ClassHistogram, spec: &CriterionSpec) -> f64 {
    let counts = &h.counts;
    let mut total = 0.0;
    for (q, &nq) in counts.iter().enumerate() {
        if nq == 0 {
            continue;
        }
        for (j, &nj) in counts[..=q].iter().enumerate() {
            if nj == 0 {
                continue;
            }
            total += spec.beta(q, j) * nq as f64 * nj as f64;
        }
    }
    total
}

/// Breakdown of a split's impurity decrease.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainResult {
    pub gain: f64,
    pub parent_impurity: f64,
    pub left_impurity: f64,
    pub right_impurity: f64,
    pub p_left: f64,
    pub p_right: f64,
}

/// Impurity decrease of splitting `parent` into `left` and `right`.
pub fn split_gain(
    spec: &CriterionSpec,
    parent: &ClassHistogram,
    left: &ClassHistogram,
    right: &ClassHistogram,
) -> Result<GainResult, CriterionError> {
    if left.num_classes() != parent.num_classes() {
        return Err(CriterionError::ClassCountMismatch(
            parent.num_classes(),
            left.num_classes(),
        ));
    }
    if right.num_classes() != parent.num_classes() {
        return Err(CriterionError::ClassCountMismatch(
            parent.num_classes(),
            right.num_classes(),
        ));
    }
    let consistent = parent
        .counts
        .iter()
        .zip(left.counts.iter().zip(&right.counts))
        .all(|(&p, (&l, &r))| p == l + r);
    if !consistent {
        return Err(CriterionError::HistogramMismatch);
    }
    if left.is_empty() || right.is_empty() {
        return Err(CriterionError::EmptyChild);
    }
    Ok(gain_unchecked(spec, parent, left, right))
}

/// [`split_gain`] without the consistency checks; callers guarantee
/// `parent = left + right` with both children non-empty.
pub(crate) fn gain_unchecked(
    spec: &CriterionSpec,
    parent: &ClassHistogram,
    left: &ClassHistogram,
    right: &ClassHistogram,
) -> GainResult {
    let parent_impurity = spec.impurity(parent).expect("non-empty parent");
    gain_from_parts(spec, parent_impurity, parent.total, left, right)
}

/// Gain given a precomputed parent impurity. Shared by [`split_gain`] and the
/// tree's threshold sweep so both produce bit-identical values.
pub(crate) fn gain_from_parts(
    spec: &CriterionSpec,
    parent_impurity: f64,
    parent_total: u64,
    left: &ClassHistogram,
    right: &ClassHistogram,
) -> GainResult {
    let n = parent_total as f64;
    let p_left = left.total as f64 / n;
    let p_right = right.total as f64 / n;
    let left_impurity = spec.impurity(left).expect("non-empty child");
    let right_impurity = spec.impurity(right).expect("non-empty child");
    GainResult {
        gain: parent_impurity - (p_left * left_impurity + p_right * right_impurity),
        parent_impurity,
        left_impurity,
        right_impurity,
        p_left,
        p_right,
    }
}
