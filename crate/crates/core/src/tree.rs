//! Greedy binary tree induction driven by a [`CriterionSpec`].
//!
//! A split `(feature, threshold)` sends a pattern left when
//! `x[feature] < threshold` and right otherwise. Candidate thresholds are the
//! midpoints between consecutive distinct feature values at the node; the
//! chosen split maximises the criterion gain, with ties going to the lower
//! feature index and then the lower threshold. Induction is deterministic.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::criteria::{gain_from_parts, ClassHistogram, CriterionError, CriterionSpec, GainResult};
use crate::dataset::{Dataset, OrdinalLabel};

/// A split is accepted only if its gain exceeds this fraction of the parent
/// impurity. Filters out float residue on splits whose exact gain is zero.
pub const MIN_RELATIVE_GAIN: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum TreeError {
    #[error("cannot grow a tree from an empty training set")]
    EmptyTrainingSet,
    #[error("max_depth must be at least 1")]
    InvalidMaxDepth,
    #[error("min_samples_split must be at least 2, got {0}")]
    InvalidMinSamplesSplit(usize),
    #[error("expected {expected} features, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("input has a non-finite feature value")]
    NonFiniteInput,
    #[error("malformed tree: {0}")]
    Malformed(String),
    #[error(transparent)]
    Criterion(#[from] CriterionError),
    #[error("tree json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub feature: usize,
    pub threshold: f64,
}

impl SplitSpec {
    #[inline]
    pub fn goes_left(&self, x: &[f64]) -> bool {
        x[self.feature] < self.threshold
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Internal {
        split: SplitSpec,
        /// Training histogram reaching this node; always `left + right`.
        histogram: ClassHistogram,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        histogram: ClassHistogram,
        predicted_class: OrdinalLabel,
    },
}

impl TreeNode {
    fn leaf(histogram: ClassHistogram) -> Self {
        let predicted_class = OrdinalLabel::from_zero_based(histogram.mode());
        TreeNode::Leaf {
            histogram,
            predicted_class,
        }
    }

    pub fn histogram(&self) -> &ClassHistogram {
        match self {
            TreeNode::Internal { histogram, .. } | TreeNode::Leaf { histogram, .. } => histogram,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, TreeNode::Leaf { .. })
    }

    /// Depth of the deepest leaf below this node (a leaf has depth 0).
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Internal { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Internal { left, right, .. } => left.leaf_count() + right.leaf_count(),
        }
    }

    fn truncated(&self, depth: usize) -> TreeNode {
        match self {
            TreeNode::Internal { histogram, .. } if depth == 0 => TreeNode::leaf(histogram.clone()),
            TreeNode::Internal {
                split,
                histogram,
                left,
                right,
            } => TreeNode::Internal {
                split: *split,
                histogram: histogram.clone(),
                left: Box::new(left.truncated(depth - 1)),
                right: Box::new(right.truncated(depth - 1)),
            },
            leaf => leaf.clone(),
        }
    }

    /// Visits every node together with its depth.
    pub fn walk<'a>(&'a self, depth: usize, f: &mut dyn FnMut(&'a TreeNode, usize)) {
        f(self, depth);
        if let TreeNode::Internal { left, right, .. } = self {
            left.walk(depth + 1, f);
            right.walk(depth + 1, f);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowConfig {
    pub criterion: CriterionSpec,
    pub max_depth: usize,
    #[serde(default = "default_min_samples_split")]
    pub min_samples_split: usize,
}

fn default_min_samples_split() -> usize {
    2
}

impl GrowConfig {
    pub fn new(criterion: CriterionSpec, max_depth: usize) -> Self {
        GrowConfig {
            criterion,
            max_depth,
            min_samples_split: default_min_samples_split(),
        }
    }

    pub fn validate(&self, num_classes: usize) -> Result<(), TreeError> {
        if self.max_depth < 1 {
            return Err(TreeError::InvalidMaxDepth);
        }
        if self.min_samples_split < 2 {
            return Err(TreeError::InvalidMinSamplesSplit(self.min_samples_split));
        }
        self.criterion.validate(num_classes)?;
        Ok(())
    }
}

/// Midpoints between consecutive distinct values, ascending.
///
/// Each threshold `t` satisfies `a < t <= b` for the pair `(a, b)` it came
/// from, so `a` goes left and `b` goes right.
pub fn candidate_thresholds(values: &[f64]) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    sorted.windows(2).map(|w| midpoint(w[0], w[1])).collect()
}

#[inline]
fn midpoint(a: f64, b: f64) -> f64 {
    let mid = a + (b - a) / 2.0;
    // adjacent floats: the midpoint can round down onto `a`
    if mid > a {
        mid
    } else {
        b
    }
}

/// Best gain-maximising split of `rows`, or `None` when the node is pure, has
/// fewer than two patterns, or no candidate decreases impurity.
pub fn best_split(
    ds: &Dataset,
    rows: &[usize],
    criterion: &CriterionSpec,
) -> Option<(SplitSpec, GainResult)> {
    if rows.len() < 2 {
        return None;
    }
    let parent = ds.histogram_of(rows.iter().copied());
    best_split_with_parent(ds, rows, criterion, &parent)
}

fn best_split_with_parent(
    ds: &Dataset,
    rows: &[usize],
    criterion: &CriterionSpec,
    parent: &ClassHistogram,
) -> Option<(SplitSpec, GainResult)> {
    if parent.is_pure() {
        return None;
    }
    let parent_impurity = criterion.impurity(parent).ok()?;
    let min_gain = MIN_RELATIVE_GAIN * parent_impurity.abs();
    let mut best: Option<(SplitSpec, GainResult)> = None;
    let mut order: Vec<(f64, usize)> = Vec::with_capacity(rows.len());

    for feature in 0..ds.num_features() {
        order.clear();
        order.extend(
            rows.iter()
                .map(|&r| (ds.feature(r, feature), ds.label(r).zero_based())),
        );
        order.sort_by(|a, b| a.0.total_cmp(&b.0));
        if order[0].0 == order[order.len() - 1].0 {
            continue;
        }
        let mut left = ClassHistogram::zeros(parent.num_classes());
        let mut right = parent.clone();
        for i in 0..order.len() - 1 {
            let (value, class) = order[i];
            left.increment(class);
            right.decrement(class);
            let next = order[i + 1].0;
            if value == next {
                continue;
            }
            let gain = gain_from_parts(criterion, parent_impurity, parent.total(), &left, &right);
            let admissible = gain.gain > min_gain;
            if !admissible {
                continue;
            }
            if best.as_ref().is_none_or(|(_, b)| gain.gain > b.gain) {
                best = Some((
                    SplitSpec {
                        feature,
                        threshold: midpoint(value, next),
                    },
                    gain,
                ));
            }
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    pub root: TreeNode,
    pub num_classes: usize,
    pub num_features: usize,
    pub config: GrowConfig,
}

impl DecisionTree {
    /// Grows a tree on the given rows of `ds`.
    pub fn fit(ds: &Dataset, rows: &[usize], config: &GrowConfig) -> Result<Self, TreeError> {
        if rows.is_empty() {
            return Err(TreeError::EmptyTrainingSet);
        }
        config.validate(ds.num_classes())?;
        let root = grow_node(ds, rows.to_vec(), 0, config);
        Ok(DecisionTree {
            root,
            num_classes: ds.num_classes(),
            num_features: ds.num_features(),
            config: config.clone(),
        })
    }

    /// Grows on every row of `ds`.
    pub fn fit_all(ds: &Dataset, config: &GrowConfig) -> Result<Self, TreeError> {
        let rows: Vec<usize> = (0..ds.len()).collect();
        Self::fit(ds, &rows, config)
    }

    /// The tree that growing with `max_depth = depth` would have produced.
    ///
    /// Split choices never depend on the depth limit, so cutting a deeper
    /// tree gives the same result as regrowing.
    pub fn truncated(&self, depth: usize) -> DecisionTree {
        let depth = depth.max(1);
        DecisionTree {
            root: self.root.truncated(depth),
            num_classes: self.num_classes,
            num_features: self.num_features,
            config: GrowConfig {
                max_depth: depth.min(self.config.max_depth),
                ..self.config.clone()
            },
        }
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn leaf_count(&self) -> usize {
        self.root.leaf_count()
    }

    fn check_input(&self, x: &[f64]) -> Result<(), TreeError> {
        if x.len() != self.num_features {
            return Err(TreeError::DimensionMismatch {
                expected: self.num_features,
                found: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(TreeError::NonFiniteInput);
        }
        Ok(())
    }

    fn leaf_for(&self, x: &[f64]) -> &TreeNode {
        let mut node = &self.root;
        while let TreeNode::Internal {
            split, left, right, ..
        } = node
        {
            node = if split.goes_left(x) { left } else { right };
        }
        node
    }

    pub fn predict(&self, x: &[f64]) -> Result<OrdinalLabel, TreeError> {
        self.check_input(x)?;
        match self.leaf_for(x) {
            TreeNode::Leaf {
                predicted_class, ..
            } => Ok(*predicted_class),
            TreeNode::Internal { .. } => unreachable!("descent ends at a leaf"),
        }
    }

    /// Class frequencies of the leaf reached by `x`.
    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>, TreeError> {
        self.check_input(x)?;
        Ok(self
            .leaf_for(x)
            .histogram()
            .relative_frequencies()
            .expect("leaves are non-empty"))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&TreeRepr::from(self)).expect("tree serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, TreeError> {
        let repr: TreeRepr = serde_json::from_str(text)?;
        repr.try_into()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), TreeError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|source| TreeError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TreeError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| TreeError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }
}

fn grow_node(ds: &Dataset, rows: Vec<usize>, depth: usize, config: &GrowConfig) -> TreeNode {
    let histogram = ds.histogram_of(rows.iter().copied());
    if depth >= config.max_depth || rows.len() < config.min_samples_split || histogram.is_pure() {
        return TreeNode::leaf(histogram);
    }
    let Some((split, _)) = best_split_with_parent(ds, &rows, &config.criterion, &histogram) else {
        return TreeNode::leaf(histogram);
    };
    let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
        .into_iter()
        .partition(|&r| ds.feature(r, split.feature) < split.threshold);
    TreeNode::Internal {
        split,
        histogram,
        left: Box::new(grow_node(ds, left_rows, depth + 1, config)),
        right: Box::new(grow_node(ds, right_rows, depth + 1, config)),
    }
}

// On-disk form: internal nodes carry only the split, leaves only counts.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum NodeRepr {
    Internal {
        feature: usize,
        threshold: f64,
        left: Box<NodeRepr>,
        right: Box<NodeRepr>,
    },
    Leaf {
        counts: Vec<u64>,
    },
}

#[derive(Serialize, Deserialize)]
struct TreeRepr {
    num_classes: usize,
    num_features: usize,
    config: GrowConfig,
    root: NodeRepr,
}

impl From<&TreeNode> for NodeRepr {
    fn from(node: &TreeNode) -> Self {
        match node {
            TreeNode::Leaf { histogram, .. } => NodeRepr::Leaf {
                counts: histogram.counts().to_vec(),
            },
            TreeNode::Internal {
                split, left, right, ..
            } => NodeRepr::Internal {
                feature: split.feature,
                threshold: split.threshold,
                left: Box::new(NodeRepr::from(left.as_ref())),
                right: Box::new(NodeRepr::from(right.as_ref())),
            },
        }
    }
}

impl From<&DecisionTree> for TreeRepr {
    fn from(tree: &DecisionTree) -> Self {
        TreeRepr {
            num_classes: tree.num_classes,
            num_features: tree.num_features,
            config: tree.config.clone(),
            root: NodeRepr::from(&tree.root),
        }
    }
}

fn node_from_repr(repr: NodeRepr, q: usize, k: usize) -> Result<TreeNode, TreeError> {
    match repr {
        NodeRepr::Leaf { counts } => {
            if counts.len() != q {
                return Err(TreeError::Malformed(format!(
                    "leaf has {} counts, expected {q}",
                    counts.len()
                )));
            }
            let h = ClassHistogram::from_counts(counts);
            if h.is_empty() {
                return Err(TreeError::Malformed("empty leaf".into()));
            }
            Ok(TreeNode::leaf(h))
        }
        NodeRepr::Internal {
            feature,
            threshold,
            left,
            right,
        } => {
            if feature >= k || !threshold.is_finite() {
                return Err(TreeError::Malformed(format!(
                    "bad split on feature {feature} at {threshold}"
                )));
            }
            let left = node_from_repr(*left, q, k)?;
            let right = node_from_repr(*right, q, k)?;
            let histogram = left
                .histogram()
                .checked_add(right.histogram())
                .expect("children share class count");
            Ok(TreeNode::Internal {
                split: SplitSpec { feature, threshold },
                histogram,
                left: Box::new(left),
                right: Box::new(right),
            })
        }
    }
}

impl TryFrom<TreeRepr> for DecisionTree {
    type Error = TreeError;

    fn try_from(repr: TreeRepr) -> Result<Self, TreeError> {
        let root = node_from_repr(repr.root, repr.num_classes, repr.num_features)?;
        Ok(DecisionTree {
            root,
            num_classes: repr.num_classes,
            num_features: repr.num_features,
            config: repr.config,
        })
    }
}
