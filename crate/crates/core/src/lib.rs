//! Ordinal decision trees.
//!
//! CART-style binary trees whose splits are chosen by one of five criteria:
//! the nominal Gini and information gain, and the ordinal OGini, weighted
//! information gain and ranking impurity. Trees are evaluated with ordinal
//! metrics (MAE, QWK, RPS), and [`bench`] runs the seeded cross-validated
//! comparison protocol over a directory of datasets.
//!
//! ```
//! use ordtree::criteria::{impurity_gini, impurity_ogini, ClassHistogram};
//!
//! // Same nominal impurity, different ordinal impurity.
//! let far = ClassHistogram::from_counts(vec![10, 0, 0, 10]);
//! let near = ClassHistogram::from_counts(vec![10, 10, 0, 0]);
//! assert_eq!(impurity_gini(&far)?, impurity_gini(&near)?);
//! assert!(impurity_ogini(&near)? < impurity_ogini(&far)?);
//! # Ok::<(), ordtree::criteria::CriterionError>(())
//! ```

pub mod bench;
pub mod criteria;
pub mod dataset;
pub mod metrics;
pub mod tree;

pub use criteria::{ClassHistogram, CriterionKind, CriterionSpec, ScoreMap};
pub use dataset::{Dataset, OrdinalLabel};
pub use metrics::{ConfusionMatrix, EvalReport};
pub use tree::{DecisionTree, GrowConfig, SplitSpec};

// The guide under book/ is compiled here so its snippets run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/criteria.md")]
    mod criteria {}
    #[doc = include_str!("../../../book/src/trees.md")]
    mod trees {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/datasets.md")]
    mod datasets {}
    #[doc = include_str!("../../../book/src/benchmark.md")]
    mod benchmark {}
}
