//! Penalized classification-tree selection.
//!
//! The crate grows CART-style trees with misclassification impurity, prunes
//! them with weakest-link cost-complexity pruning, and selects a subtree with
//! size-based penalties that account for the number of candidate variables.
//! Exhaustive desk-scale oracles in [`oracle`] certify the heuristics, and
//! [`experiment`] runs the simulation study relating the tuned penalty
//! constant to `ln p`.

pub mod data;
pub mod error;
pub mod experiment;
pub mod grow;
pub mod oracle;
pub mod prune;
pub mod rng;
pub mod select;
pub mod tree;

pub use data::{generate, Dataset, Design, DesignSpec, Label, MarginSpec};
pub use error::{Error, Result};
pub use grow::{best_split, grow_maximal, GrowLimits, SplitCandidate};
pub use prune::{prune_with_penalty, weakest_link, Choice, PrunedSequence};
pub use select::{cv_select_alpha, penalty_value, select_tree, CvConfig, CvRule, PenaltySpec};
pub use tree::{ClassDescriptor, Cost, Node, Risk, Shape, TreeClassifier};
