//! Binary tree classifiers stored as index arenas.
//!
//! An internal node sends `x` to its right child when `x[feature] > threshold`
//! and to its left child otherwise. Features are zero-based in the API; the
//! textual format `node(j, s, left, right)` / `leaf(label)` uses one-based
//! variable indices.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::ops::Add;
use std::str::FromStr;

use num_rational::Ratio;

use crate::data::{self, Dataset, DesignSpec, Label};
use crate::error::{Error, Result};

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    Internal {
        feature: usize,
        threshold: f64,
        left: NodeId,
        right: NodeId,
    },
    Leaf {
        label: Label,
    },
}

/// Equality is structural: arena layout does not matter.
#[derive(Debug, Clone)]
pub struct TreeClassifier {
    nodes: Vec<Node>,
    root: NodeId,
    leaves: usize,
    max_feature: Option<usize>,
}

impl TreeClassifier {
    pub fn leaf(label: Label) -> Self {
        Self {
            nodes: vec![Node::Leaf { label }],
            root: 0,
            leaves: 1,
            max_feature: None,
        }
    }

    /// Join two trees under a new root testing `x[feature] > threshold`.
    pub fn split(feature: usize, threshold: f64, left: Self, right: Self) -> Self {
        let mut nodes = Vec::with_capacity(1 + left.nodes.len() + right.nodes.len());
        nodes.push(Node::Leaf { label: 0 });
        let l = append(&mut nodes, &left);
        let r = append(&mut nodes, &right);
        nodes[0] = Node::Internal {
            feature,
            threshold,
            left: l,
            right: r,
        };
        Self {
            nodes,
            root: 0,
            leaves: left.leaves + right.leaves,
            max_feature: Some(
                left.max_feature
                    .into_iter()
                    .chain(right.max_feature)
                    .fold(feature, usize::max),
            ),
        }
    }

    /// Single split with two leaves.
    pub fn stump(feature: usize, threshold: f64, left: Label, right: Label) -> Self {
        Self::split(feature, threshold, Self::leaf(left), Self::leaf(right))
    }

    /// Validate an arena: every node must be reachable from `root` exactly
    /// once and leaf labels must be binary.
    pub fn from_nodes(nodes: Vec<Node>, root: NodeId) -> Result<Self> {
        if root >= nodes.len() {
            return Err(Error::Input(format!("root {root} out of range")));
        }
        let mut seen = vec![false; nodes.len()];
        let mut stack = vec![root];
        let mut leaves = 0;
        let mut max_feature: Option<usize> = None;
        while let Some(id) = stack.pop() {
            if id >= nodes.len() {
                return Err(Error::Input(format!("node id {id} out of range")));
            }
            if std::mem::replace(&mut seen[id], true) {
                return Err(Error::Input(format!("node {id} is reachable twice")));
            }
            match nodes[id] {
                Node::Leaf { label } => {
                    if label > 1 {
                        return Err(Error::Input(format!("leaf label {label} is not 0 or 1")));
                    }
                    leaves += 1;
                }
                Node::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    if threshold.is_nan() {
                        return Err(Error::Input("NaN threshold".into()));
                    }
                    max_feature = Some(max_feature.map_or(feature, |m| m.max(feature)));
                    stack.push(right);
                    stack.push(left);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Input("arena has unreachable nodes".into()));
        }
        Ok(Self {
            nodes,
            root,
            leaves,
            max_feature,
        })
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// Number of leaves, `|T|`.
    pub fn size(&self) -> usize {
        self.leaves
    }

    pub fn internal_count(&self) -> usize {
        self.nodes.len() - self.leaves
    }

    pub fn is_leaf(&self) -> bool {
        self.leaves == 1
    }

    /// Largest zero-based feature index used by a split.
    pub fn max_feature(&self) -> Option<usize> {
        self.max_feature
    }

    /// Distinct features used by splits, ascending.
    pub fn features_used(&self) -> Vec<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Internal { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn depth(&self) -> usize {
        fn go(t: &TreeClassifier, id: NodeId) -> usize {
            match t.nodes[id] {
                Node::Leaf { .. } => 0,
                Node::Internal { left, right, .. } => 1 + go(t, left).max(go(t, right)),
            }
        }
        go(self, self.root)
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        match self.max_feature {
            Some(m) if len <= m => Err(Error::Input(format!(
                "tree splits on variable {} but x has {len} coordinates",
                m + 1
            ))),
            _ => Ok(()),
        }
    }

    /// Id of the leaf reached by `x`. The caller guarantees the dimension.
    pub(crate) fn leaf_of(&self, x: &[f64]) -> NodeId {
        let mut id = self.root;
        loop {
            match self.nodes[id] {
                Node::Leaf { .. } => return id,
                Node::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                } => id = if x[feature] > threshold { right } else { left },
            }
        }
    }

    fn label_at(&self, id: NodeId) -> Label {
        match self.nodes[id] {
            Node::Leaf { label } => label,
            Node::Internal { .. } => unreachable!("leaf_of returns leaves"),
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<Label> {
        self.check_dim(x.len())?;
        Ok(self.label_at(self.leaf_of(x)))
    }

    /// Misclassification count on `data`.
    pub fn misclassified(&self, data: &Dataset) -> Result<Risk> {
        self.check_dim(data.p())?;
        let errors = data
            .rows()
            .zip(data.labels())
            .filter(|(x, &y)| self.label_at(self.leaf_of(x)) != y)
            .count();
        Ok(Risk::new(errors, data.n()))
    }

    /// `P_n f`: fraction of misclassified rows.
    pub fn empirical_risk(&self, data: &Dataset) -> Result<f64> {
        Ok(self.misclassified(data)?.value())
    }

    /// Monte Carlo estimate of the true risk on a fresh sample of size `m`,
    /// and of the loss relative to the Bayes classifier.
    pub fn loss_estimate(&self, spec: &DesignSpec, m: usize, seed: u64) -> Result<LossEstimate> {
        if m == 0 {
            return Err(Error::Parameter("sample size must be positive".into()));
        }
        self.check_dim(spec.p())?;
        let used = self.features_used();
        let (cols, labels) = data::sample_columns(spec, m, seed, &used)?;
        let mut x = vec![0.0; spec.p()];
        let mut errors = 0usize;
        for (i, &y) in labels.iter().enumerate() {
            for (c, &j) in used.iter().enumerate() {
                x[j] = cols[c][i];
            }
            if self.label_at(self.leaf_of(&x)) != y {
                errors += 1;
            }
        }
        let risk = errors as f64 / m as f64;
        Ok(LossEstimate {
            risk,
            loss: risk - data::bayes_risk(spec),
            std_error: (risk * (1.0 - risk) / m as f64).sqrt(),
        })
    }

    /// Configuration and breadth-first variable list of this tree.
    pub fn descriptor(&self) -> ClassDescriptor {
        fn shape(t: &TreeClassifier, id: NodeId) -> Shape {
            match t.nodes[id] {
                Node::Leaf { .. } => Shape::Leaf,
                Node::Internal { left, right, .. } => {
                    Shape::node(shape(t, left), shape(t, right))
                }
            }
        }
        let mut variables = Vec::new();
        let mut queue = VecDeque::from([self.root]);
        while let Some(id) = queue.pop_front() {
            if let Node::Internal {
                feature,
                left,
                right,
                ..
            } = self.nodes[id]
            {
                variables.push(feature);
                queue.push_back(left);
                queue.push_back(right);
            }
        }
        ClassDescriptor {
            shape: shape(self, self.root),
            variables,
        }
    }
}

fn append(nodes: &mut Vec<Node>, tree: &TreeClassifier) -> NodeId {
    fn go(nodes: &mut Vec<Node>, t: &TreeClassifier, id: NodeId) -> NodeId {
        let slot = nodes.len();
        match t.nodes[id] {
            leaf @ Node::Leaf { .. } => nodes.push(leaf),
            Node::Internal {
                feature,
                threshold,
                left,
                right,
            } => {
                nodes.push(leaf_placeholder());
                let l = go(nodes, t, left);
                let r = go(nodes, t, right);
                nodes[slot] = Node::Internal {
                    feature,
                    threshold,
                    left: l,
                    right: r,
                };
            }
        }
        slot
    }
    go(nodes, tree, tree.root)
}

fn leaf_placeholder() -> Node {
    Node::Leaf { label: 0 }
}

/// Whether `a` is obtained from `b` by collapsing zero or more internal
/// nodes into leaves. Leaf labels are ignored; retained internal nodes must
/// carry identical `(feature, threshold)`.
pub fn is_pruned_subtree(a: &TreeClassifier, b: &TreeClassifier) -> bool {
    fn go(a: &TreeClassifier, ia: NodeId, b: &TreeClassifier, ib: NodeId) -> bool {
        match (a.nodes[ia], b.nodes[ib]) {
            (Node::Leaf { .. }, _) => true,
            (Node::Internal { .. }, Node::Leaf { .. }) => false,
            (
                Node::Internal {
                    feature: fa,
                    threshold: sa,
                    left: la,
                    right: ra,
                },
                Node::Internal {
                    feature: fb,
                    threshold: sb,
                    left: lb,
                    right: rb,
                },
            ) => fa == fb && sa.to_bits() == sb.to_bits() && go(a, la, b, lb) && go(a, ra, b, rb),
        }
    }
    go(a, a.root, b, b.root)
}

impl PartialEq for TreeClassifier {
    fn eq(&self, other: &Self) -> bool {
        fn go(a: &TreeClassifier, i: NodeId, b: &TreeClassifier, j: NodeId) -> bool {
            match (a.nodes[i], b.nodes[j]) {
                (Node::Leaf { label: x }, Node::Leaf { label: y }) => x == y,
                (
                    Node::Internal { feature: f, threshold: s, left: l, right: r },
                    Node::Internal { feature: g, threshold: t, left: l2, right: r2 },
                ) => f == g && s == t && go(a, l, b, l2) && go(a, r, b, r2),
                _ => false,
            }
        }
        self.leaves == other.leaves && go(self, self.root, other, other.root)
    }
}

/// Same internal structure, ignoring leaf labels.
pub fn same_structure(a: &TreeClassifier, b: &TreeClassifier) -> bool {
    is_pruned_subtree(a, b) && is_pruned_subtree(b, a)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossEstimate {
    pub risk: f64,
    pub loss: f64,
    /// Binomial standard error of `risk`.
    pub std_error: f64,
}

/// Exact empirical risk: `errors / n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Risk {
    pub errors: usize,
    pub n: usize,
}

impl Risk {
    pub fn new(errors: usize, n: usize) -> Self {
        Self { errors, n }
    }

    pub fn value(&self) -> f64 {
        self.errors as f64 / self.n as f64
    }

    pub fn ratio(&self) -> Ratio<i64> {
        Ratio::new(self.errors as i64, self.n as i64)
    }
}

/// Scalar in which penalized costs are compared: `f64`, or `Ratio<i64>`
/// when exact comparisons are needed.
pub trait Cost: Copy + PartialOrd + Add<Output = Self> + fmt::Debug {
    fn from_risk(risk: Risk) -> Self;
}

impl Cost for f64 {
    fn from_risk(risk: Risk) -> Self {
        risk.value()
    }
}

impl Cost for Ratio<i64> {
    fn from_risk(risk: Risk) -> Self {
        risk.ratio()
    }
}

impl fmt::Display for TreeClassifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go(t: &TreeClassifier, id: NodeId, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match t.nodes[id] {
                Node::Leaf { label } => write!(f, "leaf({label})"),
                Node::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    write!(f, "node({}, {threshold:?}, ", feature + 1)?;
                    go(t, left, f)?;
                    write!(f, ", ")?;
                    go(t, right, f)?;
                    write!(f, ")")
                }
            }
        }
        go(self, self.root, f)
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, what: &str) -> Error {
        Error::Parse(format!("{what} at byte {}", self.pos))
    }

    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn eat(&mut self, token: &str) -> Result<()> {
        self.skip_ws();
        if self.src[self.pos..].starts_with(token) {
            self.pos += token.len();
            Ok(())
        } else {
            Err(self.err(&format!("expected `{token}`")))
        }
    }

    fn atom(&mut self) -> &'a str {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        let len = rest.find([',', ')']).unwrap_or(rest.len());
        self.pos += len;
        rest[..len].trim()
    }

    fn tree(&mut self) -> Result<TreeClassifier> {
        self.skip_ws();
        if self.src[self.pos..].starts_with("leaf") {
            self.eat("leaf")?;
            self.eat("(")?;
            let label = match self.atom() {
                "0" => 0,
                "1" => 1,
                other => return Err(self.err(&format!("bad label `{other}`"))),
            };
            self.eat(")")?;
            Ok(TreeClassifier::leaf(label))
        } else {
            self.eat("node")?;
            self.eat("(")?;
            let j: usize = self
                .atom()
                .parse()
                .map_err(|_| self.err("bad variable index"))?;
            if j == 0 {
                return Err(self.err("variable indices start at 1"));
            }
            self.eat(",")?;
            let s: f64 = self.atom().parse().map_err(|_| self.err("bad threshold"))?;
            if s.is_nan() {
                return Err(self.err("NaN threshold"));
            }
            self.eat(",")?;
            let left = self.tree()?;
            self.eat(",")?;
            let right = self.tree()?;
            self.eat(")")?;
            Ok(TreeClassifier::split(j - 1, s, left, right))
        }
    }
}

impl FromStr for TreeClassifier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = Parser { src: s, pos: 0 };
        let tree = p.tree()?;
        p.skip_ws();
        if p.pos != s.len() {
            return Err(p.err("trailing input"));
        }
        Ok(tree)
    }
}

/// Binary tree shape with no thresholds or labels (a configuration).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Shape {
    Leaf,
    Node(Box<Shape>, Box<Shape>),
}

/// One slot of a shape laid out in breadth-first order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    /// `rank` is the breadth-first index among internal nodes.
    Internal { rank: usize, left: usize, right: usize },
    /// `rank` is the breadth-first index among leaves.
    Leaf { rank: usize },
}

impl Shape {
    pub fn node(left: Shape, right: Shape) -> Shape {
        Shape::Node(Box::new(left), Box::new(right))
    }

    pub fn leaves(&self) -> usize {
        match self {
            Shape::Leaf => 1,
            Shape::Node(l, r) => l.leaves() + r.leaves(),
        }
    }

    pub fn internal_count(&self) -> usize {
        self.leaves() - 1
    }

    /// Breadth-first layout; slot 0 is the root and children point to
    /// later slots.
    pub fn bfs_layout(&self) -> Vec<Slot> {
        let mut order: Vec<&Shape> = vec![self];
        let mut slots = Vec::new();
        let (mut internal, mut leaf) = (0, 0);
        let mut i = 0;
        while i < order.len() {
            match order[i] {
                Shape::Leaf => {
                    slots.push(Slot::Leaf { rank: leaf });
                    leaf += 1;
                }
                Shape::Node(l, r) => {
                    let left = order.len();
                    order.push(l);
                    order.push(r);
                    slots.push(Slot::Internal {
                        rank: internal,
                        left,
                        right: left + 1,
                    });
                    internal += 1;
                }
            }
            i += 1;
        }
        slots
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Leaf => write!(f, "*"),
            Shape::Node(l, r) => write!(f, "({l} {r})"),
        }
    }
}

/// A class of tree classifiers: a configuration plus the variable tested
/// at each internal node, listed breadth-first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ClassDescriptor {
    pub shape: Shape,
    pub variables: Vec<usize>,
}

impl ClassDescriptor {
    pub fn new(shape: Shape, variables: Vec<usize>) -> Result<Self> {
        if variables.len() != shape.internal_count() {
            return Err(Error::Input(format!(
                "{} variables for {} internal nodes",
                variables.len(),
                shape.internal_count()
            )));
        }
        Ok(Self { shape, variables })
    }

    pub fn size(&self) -> usize {
        self.shape.leaves()
    }

    /// Member of the class with the given thresholds (breadth-first over
    /// internal nodes) and leaf labels (breadth-first over leaves).
    pub fn instantiate(&self, thresholds: &[f64], labels: &[Label]) -> Result<TreeClassifier> {
        let layout = self.shape.bfs_layout();
        if thresholds.len() != self.variables.len() || labels.len() != self.size() {
            return Err(Error::Input("threshold or label count does not match the class".into()));
        }
        let nodes = layout
            .iter()
            .map(|slot| match *slot {
                Slot::Internal { rank, left, right } => Node::Internal {
                    feature: self.variables[rank],
                    threshold: thresholds[rank],
                    left,
                    right,
                },
                Slot::Leaf { rank } => Node::Leaf {
                    label: labels[rank],
                },
            })
            .collect();
        TreeClassifier::from_nodes(nodes, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Design;
    use proptest::prelude::*;

    fn three_leaf() -> TreeClassifier {
        TreeClassifier::split(
            0,
            1.5,
            TreeClassifier::leaf(0),
            TreeClassifier::stump(0, 3.5, 1, 0),
        )
    }

    fn column_data(x: &[f64], y: &[Label]) -> Dataset {
        let rows: Vec<Vec<f64>> = x.iter().map(|&v| vec![v, 0.0]).collect();
        Dataset::from_rows(&rows, y).unwrap()
    }

    #[test]
    fn predict_examples() {
        let stump = TreeClassifier::stump(0, 0.5, 0, 1);
        assert_eq!(stump.predict(&[0.7]).unwrap(), 1);
        assert_eq!(stump.predict(&[0.5]).unwrap(), 0);
        assert_eq!(TreeClassifier::leaf(1).predict(&[]).unwrap(), 1);
        assert!(matches!(
            TreeClassifier::stump(2, 0.0, 0, 1).predict(&[1.0, 2.0]),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn empirical_risk_examples() {
        let d = column_data(&[1.0, 2.0, 3.0, 4.0], &[0, 0, 1, 1]);
        assert_eq!(TreeClassifier::leaf(0).empirical_risk(&d).unwrap(), 0.5);
        assert_eq!(
            TreeClassifier::stump(0, 2.5, 0, 1).empirical_risk(&d).unwrap(),
            0.0
        );
        let d = column_data(&[1.0, 2.0, 3.0, 4.0], &[0, 1, 1, 0]);
        assert_eq!(
            TreeClassifier::stump(0, 2.5, 0, 1).misclassified(&d).unwrap(),
            Risk::new(2, 4)
        );
    }

    #[test]
    fn loss_estimate_examples() {
        let m = 100_000;
        let d1 = DesignSpec::new(Design::One, 1, 5, 0.1, 0).unwrap();
        // Bayes rule: 0 on the positive quadrant, 1 elsewhere.
        let bayes = TreeClassifier::split(
            0,
            0.0,
            TreeClassifier::leaf(1),
            TreeClassifier::stump(1, 0.0, 1, 0),
        );
        let est = bayes.loss_estimate(&d1, m, 11).unwrap();
        assert!(est.loss.abs() <= 3.0 * est.std_error, "{est:?}");

        let est = TreeClassifier::leaf(0).loss_estimate(&d1, m, 12).unwrap();
        assert!((est.risk - 0.7).abs() <= 3.0 * est.std_error, "{est:?}");
        assert!((est.loss - 0.6).abs() <= 3.0 * est.std_error);

        // P(chi2_3 <= x) = erf(sqrt(x/2)) - sqrt(2x/pi) exp(-x/2).
        let x: f64 = 2.5;
        let chi2 = libm::erf((x / 2.0).sqrt())
            - (2.0 * x / std::f64::consts::PI).sqrt() * (-x / 2.0).exp();
        let d4 = DesignSpec::new(Design::Four, 1, 6, 0.2, 0).unwrap();
        let est = TreeClassifier::leaf(1).loss_estimate(&d4, m, 13).unwrap();
        assert!((est.risk - chi2).abs() <= 3.0 * est.std_error, "{est:?} vs {chi2}");
        assert!((chi2 - 0.5247).abs() < 1e-3);
    }

    #[test]
    fn pruned_subtree_examples() {
        let t = three_leaf();
        assert!(is_pruned_subtree(&TreeClassifier::leaf(1), &t));
        assert!(is_pruned_subtree(&t, &t));
        let foreign = TreeClassifier::split(
            0,
            2.5,
            TreeClassifier::leaf(0),
            TreeClassifier::stump(0, 3.5, 1, 0),
        );
        assert!(!is_pruned_subtree(&foreign, &t));
        assert!(is_pruned_subtree(&TreeClassifier::stump(0, 1.5, 1, 1), &t));
        assert!(!is_pruned_subtree(&t, &TreeClassifier::stump(0, 1.5, 1, 1)));
    }

    #[test]
    fn serialization() {
        let t = three_leaf();
        let text = t.to_string();
        assert_eq!(text, "node(1, 1.5, leaf(0), node(1, 3.5, leaf(1), leaf(0)))");
        assert_eq!(text.parse::<TreeClassifier>().unwrap(), t);
        let inf = TreeClassifier::stump(1, f64::NEG_INFINITY, 0, 1);
        assert_eq!(inf.to_string().parse::<TreeClassifier>().unwrap(), inf);
        for bad in ["leaf(2)", "node(0, 1, leaf(0), leaf(1))", "node(1, x, leaf(0), leaf(1))", "leaf(0) junk", "node(1, 0.5, leaf(0))"] {
            assert!(bad.parse::<TreeClassifier>().is_err(), "{bad}");
        }
    }

    #[test]
    fn from_nodes_validation() {
        let ok = vec![
            Node::Internal { feature: 0, threshold: 0.0, left: 1, right: 2 },
            Node::Leaf { label: 0 },
            Node::Leaf { label: 1 },
        ];
        assert_eq!(TreeClassifier::from_nodes(ok.clone(), 0).unwrap().size(), 2);
        let shared = vec![
            Node::Internal { feature: 0, threshold: 0.0, left: 1, right: 1 },
            Node::Leaf { label: 0 },
        ];
        assert!(TreeClassifier::from_nodes(shared, 0).is_err());
        let mut orphan = ok.clone();
        orphan.push(Node::Leaf { label: 0 });
        assert!(TreeClassifier::from_nodes(orphan, 0).is_err());
        assert!(TreeClassifier::from_nodes(ok, 5).is_err());
    }

    #[test]
    fn descriptor_is_breadth_first() {
        // Root on x3, left child on x1 with two leaves, right child on x2
        // whose left child splits on x4.
        let t = TreeClassifier::split(
            2,
            0.0,
            TreeClassifier::stump(0, 0.0, 0, 1),
            TreeClassifier::split(1, 0.0, TreeClassifier::stump(3, 0.0, 0, 1), TreeClassifier::leaf(1)),
        );
        let d = t.descriptor();
        assert_eq!(d.variables, vec![2, 0, 1, 3]);
        assert_eq!(d.size(), 5);
        let rebuilt = d.instantiate(&[0.0; 4], &[0, 1, 0, 1, 1]).unwrap();
        assert!(same_structure(&rebuilt, &t));
        assert!(ClassDescriptor::new(Shape::Leaf, vec![0]).is_err());
    }

    fn arb_tree(depth: u32) -> impl Strategy<Value = TreeClassifier> {
        let leaf = (0u8..2).prop_map(TreeClassifier::leaf);
        leaf.prop_recursive(depth, 32, 2, |inner| {
            (0usize..3, 0i32..4, inner.clone(), inner)
                .prop_map(|(f, s, l, r)| TreeClassifier::split(f, f64::from(s) * 0.5, l, r))
        })
    }

    /// Random pruned subtree: collapse each internal node with probability 1/3.
    fn random_prune(t: &TreeClassifier, coins: &[bool]) -> TreeClassifier {
        fn go(t: &TreeClassifier, id: NodeId, coins: &[bool], k: &mut usize) -> TreeClassifier {
            let flip = coins.get(*k).copied().unwrap_or(false);
            *k += 1;
            match *t.node(id) {
                Node::Leaf { label } => TreeClassifier::leaf(label),
                Node::Internal { .. } if flip => TreeClassifier::leaf(0),
                Node::Internal { feature, threshold, left, right } => {
                    let l = go(t, left, coins, k);
                    let r = go(t, right, coins, k);
                    TreeClassifier::split(feature, threshold, l, r)
                }
            }
        }
        go(t, t.root(), coins, &mut 0)
    }

    proptest! {
        #[test]
        fn leaf_internal_relation(t in arb_tree(5)) {
            prop_assert_eq!(t.size(), t.internal_count() + 1);
        }

        #[test]
        fn text_round_trip(t in arb_tree(5)) {
            prop_assert_eq!(t.to_string().parse::<TreeClassifier>().unwrap(), t);
        }

        #[test]
        fn pruned_subtree_partial_order(
            t in arb_tree(5),
            u in arb_tree(4),
            c1 in proptest::collection::vec(proptest::bool::weighted(0.33), 64),
            c2 in proptest::collection::vec(proptest::bool::weighted(0.33), 64),
        ) {
            let a = random_prune(&t, &c1);
            let b = random_prune(&a, &c2);
            prop_assert!(is_pruned_subtree(&t, &t));
            prop_assert!(is_pruned_subtree(&a, &t));
            prop_assert!(is_pruned_subtree(&b, &a));
            prop_assert!(is_pruned_subtree(&b, &t));
            if is_pruned_subtree(&u, &t) && is_pruned_subtree(&t, &u) {
                prop_assert!(same_structure(&u, &t));
                prop_assert_eq!(u.size(), t.size());
            }
            if is_pruned_subtree(&t, &a) {
                prop_assert_eq!(a.size(), t.size());
            }
        }

        #[test]
        fn predict_descends_to_a_leaf(t in arb_tree(6), x in proptest::collection::vec(-1.0f64..3.0, 3)) {
            let label = t.predict(&x).unwrap();
            prop_assert!(label <= 1);
            prop_assert!(t.depth() < t.nodes().len().max(1));
        }

        #[test]
        fn empirical_risk_matches_naive_count(
            t in arb_tree(5),
            rows in proptest::collection::vec((proptest::collection::vec(-1.0f64..3.0, 3), 0u8..2), 1..30),
        ) {
            let xs: Vec<Vec<f64>> = rows.iter().map(|r| r.0.clone()).collect();
            let ys: Vec<Label> = rows.iter().map(|r| r.1).collect();
            let d = Dataset::from_rows(&xs, &ys).unwrap();
            let naive = xs.iter().zip(&ys).filter(|(x, &y)| t.predict(x).unwrap() != y).count();
            prop_assert_eq!(t.misclassified(&d).unwrap().errors, naive);
        }
    }
}
