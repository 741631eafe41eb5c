//! Weakest-link cost-complexity pruning.
//!
//! Risks are kept as exact counts and critical values as `Ratio<i64>`, so
//! ties between candidate collapses are detected exactly.

use std::io::Write;

use num_rational::Ratio;
use num_traits::ToPrimitive;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::grow::majority;
use crate::tree::{Cost, Node, NodeId, Risk, TreeClassifier};

/// Nested subtrees `T0 >= T1 >= ... >= TK` with their critical values.
///
/// `subtrees[k]` minimizes `P_n f_T + alpha |T|` over all pruned subtrees of
/// `T0` for every `alpha` in `[alphas[k], alphas[k + 1])`, and `TK` is the
/// root leaf.
#[derive(Debug, Clone, PartialEq)]
pub struct PrunedSequence {
    subtrees: Vec<TreeClassifier>,
    alphas: Vec<Ratio<i64>>,
    risks: Vec<Risk>,
}

impl PrunedSequence {
    pub fn len(&self) -> usize {
        self.subtrees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subtrees.is_empty()
    }

    pub fn subtrees(&self) -> &[TreeClassifier] {
        &self.subtrees
    }

    pub fn subtree(&self, k: usize) -> &TreeClassifier {
        &self.subtrees[k]
    }

    pub fn alphas(&self) -> &[Ratio<i64>] {
        &self.alphas
    }

    pub fn alphas_f64(&self) -> Vec<f64> {
        self.alphas.iter().map(ratio_to_f64).collect()
    }

    pub fn risks(&self) -> &[Risk] {
        &self.risks
    }

    /// Index of the subtree selected at `alpha` (the last one whose
    /// critical value is `<= alpha`).
    pub fn active_index(&self, alpha: Ratio<i64>) -> usize {
        self.alphas.partition_point(|&a| a <= alpha).saturating_sub(1)
    }

    pub fn active_at(&self, alpha: Ratio<i64>) -> &TreeClassifier {
        &self.subtrees[self.active_index(alpha)]
    }

    /// Dump as CSV with columns `size,risk,alpha`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "size,risk,alpha")?;
        for ((t, r), a) in self.subtrees.iter().zip(&self.risks).zip(&self.alphas) {
            writeln!(w, "{},{:?},{:?}", t.size(), r.value(), ratio_to_f64(a))?;
        }
        Ok(())
    }
}

pub(crate) fn ratio_to_f64(r: &Ratio<i64>) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Per-node (label 0, label 1) counts of the rows of `data` passing through
/// each node of `tree`.
pub(crate) fn node_counts(tree: &TreeClassifier, data: &Dataset) -> Result<Vec<[usize; 2]>> {
    if let Some(m) = tree.max_feature() {
        if m >= data.p() {
            return Err(Error::Input(format!(
                "tree splits on variable {} but data has p = {}",
                m + 1,
                data.p()
            )));
        }
    }
    let mut counts = vec![[0usize; 2]; tree.nodes().len()];
    for (x, &y) in data.rows().zip(data.labels()) {
        let mut id = tree.root();
        loop {
            counts[id][y as usize] += 1;
            match *tree.node(id) {
                Node::Leaf { .. } => break,
                Node::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                } => id = if x[feature] > threshold { right } else { left },
            }
        }
    }
    Ok(counts)
}

/// Copy of `tree` with every node in `collapsed` turned into a leaf and
/// every leaf relabeled by majority vote.
fn materialize(tree: &TreeClassifier, counts: &[[usize; 2]], collapsed: &[bool]) -> TreeClassifier {
    fn go(t: &TreeClassifier, id: NodeId, counts: &[[usize; 2]], collapsed: &[bool]) -> TreeClassifier {
        match *t.node(id) {
            Node::Internal {
                feature,
                threshold,
                left,
                right,
            } if !collapsed[id] => TreeClassifier::split(
                feature,
                threshold,
                go(t, left, counts, collapsed),
                go(t, right, counts, collapsed),
            ),
            _ => TreeClassifier::leaf(majority(counts[id][0], counts[id][1])),
        }
    }
    go(tree, tree.root(), counts, collapsed)
}

/// Errors and leaf count of the current subtree below every node.
fn subtree_stats(
    tree: &TreeClassifier,
    counts: &[[usize; 2]],
    collapsed: &[bool],
    stats: &mut [(usize, usize)],
    id: NodeId,
) -> (usize, usize) {
    let s = match *tree.node(id) {
        Node::Internal { left, right, .. } if !collapsed[id] => {
            let (el, ll) = subtree_stats(tree, counts, collapsed, stats, left);
            let (er, lr) = subtree_stats(tree, counts, collapsed, stats, right);
            (el + er, ll + lr)
        }
        _ => (counts[id][0].min(counts[id][1]), 1),
    };
    stats[id] = s;
    s
}

/// Weakest-link pruning of `tree` with risks measured on `data`.
///
/// Each step collapses every internal node minimizing
/// `g(t) = (R(t) - R(T_t)) / (|T_t| - 1)`. Collapses with `g = 0` are folded
/// into the first element, so the critical values are strictly increasing.
pub fn weakest_link(tree: &TreeClassifier, data: &Dataset) -> Result<PrunedSequence> {
    let counts = node_counts(tree, data)?;
    let n = data.n() as i64;
    let len = tree.nodes().len();
    let mut collapsed = vec![false; len];
    let mut stats = vec![(0, 0); len];

    let mut seq = PrunedSequence {
        subtrees: Vec::new(),
        alphas: Vec::new(),
        risks: Vec::new(),
    };
    let record = |seq: &mut PrunedSequence, collapsed: &[bool], errors: usize, alpha| {
        let t = materialize(tree, &counts, collapsed);
        let risk = Risk::new(errors, data.n());
        match seq.alphas.last() {
            Some(&last) if last == alpha => {
                *seq.subtrees.last_mut().unwrap() = t;
                *seq.risks.last_mut().unwrap() = risk;
            }
            _ => {
                seq.subtrees.push(t);
                seq.alphas.push(alpha);
                seq.risks.push(risk);
            }
        }
    };

    let (errors, _) = subtree_stats(tree, &counts, &collapsed, &mut stats, tree.root());
    record(&mut seq, &collapsed, errors, Ratio::from_integer(0));

    loop {
        let active = active_internal(tree, &collapsed);
        if active.is_empty() {
            break;
        }
        let g = |id: NodeId| {
            let (sub_err, sub_leaves) = stats[id];
            let as_leaf = counts[id][0].min(counts[id][1]);
            Ratio::new((as_leaf - sub_err) as i64, n * (sub_leaves as i64 - 1))
        };
        let g_min = active.iter().map(|&id| g(id)).min().expect("nonempty");
        for &id in &active {
            if g(id) == g_min {
                collapsed[id] = true;
            }
        }
        let (errors, _) = subtree_stats(tree, &counts, &collapsed, &mut stats, tree.root());
        record(&mut seq, &collapsed, errors, g_min);
    }
    Ok(seq)
}

/// Internal nodes of the current subtree (not collapsed, not below a
/// collapsed node).
fn active_internal(tree: &TreeClassifier, collapsed: &[bool]) -> Vec<NodeId> {
    let mut out = Vec::new();
    let mut stack = vec![tree.root()];
    while let Some(id) = stack.pop() {
        if let Node::Internal { left, right, .. } = *tree.node(id) {
            if !collapsed[id] {
                out.push(id);
                stack.push(left);
                stack.push(right);
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Choice<C> {
    pub index: usize,
    pub cost: C,
}

/// Element of `seq` minimizing `risk + pen(|T|)`; ties go to the smaller
/// tree.
pub fn prune_with_penalty<C: Cost>(seq: &PrunedSequence, pen: impl Fn(usize) -> C) -> Choice<C> {
    let mut best: Option<Choice<C>> = None;
    for (k, (t, &r)) in seq.subtrees.iter().zip(&seq.risks).enumerate() {
        let cost = C::from_risk(r) + pen(t.size());
        // Later elements are smaller, so `<=` breaks ties toward them.
        if best.is_none_or(|b| cost <= b.cost) {
            best = Some(Choice { index: k, cost });
        }
    }
    best.expect("sequence is never empty")
}
