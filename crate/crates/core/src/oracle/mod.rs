//! Exhaustive desk-scale ground truth.
//!
//! Everything here is exponential in the tree size and guarded by
//! [`OracleCaps`]. The procedures share no code with the heuristics they
//! certify beyond the tree and dataset types.

pub mod suite;

use std::collections::HashSet;

use crate::data::{Dataset, Label};
use crate::error::{Error, Result};
use crate::select::PenaltySpec;
use crate::tree::{ClassDescriptor, Cost, Node, NodeId, Risk, Shape, Slot, TreeClassifier};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleCaps {
    /// Classes visited by an enumeration or an exhaustive selection.
    pub max_classes: u64,
    /// Threshold assignments tried within one class.
    pub max_threshold_combos: u64,
    /// Pruned subtrees enumerated by the brute-force pruner.
    pub max_subtrees: u64,
}

impl Default for OracleCaps {
    fn default() -> Self {
        Self {
            max_classes: 100_000,
            max_threshold_combos: 1_000_000,
            max_subtrees: 100_000,
        }
    }
}

fn cap_check(what: &'static str, needed: u128, cap: u64) -> Result<()> {
    if needed > u128::from(cap) {
        Err(Error::Resource {
            what,
            needed,
            cap: u128::from(cap),
        })
    } else {
        Ok(())
    }
}

/// Number of binary tree shapes with `k` leaves: `binom(2k - 2, k - 1) / k`.
pub fn catalan(k: u32) -> Result<u64> {
    if k == 0 {
        return Err(Error::Parameter("tree size must be >= 1".into()));
    }
    let m = u128::from(k - 1);
    // binom(2m, m) built incrementally; each prefix is itself a binomial.
    let mut binom: u128 = 1;
    for i in 1..=m {
        binom = binom
            .checked_mul(m + i)
            .ok_or_else(|| Error::Overflow(format!("catalan({k})")))?
            / i;
    }
    u64::try_from(binom / u128::from(k)).map_err(|_| Error::Overflow(format!("catalan({k})")))
}

/// Number of classes of trees with `k` leaves over `p` variables:
/// `p^(k-1) * catalan(k)`.
pub fn class_count(p: u32, k: u32) -> Result<u64> {
    if p < 2 {
        return Err(Error::Parameter(format!("p must be >= 2, got {p}")));
    }
    let lists = u64::from(p)
        .checked_pow(k.saturating_sub(1))
        .ok_or_else(|| Error::Overflow(format!("{p}^{}", k - 1)))?;
    lists
        .checked_mul(catalan(k)?)
        .ok_or_else(|| Error::Overflow(format!("class_count({p}, {k})")))
}

/// All shapes with `k` leaves, enumerated by left-subtree size.
pub fn enumerate_shapes(k: usize) -> Vec<Shape> {
    if k == 0 {
        return Vec::new();
    }
    if k == 1 {
        return vec![Shape::Leaf];
    }
    let mut out = Vec::new();
    for left in 1..k {
        let ls = enumerate_shapes(left);
        let rs = enumerate_shapes(k - left);
        for l in &ls {
            for r in &rs {
                out.push(Shape::node(l.clone(), r.clone()));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassEnumeration {
    pub k: usize,
    pub p: usize,
    pub configurations: Vec<Shape>,
    pub classes: Vec<ClassDescriptor>,
}

/// Every `(configuration, variable list)` pair for trees with `k` leaves
/// over `p` variables (zero-based).
pub fn enumerate_classes(p: usize, k: usize, caps: &OracleCaps) -> Result<ClassEnumeration> {
    if k == 0 {
        return Err(Error::Parameter("tree size must be >= 1".into()));
    }
    let count = class_count(
        u32::try_from(p).map_err(|_| Error::Overflow("p".into()))?,
        u32::try_from(k).map_err(|_| Error::Overflow("k".into()))?,
    )?;
    cap_check("class enumeration", u128::from(count), caps.max_classes)?;
    let configurations = enumerate_shapes(k);
    let internal = k - 1;
    let mut classes = Vec::with_capacity(count as usize);
    for shape in &configurations {
        let mut list = vec![0usize; internal];
        loop {
            classes.push(ClassDescriptor {
                shape: shape.clone(),
                variables: list.clone(),
            });
            if !odometer(&mut list, |_| p) {
                break;
            }
        }
    }
    Ok(ClassEnumeration {
        k,
        p,
        configurations,
        classes,
    })
}

/// Advance a mixed-radix counter, last digit fastest. Returns false on
/// wrap-around.
fn odometer(digits: &mut [usize], radix: impl Fn(usize) -> usize) -> bool {
    for i in (0..digits.len()).rev() {
        digits[i] += 1;
        if digits[i] < radix(i) {
            return true;
        }
        digits[i] = 0;
    }
    false
}

/// `-inf`, the midpoints between consecutive distinct values, `+inf`.
fn threshold_candidates(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    let mut out = Vec::with_capacity(v.len() + 1);
    out.push(f64::NEG_INFINITY);
    out.extend(v.windows(2).map(|w| w[0] + (w[1] - w[0]) / 2.0));
    out.push(f64::INFINITY);
    out
}

/// Leaf rank reached by `x` in a breadth-first layout.
fn route(layout: &[Slot], variables: &[usize], thresholds: &[f64], x: &[f64]) -> usize {
    let mut slot = 0;
    loop {
        match layout[slot] {
            Slot::Leaf { rank } => return rank,
            Slot::Internal { rank, left, right } => {
                slot = if x[variables[rank]] > thresholds[rank] {
                    right
                } else {
                    left
                };
            }
        }
    }
}

fn check_variables(desc: &ClassDescriptor, p: usize) -> Result<()> {
    if desc.variables.len() != desc.shape.internal_count() {
        return Err(Error::Input("malformed class descriptor".into()));
    }
    match desc.variables.iter().find(|&&j| j >= p) {
        Some(j) => Err(Error::Input(format!("variable {} out of range for p = {p}", j + 1))),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErmFit {
    pub tree: TreeClassifier,
    pub risk: Risk,
}

/// Exact empirical risk minimizer within a class.
///
/// Every node tries `-inf`, the midpoints of its variable's distinct values
/// and `+inf`; leaves take majority labels (ties to 0). Among equally good
/// fits the lexicographically smallest threshold vector wins.
pub fn erm_in_class(desc: &ClassDescriptor, data: &Dataset, caps: &OracleCaps) -> Result<ErmFit> {
    check_variables(desc, data.p())?;
    let layout = desc.shape.bfs_layout();
    let k = desc.size();
    let candidates: Vec<Vec<f64>> = desc
        .variables
        .iter()
        .map(|&j| threshold_candidates((0..data.n()).map(|i| data.value(i, j))))
        .collect();
    let combos = candidates
        .iter()
        .fold(1u128, |acc, c| acc.saturating_mul(c.len() as u128));
    cap_check("in-class ERM", combos, caps.max_threshold_combos)?;

    let mut digits = vec![0usize; candidates.len()];
    let mut thresholds: Vec<f64> = candidates.iter().map(|c| c[0]).collect();
    let mut best: Option<(usize, Vec<f64>, Vec<Label>)> = None;
    loop {
        for (t, (c, &d)) in thresholds.iter_mut().zip(candidates.iter().zip(&digits)) {
            *t = c[d];
        }
        let mut counts = vec![[0usize; 2]; k];
        for (x, &y) in data.rows().zip(data.labels()) {
            counts[route(&layout, &desc.variables, &thresholds, x)][y as usize] += 1;
        }
        let errors: usize = counts.iter().map(|c| c[0].min(c[1])).sum();
        if best.as_ref().is_none_or(|b| errors < b.0) {
            let labels = counts.iter().map(|c| Label::from(c[1] > c[0])).collect();
            best = Some((errors, thresholds.clone(), labels));
        }
        if !odometer(&mut digits, |i| candidates[i].len()) {
            break;
        }
    }
    let (errors, thresholds, labels) = best.expect("at least one threshold assignment");
    Ok(ErmFit {
        tree: desc.instantiate(&thresholds, &labels)?,
        risk: Risk::new(errors, data.n()),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExhaustiveFit {
    pub tree: TreeClassifier,
    pub risk: Risk,
    pub cost: f64,
    pub class: ClassDescriptor,
}

/// Global minimizer of `P_n f + pen(|T|)` over every class with at most
/// `k_max` leaves. Ties go to the smaller tree, then to enumeration order.
pub fn exhaustive_select(
    data: &Dataset,
    spec: &PenaltySpec,
    k_max: usize,
    caps: &OracleCaps,
) -> Result<ExhaustiveFit> {
    spec.validate()?;
    if k_max == 0 {
        return Err(Error::Parameter("k_max must be >= 1".into()));
    }
    let (n, p) = (data.n(), data.p());
    let mut total: u128 = 0;
    for k in 1..=k_max {
        total += u128::from(class_count(p as u32, k as u32)?);
    }
    cap_check("exhaustive selection", total, caps.max_classes)?;

    let mut best: Option<ExhaustiveFit> = None;
    for k in 1..=k_max {
        let pen = spec.value(k, n, p);
        for class in enumerate_classes(p, k, caps)?.classes {
            let fit = erm_in_class(&class, data, caps)?;
            let cost = fit.risk.value() + pen;
            if best.as_ref().is_none_or(|b| cost < b.cost) {
                best = Some(ExhaustiveFit {
                    tree: fit.tree,
                    risk: fit.risk,
                    cost,
                    class,
                });
            }
        }
    }
    Ok(best.expect("k_max >= 1"))
}

/// Number of distinct subsets `{x in sample : f(x) = 1}` realized by the
/// members of a class. The sample holds at most 64 points.
pub fn shattering_count(desc: &ClassDescriptor, sample: &[Vec<f64>], caps: &OracleCaps) -> Result<u64> {
    if sample.len() > 64 {
        return Err(Error::Input("shattering counts support at most 64 points".into()));
    }
    let p = sample.first().map_or(0, Vec::len);
    if sample.iter().any(|x| x.len() != p) {
        return Err(Error::Input("ragged sample".into()));
    }
    check_variables(desc, p)?;
    let layout = desc.shape.bfs_layout();
    let k = desc.size();
    let candidates: Vec<Vec<f64>> = desc
        .variables
        .iter()
        .map(|&j| threshold_candidates(sample.iter().map(|x| x[j])))
        .collect();
    let combos = candidates
        .iter()
        .fold(1u128, |acc, c| acc.saturating_mul(c.len() as u128));
    cap_check("shattering enumeration", combos << k.min(64), caps.max_threshold_combos)?;

    // Distinct partitions of the sample into leaves.
    let mut partitions: HashSet<Vec<usize>> = HashSet::new();
    let mut digits = vec![0usize; candidates.len()];
    let mut thresholds = vec![0.0; candidates.len()];
    loop {
        for (t, (c, &d)) in thresholds.iter_mut().zip(candidates.iter().zip(&digits)) {
            *t = c[d];
        }
        partitions.insert(
            sample
                .iter()
                .map(|x| route(&layout, &desc.variables, &thresholds, x))
                .collect(),
        );
        if !odometer(&mut digits, |i| candidates[i].len()) {
            break;
        }
    }

    let mut subsets: HashSet<u64> = HashSet::new();
    for leaf_of in &partitions {
        for labeling in 0u64..(1u64 << k) {
            let mask = leaf_of
                .iter()
                .enumerate()
                .filter(|(_, &leaf)| labeling >> leaf & 1 == 1)
                .fold(0u64, |m, (i, _)| m | 1 << i);
            subsets.insert(mask);
        }
    }
    Ok(subsets.len() as u64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubtreeFit<C> {
    pub tree: TreeClassifier,
    pub risk: Risk,
    pub cost: C,
}

/// Number of pruned subtrees of `tree` (including `tree` itself).
pub fn pruned_subtree_count(tree: &TreeClassifier) -> u128 {
    fn go(t: &TreeClassifier, id: NodeId) -> u128 {
        match *t.node(id) {
            Node::Leaf { .. } => 1,
            Node::Internal { left, right, .. } => 1u128.saturating_add(go(t, left).saturating_mul(go(t, right))),
        }
    }
    go(tree, tree.root())
}

/// Penalized-cost minimizer over every pruned subtree of `tree`, with leaf
/// labels re-optimized on `data`. Ties go to the smaller tree.
pub fn brute_force_best_subtree<C: Cost>(
    tree: &TreeClassifier,
    data: &Dataset,
    pen: impl Fn(usize) -> C,
    caps: &OracleCaps,
) -> Result<SubtreeFit<C>> {
    cap_check("pruned-subtree enumeration", pruned_subtree_count(tree), caps.max_subtrees)?;
    if tree.max_feature().is_some_and(|m| m >= data.p()) {
        return Err(Error::Input("tree uses a variable beyond the data".into()));
    }
    let mut counts = vec![[0usize; 2]; tree.nodes().len()];
    for (x, &y) in data.rows().zip(data.labels()) {
        let mut id = tree.root();
        loop {
            counts[id][y as usize] += 1;
            match *tree.node(id) {
                Node::Leaf { .. } => break,
                Node::Internal { feature, threshold, left, right } => {
                    id = if x[feature] > threshold { right } else { left };
                }
            }
        }
    }

    /// (errors, leaves, nodes turned into leaves)
    type Pruning = (usize, usize, Vec<NodeId>);
    fn options(t: &TreeClassifier, counts: &[[usize; 2]], id: NodeId) -> Vec<Pruning> {
        let here = (counts[id][0].min(counts[id][1]), 1, vec![id]);
        match *t.node(id) {
            Node::Leaf { .. } => vec![here],
            Node::Internal { left, right, .. } => {
                let ls = options(t, counts, left);
                let rs = options(t, counts, right);
                let mut out = vec![here];
                for l in &ls {
                    for r in &rs {
                        let mut cut = l.2.clone();
                        cut.extend_from_slice(&r.2);
                        out.push((l.0 + r.0, l.1 + r.1, cut));
                    }
                }
                out
            }
        }
    }

    let mut best: Option<(C, Pruning)> = None;
    for opt in options(tree, &counts, tree.root()) {
        let cost = C::from_risk(Risk::new(opt.0, data.n())) + pen(opt.1);
        let better = match &best {
            None => true,
            Some((c, b)) => cost < *c || (cost == *c && opt.1 < b.1),
        };
        if better {
            best = Some((cost, opt));
        }
    }
    let (cost, (errors, _, cut)) = best.expect("at least the root leaf");

    fn build(t: &TreeClassifier, counts: &[[usize; 2]], cut: &HashSet<NodeId>, id: NodeId) -> TreeClassifier {
        match *t.node(id) {
            Node::Internal { feature, threshold, left, right } if !cut.contains(&id) => TreeClassifier::split(
                feature,
                threshold,
                build(t, counts, cut, left),
                build(t, counts, cut, right),
            ),
            _ => TreeClassifier::leaf(Label::from(counts[id][1] > counts[id][0])),
        }
    }
    let cut: HashSet<NodeId> = cut.into_iter().collect();
    Ok(SubtreeFit {
        tree: build(tree, &counts, &cut, tree.root()),
        risk: Risk::new(errors, data.n()),
        cost,
    })
}
