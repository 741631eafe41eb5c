//! CART-style growing with the misclassification count as node impurity.
//!
//! `best_split` only reports splits that strictly lower the number of
//! misclassified rows. `grow_maximal` prefers such splits but falls back to
//! the first separating split of an impure node, so rows with distinct
//! features end up perfectly classified and leaves never outnumber rows.
//! Ties between
//! equally good splits go to the smallest variable index, then the smallest
//! threshold; leaf labels are majority votes with ties resolved to 0.

use crate::data::{Dataset, Label};
use crate::tree::{Node, TreeClassifier};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GrowLimits {
    /// `None` grows until every leaf is pure or holds identical rows.
    pub max_leaves: Option<usize>,
    /// Minimum number of rows in each child of a split.
    pub min_node_size: usize,
}

impl Default for GrowLimits {
    fn default() -> Self {
        Self {
            max_leaves: None,
            min_node_size: 1,
        }
    }
}

impl GrowLimits {
    pub fn with_max_leaves(max_leaves: usize) -> Self {
        Self {
            max_leaves: Some(max_leaves.max(1)),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    /// Zero-based feature index.
    pub feature: usize,
    pub threshold: f64,
    pub left_label: Label,
    pub right_label: Label,
    /// Misclassified rows of the two children under majority labels.
    pub errors: usize,
}

pub(crate) fn majority(zeros: usize, ones: usize) -> Label {
    Label::from(ones > zeros)
}

/// Feature values laid out column-major for scanning.
struct Columns {
    p: usize,
    n: usize,
    values: Vec<f64>,
}

impl Columns {
    fn new(data: &Dataset) -> Self {
        let (n, p) = (data.n(), data.p());
        let mut values = vec![0.0; n * p];
        for i in 0..n {
            for (j, &v) in data.row(i).iter().enumerate() {
                values[j * n + i] = v;
            }
        }
        Self { p, n, values }
    }

    #[inline]
    fn get(&self, row: u32, j: usize) -> f64 {
        self.values[j * self.n + row as usize]
    }
}

/// Midpoint threshold that keeps `lo` on the left and `hi` on the right
/// even when the two values are adjacent floats.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid >= hi || mid < lo {
        lo
    } else {
        mid
    }
}

/// Scan every feature of a node given its rows sorted by each feature.
fn scan(
    cols: &Columns,
    labels: &[Label],
    sorted: &[Vec<u32>],
    min_node_size: usize,
    allow_zero_gain: bool,
) -> Option<SplitCandidate> {
    let rows = &sorted[0];
    let m = rows.len();
    let ones = rows.iter().filter(|&&r| labels[r as usize] == 1).count();
    let zeros = m - ones;
    let mut best_errors = zeros.min(ones);
    if best_errors == 0 {
        return None;
    }
    if allow_zero_gain {
        // Child errors never exceed the parent's, so this admits ties.
        best_errors += 1;
    }
    let min_size = min_node_size.max(1);
    let mut best = None;
    for (j, order) in sorted.iter().enumerate().take(cols.p) {
        let (mut l0, mut l1) = (0usize, 0usize);
        for i in 0..m.saturating_sub(1) {
            let r = order[i];
            if labels[r as usize] == 1 {
                l1 += 1;
            } else {
                l0 += 1;
            }
            let left_size = i + 1;
            if left_size < min_size || m - left_size < min_size {
                continue;
            }
            let (lo, hi) = (cols.get(r, j), cols.get(order[i + 1], j));
            if lo == hi {
                continue;
            }
            let (r0, r1) = (zeros - l0, ones - l1);
            let errors = l0.min(l1) + r0.min(r1);
            if errors < best_errors {
                best_errors = errors;
                best = Some(SplitCandidate {
                    feature: j,
                    threshold: midpoint(lo, hi),
                    left_label: majority(l0, l1),
                    right_label: majority(r0, r1),
                    errors,
                });
            }
        }
    }
    best
}

fn sort_rows(cols: &Columns, rows: &[u32]) -> Vec<Vec<u32>> {
    (0..cols.p)
        .map(|j| {
            let mut order = rows.to_vec();
            order.sort_by(|&a, &b| cols.get(a, j).total_cmp(&cols.get(b, j)).then(a.cmp(&b)));
            order
        })
        .collect()
}

/// Best split of the rows `subset` of `data`, or `None` when the subset is
/// pure or no split strictly reduces its misclassification count.
pub fn best_split(data: &Dataset, subset: &[usize]) -> Option<SplitCandidate> {
    if subset.is_empty() {
        return None;
    }
    let cols = Columns::new(data);
    let rows: Vec<u32> = subset.iter().map(|&i| i as u32).collect();
    scan(&cols, data.labels(), &sort_rows(&cols, &rows), 1, false)
}

struct Frontier {
    slot: usize,
    sorted: Vec<Vec<u32>>,
    parent_errors: usize,
    split: SplitCandidate,
    order: usize,
}

/// Grow the maximal tree `T_max` on `data`.
///
/// Leaves are expanded best-first (largest error reduction, then creation
/// order). Without a leaf cap the expansion order does not affect the
/// result.
pub fn grow_maximal(data: &Dataset, limits: GrowLimits) -> TreeClassifier {
    let cols = Columns::new(data);
    let labels = data.labels();
    let all: Vec<u32> = (0..data.n() as u32).collect();
    let (zeros, ones) = data.class_counts();

    let mut nodes = vec![Node::Leaf {
        label: majority(zeros, ones),
    }];
    let mut leaves = 1usize;
    let mut frontier: Vec<Frontier> = Vec::new();
    let mut created = 0usize;
    let mut push = |frontier: &mut Vec<Frontier>, slot: usize, sorted: Vec<Vec<u32>>| {
        let m = sorted[0].len();
        let ones = sorted[0].iter().filter(|&&r| labels[r as usize] == 1).count();
        if let Some(split) = scan(&cols, labels, &sorted, limits.min_node_size, true) {
            frontier.push(Frontier {
                slot,
                sorted,
                parent_errors: ones.min(m - ones),
                split,
                order: created,
            });
        }
        created += 1;
    };
    push(&mut frontier, 0, sort_rows(&cols, &all));

    let mut go_right = vec![false; data.n()];
    while limits.max_leaves.is_none_or(|cap| leaves < cap) {
        let Some(pick) = frontier
            .iter()
            .enumerate()
            .max_by(|(_, a), (_, b)| {
                (a.parent_errors - a.split.errors)
                    .cmp(&(b.parent_errors - b.split.errors))
                    .then(b.order.cmp(&a.order))
            })
            .map(|(i, _)| i)
        else {
            break;
        };
        let node = frontier.swap_remove(pick);
        let split = node.split;
        for &r in &node.sorted[0] {
            go_right[r as usize] = cols.get(r, split.feature) > split.threshold;
        }
        let (mut left, mut right): (Vec<Vec<u32>>, Vec<Vec<u32>>) = node
            .sorted
            .iter()
            .map(|order| order.iter().partition::<Vec<u32>, _>(|&&r| !go_right[r as usize]))
            .unzip();
        left.shrink_to_fit();
        right.shrink_to_fit();

        let l = nodes.len();
        nodes.push(Node::Leaf {
            label: split.left_label,
        });
        nodes.push(Node::Leaf {
            label: split.right_label,
        });
        nodes[node.slot] = Node::Internal {
            feature: split.feature,
            threshold: split.threshold,
            left: l,
            right: l + 1,
        };
        leaves += 1;
        push(&mut frontier, l, left);
        push(&mut frontier, l + 1, right);
    }
    TreeClassifier::from_nodes(nodes, 0).expect("grown arena is a valid tree")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    fn one_feature(x: &[f64], y: &[Label]) -> Dataset {
        let rows: Vec<Vec<f64>> = x.iter().map(|&v| vec![v, 0.0]).collect();
        Dataset::from_rows(&rows, y).unwrap()
    }

    /// Exhaustive reference: every variable, every midpoint, strict improvement.
    fn naive_best_split(data: &Dataset) -> Option<(usize, f64, usize)> {
        let (z, o) = data.class_counts();
        let mut best: Option<(usize, f64, usize)> = None;
        let mut best_err = z.min(o);
        for j in 0..data.p() {
            let mut vals = data.column(j);
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            for w in vals.windows(2) {
                let s = (w[0] + w[1]) / 2.0;
                let mut c = [[0usize; 2]; 2];
                for (x, &y) in data.rows().zip(data.labels()) {
                    c[usize::from(x[j] > s)][y as usize] += 1;
                }
                let err = c[0][0].min(c[0][1]) + c[1][0].min(c[1][1]);
                if err < best_err {
                    best_err = err;
                    best = Some((j, s, err));
                }
            }
        }
        best
    }

    #[test]
    fn best_split_examples() {
        let d = one_feature(&[1.0, 2.0, 3.0, 4.0], &[0, 0, 1, 1]);
        let s = best_split(&d, &[0, 1, 2, 3]).unwrap();
        assert_eq!((s.feature, s.threshold, s.left_label, s.right_label, s.errors), (0, 2.5, 0, 1, 0));

        let d = one_feature(&[1.0, 2.0], &[1, 1]);
        assert_eq!(best_split(&d, &[0, 1]), None);

        let d = Dataset::from_rows(&[vec![0.0, 0.0], vec![1.0, 1.0]], &[0, 1]).unwrap();
        assert_eq!(best_split(&d, &[0, 1]).unwrap().feature, 0);
        assert_eq!(best_split(&d, &[]), None);
    }

    #[test]
    fn best_split_respects_subset() {
        let d = one_feature(&[1.0, 2.0, 3.0, 4.0], &[0, 1, 1, 0]);
        let s = best_split(&d, &[1, 2, 3]).unwrap();
        assert_eq!((s.threshold, s.errors), (3.5, 0));
    }

    #[test]
    fn grow_examples() {
        let d = one_feature(&[1.0, 2.0, 3.0, 4.0], &[0, 0, 1, 1]);
        let t = grow_maximal(&d, GrowLimits::default());
        assert_eq!(t, TreeClassifier::stump(0, 2.5, 0, 1));

        let d = one_feature(&[1.0, 1.0], &[0, 1]);
        let t = grow_maximal(&d, GrowLimits::default());
        assert_eq!(t, TreeClassifier::leaf(0));
        assert_eq!(t.empirical_risk(&d).unwrap(), 0.5);

        let d = one_feature(&[1.0, 2.0, 3.0, 4.0], &[0, 1, 1, 0]);
        let t = grow_maximal(&d, GrowLimits::default());
        assert_eq!(t.to_string(), "node(1, 1.5, leaf(0), node(1, 3.5, leaf(1), leaf(0)))");
        assert_eq!(t.empirical_risk(&d).unwrap(), 0.0);
    }

    #[test]
    fn leaf_cap_and_min_node_size() {
        let d = one_feature(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], &[0, 1, 0, 1, 0, 1]);
        assert_eq!(grow_maximal(&d, GrowLimits::default()).size(), 6);
        for cap in 1..=6 {
            assert!(grow_maximal(&d, GrowLimits::with_max_leaves(cap)).size() <= cap);
        }
        let limits = GrowLimits {
            max_leaves: None,
            min_node_size: 2,
        };
        let t = grow_maximal(&d, limits);
        assert!(t.size() < 6);
    }

    fn random_data(seed: u64, n: usize, p: usize, levels: u32) -> Dataset {
        use rand::Rng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..p).map(|_| f64::from(rng.random_range(0..levels))).collect())
            .collect();
        let y: Vec<Label> = (0..n).map(|_| rng.random_range(0..2)).collect();
        Dataset::from_rows(&rows, &y).unwrap()
    }

    proptest! {
        #[test]
        fn scan_matches_naive(seed in 0u64..10_000, n in 1usize..25) {
            let d = random_data(seed, n, 3, 5);
            let all: Vec<usize> = (0..n).collect();
            let fast = best_split(&d, &all).map(|s| (s.feature, s.threshold, s.errors));
            prop_assert_eq!(fast, naive_best_split(&d));
        }

        #[test]
        fn distinct_rows_fit_perfectly(seed in 0u64..10_000, n in 1usize..40) {
            let mut d = random_data(seed, n, 2, 1000);
            // Force distinct rows by making the second column the row index.
            let rows: Vec<Vec<f64>> = d.rows().enumerate().map(|(i, r)| vec![r[0], i as f64]).collect();
            d = Dataset::from_rows(&rows, d.labels()).unwrap();
            let t = grow_maximal(&d, GrowLimits::default());
            prop_assert_eq!(t.empirical_risk(&d).unwrap(), 0.0);
            prop_assert!(t.size() <= n);
        }

        #[test]
        fn row_permutation_invariance(seed in 0u64..10_000, n in 2usize..30) {
            let d = random_data(seed, n, 3, 4);
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 1));
            let shuffled = d.subset(&perm).unwrap();
            let a = grow_maximal(&d, GrowLimits::default());
            let b = grow_maximal(&shuffled, GrowLimits::default());
            prop_assert_eq!(a.to_string(), b.to_string());
            prop_assert!(a.size() <= n);
        }
    }
}
