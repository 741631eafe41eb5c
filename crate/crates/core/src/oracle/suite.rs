//! Oracle verification suite behind the `verify` subcommand.
//!
//! Each check draws its instances from a seeded generator and reports a
//! single pass/fail line with a short diagnostic.

use std::fmt;

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    brute_force_best_subtree, catalan, class_count, enumerate_classes, enumerate_shapes,
    exhaustive_select, shattering_count, OracleCaps,
};
use crate::data::{self, bayes_label, bayes_risk, Dataset, Design, DesignSpec, Label};
use crate::error::Result;
use crate::grow::{grow_maximal, GrowLimits};
use crate::prune::{prune_with_penalty, weakest_link};
use crate::select::{select_tree, MarginParams, PenaltySpec};
use crate::tree::TreeClassifier;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{status}] {}: {}", self.name, self.detail)
    }
}

/// Catalan numbers against shape enumeration for `k <= max_shape_k`, and
/// class enumeration length against `p^(k-1) catalan(k)` for `p <= max_p`,
/// `k <= max_k`.
pub fn counting_lemmas(max_shape_k: u32, max_p: usize, max_k: usize) -> Result<CheckReport> {
    let mut failures = Vec::new();
    let mut values = Vec::new();
    for k in 1..=max_shape_k {
        let formula = catalan(k)?;
        let shapes = enumerate_shapes(k as usize).len() as u64;
        values.push(formula.to_string());
        if formula != shapes {
            failures.push(format!("catalan({k}) = {formula} but {shapes} shapes"));
        }
    }
    let caps = OracleCaps::default();
    let mut checked = 0;
    for p in 2..=max_p {
        for k in 1..=max_k {
            let listed = enumerate_classes(p, k, &caps)?.classes.len() as u64;
            let counted = class_count(p as u32, k as u32)?;
            checked += 1;
            if listed != counted {
                failures.push(format!("p={p} k={k}: {listed} enumerated, {counted} counted"));
            }
        }
    }
    Ok(CheckReport {
        name: "counting lemmas",
        passed: failures.is_empty(),
        detail: if failures.is_empty() {
            format!("catalan = [{}], {checked} (p, k) enumerations match", values.join(", "))
        } else {
            failures.join("; ")
        },
    })
}

/// `ln(shattering count) <= k ln(2n)` for every class with at most `max_k`
/// leaves over `p` variables, on `samples` random samples of size
/// `1..=max_n`.
pub fn entropy_bound(samples: usize, max_n: usize, max_k: usize, p: usize, seed: u64) -> Result<CheckReport> {
    let caps = OracleCaps::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let classes: Vec<_> = (1..=max_k)
        .map(|k| enumerate_classes(p, k, &caps))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flat_map(|e| e.classes)
        .collect();
    let mut worst = f64::NEG_INFINITY;
    let mut failures = 0;
    let mut evaluated = 0;
    for _ in 0..samples {
        let n = rng.random_range(1..=max_n);
        // Coarse values so that ties occur.
        let sample: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..p).map(|_| f64::from(rng.random_range(0..5u8))).collect())
            .collect();
        for class in &classes {
            let count = shattering_count(class, &sample, &caps)?;
            let k = class.size() as f64;
            let slack = (count as f64).ln() - k * (2.0 * n as f64).ln();
            worst = worst.max(slack);
            evaluated += 1;
            if slack > 0.0 {
                failures += 1;
            }
        }
    }
    Ok(CheckReport {
        name: "entropy bound",
        passed: failures == 0,
        detail: format!(
            "{evaluated} (class, sample) pairs, {failures} violations, max ln(count) - k ln(2n) = {worst:.4}"
        ),
    })
}

/// Random instance for the pruning checks: `n <= max_n` rows over two
/// coarse variables whose maximal tree has at most `max_leaves` leaves.
pub fn random_pruning_instance(rng: &mut ChaCha8Rng, max_n: usize, max_leaves: usize) -> (Dataset, TreeClassifier) {
    loop {
        let n = rng.random_range(2..=max_n);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![f64::from(rng.random_range(0..6u8)), f64::from(rng.random_range(0..6u8))])
            .collect();
        let labels: Vec<Label> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let data = Dataset::from_rows(&rows, &labels).expect("valid random rows");
        let tree = grow_maximal(&data, GrowLimits::default());
        if tree.size() <= max_leaves {
            return (data, tree);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PruningReport {
    pub linear: CheckReport,
    pub subadditive: CheckReport,
}

/// Weakest-link optimality against brute force with exact linear
/// penalties, and the subadditive-penalty property with `c sqrt(k)`.
pub fn pruning_optimality(
    datasets: usize,
    max_n: usize,
    max_leaves: usize,
    alphas_per_dataset: usize,
    sqrt_constants_per_dataset: usize,
    seed: u64,
) -> Result<PruningReport> {
    let caps = OracleCaps::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut lin_checked, mut lin_fail) = (0usize, Vec::new());
    let (mut sub_checked, mut sub_fail) = (0usize, Vec::new());
    let mut sizes = 0usize;
    for d in 0..datasets {
        let (data, tree) = random_pruning_instance(&mut rng, max_n, max_leaves);
        sizes += tree.size();
        let seq = weakest_link(&tree, &data)?;

        let mut alphas: Vec<Ratio<i64>> = (0..alphas_per_dataset)
            .map(|_| Ratio::new(rng.random_range(0..=700), 1000))
            .collect();
        alphas.extend_from_slice(seq.alphas());
        for alpha in alphas {
            let k = seq.active_index(alpha);
            let active = seq.risks()[k].ratio() + alpha * Ratio::from_integer(seq.subtree(k).size() as i64);
            let brute = brute_force_best_subtree(&tree, &data, |s| alpha * Ratio::from_integer(s as i64), &caps)?;
            lin_checked += 1;
            if active != brute.cost {
                lin_fail.push(format!("dataset {d} alpha {alpha}: {active} vs {}", brute.cost));
            }
        }

        for _ in 0..sqrt_constants_per_dataset {
            let c: f64 = rng.random_range(0.001..0.6);
            let pen = |s: usize| c * (s as f64).sqrt();
            let chosen = prune_with_penalty(&seq, pen);
            let brute = brute_force_best_subtree(&tree, &data, pen, &caps)?;
            sub_checked += 1;
            if chosen.cost != brute.cost {
                sub_fail.push(format!("dataset {d} c {c}: {} vs {}", chosen.cost, brute.cost));
            }
        }
    }
    let mean_size = sizes as f64 / datasets.max(1) as f64;
    let summarize = |checked: usize, fail: &[String]| {
        if fail.is_empty() {
            format!("{checked} comparisons over {datasets} datasets (mean |T_max| = {mean_size:.2}), all equal")
        } else {
            format!("{} of {checked} differ; first: {}", fail.len(), fail[0])
        }
    };
    Ok(PruningReport {
        linear: CheckReport {
            name: "pruning optimality",
            passed: lin_fail.is_empty(),
            detail: summarize(lin_checked, &lin_fail),
        },
        subadditive: CheckReport {
            name: "subadditive penalty",
            passed: sub_fail.is_empty(),
            detail: summarize(sub_checked, &sub_fail),
        },
    })
}

/// Exhaustive selection never loses to grow-then-prune with the same leaf
/// budget. The equality rate is diagnostic only.
pub fn heuristic_vs_exhaustive(
    datasets: usize,
    n: usize,
    p: usize,
    k_max: usize,
    alphas: &[f64],
    seed: u64,
) -> Result<CheckReport> {
    let caps = OracleCaps::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let limits = GrowLimits::with_max_leaves(k_max);
    let (mut compared, mut equal, mut violations) = (0usize, 0usize, 0usize);
    for _ in 0..datasets {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..p).map(|_| rng.random_range(0.0..1.0)).collect())
            .collect();
        let labels: Vec<Label> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let data = Dataset::from_rows(&rows, &labels)?;
        for &alpha in alphas {
            let spec = PenaltySpec::Linear { alpha };
            let exact = exhaustive_select(&data, &spec, k_max, &caps)?;
            let heuristic = select_tree(&data, &spec, limits)?;
            compared += 1;
            if exact.cost > heuristic.cost {
                violations += 1;
            } else if exact.cost == heuristic.cost {
                equal += 1;
            }
        }
    }
    Ok(CheckReport {
        name: "heuristic vs exhaustive",
        passed: violations == 0,
        detail: format!(
            "{compared} comparisons, {violations} where the heuristic wins, equality rate {:.3}",
            equal as f64 / compared.max(1) as f64
        ),
    })
}

/// Distance in units in the last place.
pub fn ulps(a: f64, b: f64) -> u64 {
    let key = |x: f64| {
        let bits = x.to_bits() as i64;
        if bits < 0 {
            i64::MIN - bits
        } else {
            bits
        }
    };
    key(a).abs_diff(key(b))
}

/// Margin-adaptive penalty at `kappa = 1` against its linear form on a
/// `10 x 10 x 10` grid of `(k, n, p)`.
pub fn kappa_one_collapse(seed: u64) -> CheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ks = [1usize, 2, 3, 5, 8, 13, 21, 34, 55, 89];
    let ns = [1usize, 2, 10, 50, 100, 200, 500, 1000, 5000, 100_000];
    let ps = [2usize, 3, 10, 30, 60, 125, 250, 500, 1000, 10_000];
    let mut worst = 0;
    let mut points = 0;
    for &k in &ks {
        for &n in &ns {
            for &p in &ps {
                let c1: f64 = rng.random_range(0.01..5.0);
                let c2: f64 = rng.random_range(0.01..5.0);
                let spec = PenaltySpec::MarginAdaptive(MarginParams { kappa: 1.0, c1, c2 });
                let (kf, nf, pf) = (k as f64, n as f64, p as f64);
                let linear = kf * (c1 * (2.0 * nf).ln() + c2 * pf.ln()) / nf;
                worst = worst.max(ulps(spec.value(k, n, p), linear));
                points += 1;
            }
        }
    }
    CheckReport {
        name: "kappa = 1 collapse",
        passed: worst <= 1,
        detail: format!("{points} grid points, max deviation {worst} ulp"),
    }
}

/// Monte Carlo risk of the analytic Bayes rule against `bayes_risk`,
/// within three standard errors.
pub fn design_analytics(m: usize, seed: u64) -> Result<CheckReport> {
    let cases = [
        (Design::One, 0.1),
        (Design::One, 0.2),
        (Design::One, 0.3),
        (Design::Two, 0.5),
        (Design::Two, 1.0),
        (Design::Two, 2.0),
        (Design::Three, 1.0),
        (Design::Four, 0.2),
    ];
    let mut lines = Vec::new();
    let mut passed = true;
    for (i, &(design, noise)) in cases.iter().enumerate() {
        let p = if design == Design::Four { 3 } else { 2 };
        let spec = DesignSpec::new(design, m, p, noise, crate::rng::derive(seed, &[i as u64]))?;
        let d = data::generate(&spec)?;
        let mut errors = 0usize;
        for (x, &y) in d.rows().zip(d.labels()) {
            if bayes_label(&spec, x)? != y {
                errors += 1;
            }
        }
        let risk = errors as f64 / m as f64;
        let se = (risk * (1.0 - risk) / m as f64).sqrt();
        let target = bayes_risk(&spec);
        let ok = (risk - target).abs() <= 3.0 * se;
        passed &= ok;
        lines.push(format!("d{design}({noise}) {risk:.4}/{target:.4}{}", if ok { "" } else { " !" }));
    }
    Ok(CheckReport {
        name: "design analytics",
        passed,
        detail: lines.join(", "),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Scales instance counts; 1 runs the full-size suite.
    pub quick: bool,
}

/// Run every check and return one report per check.
pub fn run_all(cfg: SuiteConfig) -> Result<Vec<CheckReport>> {
    let scale = |full: usize| if cfg.quick { (full / 10).max(1) } else { full };
    let mut out = vec![counting_lemmas(7, 4, 4)?];
    out.push(entropy_bound(scale(100), 6, 3, 2, cfg.seed)?);
    let pruning = pruning_optimality(scale(200), 12, 6, 50, 10, cfg.seed)?;
    out.push(pruning.linear);
    out.push(pruning.subadditive);
    out.push(heuristic_vs_exhaustive(scale(100), 8, 2, 3, &[0.0, 0.02, 0.05, 0.1, 0.2], cfg.seed)?);
    out.push(kappa_one_collapse(cfg.seed));
    out.push(design_analytics(scale(100_000), cfg.seed)?);
    Ok(out)
}
