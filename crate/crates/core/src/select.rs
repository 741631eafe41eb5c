//! Size-based penalties and penalized tree selection.
//!
//! All logarithms are natural.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::grow::{grow_maximal, majority, GrowLimits};
use crate::prune::{prune_with_penalty, weakest_link, PrunedSequence};
use crate::rng;
use crate::tree::TreeClassifier;

/// Constants of the margin-adaptive penalty
/// `c1 (k ln(2n) / n)^e + c2 (k ln p / n)^e` with `e = kappa / (2 kappa - 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginParams {
    pub kappa: f64,
    pub c1: f64,
    pub c2: f64,
}

/// Constants of the VC penalty `c1 sqrt(k ln n / n) + c2 k / n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VcParams {
    pub c1: f64,
    pub c2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PenaltySpec {
    /// `alpha * k`, the CART cost-complexity penalty.
    Linear { alpha: f64 },
    MarginAdaptive(MarginParams),
    Vc(VcParams),
    /// Pointwise minimum of the margin-adaptive and VC penalties.
    MinCombined { margin: MarginParams, vc: VcParams },
    /// `c1 sqrt(k p ln n / n)`.
    Nobel { c1: f64 },
    /// `c2 p ln p (1 + ln(n / ln p)) k / n`, floored at 0.
    Gey { c2: f64 },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} must be > 0, got {v}")))
    }
}

impl MarginParams {
    fn validate(&self) -> Result<()> {
        if !(self.kappa >= 1.0 && self.kappa.is_finite()) {
            return Err(Error::Parameter(format!("kappa must be >= 1, got {}", self.kappa)));
        }
        positive("c1", self.c1)?;
        positive("c2", self.c2)
    }

    fn value(&self, k: f64, n: f64, p: f64) -> f64 {
        let log2n = (2.0 * n).ln();
        let logp = p.ln();
        if self.kappa == 1.0 {
            // Exponent 1: the penalty is linear in k with slope
            // (c1 ln(2n) + c2 ln p) / n.
            k * (self.c1 * log2n + self.c2 * logp) / n
        } else {
            let e = self.kappa / (2.0 * self.kappa - 1.0);
            self.c1 * (k * log2n / n).powf(e) + self.c2 * (k * logp / n).powf(e)
        }
    }
}

impl VcParams {
    fn validate(&self) -> Result<()> {
        positive("c1", self.c1)?;
        positive("c2", self.c2)
    }

    fn value(&self, k: f64, n: f64) -> f64 {
        self.c1 * (k * n.ln() / n).sqrt() + self.c2 * k / n
    }
}

impl PenaltySpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            PenaltySpec::Linear { alpha } => {
                if *alpha >= 0.0 && alpha.is_finite() {
                    Ok(())
                } else {
                    Err(Error::Parameter(format!("alpha must be >= 0, got {alpha}")))
                }
            }
            PenaltySpec::MarginAdaptive(m) => m.validate(),
            PenaltySpec::Vc(v) => v.validate(),
            PenaltySpec::MinCombined { margin, vc } => {
                margin.validate()?;
                vc.validate()
            }
            PenaltySpec::Nobel { c1 } => positive("c1", *c1),
            PenaltySpec::Gey { c2 } => positive("c2", *c2),
        }
    }

    /// Penalty of a tree with `k` leaves for `n` observations of `p`
    /// variables.
    pub fn value(&self, k: usize, n: usize, p: usize) -> f64 {
        debug_assert!(k >= 1 && n >= 1 && p >= 2);
        let (k, n, p) = (k as f64, n as f64, p as f64);
        match self {
            PenaltySpec::Linear { alpha } => alpha * k,
            PenaltySpec::MarginAdaptive(m) => m.value(k, n, p),
            PenaltySpec::Vc(v) => v.value(k, n),
            PenaltySpec::MinCombined { margin, vc } => margin.value(k, n, p).min(vc.value(k, n)),
            PenaltySpec::Nobel { c1 } => c1 * (k * p * n.ln() / n).sqrt(),
            PenaltySpec::Gey { c2 } => {
                let lp = p.ln();
                (c2 * p * lp * (1.0 + (n / lp).ln()) * k / n).max(0.0)
            }
        }
    }
}

/// Free-function form of [`PenaltySpec::value`].
pub fn penalty_value(spec: &PenaltySpec, k: usize, n: usize, p: usize) -> f64 {
    spec.value(k, n, p)
}

#[derive(Debug, Clone)]
pub struct Selection {
    pub tree: TreeClassifier,
    /// `P_n f + pen(|T|)` of the selected tree.
    pub cost: f64,
    pub sequence: PrunedSequence,
}

/// Grow `T_max`, prune it by weakest link and select the element of the
/// sequence minimizing the penalized empirical risk.
pub fn select_tree(data: &Dataset, spec: &PenaltySpec, limits: GrowLimits) -> Result<Selection> {
    spec.validate()?;
    let (n, p) = (data.n(), data.p());
    let tmax = grow_maximal(data, limits);
    let sequence = weakest_link(&tmax, data)?;
    let choice = prune_with_penalty(&sequence, |k| spec.value(k, n, p));
    Ok(Selection {
        tree: sequence.subtree(choice.index).clone(),
        cost: choice.cost,
        sequence,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CvRule {
    /// Smallest mean validation risk.
    #[default]
    Min,
    /// Largest alpha within one standard error of the minimum.
    OneSe,
}

impl FromStr for CvRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "min" => Ok(CvRule::Min),
            "1se" | "one-se" => Ok(CvRule::OneSe),
            _ => Err(Error::Parameter(format!("unknown CV rule `{s}`"))),
        }
    }
}

impl fmt::Display for CvRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CvRule::Min => "min",
            CvRule::OneSe => "1se",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CvConfig {
    pub folds: usize,
    pub rule: CvRule,
    pub seed: u64,
    pub limits: GrowLimits,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            folds: 10,
            rule: CvRule::Min,
            seed: 0,
            limits: GrowLimits::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CvOutcome {
    pub alpha: f64,
    pub tree: TreeClassifier,
    /// Candidate alphas, ascending.
    pub candidates: Vec<f64>,
    /// Pooled validation risk of each candidate.
    pub cv_risks: Vec<f64>,
}

/// One representative alpha per interval of the critical-value grid:
/// geometric midpoints, with 0 for the first interval and twice the last
/// critical value for the unbounded one.
pub fn candidate_alphas(seq: &PrunedSequence) -> Vec<f64> {
    let a = seq.alphas_f64();
    let mut out: Vec<f64> = a.windows(2).map(|w| (w[0] * w[1]).sqrt()).collect();
    if let Some(&last) = a.last() {
        if a.len() > 1 {
            out.push(2.0 * last);
        } else {
            out.push(0.0);
        }
    }
    out
}

/// Fold index of every row: a seeded shuffle dealt round-robin.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng::stream(seed, 0));
    let mut fold = vec![0; n];
    for (pos, &row) in perm.iter().enumerate() {
        fold[row] = pos % folds;
    }
    fold
}

/// Tune the linear penalty constant by Q-fold cross-validation.
pub fn cv_select_alpha(data: &Dataset, cfg: &CvConfig) -> Result<CvOutcome> {
    let n = data.n();
    if cfg.folds < 2 || cfg.folds > n {
        return Err(Error::Parameter(format!(
            "folds must be in 2..={n}, got {}",
            cfg.folds
        )));
    }
    if data.is_single_class() {
        let (zeros, ones) = data.class_counts();
        return Ok(CvOutcome {
            alpha: 0.0,
            tree: TreeClassifier::leaf(majority(zeros, ones)),
            candidates: vec![0.0],
            cv_risks: vec![zeros.min(ones) as f64 / n as f64],
        });
    }

    let full = weakest_link(&grow_maximal(data, cfg.limits), data)?;
    let candidates = candidate_alphas(&full);
    let fold = fold_assignment(n, cfg.folds, cfg.seed);

    let per_fold: Vec<Vec<usize>> = (0..cfg.folds)
        .into_par_iter()
        .map(|q| -> Result<Vec<usize>> {
            let (test, train): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| fold[i] == q);
            let train = data.subset(&train)?;
            let seq = weakest_link(&grow_maximal(&train, cfg.limits), &train)?;
            Ok(candidates
                .iter()
                .map(|&alpha| {
                    let pick = prune_with_penalty(&seq, |k| alpha * k as f64);
                    let tree = seq.subtree(pick.index);
                    test.iter()
                        .filter(|&&i| tree.predict(data.row(i)).ok() != Some(data.label(i)))
                        .count()
                })
                .collect())
        })
        .collect::<Result<_>>()?;

    let cv_risks: Vec<f64> = (0..candidates.len())
        .map(|c| per_fold.iter().map(|f| f[c]).sum::<usize>() as f64 / n as f64)
        .collect();

    let best = cv_risks.iter().copied().fold(f64::INFINITY, f64::min);
    let bound = match cfg.rule {
        CvRule::Min => best,
        CvRule::OneSe => best + (best * (1.0 - best) / n as f64).sqrt(),
    };
    // Largest candidate within the bound; ties go to the larger alpha.
    let pick = cv_risks
        .iter()
        .rposition(|&r| r <= bound)
        .expect("the minimum is within its own bound");
    let alpha = candidates[pick];
    let choice = prune_with_penalty(&full, |k| alpha * k as f64);
    Ok(CvOutcome {
        alpha,
        tree: full.subtree(choice.index).clone(),
        candidates,
        cv_risks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate, Design, DesignSpec};
    use crate::Label;
    use proptest::prelude::*;

    fn margin(kappa: f64) -> PenaltySpec {
        PenaltySpec::MarginAdaptive(MarginParams {
            kappa,
            c1: 1.0,
            c2: 1.0,
        })
    }

    #[test]
    fn penalty_examples() {
        assert!((PenaltySpec::Linear { alpha: 0.01 }.value(5, 10, 2) - 0.05).abs() < 1e-15);
        let v = margin(1.0).value(4, 100, 10);
        assert!((v - 4.0 * (200f64.ln() + 10f64.ln()) / 100.0).abs() < 1e-15);
        assert!((v - 0.30404).abs() < 1e-5);
        let v = margin(2.0).value(2, 64, 4);
        let direct = (2.0 * 128f64.ln() / 64.0).powf(2.0 / 3.0) + (2.0 * 4f64.ln() / 64.0).powf(2.0 / 3.0);
        assert!((v - direct).abs() < 1e-15);
        assert!((v - 0.4076).abs() < 5e-4, "{v}");
    }

    #[test]
    fn other_penalty_forms() {
        let (k, n, p) = (3usize, 100usize, 20usize);
        let (kf, nf, pf) = (3.0f64, 100.0f64, 20.0f64);
        let vc = PenaltySpec::Vc(VcParams { c1: 0.5, c2: 2.0 }).value(k, n, p);
        assert!((vc - (0.5 * (kf * nf.ln() / nf).sqrt() + 2.0 * kf / nf)).abs() < 1e-15);
        let nobel = PenaltySpec::Nobel { c1: 0.1 }.value(k, n, p);
        assert!((nobel - 0.1 * (kf * pf * nf.ln() / nf).sqrt()).abs() < 1e-15);
        let gey = PenaltySpec::Gey { c2: 0.01 }.value(k, n, p);
        assert!((gey - 0.01 * pf * pf.ln() * (1.0 + (nf / pf.ln()).ln()) * kf / nf).abs() < 1e-15);
        let m = MarginParams { kappa: 1.5, c1: 1.0, c2: 1.0 };
        let v = VcParams { c1: 1.0, c2: 1.0 };
        let min = PenaltySpec::MinCombined { margin: m, vc: v }.value(k, n, p);
        assert_eq!(
            min,
            PenaltySpec::MarginAdaptive(m).value(k, n, p).min(PenaltySpec::Vc(v).value(k, n, p))
        );
    }

    #[test]
    fn validation() {
        assert!(PenaltySpec::Linear { alpha: -1.0 }.validate().is_err());
        assert!(margin(0.5).validate().is_err());
        assert!(PenaltySpec::Vc(VcParams { c1: 0.0, c2: 1.0 }).validate().is_err());
        assert!(PenaltySpec::Nobel { c1: f64::NAN }.validate().is_err());
        assert!(margin(1.0).validate().is_ok());
    }

    #[test]
    fn crossover_with_vc() {
        for &(n, p) in &[(50usize, 2usize), (200, 30), (1000, 1000)] {
            let ma = margin(1.0);
            let vc = PenaltySpec::Vc(VcParams { c1: 1.0, c2: 1.0 });
            let above: Vec<bool> = (1..=n).map(|k| ma.value(k, n, p) > vc.value(k, n, p)).collect();
            let k_star = above.iter().rposition(|&b| !b).map_or(1, |i| i + 2);
            assert!(k_star <= n, "n={n} p={p}");
            assert!(above[k_star - 1..].iter().all(|&b| b));
        }
    }

    proptest! {
        #[test]
        fn kappa_one_is_linear(k in 1usize..500, n in 1usize..100_000, p in 2usize..10_000, c1 in 0.01f64..10.0, c2 in 0.01f64..10.0) {
            let m = PenaltySpec::MarginAdaptive(MarginParams { kappa: 1.0, c1, c2 });
            let alpha = (c1 * (2.0 * n as f64).ln() + c2 * (p as f64).ln()) / n as f64;
            let lin = k as f64 * (c1 * (2.0 * n as f64).ln() + c2 * (p as f64).ln()) / n as f64;
            prop_assert_eq!(m.value(k, n, p), lin);
            let direct = PenaltySpec::Linear { alpha }.value(k, n, p);
            prop_assert!((m.value(k, n, p) - direct).abs() <= 4.0 * f64::EPSILON * lin);
        }

        #[test]
        fn monotonicity(k in 1usize..200, n in 50usize..10_000, p in 2usize..1000, kappa in 1.0f64..5.0, c1 in 0.01f64..5.0, c2 in 0.01f64..5.0) {
            let specs = [
                PenaltySpec::Linear { alpha: c1 },
                PenaltySpec::MarginAdaptive(MarginParams { kappa, c1, c2 }),
                PenaltySpec::Vc(VcParams { c1, c2 }),
                PenaltySpec::MinCombined { margin: MarginParams { kappa, c1, c2 }, vc: VcParams { c1, c2 } },
                PenaltySpec::Nobel { c1 },
                PenaltySpec::Gey { c2 },
            ];
            for s in &specs {
                prop_assert!(s.value(k + 1, n, p) > s.value(k, n, p), "{:?} k", s);
                prop_assert!(s.value(k, n, p + 1) >= s.value(k, n, p), "{:?} p", s);
                prop_assert!(s.value(k, n, p) >= 0.0);
            }
            let m = &specs[1];
            prop_assert!(m.value(k, n + 1, p) < m.value(k, n, p));
        }
    }

    fn one_feature(x: &[f64], y: &[Label]) -> Dataset {
        let rows: Vec<Vec<f64>> = x.iter().map(|&v| vec![v, 0.0]).collect();
        Dataset::from_rows(&rows, y).unwrap()
    }

    #[test]
    fn select_tree_extremes() {
        let d = generate(&DesignSpec::new(Design::One, 60, 4, 0.2, 3).unwrap()).unwrap();
        let tmax = grow_maximal(&d, GrowLimits::default());
        let s = select_tree(&d, &PenaltySpec::Linear { alpha: 0.0 }, GrowLimits::default()).unwrap();
        assert_eq!(s.tree, tmax);
        assert_eq!(s.cost, 0.0);
        let s = select_tree(&d, &PenaltySpec::Linear { alpha: 1.0 }, GrowLimits::default()).unwrap();
        assert!(s.tree.is_leaf());
        let (z, o) = d.class_counts();
        assert_eq!(s.tree, TreeClassifier::leaf(majority(z, o)));
    }

    #[test]
    fn select_tree_cost_is_minimal_over_sequence() {
        let d = generate(&DesignSpec::new(Design::Two, 80, 5, 1.0, 9).unwrap()).unwrap();
        let spec = margin(1.5);
        let s = select_tree(&d, &spec, GrowLimits::default()).unwrap();
        for (t, r) in s.sequence.subtrees().iter().zip(s.sequence.risks()) {
            assert!(s.cost <= r.value() + spec.value(t.size(), d.n(), d.p()));
        }
    }

    #[test]
    fn cv_degenerate_and_errors() {
        let d = one_feature(&[1.0, 2.0, 3.0], &[1, 1, 1]);
        let out = cv_select_alpha(&d, &CvConfig { folds: 2, ..CvConfig::default() }).unwrap();
        assert_eq!((out.alpha, out.tree), (0.0, TreeClassifier::leaf(1)));
        assert!(cv_select_alpha(&d, &CvConfig { folds: 4, ..CvConfig::default() }).is_err());
        assert!(cv_select_alpha(&d, &CvConfig { folds: 1, ..CvConfig::default() }).is_err());
    }

    #[test]
    fn cv_contract() {
        for seed in 0..20 {
            let spec = DesignSpec::new(Design::One, 60, 8, 0.2, seed).unwrap();
            let d = generate(&spec).unwrap();
            for rule in [CvRule::Min, CvRule::OneSe] {
                let cfg = CvConfig { folds: 5, rule, seed, ..CvConfig::default() };
                let out = cv_select_alpha(&d, &cfg).unwrap();
                assert!(out.candidates.contains(&out.alpha));
                let full = weakest_link(&grow_maximal(&d, GrowLimits::default()), &d).unwrap();
                let pick = prune_with_penalty(&full, |k| out.alpha * k as f64);
                assert_eq!(&out.tree, full.subtree(pick.index));
                assert_eq!(cv_select_alpha(&d, &cfg).unwrap().alpha, out.alpha);
            }
        }
    }

    #[test]
    fn fold_assignment_is_balanced() {
        let f = fold_assignment(23, 5, 1);
        let mut sizes = [0; 5];
        for &q in &f {
            sizes[q] += 1;
        }
        assert_eq!(sizes, [5, 5, 5, 4, 4]);
    }
}
