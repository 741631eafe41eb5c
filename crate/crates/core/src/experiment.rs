//! Simulation study: CV-tuned `alpha_n` as a function of `ln p`.
//!
//! Every replication draws its data, fold assignment and test sample from
//! seeds derived from `(master_seed, design, n, p, noise, r)`. Replications
//! run on the rayon pool but are aggregated in grid order, so the output
//! files do not depend on the thread count.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::data::{generate, Design, DesignSpec};
use crate::error::{Error, Result};
use crate::rng;
use crate::select::{cv_select_alpha, CvConfig, CvRule};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub designs: Vec<Design>,
    pub n_grid: Vec<usize>,
    pub p_grid: Vec<usize>,
    /// Noise levels per design: `q` for design 1, `sigma^2` otherwise.
    pub noise_grid: BTreeMap<Design, Vec<f64>>,
    pub replications: usize,
    pub folds: usize,
    pub rule: CvRule,
    pub master_seed: u64,
    /// Size of the fresh sample used to estimate each test loss.
    pub test_size: usize,
    pub output: PathBuf,
}

pub fn default_noise(design: Design) -> Vec<f64> {
    match design {
        Design::One => vec![0.1, 0.2, 0.3],
        Design::Two | Design::Three => vec![0.5, 1.0, 2.0],
        Design::Four => vec![0.2],
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            designs: Design::ALL.to_vec(),
            n_grid: vec![50, 100, 200],
            p_grid: vec![30, 60, 125, 250, 500, 1000],
            noise_grid: Design::ALL.iter().map(|&d| (d, default_noise(d))).collect(),
            replications: 50,
            folds: 10,
            rule: CvRule::Min,
            master_seed: 0,
            test_size: 10_000,
            output: PathBuf::from("results"),
        }
    }
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| Error::Parse(format!("{key}: cannot parse `{s}`")))
        })
        .collect()
}

fn parse_one<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("{key}: cannot parse `{value}`")))
}

impl ExperimentConfig {
    /// Recognized keys: `designs`, `n_grid`, `p_grid`, `noise1`..`noise4`,
    /// `replications`, `folds`, `rule`, `seed`, `test_size`, `output`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "designs" => {
                self.designs = parse_list::<u8>(key, value)?
                    .into_iter()
                    .map(Design::from_id)
                    .collect::<Result<_>>()?
            }
            "n_grid" => self.n_grid = parse_list(key, value)?,
            "p_grid" => self.p_grid = parse_list(key, value)?,
            "noise1" | "noise2" | "noise3" | "noise4" => {
                let design = Design::from_id(key.as_bytes()[5] - b'0')?;
                self.noise_grid.insert(design, parse_list(key, value)?);
            }
            "replications" => self.replications = parse_one(key, value)?,
            "folds" => self.folds = parse_one(key, value)?,
            "rule" => self.rule = value.trim().parse()?,
            "seed" => self.master_seed = parse_one(key, value)?,
            "test_size" => self.test_size = parse_one(key, value)?,
            "output" => self.output = PathBuf::from(value.trim()),
            _ => return Err(Error::Parse(format!("unknown configuration key `{key}`"))),
        }
        Ok(())
    }

    /// Apply a flat `key = value` text; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key=value", lineno + 1)))?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.designs.is_empty() || self.n_grid.is_empty() || self.p_grid.is_empty() {
            return Err(Error::Parameter("design, n and p grids must be nonempty".into()));
        }
        if self.replications == 0 {
            return Err(Error::Parameter("replications must be >= 1".into()));
        }
        if self.test_size == 0 {
            return Err(Error::Parameter("test_size must be >= 1".into()));
        }
        for &design in &self.designs {
            let noise = self.noise_for(design);
            if noise.is_empty() {
                return Err(Error::Parameter(format!("no noise levels for design {design}")));
            }
            for &n in &self.n_grid {
                if self.folds < 2 || self.folds > n {
                    return Err(Error::Parameter(format!("folds = {} invalid for n = {n}", self.folds)));
                }
                for &p in &self.p_grid {
                    for &s in noise {
                        DesignSpec::new(design, n, p, s, 0)?;
                    }
                }
            }
        }
        Ok(())
    }

    fn noise_for(&self, design: Design) -> &[f64] {
        self.noise_grid.get(&design).map_or(&[], Vec::as_slice)
    }

    /// Grid cells in output order: design, noise, n, p.
    fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for &design in &self.designs {
            for &noise in self.noise_for(design) {
                for &n in &self.n_grid {
                    for &p in &self.p_grid {
                        cells.push(Cell { design, n, p, noise });
                    }
                }
            }
        }
        cells
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Cell {
    design: Design,
    n: usize,
    p: usize,
    noise: f64,
}

impl Cell {
    fn seed(&self, master: u64, r: usize) -> u64 {
        rng::derive(
            master,
            &[
                u64::from(self.design.id()),
                self.n as u64,
                self.p as u64,
                self.noise.to_bits(),
                r as u64,
            ],
        )
    }
}

/// Outcome of one replication.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Replication {
    pub alpha: f64,
    pub test_loss: f64,
    pub tree_size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub design: Design,
    pub n: usize,
    pub p: usize,
    pub noise: f64,
    pub replications: usize,
    pub mean_alpha: f64,
    pub sd_alpha: f64,
    pub mean_test_loss: f64,
    pub mean_tree_size: f64,
}

impl ExperimentRow {
    /// Standard error of `mean_alpha`.
    pub fn se_alpha(&self) -> f64 {
        self.sd_alpha / (self.replications as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentResult {
    pub rows: Vec<ExperimentRow>,
}

fn run_replication(cfg: &ExperimentConfig, cell: &Cell, r: usize) -> Result<Replication> {
    let seed = cell.seed(cfg.master_seed, r);
    let spec = DesignSpec::new(cell.design, cell.n, cell.p, cell.noise, seed)?;
    let data = generate(&spec)?;
    let cv = CvConfig {
        folds: cfg.folds,
        rule: cfg.rule,
        seed: rng::derive(seed, &[1]),
        ..CvConfig::default()
    };
    let outcome = cv_select_alpha(&data, &cv)?;
    let loss = outcome
        .tree
        .loss_estimate(&spec, cfg.test_size, rng::derive(seed, &[2]))?;
    Ok(Replication {
        alpha: outcome.alpha,
        test_loss: loss.loss,
        tree_size: outcome.tree.size(),
    })
}

fn mean(xs: impl Iterator<Item = f64>) -> (f64, usize) {
    let (sum, count) = xs.fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    (sum / count as f64, count)
}

fn aggregate(cell: &Cell, reps: &[Replication]) -> ExperimentRow {
    let (mean_alpha, r) = mean(reps.iter().map(|x| x.alpha));
    let sd_alpha = if r > 1 {
        (reps.iter().map(|x| (x.alpha - mean_alpha).powi(2)).sum::<f64>() / (r - 1) as f64).sqrt()
    } else {
        0.0
    };
    ExperimentRow {
        design: cell.design,
        n: cell.n,
        p: cell.p,
        noise: cell.noise,
        replications: r,
        mean_alpha,
        sd_alpha,
        mean_test_loss: mean(reps.iter().map(|x| x.test_loss)).0,
        mean_tree_size: mean(reps.iter().map(|x| x.tree_size as f64)).0,
    }
}

/// Run every replication of every grid cell on the current rayon pool.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let cells = cfg.cells();
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..cfg.replications).map(move |r| (c, r)))
        .collect();
    let outcomes: Vec<Replication> = jobs
        .par_iter()
        .map(|&(c, r)| run_replication(cfg, &cells[c], r))
        .collect::<Result<_>>()?;
    let rows = cells
        .iter()
        .zip(outcomes.chunks(cfg.replications))
        .map(|(cell, reps)| aggregate(cell, reps))
        .collect();
    Ok(ExperimentResult { rows })
}

impl ExperimentResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "design,n,p,noise,replications,mean_alpha,sd_alpha,mean_test_loss,mean_tree_size\n",
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.design, r.n, r.p, r.noise, r.replications, r.mean_alpha, r.sd_alpha, r.mean_test_loss, r.mean_tree_size
            );
        }
        out
    }

    pub fn row(&self, design: Design, n: usize, p: usize, noise: f64) -> Option<&ExperimentRow> {
        self.rows
            .iter()
            .find(|r| r.design == design && r.n == n && r.p == p && r.noise == noise)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub design: Design,
    pub n: usize,
    pub noise: f64,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Ordinary least squares fit of `y` on `x`: (slope, intercept, R^2).
/// A constant response has slope 0 and R^2 0.
pub fn least_squares(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    let distinct = {
        let mut v = x.to_vec();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v.len()
    };
    if x.len() != y.len() || distinct < 2 {
        return Err(Error::Fit(format!(
            "need at least 2 distinct x values, got {distinct}"
        )));
    }
    let (mx, _) = mean(x.iter().copied());
    let (my, _) = mean(y.iter().copied());
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 {
        0.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    Ok((slope, intercept, r_squared))
}

/// Fit `mean_alpha` against `ln p` within each (design, n, noise) group.
pub fn fit_alpha_vs_logp(res: &ExperimentResult) -> Result<Vec<FitResult>> {
    let mut groups: BTreeMap<(Design, u64, usize), Vec<&ExperimentRow>> = BTreeMap::new();
    for r in &res.rows {
        groups.entry((r.design, r.noise.to_bits(), r.n)).or_default().push(r);
    }
    groups
        .into_values()
        .map(|rows| {
            let x: Vec<f64> = rows.iter().map(|r| (r.p as f64).ln()).collect();
            let y: Vec<f64> = rows.iter().map(|r| r.mean_alpha).collect();
            let (slope, intercept, r_squared) = least_squares(&x, &y)?;
            Ok(FitResult {
                design: rows[0].design,
                n: rows[0].n,
                noise: rows[0].noise,
                slope,
                intercept,
                r_squared,
                points: rows.len(),
            })
        })
        .collect()
}

pub fn fits_to_csv(fits: &[FitResult]) -> String {
    let mut out = String::from("design,n,noise,slope,intercept,r_squared,points\n");
    for f in fits {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            f.design, f.n, f.noise, f.slope, f.intercept, f.r_squared, f.points
        );
    }
    out
}

/// Plot data for one design: one block per `n` (blank-line separated),
/// columns `ln_p mean_alpha sd_alpha n`. Uses the largest noise level of
/// the design present in the result.
pub fn figure_data(res: &ExperimentResult, design: Design) -> Option<String> {
    let noise = res
        .rows
        .iter()
        .filter(|r| r.design == design)
        .map(|r| r.noise)
        .max_by(f64::total_cmp)?;
    let mut by_n: BTreeMap<usize, Vec<&ExperimentRow>> = BTreeMap::new();
    for r in res.rows.iter().filter(|r| r.design == design && r.noise == noise) {
        by_n.entry(r.n).or_default().push(r);
    }
    let mut out = format!("# design {design}, noise {noise}\n# ln_p mean_alpha sd_alpha n\n");
    for (i, rows) in by_n.values().enumerate() {
        if i > 0 {
            out.push_str("\n\n");
        }
        for r in rows {
            let _ = writeln!(out, "{} {} {} {}", (r.p as f64).ln(), r.mean_alpha, r.sd_alpha, r.n);
        }
    }
    Some(out)
}

/// Cells where `mean_alpha` at a larger `n` exceeds the value at a smaller
/// `n` (same design, noise and p) by more than one pooled standard error.
pub fn trend_violations(res: &ExperimentResult) -> Vec<(Design, f64, usize, usize, usize)> {
    let mut out = Vec::new();
    for a in &res.rows {
        for b in &res.rows {
            if a.design == b.design && a.noise == b.noise && a.p == b.p && a.n < b.n {
                let pooled = (a.se_alpha().powi(2) + b.se_alpha().powi(2)).sqrt();
                if b.mean_alpha > a.mean_alpha + pooled {
                    out.push((a.design, a.noise, a.p, a.n, b.n));
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub result: ExperimentResult,
    pub fits: Vec<FitResult>,
    pub files: Vec<PathBuf>,
}

/// Run the sweep on a pool of `threads` workers (all cores when `None`),
/// fit the trends and write `results.csv`, `fit.csv` and
/// `figure3_<design>.dat` under `cfg.output`.
pub fn run_experiment(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<ExperimentOutput> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Parameter(format!("thread pool: {e}")))?;
    let result = pool.install(|| run_sweep(cfg))?;
    let fits = fit_alpha_vs_logp(&result)?;
    let files = write_outputs(&cfg.output, &result, &fits)?;
    Ok(ExperimentOutput { result, fits, files })
}

fn write_outputs(dir: &Path, result: &ExperimentResult, fits: &[FitResult]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    let mut put = |name: String, body: String| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, body)?;
        files.push(path);
        Ok(())
    };
    put("results.csv".into(), result.to_csv())?;
    put("fit.csv".into(), fits_to_csv(fits))?;
    for design in Design::ALL {
        if let Some(body) = figure_data(result, design) {
            put(format!("figure3_{design}.dat"), body)?;
        }
    }
    Ok(files)
}
