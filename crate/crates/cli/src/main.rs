use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use treepen::experiment::{run_experiment, ExperimentConfig};
use treepen::oracle::suite::{run_all, SuiteConfig};
use treepen::select::{MarginParams, VcParams};
use treepen::{
    cv_select_alpha, generate, grow_maximal, select_tree, weakest_link, CvConfig, CvRule, Dataset, Design,
    DesignSpec, GrowLimits, PenaltySpec, TreeClassifier,
};

#[derive(Parser)]
#[command(name = "treepen", version, about = "Penalized classification-tree selection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a dataset from a simulation design and write it as CSV.
    Simulate(SimulateArgs),
    /// Grow the maximal tree and print it.
    Grow(GrowArgs),
    /// Print the weakest-link pruning sequence as CSV (size,risk,alpha).
    Prune(PruneArgs),
    /// Select a tree by minimizing empirical risk plus a penalty.
    Select(SelectArgs),
    /// Tune the linear penalty constant by V-fold cross-validation.
    Cv(CvArgs),
    /// Run the simulation sweep and write results.csv, fit.csv and plot data.
    Experiment(Box<ExperimentArgs>),
    /// Run the oracle suite and print a pass/fail report.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Design number (1-4).
    #[arg(long)]
    design: u8,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: usize,
    /// q for design 1, sigma^2 for designs 2-4.
    #[arg(long)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file (stdout when omitted).
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DataArgs {
    /// Training data CSV with a `y` column.
    #[arg(long)]
    data: PathBuf,
    /// Maximum number of leaves of the grown tree.
    #[arg(long)]
    max_leaves: Option<usize>,
    /// Minimum number of rows in each child of a split.
    #[arg(long, default_value_t = 1)]
    min_node_size: usize,
}

impl DataArgs {
    fn load(&self) -> Result<Dataset> {
        Dataset::read_csv_path(&self.data).with_context(|| format!("reading {}", self.data.display()))
    }

    fn limits(&self) -> Result<GrowLimits> {
        if self.max_leaves == Some(0) || self.min_node_size == 0 {
            bail!("--max-leaves and --min-node-size must be positive");
        }
        Ok(GrowLimits {
            max_leaves: self.max_leaves,
            min_node_size: self.min_node_size,
        })
    }
}

#[derive(Args)]
struct GrowArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Output file for the tree text (stdout when omitted).
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PruneArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Tree to prune; grown from the data when omitted.
    #[arg(long)]
    tree: Option<PathBuf>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PenaltyKind {
    Linear,
    Margin,
    Vc,
    Min,
    Nobel,
    Gey,
}

#[derive(Args)]
struct SelectArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum, default_value = "linear")]
    penalty: PenaltyKind,
    /// Constant of the linear penalty.
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    /// Margin exponent of the margin-adaptive penalty.
    #[arg(long, default_value_t = 1.0)]
    kappa: f64,
    #[arg(long, default_value_t = 1.0)]
    c1: f64,
    #[arg(long, default_value_t = 1.0)]
    c2: f64,
}

impl SelectArgs {
    fn spec(&self) -> PenaltySpec {
        let margin = MarginParams {
            kappa: self.kappa,
            c1: self.c1,
            c2: self.c2,
        };
        let vc = VcParams { c1: self.c1, c2: self.c2 };
        match self.penalty {
            PenaltyKind::Linear => PenaltySpec::Linear { alpha: self.alpha },
            PenaltyKind::Margin => PenaltySpec::MarginAdaptive(margin),
            PenaltyKind::Vc => PenaltySpec::Vc(vc),
            PenaltyKind::Min => PenaltySpec::MinCombined { margin, vc },
            PenaltyKind::Nobel => PenaltySpec::Nobel { c1: self.c1 },
            PenaltyKind::Gey => PenaltySpec::Gey { c2: self.c2 },
        }
    }
}

#[derive(Args)]
struct CvArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    /// `min` or `1se`.
    #[arg(long, default_value = "min")]
    rule: CvRule,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Master seed for every replication.
    #[arg(long)]
    seed: u64,
    /// Flat key=value configuration file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads (all cores when omitted).
    #[arg(long)]
    threads: Option<usize>,
    /// Comma-separated design numbers.
    #[arg(long)]
    designs: Option<String>,
    #[arg(long)]
    n_grid: Option<String>,
    #[arg(long)]
    p_grid: Option<String>,
    #[arg(long)]
    noise1: Option<String>,
    #[arg(long)]
    noise2: Option<String>,
    #[arg(long)]
    noise3: Option<String>,
    #[arg(long)]
    noise4: Option<String>,
    #[arg(long)]
    replications: Option<String>,
    #[arg(long)]
    folds: Option<String>,
    #[arg(long)]
    rule: Option<String>,
    #[arg(long)]
    test_size: Option<String>,
    /// Output directory.
    #[arg(long, short)]
    output: Option<String>,
}

impl ExperimentArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            cfg.apply_text(&text)?;
        }
        let overrides = [
            ("designs", &self.designs),
            ("n_grid", &self.n_grid),
            ("p_grid", &self.p_grid),
            ("noise1", &self.noise1),
            ("noise2", &self.noise2),
            ("noise3", &self.noise3),
            ("noise4", &self.noise4),
            ("replications", &self.replications),
            ("folds", &self.folds),
            ("rule", &self.rule),
            ("test_size", &self.test_size),
            ("output", &self.output),
        ];
        for (key, value) in overrides {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        cfg.master_seed = self.seed;
        Ok(cfg)
    }
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Run reduced sample counts.
    #[arg(long)]
    quick: bool,
}

fn emit(out: Option<&Path>, body: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, body).with_context(|| format!("writing {}", path.display()))?,
        None => io::stdout().write_all(body.as_bytes())?,
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Simulate(a) => {
            let spec = DesignSpec::new(Design::from_id(a.design)?, a.n, a.p, a.noise, a.seed)?;
            let mut buf = Vec::new();
            generate(&spec)?.write_csv(&mut buf)?;
            emit(a.out.as_deref(), &String::from_utf8(buf)?)
        }
        Command::Grow(a) => {
            let data = a.data.load()?;
            let tree = grow_maximal(&data, a.data.limits()?);
            emit(a.out.as_deref(), &format!("{tree}\n"))
        }
        Command::Prune(a) => {
            let data = a.data.load()?;
            let tree = match &a.tree {
                Some(path) => fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?
                    .trim()
                    .parse::<TreeClassifier>()?,
                None => grow_maximal(&data, a.data.limits()?),
            };
            let mut buf = Vec::new();
            weakest_link(&tree, &data)?.write_csv(&mut buf)?;
            emit(a.out.as_deref(), &String::from_utf8(buf)?)
        }
        Command::Select(a) => {
            let data = a.data.load()?;
            let sel = select_tree(&data, &a.spec(), a.data.limits()?)?;
            println!("tree: {}", sel.tree);
            println!("leaves: {}", sel.tree.size());
            println!("cost: {}", sel.cost);
            Ok(())
        }
        Command::Cv(a) => {
            let data = a.data.load()?;
            let cfg = CvConfig {
                folds: a.folds,
                rule: a.rule,
                seed: a.seed,
                limits: a.data.limits()?,
            };
            let out = cv_select_alpha(&data, &cfg)?;
            println!("alpha: {}", out.alpha);
            println!("tree: {}", out.tree);
            println!("leaves: {}", out.tree.size());
            Ok(())
        }
        Command::Experiment(a) => {
            let cfg = a.config()?;
            let out = run_experiment(&cfg, a.threads)?;
            for f in &out.fits {
                println!(
                    "design {} n {} noise {}: slope {:.5} intercept {:.5} R2 {:.4}",
                    f.design, f.n, f.noise, f.slope, f.intercept, f.r_squared
                );
            }
            for file in &out.files {
                println!("wrote {}", file.display());
            }
            Ok(())
        }
        Command::Verify(a) => {
            let reports = run_all(SuiteConfig {
                seed: a.seed,
                quick: a.quick,
            })?;
            for r in &reports {
                println!("{r}");
            }
            let failed = reports.iter().filter(|r| !r.passed).count();
            if failed > 0 {
                bail!("{failed} of {} checks failed", reports.len());
            }
            Ok(())
        }
    }
}
