//! Datasets, the four simulation designs and their analytic ground truth.
//!
//! Every design is generated column by column: column `j` (zero-based) draws
//! its Gaussian noise from stream `j + 1` of the dataset seed and the label
//! mechanism draws from stream 0. A subset of columns can therefore be
//! sampled without materializing the others, and the values agree with the
//! full [`generate`] output for the same seed.

use std::f64::consts::SQRT_2;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng;

pub type Label = u8;

/// `n` observations of `p` ordered real features with binary labels.
///
/// Features are stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    p: usize,
    features: Vec<f64>,
    labels: Vec<Label>,
}

impl Dataset {
    pub fn new(n: usize, p: usize, features: Vec<f64>, labels: Vec<Label>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Input("dataset needs at least one row".into()));
        }
        if p < 2 {
            return Err(Error::Input(format!("dataset needs p >= 2, got {p}")));
        }
        if features.len() != n * p {
            return Err(Error::Input(format!(
                "feature table has {} values, expected {n} x {p}",
                features.len()
            )));
        }
        if labels.len() != n {
            return Err(Error::Input(format!(
                "{} labels for {n} rows",
                labels.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&y| y > 1) {
            return Err(Error::Input(format!("label {bad} is not 0 or 1")));
        }
        if features.iter().any(|v| v.is_nan()) {
            return Err(Error::Input("features must not be NaN".into()));
        }
        Ok(Self {
            n,
            p,
            features,
            labels,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], labels: &[Label]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if let Some(r) = rows.iter().find(|r| r.len() != p) {
            return Err(Error::Input(format!(
                "ragged rows: expected {p} columns, found {}",
                r.len()
            )));
        }
        let features = rows.iter().flatten().copied().collect();
        Self::new(rows.len(), p, features, labels.to_vec())
    }

    /// Build from columns rather than rows.
    pub fn from_columns(columns: &[Vec<f64>], labels: &[Label]) -> Result<Self> {
        let n = labels.len();
        if let Some(c) = columns.iter().find(|c| c.len() != n) {
            return Err(Error::Input(format!(
                "column of length {} for {n} labels",
                c.len()
            )));
        }
        let p = columns.len();
        let mut features = Vec::with_capacity(n * p);
        for i in 0..n {
            features.extend(columns.iter().map(|c| c[i]));
        }
        Self::new(n, p, features, labels.to_vec())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.p..(i + 1) * self.p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.features.chunks_exact(self.p)
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.features[i * self.p + j]
    }

    pub fn label(&self, i: usize) -> Label {
        self.labels[i]
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.value(i, j)).collect()
    }

    /// Count of (label 0, label 1).
    pub fn class_counts(&self) -> (usize, usize) {
        let ones = self.labels.iter().filter(|&&y| y == 1).count();
        (self.n - ones, ones)
    }

    pub fn is_single_class(&self) -> bool {
        let (zeros, ones) = self.class_counts();
        zeros == 0 || ones == 0
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut features = Vec::with_capacity(indices.len() * self.p);
        for &i in indices {
            features.extend_from_slice(self.row(i));
        }
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        Self::new(indices.len(), self.p, features, labels)
    }

    /// Read the `x1,...,xp,y` CSV format. The label column must be named `y`;
    /// every other column is a feature, in header order.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        let label_col = headers
            .iter()
            .position(|h| h == "y")
            .ok_or_else(|| Error::Input("CSV header has no `y` column".into()))?;
        let p = headers.len() - 1;
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for (line, record) in rdr.records().enumerate() {
            let record = record?;
            for (c, field) in record.iter().enumerate() {
                if c == label_col {
                    let y = match field {
                        "0" => 0,
                        "1" => 1,
                        other => {
                            return Err(Error::Input(format!(
                                "row {}: label `{other}` is not 0 or 1",
                                line + 1
                            )))
                        }
                    };
                    labels.push(y);
                } else {
                    let v: f64 = field.parse().map_err(|_| {
                        Error::Input(format!("row {}: `{field}` is not a number", line + 1))
                    })?;
                    features.push(v);
                }
            }
        }
        Self::new(labels.len(), p, features, labels)
    }

    pub fn read_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (1..=self.p).map(|j| format!("x{j}")).collect();
        header.push("y".into());
        wtr.write_record(&header)?;
        for (row, y) in self.rows().zip(&self.labels) {
            let mut rec: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            rec.push(y.to_string());
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// The four simulation designs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Design {
    /// Label noise `q` driven by the positive quadrant of `(X1, X2)`.
    One,
    /// `X1 | Y` Gaussian with means 0/1.
    Two,
    /// `X1, X2 | Y` Gaussian with means 0/1, conditionally independent.
    Three,
    /// Sphere rule on `(X1, X2, X3)`; extra columns are noisy copies of
    /// their normalized sum.
    Four,
}

impl Design {
    pub const ALL: [Design; 4] = [Design::One, Design::Two, Design::Three, Design::Four];

    pub fn id(self) -> u8 {
        match self {
            Design::One => 1,
            Design::Two => 2,
            Design::Three => 3,
            Design::Four => 4,
        }
    }

    pub fn from_id(id: u8) -> Result<Self> {
        match id {
            1 => Ok(Design::One),
            2 => Ok(Design::Two),
            3 => Ok(Design::Three),
            4 => Ok(Design::Four),
            _ => Err(Error::Parameter(format!("design must be 1..=4, got {id}"))),
        }
    }
}

impl fmt::Display for Design {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.id())
    }
}

/// A fully parameterized simulation design.
///
/// `noise` is the label-flip probability `q` for design 1 and the variance
/// `sigma^2` for designs 2 to 4.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignSpec {
    design: Design,
    n: usize,
    p: usize,
    noise: f64,
    seed: u64,
}

impl DesignSpec {
    pub fn new(design: Design, n: usize, p: usize, noise: f64, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Parameter("n must be positive".into()));
        }
        if p < 2 {
            return Err(Error::Parameter(format!("p must be >= 2, got {p}")));
        }
        if design == Design::Four && p < 3 {
            return Err(Error::Parameter(format!("design 4 needs p >= 3, got {p}")));
        }
        let ok = match design {
            Design::One => noise > 0.0 && noise < 0.5,
            _ => noise > 0.0 && noise.is_finite(),
        };
        if !ok {
            return Err(Error::Parameter(match design {
                Design::One => format!("design 1 needs q in (0, 1/2), got {noise}"),
                _ => format!("design {design} needs sigma^2 > 0, got {noise}"),
            }));
        }
        Ok(Self {
            design,
            n,
            p,
            noise,
            seed,
        })
    }

    pub fn design(&self) -> Design {
        self.design
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn sigma(&self) -> f64 {
        self.noise.sqrt()
    }
}

fn normals(seed: u64, stream: u64, m: usize) -> Vec<f64> {
    let mut rng = rng::stream(seed, stream);
    (0..m).map(|_| rng.sample(StandardNormal)).collect()
}

fn uniforms(seed: u64, m: usize) -> Vec<f64> {
    let mut rng = rng::stream(seed, 0);
    (0..m).map(|_| rng.random::<f64>()).collect()
}

fn column_noise(seed: u64, j: usize, m: usize) -> Vec<f64> {
    normals(seed, j as u64 + 1, m)
}

/// Draw `m` observations of the design with `seed`, materializing only the
/// requested columns (zero-based). Returns the columns in request order and
/// the labels.
pub fn sample_columns(
    spec: &DesignSpec,
    m: usize,
    seed: u64,
    columns: &[usize],
) -> Result<(Vec<Vec<f64>>, Vec<Label>)> {
    if let Some(&j) = columns.iter().find(|&&j| j >= spec.p) {
        return Err(Error::Input(format!(
            "column {j} out of range for p = {}",
            spec.p
        )));
    }
    let sigma = spec.sigma();
    match spec.design {
        Design::One => {
            let x1 = column_noise(seed, 0, m);
            let x2 = column_noise(seed, 1, m);
            let u = uniforms(seed, m);
            let q = spec.noise;
            let labels = (0..m)
                .map(|i| {
                    let p1 = if x1[i] > 0.0 && x2[i] > 0.0 { q } else { 1.0 - q };
                    Label::from(u[i] < p1)
                })
                .collect();
            let cols = columns
                .iter()
                .map(|&j| match j {
                    0 => x1.clone(),
                    1 => x2.clone(),
                    _ => column_noise(seed, j, m),
                })
                .collect();
            Ok((cols, labels))
        }
        Design::Two | Design::Three => {
            let informative = if spec.design == Design::Two { 1 } else { 2 };
            let labels: Vec<Label> = uniforms(seed, m)
                .into_iter()
                .map(|u| Label::from(u < 0.5))
                .collect();
            let cols = columns
                .iter()
                .map(|&j| {
                    let z = column_noise(seed, j, m);
                    if j < informative {
                        z.iter()
                            .zip(&labels)
                            .map(|(z, &y)| f64::from(y) + sigma * z)
                            .collect()
                    } else {
                        z
                    }
                })
                .collect();
            Ok((cols, labels))
        }
        Design::Four => {
            let base: Vec<Vec<f64>> = (0..3).map(|j| column_noise(seed, j, m)).collect();
            let labels = (0..m)
                .map(|i| {
                    let r2: f64 = base.iter().map(|c| c[i] * c[i]).sum();
                    Label::from(r2 > 2.5)
                })
                .collect();
            let cols = columns
                .iter()
                .map(|&j| {
                    if j < 3 {
                        base[j].clone()
                    } else {
                        let z = column_noise(seed, j, m);
                        (0..m)
                            .map(|i| {
                                (base[0][i] + base[1][i] + base[2][i]) / 3f64.sqrt()
                                    + sigma * z[i]
                            })
                            .collect()
                    }
                })
                .collect();
            Ok((cols, labels))
        }
    }
}

/// Generate the `n x p` training set described by `spec`.
pub fn generate(spec: &DesignSpec) -> Result<Dataset> {
    let all: Vec<usize> = (0..spec.p).collect();
    let (cols, labels) = sample_columns(spec, spec.n, spec.seed, &all)?;
    Dataset::from_columns(&cols, &labels)
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

pub(crate) fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Regression function `P(Y = 1 | X = x)`.
pub fn eta(spec: &DesignSpec, x: &[f64]) -> Result<f64> {
    if x.len() != spec.p {
        return Err(Error::Input(format!(
            "feature vector has {} coordinates, design has p = {}",
            x.len(),
            spec.p
        )));
    }
    let s2 = spec.noise;
    Ok(match spec.design {
        Design::One => {
            if x[0] > 0.0 && x[1] > 0.0 {
                spec.noise
            } else {
                1.0 - spec.noise
            }
        }
        // Log-odds of N(1, s2) against N(0, s2) is (x - 1/2) / s2.
        Design::Two => logistic((x[0] - 0.5) / s2),
        Design::Three => logistic((x[0] + x[1] - 1.0) / s2),
        Design::Four => {
            if x[..3].iter().map(|v| v * v).sum::<f64>() > 2.5 {
                1.0
            } else {
                0.0
            }
        }
    })
}

/// The Bayes classifier `1{eta(x) >= 1/2}`.
pub fn bayes_label(spec: &DesignSpec, x: &[f64]) -> Result<Label> {
    Ok(Label::from(eta(spec, x)? >= 0.5))
}

/// Misclassification rate of the Bayes classifier.
pub fn bayes_risk(spec: &DesignSpec) -> f64 {
    let sigma = spec.sigma();
    match spec.design {
        Design::One => spec.noise,
        Design::Two => normal_cdf(-1.0 / (2.0 * sigma)),
        // X1 + X2 | Y ~ N(2Y, 2 sigma^2) and the rule thresholds it at 1.
        Design::Three => normal_cdf(-1.0 / (SQRT_2 * sigma)),
        Design::Four => 0.0,
    }
}

/// `P(|2 eta(X) - 1| <= t)`, in closed form for every design.
pub fn margin_mass(spec: &DesignSpec, t: f64) -> Result<f64> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::Parameter(format!("t must be >= 0, got {t}")));
    }
    if t >= 1.0 {
        return Ok(1.0);
    }
    let s2 = spec.noise;
    let sigma = spec.sigma();
    Ok(match spec.design {
        Design::One => {
            if t >= (1.0 - 2.0 * spec.noise).abs() {
                1.0
            } else {
                0.0
            }
        }
        // |2 eta - 1| = tanh(|x - 1/2| / (2 s2)) <= t  <=>  |x - 1/2| <= w.
        Design::Two => {
            let w = 2.0 * s2 * t.atanh();
            normal_cdf((0.5 + w) / sigma) - normal_cdf((0.5 - w) / sigma)
        }
        Design::Three => {
            let w = 2.0 * s2 * t.atanh();
            let sd = SQRT_2 * sigma;
            normal_cdf((1.0 + w) / sd) - normal_cdf((1.0 - w) / sd)
        }
        // eta is 0 or 1 almost surely.
        Design::Four => 0.0,
    })
}

/// The two margin conditions, checked analytically against a design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MarginSpec {
    /// `P(|2 eta - 1| <= t) <= c0 * t^(1 / (kappa - 1))` for all `t > 0`.
    Ma1 { c0: f64, kappa: f64 },
    /// `P(|2 eta - 1| <= h) = 0`.
    Ma2 { h: f64 },
}

impl MarginSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            MarginSpec::Ma1 { c0, kappa } if c0 > 0.0 && kappa > 1.0 => Ok(()),
            MarginSpec::Ma2 { h } if h > 0.0 && h < 1.0 => Ok(()),
            MarginSpec::Ma1 { .. } => Err(Error::Parameter("MA1 needs c0 > 0 and kappa > 1".into())),
            MarginSpec::Ma2 { .. } => Err(Error::Parameter("MA2 needs h in (0, 1)".into())),
        }
    }

    /// Whether the design satisfies the condition. MA1 is checked on a grid
    /// of `grid` points in `(0, 1]`; above 1 the mass is 1 and the bound
    /// only grows.
    pub fn holds_for(&self, spec: &DesignSpec, grid: usize) -> Result<bool> {
        self.validate()?;
        match *self {
            MarginSpec::Ma2 { h } => Ok(margin_mass(spec, h)? == 0.0),
            MarginSpec::Ma1 { c0, kappa } => {
                let exponent = 1.0 / (kappa - 1.0);
                for i in 1..=grid.max(1) {
                    let t = i as f64 / grid.max(1) as f64;
                    if margin_mass(spec, t)? > c0 * t.powf(exponent) {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(design: Design, n: usize, p: usize, noise: f64) -> DesignSpec {
        DesignSpec::new(design, n, p, noise, 7).unwrap()
    }

    #[test]
    fn generate_shape() {
        let d = generate(&spec(Design::One, 100, 5, 0.1)).unwrap();
        assert_eq!((d.n(), d.p()), (100, 5));
    }

    #[test]
    fn generate_is_deterministic() {
        for design in Design::ALL {
            let s = spec(design, 50, 6, 0.3);
            assert_eq!(generate(&s).unwrap(), generate(&s).unwrap());
        }
        let a = generate(&spec(Design::One, 50, 6, 0.3)).unwrap();
        let b = generate(&spec(Design::One, 50, 6, 0.3).with_seed(8)).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn partial_columns_agree_with_full_generation() {
        for design in Design::ALL {
            let s = spec(design, 40, 7, 0.2);
            let full = generate(&s).unwrap();
            let (cols, labels) = sample_columns(&s, 40, 7, &[5, 0, 3]).unwrap();
            assert_eq!(labels, full.labels());
            assert_eq!(cols[0], full.column(5));
            assert_eq!(cols[1], full.column(0));
            assert_eq!(cols[2], full.column(3));
        }
    }

    #[test]
    fn design1_quadrant_frequency() {
        let d = generate(&spec(Design::One, 100_000, 2, 0.1)).unwrap();
        let (hits, ones) = d
            .rows()
            .zip(d.labels())
            .filter(|(x, _)| x[0] > 0.0 && x[1] > 0.0)
            .fold((0usize, 0usize), |(h, o), (_, &y)| (h + 1, o + y as usize));
        let freq = ones as f64 / hits as f64;
        assert!((freq - 0.1).abs() <= 0.01, "freq = {freq}");
    }

    #[test]
    fn design4_labels_follow_sphere_rule() {
        let d = generate(&spec(Design::Four, 500, 5, 0.2)).unwrap();
        for (x, &y) in d.rows().zip(d.labels()) {
            let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
            assert_eq!(y, Label::from(r2 > 2.5));
        }
    }

    #[test]
    fn invalid_noise_and_dimension() {
        assert!(matches!(
            DesignSpec::new(Design::One, 10, 3, 0.5, 0),
            Err(Error::Parameter(_))
        ));
        assert!(DesignSpec::new(Design::One, 10, 3, 0.0, 0).is_err());
        assert!(DesignSpec::new(Design::Two, 10, 3, -1.0, 0).is_err());
        assert!(DesignSpec::new(Design::Four, 10, 2, 0.2, 0).is_err());
        assert!(DesignSpec::new(Design::Two, 10, 1, 1.0, 0).is_err());
    }

    #[test]
    fn eta_examples() {
        let mut x = vec![0.5; 4];
        assert_eq!(eta(&spec(Design::One, 1, 4, 0.1), &x).unwrap(), 0.1);
        assert!((eta(&spec(Design::Two, 1, 4, 1.0), &x).unwrap() - 0.5).abs() < 1e-15);
        x[0] = 2.0;
        x[1] = 0.0;
        x[2] = 0.0;
        assert_eq!(eta(&spec(Design::Four, 1, 4, 0.2), &x).unwrap(), 1.0);
        assert!(eta(&spec(Design::Four, 1, 4, 0.2), &x[..3]).is_err());
    }

    #[test]
    fn eta_matches_bayes_formula_for_design2() {
        // Direct posterior from the two Gaussian densities.
        let s = spec(Design::Two, 1, 2, 2.0);
        for &x in &[-3.0, -0.4, 0.2, 0.9, 4.0] {
            let f0 = (-(x * x) / 4.0f64).exp();
            let f1 = (-((x - 1.0) * (x - 1.0)) / 4.0f64).exp();
            let direct = f1 / (f0 + f1);
            assert!((eta(&s, &[x, 0.0]).unwrap() - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn bayes_risk_examples() {
        assert_eq!(bayes_risk(&spec(Design::One, 1, 2, 0.1)), 0.1);
        assert!((bayes_risk(&spec(Design::Two, 1, 2, 1.0)) - 0.308_537_538_725_986_9).abs() < 1e-12);
        assert_eq!(bayes_risk(&spec(Design::Four, 1, 3, 0.2)), 0.0);
    }

    #[test]
    fn margin_mass_examples() {
        let s = spec(Design::One, 1, 2, 0.3);
        assert_eq!(margin_mass(&s, 0.3).unwrap(), 0.0);
        assert_eq!(margin_mass(&s, 0.5).unwrap(), 1.0);
        let m = margin_mass(&spec(Design::Two, 1, 2, 1.0), 0.1).unwrap();
        assert!(m > 0.0 && m < 1.0);
        assert!(margin_mass(&s, -0.1).is_err());
    }

    #[test]
    fn margin_mass_design2_matches_quadrature() {
        // Midpoint rule over the mixture density restricted to |2 eta - 1| <= t.
        let s = spec(Design::Two, 1, 2, 1.0);
        let t = 0.4;
        let (lo, hi, steps) = (-10.0, 11.0, 400_000);
        let h = (hi - lo) / steps as f64;
        let dens = |x: f64, m: f64| (-(x - m) * (x - m) / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mut acc = 0.0;
        for i in 0..steps {
            let x = lo + (i as f64 + 0.5) * h;
            let e = eta(&s, &[x, 0.0]).unwrap();
            if (2.0 * e - 1.0).abs() <= t {
                acc += 0.5 * (dens(x, 0.0) + dens(x, 1.0)) * h;
            }
        }
        assert!((margin_mass(&s, t).unwrap() - acc).abs() < 1e-4, "{acc}");
    }

    #[test]
    fn margin_mass_monotone_and_unit_at_one() {
        for design in Design::ALL {
            let s = spec(design, 1, 3, if design == Design::One { 0.2 } else { 1.5 });
            let mut prev = 0.0;
            for i in 0..=100 {
                let m = margin_mass(&s, i as f64 / 100.0).unwrap();
                assert!(m >= prev - 1e-15 && (0.0..=1.0).contains(&m));
                prev = m;
            }
            assert_eq!(margin_mass(&s, 1.0).unwrap(), 1.0);
        }
    }

    #[test]
    fn margin_conditions() {
        let d1 = spec(Design::One, 1, 2, 0.2);
        assert!(MarginSpec::Ma2 { h: 0.5 }.holds_for(&d1, 100).unwrap());
        assert!(!MarginSpec::Ma2 { h: 0.7 }.holds_for(&d1, 100).unwrap());
        for design in [Design::Two, Design::Three] {
            let s = spec(design, 1, 2, 1.0);
            for h in [1e-6, 0.01, 0.5] {
                assert!(!MarginSpec::Ma2 { h }.holds_for(&s, 100).unwrap());
            }
        }
        // Near t = 0 the design-2 mass is linear in t, so kappa = 2 works
        // with a large enough constant but a tiny one fails.
        let d2 = spec(Design::Two, 1, 2, 1.0);
        assert!(MarginSpec::Ma1 { c0: 10.0, kappa: 2.0 }.holds_for(&d2, 1000).unwrap());
        assert!(!MarginSpec::Ma1 { c0: 0.01, kappa: 2.0 }.holds_for(&d2, 1000).unwrap());
        assert!(MarginSpec::Ma1 { c0: 1.0, kappa: 0.5 }.validate().is_err());
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let d = generate(&spec(Design::Three, 20, 3, 1.0)).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x1,x2,x3,y\n"));
        assert_eq!(Dataset::read_csv(buf.as_slice()).unwrap(), d);

        assert!(Dataset::read_csv("x1,x2,label\n1,2,0\n".as_bytes()).is_err());
        assert!(Dataset::read_csv("x1,x2,y\n1,2,3\n".as_bytes()).is_err());
        assert!(Dataset::read_csv("x1,x2,y\n1,abc,1\n".as_bytes()).is_err());
        let reordered = Dataset::read_csv("y,x1,x2\n1,0.5,2\n0,1.5,3\n".as_bytes()).unwrap();
        assert_eq!(reordered.row(1), &[1.5, 3.0]);
        assert_eq!(reordered.labels(), &[1, 0]);
    }

    #[test]
    fn dataset_invariants() {
        assert!(Dataset::new(0, 2, vec![], vec![]).is_err());
        assert!(Dataset::new(1, 1, vec![0.0], vec![0]).is_err());
        assert!(Dataset::new(1, 2, vec![0.0, 1.0], vec![2]).is_err());
        assert!(Dataset::new(2, 2, vec![0.0, 1.0], vec![0, 1]).is_err());
        assert!(Dataset::from_rows(&[vec![0.0, 1.0], vec![1.0]], &[0, 1]).is_err());
    }
}
