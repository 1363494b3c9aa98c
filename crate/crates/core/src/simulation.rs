//! Gaussian class models, the Bayes oracle and the two simulation designs.
//!
//! Location design: majority `N(0, I)`, minority `N((1,1), I)`.
//! Scale design: `N(0, I)` against `N(0, 2I)`, either one as the minority.
//! Training samples carry an `alpha` share of minority points; test samples
//! are balanced, so the oracle uses equal priors.

use serde::{Deserialize, Serialize};

use crate::dataset::{ClassId, LabeledDataset};
use crate::error::{domain, Result};
use crate::experiment::{run_trials, MethodSet, TrialData};
use crate::metrics::TrialReport;
use crate::rng::{Purpose, TrialRng};

/// A spherical Gaussian class `N(mean, variance I)` with its prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianClassSpec {
    pub mean: Vec<f64>,
    pub variance: f64,
    pub prior: f64,
}

impl GaussianClassSpec {
    pub fn new(mean: Vec<f64>, variance: f64, prior: f64) -> Self {
        Self { mean, variance, prior }
    }

    /// Log density up to the `-(p/2) ln(2 pi)` constant shared by all classes.
    fn log_density_unnormalized(&self, x: &[f64]) -> f64 {
        let sq: f64 = x.iter().zip(&self.mean).map(|(a, m)| (a - m) * (a - m)).sum();
        -0.5 * sq / self.variance - 0.5 * self.mean.len() as f64 * self.variance.ln()
    }
}

fn validate_specs(specs: &[GaussianClassSpec]) -> Result<usize> {
    let dim = match specs.first() {
        Some(s) => s.mean.len(),
        None => return domain("need at least one class spec"),
    };
    if dim == 0 {
        return domain("class means must have dimension at least 1");
    }
    for (i, s) in specs.iter().enumerate() {
        if s.mean.len() != dim {
            return domain(format!("class {} mean has dimension {}, expected {dim}", i + 1, s.mean.len()));
        }
        if !(s.variance > 0.0 && s.variance.is_finite()) {
            return domain(format!("class {} variance must be positive", i + 1));
        }
        if !(s.prior > 0.0 && s.prior.is_finite()) {
            return domain(format!("class {} prior must be positive", i + 1));
        }
    }
    Ok(dim)
}

/// Per-class sizes `round(p_i n)` (half to even) with the remainder given to
/// the class with the largest proportion (first on ties).
pub fn class_sizes(n: usize, proportions: &[f64]) -> Result<Vec<usize>> {
    if proportions.is_empty() || proportions.iter().any(|p| !(*p >= 0.0 && p.is_finite())) {
        return domain("proportions must be finite and nonnegative");
    }
    let total: f64 = proportions.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return domain(format!("proportions sum to {total}, not 1"));
    }
    let largest = proportions
        .iter()
        .enumerate()
        .fold(0, |best, (i, p)| if *p > proportions[best] { i } else { best });
    let mut sizes: Vec<usize> = proportions
        .iter()
        .map(|p| (p * n as f64).round_ties_even() as usize)
        .collect();
    let others: usize = sizes.iter().enumerate().filter(|&(i, _)| i != largest).map(|(_, s)| s).sum();
    if others > n {
        return domain("rounded class sizes exceed the sample size");
    }
    sizes[largest] = n - others;
    Ok(sizes)
}

/// Samples `n` labeled points, class `i + 1` drawn from `specs[i]`. Rows are
/// grouped by class in class order.
pub fn sample_mixture(
    specs: &[GaussianClassSpec],
    n: usize,
    proportions: &[f64],
    seed: u64,
    stream: u64,
) -> Result<LabeledDataset> {
    let dim = validate_specs(specs)?;
    if proportions.len() != specs.len() {
        return domain(format!(
            "{} proportions for {} classes",
            proportions.len(),
            specs.len()
        ));
    }
    let sizes = class_sizes(n, proportions)?;
    let mut rng = TrialRng::from_stream(seed, stream);
    let mut points = vec![0.0; n * dim];
    rng.fill_normal(&mut points);
    let mut labels = Vec::with_capacity(n);
    let mut row = 0;
    for (c, (spec, &size)) in specs.iter().zip(&sizes).enumerate() {
        let sd = spec.variance.sqrt();
        for _ in 0..size {
            for (v, m) in points[row * dim..(row + 1) * dim].iter_mut().zip(&spec.mean) {
                *v = m + sd * *v;
            }
            labels.push(ClassId::from_index(c));
            row += 1;
        }
    }
    LabeledDataset::new(dim, points, labels, specs.len())
}

/// Argmax of `prior x density`, in log space; ties to the smaller id.
pub fn bayes_classify(specs: &[GaussianClassSpec], query: &[f64]) -> ClassId {
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (i, s) in specs.iter().enumerate() {
        let score = s.prior.ln() + s.log_density_unnormalized(query);
        if score > best_score {
            best = i;
            best_score = score;
        }
    }
    ClassId::from_index(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MinorityRole {
    /// Minority is `N(0, I)`.
    Narrow,
    /// Minority is `N(0, 2I)`.
    Wide,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "design", rename_all = "lowercase")]
pub enum Design {
    Location,
    Scale { minority_role: MinorityRole },
}

impl Design {
    pub fn name(&self) -> &'static str {
        match self {
            Design::Location => "location",
            Design::Scale { .. } => "scale",
        }
    }

    /// `[majority, minority]` with equal priors.
    pub fn class_specs(&self) -> Vec<GaussianClassSpec> {
        let origin = vec![0.0, 0.0];
        match self {
            Design::Location => vec![
                GaussianClassSpec::new(origin, 1.0, 0.5),
                GaussianClassSpec::new(vec![1.0, 1.0], 1.0, 0.5),
            ],
            Design::Scale { minority_role } => {
                let narrow = GaussianClassSpec::new(origin.clone(), 1.0, 0.5);
                let wide = GaussianClassSpec::new(origin, 2.0, 0.5);
                match minority_role {
                    MinorityRole::Narrow => vec![wide, narrow],
                    MinorityRole::Wide => vec![narrow, wide],
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub alpha: f64,
    pub trials: usize,
    pub seed: u64,
    pub methods: MethodSet,
    pub k_max: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub jobs: usize,
}

impl ExperimentConfig {
    pub fn new(alpha: f64, trials: usize, seed: u64, methods: MethodSet) -> Self {
        Self {
            alpha,
            trials,
            seed,
            methods,
            k_max: crate::binary::DEFAULT_K_MAX,
            train_size: 1000,
            test_size: 1000,
            jobs: 1,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 0.5) {
            return domain(format!("alpha must lie in (0, 0.5], got {}", self.alpha));
        }
        if self.trials == 0 {
            return domain("trials must be at least 1");
        }
        if self.test_size < 2 || self.train_size < 2 {
            return domain("train and test samples need at least 2 points");
        }
        Ok(())
    }
}

/// Runs `config.trials` independent train/test draws of `design`.
pub fn run_experiment(design: Design, config: &ExperimentConfig) -> Result<Vec<TrialReport>> {
    config.validate()?;
    let specs = design.class_specs();
    let train_props = [1.0 - config.alpha, config.alpha];
    let test_props = [0.5, 0.5];
    run_trials(config.trials, config.jobs, &config.methods, |trial| {
        let t = trial as u64;
        let seed = config.seed;
        let train = sample_mixture(
            &specs,
            config.train_size,
            &train_props,
            seed,
            crate::rng::stream_id(t, Purpose::TrainSample),
        )?;
        let test = sample_mixture(
            &specs,
            config.test_size,
            &test_props,
            seed,
            crate::rng::stream_id(t, Purpose::TestSample),
        )?;
        Ok(TrialData {
            train,
            test,
            bayes: Some(specs.clone()),
            cv_rng: TrialRng::new(seed, t, Purpose::CrossValidation),
        })
    }, config.k_max)
}

pub fn run_location_experiment(config: &ExperimentConfig) -> Result<Vec<TrialReport>> {
    run_experiment(Design::Location, config)
}

pub fn run_scale_experiment(minority_role: MinorityRole, config: &ExperimentConfig) -> Result<Vec<TrialReport>> {
    run_experiment(Design::Scale { minority_role }, config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn class_size_rounding() {
        assert_eq!(class_sizes(1000, &[0.95, 0.05]).unwrap(), vec![950, 50]);
        assert_eq!(class_sizes(4, &[0.5, 0.5]).unwrap(), vec![2, 2]);
        assert_eq!(class_sizes(1000, &[0.6, 0.4]).unwrap(), vec![600, 400]);
        // 0.15 * 10 = 1.5 -> 2 (half to even), remainder to the largest
        assert_eq!(class_sizes(10, &[0.15, 0.85]).unwrap(), vec![2, 8]);
        assert!(class_sizes(10, &[0.5, 0.6]).is_err());
        assert!(class_sizes(10, &[-0.5, 1.5]).is_err());
    }

    #[test]
    fn sampling_is_deterministic() {
        let specs = Design::Location.class_specs();
        let a = sample_mixture(&specs, 1000, &[0.95, 0.05], 9, 1).unwrap();
        let b = sample_mixture(&specs, 1000, &[0.95, 0.05], 9, 1).unwrap();
        let c = sample_mixture(&specs, 1000, &[0.95, 0.05], 9, 2).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.points(), c.points());
        assert_eq!(a.class_counts(), &[950, 50]);
    }

    #[test]
    fn bayes_location_points() {
        let specs = Design::Location.class_specs();
        assert_eq!(bayes_classify(&specs, &[0.5, 0.5]), ClassId(1));
        assert_eq!(bayes_classify(&specs, &[0.0, 0.0]), ClassId(1));
        assert_eq!(bayes_classify(&specs, &[1.0, 1.0]), ClassId(2));
    }

    #[test]
    fn bayes_scale_threshold() {
        // Boundary at |x|^2 = 2 ln 2 / (1 - 1/2) = 4 ln 2.
        let specs = Design::Scale {
            minority_role: MinorityRole::Wide,
        }
        .class_specs();
        let r = (4.0 * std::f64::consts::LN_2).sqrt();
        assert_eq!(bayes_classify(&specs, &[r * 0.999, 0.0]), ClassId(1));
        assert_eq!(bayes_classify(&specs, &[0.0, r * 1.001]), ClassId(2));
    }

    #[test]
    fn bayes_prior_scaling_invariant() {
        let mut specs = Design::Location.class_specs();
        specs[1].prior = 0.2;
        specs[0].prior = 0.8;
        let scaled: Vec<_> = specs
            .iter()
            .map(|s| GaussianClassSpec::new(s.mean.clone(), s.variance, s.prior * 7.5))
            .collect();
        let mut rng = TrialRng::new(0, 0, Purpose::Fixture);
        for _ in 0..1000 {
            let q = [3.0 * rng.uniform() - 1.0, 3.0 * rng.uniform() - 1.0];
            assert_eq!(bayes_classify(&specs, &q), bayes_classify(&scaled, &q));
        }
    }

    #[test]
    fn sample_means_converge() {
        let specs = vec![
            GaussianClassSpec::new(vec![0.0, 0.0], 1.0, 0.5),
            GaussianClassSpec::new(vec![1.0, -2.0], 2.0, 0.5),
        ];
        let n = 100_000;
        let ds = sample_mixture(&specs, 2 * n, &[0.5, 0.5], 123, 0).unwrap();
        for (c, s) in specs.iter().enumerate() {
            for j in 0..2 {
                let vals: Vec<f64> = ds
                    .rows()
                    .zip(ds.labels())
                    .filter(|(_, l)| l.index() == c)
                    .map(|(r, _)| r[j])
                    .collect();
                let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                let tol = 4.0 * s.variance.sqrt() / (n as f64).sqrt();
                assert!((mean - s.mean[j]).abs() < tol, "class {c} dim {j}: {mean}");
            }
        }
    }

    #[test]
    fn invalid_inputs() {
        let specs = Design::Location.class_specs();
        assert!(sample_mixture(&specs, 10, &[1.0], 0, 0).is_err());
        assert!(sample_mixture(&[], 10, &[], 0, 0).is_err());
        let cfg = ExperimentConfig::new(0.7, 1, 0, MethodSet::parse("bayes").unwrap());
        assert!(run_location_experiment(&cfg).is_err());
        let cfg = ExperimentConfig::new(0.1, 0, 0, MethodSet::parse("bayes").unwrap());
        assert!(run_location_experiment(&cfg).is_err());
    }
}
