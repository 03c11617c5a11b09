//! The classifier roster behind a uniform fit/predict contract.
//!
//! Labels are plain `usize` class codes (e.g. a polarity's canonical index);
//! a fitted model keeps the sorted distinct training labels as its class
//! list, and every tie between classes resolves to the lowest code.

mod benchmark;
mod ensemble;
pub mod linear;
mod naive_bayes;
mod neighbors;
pub mod tree;

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::represent::Samples;

pub use benchmark::{benchmark, BenchmarkReport, BenchmarkRow, RowOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    DummyMostFrequent,
    BernoulliNb,
    LogisticRegression,
    LogisticRegressionCv,
    Ridge,
    Perceptron,
    PassiveAggressive,
    LinearSvmSgd,
    Knn,
    NearestCentroid,
    DecisionTree,
    BaggingTrees,
    RandomForest,
    ExtraTrees,
    AdaboostStumps,
    // Listed so rosters can name them; fitting reports `Unimplemented`.
    KernelSvc,
    Mlp,
    GradientBoosting,
    CalibratedCv,
}

impl Algorithm {
    pub const IMPLEMENTED: [Algorithm; 15] = [
        Algorithm::DummyMostFrequent,
        Algorithm::BernoulliNb,
        Algorithm::LogisticRegression,
        Algorithm::LogisticRegressionCv,
        Algorithm::Ridge,
        Algorithm::Perceptron,
        Algorithm::PassiveAggressive,
        Algorithm::LinearSvmSgd,
        Algorithm::Knn,
        Algorithm::NearestCentroid,
        Algorithm::DecisionTree,
        Algorithm::BaggingTrees,
        Algorithm::RandomForest,
        Algorithm::ExtraTrees,
        Algorithm::AdaboostStumps,
    ];

    pub const UNIMPLEMENTED: [Algorithm; 4] = [
        Algorithm::KernelSvc,
        Algorithm::Mlp,
        Algorithm::GradientBoosting,
        Algorithm::CalibratedCv,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Algorithm::DummyMostFrequent => "dummy_most_frequent",
            Algorithm::BernoulliNb => "bernoulli_nb",
            Algorithm::LogisticRegression => "logistic_regression",
            Algorithm::LogisticRegressionCv => "logistic_regression_cv",
            Algorithm::Ridge => "ridge",
            Algorithm::Perceptron => "perceptron",
            Algorithm::PassiveAggressive => "passive_aggressive",
            Algorithm::LinearSvmSgd => "linear_svm_sgd",
            Algorithm::Knn => "knn",
            Algorithm::NearestCentroid => "nearest_centroid",
            Algorithm::DecisionTree => "decision_tree",
            Algorithm::BaggingTrees => "bagging_trees",
            Algorithm::RandomForest => "random_forest",
            Algorithm::ExtraTrees => "extra_trees",
            Algorithm::AdaboostStumps => "adaboost_stumps",
            Algorithm::KernelSvc => "kernel_svc",
            Algorithm::Mlp => "mlp",
            Algorithm::GradientBoosting => "gradient_boosting",
            Algorithm::CalibratedCv => "calibrated_cv",
        }
    }

    /// Name used in report tables.
    pub fn display_name(self) -> &'static str {
        match self {
            Algorithm::DummyMostFrequent => "DummyClassifier",
            Algorithm::BernoulliNb => "BernoulliNB",
            Algorithm::LogisticRegression => "LogisticRegression",
            Algorithm::LogisticRegressionCv => "LogisticRegressionCV",
            Algorithm::Ridge => "RidgeClassifier",
            Algorithm::Perceptron => "Perceptron",
            Algorithm::PassiveAggressive => "PassiveAggressiveClassifier",
            Algorithm::LinearSvmSgd => "SGDClassifier",
            Algorithm::Knn => "KNeighborsClassifier",
            Algorithm::NearestCentroid => "NearestCentroid",
            Algorithm::DecisionTree => "DecisionTreeClassifier",
            Algorithm::BaggingTrees => "BaggingClassifier",
            Algorithm::RandomForest => "RandomForestClassifier",
            Algorithm::ExtraTrees => "ExtraTreesClassifier",
            Algorithm::AdaboostStumps => "AdaBoostClassifier",
            Algorithm::KernelSvc => "SVC",
            Algorithm::Mlp => "MLPClassifier",
            Algorithm::GradientBoosting => "GradientBoostingClassifier",
            Algorithm::CalibratedCv => "CalibratedClassifierCV",
        }
    }

    pub fn is_implemented(self) -> bool {
        !Self::UNIMPLEMENTED.contains(&self)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    /// Accepts the snake-case id, the table display name, or `dummy`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("dummy") {
            return Ok(Algorithm::DummyMostFrequent);
        }
        Self::IMPLEMENTED
            .iter()
            .chain(Self::UNIMPLEMENTED.iter())
            .copied()
            .find(|a| a.id() == s || a.display_name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown classifier {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    All,
    Sqrt,
}

impl MaxFeatures {
    pub fn resolve(self, width: usize) -> usize {
        match self {
            MaxFeatures::All => width,
            MaxFeatures::Sqrt => ((width as f64).sqrt().floor() as usize).max(1),
        }
    }
}

/// Hyperparameters. Each algorithm reads the fields relevant to it; use
/// [`Params::default_for`] for the per-algorithm defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Params {
    pub max_epochs: usize,
    pub tolerance: f64,
    pub l2: f64,
    pub learning_rate: f64,
    pub pa_c: f64,
    pub k: usize,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub n_estimators: usize,
    pub max_features: MaxFeatures,
    pub bootstrap: bool,
    pub alpha: f64,
    pub cv_folds: usize,
    pub l2_grid: Vec<f64>,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            max_epochs: 200,
            tolerance: 1e-4,
            l2: 1e-4,
            learning_rate: 1e-2,
            pa_c: 1.0,
            k: 5,
            max_depth: Some(20),
            min_samples_split: 2,
            n_estimators: 100,
            max_features: MaxFeatures::All,
            bootstrap: false,
            alpha: 1.0,
            cv_folds: 5,
            l2_grid: vec![1e-1, 1e-2, 1e-3, 1e-4],
        }
    }
}

impl Params {
    pub fn default_for(algorithm: Algorithm) -> Params {
        let base = Params::default();
        match algorithm {
            Algorithm::Ridge => Params { l2: 1.0, ..base },
            Algorithm::Perceptron | Algorithm::PassiveAggressive | Algorithm::LinearSvmSgd => Params {
                max_epochs: 20,
                ..base
            },
            Algorithm::BaggingTrees => Params {
                n_estimators: 10,
                bootstrap: true,
                ..base
            },
            Algorithm::RandomForest => Params {
                n_estimators: 100,
                bootstrap: true,
                max_features: MaxFeatures::Sqrt,
                ..base
            },
            Algorithm::ExtraTrees => Params {
                n_estimators: 100,
                bootstrap: false,
                max_features: MaxFeatures::Sqrt,
                ..base
            },
            Algorithm::AdaboostStumps => Params {
                n_estimators: 50,
                max_depth: Some(1),
                ..base
            },
            _ => base,
        }
    }

    fn validate(&self, algorithm: Algorithm) -> Result<()> {
        let fail = |what: &str| Err(Error::Config(format!("{algorithm}: {what}")));
        use Algorithm::*;
        match algorithm {
            Knn if self.k < 1 => return fail("k must be >= 1"),
            LogisticRegression | LogisticRegressionCv | LinearSvmSgd | Perceptron | PassiveAggressive
                if self.max_epochs < 1 =>
            {
                return fail("max_epochs must be >= 1")
            }
            LinearSvmSgd if self.learning_rate <= 0.0 => return fail("learning_rate must be > 0"),
            PassiveAggressive if self.pa_c <= 0.0 => return fail("pa_c must be > 0"),
            BernoulliNb if self.alpha <= 0.0 => return fail("alpha must be > 0"),
            LogisticRegressionCv if self.cv_folds < 2 => return fail("cv_folds must be >= 2"),
            LogisticRegressionCv if self.l2_grid.is_empty() || self.l2_grid.iter().any(|&l| l < 0.0) => {
                return fail("l2_grid must be non-empty and non-negative")
            }
            BaggingTrees | RandomForest | ExtraTrees | AdaboostStumps if self.n_estimators < 1 => {
                return fail("n_estimators must be >= 1")
            }
            _ => {}
        }
        if self.max_depth == Some(0) {
            return fail("max_depth must be >= 1 or unlimited");
        }
        if !(self.l2 >= 0.0) || !self.tolerance.is_finite() {
            return fail("l2 must be >= 0 and tolerance finite");
        }
        if algorithm == Ridge && self.l2 <= 0.0 {
            return fail("ridge needs l2 > 0");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub algorithm: Algorithm,
    pub params: Params,
    pub seed: u64,
}

impl ClassifierSpec {
    pub fn new(algorithm: Algorithm, seed: u64) -> ClassifierSpec {
        ClassifierSpec {
            algorithm,
            params: Params::default_for(algorithm),
            seed,
        }
    }

    pub fn name(&self) -> &'static str {
        self.algorithm.display_name()
    }
}

#[derive(Debug, Clone)]
pub struct TrainingMeta {
    pub n_samples: usize,
    pub n_features: usize,
    pub wall_time: Duration,
}

#[derive(Debug, Clone)]
pub(crate) enum Learned {
    Dummy(usize),
    NaiveBayes(naive_bayes::BernoulliNb),
    Linear(linear::LinearScores),
    Knn(neighbors::Knn),
    Centroid(neighbors::NearestCentroid),
    Tree(tree::Tree),
    Vote(ensemble::Voting),
    Boost(ensemble::AdaBoost),
}

/// A fitted classifier. Immutable; predictions are a pure function of the
/// model and the input rows.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub spec: ClassifierSpec,
    /// Sorted distinct training labels.
    pub classes: Vec<usize>,
    pub meta: TrainingMeta,
    learned: Learned,
}

/// Class positions (indices into the sorted class list) for `y`.
fn encode(y: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let mut classes = y.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let positions = y
        .iter()
        .map(|label| classes.binary_search(label).expect("label in class list"))
        .collect();
    (classes, positions)
}

/// Index of the maximum, first one wins on ties.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn argmax_count(counts: &[usize]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate().skip(1) {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

pub fn fit(spec: &ClassifierSpec, x: &Samples, y: &[usize]) -> Result<TrainedModel> {
    let started = Instant::now();
    if !spec.algorithm.is_implemented() {
        return Err(Error::Unimplemented(spec.algorithm.display_name().to_string()));
    }
    spec.params.validate(spec.algorithm)?;
    if x.len() != y.len() {
        return Err(Error::Dimension(format!(
            "{} rows but {} labels",
            x.len(),
            y.len()
        )));
    }
    if y.is_empty() {
        return Err(Error::Data("cannot fit on zero samples".into()));
    }
    x.validate()?;
    let (classes, positions) = encode(y);
    if classes.len() < 2 && spec.algorithm != Algorithm::DummyMostFrequent {
        return Err(Error::Data(format!(
            "{} needs at least two classes, training data has one",
            spec.name()
        )));
    }
    let n_classes = classes.len();
    let p = &spec.params;
    let learned = match spec.algorithm {
        Algorithm::DummyMostFrequent => {
            let mut counts = vec![0usize; n_classes];
            for &c in &positions {
                counts[c] += 1;
            }
            Learned::Dummy(argmax_count(&counts))
        }
        Algorithm::BernoulliNb => {
            Learned::NaiveBayes(naive_bayes::BernoulliNb::fit(x, &positions, n_classes, p.alpha))
        }
        Algorithm::LogisticRegression => Learned::Linear(linear::fit_softmax(
            x,
            &positions,
            n_classes,
            p.l2,
            p.max_epochs,
            p.tolerance,
        )),
        Algorithm::LogisticRegressionCv => {
            Learned::Linear(linear::fit_softmax_cv(x, &positions, n_classes, p, spec.seed))
        }
        Algorithm::Ridge => Learned::Linear(linear::fit_ridge(x, &positions, n_classes, p.l2)?),
        Algorithm::Perceptron => Learned::Linear(linear::fit_online(
            linear::OnlineRule::Perceptron,
            x,
            &positions,
            n_classes,
            p,
            spec.seed,
        )),
        Algorithm::PassiveAggressive => Learned::Linear(linear::fit_online(
            linear::OnlineRule::PassiveAggressive,
            x,
            &positions,
            n_classes,
            p,
            spec.seed,
        )),
        Algorithm::LinearSvmSgd => Learned::Linear(linear::fit_online(
            linear::OnlineRule::HingeSgd,
            x,
            &positions,
            n_classes,
            p,
            spec.seed,
        )),
        Algorithm::Knn => Learned::Knn(neighbors::Knn::fit(x, &positions, n_classes, p.k)),
        Algorithm::NearestCentroid => {
            Learned::Centroid(neighbors::NearestCentroid::fit(x, &positions, n_classes))
        }
        Algorithm::DecisionTree => {
            let config = tree::TreeConfig::from_params(p, tree::Splitter::Best, MaxFeatures::All);
            let all: Vec<usize> = (0..x.len()).collect();
            let mut rng = crate::seed::rng(spec.seed);
            Learned::Tree(tree::Tree::fit(
                x, &positions, None, &all, n_classes, &config, &mut rng,
            ))
        }
        Algorithm::BaggingTrees | Algorithm::RandomForest | Algorithm::ExtraTrees => {
            let splitter = if spec.algorithm == Algorithm::ExtraTrees {
                tree::Splitter::Random
            } else {
                tree::Splitter::Best
            };
            Learned::Vote(ensemble::Voting::fit(
                x, &positions, n_classes, p, splitter, spec.seed,
            ))
        }
        Algorithm::AdaboostStumps => {
            Learned::Boost(ensemble::AdaBoost::fit(x, &positions, n_classes, p, spec.seed))
        }
        Algorithm::KernelSvc | Algorithm::Mlp | Algorithm::GradientBoosting | Algorithm::CalibratedCv => {
            unreachable!("rejected above")
        }
    };
    Ok(TrainedModel {
        spec: spec.clone(),
        classes,
        meta: TrainingMeta {
            n_samples: x.len(),
            n_features: x.width(),
            wall_time: started.elapsed(),
        },
        learned,
    })
}

impl TrainedModel {
    fn check_width(&self, x: &Samples) -> Result<()> {
        if x.width() != self.meta.n_features {
            return Err(Error::Dimension(format!(
                "model trained on {} features, input has {}",
                self.meta.n_features,
                x.width()
            )));
        }
        x.validate()
    }

    /// Predicted labels (from the training class list), one per row.
    pub fn predict(&self, x: &Samples) -> Result<Vec<usize>> {
        self.check_width(x)?;
        let positions: Vec<usize> = match &self.learned {
            Learned::Dummy(c) => vec![*c; x.len()],
            Learned::NaiveBayes(m) => x.rows().map(|r| m.predict_row(r)).collect(),
            Learned::Linear(m) => x.rows().map(|r| m.predict_row(r)).collect(),
            Learned::Knn(m) => m.predict(x),
            Learned::Centroid(m) => x.rows().map(|r| m.predict_row(r)).collect(),
            Learned::Tree(t) => x.rows().map(|r| t.predict_row(r)).collect(),
            Learned::Vote(m) => x.rows().map(|r| m.predict_row(r)).collect(),
            Learned::Boost(m) => x.rows().map(|r| m.predict_row(r)).collect(),
        };
        Ok(positions.into_iter().map(|p| self.classes[p]).collect())
    }

    /// Class probabilities, columns in class-list order. Only the logistic
    /// models produce them.
    pub fn predict_proba(&self, x: &Samples) -> Result<Vec<Vec<f64>>> {
        self.check_width(x)?;
        match &self.learned {
            Learned::Linear(m) if m.probabilistic => {
                Ok(x.rows().map(|r| linear::softmax(&m.scores(r))).collect())
            }
            _ => Err(Error::Unimplemented(format!(
                "probability output for {}",
                self.spec.name()
            ))),
        }
    }

    /// The regularization strength picked by the internal grid search.
    pub fn selected_l2(&self) -> Option<f64> {
        match &self.learned {
            Learned::Linear(m) => m.selected_l2,
            _ => None,
        }
    }
}
