//! Classification metrics and seeded k-fold cross-validation.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{fit, ClassifierSpec};
use crate::error::{Error, Result};
use crate::represent::Samples;
use crate::resample::{smote, SmoteConfig};
use crate::seed::{derive_seed, rng};

/// Rows are gold labels, columns predictions, both in `classes` order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<usize>,
    pub counts: Vec<Vec<usize>>,
}

pub fn confusion(gold: &[usize], predicted: &[usize], classes: &[usize]) -> Result<ConfusionMatrix> {
    if gold.len() != predicted.len() {
        return Err(Error::Dimension(format!(
            "{} gold labels but {} predictions",
            gold.len(),
            predicted.len()
        )));
    }
    let position = |label: usize| {
        classes
            .iter()
            .position(|&c| c == label)
            .ok_or_else(|| Error::Data(format!("label {label} not in class list")))
    };
    let mut counts = vec![vec![0usize; classes.len()]; classes.len()];
    for (&g, &p) in gold.iter().zip(predicted) {
        counts[position(g)?][position(p)?] += 1;
    }
    Ok(ConfusionMatrix {
        classes: classes.to_vec(),
        counts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub per_class: Vec<ClassMetrics>,
    pub precision_macro: f64,
    pub recall_macro: f64,
    pub f1_macro: f64,
    pub precision_weighted: f64,
    pub recall_weighted: f64,
    pub f1_weighted: f64,
    pub accuracy: f64,
    pub support: usize,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Per-class and averaged precision/recall/F1. Undefined ratios count as
/// zero; the macro average covers classes with gold support only.
pub fn prf(cm: &ConfusionMatrix) -> MetricsReport {
    let k = cm.classes.len();
    let total: usize = cm.counts.iter().flatten().sum();
    let mut per_class = Vec::with_capacity(k);
    for c in 0..k {
        let tp = cm.counts[c][c] as f64;
        let support: usize = cm.counts[c].iter().sum();
        let predicted: usize = (0..k).map(|g| cm.counts[g][c]).sum();
        let precision = ratio(tp, predicted as f64);
        let recall = ratio(tp, support as f64);
        per_class.push(ClassMetrics {
            class: cm.classes[c],
            precision,
            recall,
            f1: ratio(2.0 * precision * recall, precision + recall),
            support,
        });
    }
    let supported: Vec<&ClassMetrics> = per_class.iter().filter(|m| m.support > 0).collect();
    let macro_of =
        |f: fn(&ClassMetrics) -> f64| ratio(supported.iter().map(|m| f(m)).sum(), supported.len() as f64);
    let weighted_of = |f: fn(&ClassMetrics) -> f64| {
        ratio(
            per_class.iter().map(|m| f(m) * m.support as f64).sum(),
            total as f64,
        )
    };
    let correct: usize = (0..k).map(|c| cm.counts[c][c]).sum();
    MetricsReport {
        precision_macro: macro_of(|m| m.precision),
        recall_macro: macro_of(|m| m.recall),
        f1_macro: macro_of(|m| m.f1),
        precision_weighted: weighted_of(|m| m.precision),
        recall_weighted: weighted_of(|m| m.recall),
        f1_weighted: weighted_of(|m| m.f1),
        accuracy: ratio(correct as f64, total as f64),
        support: total,
        per_class,
    }
}

/// Metrics over the sorted union of gold and predicted labels.
pub fn evaluate(gold: &[usize], predicted: &[usize]) -> Result<MetricsReport> {
    let mut classes: Vec<usize> = gold.iter().chain(predicted).copied().collect();
    classes.sort_unstable();
    classes.dedup();
    Ok(prf(&confusion(gold, predicted, &classes)?))
}

impl MetricsReport {
    /// `label,precision,recall,f1,support` rows, then macro and weighted rows.
    pub fn to_csv(&self, class_name: impl Fn(usize) -> String) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["label", "precision", "recall", "f1", "support"])?;
        for m in &self.per_class {
            w.write_record([
                class_name(m.class),
                format!("{:.6}", m.precision),
                format!("{:.6}", m.recall),
                format!("{:.6}", m.f1),
                m.support.to_string(),
            ])?;
        }
        for (name, p, r, f) in [
            ("macro", self.precision_macro, self.recall_macro, self.f1_macro),
            (
                "weighted",
                self.precision_weighted,
                self.recall_weighted,
                self.f1_weighted,
            ),
        ] {
            w.write_record([
                name.to_string(),
                format!("{p:.6}"),
                format!("{r:.6}"),
                format!("{f:.6}"),
                self.support.to_string(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Data(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_markdown(&self, class_name: impl Fn(usize) -> String) -> String {
        let mut s = String::from("| Label | Precision | Recall | F1 | Support |\n|---|---|---|---|---|\n");
        for m in &self.per_class {
            s.push_str(&format!(
                "| {} | {:.6} | {:.6} | {:.6} | {} |\n",
                class_name(m.class),
                m.precision,
                m.recall,
                m.f1,
                m.support
            ));
        }
        s.push_str(&format!(
            "| macro | {:.6} | {:.6} | {:.6} | {} |\n| weighted | {:.6} | {:.6} | {:.6} | {} |\n",
            self.precision_macro,
            self.recall_macro,
            self.f1_macro,
            self.support,
            self.precision_weighted,
            self.recall_weighted,
            self.f1_weighted,
            self.support
        ));
        s
    }
}

/// Fold index per row. Each class's rows are shuffled, the per-class lists
/// are concatenated in label order, and position `p` goes to fold `p % k`.
pub fn stratified_folds(labels: &[usize], k: usize, seed: u64) -> Vec<usize> {
    let mut classes: Vec<usize> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let mut r = rng(seed);
    let mut ordered = Vec::with_capacity(labels.len());
    for c in classes {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        idx.shuffle(&mut r);
        ordered.extend(idx);
    }
    let mut fold = vec![0; labels.len()];
    for (p, i) in ordered.into_iter().enumerate() {
        fold[i] = p % k;
    }
    fold
}

pub fn plain_folds(n: usize, k: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng(seed));
    let mut fold = vec![0; n];
    for (p, i) in idx.into_iter().enumerate() {
        fold[i] = p % k;
    }
    fold
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KFoldConfig {
    pub k: usize,
    pub seed: u64,
    pub stratified: bool,
    /// Applied to each training fold only; test folds stay untouched.
    pub smote: Option<SmoteConfig>,
}

impl Default for KFoldConfig {
    fn default() -> Self {
        KFoldConfig {
            k: 10,
            seed: 42,
            stratified: true,
            smote: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldOutcome {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub accuracy: Option<f64>,
    pub error: Option<String>,
    /// `(label, synthetic rows)` when oversampling ran.
    pub synthetic: Option<Vec<(usize, usize)>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KFoldResult {
    pub classifier: String,
    pub folds: Vec<FoldOutcome>,
    /// Mean accuracy over folds that succeeded; `None` when none did.
    pub mean_accuracy: Option<f64>,
}

impl KFoldResult {
    /// One JSON object per fold.
    pub fn audit_jsonl(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Record<'a> {
            classifier: &'a str,
            #[serde(flatten)]
            fold: &'a FoldOutcome,
        }
        let mut out = String::new();
        for f in &self.folds {
            let record = Record {
                classifier: &self.classifier,
                fold: f,
            };
            out.push_str(&serde_json::to_string(&record)?);
            out.push('\n');
        }
        Ok(out)
    }
}

fn run_fold(
    spec: &ClassifierSpec,
    x: &Samples,
    y: &[usize],
    train: &[usize],
    test: &[usize],
    smote_config: Option<&SmoteConfig>,
    fold_seed: u64,
) -> Result<(f64, Option<Vec<(usize, usize)>>)> {
    let mut xtr = x.select(train);
    let mut ytr: Vec<usize> = train.iter().map(|&i| y[i]).collect();
    let mut synthetic = None;
    if let Some(cfg) = smote_config {
        let out = smote(&xtr, &ytr, cfg, derive_seed(fold_seed, 1))?;
        synthetic = Some(out.generated);
        xtr = out.samples;
        ytr = out.labels;
    }
    let fold_spec = ClassifierSpec {
        seed: derive_seed(fold_seed, 2),
        ..spec.clone()
    };
    let model = fit(&fold_spec, &xtr, &ytr)?;
    let pred = model.predict(&x.select(test))?;
    let correct = test.iter().zip(&pred).filter(|(&i, &p)| y[i] == p).count();
    Ok((correct as f64 / test.len() as f64, synthetic))
}

/// Folds run in parallel; each draws from its own derived seed, so the
/// result does not depend on scheduling. A failing fold is recorded and
/// left out of the mean.
pub fn cross_validate(
    spec: &ClassifierSpec,
    x: &Samples,
    y: &[usize],
    config: &KFoldConfig,
) -> Result<KFoldResult> {
    let n = y.len();
    if x.len() != n {
        return Err(Error::Dimension(format!("{} rows but {n} labels", x.len())));
    }
    if config.k < 2 || config.k > n {
        return Err(Error::Config(format!(
            "k-fold needs 2 <= k <= {n}, got k = {}",
            config.k
        )));
    }
    let assignment = if config.stratified {
        stratified_folds(y, config.k, config.seed)
    } else {
        plain_folds(n, config.k, config.seed)
    };
    let folds: Vec<FoldOutcome> = (0..config.k)
        .into_par_iter()
        .map(|fold| {
            let (test, train): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| assignment[i] == fold);
            let outcome = run_fold(
                spec,
                x,
                y,
                &train,
                &test,
                config.smote.as_ref(),
                derive_seed(config.seed, fold as u64),
            );
            let (accuracy, error, synthetic) = match outcome {
                Ok((acc, syn)) => (Some(acc), None, syn),
                Err(e) => (None, Some(e.to_string()), None),
            };
            FoldOutcome {
                fold,
                n_train: train.len(),
                n_test: test.len(),
                accuracy,
                error,
                synthetic,
            }
        })
        .collect();
    let ok: Vec<f64> = folds.iter().filter_map(|f| f.accuracy).collect();
    let mean_accuracy = (!ok.is_empty()).then(|| ok.iter().sum::<f64>() / ok.len() as f64);
    Ok(KFoldResult {
        classifier: spec.name().to_string(),
        folds,
        mean_accuracy,
    })
}
