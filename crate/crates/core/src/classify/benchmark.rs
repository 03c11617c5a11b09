use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit, ClassifierSpec};
use crate::error::{Error, Result};
use crate::evaluate::{evaluate, MetricsReport};
use crate::represent::{RepresentationKind, Samples};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RowOutcome {
    Ok {
        metrics: MetricsReport,
        /// Test-set predictions, aligned with [`BenchmarkReport::test_ids`].
        predictions: Vec<usize>,
    },
    Failed {
        error: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub model: String,
    pub spec: ClassifierSpec,
    pub outcome: RowOutcome,
}

impl BenchmarkRow {
    pub fn metrics(&self) -> Option<&MetricsReport> {
        match &self.outcome {
            RowOutcome::Ok { metrics, .. } => Some(metrics),
            RowOutcome::Failed { .. } => None,
        }
    }

    pub fn predictions(&self) -> Option<&[usize]> {
        match &self.outcome {
            RowOutcome::Ok { predictions, .. } => Some(predictions),
            RowOutcome::Failed { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub representation: RepresentationKind,
    /// Sorted by model name.
    pub rows: Vec<BenchmarkRow>,
    pub test_ids: Vec<String>,
    pub gold: Vec<usize>,
}

/// Fits every roster entry on the training rows and scores it on the test
/// rows. A model that fails to fit or predict gets a `Failed` row; the
/// others are unaffected.
#[allow(clippy::too_many_arguments)]
pub fn benchmark(
    roster: &[ClassifierSpec],
    representation: RepresentationKind,
    x_train: &Samples,
    y_train: &[usize],
    x_test: &Samples,
    y_test: &[usize],
    test_ids: &[String],
) -> Result<BenchmarkReport> {
    if x_test.len() != y_test.len() || test_ids.len() != y_test.len() {
        return Err(Error::Dimension(format!(
            "test set has {} rows, {} labels, {} ids",
            x_test.len(),
            y_test.len(),
            test_ids.len()
        )));
    }
    let mut rows: Vec<BenchmarkRow> = roster
        .par_iter()
        .map(|spec| {
            let run = || -> Result<(MetricsReport, Vec<usize>)> {
                let model = fit(spec, x_train, y_train)?;
                let predictions = model.predict(x_test)?;
                Ok((evaluate(y_test, &predictions)?, predictions))
            };
            let outcome = match run() {
                Ok((metrics, predictions)) => RowOutcome::Ok { metrics, predictions },
                Err(e) => {
                    log::warn!("{} on {representation}: {e}", spec.name());
                    RowOutcome::Failed { error: e.to_string() }
                }
            };
            BenchmarkRow {
                model: spec.name().to_string(),
                spec: spec.clone(),
                outcome,
            }
        })
        .collect();
    rows.sort_by(|a, b| a.model.cmp(&b.model));
    Ok(BenchmarkReport {
        representation,
        rows,
        test_ids: test_ids.to_vec(),
        gold: y_test.to_vec(),
    })
}

impl BenchmarkReport {
    /// Both averaging modes as CSV; failed rows leave the metric cells empty.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "model",
            "representation",
            "precision_macro",
            "recall_macro",
            "f1_macro",
            "precision_weighted",
            "recall_weighted",
            "f1_weighted",
        ])?;
        for row in &self.rows {
            let mut record = vec![row.model.clone(), self.representation.to_string()];
            match row.metrics() {
                Some(m) => record.extend(
                    [
                        m.precision_macro,
                        m.recall_macro,
                        m.f1_macro,
                        m.precision_weighted,
                        m.recall_weighted,
                        m.f1_weighted,
                    ]
                    .iter()
                    .map(|v| format!("{v:.6}")),
                ),
                None => record.extend(std::iter::repeat_n(String::new(), 6)),
            }
            w.write_record(&record)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Data(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}
