//! SMOTE oversampling for dense feature tables.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::represent::Samples;
use crate::seed::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SingletonPolicy {
    /// A minority class with one sample has no neighbour to interpolate to.
    Error,
    /// Fill such a class with copies of its only sample.
    Duplicate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SmoteConfig {
    pub k_neighbors: usize,
    /// Columns rounded to the nearest integer and clamped at zero after
    /// interpolation.
    pub integer_columns: Vec<usize>,
    pub singleton: SingletonPolicy,
}

impl Default for SmoteConfig {
    fn default() -> Self {
        SmoteConfig {
            k_neighbors: 5,
            integer_columns: Vec::new(),
            singleton: SingletonPolicy::Error,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resampled {
    /// Originals first, then synthetic rows grouped by class in class order.
    pub samples: Samples,
    pub labels: Vec<usize>,
    pub n_original: usize,
    /// `(label, synthetic rows added)` for every label, in label order.
    pub generated: Vec<(usize, usize)>,
}

/// Raises every class to the majority count. Synthetic rows lie on the
/// segment between a uniformly drawn sample and one of its `k` nearest
/// same-class neighbours (distance ties go to the lower row index).
pub fn smote(x: &Samples, y: &[usize], config: &SmoteConfig, seed: u64) -> Result<Resampled> {
    let Samples::Dense { rows, width } = x else {
        return Err(Error::Usage("SMOTE needs dense feature rows".into()));
    };
    if rows.len() != y.len() {
        return Err(Error::Dimension(format!(
            "{} rows but {} labels",
            rows.len(),
            y.len()
        )));
    }
    if config.k_neighbors == 0 {
        return Err(Error::Config("SMOTE k_neighbors must be >= 1".into()));
    }
    if let Some(&c) = config.integer_columns.iter().find(|&&c| c >= *width) {
        return Err(Error::Config(format!("integer column {c} outside width {width}")));
    }
    x.validate()?;
    let mut labels: Vec<usize> = y.to_vec();
    labels.sort_unstable();
    labels.dedup();
    let members: Vec<Vec<usize>> = labels
        .iter()
        .map(|&l| (0..y.len()).filter(|&i| y[i] == l).collect())
        .collect();
    let majority = members.iter().map(Vec::len).max().unwrap_or(0);

    let mut r = rng(seed);
    let mut out_rows = rows.clone();
    let mut out_labels = y.to_vec();
    let mut generated = Vec::with_capacity(labels.len());
    for (&label, idx) in labels.iter().zip(&members) {
        let need = majority - idx.len();
        generated.push((label, need));
        if need == 0 {
            continue;
        }
        if idx.len() == 1 {
            match config.singleton {
                SingletonPolicy::Error => {
                    return Err(Error::Data(format!(
                        "class {label} has a single sample; SMOTE needs at least two"
                    )))
                }
                SingletonPolicy::Duplicate => {
                    out_rows.extend(std::iter::repeat_n(rows[idx[0]].clone(), need));
                    out_labels.extend(std::iter::repeat_n(label, need));
                    continue;
                }
            }
        }
        let k = config.k_neighbors.min(idx.len() - 1);
        let neighbours: Vec<Vec<usize>> = idx
            .iter()
            .map(|&i| {
                let mut others: Vec<(f64, usize)> = idx
                    .iter()
                    .filter(|&&j| j != i)
                    .map(|&j| (x.row(i).squared_distance(x.row(j)), j))
                    .collect();
                others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                others.into_iter().take(k).map(|(_, j)| j).collect()
            })
            .collect();
        for _ in 0..need {
            let b = r.random_range(0..idx.len());
            let nb = neighbours[b][r.random_range(0..k)];
            let u: f64 = r.random();
            let (base, other) = (&rows[idx[b]], &rows[nb]);
            let mut synthetic: Vec<f64> = base.iter().zip(other).map(|(a, o)| a + u * (o - a)).collect();
            for &c in &config.integer_columns {
                synthetic[c] = synthetic[c].round().max(0.0);
            }
            out_rows.push(synthetic);
            out_labels.push(label);
        }
    }
    Ok(Resampled {
        samples: Samples::Dense {
            rows: out_rows,
            width: *width,
        },
        labels: out_labels,
        n_original: rows.len(),
        generated,
    })
}
