use super::argmax;
use crate::represent::{Row, Samples};

/// Features binarized at `> 0`, additive smoothing `alpha`.
#[derive(Debug, Clone)]
pub struct BernoulliNb {
    log_prior: Vec<f64>,
    /// Per class: sum over j of log P(x_j = 0 | c), the score of an all-zero row.
    base: Vec<f64>,
    /// Per class, per feature: log P(on) - log P(off).
    delta: Vec<Vec<f64>>,
}

impl BernoulliNb {
    pub fn fit(x: &Samples, y: &[usize], n_classes: usize, alpha: f64) -> BernoulliNb {
        let d = x.width();
        let mut on = vec![vec![0.0; d]; n_classes];
        let mut counts = vec![0.0; n_classes];
        for (row, &c) in x.rows().zip(y) {
            counts[c] += 1.0;
            for (j, v) in row.iter() {
                if v > 0.0 {
                    on[c][j] += 1.0;
                }
            }
        }
        let n = y.len() as f64;
        let mut base = Vec::with_capacity(n_classes);
        let mut delta = Vec::with_capacity(n_classes);
        for c in 0..n_classes {
            let denom = counts[c] + 2.0 * alpha;
            let lon: Vec<f64> = on[c].iter().map(|k| ((k + alpha) / denom).ln()).collect();
            let loff: Vec<f64> = on[c]
                .iter()
                .map(|k| ((counts[c] - k + alpha) / denom).ln())
                .collect();
            base.push(loff.iter().sum());
            delta.push(lon.iter().zip(&loff).map(|(a, b)| a - b).collect());
        }
        BernoulliNb {
            log_prior: counts.iter().map(|c| (c / n).ln()).collect(),
            base,
            delta,
        }
    }

    pub fn log_joint(&self, row: Row<'_>) -> Vec<f64> {
        (0..self.log_prior.len())
            .map(|c| {
                let mut s = self.log_prior[c] + self.base[c];
                for (j, v) in row.iter() {
                    if v > 0.0 {
                        s += self.delta[c][j];
                    }
                }
                s
            })
            .collect()
    }

    pub fn predict_row(&self, row: Row<'_>) -> usize {
        argmax(&self.log_joint(row))
    }
}
