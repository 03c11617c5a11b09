use rand::Rng;
use rayon::prelude::*;

use super::tree::{Splitter, Tree, TreeConfig};
use super::{argmax, argmax_count, Params};
use crate::represent::{Row, Samples};
use crate::seed::{derive_seed, rng};

/// Bagging, random forest and extra trees: independent trees, plain
/// majority vote.
#[derive(Debug, Clone)]
pub struct Voting {
    trees: Vec<Tree>,
    n_classes: usize,
}

impl Voting {
    pub fn fit(
        x: &Samples,
        y: &[usize],
        n_classes: usize,
        params: &Params,
        splitter: Splitter,
        seed: u64,
    ) -> Voting {
        let config = TreeConfig::from_params(params, splitter, params.max_features);
        let n = x.len();
        let trees = (0..params.n_estimators)
            .into_par_iter()
            .map(|t| {
                let mut r = rng(derive_seed(seed, t as u64));
                let members: Vec<usize> = if params.bootstrap {
                    (0..n).map(|_| r.random_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                Tree::fit(x, y, None, &members, n_classes, &config, &mut r)
            })
            .collect();
        Voting { trees, n_classes }
    }

    pub fn predict_row(&self, row: Row<'_>) -> usize {
        let mut votes = vec![0usize; self.n_classes];
        for tree in &self.trees {
            votes[tree.predict_row(row)] += 1;
        }
        argmax_count(&votes)
    }
}

/// Multiclass AdaBoost (SAMME) over shallow trees.
#[derive(Debug, Clone)]
pub struct AdaBoost {
    stages: Vec<(Tree, f64)>,
    n_classes: usize,
}

impl AdaBoost {
    pub fn fit(x: &Samples, y: &[usize], n_classes: usize, params: &Params, seed: u64) -> AdaBoost {
        let config = TreeConfig::from_params(params, Splitter::Best, params.max_features);
        let n = x.len();
        let members: Vec<usize> = (0..n).collect();
        let k = n_classes as f64;
        let mut weights = vec![1.0 / n as f64; n];
        let mut stages: Vec<(Tree, f64)> = Vec::new();
        let mut first: Option<Tree> = None;
        for m in 0..params.n_estimators {
            let tree = Tree::fit(
                x,
                y,
                Some(&weights),
                &members,
                n_classes,
                &config,
                &mut rng(derive_seed(seed, m as u64)),
            );
            let miss: Vec<bool> = (0..n).map(|i| tree.predict_row(x.row(i)) != y[i]).collect();
            let total: f64 = weights.iter().sum();
            let err = weights
                .iter()
                .zip(&miss)
                .filter(|(_, m)| **m)
                .map(|(w, _)| w)
                .sum::<f64>()
                / total;
            if err <= 0.0 {
                stages.push((tree, 1.0));
                break;
            }
            if err >= 1.0 - 1.0 / k {
                first.get_or_insert(tree);
                break;
            }
            let alpha = ((1.0 - err) / err).ln() + (k - 1.0).ln();
            for (w, &missed) in weights.iter_mut().zip(&miss) {
                if missed {
                    *w *= alpha.exp();
                }
            }
            let total: f64 = weights.iter().sum();
            for w in &mut weights {
                *w /= total;
            }
            stages.push((tree, alpha));
        }
        if stages.is_empty() {
            // the first learner was no better than chance; keep it alone
            stages.push((first.expect("at least one round"), 1.0));
        }
        AdaBoost { stages, n_classes }
    }

    pub fn predict_row(&self, row: Row<'_>) -> usize {
        let mut scores = vec![0.0; self.n_classes];
        for (tree, alpha) in &self.stages {
            scores[tree.predict_row(row)] += alpha;
        }
        argmax(&scores)
    }
}
