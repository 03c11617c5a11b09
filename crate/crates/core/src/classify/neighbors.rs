use rayon::prelude::*;

use super::argmax_count;
use crate::represent::{Row, Samples};

#[derive(Debug, Clone)]
pub struct Knn {
    train: Samples,
    labels: Vec<usize>,
    n_classes: usize,
    k: usize,
}

impl Knn {
    pub fn fit(x: &Samples, y: &[usize], n_classes: usize, k: usize) -> Knn {
        Knn {
            train: x.clone(),
            labels: y.to_vec(),
            n_classes,
            k: k.min(x.len()),
        }
    }

    /// Neighbours ordered by (distance, training index); the vote goes to the
    /// most frequent class, lowest class on ties.
    pub fn predict_row(&self, row: Row<'_>) -> usize {
        let mut dist: Vec<(f64, usize)> = self
            .train
            .rows()
            .enumerate()
            .map(|(i, t)| (row.squared_distance(t), i))
            .collect();
        dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut counts = vec![0usize; self.n_classes];
        for &(_, i) in dist.iter().take(self.k) {
            counts[self.labels[i]] += 1;
        }
        argmax_count(&counts)
    }

    pub fn predict(&self, x: &Samples) -> Vec<usize> {
        (0..x.len())
            .into_par_iter()
            .map(|i| self.predict_row(x.row(i)))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct NearestCentroid {
    centroids: Vec<Vec<f64>>,
}

impl NearestCentroid {
    pub fn fit(x: &Samples, y: &[usize], n_classes: usize) -> NearestCentroid {
        let mut centroids = vec![vec![0.0; x.width()]; n_classes];
        let mut counts = vec![0usize; n_classes];
        for (row, &c) in x.rows().zip(y) {
            row.axpy(1.0, &mut centroids[c]);
            counts[c] += 1;
        }
        for (centroid, &count) in centroids.iter_mut().zip(&counts) {
            for v in centroid.iter_mut() {
                *v /= count.max(1) as f64;
            }
        }
        NearestCentroid { centroids }
    }

    pub fn predict_row(&self, row: Row<'_>) -> usize {
        let mut best = (f64::INFINITY, 0);
        for (c, centroid) in self.centroids.iter().enumerate() {
            let d = row.squared_distance_to(centroid);
            if d < best.0 {
                best = (d, c);
            }
        }
        best.1
    }
}
