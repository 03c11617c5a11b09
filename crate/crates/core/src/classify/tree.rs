//! Weighted-Gini CART trees, shared by the single tree and the ensembles.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{argmax, MaxFeatures, Params};
use crate::represent::{Row, Samples};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Splitter {
    /// Exhaustive midpoint thresholds.
    Best,
    /// One uniform threshold in `[min, max)` per candidate feature.
    Random,
}

#[derive(Debug, Clone)]
pub struct TreeConfig {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub max_features: MaxFeatures,
    pub splitter: Splitter,
}

impl TreeConfig {
    pub fn from_params(params: &Params, splitter: Splitter, max_features: MaxFeatures) -> TreeConfig {
        TreeConfig {
            max_depth: params.max_depth,
            min_samples_split: params.min_samples_split.max(2),
            max_features,
            splitter,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Leaf {
        class: usize,
    },
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    value: f64,
    class: usize,
    weight: f64,
}

struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
}

fn gini_mass(class_weight: &[f64]) -> f64 {
    let total: f64 = class_weight.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    total - class_weight.iter().map(|w| w * w).sum::<f64>() / total
}

struct Builder<'a> {
    x: &'a Samples,
    y: &'a [usize],
    weights: Option<&'a [f64]>,
    n_classes: usize,
    config: &'a TreeConfig,
    n_candidates: usize,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn weight(&self, i: usize) -> f64 {
        self.weights.map_or(1.0, |w| w[i])
    }

    /// Per-feature value lists for the rows in `members`. Features missing
    /// from a sparse row contribute one zero entry per class, weighted by
    /// the node mass that has no stored value.
    fn gather(&self, members: &[usize], class_weight: &[f64]) -> BTreeMap<usize, Vec<Entry>> {
        let mut by_feature: BTreeMap<usize, (Vec<Entry>, Vec<f64>, Vec<usize>)> = BTreeMap::new();
        let mut class_count = vec![0usize; self.n_classes];
        for &i in members {
            class_count[self.y[i]] += 1;
        }
        for &i in members {
            let (class, weight) = (self.y[i], self.weight(i));
            for (j, value) in self.x.row(i).iter() {
                let slot = by_feature
                    .entry(j)
                    .or_insert_with(|| (Vec::new(), vec![0.0; self.n_classes], vec![0; self.n_classes]));
                slot.0.push(Entry { value, class, weight });
                slot.1[class] += weight;
                slot.2[class] += 1;
            }
        }
        by_feature
            .into_iter()
            .map(|(j, (mut entries, stored_w, stored_n))| {
                for c in 0..self.n_classes {
                    if stored_n[c] < class_count[c] {
                        entries.push(Entry {
                            value: 0.0,
                            class: c,
                            weight: class_weight[c] - stored_w[c],
                        });
                    }
                }
                (j, entries)
            })
            .collect()
    }

    fn best_threshold(&self, entries: &mut [Entry], parent: f64, feature: usize) -> Option<Candidate> {
        entries.sort_by(|a, b| a.value.total_cmp(&b.value).then(a.class.cmp(&b.class)));
        let mut right: Vec<f64> = vec![0.0; self.n_classes];
        for e in entries.iter() {
            right[e.class] += e.weight;
        }
        let mut left = vec![0.0; self.n_classes];
        let mut best: Option<Candidate> = None;
        for k in 0..entries.len() - 1 {
            let e = entries[k];
            left[e.class] += e.weight;
            right[e.class] -= e.weight;
            let (a, b) = (e.value, entries[k + 1].value);
            if a >= b {
                continue;
            }
            let gain = parent - gini_mass(&left) - gini_mass(&right);
            if best.as_ref().is_none_or(|c| gain > c.gain) {
                let mid = a + (b - a) / 2.0;
                let threshold = if mid >= b || !mid.is_finite() { a } else { mid };
                best = Some(Candidate {
                    feature,
                    threshold,
                    gain,
                });
            }
        }
        best
    }

    fn random_threshold(
        &self,
        entries: &[Entry],
        parent: f64,
        feature: usize,
        rng: &mut ChaCha8Rng,
    ) -> Option<Candidate> {
        let lo = entries.iter().map(|e| e.value).fold(f64::INFINITY, f64::min);
        let hi = entries.iter().map(|e| e.value).fold(f64::NEG_INFINITY, f64::max);
        if !(lo < hi) {
            return None;
        }
        let threshold = rng.random_range(lo..hi);
        let mut left = vec![0.0; self.n_classes];
        let mut right = vec![0.0; self.n_classes];
        for e in entries {
            if e.value <= threshold {
                left[e.class] += e.weight;
            } else {
                right[e.class] += e.weight;
            }
        }
        Some(Candidate {
            feature,
            threshold,
            gain: parent - gini_mass(&left) - gini_mass(&right),
        })
    }

    fn is_constant(entries: &[Entry]) -> bool {
        entries.windows(2).all(|w| w[0].value == w[1].value)
    }

    fn find_split(&self, members: &[usize], class_weight: &[f64], rng: &mut ChaCha8Rng) -> Option<Candidate> {
        let parent = gini_mass(class_weight);
        let gathered = self.gather(members, class_weight);
        let width = self.x.width();
        let order: Vec<usize> = if self.n_candidates >= width {
            (0..width).collect()
        } else {
            let mut all: Vec<usize> = (0..width).collect();
            all.shuffle(rng);
            all
        };
        let mut best: Option<Candidate> = None;
        let mut visited = 0;
        for feature in order {
            if visited >= self.n_candidates {
                break;
            }
            // features with no stored value in the node are constant zero
            let Some(entries) = gathered.get(&feature) else {
                continue;
            };
            let mut entries = entries.clone();
            if Self::is_constant(&entries) {
                continue;
            }
            visited += 1;
            let candidate = match self.config.splitter {
                Splitter::Best => self.best_threshold(&mut entries, parent, feature),
                Splitter::Random => self.random_threshold(&entries, parent, feature, rng),
            };
            if let Some(c) = candidate {
                if best.as_ref().is_none_or(|b| c.gain > b.gain) {
                    best = Some(c);
                }
            }
        }
        best
    }

    fn grow(&mut self, members: Vec<usize>, depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let mut class_weight = vec![0.0; self.n_classes];
        for &i in &members {
            class_weight[self.y[i]] += self.weight(i);
        }
        let majority = argmax(&class_weight);
        let pure = class_weight.iter().filter(|w| **w > 0.0).count() <= 1;
        let at_depth = self.config.max_depth.is_some_and(|d| depth >= d);
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { class: majority });
        if pure || at_depth || members.len() < self.config.min_samples_split {
            return id;
        }
        let Some(split) = self.find_split(&members, &class_weight, rng) else {
            return id;
        };
        let (left, right): (Vec<usize>, Vec<usize>) = members
            .iter()
            .partition(|&&i| self.x.row(i).get(split.feature) <= split.threshold);
        if left.is_empty() || right.is_empty() {
            return id;
        }
        let l = self.grow(left, depth + 1, rng);
        let r = self.grow(right, depth + 1, rng);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: l,
            right: r,
        };
        id
    }
}

impl Tree {
    /// Grows a tree on `members` (row indices, repeats allowed). `weights`
    /// are indexed by row, not by position in `members`.
    pub fn fit(
        x: &Samples,
        y: &[usize],
        weights: Option<&[f64]>,
        members: &[usize],
        n_classes: usize,
        config: &TreeConfig,
        rng: &mut ChaCha8Rng,
    ) -> Tree {
        let mut builder = Builder {
            x,
            y,
            weights,
            n_classes,
            config,
            n_candidates: config.max_features.resolve(x.width()),
            nodes: Vec::new(),
        };
        builder.grow(members.to_vec(), 0, rng);
        Tree { nodes: builder.nodes }
    }

    pub fn predict_row(&self, row: Row<'_>) -> usize {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { class } => return class,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row.get(feature) <= threshold {
                        left
                    } else {
                        right
                    }
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}
