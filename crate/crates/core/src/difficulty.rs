//! Binary and graded difficulty labels from benchmark predictions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::classify::BenchmarkReport;
use crate::error::{Error, Result};
use crate::represent::RepresentationKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankingMetric {
    F1Macro,
    F1Weighted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DifficultyConfig {
    pub top_k: usize,
    pub ranking_metric: RankingMetric,
    pub graded_representation: RepresentationKind,
}

impl Default for DifficultyConfig {
    fn default() -> Self {
        DifficultyConfig {
            top_k: 5,
            ranking_metric: RankingMetric::F1Macro,
            graded_representation: RepresentationKind::Dense,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Binary {
    Easy,
    Difficult,
}

impl Binary {
    pub fn code(self) -> usize {
        match self {
            Binary::Easy => 0,
            Binary::Difficult => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Binary::Easy => "easy",
            Binary::Difficult => "difficult",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DifficultyLabel {
    pub instance_id: String,
    pub binary: Binary,
    pub level: usize,
}

/// Model names of the best `top_k` successful rows: metric descending, then
/// name ascending.
pub fn top_k(report: &BenchmarkReport, config: &DifficultyConfig) -> Result<Vec<String>> {
    let mut scored: Vec<(f64, &str)> = report
        .rows
        .iter()
        .filter_map(|row| {
            row.metrics().map(|m| {
                let score = match config.ranking_metric {
                    RankingMetric::F1Macro => m.f1_macro,
                    RankingMetric::F1Weighted => m.f1_weighted,
                };
                (score, row.model.as_str())
            })
        })
        .collect();
    if config.top_k == 0 || scored.len() < config.top_k {
        return Err(Error::Data(format!(
            "{} representation: need {} successful models, have {}",
            report.representation,
            config.top_k,
            scored.len()
        )));
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(b.1)));
    Ok(scored
        .into_iter()
        .take(config.top_k)
        .map(|(_, name)| name.to_string())
        .collect())
}

fn check_lengths(lists: &[&[usize]], expected: usize) -> Result<()> {
    if let Some(bad) = lists.iter().find(|l| l.len() != expected) {
        return Err(Error::Dimension(format!(
            "prediction list of length {} where {expected} expected",
            bad.len()
        )));
    }
    Ok(())
}

/// Per-instance most frequent label; `ranked` is ordered best model first,
/// and a tie goes to the tied label the best-ranked model predicted.
pub fn majority_vote(ranked: &[&[usize]]) -> Result<Vec<usize>> {
    let Some(first) = ranked.first() else {
        return Ok(Vec::new());
    };
    check_lengths(ranked, first.len())?;
    Ok((0..first.len())
        .map(|i| {
            let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
            for preds in ranked {
                *counts.entry(preds[i]).or_default() += 1;
            }
            let top = counts.values().copied().max().unwrap_or(0);
            ranked
                .iter()
                .map(|p| p[i])
                .find(|label| counts[label] == top)
                .expect("some model holds the top count")
        })
        .collect())
}

pub fn binary_labels(vote_a: &[usize], vote_b: &[usize], gold: &[usize]) -> Result<Vec<Binary>> {
    check_lengths(&[vote_a, vote_b], gold.len())?;
    Ok(gold
        .iter()
        .zip(vote_a.iter().zip(vote_b))
        .map(|(g, (a, b))| {
            if a != g && b != g {
                Binary::Difficult
            } else {
                Binary::Easy
            }
        })
        .collect())
}

/// Number of models that got each instance right.
pub fn graded_labels(top_preds: &[&[usize]], gold: &[usize]) -> Result<Vec<usize>> {
    check_lengths(top_preds, gold.len())?;
    Ok((0..gold.len())
        .map(|i| top_preds.iter().filter(|p| p[i] == gold[i]).count())
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DifficultyDistribution {
    pub easy: usize,
    pub difficult: usize,
    /// Count per level `0..=top_k`.
    pub levels: Vec<usize>,
}

pub fn difficulty_distribution(labels: &[DifficultyLabel], top_k: usize) -> DifficultyDistribution {
    let mut levels = vec![0; top_k + 1];
    let mut difficult = 0;
    for l in labels {
        if l.level < levels.len() {
            levels[l.level] += 1;
        }
        difficult += usize::from(l.binary == Binary::Difficult);
    }
    DifficultyDistribution {
        easy: labels.len() - difficult,
        difficult,
        levels,
    }
}

impl DifficultyDistribution {
    /// `labeling,class,count` rows: the two binary classes, then each level.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["labeling", "class", "count"])?;
        w.write_record(["binary", "easy", &self.easy.to_string()])?;
        w.write_record(["binary", "difficult", &self.difficult.to_string()])?;
        for (level, count) in self.levels.iter().enumerate() {
            w.write_record(["graded", &level.to_string(), &count.to_string()])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Data(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifficultyOutcome {
    pub labels: Vec<DifficultyLabel>,
    pub top_models: BTreeMap<RepresentationKind, Vec<String>>,
    /// Representation whose top models produced the levels.
    pub graded_representation: RepresentationKind,
    pub top_k: usize,
    pub distribution: DifficultyDistribution,
}

fn ranked_predictions<'a>(report: &'a BenchmarkReport, names: &[String]) -> Vec<&'a [usize]> {
    names
        .iter()
        .map(|name| {
            report
                .rows
                .iter()
                .find(|r| &r.model == name)
                .and_then(|r| r.predictions())
                .expect("ranked model has predictions")
        })
        .collect()
}

/// Labels every test instance. With both representations the binary label
/// needs both votes wrong; with one, that vote decides alone. Levels come
/// from the configured representation, or the available one if it is absent.
pub fn label_difficulty(reports: &[BenchmarkReport], config: &DifficultyConfig) -> Result<DifficultyOutcome> {
    let Some(first) = reports.first() else {
        return Err(Error::Missing("no benchmark report to label from".into()));
    };
    for r in reports {
        if r.test_ids != first.test_ids || r.gold != first.gold {
            return Err(Error::Data(format!(
                "{} report covers a different test set",
                r.representation
            )));
        }
    }
    let gold = &first.gold;
    let mut top_models = BTreeMap::new();
    let mut votes = BTreeMap::new();
    let mut correct_counts = BTreeMap::new();
    for r in reports {
        let names = top_k(r, config)?;
        let preds = ranked_predictions(r, &names);
        votes.insert(r.representation, majority_vote(&preds)?);
        correct_counts.insert(r.representation, graded_labels(&preds, gold)?);
        top_models.insert(r.representation, names);
    }
    let all_votes: Vec<&Vec<usize>> = votes.values().collect();
    let binary = match all_votes.as_slice() {
        [only] => binary_labels(only, only, gold)?,
        [a, b] => binary_labels(a, b, gold)?,
        _ => return Err(Error::Data("expected one report per representation".into())),
    };
    let graded_representation = if correct_counts.contains_key(&config.graded_representation) {
        config.graded_representation
    } else {
        let fallback = *correct_counts.keys().next().expect("one report");
        log::warn!(
            "no {} report; graded levels use {fallback}",
            config.graded_representation
        );
        fallback
    };
    let levels = &correct_counts[&graded_representation];
    let labels: Vec<DifficultyLabel> = first
        .test_ids
        .iter()
        .zip(binary.iter().zip(levels))
        .map(|(id, (&binary, &level))| DifficultyLabel {
            instance_id: id.clone(),
            binary,
            level,
        })
        .collect();
    let distribution = difficulty_distribution(&labels, config.top_k);
    Ok(DifficultyOutcome {
        labels,
        top_models,
        graded_representation,
        top_k: config.top_k,
        distribution,
    })
}

/// One `{"id", "binary", "level"}` object per line.
pub fn labels_jsonl(labels: &[DifficultyLabel]) -> Result<String> {
    #[derive(Serialize)]
    struct Record<'a> {
        id: &'a str,
        binary: Binary,
        level: usize,
    }
    let mut out = String::new();
    for l in labels {
        let record = Record {
            id: &l.instance_id,
            binary: l.binary,
            level: l.level,
        };
        out.push_str(&serde_json::to_string(&record)?);
        out.push('\n');
    }
    Ok(out)
}
