//! Run bundle persistence and table rendering.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classify::BenchmarkReport;
use crate::corpus::CorpusStats;
use crate::difficulty::DifficultyOutcome;
use crate::error::{Error, Result};
use crate::evaluate::KFoldResult;
use crate::represent::RepresentationKind;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub seed: u64,
    pub config_hash: String,
    pub run_id: String,
    /// Command name to completion time (seconds since the Unix epoch).
    pub timestamps: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChallengeFlag {
    pub model: String,
    pub challenging: bool,
}

/// Cross-validated difficulty prediction, one result per roster model.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DifficultyPredictions {
    pub binary: Vec<KFoldResult>,
    pub binary_smote: Vec<KFoldResult>,
    pub graded: Vec<KFoldResult>,
    pub graded_smote: Vec<KFoldResult>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunBundle {
    pub metadata: RunMetadata,
    /// Source corpora first, merged corpus last.
    pub corpus_stats: Option<Vec<CorpusStats>>,
    pub benchmarks: Option<Vec<BenchmarkReport>>,
    pub challenging: Option<BTreeMap<RepresentationKind, Vec<ChallengeFlag>>>,
    pub difficulty: Option<DifficultyOutcome>,
    pub difficulty_prediction: Option<DifficultyPredictions>,
}

impl RunBundle {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<RunBundle> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<RunBundle> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Missing(format!("run bundle {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Table {
    Datasets,
    Tokens,
    Linguistic,
    BenchmarkMacro,
    BenchmarkWeighted,
    Difficulty2,
    Difficulty2Smote,
    Difficulty6,
    Difficulty6Smote,
    Distribution,
}

impl Table {
    pub const ALL: [Table; 10] = [
        Table::Datasets,
        Table::Tokens,
        Table::Linguistic,
        Table::BenchmarkMacro,
        Table::BenchmarkWeighted,
        Table::Difficulty2,
        Table::Difficulty2Smote,
        Table::Difficulty6,
        Table::Difficulty6Smote,
        Table::Distribution,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Table::Datasets => "datasets",
            Table::Tokens => "tokens",
            Table::Linguistic => "linguistic",
            Table::BenchmarkMacro => "benchmark_macro",
            Table::BenchmarkWeighted => "benchmark_weighted",
            Table::Difficulty2 => "difficulty2",
            Table::Difficulty2Smote => "difficulty2_smote",
            Table::Difficulty6 => "difficulty6",
            Table::Difficulty6Smote => "difficulty6_smote",
            Table::Distribution => "distribution",
        }
    }

    pub fn header(self) -> &'static [&'static str] {
        match self {
            Table::Datasets => &["Data Sets", "Total", "Train", "Test", "# of classes"],
            Table::Tokens => &[
                "Data set",
                "# of observations",
                "# of unique aspects",
                "# of unique sentences",
                "Max # of tokens per aspect",
            ],
            Table::Linguistic => &[
                "Data set",
                "Class",
                "Tokens",
                "Nouns",
                "Verbs",
                "Named Entities",
                "Adjectives",
            ],
            Table::BenchmarkMacro => &["Model", "Precision (Macro)", "Recall (Macro)", "F1 (Macro)"],
            Table::BenchmarkWeighted => &[
                "Model",
                "Precision (Weighted)",
                "Recall (Weighted)",
                "F1 (Weighted)",
            ],
            Table::Difficulty2 | Table::Difficulty2Smote | Table::Difficulty6 | Table::Difficulty6Smote => {
                &["Classifier", "Mean Score"]
            }
            Table::Distribution => &["Labeling", "Class", "Count"],
        }
    }
}

impl fmt::Display for Table {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Table {
    type Err = Error;

    fn from_str(s: &str) -> Result<Table> {
        Table::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::Usage(format!("unknown table {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rendered {
    pub markdown: String,
    pub csv: String,
}

/// Rows of cells grouped into sections; Markdown draws one sub-table per
/// section, CSV prefixes each row with the section label when `label` is set.
struct Grid {
    header: Vec<String>,
    sections: Vec<(Option<String>, Vec<Vec<String>>)>,
    label: Option<&'static str>,
}

fn markdown_table(header: &[String], rows: &[Vec<String>]) -> String {
    let mut s = format!("| {} |\n", header.join(" | "));
    s.push_str(&format!("|{}\n", "---|".repeat(header.len())));
    for row in rows {
        s.push_str(&format!("| {} |\n", row.join(" | ")));
    }
    s
}

impl Grid {
    fn render(&self, title: &str) -> Result<Rendered> {
        let mut markdown = format!("# {title}\n\n");
        for (i, (name, rows)) in self.sections.iter().enumerate() {
            if i > 0 {
                markdown.push('\n');
            }
            if let Some(name) = name {
                markdown.push_str(&format!("## {name}\n\n"));
            }
            markdown.push_str(&markdown_table(&self.header, rows));
        }
        if self.sections.is_empty() {
            markdown.push_str(&markdown_table(&self.header, &[]));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = self.header.clone();
        if let Some(label) = self.label {
            header.insert(0, label.to_string());
        }
        w.write_record(&header)?;
        for (name, rows) in &self.sections {
            for row in rows {
                let mut record = row.clone();
                if self.label.is_some() {
                    record.insert(0, name.clone().unwrap_or_default());
                }
                w.write_record(&record)?;
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::Data(e.to_string()))?;
        Ok(Rendered {
            markdown,
            csv: String::from_utf8(bytes).expect("csv output is utf-8"),
        })
    }
}

fn missing(section: &str) -> Error {
    Error::Missing(format!("run bundle has no {section} section"))
}

fn kfold_rows(results: &[KFoldResult]) -> Vec<Vec<String>> {
    let mut rows: Vec<Vec<String>> = results
        .iter()
        .map(|r| {
            vec![
                r.classifier.clone(),
                r.mean_accuracy
                    .map_or_else(|| "failed".to_string(), |m| format!("{m:.4}")),
            ]
        })
        .collect();
    rows.sort();
    rows
}

pub fn render_table(bundle: &RunBundle, which: Table) -> Result<Rendered> {
    let header: Vec<String> = which.header().iter().map(|s| s.to_string()).collect();
    let single = |rows: Vec<Vec<String>>| Grid {
        header: header.clone(),
        sections: vec![(None, rows)],
        label: None,
    };
    let grid = match which {
        Table::Datasets | Table::Tokens | Table::Linguistic => {
            let stats = bundle
                .corpus_stats
                .as_ref()
                .ok_or_else(|| missing("corpus statistics"))?;
            let rows = match which {
                Table::Datasets => stats
                    .iter()
                    .map(|s| {
                        vec![
                            s.name.clone(),
                            s.total.to_string(),
                            s.train.to_string(),
                            s.test.to_string(),
                            s.n_classes.to_string(),
                        ]
                    })
                    .collect(),
                Table::Tokens => stats
                    .iter()
                    .map(|s| {
                        vec![
                            s.name.clone(),
                            s.total.to_string(),
                            s.unique_aspects.to_string(),
                            s.unique_sentences.to_string(),
                            s.max_aspect_tokens.to_string(),
                        ]
                    })
                    .collect(),
                _ => stats
                    .iter()
                    .flat_map(|s| {
                        s.classes.iter().map(move |c| {
                            vec![
                                s.name.clone(),
                                c.polarity.title().to_string(),
                                format!("{:.2}", c.mean_tokens),
                                format!("{:.2}", c.mean_nouns),
                                format!("{:.2}", c.mean_verbs),
                                format!("{:.2}", c.mean_entities),
                                format!("{:.2}", c.mean_adjectives),
                            ]
                        })
                    })
                    .collect(),
            };
            single(rows)
        }
        Table::BenchmarkMacro | Table::BenchmarkWeighted => {
            let reports = bundle.benchmarks.as_ref().ok_or_else(|| missing("benchmark"))?;
            let sections = reports
                .iter()
                .map(|r| {
                    let rows = r
                        .rows
                        .iter()
                        .map(|row| {
                            let mut cells = vec![row.model.clone()];
                            match row.metrics() {
                                Some(m) => {
                                    let values = if which == Table::BenchmarkMacro {
                                        [m.precision_macro, m.recall_macro, m.f1_macro]
                                    } else {
                                        [m.precision_weighted, m.recall_weighted, m.f1_weighted]
                                    };
                                    cells.extend(values.iter().map(|v| format!("{v:.6}")));
                                }
                                None => cells.extend(std::iter::repeat_n("failed".to_string(), 3)),
                            }
                            cells
                        })
                        .collect();
                    (Some(r.representation.to_string()), rows)
                })
                .collect();
            Grid {
                header: header.clone(),
                sections,
                label: Some("Representation"),
            }
        }
        Table::Difficulty2 | Table::Difficulty2Smote | Table::Difficulty6 | Table::Difficulty6Smote => {
            let p = bundle
                .difficulty_prediction
                .as_ref()
                .ok_or_else(|| missing("difficulty prediction"))?;
            let results = match which {
                Table::Difficulty2 => &p.binary,
                Table::Difficulty2Smote => &p.binary_smote,
                Table::Difficulty6 => &p.graded,
                _ => &p.graded_smote,
            };
            single(kfold_rows(results))
        }
        Table::Distribution => {
            let d = bundle.difficulty.as_ref().ok_or_else(|| missing("difficulty"))?;
            let dist = &d.distribution;
            let mut rows = vec![
                vec!["binary".into(), "easy".into(), dist.easy.to_string()],
                vec!["binary".into(), "difficult".into(), dist.difficult.to_string()],
            ];
            for (level, count) in dist.levels.iter().enumerate() {
                rows.push(vec![
                    format!("graded ({})", d.graded_representation),
                    format!("level {level}"),
                    count.to_string(),
                ]);
            }
            single(rows)
        }
    };
    grid.render(which.name())
}

/// Writes `<table>.md` and `<table>.csv` for each table into `dir`.
pub fn write_tables(bundle: &RunBundle, tables: &[Table], dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for &table in tables {
        let rendered = render_table(bundle, table)?;
        for (ext, body) in [("md", &rendered.markdown), ("csv", &rendered.csv)] {
            let path = dir.join(format!("{}.{ext}", table.name()));
            std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        }
    }
    Ok(())
}

/// Flags successful rows whose macro F1 is below the median of successful
/// rows. Failed rows are never flagged.
pub fn flag_challenging(report: &BenchmarkReport) -> Vec<ChallengeFlag> {
    let mut scores: Vec<f64> = report
        .rows
        .iter()
        .filter_map(|r| r.metrics().map(|m| m.f1_macro))
        .collect();
    scores.sort_by(f64::total_cmp);
    let median = match scores.len() {
        0 => f64::NEG_INFINITY,
        n if n % 2 == 1 => scores[n / 2],
        n => (scores[n / 2 - 1] + scores[n / 2]) / 2.0,
    };
    report
        .rows
        .iter()
        .map(|r| ChallengeFlag {
            model: r.model.clone(),
            challenging: r.metrics().is_some_and(|m| m.f1_macro < median),
        })
        .collect()
}
