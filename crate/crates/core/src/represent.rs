//! Instance-level vector representations.
//!
//! TF-IDF is fitted natively over `sentence [ASP] aspect` compositions.
//! Dense vectors are never computed here; they are read from a
//! line-delimited embedding file produced by any external encoder.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::BufRead;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annotate::tokenize;
use crate::corpus::Instance;
use crate::error::{Error, Result};

pub const ASPECT_MARKER: &str = "[ASP]";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComposedText {
    pub instance_id: String,
    pub text: String,
}

/// `sentence [ASP] aspect`, aspect appended verbatim.
pub fn compose_input(instance: &Instance) -> ComposedText {
    ComposedText {
        instance_id: instance.id.clone(),
        text: format!("{} {ASPECT_MARKER} {}", instance.sentence, instance.aspect),
    }
}

/// One sparse row: `(column, value)` pairs with strictly increasing columns.
pub type SparseRow = Vec<(u32, f64)>;

/// Feature rows as the classifiers consume them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Samples {
    Sparse { rows: Vec<SparseRow>, width: usize },
    Dense { rows: Vec<Vec<f64>>, width: usize },
}

#[derive(Debug, Clone, Copy)]
pub enum Row<'a> {
    Sparse(&'a [(u32, f64)]),
    Dense(&'a [f64]),
}

impl<'a> Row<'a> {
    /// Iterates `(column, value)`; dense rows yield every column.
    pub fn iter(self) -> Box<dyn Iterator<Item = (usize, f64)> + 'a> {
        match self {
            Row::Sparse(r) => Box::new(r.iter().map(|&(j, v)| (j as usize, v))),
            Row::Dense(r) => Box::new(r.iter().copied().enumerate()),
        }
    }

    pub fn get(self, column: usize) -> f64 {
        match self {
            Row::Sparse(r) => r
                .binary_search_by_key(&(column as u32), |&(j, _)| j)
                .map(|i| r[i].1)
                .unwrap_or(0.0),
            Row::Dense(r) => r[column],
        }
    }

    pub fn dot(self, weights: &[f64]) -> f64 {
        match self {
            Row::Sparse(r) => r.iter().map(|&(j, v)| v * weights[j as usize]).sum(),
            Row::Dense(r) => r.iter().zip(weights).map(|(a, b)| a * b).sum(),
        }
    }

    pub fn squared_norm(self) -> f64 {
        match self {
            Row::Sparse(r) => r.iter().map(|&(_, v)| v * v).sum(),
            Row::Dense(r) => r.iter().map(|v| v * v).sum(),
        }
    }

    /// `weights += scale * self`
    pub fn axpy(self, scale: f64, weights: &mut [f64]) {
        match self {
            Row::Sparse(r) => {
                for &(j, v) in r {
                    weights[j as usize] += scale * v;
                }
            }
            Row::Dense(r) => {
                for (w, v) in weights.iter_mut().zip(r) {
                    *w += scale * v;
                }
            }
        }
    }

    /// Squared Euclidean distance to a dense point.
    pub fn squared_distance_to(self, point: &[f64]) -> f64 {
        match self {
            Row::Dense(r) => r.iter().zip(point).map(|(a, b)| (a - b) * (a - b)).sum(),
            Row::Sparse(r) => {
                let mut total = 0.0;
                let mut next = 0usize;
                for &(j, v) in r {
                    let j = j as usize;
                    total += point[next..j].iter().map(|p| p * p).sum::<f64>();
                    total += (v - point[j]) * (v - point[j]);
                    next = j + 1;
                }
                total + point[next..].iter().map(|p| p * p).sum::<f64>()
            }
        }
    }

    /// Squared Euclidean distance between two rows of the same storage kind.
    pub fn squared_distance(self, other: Row<'_>) -> f64 {
        match (self, other) {
            (Row::Dense(a), Row::Dense(b)) => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum(),
            (Row::Sparse(a), Row::Sparse(b)) => {
                let (mut i, mut k, mut total) = (0, 0, 0.0);
                while i < a.len() || k < b.len() {
                    let ja = a.get(i).map_or(u32::MAX, |e| e.0);
                    let jb = b.get(k).map_or(u32::MAX, |e| e.0);
                    let d = if ja == jb {
                        let d = a[i].1 - b[k].1;
                        i += 1;
                        k += 1;
                        d
                    } else if ja < jb {
                        i += 1;
                        a[i - 1].1
                    } else {
                        k += 1;
                        b[k - 1].1
                    };
                    total += d * d;
                }
                total
            }
            (Row::Sparse(_), Row::Dense(d)) => self.squared_distance_to(d),
            (Row::Dense(d), Row::Sparse(_)) => other.squared_distance_to(d),
        }
    }
}

impl Samples {
    pub fn dense(rows: Vec<Vec<f64>>) -> Result<Samples> {
        let width = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != width) {
            return Err(Error::Dimension(format!(
                "row {bad} has width {}, expected {width}",
                rows[bad].len()
            )));
        }
        Ok(Samples::Dense { rows, width })
    }

    pub fn len(&self) -> usize {
        match self {
            Samples::Sparse { rows, .. } => rows.len(),
            Samples::Dense { rows, .. } => rows.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn width(&self) -> usize {
        match self {
            Samples::Sparse { width, .. } | Samples::Dense { width, .. } => *width,
        }
    }

    pub fn row(&self, i: usize) -> Row<'_> {
        match self {
            Samples::Sparse { rows, .. } => Row::Sparse(&rows[i]),
            Samples::Dense { rows, .. } => Row::Dense(&rows[i]),
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = Row<'_>> {
        (0..self.len()).map(move |i| self.row(i))
    }

    /// Rows at `indices`, in that order (duplicates allowed).
    pub fn select(&self, indices: &[usize]) -> Samples {
        match self {
            Samples::Sparse { rows, width } => Samples::Sparse {
                rows: indices.iter().map(|&i| rows[i].clone()).collect(),
                width: *width,
            },
            Samples::Dense { rows, width } => Samples::Dense {
                rows: indices.iter().map(|&i| rows[i].clone()).collect(),
                width: *width,
            },
        }
    }

    /// Multiplies every value by `factor`.
    pub fn scaled(&self, factor: f64) -> Samples {
        match self {
            Samples::Sparse { rows, width } => Samples::Sparse {
                rows: rows
                    .iter()
                    .map(|r| r.iter().map(|&(j, v)| (j, v * factor)).collect())
                    .collect(),
                width: *width,
            },
            Samples::Dense { rows, width } => Samples::Dense {
                rows: rows
                    .iter()
                    .map(|r| r.iter().map(|v| v * factor).collect())
                    .collect(),
                width: *width,
            },
        }
    }

    /// Checks finiteness and, for sparse rows, ordering and bounds.
    pub fn validate(&self) -> Result<()> {
        match self {
            Samples::Sparse { rows, width } => {
                for (i, row) in rows.iter().enumerate() {
                    for pair in row.windows(2) {
                        if pair[0].0 >= pair[1].0 {
                            return Err(Error::Data(format!("row {i}: sparse indices not increasing")));
                        }
                    }
                    if let Some(&(j, _)) = row.last() {
                        if j as usize >= *width {
                            return Err(Error::Dimension(format!(
                                "row {i}: column {j} outside width {width}"
                            )));
                        }
                    }
                    if row.iter().any(|(_, v)| !v.is_finite()) {
                        return Err(Error::Data(format!("row {i}: non-finite feature value")));
                    }
                }
            }
            Samples::Dense { rows, width } => {
                for (i, row) in rows.iter().enumerate() {
                    if row.len() != *width {
                        return Err(Error::Dimension(format!(
                            "row {i} has width {}, expected {width}",
                            row.len()
                        )));
                    }
                    if row.iter().any(|v| !v.is_finite()) {
                        return Err(Error::Data(format!("row {i}: non-finite feature value")));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RepresentationKind {
    Tfidf,
    Dense,
}

impl RepresentationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RepresentationKind::Tfidf => "tfidf",
            RepresentationKind::Dense => "dense",
        }
    }
}

impl std::fmt::Display for RepresentationKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Feature rows aligned to instance ids.
#[derive(Debug, Clone, PartialEq)]
pub struct RepresentationMatrix {
    pub ids: Vec<String>,
    pub samples: Samples,
    pub kind: RepresentationKind,
}

impl RepresentationMatrix {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TfidfConfig {
    pub lowercase: bool,
    pub min_df: usize,
}

impl Default for TfidfConfig {
    fn default() -> Self {
        TfidfConfig {
            lowercase: true,
            min_df: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TfidfModel {
    /// Term to column; columns follow lexicographic term order.
    pub vocabulary: BTreeMap<String, usize>,
    /// Indexed by column.
    pub document_frequency: Vec<usize>,
    pub n_docs: usize,
    pub config: TfidfConfig,
    idf: Vec<f64>,
}

/// Terms of a composed text. The aspect marker survives as one term; every
/// other chunk goes through the shared tokenizer.
pub fn terms(text: &str, lowercase: bool) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        if chunk == ASPECT_MARKER {
            out.push(if lowercase {
                ASPECT_MARKER.to_lowercase()
            } else {
                ASPECT_MARKER.to_string()
            });
            continue;
        }
        for span in tokenize(chunk) {
            out.push(if lowercase {
                span.surface.to_lowercase()
            } else {
                span.surface
            });
        }
    }
    out
}

/// Smoothed inverse document frequency, `ln((1 + n) / (1 + df)) + 1`.
pub fn smooth_idf(n_docs: usize, df: usize) -> f64 {
    ((1.0 + n_docs as f64) / (1.0 + df as f64)).ln() + 1.0
}

pub fn fit_tfidf(texts: &[ComposedText], config: TfidfConfig) -> Result<TfidfModel> {
    if texts.is_empty() {
        return Err(Error::Usage("cannot fit TF-IDF on an empty corpus".into()));
    }
    let mut df: HashMap<String, usize> = HashMap::new();
    for text in texts {
        let unique: HashSet<String> = terms(&text.text, config.lowercase).into_iter().collect();
        for term in unique {
            *df.entry(term).or_default() += 1;
        }
    }
    let retained: BTreeMap<String, usize> = df
        .into_iter()
        .filter(|&(_, d)| d >= config.min_df.max(1))
        .collect();
    let vocabulary: BTreeMap<String, usize> =
        retained.keys().enumerate().map(|(i, t)| (t.clone(), i)).collect();
    let document_frequency: Vec<usize> = retained.values().copied().collect();
    let idf = document_frequency
        .iter()
        .map(|&d| smooth_idf(texts.len(), d))
        .collect();
    Ok(TfidfModel {
        vocabulary,
        document_frequency,
        n_docs: texts.len(),
        config,
        idf,
    })
}

impl TfidfModel {
    pub fn width(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn idf(&self, term: &str) -> Option<f64> {
        self.vocabulary.get(term).map(|&i| self.idf[i])
    }

    /// Raw-count tf times idf, then L2-normalized. Unknown terms are dropped;
    /// a document with no known terms yields an empty row.
    pub fn transform_text(&self, text: &str) -> SparseRow {
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for term in terms(text, self.config.lowercase) {
            if let Some(&j) = self.vocabulary.get(&term) {
                *counts.entry(j).or_default() += 1.0;
            }
        }
        let mut row: SparseRow = counts
            .into_iter()
            .map(|(j, tf)| (j as u32, tf * self.idf[j]))
            .collect();
        let norm = row.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for entry in &mut row {
                entry.1 /= norm;
            }
        }
        row
    }

    /// Vocabulary export, `term<TAB>index<TAB>df` per line.
    pub fn vocabulary_tsv(&self) -> String {
        let mut out = String::new();
        for (term, &index) in &self.vocabulary {
            out.push_str(&format!("{term}\t{index}\t{}\n", self.document_frequency[index]));
        }
        out
    }
}

/// Rows are computed in parallel; each row depends only on its own text, so
/// the output equals the sequential result exactly.
pub fn transform_tfidf(model: &TfidfModel, texts: &[ComposedText]) -> RepresentationMatrix {
    let rows: Vec<SparseRow> = texts.par_iter().map(|t| model.transform_text(&t.text)).collect();
    RepresentationMatrix {
        ids: texts.iter().map(|t| t.instance_id.clone()).collect(),
        samples: Samples::Sparse {
            rows,
            width: model.width(),
        },
        kind: RepresentationKind::Tfidf,
    }
}

#[derive(Deserialize)]
struct EmbeddingRecord {
    id: String,
    vector: Vec<f64>,
}

/// Reads `{"id", "vector"}` lines and returns rows in `expected_ids` order.
/// Records for ids not requested are ignored.
pub fn load_dense<R: BufRead>(reader: R, expected_ids: &[String]) -> Result<RepresentationMatrix> {
    let wanted: HashSet<&str> = expected_ids.iter().map(String::as_str).collect();
    let mut width: Option<usize> = None;
    let mut vectors: HashMap<String, Vec<f64>> = HashMap::new();
    for (index, line) in reader.lines().enumerate() {
        let line_no = index + 1;
        let line = line.map_err(|e| Error::parse(line_no, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        // serde_json rejects NaN/Infinity literals, so non-finite values
        // surface here as parse errors
        let record: EmbeddingRecord =
            serde_json::from_str(&line).map_err(|e| Error::parse(line_no, e.to_string()))?;
        match width {
            None => width = Some(record.vector.len()),
            Some(w) if w != record.vector.len() => {
                return Err(Error::Dimension(format!(
                    "line {line_no}: vector for {:?} has width {}, expected {w}",
                    record.id,
                    record.vector.len()
                )))
            }
            Some(_) => {}
        }
        if record.vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data(format!("line {line_no}: non-finite value")));
        }
        if wanted.contains(record.id.as_str()) {
            vectors.insert(record.id, record.vector);
        }
    }
    let missing: Vec<&str> = expected_ids
        .iter()
        .filter(|id| !vectors.contains_key(id.as_str()))
        .map(String::as_str)
        .collect();
    if !missing.is_empty() {
        return Err(Error::Missing(format!(
            "embedding file lacks ids: {}",
            missing.join(", ")
        )));
    }
    let rows = expected_ids
        .iter()
        .map(|id| vectors[id.as_str()].clone())
        .collect();
    Ok(RepresentationMatrix {
        ids: expected_ids.to_vec(),
        samples: Samples::Dense {
            rows,
            width: width.unwrap_or(0),
        },
        kind: RepresentationKind::Dense,
    })
}
