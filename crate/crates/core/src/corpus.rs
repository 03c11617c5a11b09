//! Corpus ingestion, merging and summary statistics.
//!
//! The canonical on-disk format is one JSON object per line with the keys
//! `id`, `sentence`, `aspect`, `polarity`, `split`, `source` and an optional
//! `aspect_span` of `[start, end)` character offsets into the sentence.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::annotate::{tokenize, AnnotationIndex, Upos};
use crate::error::{Error, Result};

/// Sentiment polarity toward an aspect. Declaration order is the canonical
/// class order used by every report and confusion matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
    Neutral,
    Conflict,
}

impl Polarity {
    pub const ALL: [Polarity; 4] = [
        Polarity::Positive,
        Polarity::Negative,
        Polarity::Neutral,
        Polarity::Conflict,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Polarity> {
        Self::ALL.get(index).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Polarity::Positive => "positive",
            Polarity::Negative => "negative",
            Polarity::Neutral => "neutral",
            Polarity::Conflict => "conflict",
        }
    }

    /// Capitalized form used in rendered tables.
    pub fn title(self) -> &'static str {
        match self {
            Polarity::Positive => "Positive",
            Polarity::Negative => "Negative",
            Polarity::Neutral => "Neutral",
            Polarity::Conflict => "Conflict",
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Polarity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "positive" => Ok(Polarity::Positive),
            "negative" => Ok(Polarity::Negative),
            "neutral" => Ok(Polarity::Neutral),
            "conflict" => Ok(Polarity::Conflict),
            other => Err(Error::Validation(format!("unknown polarity {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(Error::Validation(format!("unknown split {other:?}"))),
        }
    }
}

/// One (sentence, aspect, polarity) observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub id: String,
    pub sentence: String,
    pub aspect: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aspect_span: Option<[usize; 2]>,
    pub polarity: Polarity,
    pub split: Split,
    pub source: String,
}

impl Instance {
    /// Checks the aspect invariants: non-empty, and when a span is given the
    /// sentence characters `[start, end)` spell the aspect exactly.
    pub fn validate(&self) -> Result<()> {
        if self.aspect.is_empty() {
            return Err(Error::Validation(format!("instance {}: empty aspect", self.id)));
        }
        if let Some([start, end]) = self.aspect_span {
            match char_slice(&self.sentence, start, end) {
                Some(slice) if slice == self.aspect => {}
                Some(slice) => {
                    return Err(Error::Validation(format!(
                        "instance {}: aspect_span [{start}, {end}) selects {slice:?}, expected {:?}",
                        self.id, self.aspect
                    )))
                }
                None => {
                    return Err(Error::Validation(format!(
                        "instance {}: aspect_span [{start}, {end}) out of range",
                        self.id
                    )))
                }
            }
        }
        Ok(())
    }
}

/// Substring by character (not byte) offsets.
pub fn char_slice(s: &str, start: usize, end: usize) -> Option<&str> {
    if start > end {
        return None;
    }
    let mut indices = s.char_indices().map(|(b, _)| b).chain(std::iter::once(s.len()));
    let begin = indices.nth(start)?;
    let finish = if end == start {
        begin
    } else {
        indices.nth(end - start - 1)?
    };
    Some(&s[begin..finish])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub name: String,
    pub instances: Vec<Instance>,
    pub label_space: BTreeSet<Polarity>,
}

impl Corpus {
    /// Builds a corpus after checking id uniqueness and instance invariants.
    pub fn new(name: impl Into<String>, instances: Vec<Instance>) -> Result<Corpus> {
        let mut seen = HashSet::with_capacity(instances.len());
        for instance in &instances {
            instance.validate()?;
            if !seen.insert(instance.id.as_str()) {
                return Err(Error::Validation(format!("duplicate id {:?}", instance.id)));
            }
        }
        let label_space = instances.iter().map(|i| i.polarity).collect();
        Ok(Corpus {
            name: name.into(),
            instances,
            label_space,
        })
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &Instance> {
        self.instances.iter().filter(move |i| i.split == split)
    }

    /// Serializes back to the line-delimited record format.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for instance in &self.instances {
            out.push_str(&serde_json::to_string(instance).expect("instance serializes"));
            out.push('\n');
        }
        out
    }
}

#[derive(Deserialize)]
struct RawRecord {
    id: String,
    sentence: String,
    aspect: String,
    polarity: String,
    split: String,
    source: String,
    #[serde(default)]
    aspect_span: Option<[usize; 2]>,
}

/// Parses line-delimited instance records. Blank lines are skipped and
/// unknown keys ignored.
pub fn parse_instances<R: BufRead>(reader: R, name: &str) -> Result<Corpus> {
    let mut instances = Vec::new();
    let mut seen = HashSet::new();
    for (index, line) in reader.lines().enumerate() {
        let line_no = index + 1;
        let line = line.map_err(|e| Error::parse(line_no, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(&line).map_err(|e| Error::parse(line_no, e.to_string()))?;
        let polarity = raw
            .polarity
            .parse::<Polarity>()
            .map_err(|e| Error::Validation(format!("line {line_no}: {e}")))?;
        let split = raw
            .split
            .parse::<Split>()
            .map_err(|e| Error::Validation(format!("line {line_no}: {e}")))?;
        let instance = Instance {
            id: raw.id,
            sentence: raw.sentence,
            aspect: raw.aspect,
            aspect_span: raw.aspect_span,
            polarity,
            split,
            source: raw.source,
        };
        instance
            .validate()
            .map_err(|e| Error::Validation(format!("line {line_no}: {e}")))?;
        if !seen.insert(instance.id.clone()) {
            return Err(Error::Validation(format!(
                "line {line_no}: duplicate id {:?}",
                instance.id
            )));
        }
        instances.push(instance);
    }
    Corpus::new(name, instances)
}

pub fn parse_instances_str(text: &str, name: &str) -> Result<Corpus> {
    parse_instances(text.as_bytes(), name)
}

/// Concatenates corpora in order. Ids are rewritten to `source:id`.
pub fn merge(corpora: &[Corpus], name: &str) -> Result<Corpus> {
    if corpora.is_empty() {
        return Err(Error::Usage("merge needs at least one corpus".into()));
    }
    let instances = corpora
        .iter()
        .flat_map(|c| c.instances.iter())
        .map(|i| Instance {
            id: format!("{}:{}", i.source, i.id),
            ..i.clone()
        })
        .collect();
    Corpus::new(name, instances)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub polarity: Polarity,
    pub count: usize,
    pub fraction: f64,
    pub mean_tokens: f64,
    pub mean_nouns: f64,
    pub mean_verbs: f64,
    pub mean_entities: f64,
    pub mean_adjectives: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub name: String,
    pub total: usize,
    pub train: usize,
    pub test: usize,
    pub n_classes: usize,
    /// Always four rows, in canonical polarity order.
    pub classes: Vec<ClassStats>,
    pub unique_aspects: usize,
    pub unique_sentences: usize,
    pub max_aspect_tokens: usize,
}

#[derive(Default, Clone, Copy)]
struct Sums {
    count: usize,
    tokens: usize,
    nouns: usize,
    verbs: usize,
    entities: usize,
    adjectives: usize,
}

pub fn corpus_stats(corpus: &Corpus, annotations: &AnnotationIndex) -> Result<CorpusStats> {
    let mut sums = [Sums::default(); 4];
    let mut aspects = HashSet::new();
    let mut sentences = HashSet::new();
    let mut max_aspect_tokens = 0;
    let mut train = 0;
    for instance in &corpus.instances {
        let annotation = annotations
            .get(&instance.sentence)
            .ok_or_else(|| Error::Missing(format!("no annotation for instance {}", instance.id)))?;
        if instance.split == Split::Train {
            train += 1;
        }
        aspects.insert(instance.aspect.as_str());
        sentences.insert(instance.sentence.as_str());
        max_aspect_tokens = max_aspect_tokens.max(tokenize(&instance.aspect).len());

        let s = &mut sums[instance.polarity.index()];
        s.count += 1;
        s.tokens += annotation.tokens.len();
        for token in &annotation.tokens {
            match token.pos {
                Upos::NOUN | Upos::PROPN => s.nouns += 1,
                Upos::VERB => s.verbs += 1,
                Upos::ADJ => s.adjectives += 1,
                _ => {}
            }
            if token.is_entity {
                s.entities += 1;
            }
        }
    }

    let total = corpus.len();
    let mean = |sum: usize, n: usize| if n == 0 { 0.0 } else { sum as f64 / n as f64 };
    let classes = Polarity::ALL
        .iter()
        .map(|&polarity| {
            let s = sums[polarity.index()];
            ClassStats {
                polarity,
                count: s.count,
                fraction: mean(s.count, total),
                mean_tokens: mean(s.tokens, s.count),
                mean_nouns: mean(s.nouns, s.count),
                mean_verbs: mean(s.verbs, s.count),
                mean_entities: mean(s.entities, s.count),
                mean_adjectives: mean(s.adjectives, s.count),
            }
        })
        .collect();

    Ok(CorpusStats {
        name: corpus.name.clone(),
        total,
        train,
        test: total - train,
        n_classes: corpus.label_space.len(),
        classes,
        unique_aspects: aspects.len(),
        unique_sentences: sentences.len(),
        max_aspect_tokens,
    })
}

/// Fraction of instances per polarity, canonical order.
pub fn polarity_distribution(corpus: &Corpus) -> Result<[(Polarity, f64); 4]> {
    if corpus.is_empty() {
        return Err(Error::Usage("polarity distribution of an empty corpus".into()));
    }
    let mut counts = [0usize; 4];
    for instance in &corpus.instances {
        counts[instance.polarity.index()] += 1;
    }
    let total = corpus.len() as f64;
    Ok(Polarity::ALL.map(|p| (p, counts[p.index()] as f64 / total)))
}
