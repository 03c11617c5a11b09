//! The nine per-instance linguistic features.

use serde::{Deserialize, Serialize};

use crate::annotate::{
    annotate_builtin, detect_negation, synset_count, AnnotatedSentence, AnnotationIndex, LexiconBundle,
    NegationLexicon, SynsetTable, Token, Upos,
};
use crate::corpus::{Corpus, Instance};
use crate::error::{Error, Result};
use crate::represent::Samples;

pub const SCHEMA: [&str; 9] = [
    "n_nouns",
    "n_verbs",
    "n_adjectives",
    "n_adverbs",
    "n_named_entities",
    "contains_negation",
    "aspect_pos_tag",
    "avg_synsets",
    "sentence_length",
];

/// Column of `aspect_pos_tag` in [`SCHEMA`].
pub const ASPECT_POS_COLUMN: usize = 6;
/// Column of `avg_synsets`, the only real-valued feature.
pub const AVG_SYNSETS_COLUMN: usize = 7;

/// Every column except `avg_synsets`.
pub fn integer_columns() -> Vec<usize> {
    (0..SCHEMA.len()).filter(|&c| c != AVG_SYNSETS_COLUMN).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub n_nouns: usize,
    pub n_verbs: usize,
    pub n_adjectives: usize,
    pub n_adverbs: usize,
    pub n_named_entities: usize,
    pub contains_negation: bool,
    /// UPOS code (see [`Upos::code`]).
    pub aspect_pos_tag: usize,
    pub avg_synsets: f64,
    pub sentence_length: usize,
}

impl FeatureVector {
    pub fn values(&self) -> [f64; 9] {
        [
            self.n_nouns as f64,
            self.n_verbs as f64,
            self.n_adjectives as f64,
            self.n_adverbs as f64,
            self.n_named_entities as f64,
            f64::from(u8::from(self.contains_negation)),
            self.aspect_pos_tag as f64,
            self.avg_synsets,
            self.sentence_length as f64,
        ]
    }
}

/// Lexical resources the extractor reads.
#[derive(Debug, Clone)]
pub struct FeatureResources {
    pub lexicons: LexiconBundle,
    pub synsets: SynsetTable,
    pub negation: NegationLexicon,
}

impl FeatureResources {
    pub fn builtin() -> FeatureResources {
        FeatureResources {
            lexicons: LexiconBundle::builtin(),
            synsets: SynsetTable::builtin(),
            negation: NegationLexicon::default(),
        }
    }
}

fn aspect_tokens(
    instance: &Instance,
    annotation: &AnnotatedSentence,
    lexicons: &LexiconBundle,
) -> Vec<Token> {
    if let Some([start, end]) = instance.aspect_span {
        let inside: Vec<Token> = annotation
            .tokens
            .iter()
            .filter(|t| t.char_span[0] < end && t.char_span[1] > start)
            .cloned()
            .collect();
        if !inside.is_empty() {
            return inside;
        }
    }
    annotate_builtin(&instance.aspect, lexicons).tokens
}

pub fn extract(
    instance: &Instance,
    annotation: &AnnotatedSentence,
    resources: &FeatureResources,
) -> Result<FeatureVector> {
    if annotation.sentence_text != instance.sentence {
        return Err(Error::Validation(format!(
            "instance {}: annotation is for a different sentence",
            instance.id
        )));
    }
    let count = |pred: fn(Upos) -> bool| annotation.tokens.iter().filter(|t| pred(t.pos)).count();
    let aspect = aspect_tokens(instance, annotation, &resources.lexicons);
    let avg_synsets = if aspect.is_empty() {
        0.0
    } else {
        aspect
            .iter()
            .map(|t| f64::from(synset_count(&t.lemma, t.pos, &resources.synsets)))
            .sum::<f64>()
            / aspect.len() as f64
    };
    Ok(FeatureVector {
        n_nouns: count(|p| matches!(p, Upos::NOUN | Upos::PROPN)),
        n_verbs: count(|p| p == Upos::VERB),
        n_adjectives: count(|p| p == Upos::ADJ),
        n_adverbs: count(|p| p == Upos::ADV),
        n_named_entities: annotation.tokens.iter().filter(|t| t.is_entity).count(),
        contains_negation: detect_negation(&annotation.tokens, &resources.negation),
        aspect_pos_tag: aspect.last().map_or(Upos::NOUN, |t| t.pos).code(),
        avg_synsets,
        sentence_length: annotation.tokens.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub ids: Vec<String>,
    pub schema: Vec<String>,
    pub rows: Vec<FeatureVector>,
}

pub fn feature_matrix(
    corpus: &Corpus,
    annotations: &AnnotationIndex,
    resources: &FeatureResources,
) -> Result<FeatureMatrix> {
    let rows = corpus
        .instances
        .iter()
        .map(|instance| {
            let annotation = annotations
                .get(&instance.sentence)
                .ok_or_else(|| Error::Missing(format!("no annotation for instance {}", instance.id)))?;
            extract(instance, annotation, resources)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FeatureMatrix {
        ids: corpus.instances.iter().map(|i| i.id.clone()).collect(),
        schema: SCHEMA.iter().map(|s| s.to_string()).collect(),
        rows,
    })
}

impl FeatureMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn select(&self, indices: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            ids: indices.iter().map(|&i| self.ids[i].clone()).collect(),
            schema: self.schema.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    /// Dense rows in schema order. With `one_hot`, the aspect tag column is
    /// replaced by 17 indicator columns appended at the end.
    pub fn to_samples(&self, one_hot: bool) -> Samples {
        let rows: Vec<Vec<f64>> = self
            .rows
            .iter()
            .map(|r| {
                let values = r.values();
                if !one_hot {
                    return values.to_vec();
                }
                let mut row: Vec<f64> = values
                    .iter()
                    .enumerate()
                    .filter(|(c, _)| *c != ASPECT_POS_COLUMN)
                    .map(|(_, v)| *v)
                    .collect();
                row.extend((0..Upos::ALL.len()).map(|k| f64::from(u8::from(k == r.aspect_pos_tag))));
                row
            })
            .collect();
        let width = if one_hot {
            SCHEMA.len() - 1 + Upos::ALL.len()
        } else {
            SCHEMA.len()
        };
        Samples::Dense { rows, width }
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["id".to_string()];
        header.extend(self.schema.iter().cloned());
        w.write_record(&header)?;
        for (id, row) in self.ids.iter().zip(&self.rows) {
            let mut record = vec![id.clone()];
            for (c, &v) in row.values().iter().enumerate() {
                record.push(if c == AVG_SYNSETS_COLUMN {
                    format!("{v:.4}")
                } else {
                    format!("{v}")
                });
            }
            w.write_record(&record)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Data(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Polarity, Split};
    use proptest::prelude::*;

    fn instance(sentence: &str, aspect: &str, span: Option<[usize; 2]>) -> Instance {
        Instance {
            id: "x".into(),
            sentence: sentence.into(),
            aspect: aspect.into(),
            aspect_span: span,
            polarity: Polarity::Neutral,
            split: Split::Test,
            source: "t".into(),
        }
    }

    fn features(i: &Instance, res: &FeatureResources) -> FeatureVector {
        let ann = annotate_builtin(&i.sentence, &res.lexicons);
        extract(i, &ann, res).unwrap()
    }

    #[test]
    fn degenerate_input_is_all_zero() {
        let res = FeatureResources::builtin();
        let f = features(&instance("", "", None), &res);
        assert_eq!(f.sentence_length, 0);
        assert!(!f.contains_negation);
        assert_eq!(f.aspect_pos_tag, Upos::NOUN.code());
        assert_eq!(f.avg_synsets, 0.0);
        assert_eq!(
            f.n_nouns + f.n_verbs + f.n_adjectives + f.n_adverbs + f.n_named_entities,
            0
        );
    }

    #[test]
    fn negated_sentence() {
        let res = FeatureResources::builtin();
        let f = features(&instance("The food was not good", "food", Some([4, 8])), &res);
        assert!(f.contains_negation);
        assert_eq!(f.sentence_length, 5);
        assert_eq!(f.aspect_pos_tag, Upos::NOUN.code());
    }

    #[test]
    fn synset_mean_over_aspect_tokens() {
        let mut res = FeatureResources::builtin();
        res.synsets = SynsetTable::default();
        res.synsets.insert("battery", Upos::NOUN, 3);
        res.synsets.insert("life", Upos::NOUN, 5);
        let with_span = instance("Good battery life", "battery life", Some([5, 17]));
        assert_eq!(features(&with_span, &res).avg_synsets, 4.0);
        let without = instance("Good battery life", "battery life", None);
        assert_eq!(features(&without, &res).avg_synsets, 4.0);
    }

    #[test]
    fn mismatched_annotation_rejected() {
        let res = FeatureResources::builtin();
        let ann = annotate_builtin("Another sentence", &res.lexicons);
        assert!(extract(&instance("The food", "food", None), &ann, &res).is_err());
    }

    #[test]
    fn one_hot_width() {
        let res = FeatureResources::builtin();
        let corpus = Corpus::new("c", vec![instance("Nice screen", "screen", None)]).unwrap();
        let ann = AnnotationIndex::builtin(["Nice screen"], &res.lexicons);
        let m = feature_matrix(&corpus, &ann, &res).unwrap();
        let s = m.to_samples(true);
        assert_eq!(s.width(), 25);
        assert_eq!(s.row(0).get(8 + Upos::NOUN.code()), 1.0);
        assert_eq!(m.to_samples(false).width(), 9);
        assert!(m.to_csv().unwrap().starts_with("id,n_nouns,n_verbs"));
    }

    proptest! {
        #[test]
        fn counts_bounded_by_length(words in prop::collection::vec("[a-zA-Z]{1,8}", 0..12)) {
            let res = FeatureResources::builtin();
            let sentence = words.join(" ");
            let aspect = words.first().cloned().unwrap_or_default();
            let f = features(&instance(&sentence, &aspect, None), &res);
            prop_assert!(f.n_nouns + f.n_verbs + f.n_adjectives + f.n_adverbs <= f.sentence_length);
            prop_assert!(f.n_named_entities <= f.sentence_length);
            prop_assert!(f.aspect_pos_tag < 17);
            let negated = features(&instance(&format!("{sentence} not"), &aspect, None), &res);
            prop_assert!(negated.contains_negation);
        }
    }
}
