//! Token-level linguistic annotation.
//!
//! Two annotation sources share one output type: a small rule and lexicon
//! annotator that needs nothing beyond the bundled word lists, and a CoNLL-U
//! reader for annotations produced by an external tagger.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The 17 Universal POS tags. Declaration order defines the integer code
/// used by the aspect POS feature.
#[allow(clippy::upper_case_acronyms)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Upos {
    ADJ,
    ADP,
    ADV,
    AUX,
    CCONJ,
    DET,
    INTJ,
    NOUN,
    NUM,
    PART,
    PRON,
    PROPN,
    PUNCT,
    SCONJ,
    SYM,
    VERB,
    X,
}

impl Upos {
    pub const ALL: [Upos; 17] = [
        Upos::ADJ,
        Upos::ADP,
        Upos::ADV,
        Upos::AUX,
        Upos::CCONJ,
        Upos::DET,
        Upos::INTJ,
        Upos::NOUN,
        Upos::NUM,
        Upos::PART,
        Upos::PRON,
        Upos::PROPN,
        Upos::PUNCT,
        Upos::SCONJ,
        Upos::SYM,
        Upos::VERB,
        Upos::X,
    ];

    pub fn code(self) -> usize {
        self as usize
    }

    pub fn from_code(code: usize) -> Option<Upos> {
        Self::ALL.get(code).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Upos::ADJ => "ADJ",
            Upos::ADP => "ADP",
            Upos::ADV => "ADV",
            Upos::AUX => "AUX",
            Upos::CCONJ => "CCONJ",
            Upos::DET => "DET",
            Upos::INTJ => "INTJ",
            Upos::NOUN => "NOUN",
            Upos::NUM => "NUM",
            Upos::PART => "PART",
            Upos::PRON => "PRON",
            Upos::PROPN => "PROPN",
            Upos::PUNCT => "PUNCT",
            Upos::SCONJ => "SCONJ",
            Upos::SYM => "SYM",
            Upos::VERB => "VERB",
            Upos::X => "X",
        }
    }

    fn is_closed_class(self) -> bool {
        matches!(
            self,
            Upos::ADP
                | Upos::AUX
                | Upos::CCONJ
                | Upos::DET
                | Upos::PART
                | Upos::PRON
                | Upos::SCONJ
                | Upos::PUNCT
        )
    }
}

impl fmt::Display for Upos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Upos {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Upos::ALL
            .iter()
            .copied()
            .find(|u| u.as_str() == s)
            .ok_or_else(|| Error::Validation(format!("{s:?} is not a Universal POS tag")))
    }
}

/// Surface form plus `[start, end)` character offsets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSpan {
    pub surface: String,
    pub start: usize,
    pub end: usize,
}

fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '\u{2018}'
                | '\u{2019}'
                | '\u{201C}'
                | '\u{201D}'
                | '\u{00AB}'
                | '\u{00BB}'
                | '\u{2026}'
                | '\u{2013}'
                | '\u{2014}'
                | '\u{00BF}'
                | '\u{00A1}'
        )
}

/// Whitespace tokenizer. Leading and trailing punctuation characters of each
/// whitespace-delimited chunk become single-character tokens; anything
/// internal (apostrophes in contractions, decimal points) stays attached.
pub fn tokenize(text: &str) -> Vec<TokenSpan> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let push = |out: &mut Vec<TokenSpan>, start: usize, end: usize| {
        out.push(TokenSpan {
            surface: chars[start..end].iter().collect(),
            start,
            end,
        });
    };

    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_whitespace() {
            i += 1;
            continue;
        }
        let chunk_start = i;
        while i < chars.len() && !chars[i].is_whitespace() {
            i += 1;
        }
        let (mut lo, hi) = (chunk_start, i);
        while lo < hi && is_punct(chars[lo]) {
            push(&mut out, lo, lo + 1);
            lo += 1;
        }
        let mut trailing = hi;
        while trailing > lo && is_punct(chars[trailing - 1]) {
            trailing -= 1;
        }
        if lo < trailing {
            push(&mut out, lo, trailing);
        }
        for p in trailing..hi {
            push(&mut out, p, p + 1);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub lemma: String,
    pub pos: Upos,
    pub is_entity: bool,
    /// `[start, end)` in characters.
    pub char_span: [usize; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Builtin,
    Conllu,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedSentence {
    pub sentence_text: String,
    pub tokens: Vec<Token>,
    pub provenance: Provenance,
}

/// Annotations keyed by exact sentence text. Sentences shared by several
/// aspects are annotated once.
#[derive(Debug, Clone, Default)]
pub struct AnnotationIndex {
    by_text: HashMap<String, AnnotatedSentence>,
}

impl AnnotationIndex {
    pub fn insert(&mut self, sentence: AnnotatedSentence) {
        self.by_text.insert(sentence.sentence_text.clone(), sentence);
    }

    pub fn get(&self, text: &str) -> Option<&AnnotatedSentence> {
        self.by_text.get(text)
    }

    pub fn len(&self) -> usize {
        self.by_text.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_text.is_empty()
    }

    /// Annotates every distinct sentence with the builtin annotator.
    pub fn builtin<'a>(
        sentences: impl IntoIterator<Item = &'a str>,
        lexicons: &LexiconBundle,
    ) -> AnnotationIndex {
        let mut index = AnnotationIndex::default();
        for text in sentences {
            if !index.by_text.contains_key(text) {
                index.insert(annotate_builtin(text, lexicons));
            }
        }
        index
    }
}

impl FromIterator<AnnotatedSentence> for AnnotationIndex {
    fn from_iter<T: IntoIterator<Item = AnnotatedSentence>>(iter: T) -> Self {
        let mut index = AnnotationIndex::default();
        for sentence in iter {
            index.insert(sentence);
        }
        index
    }
}

#[derive(Debug, Clone)]
struct LexEntry {
    pos: Upos,
    lemma: Option<String>,
}

#[derive(Debug, Clone)]
struct LemmaRule {
    suffix: String,
    replacement: String,
    pos: Upos,
}

/// Word lists driving the builtin annotator.
#[derive(Debug, Clone)]
pub struct LexiconBundle {
    words: HashMap<String, LexEntry>,
    /// Sorted longest suffix first.
    suffix_rules: Vec<(String, Upos)>,
    /// Sorted longest suffix first.
    lemma_rules: Vec<LemmaRule>,
}

const BUILTIN_POS: &str = include_str!("../fixtures/lexicon/pos_lexicon.tsv");
const BUILTIN_SUFFIX: &str = include_str!("../fixtures/lexicon/suffix_rules.tsv");
const BUILTIN_LEMMA: &str = include_str!("../fixtures/lexicon/lemma_rules.tsv");
const BUILTIN_NEGATION: &str = include_str!("../fixtures/lexicon/negation.txt");
const BUILTIN_SYNSETS: &str = include_str!("../fixtures/lexicon/synsets.tsv");

/// Yields `(line_no, fields)` for non-empty, non-comment TSV lines.
fn tsv_rows(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            None
        } else {
            Some((i + 1, trimmed.split('\t').collect()))
        }
    })
}

fn parse_upos(line: usize, s: &str) -> Result<Upos> {
    s.trim()
        .parse()
        .map_err(|_| Error::parse(line, format!("{s:?} is not a Universal POS tag")))
}

impl LexiconBundle {
    /// The word lists compiled into the crate.
    pub fn builtin() -> LexiconBundle {
        Self::from_texts(BUILTIN_POS, BUILTIN_SUFFIX, BUILTIN_LEMMA)
            .expect("bundled lexicons are well formed")
    }

    /// Loads `pos_lexicon.tsv`, `suffix_rules.tsv` and `lemma_rules.tsv`
    /// from a directory.
    pub fn load(dir: &Path) -> Result<LexiconBundle> {
        let read = |name: &str| {
            let path = dir.join(name);
            std::fs::read_to_string(&path)
                .map_err(|e| Error::Config(format!("cannot read lexicon file {}: {e}", path.display())))
        };
        Self::from_texts(
            &read("pos_lexicon.tsv")?,
            &read("suffix_rules.tsv")?,
            &read("lemma_rules.tsv")?,
        )
    }

    pub fn from_texts(pos: &str, suffix: &str, lemma: &str) -> Result<LexiconBundle> {
        let mut words = HashMap::new();
        for (line, fields) in tsv_rows(pos) {
            if fields.len() < 2 {
                return Err(Error::parse(line, "expected word<TAB>UPOS[<TAB>lemma]"));
            }
            let lemma = fields
                .get(2)
                .map(|l| l.trim())
                .filter(|l| !l.is_empty())
                .map(str::to_string);
            words.entry(fields[0].trim().to_lowercase()).or_insert(LexEntry {
                pos: parse_upos(line, fields[1])?,
                lemma,
            });
        }

        let mut suffix_rules = Vec::new();
        for (line, fields) in tsv_rows(suffix) {
            if fields.len() < 2 {
                return Err(Error::parse(line, "expected suffix<TAB>UPOS"));
            }
            suffix_rules.push((fields[0].trim().to_lowercase(), parse_upos(line, fields[1])?));
        }
        suffix_rules.sort_by_key(|r| std::cmp::Reverse(r.0.chars().count()));

        let mut lemma_rules = Vec::new();
        for (line, fields) in tsv_rows(lemma) {
            if fields.len() < 3 {
                return Err(Error::parse(line, "expected suffix<TAB>replacement<TAB>UPOS"));
            }
            lemma_rules.push(LemmaRule {
                suffix: fields[0].trim().to_lowercase(),
                replacement: fields[1].trim().to_lowercase(),
                pos: parse_upos(line, fields[2])?,
            });
        }
        lemma_rules.sort_by_key(|r| std::cmp::Reverse(r.suffix.chars().count()));

        Ok(LexiconBundle {
            words,
            suffix_rules,
            lemma_rules,
        })
    }

    fn guess_pos(&self, lower: &str) -> Upos {
        let n = lower.chars().count();
        self.suffix_rules
            .iter()
            .find(|(suffix, _)| n >= suffix.chars().count() + 2 && lower.ends_with(suffix.as_str()))
            .map(|(_, pos)| *pos)
            .unwrap_or(Upos::NOUN)
    }

    fn lemmatize(&self, lower: &str, pos: Upos) -> String {
        for rule in &self.lemma_rules {
            if rule.pos == pos && lower.ends_with(rule.suffix.as_str()) {
                let stem = &lower[..lower.len() - rule.suffix.len()];
                if stem.chars().count() >= 2 {
                    return format!("{stem}{}", rule.replacement);
                }
            }
        }
        lower.to_string()
    }
}

fn is_number(s: &str) -> bool {
    s.chars().any(|c| c.is_ascii_digit())
        && s.chars()
            .all(|c| c.is_ascii_digit() || matches!(c, '.' | ',' | '%'))
}

/// Builtin annotation: lexicon lookup, then numeral and punctuation
/// detection, then suffix rules, then NOUN. Capitalized open-class tokens
/// after the first position are entities, as is anything the lexicon lists
/// as PROPN.
pub fn annotate_builtin(sentence: &str, lexicons: &LexiconBundle) -> AnnotatedSentence {
    let tokens = tokenize(sentence)
        .into_iter()
        .enumerate()
        .map(|(position, span)| {
            let lower = span.surface.to_lowercase();
            let entry = lexicons.words.get(&lower);
            let pos = if span.surface.chars().all(is_punct) {
                Upos::PUNCT
            } else if let Some(entry) = entry {
                entry.pos
            } else if is_number(&span.surface) {
                Upos::NUM
            } else {
                lexicons.guess_pos(&lower)
            };
            let lemma = match entry.and_then(|e| e.lemma.clone()) {
                Some(lemma) => lemma,
                None if pos == Upos::PUNCT => span.surface.clone(),
                None => lexicons.lemmatize(&lower, pos),
            };
            let capitalized = span.surface.chars().next().is_some_and(char::is_uppercase);
            let is_entity = pos == Upos::PROPN || (capitalized && position > 0 && !pos.is_closed_class());
            Token {
                surface: span.surface,
                lemma,
                pos,
                is_entity,
                char_span: [span.start, span.end],
            }
        })
        .collect();
    AnnotatedSentence {
        sentence_text: sentence.to_string(),
        tokens,
        provenance: Provenance::Builtin,
    }
}

fn byte_to_char_offsets(text: &str) -> Vec<usize> {
    // char index for every byte position that starts a char, plus the end
    let mut map = vec![usize::MAX; text.len() + 1];
    for (ci, (bi, _)) in text.char_indices().enumerate() {
        map[bi] = ci;
    }
    map[text.len()] = text.chars().count();
    map
}

/// Reads CoNLL-U blocks. Multiword ranges (`3-4`) and empty nodes (`5.1`)
/// are skipped; entities come from `NE=Yes` in the MISC column.
pub fn ingest_conllu(text: &str) -> Result<Vec<AnnotatedSentence>> {
    struct Block {
        start_line: usize,
        text: Option<String>,
        rows: Vec<(usize, String, String, Upos, bool)>,
    }

    fn finish(block: Block) -> Result<AnnotatedSentence> {
        let sentence_text = block
            .text
            .ok_or_else(|| Error::parse(block.start_line, "sentence block lacks a \"# text =\" comment"))?;
        let offsets = byte_to_char_offsets(&sentence_text);
        let mut cursor = 0;
        let mut tokens = Vec::with_capacity(block.rows.len());
        for (line, form, lemma, pos, is_entity) in block.rows {
            let found = sentence_text[cursor..]
                .find(form.as_str())
                .ok_or_else(|| Error::parse(line, format!("FORM {form:?} not found in sentence text")))?;
            let begin = cursor + found;
            let end = begin + form.len();
            cursor = end;
            tokens.push(Token {
                surface: form,
                lemma,
                pos,
                is_entity,
                char_span: [offsets[begin], offsets[end]],
            });
        }
        Ok(AnnotatedSentence {
            sentence_text,
            tokens,
            provenance: Provenance::Conllu,
        })
    }

    let mut out = Vec::new();
    let mut block: Option<Block> = None;
    for (index, raw) in text.lines().enumerate() {
        let line_no = index + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            if let Some(b) = block.take() {
                out.push(finish(b)?);
            }
            continue;
        }
        let current = block.get_or_insert_with(|| Block {
            start_line: line_no,
            text: None,
            rows: Vec::new(),
        });
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(rest) = comment.trim_start().strip_prefix("text") {
                if let Some(value) = rest.trim_start().strip_prefix('=') {
                    current.text = Some(value.strip_prefix(' ').unwrap_or(value).to_string());
                }
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(Error::parse(
                line_no,
                format!("expected 10 tab-separated columns, found {}", cols.len()),
            ));
        }
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        let pos = cols[3]
            .parse::<Upos>()
            .map_err(|_| Error::parse(line_no, format!("{:?} is not a Universal POS tag", cols[3])))?;
        let is_entity = cols[9].split('|').any(|kv| kv == "NE=Yes");
        current
            .rows
            .push((line_no, cols[1].to_string(), cols[2].to_string(), pos, is_entity));
    }
    if let Some(b) = block.take() {
        out.push(finish(b)?);
    }
    Ok(out)
}

/// Writes sentences back out as CoNLL-U with FORM, LEMMA, UPOS and the
/// entity flag; the remaining columns are `_`.
pub fn to_conllu(sentences: &[AnnotatedSentence]) -> String {
    let mut out = String::new();
    for sentence in sentences {
        out.push_str("# text = ");
        out.push_str(&sentence.sentence_text);
        out.push('\n');
        for (i, token) in sentence.tokens.iter().enumerate() {
            let misc = if token.is_entity { "NE=Yes" } else { "_" };
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t_\t_\t_\t_\t_\t{}\n",
                i + 1,
                token.surface,
                token.lemma,
                token.pos,
                misc
            ));
        }
        out.push('\n');
    }
    out
}

/// Synset counts keyed by lower-cased lemma and UPOS.
#[derive(Debug, Clone, Default)]
pub struct SynsetTable {
    counts: HashMap<(String, Upos), u32>,
}

impl SynsetTable {
    pub fn builtin() -> SynsetTable {
        Self::parse(BUILTIN_SYNSETS).expect("bundled synset table is well formed")
    }

    /// Parses `lemma<TAB>UPOS<TAB>count` lines.
    pub fn parse(text: &str) -> Result<SynsetTable> {
        let mut counts = HashMap::new();
        for (line, fields) in tsv_rows(text) {
            if fields.len() != 3 {
                return Err(Error::parse(line, "expected lemma<TAB>UPOS<TAB>count"));
            }
            let count = fields[2]
                .trim()
                .parse::<u32>()
                .map_err(|e| Error::parse(line, format!("bad count {:?}: {e}", fields[2])))?;
            counts.insert(
                (fields[0].trim().to_lowercase(), parse_upos(line, fields[1])?),
                count,
            );
        }
        Ok(SynsetTable { counts })
    }

    pub fn load(path: &Path) -> Result<SynsetTable> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read synset table {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn insert(&mut self, lemma: &str, pos: Upos, count: u32) {
        self.counts.insert((lemma.to_lowercase(), pos), count);
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

pub fn synset_count(lemma: &str, pos: Upos, table: &SynsetTable) -> u32 {
    table
        .counts
        .get(&(lemma.to_lowercase(), pos))
        .copied()
        .unwrap_or(0)
}

#[derive(Debug, Clone)]
pub struct NegationLexicon {
    words: HashSet<String>,
}

impl Default for NegationLexicon {
    fn default() -> Self {
        Self::parse(BUILTIN_NEGATION)
    }
}

impl NegationLexicon {
    /// One word per line; blank lines and `#` comments ignored.
    pub fn parse(text: &str) -> NegationLexicon {
        let words = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        NegationLexicon { words }
    }

    pub fn load(path: &Path) -> Result<NegationLexicon> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read negation lexicon {}: {e}", path.display())))?;
        Ok(Self::parse(&text))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(&word.to_lowercase())
    }
}

/// A contraction such as "don't" stays one token, so a listed "n't" also
/// matches any token ending in it.
pub fn detect_negation(tokens: &[Token], lexicon: &NegationLexicon) -> bool {
    let clitic = lexicon.contains("n't");
    tokens
        .iter()
        .any(|t| lexicon.contains(&t.surface) || (clitic && t.surface.to_lowercase().ends_with("n't")))
}
