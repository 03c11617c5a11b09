//! Configuration and the pipeline commands behind the command-line tool.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::annotate::{ingest_conllu, AnnotationIndex, LexiconBundle, NegationLexicon, SynsetTable};
use crate::classify::{benchmark, Algorithm, BenchmarkReport, ClassifierSpec};
use crate::corpus::{corpus_stats, merge, parse_instances, Corpus, Split};
use crate::difficulty::{label_difficulty, labels_jsonl, DifficultyConfig};
use crate::error::{Error, Result};
use crate::evaluate::{cross_validate, KFoldConfig, KFoldResult};
use crate::features::{feature_matrix, integer_columns, FeatureResources};
use crate::report::{flag_challenging, write_tables, DifficultyPredictions, RunBundle, Table};
use crate::represent::{
    compose_input, fit_tfidf, load_dense, transform_tfidf, ComposedText, RepresentationKind,
    RepresentationMatrix, TfidfConfig,
};
use crate::resample::{SingletonPolicy, SmoteConfig};
use crate::seed::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RepresentationChoice {
    Tfidf,
    Dense,
    Both,
}

impl RepresentationChoice {
    pub fn kinds(self) -> Vec<RepresentationKind> {
        match self {
            RepresentationChoice::Tfidf => vec![RepresentationKind::Tfidf],
            RepresentationChoice::Dense => vec![RepresentationKind::Dense],
            RepresentationChoice::Both => vec![RepresentationKind::Tfidf, RepresentationKind::Dense],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub corpora: Vec<PathBuf>,
    pub embeddings: Option<PathBuf>,
    /// CoNLL-U files; their sentences override the builtin annotator.
    pub annotations: Vec<PathBuf>,
    /// Directory with `pos_lexicon.tsv`, `suffix_rules.tsv`, `lemma_rules.tsv`.
    pub lexicons: Option<PathBuf>,
    pub synsets: Option<PathBuf>,
    pub negation: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KFoldSection {
    pub k: usize,
    pub stratified: bool,
    /// Also run the oversampled variant of every difficulty table.
    pub smote: bool,
}

impl Default for KFoldSection {
    fn default() -> Self {
        KFoldSection {
            k: 10,
            stratified: true,
            smote: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoteSection {
    pub k_neighbors: usize,
    pub integer_columns: Option<Vec<usize>>,
    pub singleton: SingletonPolicy,
}

impl Default for SmoteSection {
    fn default() -> Self {
        SmoteSection {
            k_neighbors: 5,
            integer_columns: None,
            singleton: SingletonPolicy::Duplicate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub out: PathBuf,
    /// Classifier ids or display names; empty selects every implemented one.
    pub roster: Vec<String>,
    pub representation: RepresentationChoice,
    pub one_hot_aspect_pos: bool,
    pub paths: Paths,
    pub tfidf: TfidfConfig,
    pub difficulty: DifficultyConfig,
    pub kfold: KFoldSection,
    pub smote: SmoteSection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 42,
            out: PathBuf::from("reports"),
            roster: Vec::new(),
            representation: RepresentationChoice::Both,
            one_hot_aspect_pos: false,
            paths: Paths::default(),
            tfidf: TfidfConfig::default(),
            difficulty: DifficultyConfig::default(),
            kfold: KFoldSection::default(),
            smote: SmoteSection::default(),
        }
    }
}

/// Values given on the command line; each one replaces the config value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub roster: Option<Vec<String>>,
    pub representation: Option<RepresentationChoice>,
    pub smote: bool,
    pub k: Option<usize>,
    pub run_id: Option<String>,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl PipelineConfig {
    /// Parses TOML; relative paths are taken from the file's directory.
    pub fn from_toml(text: &str, base: &Path) -> Result<PipelineConfig> {
        let mut config: PipelineConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let p = &mut config.paths;
        p.corpora = p.corpora.iter().map(|c| resolve(base, c)).collect();
        p.annotations = p.annotations.iter().map(|c| resolve(base, c)).collect();
        for slot in [
            &mut p.embeddings,
            &mut p.lexicons,
            &mut p.synsets,
            &mut p.negation,
        ] {
            if let Some(path) = slot.as_mut() {
                *path = resolve(base, path);
            }
        }
        config.out = resolve(base, &config.out);
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<PipelineConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(out) = &o.out {
            self.out = out.clone();
        }
        if let Some(roster) = &o.roster {
            self.roster = roster.clone();
        }
        if let Some(r) = o.representation {
            self.representation = r;
        }
        if o.smote {
            self.kfold.smote = true;
        }
        if let Some(k) = o.k {
            self.kfold.k = k;
        }
    }

    pub fn roster(&self) -> Result<Vec<Algorithm>> {
        if self.roster.is_empty() {
            return Ok(Algorithm::IMPLEMENTED.to_vec());
        }
        let mut out: Vec<Algorithm> = Vec::new();
        for name in &self.roster {
            let a: Algorithm = name.parse()?;
            if !out.contains(&a) {
                out.push(a);
            }
        }
        Ok(out)
    }

    /// Checks everything that can be checked before reading data.
    pub fn validate(&self) -> Result<()> {
        if self.paths.corpora.is_empty() {
            return Err(Error::Config("paths.corpora lists no corpus file".into()));
        }
        let mut files: Vec<(&str, &PathBuf)> = self.paths.corpora.iter().map(|p| ("corpus", p)).collect();
        files.extend(self.paths.annotations.iter().map(|p| ("annotation", p)));
        for (what, slot) in [
            ("embedding", &self.paths.embeddings),
            ("synset", &self.paths.synsets),
            ("negation", &self.paths.negation),
        ] {
            if let Some(p) = slot {
                files.push((what, p));
            }
        }
        for (what, path) in files {
            if !path.is_file() {
                return Err(Error::Config(format!(
                    "{what} file {} does not exist",
                    path.display()
                )));
            }
        }
        if let Some(dir) = &self.paths.lexicons {
            if !dir.is_dir() {
                return Err(Error::Config(format!(
                    "lexicon directory {} does not exist",
                    dir.display()
                )));
            }
        }
        let roster = self.roster()?;
        if roster.is_empty() {
            return Err(Error::Config("roster is empty".into()));
        }
        if self.representation != RepresentationChoice::Tfidf && self.paths.embeddings.is_none() {
            return Err(Error::Config(
                "dense representation requested but paths.embeddings is not set".into(),
            ));
        }
        if self.difficulty.top_k < 1 {
            return Err(Error::Config("difficulty.top_k must be >= 1".into()));
        }
        if self.kfold.k < 2 {
            return Err(Error::Config(format!("kfold.k = {} must be >= 2", self.kfold.k)));
        }
        if self.smote.k_neighbors < 1 {
            return Err(Error::Config("smote.k_neighbors must be >= 1".into()));
        }
        if let Some(cols) = &self.smote.integer_columns {
            if let Some(c) = cols.iter().find(|&&c| c >= 9) {
                return Err(Error::Config(format!(
                    "smote.integer_columns: no feature column {c}"
                )));
            }
        }
        if self.one_hot_aspect_pos && self.smote.integer_columns.is_some() {
            return Err(Error::Config(
                "smote.integer_columns refers to the 9-column layout; leave it unset with one_hot_aspect_pos"
                    .into(),
            ));
        }
        Ok(())
    }

    /// Hex SHA-256 of the configuration without the output directory.
    pub fn config_hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.out = PathBuf::new();
        let json = serde_json::to_string(&canonical).expect("config serializes");
        Sha256::digest(json.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn run_id(&self) -> String {
        self.config_hash()[..12].to_string()
    }

    fn smote_config(&self) -> SmoteConfig {
        SmoteConfig {
            k_neighbors: self.smote.k_neighbors,
            integer_columns: self.smote.integer_columns.clone().unwrap_or_else(|| {
                if self.one_hot_aspect_pos {
                    // counts, flag and the 17 indicators are all integral
                    (0..25)
                        .filter(|&c| c != crate::features::AVG_SYNSETS_COLUMN)
                        .collect()
                } else {
                    integer_columns()
                }
            }),
            singleton: self.smote.singleton,
        }
    }
}

/// Maps an error to the process exit status: 2 for bad input or
/// configuration, 3 for failures during computation or output.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Data(_) | Error::Unimplemented(_) | Error::Io { .. } => 3,
        _ => 2,
    }
}

/// A validated configuration plus the location of its run directory.
pub struct Run {
    pub config: PipelineConfig,
    pub run_id: String,
    pub dir: PathBuf,
}

impl Run {
    pub fn new(mut config: PipelineConfig, overrides: &Overrides) -> Result<Run> {
        config.apply(overrides);
        config.validate()?;
        let run_id = overrides.run_id.clone().unwrap_or_else(|| config.run_id());
        let dir = config.out.join(&run_id);
        Ok(Run { config, run_id, dir })
    }

    pub fn bundle_path(&self) -> PathBuf {
        self.dir.join("bundle.json")
    }

    fn load_or_new_bundle(&self) -> Result<RunBundle> {
        let path = self.bundle_path();
        let mut bundle = if path.exists() {
            RunBundle::load(&path)?
        } else {
            RunBundle::default()
        };
        bundle.metadata.seed = self.config.seed;
        bundle.metadata.config_hash = self.config.config_hash();
        bundle.metadata.run_id = self.run_id.clone();
        Ok(bundle)
    }

    fn existing_bundle(&self) -> Result<RunBundle> {
        let path = self.bundle_path();
        if !path.exists() {
            return Err(Error::Missing(format!(
                "no run bundle at {}; run the earlier pipeline steps first",
                path.display()
            )));
        }
        RunBundle::load(&path)
    }

    fn finish(&self, mut bundle: RunBundle, command: &str, tables: &[Table]) -> Result<()> {
        std::fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        let now = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        bundle.metadata.timestamps.insert(command.to_string(), now);
        write_tables(&bundle, tables, &self.dir)?;
        bundle.save(&self.bundle_path())
    }

    fn write(&self, name: &str, body: &str) -> Result<()> {
        std::fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        let path = self.dir.join(name);
        std::fs::write(&path, body).map_err(|e| Error::io(&path, e))
    }
}

/// Source corpora, each named after its file stem.
pub fn load_corpora(paths: &[PathBuf]) -> Result<Vec<Corpus>> {
    paths
        .iter()
        .map(|p| {
            let file =
                File::open(p).map_err(|e| Error::Config(format!("cannot open {}: {e}", p.display())))?;
            let name = p
                .file_stem()
                .map_or_else(|| "corpus".to_string(), |s| s.to_string_lossy().into_owned());
            parse_instances(BufReader::new(file), &name)
        })
        .collect()
}

fn resources(config: &PipelineConfig) -> Result<FeatureResources> {
    let p = &config.paths;
    Ok(FeatureResources {
        lexicons: match &p.lexicons {
            Some(dir) => LexiconBundle::load(dir)?,
            None => LexiconBundle::builtin(),
        },
        synsets: match &p.synsets {
            Some(path) => SynsetTable::load(path)?,
            None => SynsetTable::builtin(),
        },
        negation: match &p.negation {
            Some(path) => NegationLexicon::load(path)?,
            None => NegationLexicon::default(),
        },
    })
}

fn annotations(
    config: &PipelineConfig,
    corpora: &[Corpus],
    res: &FeatureResources,
) -> Result<AnnotationIndex> {
    let mut index = AnnotationIndex::builtin(
        corpora
            .iter()
            .flat_map(|c| c.instances.iter().map(|i| i.sentence.as_str())),
        &res.lexicons,
    );
    for path in &config.paths.annotations {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        for sentence in ingest_conllu(&text)? {
            index.insert(sentence);
        }
    }
    Ok(index)
}

struct Prepared {
    corpora: Vec<Corpus>,
    merged: Corpus,
    resources: FeatureResources,
    annotations: AnnotationIndex,
}

fn prepare(config: &PipelineConfig) -> Result<Prepared> {
    let corpora = load_corpora(&config.paths.corpora)?;
    let merged = merge(&corpora, "merged")?;
    let resources = resources(config)?;
    let annotations = annotations(config, &corpora, &resources)?;
    Ok(Prepared {
        corpora,
        merged,
        resources,
        annotations,
    })
}

pub fn cmd_stats(run: &Run) -> Result<()> {
    let p = prepare(&run.config)?;
    let mut stats = p
        .corpora
        .iter()
        .map(|c| corpus_stats(c, &p.annotations))
        .collect::<Result<Vec<_>>>()?;
    if p.corpora.len() > 1 {
        stats.push(corpus_stats(&p.merged, &p.annotations)?);
    }
    let mut bundle = run.load_or_new_bundle()?;
    bundle.corpus_stats = Some(stats);
    run.finish(
        bundle,
        "stats",
        &[Table::Datasets, Table::Tokens, Table::Linguistic],
    )
}

fn labels(corpus: &Corpus, split: Split) -> Vec<usize> {
    corpus.split(split).map(|i| i.polarity.index()).collect()
}

fn roster_specs(config: &PipelineConfig) -> Result<Vec<ClassifierSpec>> {
    Ok(config
        .roster()?
        .into_iter()
        .map(|a| {
            let stream = Algorithm::IMPLEMENTED
                .iter()
                .chain(Algorithm::UNIMPLEMENTED.iter())
                .position(|&x| x == a)
                .expect("listed algorithm");
            ClassifierSpec::new(a, derive_seed(config.seed, stream as u64))
        })
        .collect())
}

pub fn cmd_benchmark(run: &Run) -> Result<()> {
    let config = &run.config;
    let specs = roster_specs(config)?;
    let merged = merge(&load_corpora(&config.paths.corpora)?, "merged")?;
    let train: Vec<ComposedText> = merged.split(Split::Train).map(compose_input).collect();
    let test: Vec<ComposedText> = merged.split(Split::Test).map(compose_input).collect();
    if train.is_empty() || test.is_empty() {
        return Err(Error::Validation(
            "benchmark needs both train and test instances".into(),
        ));
    }
    let (y_train, y_test) = (labels(&merged, Split::Train), labels(&merged, Split::Test));
    let ids = |texts: &[ComposedText]| texts.iter().map(|t| t.instance_id.clone()).collect::<Vec<_>>();
    let test_ids = ids(&test);

    let mut reports: Vec<BenchmarkReport> = Vec::new();
    for kind in config.representation.kinds() {
        let (xtr, xte): (RepresentationMatrix, RepresentationMatrix) = match kind {
            RepresentationKind::Tfidf => {
                let model = fit_tfidf(&train, config.tfidf)?;
                (transform_tfidf(&model, &train), transform_tfidf(&model, &test))
            }
            RepresentationKind::Dense => {
                let path = config.paths.embeddings.as_ref().expect("validated");
                let open = || {
                    File::open(path)
                        .map(BufReader::new)
                        .map_err(|e| Error::Config(format!("cannot open {}: {e}", path.display())))
                };
                (
                    load_dense(open()?, &ids(&train))?,
                    load_dense(open()?, &test_ids)?,
                )
            }
        };
        log::info!("{kind}: {} train rows, width {}", xtr.len(), xtr.samples.width());
        reports.push(benchmark(
            &specs,
            kind,
            &xtr.samples,
            &y_train,
            &xte.samples,
            &y_test,
            &test_ids,
        )?);
    }
    let mut bundle = run.load_or_new_bundle()?;
    bundle.challenging = Some(
        reports
            .iter()
            .map(|r| (r.representation, flag_challenging(r)))
            .collect::<BTreeMap<_, _>>(),
    );
    let mut csv = String::new();
    for (i, r) in reports.iter().enumerate() {
        let body = r.to_csv()?;
        // keep one header line
        csv.push_str(if i == 0 {
            &body
        } else {
            body.split_once('\n').map_or("", |x| x.1)
        });
    }
    run.write("benchmark.csv", &csv)?;
    bundle.benchmarks = Some(reports);
    run.finish(
        bundle,
        "benchmark",
        &[Table::BenchmarkMacro, Table::BenchmarkWeighted],
    )
}

pub fn cmd_difficulty(run: &Run) -> Result<()> {
    let (top_k, roster) = (run.config.difficulty.top_k, run.config.roster()?.len());
    if top_k > roster {
        return Err(Error::Config(format!(
            "difficulty.top_k = {top_k} exceeds the roster size {roster}"
        )));
    }
    let mut bundle = run.existing_bundle()?;
    let reports = bundle
        .benchmarks
        .as_ref()
        .ok_or_else(|| Error::Missing("run bundle has no benchmark section".into()))?;
    let outcome = label_difficulty(reports, &run.config.difficulty)?;
    run.write("difficulty_labels.jsonl", &labels_jsonl(&outcome.labels)?)?;
    run.write("difficulty_distribution.csv", &outcome.distribution.to_csv()?)?;
    bundle.difficulty = Some(outcome);
    run.finish(bundle, "difficulty", &[Table::Distribution])
}

pub fn cmd_predict_difficulty(run: &Run) -> Result<()> {
    let config = &run.config;
    let mut bundle = run.existing_bundle()?;
    let outcome = bundle
        .difficulty
        .clone()
        .ok_or_else(|| Error::Missing("run bundle has no difficulty section".into()))?;
    let p = prepare(config)?;
    let by_id: BTreeMap<&str, usize> = p
        .merged
        .instances
        .iter()
        .enumerate()
        .map(|(i, inst)| (inst.id.as_str(), i))
        .collect();
    let rows = outcome
        .labels
        .iter()
        .map(|l| {
            by_id
                .get(l.instance_id.as_str())
                .copied()
                .ok_or_else(|| Error::Missing(format!("labelled instance {} not in corpus", l.instance_id)))
        })
        .collect::<Result<Vec<_>>>()?;
    let test_corpus = Corpus::new(
        "test",
        rows.iter().map(|&i| p.merged.instances[i].clone()).collect(),
    )?;
    let features = feature_matrix(&test_corpus, &p.annotations, &p.resources)?;
    run.write("features.csv", &features.to_csv()?)?;
    let x = features.to_samples(config.one_hot_aspect_pos);
    let binary: Vec<usize> = outcome.labels.iter().map(|l| l.binary.code()).collect();
    let graded: Vec<usize> = outcome.labels.iter().map(|l| l.level).collect();
    if config.kfold.k > x.len() {
        return Err(Error::Config(format!(
            "kfold.k = {} exceeds the {} labelled instances",
            config.kfold.k,
            x.len()
        )));
    }

    let specs = roster_specs(config)?;
    let smote = config.smote_config();
    let run_all = |y: &[usize], with_smote: bool| -> Result<Vec<KFoldResult>> {
        let kfold = KFoldConfig {
            k: config.kfold.k,
            seed: config.seed,
            stratified: config.kfold.stratified,
            smote: with_smote.then(|| smote.clone()),
        };
        specs.iter().map(|s| cross_validate(s, &x, y, &kfold)).collect()
    };
    let mut predictions = DifficultyPredictions {
        binary: run_all(&binary, false)?,
        graded: run_all(&graded, false)?,
        ..DifficultyPredictions::default()
    };
    let mut tables = vec![Table::Difficulty2, Table::Difficulty6];
    if config.kfold.smote {
        predictions.binary_smote = run_all(&binary, true)?;
        predictions.graded_smote = run_all(&graded, true)?;
        tables.extend([Table::Difficulty2Smote, Table::Difficulty6Smote]);
    }
    let mut audit = String::new();
    for (name, results) in [
        ("binary", &predictions.binary),
        ("binary_smote", &predictions.binary_smote),
        ("graded", &predictions.graded),
        ("graded_smote", &predictions.graded_smote),
    ] {
        for r in results {
            for line in r.audit_jsonl()?.lines() {
                audit.push_str(&format!("{{\"table\":\"{name}\",{}\n", &line[1..]));
            }
        }
    }
    run.write("kfold_audit.jsonl", &audit)?;
    bundle.difficulty_prediction = Some(predictions);
    run.finish(bundle, "predict-difficulty", &tables)
}

/// Re-renders every table from the stored bundle.
pub fn cmd_report(run: &Run) -> Result<()> {
    let bundle = run.existing_bundle()?;
    write_tables(&bundle, &Table::ALL, &run.dir)
}
