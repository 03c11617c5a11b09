//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Runs with `cargo test --test acceptance`.

use std::collections::BTreeMap;
use std::fs;
use std::panic;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use absa_difficulty::annotate::{ingest_conllu, AnnotationIndex, LexiconBundle};
use absa_difficulty::classify::linear::softmax_loss_grad;
use absa_difficulty::classify::{fit, Algorithm, BenchmarkReport, BenchmarkRow, ClassifierSpec, RowOutcome};
use absa_difficulty::corpus::{corpus_stats, merge, parse_instances_str, Polarity};
use absa_difficulty::difficulty::{label_difficulty, Binary, DifficultyConfig};
use absa_difficulty::evaluate::{cross_validate, evaluate, KFoldConfig};
use absa_difficulty::pipeline::load_corpora;
use absa_difficulty::report::{render_table, RunBundle, Table};
use absa_difficulty::represent::{fit_tfidf, transform_tfidf, ComposedText, RepresentationKind, Samples};
use absa_difficulty::resample::{smote, SingletonPolicy, SmoteConfig};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:.2?}, limit {limit:?}"))
}

fn dummy_spec() -> ClassifierSpec {
    ClassifierSpec::new(Algorithm::DummyMostFrequent, 42)
}

fn kfold(smote: Option<SmoteConfig>) -> KFoldConfig {
    KFoldConfig {
        k: 10,
        seed: 42,
        stratified: true,
        smote,
    }
}

fn labels_from_counts(counts: &[usize]) -> Vec<usize> {
    counts
        .iter()
        .enumerate()
        .flat_map(|(label, &n)| std::iter::repeat_n(label, n))
        .collect()
}

fn random_dense(n: usize, width: usize, seed: u64) -> Samples {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    Samples::dense(
        (0..n)
            .map(|_| (0..width).map(|_| r.random::<f64>()).collect())
            .collect(),
    )
    .unwrap()
}

fn mean_accuracy(spec: &ClassifierSpec, x: &Samples, y: &[usize], cfg: &KFoldConfig) -> Result<f64, String> {
    let result = cross_validate(spec, x, y, cfg).map_err(|e| e.to_string())?;
    result
        .mean_accuracy
        .ok_or_else(|| "every fold failed".to_string())
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let y = labels_from_counts(&[949, 197]);
    let x = random_dense(y.len(), 1, 1);
    let mean = mean_accuracy(&dummy_spec(), &x, &y, &kfold(None))?;
    let elapsed = start.elapsed();
    ensure(close(mean, 0.8281, 0.005), || {
        format!("mean {mean:.4}, expected 0.8281")
    })?;
    within(elapsed, Duration::from_secs(1))?;
    Ok(format!("mean {mean:.4} in {elapsed:.2?}"))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let y = labels_from_counts(&[217, 59, 59, 59, 59, 693]);
    let x = random_dense(y.len(), 2, 2);
    let plain = mean_accuracy(&dummy_spec(), &x, &y, &kfold(None))?;
    let oversampling = SmoteConfig {
        k_neighbors: 5,
        integer_columns: Vec::new(),
        singleton: SingletonPolicy::Error,
    };
    let smoted = mean_accuracy(&dummy_spec(), &x, &y, &kfold(Some(oversampling)))?;
    let elapsed = start.elapsed();
    ensure(close(plain, 0.6047, 0.005), || {
        format!("plain mean {plain:.4}, expected 0.6047")
    })?;
    ensure(close(smoted, 0.1894, 0.005), || {
        format!("SMOTE mean {smoted:.4}, expected 0.1894")
    })?;
    within(elapsed, Duration::from_secs(5))?;
    Ok(format!("plain {plain:.4}, SMOTE {smoted:.4} in {elapsed:.2?}"))
}

/// Counting oracle for one (gold, pred) pair.
struct OracleMetrics {
    classes: Vec<usize>,
    confusion: Vec<Vec<usize>>,
    precision: Vec<f64>,
    recall: Vec<f64>,
    f1: Vec<f64>,
    support: Vec<usize>,
    macro_p: f64,
    macro_r: f64,
    macro_f1: f64,
    weighted_p: f64,
    weighted_r: f64,
    weighted_f1: f64,
    accuracy: f64,
}

fn oracle_metrics(gold: &[usize], pred: &[usize]) -> OracleMetrics {
    let mut classes: Vec<usize> = Vec::new();
    for &l in gold.iter().chain(pred) {
        if !classes.contains(&l) {
            classes.push(l);
        }
    }
    classes.sort();
    let k = classes.len();
    let mut confusion = vec![vec![0; k]; k];
    for (a, row) in confusion.iter_mut().enumerate() {
        for (b, cell) in row.iter_mut().enumerate() {
            *cell = gold
                .iter()
                .zip(pred)
                .filter(|&(&g, &p)| g == classes[a] && p == classes[b])
                .count();
        }
    }
    let mut out = OracleMetrics {
        classes: classes.clone(),
        confusion,
        precision: vec![],
        recall: vec![],
        f1: vec![],
        support: vec![],
        macro_p: 0.0,
        macro_r: 0.0,
        macro_f1: 0.0,
        weighted_p: 0.0,
        weighted_r: 0.0,
        weighted_f1: 0.0,
        accuracy: 0.0,
    };
    let n = gold.len() as f64;
    let mut supported = 0.0;
    for &c in &classes {
        let tp = gold.iter().zip(pred).filter(|&(&g, &p)| g == c && p == c).count();
        let fp = gold.iter().zip(pred).filter(|&(&g, &p)| g != c && p == c).count();
        let fn_ = gold.iter().zip(pred).filter(|&(&g, &p)| g == c && p != c).count();
        let p = if tp + fp == 0 {
            0.0
        } else {
            tp as f64 / (tp + fp) as f64
        };
        let r = if tp + fn_ == 0 {
            0.0
        } else {
            tp as f64 / (tp + fn_) as f64
        };
        let f = if 2 * tp + fp + fn_ == 0 || tp == 0 {
            0.0
        } else {
            2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
        };
        let support = tp + fn_;
        if support > 0 {
            supported += 1.0;
            out.macro_p += p;
            out.macro_r += r;
            out.macro_f1 += f;
        }
        out.weighted_p += p * support as f64 / n;
        out.weighted_r += r * support as f64 / n;
        out.weighted_f1 += f * support as f64 / n;
        out.precision.push(p);
        out.recall.push(r);
        out.f1.push(f);
        out.support.push(support);
    }
    out.macro_p /= supported;
    out.macro_r /= supported;
    out.macro_f1 /= supported;
    out.accuracy = gold.iter().zip(pred).filter(|(g, p)| g == p).count() as f64 / n;
    out
}

const RATIO_TOL: f64 = 1e-12;

fn criterion_4() -> Outcome {
    let mut r = ChaCha8Rng::seed_from_u64(4);
    for case in 0..1000 {
        let n = r.random_range(1..=50);
        let n_classes = r.random_range(1..=4);
        let gold: Vec<usize> = (0..n).map(|_| r.random_range(0..n_classes)).collect();
        let pred: Vec<usize> = (0..n).map(|_| r.random_range(0..n_classes)).collect();
        let got = evaluate(&gold, &pred).map_err(|e| e.to_string())?;
        let want = oracle_metrics(&gold, &pred);
        let fail = |what: &str| format!("case {case}: {what} differs");
        let classes: Vec<usize> = got.per_class.iter().map(|m| m.class).collect();
        ensure(classes == want.classes, || fail("class list"))?;
        let cm = absa_difficulty::evaluate::confusion(&gold, &pred, &classes).map_err(|e| e.to_string())?;
        ensure(cm.counts == want.confusion, || fail("confusion"))?;
        for (i, m) in got.per_class.iter().enumerate() {
            ensure(m.support == want.support[i], || fail("support"))?;
            ensure(close(m.precision, want.precision[i], RATIO_TOL), || {
                fail("precision")
            })?;
            ensure(close(m.recall, want.recall[i], RATIO_TOL), || fail("recall"))?;
            ensure(close(m.f1, want.f1[i], RATIO_TOL), || fail("f1"))?;
        }
        let pairs = [
            (got.precision_macro, want.macro_p, "macro precision"),
            (got.recall_macro, want.macro_r, "macro recall"),
            (got.f1_macro, want.macro_f1, "macro f1"),
            (got.precision_weighted, want.weighted_p, "weighted precision"),
            (got.recall_weighted, want.weighted_r, "weighted recall"),
            (got.f1_weighted, want.weighted_f1, "weighted f1"),
            (got.accuracy, want.accuracy, "accuracy"),
        ];
        for (a, b, what) in pairs {
            ensure(close(a, b, RATIO_TOL), || fail(what))?;
        }
        ensure(close(got.recall_weighted, got.accuracy, RATIO_TOL), || {
            format!(
                "case {case}: weighted recall {} != accuracy {}",
                got.recall_weighted, got.accuracy
            )
        })?;
    }
    Ok("1000 random pairs agree".into())
}

fn report_from(kind: RepresentationKind, gold: &[usize], preds: &[Vec<usize>]) -> BenchmarkReport {
    let rows = preds
        .iter()
        .enumerate()
        .map(|(m, p)| BenchmarkRow {
            model: format!("m{m}"),
            spec: dummy_spec(),
            outcome: RowOutcome::Ok {
                metrics: evaluate(gold, p).unwrap(),
                predictions: p.clone(),
            },
        })
        .collect();
    BenchmarkReport {
        representation: kind,
        rows,
        test_ids: (0..gold.len()).map(|i| format!("i{i}")).collect(),
        gold: gold.to_vec(),
    }
}

/// Binary labels and per-representation levels by exhaustive counting.
fn brute_force(gold: &[usize], reprs: &[&[Vec<usize>]]) -> (Vec<bool>, Vec<Vec<usize>>) {
    let mut wrong_votes = vec![0usize; gold.len()];
    let mut levels = Vec::new();
    for preds in reprs {
        let mut order: Vec<usize> = (0..preds.len()).collect();
        let f1: Vec<f64> = preds.iter().map(|p| oracle_metrics(gold, p).macro_f1).collect();
        order.sort_by(|&a, &b| f1[b].total_cmp(&f1[a]).then(a.cmp(&b)));
        let top = &order[..5];
        let mut lv = Vec::new();
        for i in 0..gold.len() {
            let counts: Vec<usize> = (0..4)
                .map(|l| top.iter().filter(|&&m| preds[m][i] == l).count())
                .collect();
            let best = *counts.iter().max().unwrap();
            let tied: Vec<usize> = (0..4).filter(|&l| counts[l] == best).collect();
            let vote = *tied
                .iter()
                .min_by_key(|&&l| top.iter().position(|&m| preds[m][i] == l).unwrap())
                .unwrap();
            if vote != gold[i] {
                wrong_votes[i] += 1;
            }
            lv.push(top.iter().filter(|&&m| preds[m][i] == gold[i]).count());
        }
        levels.push(lv);
    }
    let difficult = wrong_votes.iter().map(|&w| w == reprs.len()).collect();
    (difficult, levels)
}

fn check_difficulty(gold: &[usize], tfidf: &[Vec<usize>], dense: &[Vec<usize>]) -> Result<bool, String> {
    let reports = [
        report_from(RepresentationKind::Tfidf, gold, tfidf),
        report_from(RepresentationKind::Dense, gold, dense),
    ];
    let (want_binary, want_levels) = brute_force(gold, &[tfidf, dense]);
    let mut any_difficult = false;
    for (graded, want) in [
        (RepresentationKind::Tfidf, &want_levels[0]),
        (RepresentationKind::Dense, &want_levels[1]),
    ] {
        let cfg = DifficultyConfig {
            graded_representation: graded,
            ..DifficultyConfig::default()
        };
        let out = label_difficulty(&reports, &cfg).map_err(|e| e.to_string())?;
        let binary: Vec<bool> = out.labels.iter().map(|l| l.binary == Binary::Difficult).collect();
        let levels: Vec<usize> = out.labels.iter().map(|l| l.level).collect();
        ensure(binary == want_binary, || {
            format!("binary {binary:?} != oracle {want_binary:?}")
        })?;
        ensure(&levels == want, || {
            format!("{graded} levels {levels:?} != oracle {want:?}")
        })?;
        for (l, &d) in levels.iter().zip(&binary) {
            ensure(!d || *l < 5, || {
                format!("difficult instance at level {l} ({graded})")
            })?;
        }
        any_difficult |= binary.iter().any(|&d| d);
    }
    Ok(any_difficult)
}

fn criterion_3() -> Outcome {
    // rows are models, columns the 10 instances
    let gold = vec![0, 1, 2, 0, 1, 2, 0, 1, 3, 0];
    let tfidf = vec![
        vec![0, 1, 2, 1, 1, 0, 0, 2, 3, 1],
        vec![0, 1, 1, 1, 2, 0, 0, 2, 0, 2],
        vec![0, 0, 2, 2, 1, 1, 2, 0, 0, 1],
        vec![1, 1, 0, 2, 0, 0, 1, 1, 3, 2],
        vec![0, 2, 1, 1, 2, 1, 2, 0, 0, 1],
    ];
    let dense = vec![
        vec![0, 1, 2, 0, 1, 2, 0, 1, 3, 1],
        vec![0, 1, 0, 1, 0, 2, 1, 2, 0, 2],
        vec![0, 1, 1, 2, 1, 1, 2, 0, 3, 1],
        vec![1, 0, 2, 1, 0, 0, 1, 2, 0, 2],
        vec![0, 1, 0, 1, 2, 2, 0, 0, 0, 2],
    ];
    let difficult = check_difficulty(&gold, &tfidf, &dense)?;
    ensure(difficult, || "fixture has no difficult instance".into())?;

    let mut r = ChaCha8Rng::seed_from_u64(3);
    for case in 0..1000 {
        let n_labels = r.random_range(2..=4);
        let gold: Vec<usize> = (0..10).map(|_| r.random_range(0..n_labels)).collect();
        let mut draw = || -> Vec<Vec<usize>> {
            (0..5)
                .map(|_| {
                    gold.iter()
                        .map(|&g| {
                            if r.random_bool(0.5) {
                                g
                            } else {
                                r.random_range(0..n_labels)
                            }
                        })
                        .collect()
                })
                .collect()
        };
        let tfidf = draw();
        let dense = draw();
        check_difficulty(&gold, &tfidf, &dense).map_err(|e| format!("random case {case}: {e}"))?;
    }
    Ok("hand fixture and 1000 random fixtures match the oracle".into())
}

fn separable() -> (Samples, Vec<usize>) {
    let mut reader = csv::Reader::from_path(fixture("separable.csv")).unwrap();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record.unwrap();
        rows.push(vec![record[0].parse().unwrap(), record[1].parse().unwrap()]);
        labels.push(record[2].parse().unwrap());
    }
    (Samples::dense(rows).unwrap(), labels)
}

fn criterion_5() -> Outcome {
    let (x, y) = separable();
    let majority = y
        .iter()
        .filter(|&&l| l == 0)
        .count()
        .max(y.iter().filter(|&&l| l == 1).count());
    let majority = majority as f64 / y.len() as f64;
    for alg in Algorithm::IMPLEMENTED {
        let model = fit(&ClassifierSpec::new(alg, 42), &x, &y).map_err(|e| format!("{alg}: {e}"))?;
        let pred = model.predict(&x).map_err(|e| e.to_string())?;
        let acc = pred.iter().zip(&y).filter(|(p, g)| p == g).count() as f64 / y.len() as f64;
        let want = if alg == Algorithm::DummyMostFrequent {
            majority
        } else {
            1.0
        };
        ensure(acc == want, || {
            format!("{alg}: training accuracy {acc}, expected {want}")
        })?;
    }

    let mut r = ChaCha8Rng::seed_from_u64(5);
    let (n_classes, width, h) = (3, 4, 1e-5);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let x = Samples::dense(vec![(0..width).map(|_| r.random_range(-2.0..2.0)).collect()]).unwrap();
        let y = [r.random_range(0..n_classes)];
        let params: Vec<f64> = (0..n_classes * (width + 1))
            .map(|_| r.random_range(-1.0..1.0))
            .collect();
        let (_, grad) = softmax_loss_grad(&x, &y, n_classes, 0.1, &params);
        for j in 0..params.len() {
            let mut up = params.clone();
            let mut down = params.clone();
            up[j] += h;
            down[j] -= h;
            let fd = (softmax_loss_grad(&x, &y, n_classes, 0.1, &up).0
                - softmax_loss_grad(&x, &y, n_classes, 0.1, &down).0)
                / (2.0 * h);
            let rel = (grad[j] - fd).abs() / grad[j].abs().max(fd.abs()).max(1e-8);
            worst = worst.max(rel);
        }
    }
    ensure(worst < 1e-5, || format!("gradient relative error {worst:e}"))?;
    Ok(format!(
        "{} models separate the toy set; gradient error {worst:.1e}",
        Algorithm::IMPLEMENTED.len()
    ))
}

fn criterion_6() -> Outcome {
    let mut r = ChaCha8Rng::seed_from_u64(6);
    let counts = [300, 150, 40, 10];
    let y = labels_from_counts(&counts);
    // column 0 and 2 hold small integers, the rest are continuous
    let rows: Vec<Vec<f64>> = y
        .iter()
        .map(|&l| {
            vec![
                r.random_range(0..10) as f64 + l as f64,
                r.random_range(0.0..5.0),
                r.random_range(0..4) as f64,
                r.random_range(-1.0..1.0) * (l + 1) as f64,
            ]
        })
        .collect();
    let x = Samples::dense(rows.clone()).unwrap();
    let raw_cfg = SmoteConfig::default();
    let int_cfg = SmoteConfig {
        integer_columns: vec![0, 2],
        ..SmoteConfig::default()
    };
    let raw = smote(&x, &y, &raw_cfg, 66).map_err(|e| e.to_string())?;
    let rounded = smote(&x, &y, &int_cfg, 66).map_err(|e| e.to_string())?;

    let mut per_class = BTreeMap::new();
    for &l in &raw.labels {
        *per_class.entry(l).or_insert(0usize) += 1;
    }
    ensure(per_class.values().all(|&c| c == 300), || {
        format!("class counts {per_class:?}")
    })?;
    ensure(raw.labels == rounded.labels, || {
        "label order depends on rounding".into()
    })?;

    let n = rows.len();
    let Samples::Dense { rows: raw_rows, .. } = &raw.samples else {
        return Err("SMOTE returned sparse rows".into());
    };
    let Samples::Dense { rows: int_rows, .. } = &rounded.samples else {
        return Err("SMOTE returned sparse rows".into());
    };
    ensure(raw_rows[..n] == rows[..], || "originals were altered".into())?;
    let mut worst_residual: f64 = 0.0;
    for (s, &label) in raw_rows[n..].iter().zip(&raw.labels[n..]) {
        let members: Vec<&Vec<f64>> = rows
            .iter()
            .zip(&y)
            .filter(|(_, &l)| l == label)
            .map(|(r, _)| r)
            .collect();
        let mut best = f64::INFINITY;
        'search: for a in &members {
            for b in &members {
                let d: Vec<f64> = a.iter().zip(b.iter()).map(|(p, q)| q - p).collect();
                let dd: f64 = d.iter().map(|v| v * v).sum();
                let u = if dd == 0.0 {
                    0.0
                } else {
                    s.iter()
                        .zip(a.iter())
                        .zip(&d)
                        .map(|((v, p), dv)| (v - p) * dv)
                        .sum::<f64>()
                        / dd
                };
                if !(-1e-12..=1.0 + 1e-12).contains(&u) {
                    continue;
                }
                let residual = s
                    .iter()
                    .zip(a.iter())
                    .zip(&d)
                    .map(|((v, p), dv)| (v - p - u * dv).powi(2))
                    .sum::<f64>()
                    .sqrt();
                best = best.min(residual);
                if best < 1e-9 {
                    break 'search;
                }
            }
        }
        worst_residual = worst_residual.max(best);
        ensure(best < 1e-9, || {
            format!("synthetic row {s:?} off every segment by {best:e}")
        })?;
    }
    for (raw_row, int_row) in raw_rows[n..].iter().zip(&int_rows[n..]) {
        for c in 0..raw_row.len() {
            if int_cfg.integer_columns.contains(&c) {
                let dev = (raw_row[c] - int_row[c]).abs();
                ensure(dev <= 0.5 && int_row[c].fract() == 0.0, || {
                    format!("column {c}: {} rounded to {}", raw_row[c], int_row[c])
                })?;
            } else {
                ensure(raw_row[c] == int_row[c], || {
                    format!("continuous column {c} changed")
                })?;
            }
        }
    }
    Ok(format!(
        "{} synthetic rows, worst residual {worst_residual:.1e}",
        raw_rows.len() - n
    ))
}

fn criterion_7() -> Outcome {
    let docs = ["a b", "a c"];
    let texts: Vec<ComposedText> = docs
        .iter()
        .enumerate()
        .map(|(i, t)| ComposedText {
            instance_id: format!("d{i}"),
            text: t.to_string(),
        })
        .collect();
    let model = fit_tfidf(&texts, Default::default()).map_err(|e| e.to_string())?;
    let idf_a = 1.0;
    let idf_b = 1.5f64.ln() + 1.0;
    ensure(close(model.idf("a").unwrap(), idf_a, 1e-9), || "idf(a)".into())?;
    ensure(close(model.idf("b").unwrap(), idf_b, 1e-9), || "idf(b)".into())?;
    ensure(close(model.idf("c").unwrap(), idf_b, 1e-9), || "idf(c)".into())?;
    ensure(close(idf_b, 1.4055, 5e-5), || "idf(b) rounding".into())?;
    let norm = (idf_a * idf_a + idf_b * idf_b).sqrt();
    let matrix = transform_tfidf(&model, &texts);
    let row = matrix.samples.row(0);
    let (col_a, col_b) = (model.vocabulary["a"], model.vocabulary["b"]);
    ensure(close(row.get(col_a), idf_a / norm, 1e-9), || {
        format!("w(a) = {}", row.get(col_a))
    })?;
    ensure(close(row.get(col_b), idf_b / norm, 1e-9), || {
        format!("w(b) = {}", row.get(col_b))
    })?;

    let corpora = load_corpora(&[
        fixture("corpora/laptops.jsonl"),
        fixture("corpora/restaurants.jsonl"),
        fixture("corpora/mtsc.jsonl"),
    ])
    .map_err(|e| e.to_string())?;
    let merged = merge(&corpora, "merged").map_err(|e| e.to_string())?;
    let composed: Vec<ComposedText> = merged
        .instances
        .iter()
        .map(absa_difficulty::represent::compose_input)
        .collect();
    let model = fit_tfidf(&composed, Default::default()).map_err(|e| e.to_string())?;
    let matrix = transform_tfidf(&model, &composed);
    for row in matrix.samples.rows() {
        let norm = row.squared_norm().sqrt();
        ensure(norm == 0.0 || close(norm, 1.0, 1e-9), || {
            format!("row norm {norm}")
        })?;
    }
    Ok(format!("idf(b) = {idf_b:.10}; {} unit rows", matrix.len()))
}

fn run_pipeline(out: &Path) -> Result<PathBuf, String> {
    let bin = env!("CARGO_BIN_EXE_absa-difficulty");
    let config = fixture("toy.toml");
    let mut dir = None;
    for cmd in ["stats", "benchmark", "difficulty", "predict-difficulty"] {
        let output = Command::new(bin)
            .arg(cmd)
            .arg("--config")
            .arg(&config)
            .arg("--out")
            .arg(out)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(output.status.success(), || {
            format!("{cmd} failed: {}", String::from_utf8_lossy(&output.stderr))
        })?;
        dir = Some(PathBuf::from(String::from_utf8_lossy(&output.stdout).trim()));
    }
    dir.ok_or_else(|| "no run directory".into())
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let path = e.unwrap().path();
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            (name, fs::read(&path).unwrap())
        })
        .collect()
}

fn without_timestamps(bytes: &[u8]) -> serde_json::Value {
    let mut value: serde_json::Value = serde_json::from_slice(bytes).unwrap();
    value["metadata"].as_object_mut().unwrap().remove("timestamps");
    value
}

fn criterion_8() -> Outcome {
    let first = tempfile::tempdir().map_err(|e| e.to_string())?;
    let second = tempfile::tempdir().map_err(|e| e.to_string())?;
    let start = Instant::now();
    let dir_a = run_pipeline(first.path())?;
    let elapsed = start.elapsed();
    let dir_b = run_pipeline(second.path())?;
    within(elapsed, Duration::from_secs(60))?;

    let a = files(&dir_a);
    let b = files(&dir_b);
    ensure(a.keys().eq(b.keys()), || {
        "runs produced different file sets".into()
    })?;
    for (name, body) in &a {
        if name == "bundle.json" {
            ensure(without_timestamps(body) == without_timestamps(&b[name]), || {
                "bundle.json differs".into()
            })?;
        } else {
            ensure(body == &b[name], || format!("{name} differs between runs"))?;
        }
    }
    for table in Table::ALL {
        let header = table.header().join(",");
        let expected = match table {
            Table::BenchmarkMacro | Table::BenchmarkWeighted => format!("Representation,{header}"),
            _ => header,
        };
        let csv = a
            .get(&format!("{}.csv", table.name()))
            .ok_or_else(|| format!("{}.csv missing", table.name()))?;
        let first_line = String::from_utf8_lossy(csv)
            .lines()
            .next()
            .unwrap_or("")
            .to_string();
        ensure(first_line == expected, || {
            format!("{}.csv header {first_line:?}", table.name())
        })?;
        let md = a
            .get(&format!("{}.md", table.name()))
            .ok_or_else(|| format!("{}.md missing", table.name()))?;
        let md_header = format!("| {} |", table.header().join(" | "));
        ensure(String::from_utf8_lossy(md).contains(&md_header), || {
            format!("{}.md lacks its header row", table.name())
        })?;
    }
    Ok(format!("{} files identical; first run {elapsed:.2?}", a.len()))
}

struct HandCount {
    name: &'static str,
    total: usize,
    train: usize,
    test: usize,
    classes: usize,
    aspects: usize,
    sentences: usize,
    max_aspect_tokens: usize,
    per_class: [usize; 4],
}

const HAND_COUNTS: [HandCount; 4] = [
    HandCount {
        name: "laptops",
        total: 12,
        train: 7,
        test: 5,
        classes: 3,
        aspects: 12,
        sentences: 10,
        max_aspect_tokens: 2,
        per_class: [5, 5, 2, 0],
    },
    HandCount {
        name: "restaurants",
        total: 10,
        train: 6,
        test: 4,
        classes: 4,
        aspects: 10,
        sentences: 8,
        max_aspect_tokens: 1,
        per_class: [4, 3, 1, 2],
    },
    HandCount {
        name: "mtsc",
        total: 18,
        train: 10,
        test: 8,
        classes: 3,
        aspects: 18,
        sentences: 13,
        max_aspect_tokens: 2,
        per_class: [5, 6, 7, 0],
    },
    HandCount {
        name: "merged",
        total: 40,
        train: 23,
        test: 17,
        classes: 4,
        aspects: 40,
        sentences: 31,
        max_aspect_tokens: 2,
        per_class: [14, 14, 10, 2],
    },
];

const MINI_CORPUS: &str = r#"{"id": "x1", "sentence": "Alice loves the red car.", "aspect": "car", "polarity": "positive", "split": "train", "source": "mini"}
{"id": "x2", "sentence": "The screen broke.", "aspect": "screen", "polarity": "negative", "split": "test", "source": "mini"}
{"id": "x3", "sentence": "Alice loves the red car.", "aspect": "Alice", "polarity": "positive", "split": "test", "source": "mini"}
"#;

const MINI_CONLLU: &str = "# text = Alice loves the red car.
1\tAlice\tAlice\tPROPN\t_\t_\t_\t_\t_\tNE=Yes
2\tloves\tlove\tVERB\t_\t_\t_\t_\t_\t_
3\tthe\tthe\tDET\t_\t_\t_\t_\t_\t_
4\tred\tred\tADJ\t_\t_\t_\t_\t_\t_
5\tcar\tcar\tNOUN\t_\t_\t_\t_\t_\t_
6\t.\t.\tPUNCT\t_\t_\t_\t_\t_\t_

# text = The screen broke.
1\tThe\tthe\tDET\t_\t_\t_\t_\t_\t_
2\tscreen\tscreen\tNOUN\t_\t_\t_\t_\t_\t_
3\tbroke\tbreak\tVERB\t_\t_\t_\t_\t_\t_
4\t.\t.\tPUNCT\t_\t_\t_\t_\t_\t_
";

fn criterion_9() -> Outcome {
    let corpora = load_corpora(&[
        fixture("corpora/laptops.jsonl"),
        fixture("corpora/restaurants.jsonl"),
        fixture("corpora/mtsc.jsonl"),
    ])
    .map_err(|e| e.to_string())?;
    let merged = merge(&corpora, "merged").map_err(|e| e.to_string())?;
    let lexicons = LexiconBundle::builtin();
    let index = AnnotationIndex::builtin(merged.instances.iter().map(|i| i.sentence.as_str()), &lexicons);
    let mut stats = Vec::new();
    for corpus in corpora.iter().chain([&merged]) {
        stats.push(corpus_stats(corpus, &index).map_err(|e| e.to_string())?);
    }
    for (s, want) in stats.iter().zip(&HAND_COUNTS) {
        let got = (
            s.name.as_str(),
            s.total,
            s.train,
            s.test,
            s.n_classes,
            s.unique_aspects,
            s.unique_sentences,
            s.max_aspect_tokens,
        );
        let expected = (
            want.name,
            want.total,
            want.train,
            want.test,
            want.classes,
            want.aspects,
            want.sentences,
            want.max_aspect_tokens,
        );
        ensure(got == expected, || format!("{got:?} != {expected:?}"))?;
        let per_class: Vec<usize> = Polarity::ALL
            .iter()
            .map(|p| s.classes.iter().find(|c| c.polarity == *p).map_or(0, |c| c.count))
            .collect();
        ensure(per_class == want.per_class, || {
            format!("{}: class counts {per_class:?}", s.name)
        })?;
        let sum: f64 = s.classes.iter().map(|c| c.fraction).sum();
        ensure(close(sum, 1.0, 1e-9), || {
            format!("{}: fractions sum to {sum}", s.name)
        })?;
    }

    let mini = parse_instances_str(MINI_CORPUS, "mini").map_err(|e| e.to_string())?;
    let mini_index: AnnotationIndex = ingest_conllu(MINI_CONLLU)
        .map_err(|e| e.to_string())?
        .into_iter()
        .collect();
    let m = corpus_stats(&mini, &mini_index).map_err(|e| e.to_string())?;
    let pos = &m.classes[Polarity::Positive.index()];
    let neg = &m.classes[Polarity::Negative.index()];
    let pos_means = (
        pos.mean_tokens,
        pos.mean_nouns,
        pos.mean_verbs,
        pos.mean_entities,
        pos.mean_adjectives,
    );
    let neg_means = (
        neg.mean_tokens,
        neg.mean_nouns,
        neg.mean_verbs,
        neg.mean_entities,
        neg.mean_adjectives,
    );
    ensure(pos_means == (6.0, 2.0, 1.0, 1.0, 1.0), || {
        format!("positive means {pos_means:?}")
    })?;
    ensure(neg_means == (4.0, 1.0, 1.0, 0.0, 0.0), || {
        format!("negative means {neg_means:?}")
    })?;
    ensure((m.unique_sentences, m.unique_aspects) == (2, 3), || {
        "mini uniques".into()
    })?;

    let bundle = RunBundle {
        corpus_stats: Some(stats),
        ..RunBundle::default()
    };
    let table = render_table(&bundle, Table::Linguistic).map_err(|e| e.to_string())?;
    for name in ["laptops", "mtsc"] {
        let row = format!("{name},Conflict,0.00,0.00,0.00,0.00,0.00");
        ensure(table.csv.lines().any(|l| l == row), || {
            format!("missing absent-class row {row:?}")
        })?;
    }
    Ok("hand counts match; absent classes render 0.00".into())
}

fn main() -> ExitCode {
    type Check = (&'static str, fn() -> Outcome);
    let criteria: [Check; 9] = [
        ("dummy baseline, binary labels", criterion_1),
        ("dummy baseline, graded labels", criterion_2),
        ("difficulty definitions", criterion_3),
        ("metrics oracle", criterion_4),
        ("classifier sanity", criterion_5),
        ("SMOTE geometry", criterion_6),
        ("TF-IDF values", criterion_7),
        ("end-to-end determinism", criterion_8),
        ("corpus statistics", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name}: {why}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
