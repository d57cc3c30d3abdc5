//! Multi-class and binary (ROC) evaluation over a dataset manifest.
//!
//! Manifests are JSON lines. An optional header line declares the class list;
//! every other line is one item:
//!
//! ```text
//! {"classes": ["fire", "normal"]}
//! {"id": "img-1", "class": "fire", "embedding": [0.1, 0.2, ...]}
//! {"id": "img-2", "class": "normal", "embedding": {"file": "emb.eef1", "label": "img-2"}}
//! ```

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use num_traits::Float;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::compiler::AnalyticsApp;
use crate::embedding_store::{load_embeddings, Embedding, EmbeddingError, LabelEmbeddingSet};
use crate::inference::{run_inference, InferenceError, LoopConfig, Reasoner};
use crate::provider::EmbeddingProvider;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("manifest has no items")]
    EmptyManifest,
    #[error("manifest line {line}: {msg}")]
    Manifest { line: usize, msg: String },
    #[error("item {id:?}: dimension {actual} does not match app dimension {expected}")]
    DimensionMismatch {
        id: String,
        expected: usize,
        actual: usize,
    },
    #[error("both positive and negative items are required ({positives} positive, {negatives} negative)")]
    DegenerateLabels { positives: usize, negatives: usize },
    #[error("reports come from different manifests ({a} vs {b})")]
    ManifestMismatch { a: String, b: String },
    #[error("reports are of different kinds")]
    KindMismatch,
    #[error("non-finite score at index {0}")]
    NonFiniteScore(usize),
    #[error("scores and labels differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("item {id:?}: {source}")]
    Embedding {
        id: String,
        #[source]
        source: EmbeddingError,
    },
    #[error("item {id:?}: {source}")]
    Inference {
        id: String,
        #[source]
        source: InferenceError,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, EvalError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EmbeddingRef {
    Inline(Vec<f32>),
    File { file: PathBuf, label: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub class: String,
    pub embedding: EmbeddingRef,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ManifestLine {
    Header { classes: Vec<String> },
    Item(ManifestEntry),
}

/// Evaluation items with their ground truth classes.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    /// Declared classes; `None` when the manifest has no header line.
    pub classes: Option<Vec<String>>,
    pub entries: Vec<ManifestEntry>,
    /// Directory that relative `file` references resolve against.
    pub base_dir: PathBuf,
}

impl DatasetManifest {
    pub fn parse_jsonl(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut classes = None;
        let mut entries = Vec::new();
        let mut ids = HashSet::new();
        for (i, line) in text.lines().enumerate() {
            let err = |msg: String| EvalError::Manifest { line: i + 1, msg };
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<ManifestLine>(line).map_err(|e| err(e.to_string()))? {
                ManifestLine::Header { classes: declared } => {
                    if classes.is_some() || !entries.is_empty() {
                        return Err(err("class header must be the first line".into()));
                    }
                    classes = Some(declared);
                }
                ManifestLine::Item(entry) => {
                    if !ids.insert(entry.id.clone()) {
                        return Err(err(format!("duplicate id {:?}", entry.id)));
                    }
                    if let Some(declared) = &classes {
                        if !declared.contains(&entry.class) {
                            return Err(err(format!("class {:?} is not declared", entry.class)));
                        }
                    }
                    entries.push(entry);
                }
            }
        }
        Ok(Self {
            classes,
            entries,
            base_dir: base_dir.into(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse_jsonl(&fs::read_to_string(path)?, base)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        if let Some(classes) = &self.classes {
            out.push_str(&serde_json::json!({ "classes": classes }).to_string());
            out.push('\n');
        }
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("manifest entries serialize"));
            out.push('\n');
        }
        out
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Loads every item's embedding, normalizing inline vectors.
    pub fn resolve(&self) -> Result<Vec<ResolvedItem>> {
        let mut files: HashMap<PathBuf, LabelEmbeddingSet> = HashMap::new();
        self.entries
            .iter()
            .map(|entry| {
                let wrap = |source| EvalError::Embedding {
                    id: entry.id.clone(),
                    source,
                };
                let embedding = match &entry.embedding {
                    EmbeddingRef::Inline(values) => {
                        Embedding::unit(values.clone()).map_err(wrap)?
                    }
                    EmbeddingRef::File { file, label } => {
                        let path = self.base_dir.join(file);
                        if !files.contains_key(&path) {
                            let set = load_embeddings(&path).map_err(wrap)?.set;
                            files.insert(path.clone(), set);
                        }
                        files[&path].lookup(label).cloned().ok_or_else(|| {
                            wrap(EmbeddingError::Format(format!(
                                "no label {label:?} in {}",
                                path.display()
                            )))
                        })?
                    }
                };
                Ok(ResolvedItem {
                    id: entry.id.clone(),
                    class: entry.class.clone(),
                    embedding,
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedItem {
    pub id: String,
    pub class: String,
    pub embedding: Embedding,
}

/// Identity hash of a resolved manifest (ids, classes and vector bits).
pub fn manifest_hash(declared: &[String], items: &[ResolvedItem]) -> String {
    let mut h = Sha256::new();
    for c in declared {
        h.update(b"class\0");
        h.update(c.as_bytes());
        h.update(b"\0");
    }
    for item in items {
        h.update(b"item\0");
        h.update(item.id.as_bytes());
        h.update(b"\0");
        h.update(item.class.as_bytes());
        h.update(b"\0");
        for v in item.embedding.values() {
            h.update(v.to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub micro_precision: f64,
    pub micro_recall: f64,
    pub micro_f1: f64,
    pub top1_accuracy: f64,
    pub top5_accuracy: f64,
    pub total_predictions: usize,
    pub per_class: Vec<ClassMetrics>,
    pub manifest_hash: String,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Metrics from ground truth and per-item class rankings (best first).
/// The prediction is the first ranked class; macro averages run over
/// `declared`.
pub fn metrics_from_rankings(
    declared: &[String],
    items: &[(String, Vec<String>)],
    manifest_hash: String,
) -> MetricsReport {
    let mut tp: BTreeMap<&str, usize> = BTreeMap::new();
    let mut predicted: BTreeMap<&str, usize> = BTreeMap::new();
    let mut support: BTreeMap<&str, usize> = BTreeMap::new();
    let (mut correct, mut top5) = (0, 0);
    for (truth, ranking) in items {
        *support.entry(truth).or_default() += 1;
        if let Some(pred) = ranking.first() {
            *predicted.entry(pred).or_default() += 1;
            if pred == truth {
                *tp.entry(truth).or_default() += 1;
                correct += 1;
            }
        }
        if ranking.iter().take(5).any(|c| c == truth) {
            top5 += 1;
        }
    }
    let get = |m: &BTreeMap<&str, usize>, k: &str| m.get(k).copied().unwrap_or(0);
    let per_class: Vec<ClassMetrics> = declared
        .iter()
        .map(|c| {
            let precision = ratio(get(&tp, c), get(&predicted, c));
            let recall = ratio(get(&tp, c), get(&support, c));
            ClassMetrics {
                class: c.clone(),
                precision,
                recall,
                f1: f1(precision, recall),
                support: get(&support, c),
            }
        })
        .collect();
    let n = per_class.len().max(1) as f64;
    let mean = |f: fn(&ClassMetrics) -> f64| per_class.iter().map(f).sum::<f64>() / n;
    let tp_sum: usize = declared.iter().map(|c| get(&tp, c)).sum();
    let pred_sum: usize = declared.iter().map(|c| get(&predicted, c)).sum();
    let support_sum: usize = declared.iter().map(|c| get(&support, c)).sum();
    let micro_precision = ratio(tp_sum, pred_sum);
    let micro_recall = ratio(tp_sum, support_sum);
    let accuracy = ratio(correct, items.len());
    MetricsReport {
        accuracy,
        macro_precision: mean(|m| m.precision),
        macro_recall: mean(|m| m.recall),
        macro_f1: mean(|m| m.f1),
        micro_precision,
        micro_recall,
        micro_f1: f1(micro_precision, micro_recall),
        top1_accuracy: accuracy,
        top5_accuracy: ratio(top5, items.len()),
        total_predictions: items.len(),
        per_class,
        manifest_hash,
    }
}

/// Optional reasoning collaborators forwarded to the inference loop.
#[derive(Clone, Copy, Default)]
pub struct LoopTools<'a> {
    pub reasoner: Option<&'a dyn Reasoner>,
    pub provider: Option<&'a dyn EmbeddingProvider>,
}

fn declared_classes(
    app: &AnalyticsApp,
    manifest: &DatasetManifest,
    items: &[ResolvedItem],
) -> Vec<String> {
    match &manifest.classes {
        Some(c) => c.clone(),
        None => {
            let set: BTreeSet<String> = items
                .iter()
                .map(|i| i.class.clone())
                .chain(app.class_names().map(str::to_string))
                .collect();
            set.into_iter().collect()
        }
    }
}

/// Declared classes, resolved items and each item's ranked class scores.
type Scored = (Vec<String>, Vec<ResolvedItem>, Vec<Vec<(String, f64)>>);

/// Resolves the manifest and ranks classes for every item.
fn score_items(
    app: &AnalyticsApp,
    manifest: &DatasetManifest,
    cfg: &LoopConfig,
    tools: LoopTools<'_>,
) -> Result<Scored> {
    if manifest.is_empty() {
        return Err(EvalError::EmptyManifest);
    }
    let items = manifest.resolve()?;
    let declared = declared_classes(app, manifest, &items);
    let mut scored = Vec::with_capacity(items.len());
    for item in &items {
        if item.embedding.dim() != app.dim() {
            return Err(EvalError::DimensionMismatch {
                id: item.id.clone(),
                expected: app.dim(),
                actual: item.embedding.dim(),
            });
        }
        let report = run_inference(app, &item.embedding, tools.reasoner, tools.provider, cfg)
            .map_err(|source| EvalError::Inference {
                id: item.id.clone(),
                source,
            })?;
        scored.push(
            report
                .class_scores
                .into_iter()
                .map(|c| (c.class, c.score))
                .collect(),
        );
    }
    Ok((declared, items, scored))
}

pub fn evaluate_multiclass(
    app: &AnalyticsApp,
    manifest: &DatasetManifest,
    cfg: &LoopConfig,
    tools: LoopTools<'_>,
) -> Result<MetricsReport> {
    let (declared, items, scored) = score_items(app, manifest, cfg, tools)?;
    let hash = manifest_hash(&declared, &items);
    let rankings: Vec<(String, Vec<String>)> = items
        .iter()
        .zip(scored)
        .map(|(item, scores)| {
            (
                item.class.clone(),
                scores.into_iter().map(|(c, _)| c).collect(),
            )
        })
        .collect();
    Ok(metrics_from_rankings(&declared, &rankings, hash))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auc: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest_hash: Option<String>,
}

pub fn auc_trapezoid(points: &[RocPoint]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[0].tpr + w[1].tpr) / 2.0)
        .sum()
}

/// ROC by sweeping a threshold from +inf down through every distinct score to
/// -inf; an item is called positive when `score >= threshold`.
pub fn roc_curve<F: Float>(scores: &[F], is_positive: &[bool]) -> Result<RocCurve> {
    if scores.len() != is_positive.len() {
        return Err(EvalError::LengthMismatch(scores.len(), is_positive.len()));
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(EvalError::NonFiniteScore(i));
    }
    let positives = is_positive.iter().filter(|&&p| p).count();
    let negatives = is_positive.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(EvalError::DegenerateLabels {
            positives,
            negatives,
        });
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).expect("finite scores"));

    let mut points = vec![RocPoint { fpr: 0.0, tpr: 0.0 }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        while i < order.len() && scores[order[i]] == threshold {
            if is_positive[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / negatives as f64,
            tpr: tp as f64 / positives as f64,
        });
    }
    // -inf sentinel lands on (1, 1), already the last point
    let auc = auc_trapezoid(&points);
    Ok(RocCurve {
        points,
        auc,
        manifest_hash: None,
    })
}

/// Binary anomaly ROC: an item's score is its best class score over
/// `positive_classes`; it is a positive iff its true class is in that set.
pub fn evaluate_binary_roc(
    app: &AnalyticsApp,
    manifest: &DatasetManifest,
    positive_classes: &BTreeSet<String>,
    cfg: &LoopConfig,
    tools: LoopTools<'_>,
) -> Result<RocCurve> {
    let (declared, items, scored) = score_items(app, manifest, cfg, tools)?;
    let scores: Vec<f64> = scored
        .iter()
        .map(|classes| {
            classes
                .iter()
                .filter(|(c, _)| positive_classes.contains(c))
                .map(|&(_, s)| s)
                .fold(0.0, f64::max)
        })
        .collect();
    let truth: Vec<bool> = items
        .iter()
        .map(|i| positive_classes.contains(&i.class))
        .collect();
    let mut roc = roc_curve(&scores, &truth)?;
    roc.manifest_hash = Some(manifest_hash(&declared, &items));
    Ok(roc)
}

/// Either kind of evaluation output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RunReport {
    Metrics(MetricsReport),
    Roc(RocCurve),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaReport {
    pub kind: String,
    pub manifest_hash: Option<String>,
    /// `b - a` per metric.
    pub deltas: BTreeMap<String, f64>,
}

fn same_manifest(a: &Option<String>, b: &Option<String>) -> Result<Option<String>> {
    if a == b {
        Ok(a.clone())
    } else {
        Err(EvalError::ManifestMismatch {
            a: a.clone().unwrap_or_default(),
            b: b.clone().unwrap_or_default(),
        })
    }
}

pub fn compare_runs(a: &RunReport, b: &RunReport) -> Result<DeltaReport> {
    match (a, b) {
        (RunReport::Metrics(a), RunReport::Metrics(b)) => {
            let hash = same_manifest(
                &Some(a.manifest_hash.clone()),
                &Some(b.manifest_hash.clone()),
            )?;
            let pairs = [
                ("accuracy", a.accuracy, b.accuracy),
                ("macro_precision", a.macro_precision, b.macro_precision),
                ("macro_recall", a.macro_recall, b.macro_recall),
                ("macro_f1", a.macro_f1, b.macro_f1),
                ("micro_precision", a.micro_precision, b.micro_precision),
                ("micro_recall", a.micro_recall, b.micro_recall),
                ("micro_f1", a.micro_f1, b.micro_f1),
                ("top1_accuracy", a.top1_accuracy, b.top1_accuracy),
                ("top5_accuracy", a.top5_accuracy, b.top5_accuracy),
            ];
            Ok(DeltaReport {
                kind: "metrics".into(),
                manifest_hash: hash,
                deltas: pairs
                    .iter()
                    .map(|&(k, x, y)| (k.to_string(), y - x))
                    .collect(),
            })
        }
        (RunReport::Roc(a), RunReport::Roc(b)) => Ok(DeltaReport {
            kind: "roc".into(),
            manifest_hash: same_manifest(&a.manifest_hash, &b.manifest_hash)?,
            deltas: [("auc".to_string(), b.auc - a.auc)].into_iter().collect(),
        }),
        _ => Err(EvalError::KindMismatch),
    }
}

pub fn per_class_csv(report: &MetricsReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["class", "precision", "recall", "f1", "support"])?;
    for m in &report.per_class {
        w.write_record([
            m.class.clone(),
            m.precision.to_string(),
            m.recall.to_string(),
            m.f1.to_string(),
            m.support.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn roc_points_csv(roc: &RocCurve) -> String {
    let mut out = String::from("fpr,tpr\n");
    for p in &roc.points {
        out.push_str(&format!("{},{}\n", p.fpr, p.tpr));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn hand_confusion_matrix() {
        let items = vec![
            ("A".to_string(), s(&["A", "B"])),
            ("A".to_string(), s(&["B", "A"])),
            ("B".to_string(), s(&["B", "A"])),
            ("B".to_string(), s(&["B", "A"])),
        ];
        let m = metrics_from_rankings(&s(&["A", "B"]), &items, String::new());
        assert_eq!(m.accuracy, 0.75);
        assert_eq!(m.per_class[0].precision, 1.0);
        assert_eq!(m.per_class[0].recall, 0.5);
        assert!((m.per_class[1].precision - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.per_class[1].recall, 1.0);
        assert!((m.macro_f1 - (2.0 / 3.0 + 0.8) / 2.0).abs() < 1e-12);
        assert_eq!(m.top5_accuracy, 1.0);
        assert_eq!(m.micro_recall, 0.75);
    }

    #[test]
    fn zero_division_is_zero() {
        let items = vec![("A".to_string(), s(&["A"]))];
        let m = metrics_from_rankings(&s(&["A", "C"]), &items, String::new());
        assert_eq!(m.per_class[1].f1, 0.0);
        assert_eq!(m.macro_f1, 0.5);
    }

    #[test]
    fn roc_fixtures() {
        let roc = roc_curve(&[0.9, 0.4, 0.6, 0.1], &[true, true, false, false]).unwrap();
        assert_eq!(roc.auc, 0.75);
        assert_eq!(roc.points.first(), Some(&RocPoint { fpr: 0.0, tpr: 0.0 }));
        assert_eq!(roc.points.last(), Some(&RocPoint { fpr: 1.0, tpr: 1.0 }));

        let flat = roc_curve(&[0.3f32; 4], &[true, false, true, false]).unwrap();
        assert_eq!(flat.auc, 0.5);
        assert_eq!(flat.points.len(), 2);

        let perfect = roc_curve(&[0.9, 0.8, 0.2], &[true, true, false]).unwrap();
        assert_eq!(perfect.auc, 1.0);
    }

    #[test]
    fn roc_errors() {
        assert!(matches!(
            roc_curve(&[0.1, 0.2], &[true, true]),
            Err(EvalError::DegenerateLabels { .. })
        ));
        assert!(matches!(
            roc_curve(&[0.1, f64::NAN], &[true, false]),
            Err(EvalError::NonFiniteScore(1))
        ));
        assert!(matches!(
            roc_curve(&[0.1], &[true, false]),
            Err(EvalError::LengthMismatch(1, 2))
        ));
    }

    #[test]
    fn manifest_parsing() {
        let text = r#"{"classes": ["a", "b"]}
{"id": "1", "class": "a", "embedding": [1.0, 0.0]}

{"id": "2", "class": "b", "embedding": {"file": "x.eef1", "label": "k"}}
"#;
        let m = DatasetManifest::parse_jsonl(text, "/data").unwrap();
        assert_eq!(m.classes, Some(s(&["a", "b"])));
        assert_eq!(m.len(), 2);
        assert_eq!(
            m.entries[1].embedding,
            EmbeddingRef::File {
                file: "x.eef1".into(),
                label: "k".into()
            }
        );
        assert_eq!(
            DatasetManifest::parse_jsonl(&m.to_jsonl(), "/data").unwrap(),
            m
        );

        let dup = "{\"id\": \"1\", \"class\": \"a\", \"embedding\": [1]}\n{\"id\": \"1\", \"class\": \"a\", \"embedding\": [1]}";
        assert!(matches!(
            DatasetManifest::parse_jsonl(dup, "."),
            Err(EvalError::Manifest { line: 2, .. })
        ));
        let undeclared =
            "{\"classes\": [\"a\"]}\n{\"id\": \"1\", \"class\": \"z\", \"embedding\": [1]}";
        assert!(DatasetManifest::parse_jsonl(undeclared, ".").is_err());
        assert!(DatasetManifest::parse_jsonl("not json", ".").is_err());
    }

    #[test]
    fn compare_identical_and_mismatched() {
        let roc = |auc, hash: &str| {
            RunReport::Roc(RocCurve {
                points: vec![],
                auc,
                manifest_hash: Some(hash.into()),
            })
        };
        let d = compare_runs(&roc(0.7, "h"), &roc(0.7, "h")).unwrap();
        assert_eq!(d.deltas["auc"], 0.0);
        let d = compare_runs(&roc(0.7, "h"), &roc(0.8, "h")).unwrap();
        assert!(d.deltas["auc"] > 0.0);
        assert!(matches!(
            compare_runs(&roc(0.7, "h"), &roc(0.7, "g")),
            Err(EvalError::ManifestMismatch { .. })
        ));
    }

    #[test]
    fn csv_exports() {
        let m = metrics_from_rankings(
            &s(&["a,b"]),
            &[("a,b".to_string(), s(&["a,b"]))],
            String::new(),
        );
        let csv = per_class_csv(&m).unwrap();
        assert_eq!(csv, "class,precision,recall,f1,support\n\"a,b\",1,1,1,1\n");
        let roc = roc_curve(&[1.0, 0.0], &[true, false]).unwrap();
        assert_eq!(roc_points_csv(&roc), "fpr,tpr\n0,0\n0,1\n1,1\n");
    }
}
