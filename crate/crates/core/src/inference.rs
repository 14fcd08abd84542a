//! Resolving author names in new records.
//!
//! A name no indexed author carries is a new author; a name carried by
//! exactly one author links to it directly. Otherwise the block model of the
//! name's atomic variate scores every unordered co-author pair of the record
//! (one empty placeholder added, so `C(ω+1, 2)` samples) and the class with
//! the largest summed probability wins.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use percent_encoding::{percent_decode_str, utf8_percent_encode, NON_ALPHANUMERIC};
use thiserror::Error;

use crate::blocking::{correspondence_frequency, NameIndex};
use crate::classifier::{argmax, load_checkpoint, CheckpointError, Dataset, ModelError, ModelParams};
use crate::corpus::names::{parse_author_name, AuthorRef};
use crate::corpus::record::{normalize_whitespace, BibRecord};
use crate::embedding::{EmbeddingError, Providers};
use crate::training::SampleEncoder;

#[derive(Debug, Error)]
pub enum InferenceError {
    #[error("{target:?} is not an author of record {record:?}")]
    TargetNotOnRecord { record: String, target: String },
    #[error("no trained model for variate {0:?}")]
    ModelUnavailable(String),
    #[error("model for {path}: {source}")]
    Checkpoint { path: PathBuf, source: CheckpointError },
    #[error("no prediction samples")]
    NoSamples,
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl From<EmbeddingError> for InferenceError {
    fn from(e: EmbeddingError) -> Self {
        InferenceError::Model(ModelError::Embedding(e))
    }
}

/// Which form of every name on the record the samples use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NameForm {
    AsGiven,
    Variate,
}

fn form_of(a: &AuthorRef, form: NameForm) -> String {
    match form {
        NameForm::AsGiven => a.display_name.clone(),
        NameForm::Variate => a.variate().as_str().to_string(),
    }
}

/// Position of the target on the record, by author key or displayed name.
pub fn find_target(record: &BibRecord, target_name: &str) -> Option<usize> {
    let wanted = normalize_whitespace(target_name);
    record
        .authors
        .iter()
        .position(|a| a.author_key == wanted)
        .or_else(|| record.authors.iter().position(|a| a.display_name == wanted))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictionSample {
    pub target_first: String,
    pub coauthor_p: String,
    pub coauthor_j: String,
    pub title: String,
    pub source: String,
    /// Author positions; `ω` denotes the empty placeholder.
    pub p_index: usize,
    pub j_index: usize,
}

pub fn generate_prediction_samples(
    record: &BibRecord,
    target_name: &str,
    form: NameForm,
) -> Result<Vec<PredictionSample>, InferenceError> {
    let t = find_target(record, target_name).ok_or_else(|| InferenceError::TargetNotOnRecord {
        record: record.record_id.clone(),
        target: target_name.to_string(),
    })?;
    let target_first = parse_author_name(&form_of(&record.authors[t], form))
        .map(|a| a.first)
        .unwrap_or_default();
    let mut names: Vec<String> = record.authors.iter().map(|a| form_of(a, form)).collect();
    names.push(String::new());
    let n = names.len();
    let mut out = Vec::with_capacity(n * (n - 1) / 2);
    for p in 0..n {
        for j in p + 1..n {
            out.push(PredictionSample {
                target_first: target_first.clone(),
                coauthor_p: names[p].clone(),
                coauthor_j: names[j].clone(),
                title: record.title.clone(),
                source: record.source.clone(),
                p_index: p,
                j_index: j,
            });
        }
    }
    Ok(out)
}

/// Element-wise sum of row-major probability rows and its argmax (lowest
/// index on ties). Each class's terms are added in sorted order, so the
/// result does not depend on the order of the rows.
pub fn aggregate_scores(probs: &[f64], classes: usize) -> (Vec<f64>, usize) {
    let rows = probs.len() / classes.max(1);
    let mut column = Vec::with_capacity(rows);
    let sum: Vec<f64> = (0..classes)
        .map(|c| {
            column.clear();
            column.extend((0..rows).map(|r| probs[r * classes + c]));
            column.sort_by(f64::total_cmp);
            column.iter().sum()
        })
        .collect();
    let best = argmax(&sum);
    (sum, best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub class: usize,
    pub author_key: String,
    pub scores: Vec<f64>,
    pub sample_count: usize,
}

impl Prediction {
    /// Up to `n` (author, score) pairs, best first.
    pub fn top(&self, classes: &[String], n: usize) -> Vec<(String, f64)> {
        let mut idx: Vec<usize> = (0..self.scores.len()).collect();
        idx.sort_by(|a, b| self.scores[*b].total_cmp(&self.scores[*a]).then(a.cmp(b)));
        idx.into_iter().take(n).map(|i| (classes[i].clone(), self.scores[i])).collect()
    }
}

pub fn predict_with(
    model: &ModelParams,
    samples: &[PredictionSample],
    encoder: &mut SampleEncoder<'_>,
) -> Result<Prediction, InferenceError> {
    if samples.is_empty() {
        return Err(InferenceError::NoSamples);
    }
    let mut data = Dataset::new(model.x1_dim, model.x2_dim);
    for s in samples {
        let x = encoder.encode(&s.target_first, &s.coauthor_p, &s.coauthor_j, &s.title, &s.source)?;
        if x.x1.len() != model.x1_dim || x.x2.len() != model.x2_dim {
            return Err(ModelError::DimMismatch {
                what: "embedding",
                expected: model.x1_dim + model.x2_dim,
                got: x.x1.len() + x.x2.len(),
            }
            .into());
        }
        data.push(&x.x1, &x.x2, 0);
    }
    let probs = model.predict_batch(&data.x1, &data.x2, samples.len())?;
    let (scores, class) = aggregate_scores(&probs, model.class_count());
    Ok(Prediction { class, author_key: model.classes[class].clone(), scores, sample_count: samples.len() })
}

pub fn predict_author(
    model: &ModelParams,
    samples: &[PredictionSample],
    providers: &Providers,
) -> Result<Prediction, InferenceError> {
    predict_with(model, samples, &mut SampleEncoder::new(providers))
}

/// Trained block models keyed by atomic name variate.
pub trait ModelRegistry: Sync {
    fn model(&self, anv: &str) -> Result<Option<Arc<ModelParams>>, InferenceError>;
}

#[derive(Debug, Default)]
pub struct MemoryRegistry {
    models: BTreeMap<String, Arc<ModelParams>>,
}

impl MemoryRegistry {
    pub fn insert(&mut self, model: ModelParams) {
        self.models.insert(model.meta.anv.clone(), Arc::new(model));
    }
}

impl ModelRegistry for MemoryRegistry {
    fn model(&self, anv: &str) -> Result<Option<Arc<ModelParams>>, InferenceError> {
        Ok(self.models.get(anv).cloned())
    }
}

/// Directory name for a variate's model files (`"Y Wang"` → `"Y%20Wang"`).
pub fn variate_dir_name(anv: &str) -> String {
    utf8_percent_encode(anv, NON_ALPHANUMERIC).to_string()
}

pub fn variate_from_dir_name(name: &str) -> Option<String> {
    percent_decode_str(name).decode_utf8().ok().map(|s| s.into_owned())
}

pub const MODEL_FILE: &str = "model.wmdl";

/// Models stored as `<root>/<variate dir>/model.wmdl`, loaded on first use.
pub struct DirRegistry {
    root: PathBuf,
    cache: Mutex<HashMap<String, Option<Arc<ModelParams>>>>,
}

impl DirRegistry {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into(), cache: Mutex::new(HashMap::new()) }
    }

    pub fn model_path(root: &Path, anv: &str) -> PathBuf {
        root.join(variate_dir_name(anv)).join(MODEL_FILE)
    }
}

impl ModelRegistry for DirRegistry {
    fn model(&self, anv: &str) -> Result<Option<Arc<ModelParams>>, InferenceError> {
        if let Some(hit) = self.cache.lock().expect("registry lock").get(anv) {
            return Ok(hit.clone());
        }
        let path = Self::model_path(&self.root, anv);
        let loaded = if path.exists() {
            let m = load_checkpoint(&path).map_err(|source| InferenceError::Checkpoint { path, source })?;
            Some(Arc::new(m))
        } else {
            None
        };
        self.cache.lock().expect("registry lock").insert(anv.to_string(), loaded.clone());
        Ok(loaded)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    NewAuthor,
    DirectLink(String),
    Predicted { prediction: Prediction, classes: Vec<String> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resolution {
    pub record_id: String,
    pub target_name: String,
    pub outcome: Outcome,
}

pub fn resolve(
    record: &BibRecord,
    target_name: &str,
    index: &NameIndex,
    registry: &dyn ModelRegistry,
    providers: &Providers,
) -> Result<Resolution, InferenceError> {
    let t = find_target(record, target_name).ok_or_else(|| InferenceError::TargetNotOnRecord {
        record: record.record_id.clone(),
        target: target_name.to_string(),
    })?;
    let target = &record.authors[t];
    let key = index.lookup_key(&target.display_name);
    let outcome = match correspondence_frequency(&key, index) {
        0 => Outcome::NewAuthor,
        1 => {
            let author = index.authors(&key).and_then(|a| a.iter().next()).expect("frequency 1");
            Outcome::DirectLink(author.clone())
        }
        _ => {
            let anv = target.variate();
            let model = registry
                .model(anv.as_str())?
                .ok_or_else(|| InferenceError::ModelUnavailable(anv.to_string()))?;
            let samples = generate_prediction_samples(record, &target.display_name, NameForm::AsGiven)?;
            let prediction = predict_author(&model, &samples, providers)?;
            Outcome::Predicted { prediction, classes: model.classes.clone() }
        }
    };
    Ok(Resolution { record_id: record.record_id.clone(), target_name: target_name.to_string(), outcome })
}

impl fmt::Display for Resolution {
    /// `record_id  target  outcome  author_key  top-3` separated by tabs.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (kind, key, top) = match &self.outcome {
            Outcome::NewAuthor => ("new", String::from("-"), String::from("-")),
            Outcome::DirectLink(a) => ("direct", a.clone(), String::from("-")),
            Outcome::Predicted { prediction, classes } => {
                let top: Vec<String> = prediction
                    .top(classes, 3)
                    .into_iter()
                    .map(|(a, s)| format!("{a}={s:.4}"))
                    .collect();
                ("predicted", prediction.author_key.clone(), top.join(","))
            }
        };
        write!(f, "{}\t{}\t{kind}\t{key}\t{top}", self.record_id, self.target_name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocking::build_name_index;
    use crate::classifier::{init_model, HiddenSpec};
    use crate::embedding::{EmbeddingStore, Provenance};
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn record(authors: &[&str]) -> BibRecord {
        let refs = authors.iter().map(|a| AuthorRef::parse(a).unwrap()).collect();
        BibRecord::new("r1", "A title", "Venue", None, refs).unwrap()
    }

    #[test]
    fn sample_counts_for_small_records() {
        let two = generate_prediction_samples(&record(&["Lei Wang", "Bo Li"]), "Lei Wang", NameForm::AsGiven).unwrap();
        assert_eq!(two.len(), 3);
        let solo = generate_prediction_samples(&record(&["Lei Wang"]), "Lei Wang", NameForm::AsGiven).unwrap();
        assert_eq!(solo.len(), 1);
        assert_eq!((solo[0].coauthor_p.as_str(), solo[0].coauthor_j.as_str()), ("Lei Wang", ""));
    }

    #[test]
    fn variate_form_abbreviates_every_name() {
        let s = generate_prediction_samples(&record(&["Lei Wang 0002", "Bo Li"]), "Lei Wang 0002", NameForm::Variate).unwrap();
        assert_eq!(s[0].target_first, "L");
        let names: BTreeSet<&str> = s.iter().flat_map(|x| [x.coauthor_p.as_str(), x.coauthor_j.as_str()]).collect();
        assert_eq!(names, BTreeSet::from(["", "B Li", "L Wang"]));
    }

    #[test]
    fn unknown_target_is_an_error() {
        let err = generate_prediction_samples(&record(&["Lei Wang"]), "Bo Li", NameForm::AsGiven).unwrap_err();
        assert!(matches!(err, InferenceError::TargetNotOnRecord { .. }));
    }

    #[test]
    fn eq_sum_example() {
        let (sum, best) = aggregate_scores(&[0.6, 0.4, 0.3, 0.7], 2);
        assert!((sum[0] - 0.9).abs() < 1e-15 && (sum[1] - 1.1).abs() < 1e-15);
        assert_eq!(best, 1);
        assert_eq!(aggregate_scores(&[0.5, 0.5], 2).1, 0);
    }

    proptest! {
        #[test]
        fn pair_set_matches_brute_force(omega in 1usize..=8) {
            let names: Vec<String> = (0..omega).map(|i| format!("N{i} Last")).collect();
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            let s = generate_prediction_samples(&record(&refs), &names[0], NameForm::AsGiven).unwrap();
            prop_assert_eq!(s.len(), (omega + 1) * omega / 2);
            let got: BTreeSet<(usize, usize)> = s.iter().map(|x| (x.p_index, x.j_index)).collect();
            let mut want = BTreeSet::new();
            for a in 0..=omega {
                for b in 0..=omega {
                    if a < b {
                        want.insert((a, b));
                    }
                }
            }
            prop_assert_eq!(got, want);
        }
    }

    fn two_author_setup() -> (Vec<BibRecord>, NameIndex, Providers) {
        let recs = vec![
            BibRecord::new("a", "Alpha", "V", None, vec![AuthorRef::parse("Lei Wang 0001").unwrap(), AuthorRef::parse("Bo Li").unwrap()]).unwrap(),
            BibRecord::new("b", "Beta", "V", None, vec![AuthorRef::parse("Lin Wang").unwrap()]).unwrap(),
        ];
        let index = build_name_index(&recs);
        let mut store = EmbeddingStore::new(3, Provenance::Contextual);
        for k in ["Alpha", "Beta", "Gamma", "V"] {
            store.insert(k, vec![0.1, 0.2, 0.3]).unwrap();
        }
        (recs, index, Providers::with_text(Arc::new(store)))
    }

    #[test]
    fn routing() {
        let (_, index, providers) = two_author_setup();
        let mut registry = MemoryRegistry::default();
        let query = record(&["Ed Unseen", "Bo Li", "L Wang"]);
        let q = BibRecord { title: "Gamma".into(), source: "V".into(), ..query };

        let r = resolve(&q, "Ed Unseen", &index, &registry, &providers).unwrap();
        assert_eq!(r.outcome, Outcome::NewAuthor);
        let r = resolve(&q, "Bo Li", &index, &registry, &providers).unwrap();
        assert_eq!(r.outcome, Outcome::DirectLink("Bo Li".into()));
        assert!(matches!(
            resolve(&q, "L Wang", &index, &registry, &providers),
            Err(InferenceError::ModelUnavailable(v)) if v == "L Wang"
        ));

        let hidden = HiddenSpec { branch1: vec![4], branch2: vec![4], merge: vec![4], final_dropout: 0.5 };
        let mut m = init_model(400, 3, vec!["Lei Wang 0001".into(), "Lin Wang".into()], &hidden, 1).unwrap();
        m.meta.anv = "L Wang".into();
        registry.insert(m);
        let r = resolve(&q, "L Wang", &index, &registry, &providers).unwrap();
        let Outcome::Predicted { prediction, .. } = &r.outcome else { panic!("{r:?}") };
        assert_eq!(prediction.scores.len(), 2);
        assert_eq!(prediction.sample_count, 6);
        assert!(prediction.scores.iter().all(|s| *s > 0.0 && *s < 6.0));
        let line = r.to_string();
        assert_eq!(line.split('\t').count(), 5);
        assert!(line.starts_with("r1\tL Wang\tpredicted\t"));
    }

    #[test]
    fn row_order_does_not_change_scores() {
        let rows = [0.1, 0.7, 0.2, 0.3, 0.3, 0.4, 1e-9, 0.5, 0.5 - 1e-9, 0.33, 0.33, 0.34];
        let (base, _) = aggregate_scores(&rows, 3);
        let mut swapped = rows.to_vec();
        swapped.swap(0, 9);
        swapped.swap(1, 10);
        swapped.swap(2, 11);
        assert_eq!(aggregate_scores(&swapped, 3).0, base);
    }

    #[test]
    fn directory_names_round_trip() {
        assert_eq!(variate_dir_name("Y Wang"), "Y%20Wang");
        assert_eq!(variate_from_dir_name(&variate_dir_name("J Müller/x")).unwrap(), "J Müller/x");
    }

    #[test]
    fn dir_registry_loads_saved_models() {
        let dir = tempfile::tempdir().unwrap();
        let hidden = HiddenSpec { branch1: vec![2], branch2: vec![2], merge: vec![2], final_dropout: 0.5 };
        let mut m = init_model(4, 3, vec!["a".into(), "b".into()], &hidden, 1).unwrap();
        m.meta.anv = "Y Wang".into();
        let path = DirRegistry::model_path(dir.path(), "Y Wang");
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        crate::classifier::save_checkpoint(&path, &m).unwrap();
        let reg = DirRegistry::new(dir.path());
        assert_eq!(*reg.model("Y Wang").unwrap().unwrap(), m);
        assert!(reg.model("Z Wang").unwrap().is_none());
    }
}
