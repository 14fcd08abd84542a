//! Micro/macro precision, recall and F1 for block classifiers.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use thiserror::Error;

use crate::blocking::{Block, TargetPair};
use crate::classifier::ModelParams;
use crate::embedding::Providers;
use crate::inference::{generate_prediction_samples, predict_with, InferenceError, NameForm};
use crate::training::SampleEncoder;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("confusion matrix is not square (row {row} has {len} entries, expected {expected})")]
    NotSquare { row: usize, len: usize, expected: usize },
    #[error("model classes do not match block {0:?}")]
    ClassMismatch(String),
    #[error("no test pairs")]
    EmptyTestSet,
    #[error(transparent)]
    Inference(#[from] InferenceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    /// Every test pair predicted twice: full names and atomic variates.
    All,
    /// Atomic variates only.
    Anv,
}

impl fmt::Display for EvalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvalMode::All => "All",
            EvalMode::Anv => "ANV",
        })
    }
}

impl FromStr for EvalMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "all" => Ok(EvalMode::All),
            "anv" => Ok(EvalMode::Anv),
            other => Err(format!("unknown evaluation mode {other:?} (expected all or anv)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Trials whose true class is this one.
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSet {
    pub per_class: Vec<ClassMetrics>,
    pub micro_precision: f64,
    pub micro_recall: f64,
    pub micro_f1: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub total: u64,
    pub correct: u64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

impl MetricSet {
    /// Unweighted means of per-class metrics over `classes`, as (P, R, F1).
    pub fn macro_over(&self, classes: &[usize]) -> (f64, f64, f64) {
        if classes.is_empty() {
            return (0.0, 0.0, 0.0);
        }
        let n = classes.len() as f64;
        let sum = |f: fn(&ClassMetrics) -> f64| classes.iter().map(|c| f(&self.per_class[*c])).sum::<f64>() / n;
        (sum(|m| m.precision), sum(|m| m.recall), sum(|m| m.f1))
    }
}

/// Metrics of a confusion matrix with rows = true class, columns = predicted.
pub fn metrics_from_confusion(confusion: &[Vec<u64>]) -> Result<MetricSet, EvalError> {
    let l = confusion.len();
    for (row, r) in confusion.iter().enumerate() {
        if r.len() != l {
            return Err(EvalError::NotSquare { row, len: r.len(), expected: l });
        }
    }
    let mut per_class = Vec::with_capacity(l);
    let (mut tp_sum, mut fp_sum, mut fn_sum) = (0u64, 0u64, 0u64);
    for c in 0..l {
        let tp = confusion[c][c];
        let support: u64 = confusion[c].iter().sum();
        let predicted: u64 = confusion.iter().map(|r| r[c]).sum();
        let (fp, fneg) = (predicted - tp, support - tp);
        tp_sum += tp;
        fp_sum += fp;
        fn_sum += fneg;
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fneg);
        per_class.push(ClassMetrics { precision, recall, f1: harmonic(precision, recall), support });
    }
    let all: Vec<usize> = (0..l).collect();
    let total = tp_sum + fn_sum;
    let mut m = MetricSet {
        per_class,
        micro_precision: ratio(tp_sum, tp_sum + fp_sum),
        micro_recall: ratio(tp_sum, tp_sum + fn_sum),
        micro_f1: ratio(2 * tp_sum, 2 * tp_sum + fp_sum + fn_sum),
        macro_precision: 0.0,
        macro_recall: 0.0,
        macro_f1: 0.0,
        total,
        correct: tp_sum,
    };
    (m.macro_precision, m.macro_recall, m.macro_f1) = m.macro_over(&all);
    Ok(m)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub anv: String,
    pub mode: EvalMode,
    pub classes: Vec<String>,
    pub confusion: Vec<Vec<u64>>,
    pub metrics: MetricSet,
    /// Classes with at least one test trial; macro averages run over these.
    pub included: Vec<usize>,
    pub mi_p: f64,
    pub ma_p: f64,
    pub mi_r: f64,
    pub ma_r: f64,
    pub mi_f1: f64,
    pub ma_f1: f64,
    pub test_pairs: usize,
    pub trials: u64,
}

impl EvalReport {
    pub fn from_confusion(anv: &str, mode: EvalMode, classes: Vec<String>, confusion: Vec<Vec<u64>>, test_pairs: usize) -> Result<Self, EvalError> {
        let metrics = metrics_from_confusion(&confusion)?;
        let included: Vec<usize> = (0..classes.len()).filter(|c| metrics.per_class[*c].support > 0).collect();
        let (ma_p, ma_r, ma_f1) = metrics.macro_over(&included);
        Ok(Self {
            anv: anv.to_string(),
            mode,
            classes,
            mi_p: metrics.micro_precision,
            mi_r: metrics.micro_recall,
            mi_f1: metrics.micro_f1,
            ma_p,
            ma_r,
            ma_f1,
            trials: metrics.total,
            confusion,
            metrics,
            included,
            test_pairs,
        })
    }

    /// Human-readable summary followed by a per-class table.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "block {}  mode {}  test pairs {}  trials {}", self.anv, self.mode, self.test_pairs, self.trials);
        let _ = writeln!(s, "classes evaluated {}/{}", self.included.len(), self.classes.len());
        for (name, v) in self.summary() {
            let _ = writeln!(s, "{name:<6} {v:.3}");
        }
        let _ = writeln!(s, "\n{:<32} {:>9} {:>9} {:>9} {:>8}", "author", "precision", "recall", "f1", "support");
        for &c in &self.included {
            let m = &self.metrics.per_class[c];
            let _ = writeln!(s, "{:<32} {:>9.3} {:>9.3} {:>9.3} {:>8}", self.classes[c], m.precision, m.recall, m.f1, m.support);
        }
        s
    }

    /// One `metric <TAB> anv <TAB> mode <TAB> name <TAB> value` line per number.
    pub fn to_machine_lines(&self) -> String {
        let mut s = String::new();
        for (name, v) in self.summary() {
            let _ = writeln!(s, "metric\t{}\t{}\t{name}\t{v}", self.anv, self.mode);
        }
        let _ = writeln!(s, "metric\t{}\t{}\tclasses_included\t{}", self.anv, self.mode, self.included.len());
        let _ = writeln!(s, "metric\t{}\t{}\ttrials\t{}", self.anv, self.mode, self.trials);
        s
    }

    pub fn summary(&self) -> [(&'static str, f64); 6] {
        [
            ("MiAP", self.mi_p),
            ("MaAP", self.ma_p),
            ("MiAR", self.mi_r),
            ("MaAR", self.ma_r),
            ("MiAF1", self.mi_f1),
            ("MaAF1", self.ma_f1),
        ]
    }
}

pub fn evaluate_block(
    model: &ModelParams,
    block: &Block,
    test_pairs: &[TargetPair],
    mode: EvalMode,
    providers: &Providers,
) -> Result<EvalReport, EvalError> {
    if model.classes != block.authors {
        return Err(EvalError::ClassMismatch(block.anv.to_string()));
    }
    if test_pairs.is_empty() {
        return Err(EvalError::EmptyTestSet);
    }
    let forms: &[NameForm] = match mode {
        EvalMode::All => &[NameForm::AsGiven, NameForm::Variate],
        EvalMode::Anv => &[NameForm::Variate],
    };
    let l = block.class_count();
    let mut confusion = vec![vec![0u64; l]; l];
    let mut encoder = SampleEncoder::new(providers);
    for pair in test_pairs {
        let record = &block.records[pair.record];
        let truth = block.class_of[&pair.author_key];
        for &form in forms {
            let samples = generate_prediction_samples(record, &pair.author_key, form)?;
            let predicted = predict_with(model, &samples, &mut encoder)?.class;
            confusion[truth][predicted] += 1;
        }
    }
    EvalReport::from_confusion(block.anv.as_str(), mode, block.authors.clone(), confusion, test_pairs.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_matrix_is_perfect() {
        let m = metrics_from_confusion(&[vec![5, 0, 0], vec![0, 5, 0], vec![0, 0, 5]]).unwrap();
        for v in [m.micro_precision, m.micro_recall, m.micro_f1, m.macro_precision, m.macro_recall, m.macro_f1] {
            assert_eq!(v, 1.0);
        }
    }

    #[test]
    fn two_by_two_hand_values() {
        let m = metrics_from_confusion(&[vec![2, 1], vec![0, 3]]).unwrap();
        let c0 = m.per_class[0];
        let c1 = m.per_class[1];
        assert!((c0.precision - 1.0).abs() < 1e-12 && (c0.recall - 2.0 / 3.0).abs() < 1e-12);
        assert!((c1.precision - 0.75).abs() < 1e-12 && (c1.recall - 1.0).abs() < 1e-12);
        assert!((m.macro_f1 - (0.8 + 6.0 / 7.0) / 2.0).abs() < 1e-12);
        assert!((m.macro_f1 - 0.829).abs() < 1e-3);
        assert!((m.micro_f1 - 5.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn empty_class_counts_in_the_plain_macro_mean() {
        let m = metrics_from_confusion(&[vec![3, 0, 0], vec![0, 3, 0], vec![0, 0, 0]]).unwrap();
        assert_eq!(m.per_class[2], ClassMetrics::default());
        assert!((m.macro_f1 - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn constant_predictor() {
        let confusion: Vec<Vec<u64>> = (0..4).map(|_| vec![5, 0, 0, 0]).collect();
        let r = EvalReport::from_confusion("A B", EvalMode::All, (0..4).map(|i| i.to_string()).collect(), confusion, 20).unwrap();
        assert_eq!(r.mi_f1, 0.25);
        assert!((r.ma_p - 0.0625).abs() < 1e-15);
        assert!((r.ma_r - 0.25).abs() < 1e-15);
        assert_eq!(r.included.len(), 4);
    }

    #[test]
    fn report_macro_skips_untested_classes() {
        let r = EvalReport::from_confusion("A B", EvalMode::Anv, vec!["x".into(), "y".into(), "z".into()], vec![vec![2, 0, 0], vec![0, 2, 0], vec![0, 0, 0]], 4).unwrap();
        assert_eq!(r.included, vec![0, 1]);
        assert_eq!(r.ma_f1, 1.0);
        assert!(r.to_table().contains("classes evaluated 2/3"));
        assert_eq!(r.to_machine_lines().lines().count(), 8);
    }

    #[test]
    fn non_square_is_an_error() {
        assert!(matches!(metrics_from_confusion(&[vec![1, 2], vec![3]]), Err(EvalError::NotSquare { row: 1, .. })));
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("all".parse::<EvalMode>().unwrap(), EvalMode::All);
        assert_eq!("ANV".parse::<EvalMode>().unwrap(), EvalMode::Anv);
        assert!("x".parse::<EvalMode>().is_err());
    }

    fn matrix() -> impl Strategy<Value = Vec<Vec<u64>>> {
        (1usize..6).prop_flat_map(|l| proptest::collection::vec(proptest::collection::vec(0u64..20, l), l))
    }

    proptest! {
        #[test]
        fn micro_f1_is_accuracy(m in matrix()) {
            let r = metrics_from_confusion(&m).unwrap();
            let trace: u64 = (0..m.len()).map(|i| m[i][i]).sum();
            let total: u64 = m.iter().flatten().sum();
            let acc = if total == 0 { 0.0 } else { trace as f64 / total as f64 };
            prop_assert_eq!(r.micro_f1, acc);
            prop_assert_eq!(r.micro_precision, acc);
            prop_assert_eq!(r.micro_recall, acc);
        }

        #[test]
        fn relabeling_preserves_aggregates(m in matrix(), seed in any::<u64>()) {
            use rand::{seq::SliceRandom, SeedableRng};
            let l = m.len();
            let mut perm: Vec<usize> = (0..l).collect();
            perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let mut pm = vec![vec![0; l]; l];
            for i in 0..l {
                for j in 0..l {
                    pm[perm[i]][perm[j]] = m[i][j];
                }
            }
            let a = metrics_from_confusion(&m).unwrap();
            let b = metrics_from_confusion(&pm).unwrap();
            prop_assert_eq!(a.micro_f1, b.micro_f1);
            for (x, y) in [(a.macro_f1, b.macro_f1), (a.macro_precision, b.macro_precision), (a.macro_recall, b.macro_recall)] {
                prop_assert!((x - y).abs() < 1e-12);
                prop_assert!((0.0..=1.0).contains(&x));
            }
        }
    }
}
