//! Training samples drawn from one (record, target author) pair.
//!
//! A record with ω authors yields ω full-name samples, one per choice of the
//! second co-author `p` (the target itself included), each with a third
//! co-author `j` drawn uniformly from the same ω authors. Every full sample
//! is then repeated with all names reduced to their atomic variates.

use std::collections::BTreeMap;

use rand::Rng;
use thiserror::Error;

use crate::corpus::names::{parse_author_name, AuthorRef};
use crate::corpus::record::BibRecord;
use crate::util::derived_rng;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SampleError {
    #[error("author {author:?} is not on record {record:?}")]
    TargetNotOnRecord { record: String, author: String },
    #[error("reassignment period must be at least 1")]
    ZeroPeriod,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingSample {
    pub target_class: usize,
    /// Full display name, or its atomic variate when `abbreviated`.
    pub target_name: String,
    /// First-name part of `target_name` (a bare initial when abbreviated).
    pub target_first: String,
    pub coauthor_p: String,
    pub coauthor_j: String,
    pub title: String,
    pub source: String,
    pub abbreviated: bool,
    pub record_id: String,
    pub target_key: String,
    pub p_index: usize,
    pub j_index: usize,
}

fn name_form(a: &AuthorRef, abbreviated: bool) -> String {
    if abbreviated {
        a.variate().as_str().to_string()
    } else {
        a.display_name.clone()
    }
}

fn first_of(name: &str) -> String {
    parse_author_name(name).map(|a| a.first).unwrap_or_default()
}

fn make_sample(record: &BibRecord, target: &AuthorRef, class: usize, p: usize, j: usize, abbreviated: bool) -> TrainingSample {
    let target_name = name_form(target, abbreviated);
    TrainingSample {
        target_class: class,
        target_first: first_of(&target_name),
        target_name,
        coauthor_p: name_form(&record.authors[p], abbreviated),
        coauthor_j: name_form(&record.authors[j], abbreviated),
        title: record.title.clone(),
        source: record.source.clone(),
        abbreviated,
        record_id: record.record_id.clone(),
        target_key: target.author_key.clone(),
        p_index: p,
        j_index: j,
    }
}

/// The 2ω samples of one record for one target: ω full-name samples
/// followed by their abbreviated twins (same `p` and `j`).
pub fn generate_samples<R: Rng + ?Sized>(
    record: &BibRecord,
    target_key: &str,
    target_class: usize,
    rng: &mut R,
) -> Result<Vec<TrainingSample>, SampleError> {
    let target = record.author(target_key).ok_or_else(|| SampleError::TargetNotOnRecord {
        record: record.record_id.clone(),
        author: target_key.to_string(),
    })?;
    let omega = record.omega();
    let js: Vec<usize> = (0..omega).map(|_| rng.gen_range(0..omega)).collect();
    let mut out = Vec::with_capacity(2 * omega);
    for abbreviated in [false, true] {
        for (p, &j) in js.iter().enumerate() {
            out.push(make_sample(record, target, target_class, p, j, abbreviated));
        }
    }
    Ok(out)
}

/// Seeded per-pair stream for the initial sample draw.
pub fn samples_for_pair(record: &BibRecord, target_key: &str, target_class: usize, seed: u64) -> Result<Vec<TrainingSample>, SampleError> {
    let mut rng = derived_rng(seed, &[b"samples", record.record_id.as_bytes(), target_key.as_bytes()]);
    generate_samples(record, target_key, target_class, &mut rng)
}

/// Redraw every sample's third co-author when `epoch` is a multiple of
/// `period`. Full and abbreviated twins receive the same draw. Returns
/// whether anything was redrawn.
pub fn reassign_third_coauthor(
    samples: &mut [TrainingSample],
    records: &BTreeMap<&str, &BibRecord>,
    epoch: usize,
    period: usize,
    seed: u64,
) -> Result<bool, SampleError> {
    if period == 0 {
        return Err(SampleError::ZeroPeriod);
    }
    if epoch == 0 || !epoch.is_multiple_of(period) {
        return Ok(false);
    }
    let epoch_bytes = (epoch as u64).to_le_bytes();
    for s in samples.iter_mut() {
        let record = records[s.record_id.as_str()];
        let p_bytes = (s.p_index as u64).to_le_bytes();
        let mut rng = derived_rng(
            seed,
            &[b"reassign", &epoch_bytes, s.record_id.as_bytes(), s.target_key.as_bytes(), &p_bytes],
        );
        let j = rng.gen_range(0..record.omega());
        s.j_index = j;
        s.coauthor_j = name_form(&record.authors[j], s.abbreviated);
    }
    Ok(true)
}

pub fn class_sample_counts(samples: &[TrainingSample], class_count: usize) -> Vec<usize> {
    let mut counts = vec![0; class_count];
    for s in samples {
        counts[s.target_class] += 1;
    }
    counts
}

pub const MIN_CLASS_WEIGHT: f64 = 0.1;
pub const MAX_CLASS_WEIGHT: f64 = 10.0;

/// `w_c = N / (L · N_c)`, clipped to `[0.1, 10]`; empty classes get 10.
pub fn class_weights(counts: &[usize]) -> Vec<f64> {
    let n: usize = counts.iter().sum();
    let l = counts.len() as f64;
    counts
        .iter()
        .enumerate()
        .map(|(c, &nc)| {
            if nc == 0 {
                log::warn!("class {c} has no training samples; weight set to {MAX_CLASS_WEIGHT}");
                MAX_CLASS_WEIGHT
            } else {
                (n as f64 / (l * nc as f64)).clamp(MIN_CLASS_WEIGHT, MAX_CLASS_WEIGHT)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn record(authors: &[&str]) -> BibRecord {
        let refs = authors.iter().map(|a| AuthorRef::parse(a).unwrap()).collect();
        BibRecord::new("conf/x/R1", "Learning things", "ICML", None, refs).unwrap()
    }

    #[test]
    fn three_authors_give_six_samples() {
        let r = record(&["Lei Wang 0003", "Yi Chen", "Bo Li"]);
        let s = generate_samples(&r, "Lei Wang 0003", 4, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(s.len(), 6);
        assert_eq!(s.iter().filter(|x| x.abbreviated).count(), 3);
        let full: Vec<&str> = s[..3].iter().map(|x| x.coauthor_p.as_str()).collect();
        assert_eq!(full, ["Lei Wang", "Yi Chen", "Bo Li"]);
        let abbr: Vec<&str> = s[3..].iter().map(|x| x.coauthor_p.as_str()).collect();
        assert_eq!(abbr, ["L Wang", "Y Chen", "B Li"]);
        assert_eq!(s[0].target_name, "Lei Wang");
        assert_eq!(s[0].target_first, "Lei");
        assert_eq!(s[3].target_name, "L Wang");
        assert_eq!(s[3].target_first, "L");
        for i in 0..3 {
            assert_eq!(s[i].j_index, s[i + 3].j_index);
        }
        assert!(s.iter().all(|x| x.target_class == 4 && x.title == "Learning things" && x.source == "ICML"));
    }

    #[test]
    fn solo_record_pairs_target_with_itself() {
        let r = record(&["Lei Wang"]);
        let s = generate_samples(&r, "Lei Wang", 0, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!((s[0].coauthor_p.as_str(), s[0].coauthor_j.as_str()), ("Lei Wang", "Lei Wang"));
        assert_eq!((s[1].coauthor_p.as_str(), s[1].coauthor_j.as_str()), ("L Wang", "L Wang"));
    }

    #[test]
    fn target_must_be_on_record() {
        let r = record(&["Lei Wang", "Bo Li"]);
        let err = generate_samples(&r, "Lei Wang 0002", 0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap_err();
        assert!(matches!(err, SampleError::TargetNotOnRecord { .. }));
    }

    #[test]
    fn third_coauthor_is_uniform() {
        let r = record(&["Lei Wang", "Yi Chen", "Bo Li", "Al Xu"]);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut freq = [0usize; 4];
        let trials = 10_000;
        for _ in 0..trials {
            let s = generate_samples(&r, "Lei Wang", 0, &mut rng).unwrap();
            freq[s[1].j_index] += 1;
        }
        for f in freq {
            let share = f as f64 / trials as f64;
            assert!((share - 0.25).abs() <= 0.02, "{freq:?}");
        }
    }

    fn sample_set() -> (Vec<BibRecord>, Vec<TrainingSample>) {
        let recs = vec![record(&["Lei Wang", "Yi Chen", "Bo Li", "Al Xu", "Ed Ma"])];
        let s = samples_for_pair(&recs[0], "Lei Wang", 1, 3).unwrap();
        (recs, s)
    }

    #[test]
    fn reassignment_only_on_period_multiples() {
        let (recs, s) = sample_set();
        let map: BTreeMap<&str, &BibRecord> = recs.iter().map(|r| (r.record_id.as_str(), r)).collect();
        let mut a = s.clone();
        assert!(!reassign_third_coauthor(&mut a, &map, 3, 10, 0).unwrap());
        assert_eq!(a, s);
        assert!(reassign_third_coauthor(&mut a, &map, 10, 10, 0).unwrap());
        let mut b = s.clone();
        reassign_third_coauthor(&mut b, &map, 10, 10, 0).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), s.len());
        assert_eq!(class_sample_counts(&a, 2), class_sample_counts(&s, 2));
        for (x, y) in a.iter().zip(&s) {
            assert_eq!((x.p_index, &x.target_name, &x.title, x.abbreviated), (y.p_index, &y.target_name, &y.title, y.abbreviated));
        }
        let half = a.len() / 2;
        for i in 0..half {
            assert_eq!(a[i].j_index, a[i + half].j_index);
        }
        assert_eq!(reassign_third_coauthor(&mut a, &map, 10, 0, 0), Err(SampleError::ZeroPeriod));
    }

    #[test]
    fn weights_follow_inverse_frequency() {
        assert_eq!(class_weights(&[10, 10]), vec![1.0, 1.0]);
        let w = class_weights(&[30, 10]);
        assert!((w[0] - 40.0 / 60.0).abs() < 1e-12 && (w[1] - 2.0).abs() < 1e-12);
        let w = class_weights(&[10_000, 1]);
        assert!((w[0] - 10_001.0 / 20_000.0).abs() < 1e-12 && w[1] == 10.0);
        // The lower bound needs more than ten classes to be reachable.
        let mut counts = vec![1; 20];
        counts[0] = 10_000;
        let w = class_weights(&counts);
        assert_eq!(w[0], 0.1);
        assert!(w[1..].iter().all(|x| *x == 10.0));
        assert_eq!(class_weights(&[5, 0]), vec![0.5, 10.0]);
    }

    proptest! {
        #[test]
        fn sample_count_and_purity(omega in 1usize..=10, seed in any::<u64>()) {
            let names: Vec<String> = (0..omega).map(|i| format!("Name{i} Last{i}")).collect();
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            let r = record(&refs);
            let s = generate_samples(&r, &names[0], 0, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            prop_assert_eq!(s.len(), 2 * omega);
            for x in &s {
                let names = [&x.target_name, &x.coauthor_p, &x.coauthor_j];
                for n in names {
                    let first = n.split(' ').next().unwrap();
                    prop_assert_eq!(first.chars().count() == 1, x.abbreviated);
                }
            }
        }
    }
}
