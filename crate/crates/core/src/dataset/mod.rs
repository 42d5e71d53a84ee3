//! Flow datasets: KDD ingestion, numeric encoding, stratified sampling.

mod exchange;
pub mod kdd;

use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::rng;

pub use exchange::{
    read_dataset, read_dataset_file, write_dataset, write_dataset_annotated, write_dataset_file,
};
pub use kdd::{map_attack_to_class, parse_kdd_csv, parse_kdd_reader, FlowRecord, FEATURE_NAMES};

pub const N_CLASSES: usize = 5;

/// Per-class counts, indexed by [`FlowClass::code`].
pub type ClassCounts = [usize; N_CLASSES];

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected 42 fields, got {got}")]
    FieldCount { line: usize, got: usize },
    #[error("record has {got} features, expected {expected}")]
    FeatureCount { expected: usize, got: usize },
    #[error("{}empty label", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    EmptyLabel { line: Option<usize> },
    #[error("unknown attack label {0:?}")]
    UnknownLabel(String),
    #[error("row {row}, column {column}: cannot parse {value:?} as a number")]
    BadNumber {
        row: usize,
        column: usize,
        value: String,
    },
    #[error("row {row}, column {column}: non-finite value")]
    NonFinite { row: usize, column: usize },
    #[error("no records to encode")]
    Empty,
    #[error("class {class}: requested {requested} samples but only {available} available")]
    TargetExceedsAvailable {
        class: FlowClass,
        requested: usize,
        available: usize,
    },
    #[error("dataset shape mismatch: {0}")]
    Shape(String),
    #[error("dataset file line {line}: {message}")]
    Format { line: usize, message: String },
}

/// The five traffic categories. Codes are fixed: 0=Normal … 4=R2L.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FlowClass {
    Normal = 0,
    Probe = 1,
    DoS = 2,
    U2R = 3,
    R2L = 4,
}

impl FlowClass {
    pub const ALL: [FlowClass; N_CLASSES] = [
        FlowClass::Normal,
        FlowClass::Probe,
        FlowClass::DoS,
        FlowClass::U2R,
        FlowClass::R2L,
    ];

    pub fn code(self) -> usize {
        self as usize
    }

    pub fn from_code(code: usize) -> Option<Self> {
        Self::ALL.get(code).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            FlowClass::Normal => "Normal",
            FlowClass::Probe => "Probe",
            FlowClass::DoS => "DoS",
            FlowClass::U2R => "U2R",
            FlowClass::R2L => "R2L",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }
}

impl fmt::Display for FlowClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Ordinal dictionary for one symbolic column. Codes follow sorted order;
/// values never seen at fit time map to `values.len()`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolDictionary {
    pub column: usize,
    pub values: Vec<String>,
}

impl SymbolDictionary {
    pub fn code(&self, value: &str) -> usize {
        self.values
            .binary_search_by(|v| v.as_str().cmp(value))
            .unwrap_or(self.values.len())
    }
}

/// The symbolic-column dictionaries of an encoding.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub dictionaries: Vec<SymbolDictionary>,
}

impl Vocabulary {
    /// Builds dictionaries from the sorted distinct values of each symbolic KDD column.
    pub fn fit(records: &[FlowRecord]) -> Self {
        let dictionaries = kdd::SYMBOLIC_COLUMNS
            .iter()
            .map(|&column| {
                let values: BTreeSet<&str> = records
                    .iter()
                    .map(|r| r.features[column].as_str())
                    .collect();
                SymbolDictionary {
                    column,
                    values: values.into_iter().map(String::from).collect(),
                }
            })
            .collect();
        Self { dictionaries }
    }

    fn dictionary(&self, column: usize) -> Option<&SymbolDictionary> {
        self.dictionaries.iter().find(|d| d.column == column)
    }
}

/// Numerically encoded, labeled flow samples (row-major feature matrix).
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedDataset {
    feature_names: Vec<String>,
    values: Vec<f64>,
    labels: Vec<FlowClass>,
    class_counts: ClassCounts,
    vocabulary: Vocabulary,
}

impl EncodedDataset {
    /// Builds a dataset from a row-major matrix. Fails on shape mismatch or
    /// non-finite values.
    pub fn new(
        feature_names: Vec<String>,
        values: Vec<f64>,
        labels: Vec<FlowClass>,
    ) -> Result<Self, DatasetError> {
        Self::with_vocabulary(feature_names, values, labels, Vocabulary::default())
    }

    pub fn with_vocabulary(
        feature_names: Vec<String>,
        values: Vec<f64>,
        labels: Vec<FlowClass>,
        vocabulary: Vocabulary,
    ) -> Result<Self, DatasetError> {
        let d = feature_names.len();
        if values.len() != d * labels.len() {
            return Err(DatasetError::Shape(format!(
                "{} values for {} rows of {} features",
                values.len(),
                labels.len(),
                d
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(DatasetError::NonFinite {
                row: pos / d.max(1),
                column: pos % d.max(1),
            });
        }
        let mut class_counts = [0; N_CLASSES];
        for l in &labels {
            class_counts[l.code()] += 1;
        }
        Ok(Self {
            feature_names,
            values,
            labels,
            class_counts,
            vocabulary,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.n_features();
        &self.values[i * d..(i + 1) * d]
    }

    #[inline]
    pub fn value(&self, row: usize, feature: usize) -> f64 {
        self.values[row * self.feature_names.len() + feature]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn label(&self, i: usize) -> FlowClass {
        self.labels[i]
    }

    pub fn labels(&self) -> &[FlowClass] {
        &self.labels
    }

    pub fn class_counts(&self) -> ClassCounts {
        self.class_counts
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    /// Rows whose label is `class`, ascending.
    pub fn indices_of(&self, class: FlowClass) -> Vec<usize> {
        (0..self.n_rows())
            .filter(|&i| self.labels[i] == class)
            .collect()
    }

    /// A new dataset with the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> EncodedDataset {
        let d = self.n_features();
        let mut values = Vec::with_capacity(rows.len() * d);
        let mut labels = Vec::with_capacity(rows.len());
        let mut class_counts = [0; N_CLASSES];
        for &r in rows {
            values.extend_from_slice(self.row(r));
            labels.push(self.labels[r]);
            class_counts[self.labels[r].code()] += 1;
        }
        EncodedDataset {
            feature_names: self.feature_names.clone(),
            values,
            labels,
            class_counts,
            vocabulary: self.vocabulary.clone(),
        }
    }
}

/// Encodes records with a vocabulary built from the records themselves.
pub fn encode(records: &[FlowRecord]) -> Result<EncodedDataset, DatasetError> {
    if records.is_empty() {
        return Err(DatasetError::Empty);
    }
    encode_with(records, &Vocabulary::fit(records))
}

/// Encodes records against an existing vocabulary, so a test file shares the
/// training file's symbol codes.
pub fn encode_with(
    records: &[FlowRecord],
    vocabulary: &Vocabulary,
) -> Result<EncodedDataset, DatasetError> {
    if records.is_empty() {
        return Err(DatasetError::Empty);
    }
    let d = kdd::N_FEATURES;
    let mut values = Vec::with_capacity(records.len() * d);
    let mut labels = Vec::with_capacity(records.len());
    for (row, rec) in records.iter().enumerate() {
        if rec.features.len() != d {
            return Err(DatasetError::FeatureCount {
                expected: d,
                got: rec.features.len(),
            });
        }
        for (column, raw) in rec.features.iter().enumerate() {
            let v = match vocabulary.dictionary(column) {
                Some(dict) => dict.code(raw) as f64,
                None => raw.parse::<f64>().map_err(|_| DatasetError::BadNumber {
                    row,
                    column,
                    value: raw.clone(),
                })?,
            };
            if !v.is_finite() {
                return Err(DatasetError::NonFinite { row, column });
            }
            values.push(v);
        }
        labels.push(rec.class()?);
    }
    EncodedDataset::with_vocabulary(
        FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        values,
        labels,
        vocabulary.clone(),
    )
}

/// Row indices of a per-class uniform sample without replacement, ascending.
pub fn stratified_sample_indices(
    ds: &EncodedDataset,
    targets: &ClassCounts,
    seed: u64,
) -> Result<Vec<usize>, DatasetError> {
    let counts = ds.class_counts();
    for class in FlowClass::ALL {
        let (requested, available) = (targets[class.code()], counts[class.code()]);
        if requested > available {
            return Err(DatasetError::TargetExceedsAvailable {
                class,
                requested,
                available,
            });
        }
    }
    let mut chosen = Vec::with_capacity(targets.iter().sum());
    for class in FlowClass::ALL {
        let pool = ds.indices_of(class);
        let mut r = rng::stream(seed, &[class.code() as u64]);
        let picked = index::sample(&mut r, pool.len(), targets[class.code()]);
        chosen.extend(picked.into_iter().map(|k| pool[k]));
    }
    chosen.sort_unstable();
    Ok(chosen)
}

/// Exactly `targets[j]` rows of each class `j`, drawn uniformly without
/// replacement. Rows keep their original relative order.
pub fn stratified_downsample(
    ds: &EncodedDataset,
    targets: &ClassCounts,
    seed: u64,
) -> Result<EncodedDataset, DatasetError> {
    let rows = stratified_sample_indices(ds, targets, seed)?;
    Ok(ds.select_rows(&rows))
}

/// Per-class targets that shrink `counts` proportionally to about `total`
/// rows. Classes that are present keep at least one row; nothing exceeds
/// its count, so the result is always a valid sampling target.
pub fn proportional_targets(counts: &ClassCounts, total: usize) -> ClassCounts {
    let sum: usize = counts.iter().sum();
    if total >= sum {
        return *counts;
    }
    counts.map(|c| {
        if c == 0 {
            0
        } else {
            ((c as f64 * total as f64 / sum as f64).round() as usize).clamp(1, c)
        }
    })
}

/// Splits off a stratified fraction of each class (at least one row from any
/// class with two or more rows). Returns `(rest, held_out)`.
pub fn stratified_split(
    ds: &EncodedDataset,
    fraction: f64,
    seed: u64,
) -> (EncodedDataset, EncodedDataset) {
    let counts = ds.class_counts();
    let mut targets = [0; N_CLASSES];
    for j in 0..N_CLASSES {
        let n = counts[j];
        let mut k = (fraction.clamp(0.0, 1.0) * n as f64).round() as usize;
        if n >= 2 {
            k = k.clamp(1, n - 1);
        } else {
            k = 0;
        }
        targets[j] = k;
    }
    let held = stratified_sample_indices(ds, &targets, seed).expect("targets within counts");
    let rest = complement(ds.n_rows(), &held);
    (ds.select_rows(&rest), ds.select_rows(&held))
}

/// Sorted indices in `0..n` not present in the sorted slice `taken`.
pub fn complement(n: usize, taken: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(n.saturating_sub(taken.len()));
    let mut t = taken.iter().peekable();
    for i in 0..n {
        if t.peek() == Some(&&i) {
            t.next();
        } else {
            out.push(i);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn proportional_targets_keep_minorities() {
        let c = proportional_targets(&[17129, 3107, 35700, 52, 1126], 1000);
        assert_eq!(c[3], 1);
        assert!((c.iter().sum::<usize>() as i64 - 1000).abs() <= 3);
        assert_eq!(proportional_targets(&[3, 0, 2, 1, 1], 100), [3, 0, 2, 1, 1]);
        assert_eq!(proportional_targets(&[0, 0, 9, 0, 1], 2), [0, 0, 2, 0, 1]);
    }
    use proptest::prelude::*;

    fn record(proto: &str, service: &str, label: &str, tag: usize) -> FlowRecord {
        let mut f: Vec<String> = (0..41).map(|i| format!("{}", i as f64 * 0.5)).collect();
        f[0] = tag.to_string();
        f[1] = proto.into();
        f[2] = service.into();
        f[3] = "SF".into();
        FlowRecord::new(f, label).unwrap()
    }

    #[test]
    fn protocol_codes_follow_sorted_order() {
        let recs = vec![
            record("tcp", "http", "normal", 0),
            record("udp", "http", "normal", 1),
            record("icmp", "http", "smurf", 2),
        ];
        let ds = encode(&recs).unwrap();
        assert_eq!(ds.value(0, 1), 1.0);
        assert_eq!(ds.value(1, 1), 2.0);
        assert_eq!(ds.value(2, 1), 0.0);
        assert_eq!(ds.label(2), FlowClass::DoS);
    }

    #[test]
    fn numeric_values_pass_through() {
        let recs = vec![record("tcp", "http", "normal", 7)];
        let ds = encode(&recs).unwrap();
        assert_eq!(ds.value(0, 0), 7.0);
        for c in 4..41 {
            assert_eq!(ds.value(0, c), c as f64 * 0.5);
        }
    }

    #[test]
    fn same_symbol_sets_give_same_encoding() {
        let a = vec![
            record("tcp", "ftp", "normal", 0),
            record("udp", "http", "normal", 1),
        ];
        let b = vec![
            record("udp", "http", "normal", 1),
            record("tcp", "ftp", "normal", 0),
        ];
        let ea = encode(&a).unwrap();
        let eb = encode(&b).unwrap();
        assert_eq!(ea.row(0), eb.row(1));
        assert_eq!(ea.vocabulary(), eb.vocabulary());
        assert_eq!(encode(&a).unwrap(), ea);
    }

    #[test]
    fn unseen_symbol_gets_out_of_vocabulary_code() {
        let train = vec![record("tcp", "http", "normal", 0)];
        let vocab = Vocabulary::fit(&train);
        let test = vec![record("sctp", "http", "normal", 0)];
        let ds = encode_with(&test, &vocab).unwrap();
        assert_eq!(ds.value(0, 1), 1.0);
    }

    #[test]
    fn bad_number_reports_row_and_column() {
        let mut r = record("tcp", "http", "normal", 0);
        r.features[5] = "abc".into();
        let err = encode(&[record("tcp", "http", "normal", 0), r]).unwrap_err();
        assert_eq!(
            err.to_string(),
            "row 1, column 5: cannot parse \"abc\" as a number"
        );
    }

    #[test]
    fn empty_records_rejected() {
        assert!(matches!(encode(&[]), Err(DatasetError::Empty)));
    }

    fn tagged_dataset(per_class: [usize; 5]) -> EncodedDataset {
        let mut values = Vec::new();
        let mut labels = Vec::new();
        let mut tag = 0.0;
        for (j, &n) in per_class.iter().enumerate() {
            for _ in 0..n {
                values.extend([tag, j as f64]);
                labels.push(FlowClass::from_code(j).unwrap());
                tag += 1.0;
            }
        }
        EncodedDataset::new(vec!["tag".into(), "class".into()], values, labels).unwrap()
    }

    #[test]
    fn full_targets_is_a_permutation() {
        let ds = tagged_dataset([5, 3, 4, 1, 2]);
        let out = stratified_downsample(&ds, &ds.class_counts(), 9).unwrap();
        let mut tags: Vec<f64> = (0..out.n_rows()).map(|i| out.value(i, 0)).collect();
        tags.sort_by(f64::total_cmp);
        assert_eq!(tags, (0..15).map(|t| t as f64).collect::<Vec<_>>());
    }

    #[test]
    fn table_iii_training_targets_are_hit_exactly() {
        let targets = [17129, 3107, 35700, 52, 1126];
        let ds = tagged_dataset([20000, 4107, 40000, 52, 1126]);
        let out = stratified_downsample(&ds, &targets, 42).unwrap();
        assert_eq!(out.class_counts(), targets);
    }

    #[test]
    fn target_over_availability_names_class() {
        let ds = tagged_dataset([5, 3, 4, 1, 2]);
        let err = stratified_downsample(&ds, &[1, 1, 1, 2, 1], 0).unwrap_err();
        assert!(err.to_string().starts_with("class U2R"));
    }

    #[test]
    fn split_keeps_every_class_on_both_sides() {
        let ds = tagged_dataset([50, 10, 80, 2, 6]);
        let (rest, held) = stratified_split(&ds, 0.3, 1);
        assert_eq!(rest.n_rows() + held.n_rows(), ds.n_rows());
        for j in 0..5 {
            assert!(rest.class_counts()[j] >= 1);
            assert!(held.class_counts()[j] >= 1);
        }
    }

    proptest! {
        #[test]
        fn downsample_preserves_row_alignment(
            counts in prop::array::uniform5(0usize..40),
            fracs in prop::array::uniform5(0.0f64..=1.0),
            seed in any::<u64>(),
        ) {
            let ds = tagged_dataset(counts);
            let targets: ClassCounts = std::array::from_fn(|j| (counts[j] as f64 * fracs[j]).floor() as usize);
            let a = stratified_sample_indices(&ds, &targets, seed).unwrap();
            let b = stratified_sample_indices(&ds, &targets, seed).unwrap();
            prop_assert_eq!(&a, &b);
            let out = ds.select_rows(&a);
            prop_assert_eq!(out.class_counts(), targets);
            for i in 0..out.n_rows() {
                // column 1 carries the class code the row was generated with
                prop_assert_eq!(out.value(i, 1) as usize, out.label(i).code());
                let src = out.value(i, 0) as usize;
                prop_assert_eq!(out.row(i), ds.row(src));
            }
        }
    }
}
