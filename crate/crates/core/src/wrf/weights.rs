//! Per-sample selection weights and their per-tree updates.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::WrfError;
use crate::dataset::{ClassCounts, FlowClass, N_CLASSES};

/// `e_m` is clamped into `[ERROR_CLAMP, 1 - ERROR_CLAMP]` before the log.
pub const ERROR_CLAMP: f64 = 1e-6;
/// Bound on the exponent of the β multiplier.
pub const BETA_EXPONENT_CLAMP: f64 = 10.0;

/// Prior weight of each class; sums to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassWeightProfile(pub [f64; N_CLASSES]);

impl ClassWeightProfile {
    /// Normal 0.3, Probe 0.15, DoS 0.35, U2R 0.05, R2L 0.15.
    pub const DEFAULT: ClassWeightProfile = ClassWeightProfile([0.3, 0.15, 0.35, 0.05, 0.15]);

    /// Weights proportional to class frequency, so every sample gets `1/N`.
    pub fn uniform(counts: &ClassCounts) -> Self {
        let n: usize = counts.iter().sum();
        Self(std::array::from_fn(|j| counts[j] as f64 / n.max(1) as f64))
    }

    pub fn validate(&self) -> Result<(), WrfError> {
        if self.0.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(WrfError::InvalidProfile(format!(
                "class weights must be finite and non-negative: {:?}",
                self.0
            )));
        }
        let sum: f64 = self.0.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(WrfError::InvalidProfile(format!(
                "class weights sum to {sum}, expected 1"
            )));
        }
        Ok(())
    }
}

impl Default for ClassWeightProfile {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// Selection probability of every training sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleWeights {
    pub w: Vec<f64>,
    /// Index of the tree these weights will train.
    pub generation: usize,
}

impl SampleWeights {
    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.w.iter().sum()
    }

    /// Total weight held by each class.
    pub fn class_totals(&self, labels: &[FlowClass]) -> [f64; N_CLASSES] {
        let mut totals = [0.0; N_CLASSES];
        for (w, l) in self.w.iter().zip(labels) {
            totals[l.code()] += w;
        }
        totals
    }
}

/// Each sample of class `j` starts with `w_j / N_j`.
pub fn init_weights(
    labels: &[FlowClass],
    profile: &ClassWeightProfile,
) -> Result<SampleWeights, WrfError> {
    profile.validate()?;
    let mut counts = [0usize; N_CLASSES];
    for l in labels {
        counts[l.code()] += 1;
    }
    for class in FlowClass::ALL {
        let (w, n) = (profile.0[class.code()], counts[class.code()]);
        if w > 0.0 && n == 0 {
            return Err(WrfError::WeightedClassWithoutSamples(class));
        }
        if w == 0.0 && n > 0 {
            return Err(WrfError::InvalidProfile(format!(
                "class {class} has {n} samples but zero weight"
            )));
        }
    }
    let w = labels
        .iter()
        .map(|l| profile.0[l.code()] / counts[l.code()] as f64)
        .collect();
    Ok(SampleWeights { w, generation: 0 })
}

/// `count` independent draws with replacement, index `i` with probability `w_i`.
pub fn roulette_sample<R: Rng + ?Sized>(
    weights: &SampleWeights,
    count: usize,
    rng: &mut R,
) -> Vec<usize> {
    let mut cumulative = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for &w in &weights.w {
        acc += w;
        cumulative.push(acc);
    }
    let total = acc;
    let last = weights.len() - 1;
    (0..count)
        .map(|_| {
            let u = rng.random::<f64>() * total;
            cumulative.partition_point(|&c| c <= u).min(last)
        })
        .collect()
}

/// `(e_m, a_m)` where `a_m = ½·ln((1 − e_m)/e_m)` after clamping `e_m`.
pub fn tree_accuracy_from_error(error_rate: f64) -> (f64, f64) {
    let e = error_rate.clamp(ERROR_CLAMP, 1.0 - ERROR_CLAMP);
    (error_rate, 0.5 * ((1.0 - e) / e).ln())
}

/// The class/correctness multiplier. `m_weight` and `n_weight` are the total
/// weights of the majority and minority classes.
///
/// | | correct | misclassified |
/// |---|---|---|
/// | majority | 2^(m−n) | 2^(n−m) |
/// | minority | 2^(n−m) | 2^(m−n) |
pub fn beta_factor(is_majority: bool, correct: bool, m_weight: f64, n_weight: f64) -> f64 {
    let e = (m_weight - n_weight).clamp(-BETA_EXPONENT_CLAMP, BETA_EXPONENT_CLAMP);
    // majority-correct and minority-misclassified share the 2^(m-n) cell
    if is_majority == correct {
        e.exp2()
    } else {
        (-e).exp2()
    }
}

/// A class is in the majority partition when its current total weight exceeds
/// the per-class mean of 1/5.
pub fn majority_partition(weights: &SampleWeights, labels: &[FlowClass]) -> [bool; N_CLASSES] {
    let totals = weights.class_totals(labels);
    totals.map(|t| t > 1.0 / N_CLASSES as f64)
}

/// Multiplies every weight by `β_i·e^{±a_m}` (`+` when misclassified) and
/// renormalizes to unit sum. `invert_majority` swaps the two majority cells
/// of the β table.
pub fn update_weights(
    weights: &SampleWeights,
    predictions: &[FlowClass],
    truth: &[FlowClass],
    a_m: f64,
    majority: &[bool; N_CLASSES],
    invert_majority: bool,
) -> Result<SampleWeights, WrfError> {
    if predictions.len() != weights.len() || truth.len() != weights.len() {
        return Err(WrfError::WidthMismatch {
            expected: weights.len(),
            got: predictions.len().min(truth.len()),
        });
    }
    let totals = weights.class_totals(truth);
    let (mut m_weight, mut n_weight) = (0.0, 0.0);
    for j in 0..N_CLASSES {
        if majority[j] {
            m_weight += totals[j];
        } else {
            n_weight += totals[j];
        }
    }
    let boost = a_m.exp();
    let shrink = (-a_m).exp();
    let mut next: Vec<f64> = weights
        .w
        .iter()
        .zip(predictions.iter().zip(truth))
        .map(|(&w, (p, t))| {
            let correct = p == t;
            let is_major = majority[t.code()];
            let mut beta = beta_factor(is_major, correct, m_weight, n_weight);
            if invert_majority && is_major {
                beta = 1.0 / beta;
            }
            w * beta * if correct { shrink } else { boost }
        })
        .collect();
    let z: f64 = next.iter().sum();
    if !(z.is_finite() && z > 0.0) {
        return Err(WrfError::InvariantBreach(format!(
            "weight normalizer Z = {z}"
        )));
    }
    for w in next.iter_mut() {
        // floor keeps every sample selectable after extreme shrinkage
        *w = (*w / z).max(f64::MIN_POSITIVE);
    }
    Ok(SampleWeights {
        w: next,
        generation: weights.generation + 1,
    })
}
