use crate::bits::FeatureMask;
use crate::dataset::EncodedDataset;
use crate::rng::stream;
use crate::wrf::{train_tree, TreeConfig};

/// Depth cap of the probe tree used by [`WrapperFitness`].
pub const PROBE_DEPTH: usize = 10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{0}")]
pub struct FitnessError(pub String);

/// Scores a feature mask; higher is better. Must be a pure function of the
/// mask, since the search memoizes results.
pub trait FitnessFunction: Sync {
    fn dimension(&self) -> usize;
    fn evaluate(&self, mask: &FeatureMask) -> Result<f64, FitnessError>;
}

/// Adapts an infallible closure.
pub struct FnFitness<F> {
    dimension: usize,
    f: F,
}

impl<F: Fn(&FeatureMask) -> f64 + Sync> FnFitness<F> {
    pub fn new(dimension: usize, f: F) -> Self {
        Self { dimension, f }
    }
}

impl<F: Fn(&FeatureMask) -> f64 + Sync> FitnessFunction for FnFitness<F> {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn evaluate(&self, mask: &FeatureMask) -> Result<f64, FitnessError> {
        Ok((self.f)(mask))
    }
}

/// Validation accuracy of a single depth-capped CART trained on the masked
/// features, minus `size_penalty · popcount / d`.
#[derive(Debug, Clone)]
pub struct WrapperFitness {
    train: EncodedDataset,
    valid: EncodedDataset,
    train_rows: Vec<usize>,
    size_penalty: f64,
    eval_seed: u64,
    probe: TreeConfig,
}

impl WrapperFitness {
    pub fn new(
        train: EncodedDataset,
        valid: EncodedDataset,
        size_penalty: f64,
        eval_seed: u64,
    ) -> Result<Self, FitnessError> {
        if train.is_empty() || valid.is_empty() {
            return Err(FitnessError(
                "train and validation sets must be non-empty".into(),
            ));
        }
        if train.n_features() != valid.n_features() {
            return Err(FitnessError(format!(
                "train has {} features, validation has {}",
                train.n_features(),
                valid.n_features()
            )));
        }
        Ok(Self {
            train_rows: (0..train.n_rows()).collect(),
            train,
            valid,
            size_penalty,
            eval_seed,
            probe: TreeConfig::probe(PROBE_DEPTH),
        })
    }

    pub fn with_probe(mut self, probe: TreeConfig) -> Self {
        self.probe = probe;
        self
    }

    pub fn accuracy(&self, mask: &FeatureMask) -> Result<f64, FitnessError> {
        if mask.len() != self.train.n_features() {
            return Err(FitnessError(format!(
                "mask width {} does not match {} features",
                mask.len(),
                self.train.n_features()
            )));
        }
        if mask.is_zero() {
            return Err(FitnessError("mask selects no features".into()));
        }
        let tree = train_tree(
            &self.train,
            &self.train_rows,
            mask,
            &self.probe,
            &mut stream(self.eval_seed, &[]),
        );
        let correct = (0..self.valid.n_rows())
            .filter(|&i| tree.predict(self.valid.row(i)) == self.valid.label(i))
            .count();
        Ok(correct as f64 / self.valid.n_rows() as f64)
    }
}

impl FitnessFunction for WrapperFitness {
    fn dimension(&self) -> usize {
        self.train.n_features()
    }

    fn evaluate(&self, mask: &FeatureMask) -> Result<f64, FitnessError> {
        let acc = self.accuracy(mask)?;
        Ok(acc - self.size_penalty * mask.count_ones() as f64 / mask.len() as f64)
    }
}

/// One-shot form of [`WrapperFitness`].
pub fn wrapper_fitness(
    mask: &FeatureMask,
    train: &EncodedDataset,
    valid: &EncodedDataset,
    size_penalty: f64,
    eval_seed: u64,
) -> Result<f64, FitnessError> {
    WrapperFitness::new(train.clone(), valid.clone(), size_penalty, eval_seed)?.evaluate(mask)
}
