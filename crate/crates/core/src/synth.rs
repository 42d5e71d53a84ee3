//! Seeded synthetic flow data for tests, benchmarks and smoke runs.

use rand::Rng;

use crate::dataset::{EncodedDataset, FlowClass, N_CLASSES};
use crate::rng::{stream, StreamRng};

/// Training-split class sizes of the down-sampled KDD-99 10% file.
pub const KDD_TRAIN_COUNTS: [usize; N_CLASSES] = [17129, 3107, 35700, 52, 1126];
/// Test-split class sizes of the down-sampled KDD-99 corrected file.
pub const KDD_TEST_COUNTS: [usize; N_CLASSES] = [12183, 1880, 21705, 228, 1468];

/// Gaussian class blobs hidden among noise features.
#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub n_features: usize,
    /// Column indices that carry class signal.
    pub informative: Vec<usize>,
    /// Class means on the informative columns, `[class][k]`.
    pub means: Vec<Vec<f64>>,
    pub noise_sd: f64,
}

impl Task {
    /// A task whose `n_informative` signal columns are scattered over `n_features`.
    pub fn new(n_features: usize, n_informative: usize, noise_sd: f64, seed: u64) -> Self {
        assert!(n_informative <= n_features);
        let mut rng = stream(seed, &[0x7461_736b]);
        let mut informative: Vec<usize> =
            rand::seq::index::sample(&mut rng, n_features, n_informative).into_vec();
        informative.sort_unstable();
        let means = (0..N_CLASSES)
            .map(|_| {
                (0..n_informative)
                    .map(|_| rng.random_range(-1.0..1.0))
                    .collect()
            })
            .collect();
        Self {
            n_features,
            informative,
            means,
            noise_sd,
        }
    }

    /// Draws `counts[j]` rows of class `j`, rows grouped by class.
    pub fn sample(&self, counts: [usize; N_CLASSES], seed: u64) -> EncodedDataset {
        let mut rng = stream(seed, &[0x726f_7773]);
        let total: usize = counts.iter().sum();
        let mut values = Vec::with_capacity(total * self.n_features);
        let mut labels = Vec::with_capacity(total);
        for (j, &n) in counts.iter().enumerate() {
            for _ in 0..n {
                let start = values.len();
                values.extend((0..self.n_features).map(|_| gaussian(&mut rng)));
                for (k, &col) in self.informative.iter().enumerate() {
                    values[start + col] = self.means[j][k] + self.noise_sd * gaussian(&mut rng);
                }
                labels.push(FlowClass::ALL[j]);
            }
        }
        let names = (0..self.n_features).map(|i| format!("f{i}")).collect();
        EncodedDataset::new(names, values, labels).expect("synthetic values are finite")
    }
}

fn gaussian(rng: &mut StreamRng) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}
