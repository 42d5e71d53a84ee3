//! Binary bat algorithm for feature selection.
//!
//! Bats live on `{0,1}^d`. Each iteration the swarm is split into `K`
//! equal-size subgroups by balanced K-means; ordinary bats are pulled toward
//! their subgroup's best position `M_n` while each subgroup's best is pulled
//! toward the global best `G`. Velocities may then be replaced by a bitwise
//! differential mutation whose probability grows over the run.
//!
//! ```
//! use flowgate_core::bat::{run, BatConfig, FnFitness};
//!
//! // reward masks that agree with 1010_0000
//! let target: flowgate_core::FeatureMask = "10100000".parse().unwrap();
//! let f = FnFitness::new(8, |m: &flowgate_core::FeatureMask| -(m.distance(&target) as f64));
//! let cfg = BatConfig { swarm_size: 12, max_iterations: 30, seed: 1, ..BatConfig::default() };
//! let out = run(&f, &cfg).unwrap();
//! assert_eq!(out.best, target);
//! ```

mod factors;
mod fitness;
mod ops;
mod swarm;

pub use factors::{
    inertia_weight, mutation_probability, self_learning_factor, shrinkage_factor, Factors,
};
pub use fitness::{
    wrapper_fitness, FitnessError, FitnessFunction, FnFitness, WrapperFitness, PROBE_DEPTH,
};
pub use ops::{
    acceptance_step, differential_mutation, flip_bits, gated_term, local_search,
    local_search_flip_probability, repair, update_position, update_velocity,
};
pub use swarm::{run, run_observed, RunOutcome, SwarmState};

use serde::{Deserialize, Serialize};

use crate::bits::{BitString, FeatureMask};
use crate::kmeans::ClusterError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatConfig {
    /// N
    pub swarm_size: usize,
    /// K
    pub subgroups: usize,
    /// N_t
    pub max_iterations: usize,
    pub w_max: f64,
    pub w_min: f64,
    pub c_max: f64,
    pub c_min: f64,
    /// F_max
    pub shrink_max: f64,
    /// F_min
    pub shrink_min: f64,
    pub freq_min: f64,
    pub freq_max: f64,
    /// alpha
    pub loudness_decay: f64,
    /// gamma
    pub pulse_growth: f64,
    /// lambda, the per-feature penalty used by [`WrapperFitness`].
    pub size_penalty: f64,
    /// A_0
    pub initial_loudness: f64,
    /// r_0, the asymptote of the pulse-rate schedule.
    pub initial_pulse_rate: f64,
    pub mutation: bool,
    pub self_learning: bool,
    pub seed: u64,
}

impl Default for BatConfig {
    fn default() -> Self {
        Self {
            swarm_size: 40,
            subgroups: 4,
            max_iterations: 100,
            w_max: 0.9,
            w_min: 0.4,
            c_max: 1.5,
            c_min: 0.5,
            shrink_max: 1.0,
            shrink_min: 0.2,
            freq_min: 0.0,
            freq_max: 1.0,
            loudness_decay: 0.9,
            pulse_growth: 0.9,
            size_penalty: 0.01,
            initial_loudness: 1.0,
            initial_pulse_rate: 0.5,
            mutation: true,
            self_learning: true,
            seed: 0,
        }
    }
}

impl BatConfig {
    /// The plain binary BA: one group, no mutation, no self-learning term.
    pub fn baseline(self) -> Self {
        Self {
            subgroups: 1,
            mutation: false,
            self_learning: false,
            ..self
        }
    }

    pub fn is_baseline(&self) -> bool {
        self.subgroups == 1 && !self.mutation && !self.self_learning
    }

    pub fn validate(&self) -> Result<(), BatError> {
        let bad = |msg: String| Err(BatError::InvalidConfig(msg));
        let reals = [
            ("w_max", self.w_max),
            ("w_min", self.w_min),
            ("c_max", self.c_max),
            ("c_min", self.c_min),
            ("shrink_max", self.shrink_max),
            ("shrink_min", self.shrink_min),
            ("freq_min", self.freq_min),
            ("freq_max", self.freq_max),
            ("loudness_decay", self.loudness_decay),
            ("pulse_growth", self.pulse_growth),
            ("size_penalty", self.size_penalty),
            ("initial_loudness", self.initial_loudness),
            ("initial_pulse_rate", self.initial_pulse_rate),
        ];
        if let Some((name, v)) = reals.iter().find(|(_, v)| !v.is_finite()) {
            return bad(format!("{name} must be finite, got {v}"));
        }
        if !(self.w_max >= self.w_min && self.w_min > 0.0) {
            return bad(format!(
                "need w_max >= w_min > 0, got {} and {}",
                self.w_max, self.w_min
            ));
        }
        if !(self.c_max >= self.c_min && self.c_min >= 0.0) {
            return bad(format!(
                "need c_max >= c_min >= 0, got {} and {}",
                self.c_max, self.c_min
            ));
        }
        if !(1.0 >= self.shrink_max && self.shrink_max >= self.shrink_min && self.shrink_min >= 0.0)
        {
            return bad(format!(
                "need 1 >= shrink_max >= shrink_min >= 0, got {} and {}",
                self.shrink_max, self.shrink_min
            ));
        }
        if self.freq_min > self.freq_max {
            return bad(format!(
                "freq_min {} exceeds freq_max {}",
                self.freq_min, self.freq_max
            ));
        }
        if self.max_iterations < 2 {
            return bad(format!(
                "max_iterations must be at least 2, got {}",
                self.max_iterations
            ));
        }
        if self.subgroups < 1 {
            return bad("subgroups must be at least 1".into());
        }
        if self.swarm_size < self.subgroups {
            return bad(format!(
                "swarm_size {} is smaller than subgroups {}",
                self.swarm_size, self.subgroups
            ));
        }
        if !(self.loudness_decay > 0.0 && self.loudness_decay < 1.0) {
            return bad(format!(
                "loudness_decay must be in (0, 1), got {}",
                self.loudness_decay
            ));
        }
        if self.pulse_growth <= 0.0 {
            return bad(format!(
                "pulse_growth must be positive, got {}",
                self.pulse_growth
            ));
        }
        if self.initial_loudness <= 0.0 {
            return bad(format!(
                "initial_loudness must be positive, got {}",
                self.initial_loudness
            ));
        }
        if !(0.0..=1.0).contains(&self.initial_pulse_rate) {
            return bad(format!(
                "initial_pulse_rate must be in [0, 1], got {}",
                self.initial_pulse_rate
            ));
        }
        if self.size_penalty < 0.0 {
            return bad(format!(
                "size_penalty must be non-negative, got {}",
                self.size_penalty
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bat {
    pub position: FeatureMask,
    pub velocity: BitString,
    pub frequency: f64,
    pub loudness: f64,
    pub pulse_rate: f64,
    pub fitness: f64,
    pub best_position: FeatureMask,
    pub best_fitness: f64,
}

impl Bat {
    /// A bat at rest at `position`. The pulse rate starts at the schedule's
    /// `t = 0` value, zero, and only grows on acceptance.
    pub fn new(position: FeatureMask, fitness: f64, cfg: &BatConfig) -> Self {
        Self {
            velocity: BitString::zeros(position.len()),
            frequency: cfg.freq_min,
            loudness: cfg.initial_loudness,
            pulse_rate: 0.0,
            fitness,
            best_position: position.clone(),
            best_fitness: fitness,
            position,
        }
    }

    /// Promotes the current position to personal best if strictly better.
    pub fn observe_best(&mut self) -> bool {
        if self.fitness > self.best_fitness {
            self.best_fitness = self.fitness;
            self.best_position = self.position.clone();
            true
        } else {
            false
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BatError {
    #[error("invalid bat config: {0}")]
    InvalidConfig(String),
    #[error("feature space needs at least 2 dimensions, got {0}")]
    DimensionTooSmall(usize),
    #[error("iteration {iteration}, bat {bat}: {source}")]
    Fitness {
        iteration: usize,
        bat: usize,
        #[source]
        source: FitnessError,
    },
    #[error(transparent)]
    Cluster(#[from] ClusterError),
}
