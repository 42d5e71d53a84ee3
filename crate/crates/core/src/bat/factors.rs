//! Iteration-dependent control factors.

use std::f64::consts::PI;

use super::BatConfig;

/// Linearly decreasing inertia weight, `W_max` at `t = 0` down to `W_min` at `t = N_t`.
pub fn inertia_weight(t: usize, cfg: &BatConfig) -> f64 {
    let frac = t as f64 / cfg.max_iterations as f64;
    cfg.w_max - (cfg.w_max - cfg.w_min) * frac
}

/// Self-learning factor: `C_min + (C_max − C_min)·(1 − arccos(1 − 2t/N_t)/π)`.
/// Starts at `C_max`, passes the midpoint at `t = N_t/2`, ends at `C_min`.
pub fn self_learning_factor(t: usize, cfg: &BatConfig) -> f64 {
    let arg = (-2.0 * t as f64 / cfg.max_iterations as f64 + 1.0).clamp(-1.0, 1.0);
    cfg.c_min + (cfg.c_max - cfg.c_min) * (1.0 - arg.acos() / PI)
}

/// Mutation probability `√(t/(N_t − 1))`, clamped to 1 for `t = N_t`.
pub fn mutation_probability(t: usize, cfg: &BatConfig) -> f64 {
    (t as f64 / (cfg.max_iterations - 1) as f64).sqrt().min(1.0)
}

/// Shrinkage factor, `F_max` at `t = 0` down to `F_min` at `t = N_t`.
pub fn shrinkage_factor(t: usize, cfg: &BatConfig) -> f64 {
    let n = cfg.max_iterations as f64;
    cfg.shrink_min + (cfg.shrink_max - cfg.shrink_min) * (n - t as f64) / n
}

/// The four factors for one iteration, with the baseline switches applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Factors {
    pub inertia: f64,
    pub self_learning: f64,
    pub mutation: f64,
    pub shrinkage: f64,
}

impl Factors {
    pub fn at(t: usize, cfg: &BatConfig) -> Self {
        Self {
            inertia: inertia_weight(t, cfg),
            self_learning: if cfg.self_learning {
                self_learning_factor(t, cfg)
            } else {
                0.0
            },
            mutation: if cfg.mutation {
                mutation_probability(t, cfg)
            } else {
                0.0
            },
            shrinkage: shrinkage_factor(t, cfg),
        }
    }
}
