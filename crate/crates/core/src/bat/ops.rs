//! Per-bat update steps.
//!
//! A real coefficient applied to a bit string is a Bernoulli gate: with one
//! uniform draw `u`, the term is the bit string itself if `u < coeff`
//! (coefficient clamped to `[0, 1]`) and all zeros otherwise. Sums and
//! differences of bit strings are XOR; the mutation's pairwise combination is OR.

use rand::seq::index;
use rand::Rng;

use super::{Bat, BatConfig};
use crate::bits::{BitString, FeatureMask};

pub fn gated_term<R: Rng + ?Sized>(coeff: f64, bits: &BitString, rng: &mut R) -> BitString {
    let u: f64 = rng.random();
    if u < coeff.clamp(0.0, 1.0) {
        bits.clone()
    } else {
        BitString::zeros(bits.len())
    }
}

/// `[W]·v ⊕ [f_i]·(x ⊕ anchor) ⊕ [C]·(x ⊕ P_i)`.
///
/// `anchor` is the subgroup's best position for ordinary bats and the global
/// best for the subgroup's own best bat.
pub fn update_velocity<R: Rng + ?Sized>(
    bat: &Bat,
    anchor: &FeatureMask,
    inertia: f64,
    self_learning: f64,
    rng: &mut R,
) -> BitString {
    let momentum = gated_term(inertia, &bat.velocity, rng);
    let social = gated_term(bat.frequency, &bat.position.xor(anchor), rng);
    let personal = gated_term(self_learning, &bat.position.xor(&bat.best_position), rng);
    momentum.xor(&social).xor(&personal)
}

/// Sets one uniformly chosen bit of an all-zero mask.
pub fn repair<R: Rng + ?Sized>(mask: &mut FeatureMask, rng: &mut R) {
    if mask.is_zero() && !mask.is_empty() {
        let i = rng.random_range(0..mask.len());
        mask.set(i, true);
    }
}

/// `x ⊕ v`, repaired so at least one feature stays selected.
pub fn update_position<R: Rng + ?Sized>(
    position: &FeatureMask,
    velocity: &BitString,
    rng: &mut R,
) -> FeatureMask {
    let mut next = position.xor(velocity);
    repair(&mut next, rng);
    next
}

/// Binary differential mutation of bat `target`'s velocity:
/// `x_r5 ⊕ [F]·(x_r1 ∨ x_r2) ⊕ [F]·(x_r3 ∨ x_r4)`, where `r1, r2, r5` are
/// distinct members of the target's own subgroup and `r3, r4` distinct bats
/// from other subgroups. Returns `None` when either pool is too small.
pub fn differential_mutation<R: Rng + ?Sized>(
    target: usize,
    same_subgroup: &[usize],
    other_subgroups: &[usize],
    positions: &[FeatureMask],
    shrinkage: f64,
    rng: &mut R,
) -> Option<BitString> {
    let mates: Vec<usize> = same_subgroup
        .iter()
        .copied()
        .filter(|&i| i != target)
        .collect();
    let strangers: Vec<usize> = other_subgroups
        .iter()
        .copied()
        .filter(|&i| i != target)
        .collect();
    if mates.len() < 3 || strangers.len() < 2 {
        return None;
    }
    let near = index::sample(rng, mates.len(), 3);
    let far = index::sample(rng, strangers.len(), 2);
    let (r1, r2, r5) = (
        mates[near.index(0)],
        mates[near.index(1)],
        mates[near.index(2)],
    );
    let (r3, r4) = (strangers[far.index(0)], strangers[far.index(1)]);
    let inner = gated_term(shrinkage, &positions[r1].or(&positions[r2]), rng);
    let outer = gated_term(shrinkage, &positions[r3].or(&positions[r4]), rng);
    Some(positions[r5].xor(&inner).xor(&outer))
}

/// Per-bit flip probability of the local search: `min(0.5, 2·Ā/d)`.
pub fn local_search_flip_probability(mean_loudness: f64, width: usize) -> f64 {
    (mean_loudness.max(0.0) * 2.0 / width as f64).min(0.5)
}

/// Flips each bit independently with probability `p`, then repairs.
pub fn flip_bits<R: Rng + ?Sized>(mask: &FeatureMask, p: f64, rng: &mut R) -> FeatureMask {
    let mut out = mask.clone();
    for i in 0..out.len() {
        if rng.random::<f64>() < p {
            out.flip(i);
        }
    }
    repair(&mut out, rng);
    out
}

/// A random walk around the global best scaled by the swarm's mean loudness.
pub fn local_search<R: Rng + ?Sized>(
    global_best: &FeatureMask,
    mean_loudness: f64,
    rng: &mut R,
) -> FeatureMask {
    let p = local_search_flip_probability(mean_loudness, global_best.len());
    flip_bits(global_best, p, rng)
}

/// Adopts `candidate` when `draw < A_i` and the candidate is strictly better
/// than the bat's current position. On acceptance loudness decays by `alpha`
/// and the pulse rate moves to `r_0·(1 − e^{−γt})`. Returns whether the
/// candidate was taken.
pub fn acceptance_step(
    bat: &mut Bat,
    candidate: &FeatureMask,
    candidate_fitness: f64,
    draw: f64,
    t: usize,
    cfg: &BatConfig,
) -> bool {
    if !(draw < bat.loudness && candidate_fitness > bat.fitness) {
        return false;
    }
    bat.position = candidate.clone();
    bat.fitness = candidate_fitness;
    bat.loudness *= cfg.loudness_decay;
    bat.pulse_rate = cfg.initial_pulse_rate * (1.0 - (-cfg.pulse_growth * t as f64).exp());
    bat.observe_best();
    true
}
