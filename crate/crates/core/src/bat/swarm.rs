use std::collections::{HashMap, HashSet};

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::factors::Factors;
use super::ops::{
    acceptance_step, differential_mutation, local_search, repair, update_position, update_velocity,
};
use super::{Bat, BatConfig, BatError, FitnessError, FitnessFunction};
use crate::bits::{BitString, FeatureMask};
use crate::kmeans::{cluster, ClusterAssignment};
use crate::rng::stream;

const INIT_STREAM: u64 = 0x696e_6974;
const CLUSTER_STREAM: u64 = 0x636c_7573;
const STEP_STREAM: u64 = 0x7374_6570;

/// Swarm after an iteration.
#[derive(Debug, Clone)]
pub struct SwarmState {
    pub iteration: usize,
    pub bats: Vec<Bat>,
    /// `None` before the first iteration.
    pub assignment: Option<ClusterAssignment>,
    /// Index of each subgroup's best bat at the start of the iteration.
    pub local_bests: Vec<usize>,
    pub global_best: FeatureMask,
    pub global_best_fitness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunOutcome {
    pub best: FeatureMask,
    pub best_fitness: f64,
    /// Best-so-far fitness; entry 0 is the initial swarm, entry `t` is after iteration `t`.
    pub trace: Vec<f64>,
    /// Distinct masks evaluated.
    pub evaluations: usize,
}

impl RunOutcome {
    /// First iteration whose best-so-far fitness reaches `target`.
    pub fn iterations_to_reach(&self, target: f64) -> Option<usize> {
        self.trace.iter().position(|&f| f >= target)
    }
}

struct Proposal {
    frequency: f64,
    velocity: BitString,
    position: FeatureMask,
    search: Option<FeatureMask>,
    accept_draw: f64,
    mutated: Option<BitString>,
}

struct Cache<'f, F: ?Sized> {
    fitness: &'f F,
    known: HashMap<FeatureMask, f64>,
}

impl<F: FitnessFunction + ?Sized> Cache<'_, F> {
    /// Evaluates every mask not seen before, in parallel. `masks` pairs each
    /// mask with the bat that produced it, for error context.
    fn fill(&mut self, iteration: usize, masks: &[(usize, &FeatureMask)]) -> Result<(), BatError> {
        let mut seen = HashSet::new();
        let pending: Vec<(usize, &FeatureMask)> = masks
            .iter()
            .filter(|(_, m)| !self.known.contains_key(*m) && seen.insert(*m))
            .copied()
            .collect();
        let fitness = self.fitness;
        let scores: Vec<Result<f64, FitnessError>> = pending
            .par_iter()
            .map(|(_, m)| {
                let f = fitness.evaluate(m)?;
                if f.is_finite() {
                    Ok(f)
                } else {
                    Err(FitnessError(format!("non-finite fitness {f} for mask {m}")))
                }
            })
            .collect();
        for ((bat, mask), score) in pending.into_iter().zip(scores) {
            let score = score.map_err(|source| BatError::Fitness {
                iteration,
                bat,
                source,
            })?;
            self.known.insert(mask.clone(), score);
        }
        Ok(())
    }

    fn get(&self, mask: &FeatureMask) -> f64 {
        self.known[mask]
    }
}

/// Runs the search for `cfg.max_iterations` iterations.
pub fn run<F: FitnessFunction + ?Sized>(
    fitness: &F,
    cfg: &BatConfig,
) -> Result<RunOutcome, BatError> {
    run_observed(fitness, cfg, |_| {})
}

/// [`run`], calling `observe` with the initial swarm and after every iteration.
pub fn run_observed<F, O>(
    fitness: &F,
    cfg: &BatConfig,
    mut observe: O,
) -> Result<RunOutcome, BatError>
where
    F: FitnessFunction + ?Sized,
    O: FnMut(&SwarmState),
{
    cfg.validate()?;
    let d = fitness.dimension();
    if d < 2 {
        return Err(BatError::DimensionTooSmall(d));
    }
    let n = cfg.swarm_size;
    let mut cache = Cache {
        fitness,
        known: HashMap::new(),
    };

    let starts: Vec<FeatureMask> = (0..n)
        .map(|i| {
            let mut rng = stream(cfg.seed, &[INIT_STREAM, i as u64]);
            let mut x = BitString::random(d, 0.5, &mut rng);
            repair(&mut x, &mut rng);
            x
        })
        .collect();
    let labelled: Vec<(usize, &FeatureMask)> = starts.iter().enumerate().collect();
    cache.fill(0, &labelled)?;
    let bats: Vec<Bat> = starts
        .iter()
        .map(|x| Bat::new(x.clone(), cache.get(x), cfg))
        .collect();
    let g = best_index(bats.iter().map(|b| b.best_fitness));
    let mut state = SwarmState {
        iteration: 0,
        global_best: bats[g].best_position.clone(),
        global_best_fitness: bats[g].best_fitness,
        bats,
        assignment: None,
        local_bests: Vec::new(),
    };
    let mut trace = Vec::with_capacity(cfg.max_iterations + 1);
    trace.push(state.global_best_fitness);
    observe(&state);

    for t in 1..=cfg.max_iterations {
        let factors = Factors::at(t, cfg);
        let positions: Vec<FeatureMask> = state.bats.iter().map(|b| b.position.clone()).collect();
        let cluster_seed = stream(cfg.seed, &[CLUSTER_STREAM, t as u64]).random::<u64>();
        let assignment = cluster(&positions, cfg.subgroups, cluster_seed)?;
        let groups = assignment.groups();
        let outsiders: Vec<Vec<usize>> = (0..groups.len())
            .map(|g| (0..n).filter(|&i| assignment.assignments[i] != g).collect())
            .collect();
        let local_bests: Vec<usize> = groups
            .iter()
            .map(|members| members[best_index(members.iter().map(|&i| state.bats[i].fitness))])
            .collect();
        let mean_loudness = state.bats.iter().map(|b| b.loudness).sum::<f64>() / n as f64;
        let global = state.global_best.clone();

        let proposals: Vec<Proposal> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream(cfg.seed, &[STEP_STREAM, t as u64, i as u64]);
                let group = assignment.assignments[i];
                let leader = local_bests[group];
                let anchor = if leader == i {
                    &global
                } else {
                    &positions[leader]
                };
                let mut bat = state.bats[i].clone();
                bat.frequency = cfg.freq_min + (cfg.freq_max - cfg.freq_min) * rng.random::<f64>();
                let velocity = update_velocity(
                    &bat,
                    anchor,
                    factors.inertia,
                    factors.self_learning,
                    &mut rng,
                );
                let position = update_position(&bat.position, &velocity, &mut rng);
                let search = (rng.random::<f64>() > bat.pulse_rate)
                    .then(|| local_search(&global, mean_loudness, &mut rng));
                let accept_draw = rng.random::<f64>();
                let mutated = if rng.random::<f64>() < factors.mutation {
                    differential_mutation(
                        i,
                        &groups[group],
                        &outsiders[group],
                        &positions,
                        factors.shrinkage,
                        &mut rng,
                    )
                } else {
                    None
                };
                Proposal {
                    frequency: bat.frequency,
                    velocity,
                    position,
                    search,
                    accept_draw,
                    mutated,
                }
            })
            .collect();

        let mut wanted: Vec<(usize, &FeatureMask)> = Vec::with_capacity(2 * n);
        for (i, p) in proposals.iter().enumerate() {
            wanted.push((i, &p.position));
            if let Some(s) = &p.search {
                wanted.push((i, s));
            }
        }
        cache.fill(t, &wanted)?;

        for (bat, p) in state.bats.iter_mut().zip(proposals) {
            bat.frequency = p.frequency;
            bat.fitness = cache.get(&p.position);
            bat.position = p.position;
            bat.velocity = p.mutated.unwrap_or(p.velocity);
            bat.observe_best();
            if let Some(candidate) = &p.search {
                let score = cache.get(candidate);
                acceptance_step(bat, candidate, score, p.accept_draw, t, cfg);
                // a rejected candidate can still be the best mask seen so far
                if score > state.global_best_fitness {
                    state.global_best_fitness = score;
                    state.global_best = candidate.clone();
                }
            }
            if bat.best_fitness > state.global_best_fitness {
                state.global_best_fitness = bat.best_fitness;
                state.global_best = bat.best_position.clone();
            }
        }
        state.iteration = t;
        state.assignment = Some(assignment);
        state.local_bests = local_bests;
        trace.push(state.global_best_fitness);
        observe(&state);
    }

    Ok(RunOutcome {
        best: state.global_best,
        best_fitness: state.global_best_fitness,
        trace,
        evaluations: cache.known.len(),
    })
}

/// Position of the largest value; ties go to the earliest.
fn best_index(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bat::FnFitness;
    use proptest::prelude::*;

    fn small(seed: u64) -> BatConfig {
        BatConfig {
            swarm_size: 20,
            subgroups: 4,
            max_iterations: 60,
            seed,
            ..BatConfig::default()
        }
    }

    /// Fitness with a unique optimum at `target`, plus mild structure elsewhere.
    fn landscape(target: FeatureMask) -> impl Fn(&FeatureMask) -> f64 + Sync {
        move |m: &FeatureMask| {
            let agree = m.len() - m.distance(&target);
            agree as f64 / m.len() as f64 + if *m == target { 0.5 } else { 0.0 }
        }
    }

    #[test]
    fn constant_fitness_keeps_initial_best() {
        let f = FnFitness::new(6, |_: &FeatureMask| 1.0);
        let mut first = None;
        let out = run_observed(&f, &small(3), |s| {
            first.get_or_insert_with(|| s.bats[0].position.clone());
        })
        .unwrap();
        assert_eq!(Some(out.best), first);
        assert!(out.trace.iter().all(|&x| x == 1.0));
        assert_eq!(out.trace.len(), 61);
    }

    #[test]
    fn finds_exhaustive_optimum_of_small_landscape() {
        let target: FeatureMask = "01101001".parse().unwrap();
        let f = FnFitness::new(8, landscape(target.clone()));
        let hits = (0..20)
            .filter(|&s| run(&f, &small(s)).unwrap().best == target)
            .count();
        assert!(hits >= 16, "{hits}/20");
    }

    #[test]
    fn same_seed_same_result() {
        let f = FnFitness::new(12, |m: &FeatureMask| {
            (m.count_ones() % 5) as f64 + m.get(3) as u8 as f64
        });
        assert_eq!(run(&f, &small(8)).unwrap(), run(&f, &small(8)).unwrap());
    }

    #[test]
    fn baseline_runs() {
        let target: FeatureMask = "0110100111".parse().unwrap();
        let f = FnFitness::new(10, landscape(target));
        let out = run(&f, &small(1).baseline()).unwrap();
        assert_eq!(out.trace.len(), 61);
    }

    #[test]
    fn fitness_errors_carry_context() {
        struct Failing;
        impl FitnessFunction for Failing {
            fn dimension(&self) -> usize {
                5
            }
            fn evaluate(&self, mask: &FeatureMask) -> Result<f64, FitnessError> {
                if mask.count_ones() == 5 {
                    Err(FitnessError("boom".into()))
                } else {
                    Ok(mask.count_ones() as f64)
                }
            }
        }
        match run(&Failing, &small(0)) {
            Err(BatError::Fitness {
                iteration, source, ..
            }) => {
                assert!(iteration <= 60);
                assert_eq!(source.0, "boom");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_tiny_dimension_and_bad_config() {
        let f = FnFitness::new(1, |_: &FeatureMask| 0.0);
        assert!(matches!(
            run(&f, &small(0)),
            Err(BatError::DimensionTooSmall(1))
        ));
        let g = FnFitness::new(4, |_: &FeatureMask| 0.0);
        let cfg = BatConfig {
            swarm_size: 2,
            ..small(0)
        };
        assert!(matches!(run(&g, &cfg), Err(BatError::InvalidConfig(_))));
    }

    #[test]
    fn nan_fitness_is_an_error() {
        let f = FnFitness::new(4, |_: &FeatureMask| f64::NAN);
        assert!(matches!(
            run(&f, &small(0)),
            Err(BatError::Fitness { iteration: 0, .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn swarm_invariants_hold(seed in any::<u64>(), d in 2usize..20, n in 4usize..24, k in 1usize..4,
                                 weights in prop::collection::vec(-1.0f64..1.0, 20)) {
            let w = weights.clone();
            let f = FnFitness::new(d, move |m: &FeatureMask| {
                m.ones_indices().iter().map(|&i| w[i]).sum::<f64>() - 0.3 * (m.count_ones() as f64 - 3.0).abs()
            });
            let cfg = BatConfig { swarm_size: n, subgroups: k.min(n), max_iterations: 15, seed, ..BatConfig::default() };
            let mut ok = true;
            let mut last = f64::NEG_INFINITY;
            let mut pulse: Vec<f64> = vec![0.0; n];
            let out = run_observed(&f, &cfg, |s| {
                ok &= s.global_best_fitness >= last;
                last = s.global_best_fitness;
                for (i, b) in s.bats.iter().enumerate() {
                    ok &= s.global_best_fitness >= b.best_fitness && b.best_fitness >= b.fitness;
                    ok &= b.position.len() == d && b.velocity.len() == d && !b.position.is_zero();
                    ok &= b.pulse_rate >= pulse[i] && b.loudness > 0.0;
                    pulse[i] = b.pulse_rate;
                }
                if let Some(a) = &s.assignment {
                    let sizes = a.sizes();
                    ok &= sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1;
                }
            }).unwrap();
            prop_assert!(ok);
            prop_assert!(out.trace.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
