//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Exits 0 after printing every line. Set `FLOWGATE_ACCEPTANCE_STRICT=1` to
//! exit 1 when any criterion fails. The KDD criteria (8-10) need
//! `FLOWGATE_KDD_TRAIN` and `FLOWGATE_KDD_TEST` pointing at the raw files.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::Rng;

use flowgate_cli::artifacts::ReportDocument;
use flowgate_cli::config::PipelineConfig;
use flowgate_core::bat::{run, BatConfig, FitnessFunction, FnFitness, RunOutcome, WrapperFitness};
use flowgate_core::dataset::proportional_targets;
use flowgate_core::kmeans::cluster;
use flowgate_core::metrics::{confusion, report, CostMatrix};
use flowgate_core::rng::stream;
use flowgate_core::synth::{Task, KDD_TEST_COUNTS, KDD_TRAIN_COUNTS};
use flowgate_core::wrf::{
    fit, fit_observed, weighted_vote, AccuracyMatrix, ClassWeights, TreeConfig, WrfConfig,
};
use flowgate_core::{BitString, EncodedDataset, FeatureMask, FlowClass, N_CLASSES};

type Check = (u32, &'static str, fn() -> Verdict);

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn main() {
    let criteria: Vec<Check> = vec![
        (
            1,
            "sample weights stay normalized and positive",
            weight_invariants,
        ),
        (
            2,
            "BA matches the exhaustive optimum on d=8",
            exhaustive_oracle,
        ),
        (3, "best-so-far traces never decrease", monotone_trace),
        (
            4,
            "improved BA reaches the baseline's final fitness in <= 60% of iterations",
            convergence,
        ),
        (
            5,
            "final fitness non-decreasing in swarm size and iterations",
            scaling,
        ),
        (
            6,
            "all-ones weighted vote equals majority vote",
            vote_degeneration,
        ),
        (
            7,
            "minority recall x1.5 over classical RF at <= 1pp accuracy cost",
            minority_recall,
        ),
        (
            8,
            "KDD pipeline accuracy >= 93%, FA <= 5%, 20..=41 features",
            kdd_reproduction,
        ),
        (9, "KDD cost: improved <= classical baseline", kdd_cost),
        (10, "KDD reruns are byte-identical", kdd_determinism),
        (
            11,
            "k-means subgroups balanced and reproducible",
            balanced_clustering,
        ),
    ];
    let mut failed = 0;
    for (n, name, check) in criteria {
        let start = Instant::now();
        let v = check();
        let secs = start.elapsed().as_secs_f64();
        let tag = if v.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!v.pass);
        println!("criterion {n:>2} {tag}: {name} | {} [{secs:.1}s]", v.detail);
    }
    println!("{failed} criteria failed");
    if failed > 0 && std::env::var("FLOWGATE_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}

// ---------------------------------------------------------------- shared

/// The fixed d=41 selection task used by criteria 4 and 5.
fn selection_task() -> WrapperFitness {
    let task = Task::new(41, 10, 0.5, 42);
    WrapperFitness::new(
        task.sample([48; N_CLASSES], 1),
        task.sample([32; N_CLASSES], 2),
        0.01,
        0,
    )
    .expect("synthetic task is valid")
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

fn random_dataset(rng: &mut impl Rng, counts: [usize; N_CLASSES], d: usize) -> EncodedDataset {
    let task = Task::new(d, d.min(3), rng.random_range(0.2..1.5), rng.random());
    task.sample(counts, rng.random())
}

fn random_mask(rng: &mut impl Rng, d: usize) -> FeatureMask {
    loop {
        let m = BitString::random(d, 0.6, rng);
        if !m.is_zero() {
            return m;
        }
    }
}

// ---------------------------------------------------------------- 1

fn weight_invariants() -> Verdict {
    let start = Instant::now();
    let mut updates = 0usize;
    let mut worst = 0.0f64;
    let mut bad = Vec::new();
    for run_id in 0..1000u64 {
        let mut rng = stream(1, &[run_id]);
        let counts: [usize; N_CLASSES] = std::array::from_fn(|_| rng.random_range(1..=100));
        let d = rng.random_range(2..=8);
        let ds = random_dataset(&mut rng, counts, d);
        let class_weights = match rng.random_range(0..3) {
            0 => ClassWeights::Default,
            1 => ClassWeights::Uniform,
            _ => {
                let raw: [f64; N_CLASSES] = std::array::from_fn(|_| rng.random_range(0.01..1.0));
                let s: f64 = raw.iter().sum();
                ClassWeights::Custom(raw.map(|w| w / s))
            }
        };
        let cfg = WrfConfig {
            n_trees: rng.random_range(1..=6),
            tree: TreeConfig {
                max_depth: Some(rng.random_range(1..=6)),
                ..TreeConfig::default()
            },
            class_weights,
            invert_majority_beta: rng.random_bool(0.5),
            ..WrfConfig::default()
        };
        let mask = random_mask(&mut rng, d);
        let result = fit_observed(&ds, &mask, &cfg, run_id, |w| {
            updates += 1;
            worst = worst.max((w.sum() - 1.0).abs());
            if (w.sum() - 1.0).abs() > 1e-9 || w.w.iter().any(|&x| x <= 0.0 || x.is_nan()) {
                bad.push(run_id);
            }
        });
        if let Err(e) = result {
            return Verdict::new(false, format!("run {run_id} failed: {e}"));
        }
    }
    let elapsed = start.elapsed();
    bad.dedup();
    Verdict::new(
        bad.is_empty() && elapsed < Duration::from_secs(60),
        format!(
            "{updates} weight vectors, max |sum-1| = {worst:.2e}, {} bad runs, {:.1}s",
            bad.len(),
            elapsed.as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------- 2

fn exhaustive_oracle() -> Verdict {
    let start = Instant::now();
    let mut hits = 0;
    let mut gaps = Vec::new();
    for s in 0..20u64 {
        let task = Task::new(8, 3, 0.8, 100 + s);
        let f = WrapperFitness::new(
            task.sample([30; N_CLASSES], s),
            task.sample([20; N_CLASSES], s + 50),
            0.01,
            s,
        )
        .expect("valid task");
        let mut optimum = f64::NEG_INFINITY;
        for bits in 1u32..256 {
            let mask =
                BitString::from_bools(&(0..8).map(|i| bits >> i & 1 == 1).collect::<Vec<_>>());
            optimum = optimum.max(f.evaluate(&mask).expect("finite"));
        }
        let cfg = BatConfig {
            swarm_size: 20,
            max_iterations: 60,
            seed: s,
            ..BatConfig::default()
        };
        let out = run(&f, &cfg).expect("run");
        let gap = (optimum - out.best_fitness) / optimum.abs();
        if gap <= 0.01 {
            hits += 1;
        }
        gaps.push(gap);
    }
    let elapsed = start.elapsed();
    let worst = gaps.iter().cloned().fold(0.0, f64::max);
    Verdict::new(
        hits >= 16 && elapsed < Duration::from_secs(120),
        format!("{hits}/20 within 1%, worst gap {:.2}%", worst * 100.0),
    )
}

// ---------------------------------------------------------------- 3

fn monotone_trace() -> Verdict {
    let mut broken = Vec::new();
    for r in 0..100u64 {
        let mut rng = stream(3, &[r]);
        let d = rng.random_range(3..=14);
        let table: Vec<f64> = (0..1usize << d)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let f = FnFitness::new(d, move |m: &FeatureMask| {
            let idx = m.ones_indices().iter().fold(0usize, |acc, &i| acc | 1 << i);
            table[idx]
        });
        let swarm_size = rng.random_range(2..=24);
        let cfg = BatConfig {
            swarm_size,
            subgroups: rng.random_range(1..=swarm_size.min(4)),
            max_iterations: rng.random_range(2..=40),
            mutation: rng.random_bool(0.5),
            self_learning: rng.random_bool(0.5),
            seed: rng.random(),
            ..BatConfig::default()
        };
        let out = run(&f, &cfg).expect("run");
        if out.trace.windows(2).any(|w| w[1] < w[0]) || out.trace.len() != cfg.max_iterations + 1 {
            broken.push(r);
        }
    }
    Verdict::new(
        broken.is_empty(),
        format!("100 runs, {} non-monotone", broken.len()),
    )
}

// ---------------------------------------------------------------- 4, 5

fn run_task(f: &WrapperFitness, cfg: BatConfig) -> RunOutcome {
    run(f, &cfg).expect("selection run")
}

fn convergence() -> Verdict {
    let f = selection_task();
    let mut reach = Vec::new();
    for s in 0..10u64 {
        let improved = run_task(
            &f,
            BatConfig {
                seed: s,
                ..BatConfig::default()
            },
        );
        let baseline = run_task(
            &f,
            BatConfig {
                seed: s,
                ..BatConfig::default()
            }
            .baseline(),
        );
        let target = *baseline.trace.last().expect("non-empty trace");
        reach.push(
            improved
                .iterations_to_reach(target)
                .map_or(f64::INFINITY, |t| t as f64),
        );
    }
    let m = median(reach.clone());
    let shown: Vec<String> = reach
        .iter()
        .map(|r| {
            if r.is_finite() {
                format!("{r}")
            } else {
                "never".into()
            }
        })
        .collect();
    Verdict::new(
        m <= 60.0,
        format!(
            "median {m} iterations (limit 60); per seed [{}]",
            shown.join(", ")
        ),
    )
}

fn scaling() -> Verdict {
    let f = selection_task();
    let finals = |n: usize, nt: usize| -> Vec<f64> {
        (0..10u64)
            .map(|s| {
                let cfg = BatConfig {
                    swarm_size: n,
                    max_iterations: nt,
                    seed: s,
                    ..BatConfig::default()
                };
                run_task(&f, cfg).best_fitness
            })
            .collect()
    };
    let check = |stats: &[(usize, (f64, f64))]| -> (bool, String) {
        let ok = stats.windows(2).all(|w| {
            let ((_, (m0, se0)), (_, (m1, se1))) = (w[0], w[1]);
            m1 >= m0 - (se0 * se0 + se1 * se1).sqrt()
        });
        let text = stats
            .iter()
            .map(|(k, (m, se))| format!("{k}:{m:.4}±{se:.4}"))
            .collect::<Vec<_>>()
            .join(" ");
        (ok, text)
    };
    let by_size: Vec<_> = [10, 20, 40]
        .iter()
        .map(|&n| (n, mean_se(&finals(n, 100))))
        .collect();
    let by_iter: Vec<_> = [25, 50, 100]
        .iter()
        .map(|&t| (t, mean_se(&finals(40, t))))
        .collect();
    let (a, ta) = check(&by_size);
    let (b, tb) = check(&by_iter);
    Verdict::new(a && b, format!("N {ta}; N_t {tb}"))
}

// ---------------------------------------------------------------- 6

fn majority(votes: &[FlowClass]) -> FlowClass {
    let mut count = [0usize; N_CLASSES];
    for v in votes {
        count[v.code()] += 1;
    }
    let top = *count.iter().max().expect("five classes");
    FlowClass::ALL[count.iter().position(|&c| c == top).expect("max exists")]
}

fn vote_degeneration() -> Verdict {
    let mut mismatches = 0;
    let mut cases = 0;
    for k in 0..100u64 {
        let mut rng = stream(6, &[k]);
        let d = rng.random_range(2..=6);
        let counts: [usize; N_CLASSES] = std::array::from_fn(|_| rng.random_range(3..=30));
        let ds = random_dataset(&mut rng, counts, d);
        let cfg = WrfConfig {
            n_trees: rng.random_range(1..=12),
            tree: TreeConfig {
                max_depth: Some(rng.random_range(1..=5)),
                ..TreeConfig::default()
            },
            weighted_vote: rng.random_bool(0.5),
            ..WrfConfig::default()
        };
        let mut forest = fit(&ds, &random_mask(&mut rng, d), &cfg, k).expect("fit");
        forest.accuracy_matrix = AccuracyMatrix::ones(cfg.n_trees);
        for _ in 0..100 {
            let x: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
            let votes: Vec<FlowClass> = forest.trees.iter().map(|t| t.predict(&x)).collect();
            cases += 1;
            if weighted_vote(&forest, &x) != majority(&votes) {
                mismatches += 1;
            }
        }
    }
    Verdict::new(
        mismatches == 0,
        format!("{cases} cases, {mismatches} mismatches"),
    )
}

// ---------------------------------------------------------------- 7

struct RecallOutcome {
    minority: f64,
    accuracy: f64,
}

fn score(ds: &EncodedDataset, test: &EncodedDataset, cfg: &WrfConfig, seed: u64) -> RecallOutcome {
    let forest = fit(ds, &FeatureMask::ones(ds.n_features()), cfg, seed).expect("fit");
    let pred = forest.predict(test).expect("predict");
    let m = report(
        &confusion(test.labels(), &pred).expect("lengths"),
        &CostMatrix::KDD,
    );
    RecallOutcome {
        minority: (m.class(FlowClass::U2R).recall + m.class(FlowClass::R2L).recall) / 2.0,
        accuracy: m.accuracy,
    }
}

fn minority_recall() -> Verdict {
    let start = Instant::now();
    // noise where neither forest saturates nor collapses to zero minority recall
    let task = Task::new(41, 10, 0.6, 77);
    let train_counts = proportional_targets(&KDD_TRAIN_COUNTS, 6000);
    let test_counts = proportional_targets(&KDD_TEST_COUNTS, 8000);
    let cfg = WrfConfig::default();
    let mut factors = Vec::new();
    let mut drops = Vec::new();
    let mut lines = Vec::new();
    for s in 0..5u64 {
        let train = task.sample(train_counts, 700 + s);
        let test = task.sample(test_counts, 800 + s);
        let improved = score(&train, &test, &cfg, s);
        let classical = score(&train, &test, &WrfConfig::classical(), s);
        let factor = if classical.minority > 0.0 {
            improved.minority / classical.minority
        } else if improved.minority > 0.0 {
            f64::INFINITY
        } else {
            1.0
        };
        factors.push(factor);
        drops.push(classical.accuracy - improved.accuracy);
        lines.push(format!(
            "{:.3}/{:.3}",
            improved.minority, classical.minority
        ));
    }
    let (f, drop) = (median(factors), median(drops));
    let elapsed = start.elapsed();
    Verdict::new(
        f >= 1.5 && drop <= 0.01 && elapsed < Duration::from_secs(300),
        format!(
            "median recall factor {f:.2}, median accuracy drop {:.2}pp; minority recall improved/classical [{}]",
            drop * 100.0,
            lines.join(", ")
        ),
    )
}

// ---------------------------------------------------------------- 8-10

struct KddRuns {
    improved: ReportDocument,
    baseline: ReportDocument,
    identical: Vec<(String, bool)>,
    seconds: f64,
}

fn kdd_paths() -> Option<(PathBuf, PathBuf)> {
    let train = std::env::var_os("FLOWGATE_KDD_TRAIN")?;
    let test = std::env::var_os("FLOWGATE_KDD_TEST")?;
    Some((train.into(), test.into()))
}

fn kdd_runs() -> &'static Result<KddRuns, String> {
    static RUNS: std::sync::OnceLock<Result<KddRuns, String>> = std::sync::OnceLock::new();
    RUNS.get_or_init(|| {
        let (train, test) = kdd_paths().ok_or_else(|| {
            "FLOWGATE_KDD_TRAIN / FLOWGATE_KDD_TEST not set; the KDD-99 files are not available here".to_string()
        })?;
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let mut cfg = PipelineConfig::default();
        cfg.data.train = Some(train);
        cfg.data.test = Some(test);
        cfg.data.train_targets = Some(KDD_TRAIN_COUNTS);
        cfg.data.test_targets = Some(KDD_TEST_COUNTS);
        let run_in = |cfg: &PipelineConfig, name: &str| -> Result<PathBuf, String> {
            let mut c = cfg.clone();
            c.out_dir = dir.path().join(name);
            flowgate_cli::run_pipeline(&c).map_err(|e| format!("{name}: {e}"))?;
            Ok(c.out_dir)
        };
        let start = Instant::now();
        let a = run_in(&cfg, "improved")?;
        let seconds = start.elapsed().as_secs_f64();
        let b = run_in(&cfg, "improved_again")?;
        let base = run_in(&cfg.clone().into_baseline(), "baseline")?;
        let load = |p: PathBuf| -> Result<ReportDocument, String> {
            let text = std::fs::read_to_string(p.join("report.json")).map_err(|e| e.to_string())?;
            serde_json::from_str(&text).map_err(|e| e.to_string())
        };
        let identical = ["mask.json", "model.json", "report.json"]
            .iter()
            .map(|f| {
                let same = std::fs::read(a.join(f)).ok() == std::fs::read(b.join(f)).ok();
                (f.to_string(), same)
            })
            .collect();
        Ok(KddRuns {
            improved: load(a)?,
            baseline: load(base)?,
            identical,
            seconds,
        })
    })
}

fn kdd_reproduction() -> Verdict {
    match kdd_runs() {
        Err(e) => Verdict::new(false, e.clone()),
        Ok(r) => {
            let m = &r.improved.metrics;
            let k = r.improved.n_selected;
            Verdict::new(
                m.accuracy >= 0.93
                    && m.false_alarm <= 0.05
                    && (20..=41).contains(&k)
                    && r.seconds <= 600.0,
                format!(
                    "accuracy {:.2}%, FA {:.2}%, {k} features, {:.0}s",
                    m.accuracy * 100.0,
                    m.false_alarm * 100.0,
                    r.seconds
                ),
            )
        }
    }
}

fn kdd_cost() -> Verdict {
    match kdd_runs() {
        Err(e) => Verdict::new(false, e.clone()),
        Ok(r) => {
            let (a, b) = (r.improved.metrics.cost, r.baseline.metrics.cost);
            Verdict::new(a <= b, format!("cost improved {a:.4} vs baseline {b:.4}"))
        }
    }
}

fn kdd_determinism() -> Verdict {
    match kdd_runs() {
        Err(e) => Verdict::new(false, e.clone()),
        Ok(r) => {
            let differing: Vec<&str> = r
                .identical
                .iter()
                .filter(|(_, s)| !s)
                .map(|(f, _)| f.as_str())
                .collect();
            Verdict::new(
                differing.is_empty(),
                if differing.is_empty() {
                    "mask, model and report identical".to_string()
                } else {
                    format!("differ: {}", differing.join(", "))
                },
            )
        }
    }
}

// ---------------------------------------------------------------- 11

fn balanced_clustering() -> Verdict {
    let mut problems = Vec::new();
    for s in 0..200u64 {
        let mut rng = stream(11, &[s]);
        let n = rng.random_range(1..=64);
        let k = rng.random_range(1..=n.min(8));
        let d = rng.random_range(2..=48);
        let p = rng.random_range(0.05..0.95);
        let points: Vec<BitString> = (0..n).map(|_| BitString::random(d, p, &mut rng)).collect();
        let seed = rng.random();
        let a = cluster(&points, k, seed);
        let b = cluster(&points, k, seed);
        match (a, b) {
            (Ok(a), Ok(b)) => {
                let sizes = a.sizes();
                let spread = sizes.iter().max().unwrap() - sizes.iter().min().unwrap();
                if spread > 1 || sizes.len() != k || a != b {
                    problems.push(format!("swarm {s}: sizes {sizes:?}"));
                }
            }
            (Err(e), _) | (_, Err(e)) => problems.push(format!("swarm {s}: {e}")),
        }
    }
    Verdict::new(
        problems.is_empty(),
        if problems.is_empty() {
            "200 swarms balanced and reproducible".to_string()
        } else {
            problems.join("; ")
        },
    )
}
