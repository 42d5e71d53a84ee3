//! Synthetic KDD-format files for the integration and acceptance tests.

#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::Path;

use flowgate_core::synth::Task;

const PROTOCOLS: [&str; 3] = ["tcp", "udp", "icmp"];
const SERVICES: [&str; 5] = ["http", "smtp", "private", "ecr_i", "ftp_data"];
const FLAGS: [&str; 3] = ["SF", "S0", "REJ"];
const LABELS: [[&str; 2]; 5] = [
    ["normal", "normal"],
    ["portsweep", "satan"],
    ["smurf", "neptune"],
    ["buffer_overflow", "rootkit"],
    ["guess_passwd", "warezclient"],
];

/// Rows of a 41-feature KDD file in which ten numeric columns carry the class.
pub fn kdd_text(counts: [usize; 5], noise: f64, seed: u64) -> String {
    let task = Task::new(41, 10, noise, 7);
    let ds = task.sample(counts, seed);
    let mut out = String::new();
    for i in 0..ds.n_rows() {
        let class = ds.label(i).code();
        let row = ds.row(i);
        let pick = |k: usize, n: usize| (class + k * i) % n;
        for (j, v) in row.iter().enumerate() {
            match j {
                1 => out.push_str(PROTOCOLS[pick(0, 3)]),
                2 => out.push_str(SERVICES[pick(1, 5)]),
                3 => out.push_str(FLAGS[pick(2, 3)]),
                _ => write!(out, "{:.4}", v).unwrap(),
            }
            out.push(',');
        }
        writeln!(out, "{}.", LABELS[class][i % 2]).unwrap();
    }
    out
}

pub fn write_kdd(path: &Path, counts: [usize; 5], noise: f64, seed: u64) {
    std::fs::write(path, kdd_text(counts, noise, seed)).unwrap();
}

/// A config small enough to run the whole pipeline in well under a second.
pub fn tiny_config(train: &Path, test: &Path, out: &Path) -> String {
    format!(
        r#"out_dir = "{out}"

[data]
train = "{train}"
test = "{test}"
train_targets = [60, 30, 60, 8, 20]

[fitness]
max_rows = 150

[bat]
swarm_size = 8
subgroups = 2
max_iterations = 4
seed = 5

[forest]
n_trees = 6
"#,
        out = out.display(),
        train = train.display(),
        test = test.display()
    )
}
