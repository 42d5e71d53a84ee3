//! Equal-size K-means over bit strings.
//!
//! Bit strings are treated as 0/1 vectors, so squared Euclidean distance
//! between two points is their Hamming distance. Assignment is greedy under
//! a capacity limit: (point, centroid) pairs are taken in ascending distance
//! order and a point goes to the first centroid that still has room. With
//! `N = qK + r`, exactly `r` subgroups hold `q + 1` points and the rest hold `q`.

use rand::Rng;

use crate::bits::BitString;
use crate::rng;

pub const MAX_ROUNDS: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClusterError {
    #[error("number of subgroups must be at least 1")]
    ZeroClusters,
    #[error("cannot form {k} subgroups from {n} points")]
    TooManyClusters { k: usize, n: usize },
    #[error("point {index} has width {got}, expected {expected}")]
    WidthMismatch {
        index: usize,
        expected: usize,
        got: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    /// Subgroup index of each point, in `0..k`.
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Sum of squared distances from each point to its centroid.
    pub cost: f64,
    pub rounds: usize,
}

impl ClusterAssignment {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k()];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }

    /// Point indices in subgroup `n`, ascending.
    pub fn members(&self, n: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == n)
            .collect()
    }

    /// Members of every subgroup, indexed by subgroup.
    pub fn groups(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.k()];
        for (i, &a) in self.assignments.iter().enumerate() {
            groups[a].push(i);
        }
        groups
    }
}

fn sq_dist(point: &[f64], centroid: &[f64]) -> f64 {
    point
        .iter()
        .zip(centroid)
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

/// Partitions `points` into `k` subgroups whose sizes differ by at most one.
pub fn cluster(
    points: &[BitString],
    k: usize,
    seed: u64,
) -> Result<ClusterAssignment, ClusterError> {
    cluster_traced(points, k, seed).map(|(a, _)| a)
}

/// As [`cluster`], also returning the cost after every accepted round.
pub(crate) fn cluster_traced(
    points: &[BitString],
    k: usize,
    seed: u64,
) -> Result<(ClusterAssignment, Vec<f64>), ClusterError> {
    let n = points.len();
    if k == 0 {
        return Err(ClusterError::ZeroClusters);
    }
    if k > n {
        return Err(ClusterError::TooManyClusters { k, n });
    }
    let d = points[0].len();
    if let Some((index, p)) = points.iter().enumerate().find(|(_, p)| p.len() != d) {
        return Err(ClusterError::WidthMismatch {
            index,
            expected: d,
            got: p.len(),
        });
    }
    let coords: Vec<Vec<f64>> = points.iter().map(BitString::to_f64_vec).collect();

    let mut centroids = seed_centroids(&coords, k, seed);
    let mut assignments = capacity_assign(&coords, &centroids);
    centroids = recenter(&coords, &assignments, k, d);
    let mut cost = total_cost(&coords, &assignments, &centroids);
    let mut costs = vec![cost];
    let mut rounds = 1;

    while rounds < MAX_ROUNDS {
        let next = capacity_assign(&coords, &centroids);
        if next == assignments {
            break;
        }
        let next_centroids = recenter(&coords, &next, k, d);
        let next_cost = total_cost(&coords, &next, &next_centroids);
        if next_cost > cost {
            break;
        }
        assignments = next;
        centroids = next_centroids;
        cost = next_cost;
        costs.push(cost);
        rounds += 1;
    }

    Ok((
        ClusterAssignment {
            assignments,
            centroids,
            cost,
            rounds,
        },
        costs,
    ))
}

/// k-means++ seeding: first centroid uniform, each further one drawn with
/// probability proportional to squared distance from the nearest chosen one.
fn seed_centroids(coords: &[Vec<f64>], k: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rng::stream(seed, &[0x6b6d]);
    let n = coords.len();
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    let mut centroids = vec![coords[first].clone()];
    let mut nearest: Vec<f64> = coords.iter().map(|p| sq_dist(p, &coords[first])).collect();

    while centroids.len() < k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = None;
            for (i, &w) in nearest.iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                pick = Some(i);
                if target < w {
                    break;
                }
                target -= w;
            }
            pick.expect("positive total mass")
        } else {
            // every remaining point coincides with a centroid
            let free: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen[pick] = true;
        for (i, p) in coords.iter().enumerate() {
            nearest[i] = nearest[i].min(sq_dist(p, &coords[pick]));
        }
        centroids.push(coords[pick].clone());
    }
    centroids
}

fn capacity_assign(coords: &[Vec<f64>], centroids: &[Vec<f64>]) -> Vec<usize> {
    let n = coords.len();
    let k = centroids.len();
    let base = n / k;
    let mut big_slots = n % k;

    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n * k);
    for (i, p) in coords.iter().enumerate() {
        for (c, centroid) in centroids.iter().enumerate() {
            pairs.push((sq_dist(p, centroid), i, c));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut assignment = vec![usize::MAX; n];
    let mut sizes = vec![0usize; k];
    let mut left = n;
    for (_, i, c) in pairs {
        if assignment[i] != usize::MAX {
            continue;
        }
        let room = if sizes[c] < base {
            true
        } else if sizes[c] == base && big_slots > 0 {
            big_slots -= 1;
            true
        } else {
            false
        };
        if room {
            assignment[i] = c;
            sizes[c] += 1;
            left -= 1;
            if left == 0 {
                break;
            }
        }
    }
    assignment
}

fn recenter(coords: &[Vec<f64>], assignment: &[usize], k: usize, d: usize) -> Vec<Vec<f64>> {
    let mut sums = vec![vec![0.0; d]; k];
    let mut counts = vec![0usize; k];
    for (p, &a) in coords.iter().zip(assignment) {
        counts[a] += 1;
        for (s, v) in sums[a].iter_mut().zip(p) {
            *s += v;
        }
    }
    for (s, &c) in sums.iter_mut().zip(&counts) {
        // capacities guarantee c >= 1
        for v in s.iter_mut() {
            *v /= c as f64;
        }
    }
    sums
}

fn total_cost(coords: &[Vec<f64>], assignment: &[usize], centroids: &[Vec<f64>]) -> f64 {
    coords
        .iter()
        .zip(assignment)
        .map(|(p, &a)| sq_dist(p, &centroids[a]))
        .sum()
}
