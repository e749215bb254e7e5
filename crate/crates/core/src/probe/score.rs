//! Collapse detection and the reward-organization score.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::pca::Matrix;
use crate::error::{Error, Result};

pub const COLLAPSE_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_NEIGHBORS: usize = 5;

/// True iff every column's population standard deviation is below `tol`.
pub fn collapse_detect(x: &Matrix, tol: f64) -> bool {
    if x.rows < 2 {
        return true;
    }
    let mean = x.column_means();
    let mut var = vec![0.0; x.cols];
    for i in 0..x.rows {
        for ((v, m), s) in x.row(i).iter().zip(&mean).zip(var.iter_mut()) {
            *s += (v - m) * (v - m);
        }
    }
    var.iter().all(|s| (s / x.rows as f64).sqrt() < tol)
}

/// `k` nearest neighbours of every row (Euclidean; lower index wins ties).
#[derive(Clone, Debug)]
pub struct NeighborGraph {
    pub k: usize,
    neighbors: Vec<Vec<usize>>,
    collapsed: bool,
}

impl NeighborGraph {
    pub fn new(x: &Matrix, k: usize) -> Result<Self> {
        if k == 0 || x.rows <= k {
            return Err(Error::invalid(format!("need more than k={k} points, got {}", x.rows)));
        }
        let neighbors = (0..x.rows)
            .map(|i| {
                let mut by_distance: Vec<(f64, usize)> = (0..x.rows)
                    .filter(|&j| j != i)
                    .map(|j| {
                        let d: f64 = x.row(i).iter().zip(x.row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
                        (d, j)
                    })
                    .collect();
                by_distance.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                by_distance.iter().take(k).map(|&(_, j)| j).collect()
            })
            .collect();
        Ok(Self {
            k,
            neighbors,
            collapsed: collapse_detect(x, COLLAPSE_TOLERANCE),
        })
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    /// Score of `rewards` (one per row) under this neighbourhood structure.
    pub fn score(&self, rewards: &[f64]) -> Result<Organization> {
        if rewards.len() != self.len() {
            return Err(Error::invalid(format!("{} rewards for {} points", rewards.len(), self.len())));
        }
        if self.collapsed {
            return Ok(Organization {
                score: 0.0,
                collapsed: true,
                degenerate: false,
            });
        }
        let n = rewards.len();
        let mut pair_sum = 0.0;
        for i in 0..n {
            for j in 0..n {
                pair_sum += (rewards[i] - rewards[j]).abs();
            }
        }
        if pair_sum == 0.0 {
            return Ok(Organization {
                score: 0.0,
                collapsed: false,
                degenerate: true,
            });
        }
        let pair_mean = pair_sum / (n * (n - 1)) as f64;
        let local: f64 = self
            .neighbors
            .iter()
            .enumerate()
            .map(|(i, nb)| nb.iter().map(|&j| (rewards[i] - rewards[j]).abs()).sum::<f64>() / nb.len() as f64)
            .sum::<f64>()
            / n as f64;
        Ok(Organization {
            score: 1.0 - local / pair_mean,
            collapsed: false,
            degenerate: false,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Organization {
    /// `1 - (mean neighbour reward gap) / (mean pairwise reward gap)`.
    pub score: f64,
    pub collapsed: bool,
    /// All rewards equal; the score is reported as 0.
    pub degenerate: bool,
}

/// How well `k`-nearest neighbours in activation space share rewards.
pub fn organization_score(x: &Matrix, rewards: &[f64], k: usize) -> Result<Organization> {
    NeighborGraph::new(x, k)?.score(rewards)
}

/// Scores of the same activations under shuffled rewards.
#[derive(Clone, Debug, PartialEq)]
pub struct PermutationBaseline {
    /// Sorted ascending.
    pub scores: Vec<f64>,
}

impl PermutationBaseline {
    pub fn new(graph: &NeighborGraph, rewards: &[f64], permutations: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut shuffled = rewards.to_vec();
        let mut scores = (0..permutations)
            .map(|_| {
                shuffled.shuffle(&mut rng);
                graph.score(&shuffled).map(|o| o.score)
            })
            .collect::<Result<Vec<_>>>()?;
        scores.sort_by(f64::total_cmp);
        Ok(Self { scores })
    }

    /// `[min, max]` over all permutations.
    pub fn band(&self) -> (f64, f64) {
        (
            self.scores.first().copied().unwrap_or(0.0),
            self.scores.last().copied().unwrap_or(0.0),
        )
    }

    /// Nearest-rank quantile.
    pub fn quantile(&self, q: f64) -> f64 {
        if self.scores.is_empty() {
            return 0.0;
        }
        let rank = ((q.clamp(0.0, 1.0) * self.scores.len() as f64).ceil() as usize).clamp(1, self.scores.len());
        self.scores[rank - 1]
    }

    pub fn mean(&self) -> f64 {
        self.scores.iter().sum::<f64>() / self.scores.len().max(1) as f64
    }

    pub fn contains(&self, score: f64) -> bool {
        let (lo, hi) = self.band();
        (lo..=hi).contains(&score)
    }
}
