//! Monte Carlo replay of a fixed activation sequence.
//!
//! Each node takes a geometric number of attempts (support `1, 2, ...`) with
//! the success probability given by the prefix activated before it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{sequence_time, DiffusionInstance};

/// Worker count used by [`simulate_sequence`]; fixed so that results do not
/// depend on the machine.
pub const DEFAULT_WORKERS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub mean: f64,
    pub std_error: f64,
    pub trials: u64,
    /// Expected total time of the sequence.
    pub analytic: f64,
    pub min: f64,
    pub max: f64,
}

/// Running mean and squared deviations.
#[derive(Debug, Clone, Copy)]
struct Welford {
    count: u64,
    mean: f64,
    m2: f64,
    min: f64,
    max: f64,
}

impl Welford {
    fn new() -> Self {
        Welford { count: 0, mean: 0.0, m2: 0.0, min: f64::INFINITY, max: f64::NEG_INFINITY }
    }

    fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
        self.min = self.min.min(x);
        self.max = self.max.max(x);
    }

    fn merge(self, other: Welford) -> Welford {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let count = self.count + other.count;
        let d = other.mean - self.mean;
        let mean = self.mean + d * other.count as f64 / count as f64;
        let m2 = self.m2 + other.m2 + d * d * (self.count as f64 * other.count as f64) / count as f64;
        Welford { count, mean, m2, min: self.min.min(other.min), max: self.max.max(other.max) }
    }
}

/// Number of attempts until the first success, by inverse transform.
#[inline]
pub fn geometric_attempts<R: Rng + ?Sized>(p: f64, rng: &mut R) -> u64 {
    if p >= 1.0 {
        return 1;
    }
    // u in (0, 1]
    let u = 1.0 - rng.random::<f64>();
    1 + (u.ln() / (-p).ln_1p()).floor() as u64
}

/// [`simulate_sequence_with_workers`] with [`DEFAULT_WORKERS`].
pub fn simulate_sequence(instance: &DiffusionInstance, seq: &[usize], trials: u64, rng_seed: u64) -> Result<SimulationSummary> {
    simulate_sequence_with_workers(instance, seq, trials, rng_seed, DEFAULT_WORKERS)
}

/// Samples the total number of attempts `trials` times. Trials are split
/// evenly across `workers`, worker `w` drawing from stream `w` of the seeded
/// generator; results are reproducible for a fixed `(rng_seed, workers)`.
pub fn simulate_sequence_with_workers(
    instance: &DiffusionInstance,
    seq: &[usize],
    trials: u64,
    rng_seed: u64,
    workers: usize,
) -> Result<SimulationSummary> {
    if trials == 0 || workers == 0 {
        return Err(Error::InvalidInstance("trials and workers must be positive".into()));
    }
    let eval = sequence_time(instance, seq)?;
    if !eval.is_feasible() {
        return Err(Error::InvalidSequence("sequence has infinite expected time".into()));
    }
    let probs: Vec<f64> = eval.step_times.iter().skip(1).map(|t| 1.0 / t).collect();
    let workers = workers as u64;
    let stats = (0..workers)
        .into_par_iter()
        .map(|w| {
            let share = trials / workers + u64::from(w < trials % workers);
            let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
            rng.set_stream(w);
            let mut acc = Welford::new();
            for _ in 0..share {
                let total: u64 = probs.iter().map(|&p| geometric_attempts(p, &mut rng)).sum();
                acc.push(total as f64);
            }
            acc
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Welford::new(), Welford::merge);
    let variance = if stats.count > 1 { stats.m2 / (stats.count - 1) as f64 } else { 0.0 };
    Ok(SimulationSummary {
        mean: stats.mean,
        std_error: (variance / stats.count as f64).sqrt(),
        trials,
        analytic: eval.total_time,
        min: stats.min,
        max: stats.max,
    })
}
