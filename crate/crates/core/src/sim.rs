//! Seeded Monte Carlo trials.
//!
//! Trial `t` under seed `s` always draws from the ChaCha8 stream `t` of key
//! `s`, so tallies do not depend on thread count or scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::protocol::Outcome;

pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct OutcomeCounts {
    pub zero: u64,
    pub one: u64,
    pub abort: u64,
}

impl OutcomeCounts {
    pub fn record(&mut self, outcome: Outcome) {
        match outcome {
            Outcome::Zero => self.zero += 1,
            Outcome::One => self.one += 1,
            Outcome::Abort => self.abort += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.zero + self.one + self.abort
    }

    pub fn count(&self, outcome: Outcome) -> u64 {
        match outcome {
            Outcome::Zero => self.zero,
            Outcome::One => self.one,
            Outcome::Abort => self.abort,
        }
    }

    pub fn frequency(&self, outcome: Outcome) -> f64 {
        match self.total() {
            0 => 0.0,
            n => self.count(outcome) as f64 / n as f64,
        }
    }

    fn merge(mut self, other: OutcomeCounts) -> OutcomeCounts {
        self.zero += other.zero;
        self.one += other.one;
        self.abort += other.abort;
        self
    }
}

/// Runs `trials` independent draws of `sample` in parallel.
pub fn run_trials<F>(trials: u64, seed: u64, sample: F) -> OutcomeCounts
where
    F: Fn(&mut ChaCha8Rng) -> Outcome + Sync,
{
    (0..trials)
        .into_par_iter()
        .fold(OutcomeCounts::default, |mut acc, t| {
            acc.record(sample(&mut trial_rng(seed, t)));
            acc
        })
        .reduce(OutcomeCounts::default, OutcomeCounts::merge)
}

/// Binomial standard error of a frequency estimate.
pub fn binomial_sigma(p: f64, trials: u64) -> f64 {
    (p * (1.0 - p) / trials.max(1) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_order_independent() {
        let f = |rng: &mut ChaCha8Rng| {
            if rng.random::<f64>() < 0.3 {
                Outcome::Zero
            } else {
                Outcome::One
            }
        };
        let a = run_trials(10_000, 5, f);
        let b = run_trials(10_000, 5, f);
        assert_eq!(a, b);
        let serial = (0..10_000u64).fold(OutcomeCounts::default(), |mut acc, t| {
            acc.record(f(&mut trial_rng(5, t)));
            acc
        });
        assert_eq!(a, serial);
        assert_ne!(a, run_trials(10_000, 6, f));
    }
}
