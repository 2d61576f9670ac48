//! Distinct-element estimation with the same buffer-and-halving
//! discipline, known in the streaming literature as the CVM
//! (Chakraborty-Vinodchandran-Meel) estimator.
//!
//! Here the buffer is a set: re-seeing a label first removes the stored
//! copy, then re-inserts it with the current admission probability. (Merely
//! skipping labels already present would let early arrivals keep an
//! admission probability from a lower level, biasing the count.) After k
//! halvings each retained label survived with probability 2^-k, so the
//! distinct-count estimate is `buffer length * 2^level`.

use std::hash::Hash;

use indexmap::IndexSet;
use rand_chacha::ChaCha8Rng;

use crate::rng::{dyadic_bernoulli, fair_coin, rng_from_seed};
use crate::sampler::{InvalidCapacity, RetentionFailure, SamplerConfig};

/// Streaming distinct-count state. Single-owner, deterministic under its
/// seed; halving flips visit entries in insertion order.
#[derive(Debug, Clone)]
pub struct DistinctCounter<T: Eq + Hash> {
    buffer: IndexSet<T>,
    capacity: usize,
    level: u32,
    observed: u64,
    rng: ChaCha8Rng,
    failure: Option<RetentionFailure>,
}

impl<T: Eq + Hash> DistinctCounter<T> {
    pub fn new(config: SamplerConfig) -> Result<Self, InvalidCapacity> {
        if config.capacity == 0 {
            return Err(InvalidCapacity);
        }
        Ok(Self {
            buffer: IndexSet::with_capacity(config.capacity),
            capacity: config.capacity,
            level: 0,
            observed: 0,
            rng: rng_from_seed(config.seed),
            failure: None,
        })
    }

    /// Feed one stream element. Any stored copy of the label is removed
    /// first; the label is then re-inserted with probability 2^-level.
    /// After a [`RetentionFailure`] the counter is dead and the failure is
    /// returned for every subsequent call.
    pub fn observe(&mut self, token: T) -> Result<(), RetentionFailure> {
        if let Some(failure) = self.failure {
            return Err(failure);
        }
        self.observed += 1;
        self.buffer.shift_remove(&token);
        if dyadic_bernoulli(&mut self.rng, self.level) {
            self.buffer.insert(token);
            if self.buffer.len() == self.capacity {
                self.halve()?;
            }
        }
        Ok(())
    }

    pub fn observe_all<I>(&mut self, tokens: I) -> Result<(), RetentionFailure>
    where
        I: IntoIterator<Item = T>,
    {
        for token in tokens {
            self.observe(token)?;
        }
        Ok(())
    }

    fn halve(&mut self) -> Result<(), RetentionFailure> {
        let rng = &mut self.rng;
        self.buffer.retain(|_| fair_coin(rng));
        self.level += 1;
        if self.buffer.len() == self.capacity {
            let failure = RetentionFailure {
                capacity: self.capacity,
                level: self.level,
                observed: self.observed,
            };
            self.failure = Some(failure);
            return Err(failure);
        }
        Ok(())
    }

    /// Estimated number of distinct labels in the stream so far:
    /// `len * 2^level`.
    #[must_use]
    pub fn estimate(&self) -> f64 {
        self.buffer.len() as f64 * f64::from(self.level).exp2()
    }

    pub fn len(&self) -> usize {
        self.buffer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buffer.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn observed(&self) -> u64 {
        self.observed
    }

    pub fn failure(&self) -> Option<RetentionFailure> {
        self.failure
    }

    pub fn labels(&self) -> impl Iterator<Item = &T> {
        self.buffer.iter()
    }
}
