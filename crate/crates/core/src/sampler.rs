//! Fixed-memory uniform sampling from a stream of unknown length.
//!
//! The sampler keeps a buffer of at most `capacity` entries. Each incoming
//! element is admitted with the current admission probability 2^-level;
//! when an admission fills the buffer, every entry (including the one just
//! admitted) independently survives a fair coin flip and the level rises by
//! one. A halving that removes nothing leaves the buffer full and kills the
//! run ([`RetentionFailure`]); the chance of that is 2^-capacity per
//! halving.
//!
//! Duplicates are admitted freely — the buffer is a multiset, unlike the
//! set discipline in [`crate::distinct`] — so after any prefix of the
//! stream every element seen so far sits in the buffer with the same
//! marginal probability 2^-level. The finalized buffer is therefore a
//! uniform random sample of the whole stream, which is what downstream
//! coverage estimation relies on.
//!
//! Draw order per element: one admission draw (no randomness is consumed
//! while the admission probability is 1), then, on overflow, one retention
//! flip per buffer entry, oldest first. All draws come from a single
//! ChaCha8 stream (see [`crate::rng`]), so a (seed, capacity, stream)
//! triple fully determines the outcome.

use std::fmt;

use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::rng::{dyadic_bernoulli, fair_coin, rng_from_seed};

/// Buffer capacity and RNG seed for one sampler run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SamplerConfig {
    /// Maximum number of retained entries (must be at least 1).
    pub capacity: usize,
    /// Seed for the ChaCha8 draw stream.
    pub seed: u64,
}

/// Capacity 0 cannot hold a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("buffer capacity must be at least 1")]
pub struct InvalidCapacity;

/// A halving removed nothing, so the buffer is still full and the run is
/// dead. Retry with a larger capacity or a different seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error(
    "\u{22a5} halving retained all {capacity} entries at level {level} \
     after {observed} elements"
)]
pub struct RetentionFailure {
    /// Buffer capacity of the failed run.
    pub capacity: usize,
    /// Level after the failed halving's increment.
    pub level: u32,
    /// Stream elements observed up to and including the triggering one.
    pub observed: u64,
}

/// A [`RetentionFailure`] tagged with the 0-based stream position of the
/// element whose observation triggered it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("stream element {index}: {failure}")]
pub struct StreamFailure {
    pub index: u64,
    pub failure: RetentionFailure,
}

/// An exact dyadic probability 2^-exponent. The numerator is always 1, so
/// any level fits without overflow and no floating point is involved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct DyadicProbability {
    exponent: u32,
}

impl DyadicProbability {
    pub fn from_level(exponent: u32) -> Self {
        Self { exponent }
    }

    pub fn exponent(&self) -> u32 {
        self.exponent
    }

    pub fn numerator(&self) -> u64 {
        1
    }

    /// Lossy convenience view; underflows to 0 near exponent 1075.
    pub fn as_f64(&self) -> f64 {
        (-f64::from(self.exponent)).exp2()
    }
}

impl fmt::Display for DyadicProbability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exponent == 0 {
            write!(f, "1")
        } else {
            write!(f, "1/2^{}", self.exponent)
        }
    }
}

/// One retained slot. `stream_index` is 0-based provenance metadata for
/// diagnostics and tests; the algorithm never reads it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SampleEntry<T> {
    pub token: T,
    pub stream_index: u64,
}

/// The finalized sample: retained entries plus the run's closing counters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SampleResult<T> {
    entries: Vec<SampleEntry<T>>,
    level: u32,
    observed: u64,
    capacity: usize,
}

impl<T> SampleResult<T> {
    pub fn entries(&self) -> &[SampleEntry<T>] {
        &self.entries
    }

    pub fn tokens(&self) -> impl Iterator<Item = &T> {
        self.entries.iter().map(|entry| &entry.token)
    }

    /// Number of retained entries, usually written `r`.
    pub fn realized_size(&self) -> usize {
        self.entries.len()
    }

    /// Halvings performed over the run.
    pub fn level(&self) -> u32 {
        self.level
    }

    /// Total stream elements observed.
    pub fn observed(&self) -> u64 {
        self.observed
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Probability with which each observed element ended up retained.
    pub fn inclusion_probability(&self) -> DyadicProbability {
        DyadicProbability::from_level(self.level)
    }
}

/// The live sampling buffer. See the module docs for the discipline.
#[derive(Debug, Clone)]
pub struct Sampler<T> {
    buffer: Vec<SampleEntry<T>>,
    capacity: usize,
    level: u32,
    observed: u64,
    peak_len: usize,
    rng: ChaCha8Rng,
    failure: Option<RetentionFailure>,
}

impl<T> Sampler<T> {
    pub fn new(config: SamplerConfig) -> Result<Self, InvalidCapacity> {
        if config.capacity == 0 {
            return Err(InvalidCapacity);
        }
        Ok(Self {
            buffer: Vec::with_capacity(config.capacity),
            capacity: config.capacity,
            level: 0,
            observed: 0,
            peak_len: 0,
            rng: rng_from_seed(config.seed),
            failure: None,
        })
    }

    /// Feed one stream element.
    ///
    /// After a [`RetentionFailure`] the sampler is dead: the failure is
    /// returned again for every subsequent call and nothing is counted.
    pub fn observe(&mut self, token: T) -> Result<(), RetentionFailure> {
        if let Some(failure) = self.failure {
            return Err(failure);
        }
        let index = self.observed;
        self.observed += 1;
        if dyadic_bernoulli(&mut self.rng, self.level) {
            self.buffer.push(SampleEntry {
                token,
                stream_index: index,
            });
            self.peak_len = self.peak_len.max(self.buffer.len());
            if self.buffer.len() == self.capacity {
                self.halve()?;
            }
        }
        Ok(())
    }

    /// Feed elements left to right, stopping at the first failure. The
    /// error carries the 0-based position of the offending element.
    pub fn observe_all<I>(&mut self, tokens: I) -> Result<(), StreamFailure>
    where
        I: IntoIterator<Item = T>,
    {
        for token in tokens {
            let index = self.observed;
            self.observe(token)
                .map_err(|failure| StreamFailure { index, failure })?;
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

    /// Extract the final sample, consuming the sampler. Callers should not
    /// finalize a failed run; the buffer returned for one is the full
    /// buffer at death.
    #[must_use]
    pub fn finalize(self) -> SampleResult<T> {
        SampleResult {
            entries: self.buffer,
            level: self.level,
            observed: self.observed,
            capacity: self.capacity,
        }
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

    /// Largest buffer length reached so far (instrumentation; never exceeds
    /// capacity).
    #[must_use]
    pub fn peak_len(&self) -> usize {
        self.peak_len
    }

    pub fn failure(&self) -> Option<RetentionFailure> {
        self.failure
    }

    /// Probability with which any element observed so far is currently in
    /// the buffer.
    pub fn inclusion_probability(&self) -> DyadicProbability {
        DyadicProbability::from_level(self.level)
    }
}
