//! Coverage estimation from a finalized sample, plus the exact two-pass
//! oracle used to validate it.
//!
//! A label appearing exactly once in the sample (a singleton) is evidence
//! of stream mass the sample does not cover, so the estimate is
//! `1 - singletons / denominator`. The denominator is the realized sample
//! size by default; dividing by the configured capacity instead is
//! available behind [`DenominatorPolicy::Capacity`], but overstates
//! coverage whenever halvings left the buffer short.
//!
//! The oracle computes the true covered fraction — the share of stream
//! positions whose label occurs in the sample — by rescanning the whole
//! stream. It exists for validation only; the streaming path never calls
//! it.

use std::borrow::Borrow;
use std::collections::{HashMap, HashSet};
use std::fmt;
use std::hash::Hash;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::sampler::SampleResult;

/// Which denominator the estimate divides the singleton count by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DenominatorPolicy {
    /// The realized sample size `r` (the default).
    RealizedSize,
    /// The configured buffer capacity `n`.
    Capacity,
}

impl fmt::Display for DenominatorPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::RealizedSize => f.write_str("realized"),
            Self::Capacity => f.write_str("capacity"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown denominator policy {0:?} (expected \"realized\" or \"capacity\")")]
pub struct UnknownPolicy(String);

impl FromStr for DenominatorPolicy {
    type Err = UnknownPolicy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "realized" => Ok(Self::RealizedSize),
            "capacity" => Ok(Self::Capacity),
            other => Err(UnknownPolicy(other.to_string())),
        }
    }
}

/// The realized-size policy cannot divide by an empty sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("cannot estimate coverage from an empty sample under the realized-size policy")]
pub struct EmptySample;

/// Coverage is undefined for an empty stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("true coverage is undefined for an empty stream")]
pub struct EmptyStream;

/// The singleton-based coverage estimate together with its inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoverageEstimate {
    /// Labels with multiplicity exactly 1 in the sample.
    pub singletons: usize,
    /// Divisor selected by the policy.
    pub denominator: usize,
    pub policy: DenominatorPolicy,
    /// `1 - singletons / denominator`.
    pub estimate: f64,
}

/// Exact covered fraction of a stream with respect to a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TrueCoverage {
    /// Stream positions whose label occurs in the sample.
    pub covered_count: u64,
    pub stream_length: u64,
}

impl TrueCoverage {
    pub fn value(&self) -> f64 {
        self.covered_count as f64 / self.stream_length as f64
    }
}

/// Number of labels whose multiplicity in the sample is exactly 1. Only
/// the sample's own histogram is consulted; stream-level frequencies never
/// enter.
#[must_use]
pub fn count_singletons<T: Eq + Hash>(sample: &SampleResult<T>) -> usize {
    let mut multiplicity: HashMap<&T, usize> = HashMap::new();
    for token in sample.tokens() {
        *multiplicity.entry(token).or_insert(0) += 1;
    }
    multiplicity.values().filter(|&&count| count == 1).count()
}

/// The Good-Turing singleton estimate `1 - s / denominator` for the
/// sample.
pub fn estimate_coverage<T: Eq + Hash>(
    sample: &SampleResult<T>,
    policy: DenominatorPolicy,
) -> Result<CoverageEstimate, EmptySample> {
    let denominator = match policy {
        DenominatorPolicy::RealizedSize => {
            if sample.realized_size() == 0 {
                return Err(EmptySample);
            }
            sample.realized_size()
        }
        DenominatorPolicy::Capacity => sample.capacity(),
    };
    let singletons = count_singletons(sample);
    Ok(CoverageEstimate {
        singletons,
        denominator,
        policy,
        estimate: 1.0 - singletons as f64 / denominator as f64,
    })
}

/// Exact two-pass oracle: the fraction of stream positions whose label
/// appears (at least once — multiplicity-blind) in the sample.
pub fn true_coverage<T, I, B>(
    stream: I,
    sample: &SampleResult<T>,
) -> Result<TrueCoverage, EmptyStream>
where
    T: Eq + Hash,
    I: IntoIterator<Item = B>,
    B: Borrow<T>,
{
    let covered_labels: HashSet<&T> = sample.tokens().collect();
    let mut stream_length = 0u64;
    let mut covered_count = 0u64;
    for token in stream {
        stream_length += 1;
        if covered_labels.contains(token.borrow()) {
            covered_count += 1;
        }
    }
    if stream_length == 0 {
        return Err(EmptyStream);
    }
    Ok(TrueCoverage {
        covered_count,
        stream_length,
    })
}
