//! Fixed-memory uniform sampling from streams of unknown length, with
//! singleton-based coverage estimation.
//!
//! A [`Sampler`] keeps at most `capacity` elements: each incoming element
//! is admitted with the current dyadic probability 2^-level, and when the
//! buffer fills, every entry survives an independent fair coin flip while
//! the admission probability halves. The finalized buffer is a uniform
//! random sample of the whole stream, so the share of labels appearing
//! exactly once in it yields the coverage estimate
//! `1 - singletons / sample size` ([`estimate_coverage`]).
//!
//! Around that core the crate provides:
//!
//! - [`DistinctCounter`]: the set-buffer variant of the same discipline,
//!   which estimates the number of distinct labels as `len * 2^level`;
//! - [`true_coverage`]: an exact two-pass oracle for validation;
//! - [`ingest`]: a streaming corpus tokenizer with a recorded
//!   normalization policy;
//! - [`experiment`]: a deterministic Monte-Carlo harness with CSV output;
//! - [`plot`]: dependency-free SVG charts of experiment summaries.
//!
//! Every random draw comes from a seeded ChaCha8 stream ([`rng`]), so all
//! results are reproducible from their reported seeds.
//!
//! ```
//! use covstream::{estimate_coverage, DenominatorPolicy, Sampler, SamplerConfig};
//!
//! let mut sampler = Sampler::new(SamplerConfig { capacity: 8, seed: 7 })?;
//! sampler.observe_all(["sol", "mar", "sol", "rio", "sol", "mar"])?;
//! let sample = sampler.finalize();
//! let coverage = estimate_coverage(&sample, DenominatorPolicy::RealizedSize)?;
//! // The buffer never filled, so the sample is the whole stream and the
//! // lone singleton is "rio".
//! assert_eq!(coverage.singletons, 1);
//! assert_eq!(coverage.estimate, 1.0 - 1.0 / 6.0);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod coverage;
pub mod distinct;
pub mod experiment;
pub mod ingest;
pub mod plot;
pub mod rng;
pub mod sampler;
mod token;

pub use coverage::{
    count_singletons, estimate_coverage, true_coverage, CoverageEstimate, DenominatorPolicy,
    EmptySample, EmptyStream, TrueCoverage,
};
pub use distinct::DistinctCounter;
pub use ingest::{tokenize_str, NormalizationPolicy, StreamStats};
pub use sampler::{
    DyadicProbability, InvalidCapacity, RetentionFailure, SampleEntry, SampleResult, Sampler,
    SamplerConfig, StreamFailure,
};
pub use token::{EmptyToken, Token};
