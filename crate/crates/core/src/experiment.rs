//! Monte-Carlo experiment harness: for each configured buffer size, run
//! seeded replications of sample → estimate → exact oracle over a shared
//! corpus, then summarize per size.
//!
//! Replication `j` at size index `i` always uses
//! `derive_seed(base_seed, i, j)`, so every row is a pure function of
//! (config, corpus) and the row set is identical whether replications run
//! serially or in parallel.

use std::collections::HashMap;
use std::hash::Hash;

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::coverage::{estimate_coverage, true_coverage, DenominatorPolicy};
use crate::rng::derive_seed;
use crate::sampler::{Sampler, SamplerConfig};

/// Sizes, replication count, base seed, and denominator policy for one
/// experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    /// Ladder of buffer sizes, strictly increasing.
    pub buffer_sizes: Vec<usize>,
    /// Replications per buffer size.
    pub replications: u32,
    pub base_seed: u64,
    pub policy: DenominatorPolicy,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("buffer size list must be non-empty")]
    NoSizes,
    #[error(
        "buffer sizes must be strictly increasing and at least 1 (got {next} after {previous})"
    )]
    NotIncreasing { previous: usize, next: usize },
    #[error("replications must be at least 1")]
    NoReplications,
    #[error("corpus is empty")]
    EmptyCorpus,
}

impl ExperimentConfig {
    pub fn validate(&self, corpus_len: usize) -> Result<(), ConfigError> {
        if self.buffer_sizes.is_empty() {
            return Err(ConfigError::NoSizes);
        }
        let mut previous = 0usize;
        for &size in &self.buffer_sizes {
            if size <= previous {
                return Err(ConfigError::NotIncreasing {
                    previous,
                    next: size,
                });
            }
            previous = size;
        }
        if self.replications == 0 {
            return Err(ConfigError::NoReplications);
        }
        if corpus_len == 0 {
            return Err(ConfigError::EmptyCorpus);
        }
        Ok(())
    }
}

/// One (buffer size, replication) outcome. The numeric fields are absent
/// exactly when the replication produced no usable estimate: a retention
/// failure, or (only possible at tiny capacities) an empty final sample
/// under the realized-size policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExperimentRow {
    pub buffer_size: usize,
    /// 0-based replication index within its buffer size.
    pub replication: u32,
    pub seed: u64,
    pub estimate: Option<f64>,
    pub true_coverage: Option<f64>,
    /// `estimate - true_coverage`, exactly.
    pub difference: Option<f64>,
    pub retention_failure: bool,
}

/// Per-size aggregate over the replications that produced an estimate.
/// `sd_difference` uses the sample divisor (successes - 1) and is absent
/// below two successes; the means are absent when every replication
/// failed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub buffer_size: usize,
    pub successes: u32,
    pub failures: u32,
    pub mean_difference: Option<f64>,
    pub sd_difference: Option<f64>,
    pub mean_estimate: Option<f64>,
    pub mean_true_coverage: Option<f64>,
}

/// Run the full grid. Rows come back ordered by (size index, replication)
/// regardless of scheduling.
pub fn run_experiment<T>(
    corpus: &[T],
    config: &ExperimentConfig,
) -> Result<Vec<ExperimentRow>, ConfigError>
where
    T: Eq + Hash + Sync,
{
    config.validate(corpus.len())?;
    let stream = intern(corpus);
    let jobs = job_list(config);
    #[cfg(feature = "parallel")]
    let rows = jobs
        .par_iter()
        .map(|job| run_replication(&stream, config.policy, *job))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let rows = jobs
        .iter()
        .map(|job| run_replication(&stream, config.policy, *job))
        .collect();
    Ok(rows)
}

/// Single-threaded variant with identical output; useful where no thread
/// pool is available and in tests of the parallel contract.
pub fn run_experiment_serial<T>(
    corpus: &[T],
    config: &ExperimentConfig,
) -> Result<Vec<ExperimentRow>, ConfigError>
where
    T: Eq + Hash,
{
    config.validate(corpus.len())?;
    let stream = intern(corpus);
    Ok(job_list(config)
        .iter()
        .map(|job| run_replication(&stream, config.policy, *job))
        .collect())
}

#[derive(Debug, Clone, Copy)]
struct Job {
    buffer_size: usize,
    replication: u32,
    seed: u64,
}

fn job_list(config: &ExperimentConfig) -> Vec<Job> {
    let mut jobs = Vec::with_capacity(config.buffer_sizes.len() * config.replications as usize);
    for (lane, &buffer_size) in config.buffer_sizes.iter().enumerate() {
        for replication in 0..config.replications {
            jobs.push(Job {
                buffer_size,
                replication,
                seed: derive_seed(config.base_seed, lane as u64, u64::from(replication)),
            });
        }
    }
    jobs
}

/// Map labels to dense ids once so replications sample machine words
/// instead of cloning tokens. Multiplicity structure, and hence every
/// statistic, is unchanged.
fn intern<T: Eq + Hash>(corpus: &[T]) -> Vec<u32> {
    let mut ids: HashMap<&T, u32> = HashMap::new();
    corpus
        .iter()
        .map(|token| {
            let next = ids.len() as u32;
            *ids.entry(token).or_insert(next)
        })
        .collect()
}

fn run_replication(stream: &[u32], policy: DenominatorPolicy, job: Job) -> ExperimentRow {
    let mut sampler = Sampler::new(SamplerConfig {
        capacity: job.buffer_size,
        seed: job.seed,
    })
    .expect("validated buffer size");
    for &id in stream {
        if sampler.observe(id).is_err() {
            return ExperimentRow {
                buffer_size: job.buffer_size,
                replication: job.replication,
                seed: job.seed,
                estimate: None,
                true_coverage: None,
                difference: None,
                retention_failure: true,
            };
        }
    }
    let sample = sampler.finalize();
    let truth = true_coverage(stream.iter(), &sample)
        .expect("corpus validated non-empty")
        .value();
    let estimate = estimate_coverage(&sample, policy).ok().map(|e| e.estimate);
    ExperimentRow {
        buffer_size: job.buffer_size,
        replication: job.replication,
        seed: job.seed,
        estimate,
        true_coverage: Some(truth),
        difference: estimate.map(|e| e - truth),
        retention_failure: false,
    }
}

/// Aggregate rows per buffer size, in first-appearance order.
pub fn summarize(rows: &[ExperimentRow]) -> Vec<SummaryRow> {
    let mut order: Vec<usize> = Vec::new();
    let mut groups: HashMap<usize, Vec<&ExperimentRow>> = HashMap::new();
    for row in rows {
        groups
            .entry(row.buffer_size)
            .or_insert_with(|| {
                order.push(row.buffer_size);
                Vec::new()
            })
            .push(row);
    }
    order
        .into_iter()
        .map(|buffer_size| {
            let group = &groups[&buffer_size];
            let failures = group.iter().filter(|r| r.retention_failure).count() as u32;
            let diffs: Vec<f64> = group.iter().filter_map(|r| r.difference).collect();
            let estimates: Vec<f64> = group.iter().filter_map(|r| r.estimate).collect();
            let truths: Vec<f64> = group
                .iter()
                .filter(|r| r.estimate.is_some())
                .filter_map(|r| r.true_coverage)
                .collect();
            let successes = diffs.len() as u32;
            SummaryRow {
                buffer_size,
                successes,
                failures,
                mean_difference: mean(&diffs),
                sd_difference: sample_sd(&diffs),
                mean_estimate: mean(&estimates),
                mean_true_coverage: mean(&truths),
            }
        })
        .collect()
}

fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

fn sample_sd(values: &[f64]) -> Option<f64> {
    if values.len() < 2 {
        return None;
    }
    let m = mean(values)?;
    let var = values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() - 1) as f64;
    Some(var.sqrt())
}

/// Format with 10 significant digits: plain decimal for moderate
/// magnitudes, scientific otherwise. Parsing the output and formatting the
/// parsed value again reproduces the bytes.
pub fn format_sig10(value: f64) -> String {
    if value == 0.0 {
        return "0".to_string();
    }
    if !value.is_finite() {
        return value.to_string();
    }
    let sci = format!("{value:.9e}");
    let exp: i32 = sci[sci.find('e').expect("scientific format") + 1..]
        .parse()
        .expect("exponent digits");
    if (-4..=9).contains(&exp) {
        format!("{value:.*}", (9 - exp).max(0) as usize)
    } else {
        sci
    }
}

pub const ROWS_CSV_HEADER: &str =
    "buffer_size,replication,seed,estimate,true_coverage,difference,retention_failure";

const SUMMARY_CSV_HEADER: &str = "buffer_size,successes,failures,mean_difference,\
     sd_difference,mean_estimate,mean_true_coverage";

fn opt_sig10(value: Option<f64>) -> String {
    value.map(format_sig10).unwrap_or_default()
}

/// Per-row CSV: header plus one line per row, `\n` separators, UTF-8,
/// floats at 10 significant digits, absent values as empty fields.
pub fn rows_to_csv(rows: &[ExperimentRow]) -> String {
    let mut out = String::from(ROWS_CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            row.buffer_size,
            row.replication,
            row.seed,
            opt_sig10(row.estimate),
            opt_sig10(row.true_coverage),
            opt_sig10(row.difference),
            row.retention_failure,
        ));
    }
    out
}

/// Summary CSV with the same conventions as [`rows_to_csv`].
pub fn summary_to_csv(summary: &[SummaryRow]) -> String {
    let mut out = String::from(SUMMARY_CSV_HEADER);
    out.push('\n');
    for row in summary {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            row.buffer_size,
            row.successes,
            row.failures,
            opt_sig10(row.mean_difference),
            opt_sig10(row.sd_difference),
            opt_sig10(row.mean_estimate),
            opt_sig10(row.mean_true_coverage),
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CsvParseError {
    #[error("missing or unrecognized header line")]
    BadHeader,
    #[error("line {line}: expected 7 fields")]
    FieldCount { line: usize },
    #[error("line {line}, field {field}: unparseable value")]
    BadValue { line: usize, field: &'static str },
}

/// Parse CSV produced by [`rows_to_csv`].
pub fn rows_from_csv(text: &str) -> Result<Vec<ExperimentRow>, CsvParseError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == ROWS_CSV_HEADER => {}
        _ => return Err(CsvParseError::BadHeader),
    }
    let mut rows = Vec::new();
    for (index, raw) in lines {
        if raw.is_empty() {
            continue;
        }
        let line = index + 1;
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != 7 {
            return Err(CsvParseError::FieldCount { line });
        }
        let parse_num = |field: &'static str, value: &str| {
            value
                .parse::<f64>()
                .map_err(|_| CsvParseError::BadValue { line, field })
        };
        let parse_opt = |field: &'static str, value: &str| {
            if value.is_empty() {
                Ok(None)
            } else {
                parse_num(field, value).map(Some)
            }
        };
        rows.push(ExperimentRow {
            buffer_size: fields[0].parse().map_err(|_| CsvParseError::BadValue {
                line,
                field: "buffer_size",
            })?,
            replication: fields[1].parse().map_err(|_| CsvParseError::BadValue {
                line,
                field: "replication",
            })?,
            seed: fields[2].parse().map_err(|_| CsvParseError::BadValue {
                line,
                field: "seed",
            })?,
            estimate: parse_opt("estimate", fields[3])?,
            true_coverage: parse_opt("true_coverage", fields[4])?,
            difference: parse_opt("difference", fields[5])?,
            retention_failure: match fields[6] {
                "true" => true,
                "false" => false,
                _ => {
                    return Err(CsvParseError::BadValue {
                        line,
                        field: "retention_failure",
                    })
                }
            },
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{tokenize_str, NormalizationPolicy};

    fn small_corpus() -> Vec<u32> {
        (0..200u32).map(|i| i % 23).collect()
    }

    fn config(sizes: &[usize], reps: u32) -> ExperimentConfig {
        ExperimentConfig {
            buffer_sizes: sizes.to_vec(),
            replications: reps,
            base_seed: 42,
            policy: DenominatorPolicy::RealizedSize,
        }
    }

    #[test]
    fn validation_rejects_bad_configs() {
        let corpus = small_corpus();
        assert_eq!(
            run_experiment(&corpus, &config(&[], 1)).unwrap_err(),
            ConfigError::NoSizes
        );
        assert_eq!(
            run_experiment(&corpus, &config(&[8, 8], 1)).unwrap_err(),
            ConfigError::NotIncreasing {
                previous: 8,
                next: 8
            }
        );
        assert_eq!(
            run_experiment(&corpus, &config(&[4, 2], 1)).unwrap_err(),
            ConfigError::NotIncreasing {
                previous: 4,
                next: 2
            }
        );
        assert_eq!(
            run_experiment(&corpus, &config(&[8], 0)).unwrap_err(),
            ConfigError::NoReplications
        );
        let empty: Vec<u32> = Vec::new();
        assert_eq!(
            run_experiment(&empty, &config(&[8], 1)).unwrap_err(),
            ConfigError::EmptyCorpus
        );
    }

    #[test]
    fn grid_shape_and_row_identity() {
        let corpus = small_corpus();
        let cfg = config(&[8, 16], 5);
        let rows = run_experiment(&corpus, &cfg).unwrap();
        assert_eq!(rows.len(), 10);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.buffer_size, if i < 5 { 8 } else { 16 });
            assert_eq!(row.replication, (i as u32) % 5);
            if let (Some(e), Some(t), Some(d)) = (row.estimate, row.true_coverage, row.difference) {
                assert_eq!(d, e - t);
            } else {
                assert!(row.retention_failure || row.estimate.is_none());
            }
        }
    }

    #[test]
    fn rerun_is_identical_and_serial_matches_parallel() {
        let corpus = small_corpus();
        let cfg = config(&[4, 8, 16], 40);
        let a = run_experiment(&corpus, &cfg).unwrap();
        let b = run_experiment(&corpus, &cfg).unwrap();
        let serial = run_experiment_serial(&corpus, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(rows_to_csv(&a), rows_to_csv(&serial));
    }

    #[test]
    fn interning_preserves_statistics() {
        // Same multiset structure under different label types must give
        // identical rows.
        let words = tokenize_str(
            "uno dos tres uno dos uno cuatro cinco uno dos seis",
            NormalizationPolicy::default(),
        );
        let numbers: Vec<u32> = [0, 1, 2, 0, 1, 0, 3, 4, 0, 1, 5].to_vec();
        let cfg = config(&[4], 25);
        let a = run_experiment(&words, &cfg).unwrap();
        let b = run_experiment(&numbers, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn oversized_buffer_keeps_whole_stream() {
        // Degenerate but legal: the buffer never fills, so the sample is
        // the full stream and the oracle sees full coverage.
        let corpus: Vec<u32> = vec![0, 1, 0, 2, 1, 0, 3, 3, 1, 2];
        let rows = run_experiment(&corpus, &config(&[100], 1)).unwrap();
        assert_eq!(rows.len(), 1);
        let row = rows[0];
        assert_eq!(row.true_coverage, Some(1.0));
        // Hand count: multiplicities are 0:3, 1:3, 2:2, 3:2 — no
        // singletons, so the estimate is 1.
        assert_eq!(row.estimate, Some(1.0));
        assert_eq!(row.difference, Some(0.0));
    }

    #[test]
    fn summarize_means_and_sd() {
        let mk = |buffer_size, replication, difference| ExperimentRow {
            buffer_size,
            replication,
            seed: 0,
            estimate: Some(0.5 + difference),
            true_coverage: Some(0.5),
            difference: Some(difference),
            retention_failure: false,
        };
        let rows = vec![mk(10, 0, 0.01), mk(10, 1, -0.01), mk(20, 0, 0.02)];
        let summary = summarize(&rows);
        assert_eq!(summary.len(), 2);
        assert_eq!(summary[0].buffer_size, 10);
        assert_eq!(summary[0].successes, 2);
        assert_eq!(summary[0].failures, 0);
        assert!((summary[0].mean_difference.unwrap()).abs() < 1e-15);
        let expected_sd = (2.0f64 * 0.0001 / 1.0).sqrt();
        assert!((summary[0].sd_difference.unwrap() - expected_sd).abs() < 1e-12);
        // Single row: sd undefined.
        assert_eq!(summary[1].successes, 1);
        assert_eq!(summary[1].sd_difference, None);
    }

    #[test]
    fn summarize_counts_failures_separately() {
        let failed = ExperimentRow {
            buffer_size: 10,
            replication: 0,
            seed: 1,
            estimate: None,
            true_coverage: None,
            difference: None,
            retention_failure: true,
        };
        let ok = ExperimentRow {
            buffer_size: 10,
            replication: 1,
            seed: 2,
            estimate: Some(0.75),
            true_coverage: Some(0.7),
            difference: Some(0.05),
            retention_failure: false,
        };
        let summary = summarize(&[failed, ok]);
        assert_eq!(summary[0].failures, 1);
        assert_eq!(summary[0].successes, 1);
        assert_eq!(summary[0].mean_difference, Some(0.05));

        let all_failed = summarize(&[failed]);
        assert_eq!(all_failed[0].failures, 1);
        assert_eq!(all_failed[0].mean_difference, None);
        assert_eq!(all_failed[0].mean_estimate, None);
    }

    #[test]
    fn csv_shapes() {
        assert_eq!(rows_to_csv(&[]), format!("{ROWS_CSV_HEADER}\n"));
        let row = ExperimentRow {
            buffer_size: 100,
            replication: 3,
            seed: 17,
            estimate: Some(0.5),
            true_coverage: Some(1.0 / 3.0),
            difference: Some(0.5 - 1.0 / 3.0),
            retention_failure: false,
        };
        let csv = rows_to_csv(&[row]);
        assert_eq!(csv.lines().count(), 2);
        assert!(csv.ends_with('\n'));
        let failed = ExperimentRow {
            estimate: None,
            true_coverage: None,
            difference: None,
            retention_failure: true,
            ..row
        };
        let csv = rows_to_csv(&[failed]);
        assert!(csv.lines().nth(1).unwrap().ends_with(",,,true"));
    }

    #[test]
    fn csv_round_trip_is_stable_at_ten_digits() {
        let corpus = small_corpus();
        let rows = run_experiment(&corpus, &config(&[4, 8], 30)).unwrap();
        let emitted = rows_to_csv(&rows);
        let parsed = rows_from_csv(&emitted).unwrap();
        assert_eq!(rows_to_csv(&parsed), emitted);
        assert_eq!(parsed.len(), rows.len());
    }

    #[test]
    fn csv_parse_rejects_malformed_input() {
        assert_eq!(
            rows_from_csv("nope\n").unwrap_err(),
            CsvParseError::BadHeader
        );
        // Line numbers count from the top of the file; the header is 1.
        let missing = format!("{ROWS_CSV_HEADER}\n1,2,3\n");
        assert_eq!(
            rows_from_csv(&missing).unwrap_err(),
            CsvParseError::FieldCount { line: 2 }
        );
        let bad = format!("{ROWS_CSV_HEADER}\n100,0,7,x,,,false\n");
        assert_eq!(
            rows_from_csv(&bad).unwrap_err(),
            CsvParseError::BadValue {
                line: 2,
                field: "estimate"
            }
        );
    }

    #[test]
    fn sig10_formatting() {
        assert_eq!(format_sig10(0.0), "0");
        assert_eq!(format_sig10(0.5), "0.5000000000");
        assert_eq!(format_sig10(-0.5), "-0.5000000000");
        assert_eq!(format_sig10(2.0 / 3.0), "0.6666666667");
        assert_eq!(format_sig10(137738.0), "137738.0000");
        assert_eq!(format_sig10(1.0e-7), "1.000000000e-7");
        assert_eq!(format_sig10(1.23456789012e12), "1.234567890e12");
        // Idempotent through a parse.
        for &x in &[0.123456789012345, -3.9e-5, 123456.789, 1.0 / 7.0] {
            let s = format_sig10(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(format_sig10(back), s);
        }
    }
}
