//! Browser demo bindings: run the sampler, the distinct counter, and a
//! small replicated experiment on pasted text, entirely client-side.
//!
//! Each export returns a JSON string (`{"ok": ...}` or
//! `{"error": "..."}`) so the page needs nothing beyond `JSON.parse`.
//! The text fits in memory in a browser session anyway, so the demo also
//! reports the exact true coverage next to every estimate.

use serde::Serialize;
use serde_json::json;
use wasm_bindgen::prelude::*;

use covstream::experiment::{run_experiment_serial, summarize, ExperimentConfig, SummaryRow};
use covstream::plot::{self, PlotKind};
use covstream::rng::RNG_ALGORITHM;
use covstream::{
    estimate_coverage, tokenize_str, true_coverage, DenominatorPolicy, DistinctCounter,
    NormalizationPolicy, Sampler, SamplerConfig, Token,
};

fn to_json(result: Result<serde_json::Value, String>) -> String {
    match result {
        Ok(value) => json!({ "ok": value }).to_string(),
        Err(message) => json!({ "error": message }).to_string(),
    }
}

fn parse_policy(capacity_denominator: bool) -> DenominatorPolicy {
    if capacity_denominator {
        DenominatorPolicy::Capacity
    } else {
        DenominatorPolicy::RealizedSize
    }
}

fn tokens_of(text: &str) -> Result<Vec<Token>, String> {
    let tokens = tokenize_str(text, NormalizationPolicy::default());
    if tokens.is_empty() {
        return Err("the text contains no tokens".to_string());
    }
    Ok(tokens)
}

fn exact_distinct(tokens: &[Token]) -> usize {
    let mut labels: Vec<&str> = tokens.iter().map(Token::as_str).collect();
    labels.sort_unstable();
    labels.dedup();
    labels.len()
}

#[derive(Serialize)]
struct SampleReport {
    estimate: f64,
    true_coverage: f64,
    difference: f64,
    singletons: usize,
    sample_size: usize,
    level: u32,
    observed: u64,
    denominator: usize,
    policy: String,
    stream_length: usize,
    stream_distinct: usize,
    seed: u64,
    rng: &'static str,
}

fn run_estimate(
    text: &str,
    capacity: usize,
    seed: u64,
    capacity_denominator: bool,
) -> Result<serde_json::Value, String> {
    let tokens = tokens_of(text)?;
    let policy = parse_policy(capacity_denominator);
    let mut sampler = Sampler::new(SamplerConfig { capacity, seed }).map_err(|e| e.to_string())?;
    sampler
        .observe_all(tokens.iter().cloned())
        .map_err(|e| e.to_string())?;
    let sample = sampler.finalize();
    let estimate = estimate_coverage(&sample, policy).map_err(|e| e.to_string())?;
    let truth = true_coverage(tokens.iter(), &sample).map_err(|e| e.to_string())?;
    let report = SampleReport {
        estimate: estimate.estimate,
        true_coverage: truth.value(),
        difference: estimate.estimate - truth.value(),
        singletons: estimate.singletons,
        sample_size: sample.realized_size(),
        level: sample.level(),
        observed: sample.observed(),
        denominator: estimate.denominator,
        policy: estimate.policy.to_string(),
        stream_length: tokens.len(),
        stream_distinct: exact_distinct(&tokens),
        seed,
        rng: RNG_ALGORITHM,
    };
    serde_json::to_value(report).map_err(|e| e.to_string())
}

fn run_distinct(text: &str, capacity: usize, seed: u64) -> Result<serde_json::Value, String> {
    let tokens = tokens_of(text)?;
    let mut counter =
        DistinctCounter::new(SamplerConfig { capacity, seed }).map_err(|e| e.to_string())?;
    counter
        .observe_all(tokens.iter().cloned())
        .map_err(|e| e.to_string())?;
    Ok(json!({
        "estimate": counter.estimate(),
        "exact_distinct": exact_distinct(&tokens),
        "level": counter.level(),
        "buffer_entries": counter.len(),
        "observed": counter.observed(),
        "seed": seed,
        "rng": RNG_ALGORITHM,
    }))
}

#[derive(Serialize)]
struct ExperimentReport {
    summary: Vec<SummaryRow>,
    svg: String,
    stream_length: usize,
    replications: u32,
    seed: u64,
    rng: &'static str,
}

fn run_experiment_demo(
    text: &str,
    sizes_csv: &str,
    replications: u32,
    seed: u64,
    error_bars: bool,
    capacity_denominator: bool,
) -> Result<serde_json::Value, String> {
    let tokens = tokens_of(text)?;
    let buffer_sizes: Vec<usize> = sizes_csv
        .split(',')
        .map(|part| part.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| format!("buffer sizes {sizes_csv:?} are not comma-separated integers"))?;
    let config = ExperimentConfig {
        buffer_sizes,
        replications,
        base_seed: seed,
        policy: parse_policy(capacity_denominator),
    };
    let rows = run_experiment_serial(&tokens, &config).map_err(|e| e.to_string())?;
    let summary = summarize(&rows);
    let kind = if error_bars {
        PlotKind::ErrorBars
    } else {
        PlotKind::Scatter
    };
    let svg = plot::render(&summary, kind);
    let report = ExperimentReport {
        summary,
        svg,
        stream_length: tokens.len(),
        replications,
        seed,
        rng: RNG_ALGORITHM,
    };
    serde_json::to_value(report).map_err(|e| e.to_string())
}

/// Sample the pasted text once and report the coverage estimate alongside
/// the exact truth.
#[wasm_bindgen]
pub fn estimate_text(text: &str, capacity: usize, seed: u64, capacity_denominator: bool) -> String {
    to_json(run_estimate(text, capacity, seed, capacity_denominator))
}

/// Distinct-label estimate for the pasted text, next to the exact count.
#[wasm_bindgen]
pub fn distinct_text(text: &str, capacity: usize, seed: u64) -> String {
    to_json(run_distinct(text, capacity, seed))
}

/// Replicated experiment over a ladder of buffer sizes; returns summary
/// rows plus a ready-to-inject SVG chart.
#[wasm_bindgen]
pub fn experiment_text(
    text: &str,
    sizes_csv: &str,
    replications: u32,
    seed: u64,
    error_bars: bool,
    capacity_denominator: bool,
) -> String {
    to_json(run_experiment_demo(
        text,
        sizes_csv,
        replications,
        seed,
        error_bars,
        capacity_denominator,
    ))
}
