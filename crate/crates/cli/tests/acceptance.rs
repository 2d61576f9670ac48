//! Acceptance suite: one test per headline claim, each printing the
//! measured quantities and its pass threshold. The heavyweight experiment
//! (5 buffer sizes x 1000 replications on the bundled corpus) runs once
//! through the actual binary and is shared by the criteria that read it.

use std::collections::HashMap;
use std::io::Write as _;
use std::process::{Command, Output, Stdio};
use std::sync::OnceLock;

use rayon::prelude::*;

use covstream::experiment::{rows_from_csv, summarize, ExperimentRow};
use covstream::rng::derive_seed;
use covstream::{true_coverage, DistinctCounter, SampleResult, Sampler, SamplerConfig};

fn covstream(args: &[&str], stdin: &[u8]) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_covstream"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("spawn covstream");
    let _ = child.stdin.as_mut().expect("piped stdin").write_all(stdin);
    child.wait_with_output().expect("collect output")
}

static PAPER_SHAPE_ROWS: OnceLock<Vec<ExperimentRow>> = OnceLock::new();

const LADDER: [usize; 5] = [100, 250, 500, 1000, 2000];

/// The run named by the error-bound criterion: the shipped ladder, 1000
/// replications, the bundled corpus, the documented default seed.
fn paper_shape_rows() -> &'static [ExperimentRow] {
    PAPER_SHAPE_ROWS.get_or_init(|| {
        let dir = tempfile::tempdir().expect("tempdir");
        let csv = dir.path().join("rows.csv");
        let output = covstream(
            &[
                "simulate",
                "--sizes",
                "100,250,500,1000,2000",
                "--reps",
                "1000",
                "--seed",
                "42",
                "--csv",
                csv.to_str().unwrap(),
            ],
            b"",
        );
        assert!(
            output.status.success(),
            "simulate failed: {}",
            String::from_utf8_lossy(&output.stderr)
        );
        let text = std::fs::read_to_string(&csv).expect("read rows.csv");
        rows_from_csv(&text).expect("parse rows.csv")
    })
}

#[test]
fn criterion_1_mean_absolute_error_below_0_06() {
    let rows = paper_shape_rows();
    assert_eq!(rows.len(), 5 * 1000, "exactly |sizes| x reps rows");
    for &size in &LADDER {
        let diffs: Vec<f64> = rows
            .iter()
            .filter(|row| row.buffer_size == size)
            .filter_map(|row| row.difference)
            .collect();
        assert_eq!(
            diffs.len(),
            1000,
            "no failed replications expected at n={size}"
        );
        let mean_abs = diffs.iter().map(|d| d.abs()).sum::<f64>() / diffs.len() as f64;
        println!("criterion 1: n={size:<5} mean|estimate-true| = {mean_abs:.4} (< 0.06)");
        assert!(
            mean_abs < 0.06,
            "mean absolute error {mean_abs:.4} at n={size} breaches 0.06"
        );
    }
}

#[test]
fn criterion_2_spread_shrinks_with_buffer_size() {
    let summary = summarize(paper_shape_rows());
    let sds: Vec<f64> = summary
        .iter()
        .map(|row| row.sd_difference.expect("1000 successes per size"))
        .collect();
    for (row, sd) in summary.iter().zip(&sds) {
        println!(
            "criterion 2: n={:<5} sd(difference) = {sd:.4}",
            row.buffer_size
        );
    }
    assert!(
        sds[4] < sds[0],
        "sd at n=2000 ({:.4}) is not below sd at n=100 ({:.4})",
        sds[4],
        sds[0]
    );
    let sizes: Vec<f64> = LADDER.iter().map(|&n| n as f64).collect();
    let rho = spearman(&sizes, &sds);
    println!("criterion 2: spearman(n, sd) = {rho:.3} (< 0)");
    assert!(rho < 0.0, "spearman correlation {rho:.3} is not negative");
}

fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    fn ranks(values: &[f64]) -> Vec<f64> {
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
        let mut out = vec![0.0; values.len()];
        for (rank, &index) in order.iter().enumerate() {
            out[index] = rank as f64;
        }
        out
    }
    let rx = ranks(xs);
    let ry = ranks(ys);
    let n = xs.len() as f64;
    let mean = (n - 1.0) / 2.0;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        cov += (a - mean) * (b - mean);
        var_x += (a - mean).powi(2);
        var_y += (b - mean).powi(2);
    }
    cov / (var_x * var_y).sqrt()
}

#[test]
fn criterion_3_uniform_inclusion_across_positions() {
    let stream_len = 50usize;
    let runs = 10_000u64;
    let capacity = 8usize;
    let mut counts = vec![0u64; stream_len];
    let mut failures = 0u64;
    for rep in 0..runs {
        let mut sampler = Sampler::new(SamplerConfig {
            capacity,
            seed: derive_seed(0xACC3, 3, rep),
        })
        .unwrap();
        if sampler.observe_all(0..stream_len as u64).is_err() {
            failures += 1;
            continue;
        }
        for entry in sampler.finalize().entries() {
            counts[entry.stream_index as usize] += 1;
        }
    }
    let successes = (runs - failures) as f64;
    let pooled = counts.iter().sum::<u64>() as f64 / (successes * stream_len as f64);
    let se = (pooled * (1.0 - pooled) / successes).sqrt();
    let worst = counts
        .iter()
        .map(|&c| (c as f64 / successes - pooled).abs())
        .fold(0.0f64, f64::max);
    println!(
        "criterion 3: max |freq - pooled| = {worst:.5} vs 4 se = {:.5} \
         (pooled {pooled:.4}, {failures} failed runs excluded)",
        4.0 * se
    );
    assert!(
        worst <= 4.0 * se,
        "a stream position deviates {worst:.5} from the pooled mean (allowed {:.5})",
        4.0 * se
    );
}

/// Outcome of one sampler run at the micro scale.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
struct Outcome {
    size: usize,
    level: u32,
    failed: bool,
}

fn binomial(n: usize, k: usize) -> u64 {
    let mut result = 1u64;
    for i in 0..k {
        result = result * (n - i) as u64 / (i + 1) as u64;
    }
    result
}

/// Exact outcome distribution of the sampling loop, by enumeration over
/// admission outcomes and retention-flip counts. Labels play no role in
/// the loop, so the state is just (buffer length, level). Every
/// probability is a dyadic rational far inside f64 exactness, so the
/// arithmetic below is exact.
fn exact_outcome_distribution(stream_len: usize, capacity: usize) -> HashMap<Outcome, f64> {
    let mut live: HashMap<(usize, u32), f64> = HashMap::new();
    live.insert((0, 0), 1.0);
    let mut dead: HashMap<u32, f64> = HashMap::new();
    for _ in 0..stream_len {
        let mut next: HashMap<(usize, u32), f64> = HashMap::new();
        for (&(len, level), &mass) in &live {
            let p_admit = 0.5f64.powi(level as i32);
            if p_admit < 1.0 {
                *next.entry((len, level)).or_insert(0.0) += mass * (1.0 - p_admit);
            }
            let admitted = mass * p_admit;
            if len + 1 < capacity {
                *next.entry((len + 1, level)).or_insert(0.0) += admitted;
            } else {
                let per_subset = 0.5f64.powi(capacity as i32);
                for survivors in 0..=capacity {
                    let share = admitted * binomial(capacity, survivors) as f64 * per_subset;
                    if survivors == capacity {
                        *dead.entry(level + 1).or_insert(0.0) += share;
                    } else {
                        *next.entry((survivors, level + 1)).or_insert(0.0) += share;
                    }
                }
            }
        }
        live = next;
    }
    let mut outcomes: HashMap<Outcome, f64> = HashMap::new();
    for ((size, level), mass) in live {
        *outcomes
            .entry(Outcome {
                size,
                level,
                failed: false,
            })
            .or_insert(0.0) += mass;
    }
    for (level, mass) in dead {
        *outcomes
            .entry(Outcome {
                size: capacity,
                level,
                failed: true,
            })
            .or_insert(0.0) += mass;
    }
    let total: f64 = outcomes.values().sum();
    assert_eq!(total, 1.0, "dyadic masses must sum exactly to 1");
    outcomes
}

#[test]
fn criterion_4_micro_oracle_distribution_match() {
    let capacity = 2usize;
    let runs = 100_000u64;
    let mut checked_outcomes = 0usize;
    for stream_len in 0..=4usize {
        let exact = exact_outcome_distribution(stream_len, capacity);
        // Every label pattern of this length; the loop ignores labels, so
        // these all share one exact distribution.
        for pattern in 0..(1u32 << stream_len) {
            let stream: Vec<char> = (0..stream_len)
                .map(|i| if pattern >> i & 1 == 0 { 'a' } else { 'b' })
                .collect();
            let mut observed: HashMap<Outcome, u64> = HashMap::new();
            for rep in 0..runs {
                let mut sampler = Sampler::new(SamplerConfig {
                    capacity,
                    seed: derive_seed(0x04AC, u64::from(pattern) << 3 | stream_len as u64, rep),
                })
                .unwrap();
                let outcome = match sampler.observe_all(stream.iter().copied()) {
                    Ok(()) => {
                        let result = sampler.finalize();
                        Outcome {
                            size: result.realized_size(),
                            level: result.level(),
                            failed: false,
                        }
                    }
                    Err(err) => Outcome {
                        size: capacity,
                        level: err.failure.level,
                        failed: true,
                    },
                };
                *observed.entry(outcome).or_insert(0) += 1;
            }
            for (outcome, &count) in &observed {
                assert!(
                    exact.contains_key(outcome),
                    "stream {stream:?}: observed impossible outcome {outcome:?}"
                );
                let _ = count;
            }
            for (outcome, &probability) in &exact {
                let frequency = observed.get(outcome).copied().unwrap_or(0) as f64 / runs as f64;
                let se = (probability * (1.0 - probability) / runs as f64).sqrt();
                assert!(
                    (frequency - probability).abs() <= 4.0 * se,
                    "stream {stream:?} outcome {outcome:?}: frequency {frequency:.5} vs \
                     exact {probability:.5} (allowed 4 se = {:.5})",
                    4.0 * se
                );
                checked_outcomes += 1;
            }
        }
    }
    println!(
        "criterion 4: {checked_outcomes} (stream, outcome) pairs within 4 se of the \
         enumerated distribution at R = {runs}"
    );
}

#[test]
fn criterion_5_distinct_count_accuracy() {
    let distinct = 1000u32;
    let capacity = 64usize;
    let runs = 1000u64;
    let mut sum = 0.0;
    let mut failures = 0u64;
    for rep in 0..runs {
        let mut counter = DistinctCounter::new(SamplerConfig {
            capacity,
            seed: derive_seed(0x0D15, 5, rep),
        })
        .unwrap();
        match counter.observe_all(0..distinct) {
            Ok(()) => sum += counter.estimate(),
            Err(_) => failures += 1,
        }
    }
    assert_eq!(
        failures, 0,
        "capacity-64 retention failure has probability 2^-64"
    );
    let mean = sum / runs as f64;
    println!("criterion 5: mean distinct estimate {mean:.1} for 1000 labels (within 5%)");
    assert!(
        (mean - 1000.0).abs() < 50.0,
        "mean estimate {mean:.1} is more than 5% from 1000"
    );
}

/// Brute-force coverage: per stream position, a linear scan of the sample.
fn brute_force_coverage(stream: &[u8], sample: &SampleResult<u8>) -> (u64, u64) {
    let mut covered = 0u64;
    for &position in stream {
        if sample.entries().iter().any(|entry| entry.token == position) {
            covered += 1;
        }
    }
    (covered, stream.len() as u64)
}

/// Builds a sample holding exactly `tokens`: a buffer that never fills
/// admits everything.
fn sample_holding(tokens: &[u8]) -> SampleResult<u8> {
    let mut sampler = Sampler::new(SamplerConfig {
        capacity: tokens.len() + 1,
        seed: 0,
    })
    .unwrap();
    sampler.observe_all(tokens.iter().copied()).unwrap();
    sampler.finalize()
}

#[test]
fn criterion_6_exact_oracle_matches_brute_force() {
    let alphabet = 4u64;
    let max_len = 12u32;
    let mut total_checked = 0u64;
    for len in 1..=max_len {
        let stream_count = alphabet.pow(len);
        let checked = (0..stream_count)
            .into_par_iter()
            .map(|code| {
                let mut stream = [0u8; 12];
                let mut digits = code;
                for slot in stream.iter_mut().take(len as usize) {
                    *slot = (digits % alphabet) as u8;
                    digits /= alphabet;
                }
                let stream = &stream[..len as usize];

                let alternate: Vec<u8> = stream.iter().copied().step_by(2).collect();
                let mut samples = vec![
                    sample_holding(stream),
                    sample_holding(&alternate),
                    sample_holding(&[]),
                ];
                if len <= 8 {
                    // One genuinely sampled buffer as well.
                    let mut sampler = Sampler::new(SamplerConfig {
                        capacity: 3,
                        seed: derive_seed(0x06AC, u64::from(len), code),
                    })
                    .unwrap();
                    if sampler.observe_all(stream.iter().copied()).is_ok() {
                        samples.push(sampler.finalize());
                    }
                }

                let mut checked = 0u64;
                for sample in &samples {
                    let (covered, length) = brute_force_coverage(stream, sample);
                    let oracle = true_coverage(stream.iter(), sample).unwrap();
                    assert_eq!(oracle.covered_count, covered, "stream {stream:?}");
                    assert_eq!(oracle.stream_length, length);
                    assert_eq!(oracle.value(), covered as f64 / length as f64);
                    checked += 1;
                }
                checked
            })
            .sum::<u64>();
        total_checked += checked;
    }
    println!(
        "criterion 6: exact oracle matched brute force on {total_checked} (stream, sample) \
         pairs over all streams of length <= 12 on a 4-label alphabet"
    );
}

#[test]
fn criterion_7_byte_identical_reruns() {
    // estimate and distinct over stdin.
    let snippet = include_str!("../../../corpus/zipf-137k.txt")
        .lines()
        .take(200)
        .collect::<Vec<_>>()
        .join("\n");
    for subcommand in ["estimate", "distinct"] {
        let args = [subcommand, "--capacity", "64", "--seed", "5"];
        let first = covstream(&args, snippet.as_bytes());
        let second = covstream(&args, snippet.as_bytes());
        assert!(first.status.success());
        assert_eq!(
            first.stdout, second.stdout,
            "{subcommand} stdout differs between identical runs"
        );
    }

    // oracle over a file.
    let dir = tempfile::tempdir().unwrap();
    let stream_path = dir.path().join("stream.txt");
    std::fs::write(&stream_path, &snippet).unwrap();
    let args = [
        "oracle",
        "--capacity",
        "32",
        "--seed",
        "5",
        "--input",
        stream_path.to_str().unwrap(),
    ];
    let first = covstream(&args, b"");
    let second = covstream(&args, b"");
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout, "oracle stdout differs");

    // simulate: stdout, CSV, and SVG bytes.
    let run = |tag: &str| {
        let csv = dir.path().join(format!("rows-{tag}.csv"));
        let svg = dir.path().join(format!("chart-{tag}.svg"));
        let output = covstream(
            &[
                "simulate",
                "--sizes",
                "50,100",
                "--reps",
                "20",
                "--seed",
                "9",
                "--csv",
                csv.to_str().unwrap(),
                "--plot",
                svg.to_str().unwrap(),
            ],
            b"",
        );
        assert!(output.status.success());
        (
            output.stdout,
            std::fs::read(&csv).unwrap(),
            std::fs::read(&svg).unwrap(),
        )
    };
    let (stdout_a, csv_a, svg_a) = run("a");
    let (stdout_b, csv_b, svg_b) = run("b");
    assert_eq!(stdout_a, stdout_b, "simulate stdout differs");
    assert_eq!(csv_a, csv_b, "simulate CSV differs");
    assert_eq!(svg_a, svg_b, "simulate SVG differs");
    println!("criterion 7: estimate, distinct, oracle, and simulate reruns are byte-identical");
}

#[test]
fn criterion_8_bounded_sample_storage() {
    let capacity = 1000usize;
    let stream_len = 10_000_000u64;

    // Library level: the instrumented peak never passes capacity.
    let mut sampler = Sampler::new(SamplerConfig {
        capacity,
        seed: 0xB0B,
    })
    .unwrap();
    sampler
        .observe_all((0..stream_len).map(|i| i % 50_000))
        .expect("capacity-1000 retention failure has probability 2^-1000");
    assert!(sampler.peak_len() <= capacity);
    assert_eq!(sampler.observed(), stream_len);
    let peak = sampler.peak_len();

    // End to end: the binary streams the same size of input and reports
    // the same bound.
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("synthetic.txt");
    {
        let file = std::fs::File::create(&path).unwrap();
        let mut writer = std::io::BufWriter::new(file);
        for i in 0..stream_len {
            writeln!(writer, "w{}", i % 50_000).unwrap();
        }
    }
    let output = covstream(
        &[
            "estimate",
            "--pretokenized",
            "--capacity",
            "1000",
            "--seed",
            "7",
            "--input",
            path.to_str().unwrap(),
        ],
        b"",
    );
    assert!(output.status.success());
    let report = String::from_utf8(output.stdout).unwrap();
    let field = |key: &str| -> u64 {
        report
            .lines()
            .find(|line| line.starts_with(key))
            .and_then(|line| line.split_whitespace().nth(1))
            .unwrap_or_else(|| panic!("missing {key} in:\n{report}"))
            .parse()
            .unwrap()
    };
    assert_eq!(field("observed"), stream_len);
    let reported_peak = field("peak_buffer");
    assert!(reported_peak <= capacity as u64);
    println!(
        "criterion 8: peak buffer {peak} (library) / {reported_peak} (binary) entries \
         holding <= {capacity} while streaming {stream_len} tokens"
    );
}
