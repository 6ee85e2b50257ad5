//! Dataset-level analysis: turn a set of transcript records into a report
//! with a benchmark summary, mode counts, per-level no-thinking rates, and
//! keyword rates per reasoning mode.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{
    classify_mode, efficiency_f1, keyword_profile, no_thinking_rate_by_level, summarize_benchmark,
    AnalyticsError, BenchmarkSummary, Binning, Lexicon, Mode, RolloutSample, Transcript,
};

/// One rollout as read from transcript JSONL input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub id: String,
    pub problem_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_kind: Option<String>,
    pub response_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_count: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correct: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub difficulty: Option<f64>,
}

/// Analysis results for one dataset of transcripts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetReport {
    pub transcripts: usize,
    pub malformed: usize,
    pub think: usize,
    pub no_think: usize,
    pub thinking_rate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<BenchmarkSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary_notice: Option<String>,
    pub token_counts_approximate: bool,
    /// Difficulty level -> no-thinking rate; levels without classifiable
    /// transcripts are absent.
    pub no_thinking_rate_by_level: BTreeMap<usize, f64>,
    /// Reasoning mode -> category -> keyword rate per 1,000 tokens.
    pub keyword_rates: BTreeMap<String, BTreeMap<String, f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ef1: Option<f64>,
}

/// The two ways of aggregating Efficiency-F1 across benchmarks: from the
/// averaged accuracy/length inputs, and as the mean of per-benchmark
/// scores. Reported side by side since published tables are ambiguous
/// about which one a given row uses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ef1Aggregations {
    pub from_averages: f64,
    pub mean_of_per_benchmark: f64,
}

impl Ef1Aggregations {
    /// `rows` holds per-benchmark (method, standard, no-thinking) summaries.
    pub fn compute(
        rows: &[(BenchmarkSummary, BenchmarkSummary, BenchmarkSummary)],
    ) -> Result<Self, AnalyticsError> {
        if rows.is_empty() {
            return Err(AnalyticsError::NoSamples);
        }
        let n = rows.len() as f64;
        let avg = |f: &dyn Fn(&(BenchmarkSummary, BenchmarkSummary, BenchmarkSummary)) -> f64| {
            rows.iter().map(f).sum::<f64>() / n
        };
        let from_averages = efficiency_f1(
            avg(&|r| r.0.accuracy),
            avg(&|r| r.0.mean_tokens),
            avg(&|r| r.1.accuracy),
            avg(&|r| r.1.mean_tokens),
            avg(&|r| r.2.accuracy),
            avg(&|r| r.2.mean_tokens),
        )?;
        let mut per = Vec::with_capacity(rows.len());
        for (method, std, no) in rows {
            per.push(efficiency_f1(
                method.accuracy,
                method.mean_tokens,
                std.accuracy,
                std.mean_tokens,
                no.accuracy,
                no.mean_tokens,
            )?);
        }
        Ok(Self {
            from_averages,
            mean_of_per_benchmark: per.iter().sum::<f64>() / n,
        })
    }
}

/// Analyze one dataset of transcripts.
///
/// Difficulty levels are derived from per-problem pass rates when
/// correctness flags are present (the benchmark summary also requires
/// them); transcripts are classified with the given no-think threshold.
pub fn analyze_dataset(
    records: &[TranscriptRecord],
    tau: usize,
    levels: usize,
    binning: Binning,
    lexicon: &Lexicon,
    baselines: Option<(BenchmarkSummary, BenchmarkSummary)>,
) -> Result<DatasetReport, AnalyticsError> {
    let parsed: Vec<(Transcript, &TranscriptRecord)> = records
        .iter()
        .map(|r| {
            (
                Transcript::parse(
                    r.id.clone(),
                    r.response_text.clone(),
                    r.token_count,
                    r.correct,
                    r.difficulty,
                ),
                r,
            )
        })
        .collect();
    let modes: Vec<Mode> = parsed.iter().map(|(t, _)| classify_mode(t, tau)).collect();

    let malformed = modes.iter().filter(|m| **m == Mode::Malformed).count();
    let think = modes.iter().filter(|m| **m == Mode::Think).count();
    let no_think = modes.iter().filter(|m| **m == Mode::NoThink).count();
    let classifiable = think + no_think;
    let thinking_rate = if classifiable > 0 {
        think as f64 / classifiable as f64
    } else {
        0.0
    };

    let token_counts_approximate = parsed.iter().any(|(t, _)| t.token_count.is_none());

    // Benchmark summary and E-F1 need correctness flags on every rollout.
    let (summary, summary_notice) = if parsed.iter().all(|(t, _)| t.correct.is_some()) {
        let samples: Vec<RolloutSample> = parsed
            .iter()
            .map(|(t, r)| RolloutSample {
                id: t.id.clone(),
                problem_id: r.problem_id.clone(),
                correct: t.correct,
                tokens: t.tokens(),
            })
            .collect();
        (Some(summarize_benchmark(&samples)?), None)
    } else {
        (
            None,
            Some("correctness flags missing; summary and E-F1 skipped".to_string()),
        )
    };

    let ef1 = match (&summary, baselines) {
        (Some(s), Some((std, no))) => Some(efficiency_f1(
            s.accuracy,
            s.mean_tokens,
            std.accuracy,
            std.mean_tokens,
            no.accuracy,
            no.mean_tokens,
        )?),
        _ => None,
    };

    // Per-problem pass rates drive the difficulty levels.
    let by_level = if summary.is_some() {
        let mut per_problem: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
        for (t, r) in &parsed {
            let entry = per_problem.entry(r.problem_id.as_str()).or_insert((0, 0));
            entry.1 += 1;
            if t.correct == Some(true) {
                entry.0 += 1;
            }
        }
        let problems: Vec<&str> = per_problem.keys().copied().collect();
        let rates: Vec<f64> = per_problem
            .values()
            .map(|&(c, n)| c as f64 / n as f64)
            .collect();
        let assigned = binning.assign(&rates, levels)?;
        let level_of: BTreeMap<&str, usize> = problems
            .iter()
            .copied()
            .zip(assigned.iter().copied())
            .collect();
        let classified: Vec<(usize, Mode)> = parsed
            .iter()
            .zip(&modes)
            .map(|((_, r), &m)| (level_of[r.problem_id.as_str()], m))
            .collect();
        no_thinking_rate_by_level(&classified)
    } else {
        BTreeMap::new()
    };

    // Keyword rates over the concatenated responses of each mode.
    let mut keyword_rates = BTreeMap::new();
    for (label, mode) in [("think", Mode::Think), ("no_think", Mode::NoThink)] {
        let text: String = parsed
            .iter()
            .zip(&modes)
            .filter(|(_, &m)| m == mode)
            .map(|((t, _), _)| t.response_text.as_str())
            .collect::<Vec<_>>()
            .join("\n");
        keyword_rates.insert(label.to_string(), keyword_profile(&text, lexicon));
    }

    Ok(DatasetReport {
        transcripts: records.len(),
        malformed,
        think,
        no_think,
        thinking_rate,
        summary,
        summary_notice,
        token_counts_approximate,
        no_thinking_rate_by_level: by_level,
        keyword_rates,
        ef1,
    })
}
