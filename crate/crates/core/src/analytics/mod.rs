//! Transcript analytics: prompt construction, think-span parsing,
//! reasoning-mode classification, difficulty bucketing, the Efficiency-F1
//! metric, and benchmark summaries.
//!
//! Everything operates on plain transcripts, so the same code applies to
//! real model outputs supplied as data and to surrogate outputs.

mod keywords;
mod report;

pub use keywords::{keyword_profile, Lexicon};
pub use report::{analyze_dataset, DatasetReport, Ef1Aggregations, TranscriptRecord};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AnalyticsError {
    #[error("degenerate baselines: {0}")]
    DegenerateBaselines(String),
    #[error("pass rate {0} outside [0,1]")]
    InvalidPassRate(f64),
    #[error("levels must be >= 2, got {0}")]
    InvalidLevels(usize),
    #[error("transcripts missing correctness flags: {0:?}")]
    MissingCorrectFlags(Vec<String>),
    #[error("no samples to summarize")]
    NoSamples,
}

/// The prompt suffixes under study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptVariant {
    Standard,
    Ellipsis,
    NoThinking,
    ForcedNoThink,
    Tbd,
}

/// Byte-exact prompt suffix for each variant.
///
/// The ellipsis suffix leaves the mode choice to the model; the forced
/// variant closes the think span immediately. The TBD variant prefixes the
/// ellipsis suffix with an instruction asking the model to decide whether
/// to keep thinking based on difficulty.
pub fn build_prompt(kind: PromptVariant) -> &'static str {
    match kind {
        PromptVariant::Standard => "<think>\n",
        PromptVariant::Ellipsis => "<think>\n...\n",
        PromptVariant::NoThinking => "<think>\n</think>\n\n",
        PromptVariant::ForcedNoThink => "<think>\n...\n</think>\n\n",
        PromptVariant::Tbd => {
            "Let's think step by step and output the final answer within \\boxed{}. \
             Please decide whether to continue thinking based on the difficulty of the question.\n\
             <think>\n...\n"
        }
    }
}

/// Reasoning mode of a parsed transcript.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Think,
    NoThink,
    Malformed,
}

/// A response split into its think span and answer span.
///
/// `think_span` is the text between the opening think tag (when present;
/// responses generated from a prompt that already supplied the tag start
/// directly with think content) and the closing tag. A transcript with no
/// closing tag is flagged malformed and has an empty answer span.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub id: String,
    pub response_text: String,
    pub token_count: Option<u64>,
    pub correct: Option<bool>,
    pub difficulty: Option<f64>,
    pub think_span: String,
    pub answer_span: String,
    pub malformed: bool,
    opening_tag: bool,
}

const OPEN_TAG: &str = "<think>";
const CLOSE_TAG: &str = "</think>";

impl Transcript {
    pub fn parse(
        id: impl Into<String>,
        response_text: impl Into<String>,
        token_count: Option<u64>,
        correct: Option<bool>,
        difficulty: Option<f64>,
    ) -> Self {
        let response_text = response_text.into();
        let opening_tag = response_text.starts_with(OPEN_TAG);
        let content_start = if opening_tag { OPEN_TAG.len() } else { 0 };
        let (think_span, answer_span, malformed) =
            match response_text[content_start..].find(CLOSE_TAG) {
                Some(rel) => {
                    let close = content_start + rel;
                    (
                        response_text[content_start..close].to_string(),
                        response_text[close + CLOSE_TAG.len()..].to_string(),
                        false,
                    )
                }
                None => (
                    response_text[content_start..].to_string(),
                    String::new(),
                    true,
                ),
            };
        Self {
            id: id.into(),
            response_text,
            token_count,
            correct,
            difficulty,
            think_span,
            answer_span,
            malformed,
            opening_tag,
        }
    }

    /// Rebuild the original response bytes from the parsed spans.
    pub fn reconstruct(&self) -> String {
        let mut s = String::with_capacity(self.response_text.len());
        if self.opening_tag {
            s.push_str(OPEN_TAG);
        }
        s.push_str(&self.think_span);
        if !self.malformed {
            s.push_str(CLOSE_TAG);
        }
        s.push_str(&self.answer_span);
        s
    }

    /// Token count, falling back to a whitespace word count when no model
    /// tokenizer count was supplied.
    pub fn tokens(&self) -> f64 {
        match self.token_count {
            Some(n) => n as f64,
            None => self.response_text.split_whitespace().count() as f64,
        }
    }
}

/// Classify a transcript's reasoning mode: the think span counts as
/// no-thinking when, after stripping whitespace and ellipsis dots, at most
/// `tau` tokens remain (`tau = 0` by default).
pub fn classify_mode(t: &Transcript, tau: usize) -> Mode {
    if t.malformed {
        return Mode::Malformed;
    }
    let stripped = t.think_span.replace('.', "");
    if stripped.split_whitespace().count() <= tau {
        Mode::NoThink
    } else {
        Mode::Think
    }
}

/// Efficiency-F1 in percent: the harmonic mean of the normalized accuracy
/// gain and token reduction relative to the standard and no-thinking
/// baselines, gated to zero unless the method beats the standard baseline
/// on both axes.
pub fn efficiency_f1(
    acc: f64,
    len: f64,
    acc_std: f64,
    len_std: f64,
    acc_no: f64,
    len_no: f64,
) -> Result<f64, AnalyticsError> {
    if !(acc_std > acc_no) {
        return Err(AnalyticsError::DegenerateBaselines(format!(
            "standard accuracy {acc_std} must exceed no-thinking accuracy {acc_no}"
        )));
    }
    if !(len_std > len_no) {
        return Err(AnalyticsError::DegenerateBaselines(format!(
            "standard length {len_std} must exceed no-thinking length {len_no}"
        )));
    }
    if !(acc > acc_std && len < len_std) {
        return Ok(0.0);
    }
    let d_acc = (acc - acc_std) / (acc_std - acc_no);
    let d_len = (len_std - len) / (len_std - len_no);
    Ok(100.0 * 2.0 * d_acc * d_len / (d_acc + d_len))
}

/// Map per-problem pass rates onto difficulty levels; higher accuracy means
/// lower difficulty, with equal-width bins on the pass rate.
pub fn difficulty_buckets(pass_rates: &[f64], levels: usize) -> Result<Vec<usize>, AnalyticsError> {
    if levels < 2 {
        return Err(AnalyticsError::InvalidLevels(levels));
    }
    pass_rates
        .iter()
        .map(|&p| {
            if !(0.0..=1.0).contains(&p) {
                return Err(AnalyticsError::InvalidPassRate(p));
            }
            let bin = ((p * levels as f64).floor() as usize).min(levels - 1);
            Ok(levels - 1 - bin)
        })
        .collect()
}

/// Quantile variant of [`difficulty_buckets`]: levels hold near-equal
/// problem counts, assigned by pass-rate rank (highest pass rates land in
/// level 0). Problems with equal pass rates near a quantile boundary can
/// fall on either side of it.
pub fn difficulty_buckets_quantile(
    pass_rates: &[f64],
    levels: usize,
) -> Result<Vec<usize>, AnalyticsError> {
    if levels < 2 {
        return Err(AnalyticsError::InvalidLevels(levels));
    }
    for &p in pass_rates {
        if !(0.0..=1.0).contains(&p) {
            return Err(AnalyticsError::InvalidPassRate(p));
        }
    }
    let n = pass_rates.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| pass_rates[b].partial_cmp(&pass_rates[a]).unwrap());
    let mut assigned = vec![0usize; n];
    for (rank, &i) in order.iter().enumerate() {
        assigned[i] = (rank * levels / n.max(1)).min(levels - 1);
    }
    Ok(assigned)
}

/// How per-problem pass rates are turned into difficulty levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Binning {
    /// Equal-width bins on the pass rate.
    #[default]
    EqualWidth,
    /// Near-equal problem counts per level.
    Quantile,
}

impl Binning {
    pub fn assign(&self, pass_rates: &[f64], levels: usize) -> Result<Vec<usize>, AnalyticsError> {
        match self {
            Binning::EqualWidth => difficulty_buckets(pass_rates, levels),
            Binning::Quantile => difficulty_buckets_quantile(pass_rates, levels),
        }
    }
}

/// Fraction of no-thinking transcripts per difficulty level, among
/// non-malformed transcripts. Levels with no classifiable transcripts are
/// absent from the map rather than reported as zero.
pub fn no_thinking_rate_by_level(classified: &[(usize, Mode)]) -> BTreeMap<usize, f64> {
    let mut counts: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for &(level, mode) in classified {
        if mode == Mode::Malformed {
            continue;
        }
        let entry = counts.entry(level).or_insert((0, 0));
        entry.1 += 1;
        if mode == Mode::NoThink {
            entry.0 += 1;
        }
    }
    counts
        .into_iter()
        .map(|(level, (no_think, total))| (level, no_think as f64 / total as f64))
        .collect()
}

/// Accuracy and token usage aggregated the way benchmark tables report
/// them: pass@1 accuracy in percent, mean tokens over all rollouts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSummary {
    pub accuracy: f64,
    pub mean_tokens: f64,
}

/// One rollout observation for benchmark summarization.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutSample {
    pub id: String,
    pub problem_id: String,
    pub correct: Option<bool>,
    pub tokens: f64,
}

/// Per-problem mean correctness averaged over problems (pass@1, in
/// percent) and mean token count over all rollouts.
pub fn summarize_benchmark(samples: &[RolloutSample]) -> Result<BenchmarkSummary, AnalyticsError> {
    if samples.is_empty() {
        return Err(AnalyticsError::NoSamples);
    }
    let missing: Vec<String> = samples
        .iter()
        .filter(|s| s.correct.is_none())
        .map(|s| s.id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(AnalyticsError::MissingCorrectFlags(missing));
    }
    let mut per_problem: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for s in samples {
        let entry = per_problem.entry(&s.problem_id).or_insert((0, 0));
        entry.1 += 1;
        if s.correct == Some(true) {
            entry.0 += 1;
        }
    }
    let accuracy = per_problem
        .values()
        .map(|&(correct, total)| correct as f64 / total as f64)
        .sum::<f64>()
        / per_problem.len() as f64
        * 100.0;
    let mean_tokens = samples.iter().map(|s| s.tokens).sum::<f64>() / samples.len() as f64;
    Ok(BenchmarkSummary {
        accuracy,
        mean_tokens,
    })
}
