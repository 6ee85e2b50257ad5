//! `autothink reward-eval`: evaluate reward-law test vectors from a JSON
//! file and print the results as JSON on stdout.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use autothink_core::reward::{
    naive_reward, stage1_reward, stage2_reward, stage3_reward, BatchStats, Outcome, Stage1Params,
    Stage3Params, StandardizedLength,
};

use crate::CliError;

/// One test vector. `stage1` takes the batch thinking proportion and the
/// balancing parameters; `stage3` takes the already-standardized length.
#[derive(Debug, Deserialize)]
#[serde(tag = "stage", rename_all = "lowercase", deny_unknown_fields)]
enum RewardCase {
    Naive {
        think: bool,
        correct: bool,
    },
    Stage1 {
        think: bool,
        correct: bool,
        z: f64,
        gamma: f64,
        lambda: f64,
    },
    Stage2 {
        think: bool,
        correct: bool,
    },
    Stage3 {
        think: bool,
        correct: bool,
        y: f64,
        alpha: f64,
        beta: f64,
    },
}

#[derive(Debug, Serialize)]
struct RewardResult {
    case: usize,
    reward: f64,
}

fn outcome(think: bool, correct: bool) -> Outcome {
    Outcome {
        think,
        correct,
        length: 0,
        group_id: 0,
        sample_id: 0,
    }
}

pub fn run(vectors: &Path) -> Result<(), CliError> {
    let text = fs::read_to_string(vectors)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", vectors.display())))?;
    let cases: Vec<RewardCase> = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", vectors.display())))?;

    let mut results = Vec::with_capacity(cases.len());
    for (i, case) in cases.iter().enumerate() {
        let reward = match *case {
            RewardCase::Naive { think, correct } => naive_reward(outcome(think, correct)),
            RewardCase::Stage2 { think, correct } => stage2_reward(outcome(think, correct)),
            RewardCase::Stage1 {
                think,
                correct,
                z,
                gamma,
                lambda,
            } => {
                if !(0.0..=1.0).contains(&z) {
                    return Err(CliError::Config(format!("case {i}: z={z} outside [0,1]")));
                }
                let params = Stage1Params::new(gamma, lambda)
                    .map_err(|e| CliError::Config(format!("case {i}: {e}")))?;
                // Test vectors may use any z in [0,1]; the integral-count
                // check does not apply here.
                let stats = BatchStats { z, batch_size: 1 };
                stage1_reward(outcome(think, correct), &stats, &params)
            }
            RewardCase::Stage3 {
                think,
                correct,
                y,
                alpha,
                beta,
            } => {
                let params = Stage3Params::new(alpha, beta)
                    .map_err(|e| CliError::Config(format!("case {i}: {e}")))?;
                stage3_reward(outcome(think, correct), StandardizedLength { y }, &params)
            }
        };
        results.push(RewardResult { case: i, reward });
    }
    let json = serde_json::to_string_pretty(&results)
        .map_err(|e| CliError::Other(format!("serialize results: {e}")))?;
    println!("{json}");
    Ok(())
}
