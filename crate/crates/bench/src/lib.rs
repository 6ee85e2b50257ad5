//! Shared fixture builders for the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use autothink_core::env::{DecisionRecord, SurrogateConfig, SurrogatePolicy};
use autothink_core::grpo::{group_advantage, AdvantageSet, RolloutGroup};
use autothink_core::reward::Outcome;

/// A batch of outcomes with the usual mode/correctness/length mix.
pub fn outcome_batch(n: usize, seed: u64) -> Vec<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let think = rng.random::<f64>() < 0.6;
            Outcome {
                think,
                correct: rng.random::<f64>() < 0.7,
                length: if think {
                    rng.random_range(1_500..20_000)
                } else {
                    rng.random_range(300..1_200)
                },
                group_id: (i / 8) as u64,
                sample_id: i % 8,
            }
        })
        .collect()
}

/// Rollout groups with recorded log-probabilities for objective and
/// gradient benchmarks.
pub fn rollout_groups(
    n_groups: usize,
    group_size: usize,
    seed: u64,
) -> (SurrogatePolicy, Vec<RolloutGroup>, Vec<AdvantageSet>) {
    let cfg = SurrogateConfig::default();
    let policy = SurrogatePolicy::new(&cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut groups = Vec::with_capacity(n_groups);
    let mut advantages = Vec::with_capacity(n_groups);
    for q in 0..n_groups {
        let mut decisions = Vec::with_capacity(group_size);
        let mut logprobs = Vec::with_capacity(group_size);
        let mut rewards = Vec::with_capacity(group_size);
        for _ in 0..group_size {
            let bucket = rng.random_range(0..cfg.buckets);
            let think = rng.random::<f64>() < 0.6;
            let length_bin = think.then(|| rng.random_range(0..cfg.bins()));
            let d = DecisionRecord {
                bucket,
                think,
                length_bin,
            };
            logprobs.push(policy.decision_logprobs(&d));
            decisions.push(d);
            rewards.push(rng.random_range(-1.0..2.0));
        }
        groups.push(RolloutGroup {
            query_id: q as u64,
            rewards: rewards.clone(),
            decision_logprobs_old: logprobs,
            decisions,
        });
        advantages.push(group_advantage(&rewards).unwrap());
    }
    (policy, groups, advantages)
}
