//! `autothink oracle-check`: randomized brute-force oracles against the
//! reward formulas, the group advantage computation, and the analytic
//! policy gradient. Every oracle here re-derives its expected value
//! independently of the library code it checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use autothink_core::env::{DecisionRecord, SurrogatePolicy};
use autothink_core::grpo::{
    batch_objective_for_policy, group_advantage, objective_and_gradient, AdvantageSet, ClipConfig,
    RolloutGroup,
};
use autothink_core::reward::{
    stage1_reward, stage3_reward, BatchStats, Outcome, Stage1Params, Stage3Params,
    StandardizedLength,
};

use crate::{CliError, Fault};

const REWARD_TOL: f64 = 1e-12;
const ADVANTAGE_TOL: f64 = 1e-12;
const GRADIENT_TOL: f64 = 1e-5;
const FD_STEP: f64 = 1e-6;

pub fn run(count: usize, seed: u64, fault: Fault) -> Result<(), CliError> {
    check_reward_formulas(count, seed)?;
    check_advantages(count, seed ^ 0x5eed, fault)?;
    check_gradients(count, seed ^ 0x6ead)?;
    Ok(())
}

/// Independent re-derivation of the stage-1 law: penalty factors and the
/// four-case interpolation written straight from the formulas (spelled
/// plainly rather than via the clamp the implementation uses).
#[allow(clippy::manual_clamp, clippy::neg_multiply)]
fn oracle_stage1(think: bool, correct: bool, z: f64, gamma: f64, lambda: f64) -> f64 {
    let clamp01 = |x: f64| x.max(0.0).min(1.0);
    let dt = clamp01((z - gamma) * lambda);
    let dn = clamp01((1.0 - z - gamma) * lambda);
    match (think, correct) {
        (true, true) => (1.0 - dt) * 1.0,
        (true, false) => (1.0 - dt) * 0.0 + dt * -1.0,
        (false, true) => (1.0 - dn) * 2.0,
        (false, false) => (1.0 - dn) * -1.0 + dn * -2.0,
    }
}

fn oracle_stage3(think: bool, correct: bool, y: f64, alpha: f64, beta: f64) -> f64 {
    let naive = match (think, correct) {
        (true, true) => 1.0,
        (true, false) => 0.0,
        (false, true) => 2.0,
        (false, false) => -1.0,
    };
    if correct {
        naive - 1.0 + (-alpha * y).exp()
    } else {
        naive + 1.0 - (-beta * y).exp()
    }
}

fn check_reward_formulas(count: usize, seed: u64) -> Result<(), CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for i in 0..count {
        let think = rng.random::<f64>() < 0.5;
        let correct = rng.random::<f64>() < 0.5;
        let z: f64 = rng.random();
        let gamma = rng.random_range(0.01..0.99);
        let lambda = rng.random_range(0.0..8.0);
        let outcome = Outcome {
            think,
            correct,
            length: 0,
            group_id: 0,
            sample_id: 0,
        };
        let got = stage1_reward(
            outcome,
            &BatchStats { z, batch_size: 1 },
            &Stage1Params { gamma, lambda },
        );
        let want = oracle_stage1(think, correct, z, gamma, lambda);
        let err = (got - want).abs();
        worst = worst.max(err);
        if err > REWARD_TOL {
            let instance = json!({
                "oracle": "stage1-reward", "index": i, "think": think, "correct": correct,
                "z": z, "gamma": gamma, "lambda": lambda, "got": got, "want": want,
            });
            eprintln!("{instance}");
            return Err(CliError::OracleFailure(format!(
                "stage1 reward off by {err:e}"
            )));
        }

        let y = rng.random_range(-3.0..3.0);
        let alpha = rng.random_range(0.0..0.5);
        let beta = rng.random_range(0.0..0.5);
        let got = stage3_reward(
            outcome,
            StandardizedLength { y },
            &Stage3Params { alpha, beta },
        );
        let want = oracle_stage3(think, correct, y, alpha, beta);
        let err = (got - want).abs();
        worst = worst.max(err);
        if err > REWARD_TOL {
            let instance = json!({
                "oracle": "stage3-reward", "index": i, "think": think, "correct": correct,
                "y": y, "alpha": alpha, "beta": beta, "got": got, "want": want,
            });
            eprintln!("{instance}");
            return Err(CliError::OracleFailure(format!(
                "stage3 reward off by {err:e}"
            )));
        }
    }
    println!("oracle reward-formulas: {count} instances, worst |err| = {worst:.3e} (tol {REWARD_TOL:.0e}) .. ok");
    Ok(())
}

fn check_advantages(count: usize, seed: u64, fault: Fault) -> Result<(), CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for i in 0..count {
        let g = rng.random_range(2..=16usize);
        let rewards: Vec<f64> = (0..g).map(|_| rng.random_range(-2.0..2.0)).collect();
        let mut got = group_advantage(&rewards)
            .map_err(|e| CliError::Other(e.to_string()))?
            .advantages;

        // Brute-force recomputation of the group mean and population std.
        let mean = rewards.iter().sum::<f64>() / g as f64;
        let std = (rewards.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / g as f64).sqrt();
        let want: Vec<f64> = rewards.iter().map(|r| (r - mean) / (std + 1e-6)).collect();

        if fault == Fault::AdvantageMean {
            // Corrupt the computed advantages by skipping mean-centering.
            for (a, r) in got.iter_mut().zip(&rewards) {
                *a = r / (std + 1e-6);
            }
        }

        for (j, (a, w)) in got.iter().zip(&want).enumerate() {
            let err = (a - w).abs();
            worst = worst.max(err);
            if err > ADVANTAGE_TOL {
                let instance = json!({
                    "oracle": "advantage-zscore", "index": i, "sample": j,
                    "rewards": rewards, "got": got, "want": want,
                });
                eprintln!("{instance}");
                return Err(CliError::OracleFailure(format!("advantage off by {err:e}")));
            }
        }
    }
    println!("oracle advantage-zscore: {count} instances, worst |err| = {worst:.3e} (tol {ADVANTAGE_TOL:.0e}) .. ok");
    Ok(())
}

pub struct GradientInstance {
    pub policy: SurrogatePolicy,
    pub groups: Vec<RolloutGroup>,
    pub advantages: Vec<AdvantageSet>,
}

/// Random small instance with off-policy ratios. Instances whose ratios
/// fall within `margin` of a clip kink are rejected by the caller, since
/// the objective is not differentiable there.
pub fn random_gradient_instance(rng: &mut ChaCha8Rng) -> GradientInstance {
    let buckets = rng.random_range(1..=4usize);
    let bins = rng.random_range(2..=4usize);
    let policy = SurrogatePolicy::from_parts(
        (0..buckets).map(|_| rng.random_range(-2.0..2.0)).collect(),
        (0..buckets)
            .map(|_| (0..bins).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect(),
    );
    let policy_old = {
        let mut p = policy.clone();
        let dt: Vec<f64> = (0..buckets).map(|_| rng.random_range(-0.2..0.2)).collect();
        let dl: Vec<Vec<f64>> = (0..buckets)
            .map(|_| (0..bins).map(|_| rng.random_range(-0.2..0.2)).collect())
            .collect();
        p.nudge(&dt, &dl);
        p
    };
    let n_groups = rng.random_range(1..=3usize);
    let mut groups = Vec::new();
    let mut advantages = Vec::new();
    for q in 0..n_groups {
        let g = rng.random_range(2..=8usize);
        let mut decisions = Vec::new();
        let mut logprobs = Vec::new();
        let mut rewards = Vec::new();
        for _ in 0..g {
            let bucket = rng.random_range(0..buckets);
            let think = rng.random::<f64>() < 0.5;
            let length_bin = think.then(|| rng.random_range(0..bins));
            let d = DecisionRecord {
                bucket,
                think,
                length_bin,
            };
            logprobs.push(policy_old.decision_logprobs(&d));
            decisions.push(d);
            rewards.push(rng.random_range(-1.0..2.0));
        }
        groups.push(RolloutGroup {
            query_id: q as u64,
            rewards: rewards.clone(),
            decision_logprobs_old: logprobs,
            decisions,
        });
        advantages.push(group_advantage(&rewards).expect("G >= 2"));
    }
    GradientInstance {
        policy,
        groups,
        advantages,
    }
}

pub fn near_clip_kink(inst: &GradientInstance, epsilon: f64, margin: f64) -> bool {
    inst.groups.iter().any(|g| {
        g.decisions
            .iter()
            .zip(&g.decision_logprobs_old)
            .any(|(d, old)| {
                inst.policy
                    .decision_logprobs(d)
                    .iter()
                    .zip(old)
                    .any(|(new, o)| {
                        let ratio = (new - o).exp();
                        (ratio - (1.0 - epsilon)).abs() < margin
                            || (ratio - (1.0 + epsilon)).abs() < margin
                    })
            })
    })
}

/// Central finite differences of the batch objective in every logit.
pub fn fd_gradient(inst: &GradientInstance, cfg: &ClipConfig, h: f64) -> (Vec<f64>, Vec<Vec<f64>>) {
    let buckets = inst.policy.buckets();
    let bins = inst.policy.bins();
    let eval = |p: &SurrogatePolicy| {
        batch_objective_for_policy(p, &inst.groups, &inst.advantages, cfg).expect("valid instance")
    };
    let mut think = vec![0.0; buckets];
    let mut length = vec![vec![0.0; bins]; buckets];
    let zeros_l = vec![vec![0.0; bins]; buckets];
    for b in 0..buckets {
        let mut dt = vec![0.0; buckets];
        let mut up = inst.policy.clone();
        dt[b] = h;
        up.nudge(&dt, &zeros_l);
        let mut down = inst.policy.clone();
        dt[b] = -h;
        down.nudge(&dt, &zeros_l);
        think[b] = (eval(&up) - eval(&down)) / (2.0 * h);
    }
    let zeros_t = vec![0.0; buckets];
    for b in 0..buckets {
        for k in 0..bins {
            let mut dl = zeros_l.clone();
            let mut up = inst.policy.clone();
            dl[b][k] = h;
            up.nudge(&zeros_t, &dl);
            let mut down = inst.policy.clone();
            dl[b][k] = -h;
            down.nudge(&zeros_t, &dl);
            length[b][k] = (eval(&up) - eval(&down)) / (2.0 * h);
        }
    }
    (think, length)
}

fn check_gradients(count: usize, seed: u64) -> Result<(), CliError> {
    let cfg = ClipConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut checked = 0usize;
    while checked < count {
        let inst = random_gradient_instance(&mut rng);
        if near_clip_kink(&inst, cfg.epsilon, 1e-4) {
            continue;
        }
        let (_, grad) = objective_and_gradient(&inst.policy, &inst.groups, &inst.advantages, &cfg)
            .map_err(|e| CliError::Other(e.to_string()))?;
        let (fd_think, fd_length) = fd_gradient(&inst, &cfg, FD_STEP);

        let mut diff2 = 0.0;
        let mut norm_a = 0.0;
        let mut norm_f = 0.0;
        let mut accumulate = |a: f64, f: f64| {
            diff2 += (a - f) * (a - f);
            norm_a += a * a;
            norm_f += f * f;
        };
        for (a, f) in grad.think.iter().zip(&fd_think) {
            accumulate(*a, *f);
        }
        for (ra, rf) in grad.length.iter().zip(&fd_length) {
            for (a, f) in ra.iter().zip(rf) {
                accumulate(*a, *f);
            }
        }
        // Instances whose gradient all but cancels (opposite advantages on
        // identical decisions) carry no signal: finite-difference roundoff
        // dominates any relative comparison there.
        if norm_a.sqrt().max(norm_f.sqrt()) < 1e-4 {
            continue;
        }
        let rel = diff2.sqrt() / norm_a.sqrt().max(norm_f.sqrt());
        worst = worst.max(rel);
        if rel > GRADIENT_TOL {
            let instance = json!({
                "oracle": "policy-gradient-fd", "index": checked,
                "think_logits": inst.policy.think_logits(),
                "length_logits": inst.policy.length_logits(),
                "groups": inst.groups, "relative_error": rel,
            });
            eprintln!("{instance}");
            return Err(CliError::OracleFailure(format!(
                "gradient relative error {rel:e}"
            )));
        }
        checked += 1;
    }
    println!("oracle policy-gradient-fd: {count} instances, worst rel err = {worst:.3e} (tol {GRADIENT_TOL:.0e}) .. ok");
    Ok(())
}
