use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use autothink_bench::outcome_batch;
use autothink_core::reward::{
    penalty_factors, stage1_reward_with_factors, stage3_reward, standardize_lengths, BatchStats,
    Stage1Params, Stage3Params,
};

fn bench_rewards(c: &mut Criterion) {
    let outcomes = outcome_batch(64, 1);
    let params = Stage1Params::new(0.5, 2.0).unwrap();
    let stage3 = Stage3Params::new(0.05, 0.05).unwrap();

    c.bench_function("stage1_reward_batch64", |b| {
        b.iter(|| {
            let stats = BatchStats::from_outcomes(black_box(&outcomes)).unwrap();
            let factors = penalty_factors(&stats, &params);
            outcomes
                .iter()
                .map(|o| stage1_reward_with_factors(*o, &factors))
                .sum::<f64>()
        })
    });

    let group: Vec<_> = outcomes
        .iter()
        .take(8)
        .map(|o| {
            let mut o = *o;
            o.group_id = 0;
            o
        })
        .collect();
    c.bench_function("stage3_reward_group8", |b| {
        b.iter(|| {
            let ys = standardize_lengths(black_box(&group)).unwrap();
            group
                .iter()
                .zip(&ys)
                .map(|(o, y)| stage3_reward(*o, *y, &stage3))
                .sum::<f64>()
        })
    });
}

criterion_group!(benches, bench_rewards);
criterion_main!(benches);
