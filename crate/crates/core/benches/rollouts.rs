//! Parallel versus sequential fan-out of independent episodes.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use oarl::agent::{AgentKind, Hyperparams, Td3Agent};
use oarl::env::{EnvConfig, EnvId, Environment, ObservationMode};
use oarl::harness::{run_episode, RandomPolicy};
use oarl::par;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn env(id: EnvId) -> Environment {
    Environment::new(EnvConfig::default_for(id), ObservationMode::Mdp).unwrap()
}

fn random_rollouts(c: &mut Criterion) {
    let mut group = c.benchmark_group("random_rollouts");
    for id in [EnvId::SimpleOa, EnvId::ComplexOa] {
        let e = env(id);
        let n = 64;
        group.bench_with_input(BenchmarkId::new("parallel", id), &e, |b, e| {
            b.iter(|| par::map(n, |i| run_episode(&RandomPolicy, e, i as u64).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("sequential", id), &e, |b, e| {
            b.iter(|| par::map_sequential(n, |i| run_episode(&RandomPolicy, e, i as u64).unwrap()))
        });
    }
    group.finish();
}

fn policy_evaluation(c: &mut Criterion) {
    let mut group = c.benchmark_group("td3_evaluation");
    group.sample_size(10);
    let e = env(EnvId::SimpleOa);
    let agent = Td3Agent::new(
        AgentKind::Td3,
        e.observation_dim(),
        Hyperparams::default(),
        &mut ChaCha8Rng::seed_from_u64(0),
    )
    .unwrap();
    let n = 10;
    group.bench_function("parallel", |b| {
        b.iter(|| par::map(n, |i| run_episode(&agent, &e, i as u64).unwrap()))
    });
    group.bench_function("sequential", |b| {
        b.iter(|| par::map_sequential(n, |i| run_episode(&agent, &e, i as u64).unwrap()))
    });
    group.finish();
}

criterion_group!(benches, random_rollouts, policy_evaluation);
criterion_main!(benches);
