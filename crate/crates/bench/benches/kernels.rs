use std::hint::black_box;

use aqem_core::optimizer::{HolevoObjective, TrainingSet};
use aqem_core::{
    kraus_apply, outcome_distribution, Outcome, PhasePair, Policy, StateKind, SymmetricState,
    WignerDTable,
};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn lattice_policy(n: usize) -> Policy {
    Policy::wrapped((0..n).map(|m| 0.37 + 1.3 * m as f64)).unwrap()
}

fn wigner(c: &mut Criterion) {
    let mut g = c.benchmark_group("wigner_table");
    for two_j in [20u32, 100] {
        g.bench_with_input(BenchmarkId::from_parameter(two_j), &two_j, |b, &two_j| {
            b.iter(|| WignerDTable::half_pi(black_box(two_j)))
        });
    }
    g.finish();
}

fn sine_state(c: &mut Criterion) {
    c.bench_function("sine_state_n100", |b| {
        b.iter(|| SymmetricState::sine(black_box(100)).unwrap())
    });
}

fn kraus(c: &mut Criterion) {
    let state = SymmetricState::sine(50).unwrap();
    c.bench_function("kraus_apply_n50", |b| {
        b.iter(|| kraus_apply(&state, Outcome::Zero, PhasePair::new(black_box(0.4), 1.1)).unwrap())
    });
}

fn exact_distribution(c: &mut Criterion) {
    let mut g = c.benchmark_group("outcome_distribution");
    g.sample_size(20);
    for n in [8usize, 12] {
        let state = SymmetricState::sine(n).unwrap();
        let policy = lattice_policy(n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| outcome_distribution(&state, &policy, black_box(0.8)).unwrap())
        });
    }
    g.finish();
}

fn training_objective(c: &mut Criterion) {
    let mut g = c.benchmark_group("holevo_objective_n8");
    g.sample_size(20);
    let n = 8;
    let policy = lattice_policy(n);
    for kind in [StateKind::Product, StateKind::Sine] {
        let objective =
            HolevoObjective::new(kind.prepare(n).unwrap(), TrainingSet::sample(n, 1), 1, 2);
        g.bench_function(kind.as_str(), |b| {
            b.iter(|| objective.evaluate(black_box(policy.deltas())))
        });
    }
    g.finish();
}

criterion_group!(
    benches,
    wigner,
    sine_state,
    kraus,
    exact_distribution,
    training_objective
);
criterion_main!(benches);
