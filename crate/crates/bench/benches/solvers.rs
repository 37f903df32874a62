use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rand::SeedableRng;
use revcurve_core::curves::{offer_curve, price_posting_curve, random_concave_curve};
use revcurve_core::mechanisms::{ap_optimize, ear_optimize};
use revcurve_core::oracle::{ex_ante_curve_oracle, DiscreteTypeSpace};
use revcurve_core::{Agent, AgentModel, Distribution};

fn private_uniform() -> Agent {
    let u = Distribution::uniform(0.0, 1.0).unwrap();
    Agent::new("f", AgentModel::PrivateBudget { values: u.clone(), budgets: u }).unwrap()
}

fn curves(c: &mut Criterion) {
    let offer = offer_curve(&private_uniform()).unwrap();
    c.bench_function("price posting curve, private budget, 4096 prices", |b| {
        b.iter(|| price_posting_curve(black_box(&offer), 4096).unwrap())
    });
}

fn oracle(c: &mut Criterion) {
    let space = DiscreteTypeSpace::from_agent(&private_uniform(), 30, 10).unwrap();
    let mut g = c.benchmark_group("ex-ante LP");
    g.sample_size(10);
    g.bench_function("30x10 types, 33 quantiles", |b| b.iter(|| ex_ante_curve_oracle(black_box(&space), 33).unwrap()));
    g.finish();
}

fn mechanisms(c: &mut Criterion) {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let set: Vec<_> = (0..5).map(|_| random_concave_curve(&mut rng, 8)).collect();
    c.bench_function("anonymous price, 5 curves", |b| b.iter(|| ap_optimize(black_box(&set)).unwrap()));
    c.bench_function("water-filling, 5 curves", |b| b.iter(|| ear_optimize(black_box(&set)).unwrap()));
}

criterion_group!(benches, curves, oracle, mechanisms);
criterion_main!(benches);
