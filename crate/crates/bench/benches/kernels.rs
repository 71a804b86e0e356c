use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qit_core::pauli::pauli_count;
use qit_core::sampling::{binomial, stream_rng};
use qit_core::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

fn expectations(c: &mut Criterion) {
    let mut group = c.benchmark_group("expectation");
    for n in [2usize, 4, 6, 8] {
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
        let state = ProductState::random(n, &mut rng).unwrap();
        let dense = state.to_dense().unwrap();
        let p = PauliString::new(n, pauli_count(n) - 1).unwrap();
        group.bench_with_input(BenchmarkId::new("product", n), &n, |b, _| {
            b.iter(|| expectation_product(black_box(state.blochs()), black_box(&p)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("dense", n), &n, |b, _| {
            b.iter(|| expectation_dense(black_box(&dense), black_box(&p)).unwrap())
        });
    }
    group.finish();
}

fn binomial_draws(c: &mut Criterion) {
    let mut group = c.benchmark_group("binomial");
    for trials in [32u64, 1_000, 1_000_000] {
        let mut rng = stream_rng(1);
        group.bench_with_input(BenchmarkId::from_parameter(trials), &trials, |b, &t| {
            b.iter(|| binomial(&mut rng, black_box(t), 0.37))
        });
    }
    group.finish();
}

fn pair_test(c: &mut Criterion) {
    let oracle = PairOracle::new(BiasTable::new(vec![0.2], vec![0.1]).unwrap(), 3);
    let params = BinaryTestParams::new(0.01, 1e-6).unwrap();
    let mut epoch = 0u64;
    c.bench_function("test_pair", |b| {
        b.iter(|| {
            epoch += 1;
            test_pair(&oracle, 0, &params, epoch).unwrap()
        })
    });
}

fn collection(c: &mut Criterion) {
    let mut group = c.benchmark_group("test_collection_m256");
    group.sample_size(10);
    let alpha: Vec<f64> = (0..256).map(|i| (i as f64 / 128.0) - 1.0).collect();
    let table = BiasTable::new(alpha.clone(), alpha).unwrap();
    for eps in [0.25, 0.1] {
        let config = CollectionConfig::new(eps);
        group.bench_with_input(BenchmarkId::from_parameter(eps), &eps, |b, _| {
            let mut seed = 0u64;
            b.iter(|| {
                seed += 1;
                let oracle = PairOracle::new(table.clone(), seed);
                test_collection(&oracle, &config).unwrap().verdict
            })
        });
    }
    group.finish();
}

criterion_group!(benches, expectations, binomial_draws, pair_test, collection);
criterion_main!(benches);
