//! Compares the data-parallel attack paths against single-threaded
//! execution. The same code runs in both cases (results are identical);
//! only the rayon pool size changes. For the true sequential build compare
//! against a `--no-default-features` baseline of the test suite; the bench
//! target itself requires the `parallel` feature.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use btrank::attacks::{self, AttackAlgorithm, AttackConfig};
use btrank::data::{generate_synthetic, StrengthLaw, SyntheticSpec};
use btrank::experiments::{budget_sweep, DatasetSource, SuccessCriterion, SweepSpec, TargetSpec};
use btrank::mle::{fit, FitConfig};
use btrank::model::{aggregate, ranking_from_strengths, ComparisonDataset, Ranking};

fn bench_dataset() -> (ComparisonDataset, Ranking) {
    let spec = SyntheticSpec {
        m: 5,
        n_voters: 40,
        comparisons_per_voter: 10,
        strength_law: StrengthLaw::Geometric { ratio: 0.85 },
        seed: 7,
    };
    let (dataset, _) = generate_synthetic(&spec).unwrap();
    let fitted = fit(&aggregate(&dataset), &FitConfig::default()).unwrap();
    let mut order = ranking_from_strengths(&fitted.strengths).order().to_vec();
    order.reverse();
    (dataset, Ranking::new(order).unwrap())
}

/// 1 = single worker (sequential behavior), 0 = all cores. The pool is
/// built once per measurement so only the evaluation strategy is timed.
fn pools() -> Vec<(usize, rayon::ThreadPool)> {
    [1usize, 0]
        .into_iter()
        .map(|threads| {
            let mut builder = rayon::ThreadPoolBuilder::new();
            if threads > 0 {
                builder = builder.num_threads(threads);
            }
            (threads, builder.build().expect("pool"))
        })
        .collect()
}

fn bench_fit(c: &mut Criterion) {
    let (dataset, _) = bench_dataset();
    let counts = aggregate(&dataset);
    c.bench_function("mle_fit", |b| {
        b.iter(|| fit(black_box(&counts), &FitConfig::default()).unwrap())
    });
}

fn bench_greedy(c: &mut Criterion) {
    let (dataset, target) = bench_dataset();
    let mut group = c.benchmark_group("greedy_flip");
    group.sample_size(10);
    for (threads, pool) in pools() {
        let config = AttackConfig::new(target.clone(), 10, &dataset, 3);
        group.bench_with_input(BenchmarkId::from_parameter(threads), &pool, |b, pool| {
            b.iter(|| pool.install(|| attacks::greedy_flip(&dataset, &config).unwrap()))
        });
    }
    group.finish();
}

fn bench_assa(c: &mut Criterion) {
    let (dataset, target) = bench_dataset();
    let mut group = c.benchmark_group("assa");
    group.sample_size(10);
    for (threads, pool) in pools() {
        let mut config = AttackConfig::new(target.clone(), 40, &dataset, 3);
        config.subsets = 40;
        config.iterations = 20;
        group.bench_with_input(BenchmarkId::from_parameter(threads), &pool, |b, pool| {
            b.iter(|| pool.install(|| attacks::assa(&dataset, &config).unwrap()))
        });
    }
    group.finish();
}

fn bench_sweep(c: &mut Criterion) {
    let spec = SweepSpec {
        source: DatasetSource::Synthetic(SyntheticSpec {
            m: 4,
            n_voters: 20,
            comparisons_per_voter: 6,
            strength_law: StrengthLaw::Geometric { ratio: 0.9 },
            seed: 5,
        }),
        algorithms: vec![AttackAlgorithm::Rsa, AttackAlgorithm::Assa],
        budget_fractions: vec![0.05],
        trials: 8,
        target: TargetSpec::FromInitial(vec![1, 0, 2, 3]),
        subsets: 40,
        iterations: 10,
        coalition: None,
        criterion: SuccessCriterion::Exact,
        seed: 5,
        fit: FitConfig::default(),
    };
    let mut group = c.benchmark_group("budget_sweep");
    group.sample_size(10);
    for (threads, pool) in pools() {
        group.bench_with_input(BenchmarkId::from_parameter(threads), &pool, |b, pool| {
            b.iter(|| pool.install(|| budget_sweep(black_box(&spec)).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_fit, bench_greedy, bench_assa, bench_sweep);
criterion_main!(benches);
