use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use picard_core::mlp::{evaluate, mc_samples};
use picard_core::{LipschitzFn, MlpParams, MultiIndex, Network, Problem, RandTree};
use rand::{rngs::StdRng, Rng, SeedableRng};
use std::hint::black_box;

fn random_net(rng: &mut StdRng, dims: &[usize]) -> Network {
    Network::from_rows(
        dims.windows(2)
            .map(|w| {
                let rows = (0..w[1]).map(|_| (0..w[0]).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
                (rows, (0..w[1]).map(|_| rng.random_range(-1.0..1.0)).collect())
            })
            .collect(),
    )
    .unwrap()
}

fn realize(c: &mut Criterion) {
    let mut rng = StdRng::seed_from_u64(0);
    let net = random_net(&mut rng, &[8, 64, 64, 64, 1]);
    let mut group = c.benchmark_group("realize_batch");
    for n in [256usize, 4096] {
        let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..8).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        group.bench_with_input(BenchmarkId::new("parallel", n), &pts, |b, p| b.iter(|| net.realize_batch(black_box(p)).unwrap()));
        group.bench_with_input(BenchmarkId::new("sequential", n), &pts, |b, p| {
            b.iter(|| net.realize_batch_seq(black_box(p)).unwrap())
        });
    }
    group.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let f = LipschitzFn::new(1.0, f64::sin).unwrap();
    let prob = Problem::new(4, 1.0, f, |x: &[f64]| x.iter().map(|v| v.abs()).sum(), 4.0, 1, 2).unwrap();
    let tree = RandTree::new(1, 4).unwrap();
    let x = [0.1, 0.2, 0.3, 0.4];
    let runs = 64;
    let mut group = c.benchmark_group("mc_samples");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| mc_samples(&prob, 3, 3, 0.0, black_box(&x), runs, &tree, f64::INFINITY).unwrap())
    });
    group.bench_function("sequential", |b| {
        b.iter(|| {
            (0..runs as i64)
                .map(|r| evaluate(&prob, &MlpParams::new(3, 3, 0.0, MultiIndex::root(r)), black_box(&x), &tree).unwrap())
                .collect::<Vec<_>>()
        })
    });
    group.finish();
}

criterion_group!(benches, realize, monte_carlo);
criterion_main!(benches);
