use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use newsvm::search::{traverse_search, AxisRange};
use newsvm::svm::{train_svc, train_svc_with, train_svr, InnerProducts};
use newsvm::textpipe::daily_signals;
use newsvm::{Grid, KernelSpec, Mode, SearchConfig, SvmParams};
use newsvm_bench::{assembled, synth};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn problem(n: usize, dim: usize) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
    let x: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let targets: Vec<f64> = x
        .iter()
        .map(|r| r.iter().sum::<f64>() + rng.random_range(-0.2..0.2))
        .collect();
    let labels = targets
        .iter()
        .map(|t| if *t >= 0.0 { 1.0 } else { -1.0 })
        .collect();
    (x, labels, targets)
}

fn smo(c: &mut Criterion) {
    let mut group = c.benchmark_group("smo");
    group.sample_size(20);
    for n in [100, 400] {
        let (x, labels, targets) = problem(n, 15);
        let params = SvmParams::new(5.0, KernelSpec::sigmoid(0.05));
        group.bench_with_input(BenchmarkId::new("svc", n), &n, |b, _| {
            b.iter(|| train_svc(&x, &labels, &params).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("svr", n), &n, |b, _| {
            b.iter(|| train_svr(&x, &targets, &params).unwrap())
        });
        let inner = InnerProducts::new(&x);
        group.bench_with_input(BenchmarkId::new("svc_shared_inner", n), &n, |b, _| {
            b.iter(|| train_svc_with(&x, &labels, &params, Some(&inner)).unwrap())
        });
    }
    group.finish();
}

fn kernels(c: &mut Criterion) {
    let (x, _, _) = problem(400, 15);
    c.bench_function("inner_products_400", |b| b.iter(|| InnerProducts::new(&x)));
    let spec = KernelSpec::polynomial(0.1);
    c.bench_function("polynomial_eval", |b| {
        b.iter(|| spec.eval(&x[0], &x[1]).unwrap())
    });
}

fn featurize(c: &mut Criterion) {
    let out = synth(500);
    c.bench_function("daily_signals_500", |b| {
        b.iter(|| daily_signals(&out.docs, &out.sources, &out.lexicons).unwrap())
    });
    c.bench_function("assemble_500_lag10", |b| b.iter(|| assembled(&out, 10)));
}

fn search(c: &mut Criterion) {
    let out = synth(120);
    let data = assembled(&out, 1).standard;
    let grid = Grid {
        c: AxisRange {
            lo: 1.0,
            hi: 5.0,
            step: 1.0,
        },
        g: AxisRange {
            lo: 0.02,
            hi: 0.10,
            step: 0.02,
        },
    };
    let config = SearchConfig::new(Mode::Svc);
    let mut group = c.benchmark_group("search");
    group.sample_size(10);
    group.bench_function("traverse_25_cells_3_splits", |b| {
        b.iter(|| traverse_search(&data, &grid, &config, 1, 3).unwrap())
    });
    group.finish();
}

criterion_group!(benches, smo, kernels, featurize, search);
criterion_main!(benches);
