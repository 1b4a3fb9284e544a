use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use rmm_bench::reference_dataset;
use rmm_core::data::AltCode;
use rmm_core::estimation;
use rmm_core::likelihood::{observed_loglik, Derivatives};

fn loglik(c: &mut Criterion) {
    let ds = reference_dataset(10_000);
    let params = vec![0.1; ds.n_alternatives() - 1 + ds.n_asv()];
    let mut group = c.benchmark_group("observed_loglik");
    for (name, order) in [
        ("value", Derivatives::None),
        ("gradient", Derivatives::Gradient),
        ("hessian", Derivatives::Hessian),
    ] {
        group.bench_function(name, |b| {
            b.iter(|| observed_loglik(black_box(&params), &ds, AltCode(1), order).unwrap())
        });
    }
    group.finish();
}

fn fit(c: &mut Criterion) {
    let mut group = c.benchmark_group("fit");
    group.sample_size(20);
    for n in [1_000, 10_000, 50_000] {
        let ds = reference_dataset(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &ds, |b, ds| {
            b.iter(|| estimation::fit(ds, 0.7).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, loglik, fit);
criterion_main!(benches);
