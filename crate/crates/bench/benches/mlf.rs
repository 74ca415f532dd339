use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fhp_core::mlf::{Method, MittagLeffler};
use fhp_core::{ml_kernel, MlKernel};
use std::hint::black_box;

fn methods(c: &mut Criterion) {
    let plan = MittagLeffler::new(0.7, 1.0).unwrap();
    let mut g = c.benchmark_group("ml_method");
    for (method, x) in [
        (Method::Series, 0.5),
        (Method::Contour, 5.0),
        (Method::Asymptotic, 80.0),
    ] {
        g.bench_with_input(BenchmarkId::new(format!("{method:?}"), x), &x, |b, &x| {
            b.iter(|| plan.eval_with(method, black_box(x)))
        });
    }
    g.finish();
}

fn kernel(c: &mut Criterion) {
    let ts: Vec<f64> = (0..1000).map(|k| 1e-3 * 1.02f64.powi(k)).collect();
    let k = MlKernel::new(0.7, 1.0).unwrap();
    c.bench_function("kernel_density_1000", |b| {
        b.iter(|| ts.iter().map(|&t| k.density(t).unwrap()).sum::<f64>())
    });
    c.bench_function("kernel_survival_1000", |b| {
        b.iter(|| ts.iter().map(|&t| k.survival(t).unwrap()).sum::<f64>())
    });
    c.bench_function("kernel_setup", |b| b.iter(|| MlKernel::new(black_box(0.7), 1.0).unwrap()));
    c.bench_function("ml_kernel_one_shot", |b| b.iter(|| ml_kernel(black_box(3.0), 0.7, 1.0).unwrap()));
}

criterion_group!(benches, methods, kernel);
criterion_main!(benches);
