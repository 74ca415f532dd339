use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fhp_bench::reference_params;
use fhp_core::simulate::{simulate_fhp, simulate_fhp_thinning, SimConfig, Stop, DEFAULT_EPSILON};

fn simulation(c: &mut Criterion) {
    let mut g = c.benchmark_group("simulate");
    g.sample_size(20);
    for n in [750, 1500] {
        let cfg = SimConfig::new(reference_params(), Stop::Count(n), 7);
        g.bench_with_input(BenchmarkId::new("branching", n), &cfg, |b, cfg| {
            b.iter(|| simulate_fhp(cfg).unwrap())
        });
    }
    let sub = SimConfig::new(fhp_core::FhpParams::new(1.0, 0.2, 0.5, 0.7, 1.0), Stop::Horizon(200.0), 7);
    g.bench_function("branching_horizon", |b| b.iter(|| simulate_fhp(&sub).unwrap()));
    g.bench_function("thinning_horizon", |b| {
        b.iter(|| simulate_fhp_thinning(&sub, DEFAULT_EPSILON).unwrap())
    });
    g.finish();
}

criterion_group!(benches, simulation);
criterion_main!(benches);
