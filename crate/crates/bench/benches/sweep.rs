use basins_bench::{pendulum_rest_points, Workload};
use basins_core::analysis::{naive_basins_fixed_points, NaiveSettings};
use basins_core::{basins_of_attraction, refine_with_attractors, Method, Stepper, StepperConfig};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn sweeps(c: &mut Criterion) {
    let mut g = c.benchmark_group("recurrence_sweep");
    g.sample_size(10);
    for (name, len) in [("henon", 100), ("magnetic_pendulum", 40), ("duffing", 30)] {
        let w = Workload::new(name, len);
        g.bench_with_input(BenchmarkId::new(name, len), &w, |b, w| {
            b.iter(|| basins_of_attraction(&w.system, &w.grid, &w.params).unwrap())
        });
    }
    g.finish();
}

// the ordering claim on a grid small enough for repeated sampling
fn recurrence_vs_naive(c: &mut Criterion) {
    let w = Workload::new("magnetic_pendulum", 40);
    let fixed = pendulum_rest_points();
    let settings = NaiveSettings {
        threads: 1,
        ..NaiveSettings::default()
    };
    let mut g = c.benchmark_group("pendulum_40x40");
    g.sample_size(10);
    g.bench_function("recurrence", |b| {
        b.iter(|| basins_of_attraction(&w.system, &w.grid, &w.params).unwrap())
    });
    g.bench_function("naive", |b| {
        b.iter(|| naive_basins_fixed_points(&w.system, &w.grid, &fixed, &w.params, &settings).unwrap())
    });
    let found = basins_of_attraction(&w.system, &w.grid, &w.params).unwrap();
    let eps = w.grid.max_step();
    g.bench_function("refine", |b| {
        b.iter(|| refine_with_attractors(&w.system, &w.grid, &found.attractors, eps, &w.params).unwrap())
    });
    g.finish();
}

fn steppers(c: &mut Criterion) {
    let w = Workload::new("lorenz84", 2);
    let mut g = c.benchmark_group("lorenz84_1000_steps");
    for method in [Method::Rk4Fixed, Method::Dp5Adaptive] {
        let cfg = StepperConfig::new(method, 0.01);
        g.bench_function(format!("{method:?}"), |b| {
            b.iter(|| {
                let mut s = Stepper::new(&w.system, cfg);
                s.reinit(&[1.0, 1.0, 0.5], 0.0);
                for _ in 0..1000 {
                    s.step().unwrap();
                }
                s.state()[0]
            })
        });
    }
    g.finish();
}

criterion_group!(benches, sweeps, recurrence_vs_naive, steppers);
criterion_main!(benches);
