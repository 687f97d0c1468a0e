use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use gravent_core::cvcore::{thermal_squeezed_covariance, InitialStateSpec};
use gravent_core::dynamics::{build_propagator, integrate_lyapunov, linspace, LyapunovOptions};
use gravent_core::{Scenario, Setup, Simulator};

fn squeezed_trap() -> Scenario {
    Scenario::spheres(Setup::Oscillators, 1e-7, 0.1, 22_590.0, 2.1).with_initial(InitialStateSpec::squeezed(0.0, 1.73))
}

fn damped() -> Scenario {
    squeezed_trap().with_quality_factor(1e4).with_initial(InitialStateSpec::thermal(1.0))
}

fn kernels(c: &mut Criterion) {
    let p = build_propagator(&squeezed_trap()).unwrap();
    let drift = *p.drift();
    c.bench_function("expm_4x4", |b| {
        b.iter(|| gravent_core::dynamics::matrix_exponential(black_box(&drift), black_box(3.7)).unwrap())
    });

    let pd = build_propagator(&damped()).unwrap();
    let v0 = thermal_squeezed_covariance(&InitialStateSpec::thermal(1.0)).unwrap().into_matrix();
    let opts = LyapunovOptions::default();
    c.bench_function("lyapunov_damped_10s", |b| {
        b.iter(|| integrate_lyapunov(pd.drift(), pd.diffusion(), black_box(&v0), 10.0, &opts).unwrap())
    });

    let v = thermal_squeezed_covariance(&InitialStateSpec::squeezed(0.5, 1.0)).unwrap();
    c.bench_function("log_negativity", |b| b.iter(|| black_box(&v).log_negativity().unwrap()));

    let times = linspace(0.0, 40.0, 1000);
    let sim = Simulator::new(&squeezed_trap()).unwrap();
    c.bench_function("trace_1000_samples", |b| b.iter(|| sim.trace(black_box(&times)).unwrap()));
}

criterion_group!(benches, kernels);
criterion_main!(benches);
