use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nemaflow::fft::{forward, inverse};
use nemaflow::initial::{make_initial, Params};
use nemaflow::monitor::criterion_integrand;
use nemaflow::norms::bmo_norm;
use nemaflow::{CubeFamily, Grid, Scheme, SolverConfig, Stepper};

fn random_state(dim: usize, n: usize) -> nemaflow::State {
    let g = Grid::periodic(dim, n).unwrap();
    make_initial("random_smooth", &Params::new(), 1, g).unwrap()
}

fn fft(c: &mut Criterion) {
    let mut group = c.benchmark_group("fft_round_trip");
    for n in [16, 32, 64] {
        let s = random_state(3, n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &s.u, |b, u| {
            b.iter(|| inverse(&forward(u)).unwrap())
        });
    }
    group.finish();
}

fn stepping(c: &mut Criterion) {
    let mut group = c.benchmark_group("step_3d");
    group.sample_size(10);
    for scheme in [Scheme::Imex1, Scheme::Sbdf2] {
        let s0 = random_state(3, 32);
        let cfg = SolverConfig {
            dt: 1e-3,
            t_end: 1.0,
            scheme,
            ..Default::default()
        };
        group.bench_function(BenchmarkId::new(scheme.name(), 32), |b| {
            let mut stepper = Stepper::new(*s0.grid(), &cfg).unwrap();
            let mut s = s0.clone();
            b.iter(|| stepper.advance(&mut s).unwrap())
        });
    }
    group.finish();
}

fn bmo(c: &mut Criterion) {
    let mut group = c.benchmark_group("bmo");
    for (dim, n) in [(2, 64), (3, 16), (3, 32)] {
        let s = random_state(dim, n);
        let cubes = CubeFamily::dyadic(*s.grid());
        group.bench_function(BenchmarkId::new(format!("norm_{dim}d"), n), |b| {
            b.iter(|| bmo_norm(&s.u, &cubes).unwrap())
        });
        group.bench_function(BenchmarkId::new(format!("vorticity_{dim}d"), n), |b| {
            b.iter(|| criterion_integrand(&s, &cubes).unwrap())
        });
    }
    group.finish();
}

criterion_group!(kernels, fft, stepping, bmo);
criterion_main!(kernels);
