use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use toruslab::arithmetic::dirichlet_approx;
use toruslab::nls::{nonlinearity, DataSpec, Sign};
use toruslab::propagator::{min_kernel_resolution, KernelLine};
use toruslab::{free_evolve, Dyadic, TorusGeometry};

fn kernel_line(c: &mut Criterion) {
    let mut group = c.benchmark_group("kernel_line");
    for n in [16u64, 64, 256] {
        let n = Dyadic::new(n).unwrap();
        let mut line = KernelLine::new(n, min_kernel_resolution(n)).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n.get()), &n, |b, _| {
            b.iter(|| line.max_abs(black_box(0.123_456_7)))
        });
    }
    group.finish();
}

fn dirichlet(c: &mut Criterion) {
    c.bench_function("dirichlet_approx N=4096", |b| {
        b.iter(|| dirichlet_approx(black_box(std::f64::consts::FRAC_1_SQRT_2), black_box(4096)))
    });
}

fn nls_nonlinearity(c: &mut Criterion) {
    let g = TorusGeometry::square(3).unwrap();
    let u = DataSpec::Gaussian { amplitude: 0.1 }.build(&g, 8, 1).unwrap();
    c.bench_function("nonlinearity d=3 M=8", |b| b.iter(|| nonlinearity(black_box(&u), Sign::Defocusing)));
    c.bench_function("free_evolve d=3 M=8", |b| b.iter(|| free_evolve(black_box(&u), 0.01, &g)));
}

criterion_group!(benches, kernel_line, dirichlet, nls_nonlinearity);
criterion_main!(benches);
