use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use qgrad::gradient::{schatten_diagnostic, PsiMap, Route};
use qgrad::partitions::{enumerate_partitions, SegmentShape};
use qgrad::torus::{poisson_t_decay, FreqWindow};
use qgrad::wick::{product_partition, product_triple};
use qgrad::{FockParams, FockVector};

fn partitions(c: &mut Criterion) {
    let shape = SegmentShape::new(&[3, 3, 3]).unwrap();
    c.bench_function("enumerate_partitions 3+3+3", |b| b.iter(|| enumerate_partitions(&shape).len()));
}

fn products(c: &mut Criterion) {
    let mut g = c.benchmark_group("triple product");
    for n in [2usize, 3] {
        let p = FockParams::new(0.5, n, 6).unwrap();
        let x = FockVector::basis(&p, &[0, 1]).unwrap();
        let y = FockVector::basis(&p, &[1, 0]).unwrap();
        g.bench_with_input(BenchmarkId::new("partition", n), &n, |b, _| {
            b.iter(|| product_partition(&[&x, &y, &x]).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("rstar", n), &n, |b, _| b.iter(|| product_triple(&x, &y, &x).unwrap()));
    }
    g.finish();
}

fn psi(c: &mut Criterion) {
    let p = FockParams::new(0.5, 2, 6).unwrap();
    let a = FockVector::basis(&p, &[0]).unwrap();
    let mut g = c.benchmark_group("psi N=2 M=6");
    g.sample_size(10);
    for route in [Route::Direct, Route::Partition, Route::Rstar] {
        g.bench_function(route.to_string(), |b| b.iter(|| PsiMap::new(&a, &a, 0.0, route).unwrap()));
    }
    let m = PsiMap::new(&a, &a, 0.0, Route::Partition).unwrap();
    g.bench_function("schatten_diagnostic", |b| b.iter(|| schatten_diagnostic(&m, 2.0).unwrap()));
    g.finish();
}

fn torus(c: &mut Criterion) {
    let w = FreqWindow::new(64).unwrap();
    c.bench_function("poisson T decay K=64", |b| b.iter(|| poisson_t_decay(1, 1, w).unwrap()));
}

criterion_group!(benches, partitions, products, psi, torus);
criterion_main!(benches);
