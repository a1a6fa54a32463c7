use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use twisted_bench::gauss23;
use twisted_core::assembly::assemble_all;
use twisted_core::freegroup::sample_homomorphism;
use twisted_core::limit::{gram_element, tau};
use twisted_core::twisted::{build_twisted_matrix, hs_norm_trace_formula, singular_values, CompressedBasis};

fn assembly(c: &mut Criterion) {
    let f = gauss23(40);
    c.bench_function("assemble_all L=40 64x128", |b| {
        b.iter(|| assemble_all(&f.system, 40, &f.quadrature).unwrap())
    });
}

fn trace_formula(c: &mut Criterion) {
    let f = gauss23(40);
    let mut group = c.benchmark_group("hs_norm_trace_formula");
    for n in [100usize, 1000, 10_000] {
        let hom = sample_homomorphism(2, n, 7).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &hom, |b, hom| {
            b.iter(|| hs_norm_trace_formula(&f.h, hom).unwrap())
        });
    }
    group.finish();
}

fn algebra_power(c: &mut Criterion) {
    let f = gauss23(40);
    let x = gram_element(&f.ops).unwrap();
    c.bench_function("tau(X^4) L=40", |b| b.iter(|| tau(&x.power(4).unwrap())));
}

fn spectra(c: &mut Criterion) {
    let f = gauss23(40);
    let mut group = c.benchmark_group("singular_values");
    group.sample_size(10);
    let hom = sample_homomorphism(2, 16, 3).unwrap();
    group.bench_function("dense N=16 L=40", |b| {
        b.iter(|| singular_values(&build_twisted_matrix(&f.ops, &hom).unwrap()).unwrap())
    });
    let basis = CompressedBasis::new(&f.ops, 1e-9).unwrap();
    let hom = sample_homomorphism(2, 64, 3).unwrap();
    group.bench_function("compressed N=64 L=40", |b| b.iter(|| basis.singular_values(&hom).unwrap()));
    group.finish();
}

criterion_group!(benches, assembly, trace_formula, algebra_power, spectra);
criterion_main!(benches);
