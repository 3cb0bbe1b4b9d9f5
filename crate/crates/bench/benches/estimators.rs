use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sme_core::data::scatter_matrix;
use sme_core::simulation::{lattice_concentration, sample_gaussian};
use sme_core::{build_gram, lattice_graph, mle_fit, sme_fit, MleOptions, ModelSpace};

fn estimators(c: &mut Criterion) {
    let mut group = c.benchmark_group("lattice");
    for s in [4usize, 8] {
        let p = s * s;
        let n = 10 * p;
        let l = ModelSpace::from_graph(&lattice_graph(s).unwrap());
        let x = sample_gaussian(&lattice_concentration(s).unwrap(), n, 1).unwrap();
        let w = scatter_matrix(&x, true).unwrap();
        group.bench_with_input(BenchmarkId::new("gram", s), &s, |b, _| b.iter(|| build_gram(&l, &w, n).unwrap()));
        group.bench_with_input(BenchmarkId::new("sme", s), &s, |b, _| b.iter(|| sme_fit(&l, &w, n).unwrap()));
        group.bench_with_input(BenchmarkId::new("mle", s), &s, |b, _| {
            b.iter(|| mle_fit(&l, &w, n, &MleOptions::default()).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, estimators);
criterion_main!(benches);
