use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use herald_core::evolution::{apply, permanent::permanent};
use herald_core::interferometer::{dft_unitary, random_unitary};
use herald_core::schemes::{build_and_run, SchemeKind, SchemeSpec};
use herald_core::StateVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn bench_permanent(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut group = c.benchmark_group("permanent");
    for n in [4usize, 8, 12] {
        let u = random_unitary(n, &mut rng).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), u.matrix(), |b, m| b.iter(|| permanent(black_box(m))));
    }
    group.finish();
}

fn bench_apply(c: &mut Criterion) {
    let mut group = c.benchmark_group("apply_dft");
    for ports in [3usize, 4, 6] {
        let u = dft_unitary(ports).unwrap();
        let input = StateVector::product_input(&vec![1; ports]).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(ports), &input, |b, s| b.iter(|| apply(&u, black_box(s)).unwrap()));
    }
    group.finish();
}

fn bench_schemes(c: &mut Criterion) {
    let mut group = c.benchmark_group("build_and_run");
    group.sample_size(10);
    for spec in [
        SchemeSpec::qudit(SchemeKind::QuditBell3Sms, 3),
        SchemeSpec::qudit(SchemeKind::QuditGhz4Sms, 2),
        SchemeSpec::qudit(SchemeKind::QuditBell3SmsSubtracted, 3),
        SchemeSpec::chain(6),
    ] {
        let label = format!("{}/{}", spec.kind, if spec.kind == SchemeKind::QubitGhzChain { spec.n_ghz } else { spec.d });
        group.bench_function(label, |b| b.iter(|| build_and_run(black_box(&spec)).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, bench_permanent, bench_apply, bench_schemes);
criterion_main!(benches);
