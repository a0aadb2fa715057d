//! Batch integration throughput: the data-parallel `integrate_batch` against
//! a plain sequential loop over the same draws. Build with
//! `--no-default-features` to time the sequential fallback inside
//! `integrate_batch` itself.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use liegeo::algebra::{AlgebraElement, GroupElement};
use liegeo::filtration::catalog;
use liegeo::flows::{integrate, integrate_batch, ChainField, IntegrateOpts};

fn random_momenta(count: usize, n: usize, seed: u64) -> Vec<AlgebraElement> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = n * (n - 1) / 2;
    (0..count)
        .map(|_| {
            let coeffs =
                nalgebra::DVector::from_iterator(d, (0..d).map(|_| rng.gen_range(-1.0..1.0)));
            AlgebraElement::from_coeffs(n, coeffs).unwrap()
        })
        .collect()
}

fn bench_batch(c: &mut Criterion) {
    let entry = catalog("u1-su2-u2-so4").unwrap();
    let field = ChainField::new(entry.filtration.clone(), vec![0.5, 1.5, -0.7, 2.0]).unwrap();
    let opts = IntegrateOpts {
        t_end: 1.0,
        step: 1e-3,
        record_every: 100,
        reproject: true,
    };
    let g0 = GroupElement::identity(4);

    let mut group = c.benchmark_group("integrate");
    for count in [8usize, 32, 128] {
        let draws = random_momenta(count, 4, 7);
        let starts: Vec<(GroupElement, AlgebraElement)> =
            draws.iter().map(|x| (g0.clone(), x.clone())).collect();
        group.bench_with_input(BenchmarkId::new("batch", count), &starts, |b, starts| {
            b.iter(|| {
                integrate_batch(&field, starts, opts)
                    .into_iter()
                    .map(|r| r.unwrap())
                    .collect::<Vec<_>>()
            })
        });
        group.bench_with_input(BenchmarkId::new("sequential", count), &starts, |b, starts| {
            b.iter(|| {
                starts
                    .iter()
                    .map(|(g, x)| integrate(&field, g, x, opts, &[]).unwrap())
                    .collect::<Vec<_>>()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench_batch);
criterion_main!(benches);
