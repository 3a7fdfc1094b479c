// SPDX-License-Identifier: Apache-2.0

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use cr_tanh::analysis::{Approximation, Mode, SweepConfig};
use cr_tanh::sweep;
use cr_tanh::QFormat;

fn sweeps(c: &mut Criterion) {
    let mut group = c.benchmark_group("exhaustive-sweep");
    group.sample_size(20);
    for mode in [Mode::Real, Mode::FixedDatapath] {
        let approx = Approximation::new(&SweepConfig {
            mode,
            ..SweepConfig::default()
        })
        .unwrap();
        let codes = QFormat::Q2_13.codes();

        group.bench_function(BenchmarkId::new("sequential", mode), |b| {
            b.iter(|| sweep::sequential(codes.clone(), |x| approx.error(x)))
        });
        #[cfg(feature = "parallel")]
        group.bench_function(BenchmarkId::new("parallel", mode), |b| {
            b.iter(|| sweep::parallel(codes.clone(), sweep::DEFAULT_CHUNK, |x| approx.error(x)))
        });
    }
    group.finish();
}

fn tables(c: &mut Criterion) {
    let mut group = c.benchmark_group("reproduce-tables");
    group.sample_size(10);
    group.bench_function("real", |b| {
        b.iter(|| {
            cr_tanh::analysis::reproduce_tables(
                Mode::Real,
                QFormat::Q2_13,
                cr_tanh::RoundingMode::NearestEven,
            )
            .unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, sweeps, tables);
criterion_main!(benches);
