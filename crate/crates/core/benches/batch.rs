use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use flag_core::batch;
use flag_core::frame::{FrameSpec, MacAddress, ETHERTYPE_PROFINET_RT};
use flag_core::{LineRate, Load, LoadConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn jobs(n: usize) -> Vec<LoadConfig> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    (0..n)
        .map(|_| {
            let spec = FrameSpec::zeroed(
                MacAddress::BROADCAST,
                MacAddress([2, 0, 0, 0, 0, 1]),
                None,
                ETHERTYPE_PROFINET_RT,
                rng.random_range(46..=1500),
            )
            .unwrap();
            let rate = if rng.random_bool(0.5) {
                LineRate::Fast
            } else {
                LineRate::Gigabit
            };
            let load = Load::new(rng.random_range(0.05..=1.0)).unwrap();
            LoadConfig::new(load, rate, rng.random_range(200..2000), spec).unwrap()
        })
        .collect()
}

fn bench(c: &mut Criterion) {
    let mut group = c.benchmark_group("evaluate");
    group.sample_size(10);
    for n in [8, 64] {
        let configs = jobs(n);
        group.throughput(Throughput::Elements(n as u64));
        group.bench_with_input(BenchmarkId::new("sequential", n), &configs, |b, c| {
            b.iter(|| batch::evaluate_sequential(c))
        });
        #[cfg(feature = "parallel")]
        group.bench_with_input(BenchmarkId::new("parallel", n), &configs, |b, c| {
            b.iter(|| batch::evaluate_parallel(c))
        });
    }
    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
