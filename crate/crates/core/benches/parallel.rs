//! Parallel-vs-sequential throughput of the Monte Carlo batch runner.
//!
//! Both lanes run the same seeded per-item closures, so they produce
//! bit-identical outputs; the benches measure the speedup of the rayon
//! lane on realistic workloads (routing-criterion draws and Hawkes batch
//! simulation).

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use execlab_core::hawkes::{simulate_hawkes, HawkesParams};
use execlab_core::par::{map_collect, Parallelism};
use execlab_core::rng::stream_rng;
use execlab_core::sor::{simulate_waiting_time, QueueLaw, SizeLaw, VenueSpec};
use std::hint::black_box;

fn venues() -> Vec<VenueSpec> {
    vec![
        VenueSpec {
            intensity: 1.0,
            queue_law: QueueLaw::Geometric { mean: 4.0 },
            event_size: SizeLaw::Geometric { mean: 2.0 },
        },
        VenueSpec {
            intensity: 2.0,
            queue_law: QueueLaw::Geometric { mean: 8.0 },
            event_size: SizeLaw::unit(),
        },
        VenueSpec {
            intensity: 0.5,
            queue_law: QueueLaw::Constant { value: 3.0 },
            event_size: SizeLaw::unit(),
        },
    ]
}

fn bench_routing_draws(c: &mut Criterion) {
    let venues = venues();
    let weights = [0.5, 0.3, 0.2];
    let mut group = c.benchmark_group("routing_criterion_draws");
    for policy in [Parallelism::Auto, Parallelism::Sequential] {
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{policy:?}")),
            &policy,
            |b, &policy| {
                b.iter(|| {
                    let draws = map_collect(policy, 4096, |i| {
                        let mut rng = stream_rng(7, i as u64);
                        let mut worst = 0.0f64;
                        for (r, venue) in weights.iter().zip(&venues) {
                            let outcome = simulate_waiting_time(venue, r * 20.0, &mut rng);
                            worst = worst.max(outcome.elapsed);
                        }
                        worst
                    });
                    black_box(draws)
                })
            },
        );
    }
    group.finish();
}

fn bench_hawkes_batch(c: &mut Criterion) {
    let params = HawkesParams {
        mu_bid: 1.0,
        mu_ask: 1.0,
        excitation: 0.5,
        decay: 1.0,
    };
    let mut group = c.benchmark_group("hawkes_batch");
    group.sample_size(10);
    for policy in [Parallelism::Auto, Parallelism::Sequential] {
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{policy:?}")),
            &policy,
            |b, &policy| {
                b.iter(|| {
                    let counts = map_collect(policy, 64, |seed| {
                        simulate_hawkes(&params, 200.0, seed as u64)
                            .expect("stable parameters")
                            .n_events()
                    });
                    black_box(counts)
                })
            },
        );
    }
    group.finish();
}

criterion_group!(benches, bench_routing_draws, bench_hawkes_batch);
criterion_main!(benches);
