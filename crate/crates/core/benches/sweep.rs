//! Sequential vs rayon scheduling of independent noisy runs.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use undergrad::algorithms::{undergrad_run, RunOptions, UnderGradParams};
use undergrad::oracle::{derive_stream, Oracle};
use undergrad::par::{map_runs, Execution};
use undergrad::problems::Problem;

fn sweep(c: &mut Criterion) {
    let problem = Problem::linear_simplex_random(100, 7).unwrap();
    let seeds: Vec<u64> = (0..16).collect();
    let mut group = c.benchmark_group("seed_sweep");
    group.sample_size(10);
    for (name, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
        group.bench_with_input(BenchmarkId::new(name, seeds.len()), &exec, |b, &exec| {
            b.iter(|| {
                map_runs(exec, &seeds, |&s| {
                    let mut o = Oracle::with_default_noise(&problem, 0.1, derive_stream(7, s))?;
                    undergrad_run(&problem, &mut o, &RunOptions::new(2000), &UnderGradParams::default())
                        .map(|t| t.final_gap())
                })
                .unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, sweep);
criterion_main!(benches);
