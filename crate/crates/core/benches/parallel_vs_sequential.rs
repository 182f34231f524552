//! Replicate-level scheduling: sequential loop against the rayon pool.
//! Run with and without `--no-default-features` to compare builds.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use edqd::config::{replicate_seed, RunConfig};
use edqd::evolution::Variant;
use edqd::exec::Exec;
use edqd::experiment::run_replicate;

fn small(variant: Variant) -> RunConfig {
    let mut c = RunConfig::new(variant);
    c.population = 20;
    c.lifetime = 100;
    c.generations = 5;
    c
}

fn replicates(c: &mut Criterion) {
    let mut group = c.benchmark_group("replicates");
    group.sample_size(10);
    for variant in [Variant::M3, Variant::MedeaFps] {
        let cfg = small(variant);
        for (name, exec) in [
            ("sequential", Exec::Sequential),
            ("parallel", Exec::Parallel),
        ] {
            group.bench_with_input(BenchmarkId::new(name, variant), &cfg, |b, cfg| {
                b.iter(|| {
                    exec.map(8, |i| {
                        black_box(
                            run_replicate(cfg, replicate_seed(1, i), &mut ())
                                .generations
                                .len(),
                        )
                    })
                })
            });
        }
    }
    group.finish();
}

fn world_step(c: &mut Criterion) {
    use rand::SeedableRng;
    let cfg = RunConfig::new(Variant::M1);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let mut world = edqd::experiment::initial_world(&cfg, &mut rng);
    c.bench_function("world_step_200_robots", |b| b.iter(|| world.step(&mut rng)));
}

criterion_group!(benches, replicates, world_step);
criterion_main!(benches);
