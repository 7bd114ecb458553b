//! Compares the rayon-backed batch paths against their sequential twins on
//! the three hot loops: worst-case total-variation scans, streaming
//! transition sampling, and seed-sweep spectral batches.
//!
//! Run with `cargo bench -p orbit-mcmc`.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use orbit_mcmc::curie_weiss::{
    empirical_transition_counts, state_to_spins, CwModel, CwStarSampler,
};
use orbit_mcmc::kernel::{build_orbit_kernel, sandwich, OrbitKernelKind};
use orbit_mcmc::random::{
    random_distribution, random_partition, random_reversible_kernel, seeded_rng,
};
use orbit_mcmc::stats::{worst_row_tv, worst_row_tv_seq};
use orbit_mcmc::{matrix_power, par, spectral};

fn bench_tv_scan(c: &mut Criterion) {
    let model = CwModel::new(8, 2.25).unwrap();
    let glauber = orbit_mcmc::curie_weiss::glauber_kernel(&model).unwrap();
    let power = matrix_power(glauber.matrix(), 256);
    let pi = glauber.reference().clone();
    let mut group = c.benchmark_group("worst_row_tv_256_states");
    group.bench_function("parallel", |b| b.iter(|| worst_row_tv(&power, &pi)));
    group.bench_function("sequential", |b| b.iter(|| worst_row_tv_seq(&power, &pi)));
    group.finish();
}

fn bench_transition_sampling(c: &mut Criterion) {
    let model = CwModel::new(8, 2.25).unwrap();
    let from = state_to_spins(0b0000_1111, 8);
    let samples = 200_000u64;
    let mut group = c.benchmark_group("star_transition_sampling");
    group.sample_size(10);
    group.bench_with_input(
        BenchmarkId::new("parallel_chunks", samples),
        &samples,
        |b, &s| {
            b.iter(|| empirical_transition_counts(&model, 1, &from, s, 42).unwrap());
        },
    );
    group.bench_with_input(
        BenchmarkId::new("sequential_loop", samples),
        &samples,
        |b, &s| {
            b.iter(|| {
                let sampler = CwStarSampler::new(model, 1).unwrap();
                let mut rng = seeded_rng(42, 0);
                let mut counts = vec![0u64; 256];
                for _ in 0..s {
                    let next = sampler.step(&from, &mut rng);
                    counts[orbit_mcmc::curie_weiss::spins_to_state(&next)] += 1;
                }
                counts
            });
        },
    );
    group.finish();
}

fn slem_gap_for_seed(seed: u64) -> f64 {
    let mut rng = seeded_rng(seed, 0);
    let n = 10;
    let pi = random_distribution(n, &mut rng);
    let part = random_partition(n, &mut rng);
    let p = random_reversible_kernel(&pi, &mut rng);
    let g = build_orbit_kernel(OrbitKernelKind::Gibbs, &part, &pi).unwrap();
    let gpg = sandwich(&g, &p, &g).unwrap();
    let rho_p = spectral::spectrum_reversible(&p).unwrap().slem;
    let rho_gpg = spectral::spectrum_reversible(&gpg).unwrap().slem;
    rho_p - rho_gpg
}

fn bench_seed_sweep(c: &mut Criterion) {
    let seeds = 64usize;
    let mut group = c.benchmark_group("spectral_seed_sweep");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| par::map_indexed(seeds, |s| slem_gap_for_seed(s as u64)))
    });
    group.bench_function("sequential", |b| {
        b.iter(|| par::map_indexed_seq(seeds, |s| slem_gap_for_seed(s as u64)))
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_tv_scan,
    bench_transition_sampling,
    bench_seed_sweep
);
criterion_main!(benches);
