//! Seeded random instances: distributions, partitions and Metropolised
//! reversible kernels.
//!
//! Everything derives from a counter-based ChaCha stream so that a `(seed,
//! stream)` pair pins down an instance exactly, independent of thread count
//! or platform.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dist::Distribution;
use crate::kernel::{Kernel, KernelFlags};
use crate::partition::OrbitPartition;

/// Identity of the generator family recorded in reports.
pub const RNG_ALGORITHM: &str = "chacha8";

/// Independent stream `stream` of the generator seeded with `seed`.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A full-support distribution with weights uniform on `[0.2, 1.0]`, so no
/// state is vanishingly small.
pub fn random_distribution(n: usize, rng: &mut impl Rng) -> Distribution {
    let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..1.0)).collect();
    Distribution::from_weights(&weights).expect("weights are positive")
}

/// A balanced random partition into `k` blocks for a uniform `k` in
/// `[1, n-1]`; with `k < n` at least one block has two states.
pub fn random_partition(n: usize, rng: &mut impl Rng) -> OrbitPartition {
    assert!(n >= 2);
    let k = rng.random_range(1..n);
    random_partition_with_k(n, k, rng)
}

/// A balanced random partition into exactly `k` blocks (round-robin over a
/// shuffled state order).
pub fn random_partition_with_k(n: usize, k: usize, rng: &mut impl Rng) -> OrbitPartition {
    assert!(k >= 1 && k <= n);
    let mut states: Vec<usize> = (0..n).collect();
    states.shuffle(rng);
    let mut orbits = vec![Vec::new(); k];
    for (idx, state) in states.into_iter().enumerate() {
        orbits[idx % k].push(state);
    }
    OrbitPartition::new(n, orbits).expect("round-robin covers all states")
}

/// Any random partition, including possibly all singletons.
pub fn random_partition_any(n: usize, rng: &mut impl Rng) -> OrbitPartition {
    let k = rng.random_range(1..=n);
    random_partition_with_k(n, k, rng)
}

/// A pi-reversible ergodic kernel: Metropolise a strictly positive random
/// proposal. Every off-diagonal entry is positive, so the chain is
/// irreducible and aperiodic.
pub fn random_reversible_kernel(pi: &Distribution, rng: &mut impl Rng) -> Kernel {
    let n = pi.n();
    let mut proposal = DMatrix::from_fn(n, n, |_, _| rng.random_range(0.05..1.0));
    for x in 0..n {
        let row_sum: f64 = proposal.row(x).iter().sum();
        for y in 0..n {
            proposal[(x, y)] /= row_sum;
        }
    }
    let mut matrix = DMatrix::zeros(n, n);
    for x in 0..n {
        let mut off = 0.0;
        for y in 0..n {
            if y == x {
                continue;
            }
            let ratio = pi.get(y) * proposal[(y, x)] / (pi.get(x) * proposal[(x, y)]);
            let v = proposal[(x, y)] * ratio.min(1.0);
            matrix[(x, y)] = v;
            off += v;
        }
        matrix[(x, x)] = 1.0 - off;
    }
    Kernel::from_construction(matrix, pi.clone())
}

/// A random member of the sandwich-invariant set for a partition: a random
/// reversible chain on the orbit space lifted back to the states.
pub fn random_invariant_member(
    part: &OrbitPartition,
    pi: &Distribution,
    rng: &mut impl Rng,
) -> Kernel {
    let pibar = part.orbit_distribution(pi);
    let orbit_chain = random_reversible_kernel(&pibar, rng);
    let sampler = crate::design::OrbitSampler {
        matrix: orbit_chain.matrix().clone(),
        pibar,
    };
    let lifted = crate::design::lift_orbit_sampler(&sampler, part, pi)
        .expect("orbit chain matches the partition");
    Kernel::with_flags(
        lifted.matrix().clone(),
        pi.clone(),
        KernelFlags {
            row_stochastic: Some(true),
            stationary: Some(true),
            reversible: Some(true),
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_independent() {
        let a: Vec<u32> = {
            let mut r = seeded_rng(7, 0);
            (0..4).map(|_| r.random()).collect()
        };
        let b: Vec<u32> = {
            let mut r = seeded_rng(7, 0);
            (0..4).map(|_| r.random()).collect()
        };
        let c: Vec<u32> = {
            let mut r = seeded_rng(7, 1);
            (0..4).map(|_| r.random()).collect()
        };
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn random_reversible_kernel_is_valid() {
        let mut rng = seeded_rng(3, 0);
        for _ in 0..20 {
            let n = rng.random_range(3..10);
            let pi = random_distribution(n, &mut rng);
            let p = random_reversible_kernel(&pi, &mut rng);
            assert!(p.stationarity_residual() < 1e-12);
            assert!(p.reversibility_residual() < 1e-12);
        }
    }

    #[test]
    fn random_partition_has_non_singleton() {
        let mut rng = seeded_rng(11, 0);
        for _ in 0..50 {
            let part = random_partition(8, &mut rng);
            assert!(part.has_non_singleton());
        }
    }

    #[test]
    fn invariant_member_passes_membership() {
        let mut rng = seeded_rng(5, 2);
        let pi = random_distribution(7, &mut rng);
        let part = random_partition(7, &mut rng);
        let q = random_invariant_member(&part, &pi, &mut rng);
        let verdict = crate::kl::invariant_set_membership(&q, &part).unwrap();
        assert!(verdict.is_member(), "residual {}", verdict.residual());
    }
}
