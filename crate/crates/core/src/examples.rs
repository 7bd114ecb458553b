//! Small worked instances reused by the golden regression suite, the CLI and
//! the tests.

use nalgebra::DMatrix;

use crate::dist::Distribution;
use crate::kernel::Kernel;
use crate::partition::OrbitPartition;

/// Three states with `pi = (0.3, 0.3, 0.4)` and orbits `{1,2}, {3}`.
///
/// The Gibbs sandwich of this kernel keeps the projection chain intact while
/// its restriction chain on the first orbit mixes strictly worse than the
/// original restriction, which pins down that orbit-local gaps can
/// deteriorate even though the global gap never does.
pub fn three_state_projection_example() -> (Distribution, OrbitPartition, Kernel) {
    let pi = Distribution::new(vec![0.3, 0.3, 0.4]).unwrap();
    let part = OrbitPartition::new(3, vec![vec![0, 1], vec![2]]).unwrap();
    let matrix = DMatrix::from_row_slice(
        3,
        3,
        &[
            0.0, 0.4, 0.6, //
            0.4, 0.0, 0.6, //
            0.45, 0.45, 0.10,
        ],
    );
    let p = Kernel::validated(matrix, pi.clone()).unwrap();
    (pi, part, p)
}

/// Four states with `pi = (0.1, 0.2, 0.3, 0.4)`, orbits `{1,2}, {3,4}` and
/// the standard uniform-proposal Metropolis kernel for `pi`.
///
/// Along with its lazified variant this instance witnesses that the exact
/// Pythagorean split under KL holds for the Gibbs sandwich only: the
/// Metropolis-Hastings analogue over- and under-shoots depending on the
/// kernel.
pub fn four_state_kl_example() -> (Distribution, OrbitPartition, Kernel) {
    let pi = Distribution::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
    let part = OrbitPartition::new(4, vec![vec![0, 1], vec![2, 3]]).unwrap();
    let third = 1.0 / 3.0;
    let matrix = DMatrix::from_row_slice(
        4,
        4,
        &[
            0.0,
            third,
            third,
            third,
            1.0 / 6.0,
            1.0 / 6.0,
            third,
            third,
            1.0 / 9.0,
            2.0 / 9.0,
            third,
            third,
            1.0 / 12.0,
            1.0 / 6.0,
            0.25,
            0.5,
        ],
    );
    let p = Kernel::validated(matrix, pi.clone()).unwrap();
    (pi, part, p)
}

/// Five states with `pi = (0.05, 0.1, 0.2, 0.25, 0.4)` and orbits
/// `{1}, {2}, {3,4,5}`: a kernel that is far from the stationary projector
/// yet whose Gibbs sandwich equals it exactly.
pub fn five_state_exact_example() -> (Distribution, OrbitPartition, Kernel) {
    let pi = Distribution::new(vec![0.05, 0.1, 0.2, 0.25, 0.4]).unwrap();
    let part = OrbitPartition::new(5, vec![vec![0], vec![1], vec![2, 3, 4]]).unwrap();
    let a = 14.0 / 85.0;
    let b = 83.0 / 340.0;
    let c = 15.0 / 34.0;
    let matrix = DMatrix::from_row_slice(
        5,
        5,
        &[
            0.05, 0.1, 0.0, 0.35, 0.50, //
            0.05, 0.1, 0.6, 0.25, 0.0, //
            0.05, 0.1, a, b, c, //
            0.05, 0.1, a, b, c, //
            0.05, 0.1, a, b, c,
        ],
    );
    let p = Kernel::validated(matrix, pi.clone()).unwrap();
    (pi, part, p)
}

/// The lazy reflecting random walk on a path of `n` states. Its spectrum is
/// `1/2 + cos((m-1) pi / (n-1)) / 2`.
///
/// The reversibilising distribution weights the two endpoints half as much
/// as the interior: the boundary rows hold and step with probability 1/2
/// each, while interior states return only 1/4.
pub fn lazy_random_walk(n: usize) -> Kernel {
    assert!(n >= 2);
    let mut weights = vec![2.0; n];
    weights[0] = 1.0;
    weights[n - 1] = 1.0;
    let pi = Distribution::from_weights(&weights).unwrap();
    let mut matrix = DMatrix::zeros(n, n);
    matrix[(0, 0)] = 0.5;
    matrix[(0, 1)] = 0.5;
    matrix[(n - 1, n - 1)] = 0.5;
    matrix[(n - 1, n - 2)] = 0.5;
    for x in 1..n - 1 {
        matrix[(x, x - 1)] = 0.25;
        matrix[(x, x)] = 0.5;
        matrix[(x, x + 1)] = 0.25;
    }
    Kernel::validated(matrix, pi).unwrap()
}

/// Closed-form eigenvalues of [`lazy_random_walk`], non-increasing.
pub fn lazy_random_walk_spectrum(n: usize) -> Vec<f64> {
    (1..=n)
        .map(|m| 0.5 + 0.5 * (((m - 1) as f64) * std::f64::consts::PI / ((n - 1) as f64)).cos())
        .collect()
}
