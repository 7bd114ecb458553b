//! Choosing the base sampler for a fixed partition and the partition for a
//! fixed sampler: lifting orbit-space chains, the star sampler, the
//! entropy-minimising partition and exact-sampler constructions.

use nalgebra::DMatrix;

use crate::dist::Distribution;
use crate::error::{Error, Result};
use crate::kernel::{Kernel, KernelFlags};
use crate::partition::OrbitPartition;
use crate::tol::Tolerances;

/// A row-stochastic chain on the orbit space, stationary for the orbit-mass
/// distribution.
#[derive(Debug, Clone)]
pub struct OrbitSampler {
    pub matrix: DMatrix<f64>,
    pub pibar: Distribution,
}

impl OrbitSampler {
    pub fn new(matrix: DMatrix<f64>, pibar: Distribution) -> Result<Self> {
        let tol = Tolerances::default();
        let k = pibar.n();
        if matrix.nrows() != k || matrix.ncols() != k {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{}, orbit space has {k} blocks",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let kernel = Kernel::validated_with(matrix, pibar, &tol)?;
        if kernel.flags().stationary != Some(true) {
            return Err(Error::InvalidArgument(
                "orbit sampler is not stationary for the orbit masses".into(),
            ));
        }
        Ok(Self {
            matrix: kernel.matrix().clone(),
            pibar: kernel.reference().clone(),
        })
    }

    pub fn k(&self) -> usize {
        self.pibar.n()
    }

    pub fn as_kernel(&self) -> Kernel {
        Kernel::with_flags(
            self.matrix.clone(),
            self.pibar.clone(),
            KernelFlags {
                row_stochastic: Some(true),
                stationary: Some(true),
                reversible: None,
            },
        )
    }
}

/// Lifts an orbit-space chain to the full state space:
/// `Q(x, y) = Ptilde(i, j) pi(y) / pi(O_j)` for `x in O_i`, `y in O_j`.
/// Stationary for pi, and reversible whenever the orbit chain is reversible.
pub fn lift_orbit_sampler(
    ps: &OrbitSampler,
    part: &OrbitPartition,
    pi: &Distribution,
) -> Result<Kernel> {
    if part.n() != pi.n() {
        return Err(Error::DimensionMismatch(format!(
            "partition over {} states, distribution over {}",
            part.n(),
            pi.n()
        )));
    }
    if ps.k() != part.k() {
        return Err(Error::DimensionMismatch(format!(
            "orbit sampler has {} blocks, partition has {}",
            ps.k(),
            part.k()
        )));
    }
    let masses = part.orbit_masses(pi);
    if masses
        .iter()
        .zip(ps.pibar.probs())
        .any(|(a, b)| (a - b).abs() > 1e-10)
    {
        return Err(Error::DimensionMismatch(
            "orbit sampler masses do not match the partition".into(),
        ));
    }
    let n = pi.n();
    let mut matrix = DMatrix::zeros(n, n);
    for x in 0..n {
        let i = part.orbit_of(x);
        for y in 0..n {
            let j = part.orbit_of(y);
            matrix[(x, y)] = ps.matrix[(i, j)] * pi.get(y) / masses[j];
        }
    }
    Ok(Kernel::with_flags(
        matrix,
        pi.clone(),
        KernelFlags {
            row_stochastic: Some(true),
            stationary: Some(true),
            reversible: None,
        },
    ))
}

/// The isometry from orbit space into state space: `(U f)(x) = f(i)` for
/// `x in O_i`.
pub fn orbit_isometry(f: &[f64], part: &OrbitPartition) -> Vec<f64> {
    assert_eq!(f.len(), part.k());
    (0..part.n()).map(|x| f[part.orbit_of(x)]).collect()
}

/// Its adjoint: `(U* g)(i) = sum_{x in O_i} pi(x) g(x) / pi(O_i)`.
/// `U* U` is the identity on orbit space and `U U*` acts as the Gibbs kernel.
pub fn orbit_isometry_adjoint(g: &[f64], part: &OrbitPartition, pi: &Distribution) -> Vec<f64> {
    assert_eq!(g.len(), part.n());
    part.orbits()
        .iter()
        .map(|orbit| {
            let mass = pi.mass(orbit);
            orbit.iter().map(|&x| pi.get(x) * g[x]).sum::<f64>() / mass
        })
        .collect()
}

/// The rank-2 orbit chain that routes every transition through the heaviest
/// block: rows `1..k-1` jump straight to block `k`, the last row redistributes
/// with `Pbar(k, j) = pibar_j / pibar_k` and holds with `2 - 1/pibar_k`.
///
/// Requires the masses sorted non-decreasing with the largest above 1/2
/// (otherwise the holding probability turns negative). The spectrum is
/// `{1, 0, ..., 0, 1 - 1/pibar_k}`.
pub fn star_orbit_sampler(pibar: &Distribution) -> Result<OrbitSampler> {
    let k = pibar.n();
    if pibar.probs().windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::NotSorted("orbit masses must be non-decreasing"));
    }
    let top = pibar.get(k - 1);
    if top <= 0.5 {
        return Err(Error::MassNotDominant(top));
    }
    let mut matrix = DMatrix::zeros(k, k);
    for i in 0..k - 1 {
        matrix[(i, k - 1)] = 1.0;
    }
    for j in 0..k - 1 {
        matrix[(k - 1, j)] = pibar.get(j) / top;
    }
    matrix[(k - 1, k - 1)] = 2.0 - 1.0 / top;
    OrbitSampler::new(matrix, pibar.clone())
}

/// KL divergence of the star chain from the orbit-space projector, in closed
/// form: `2 (1 - t) ln(1/t) + (2t - 1) ln((2t - 1) / t^2)` with `t` the
/// dominant mass. Tends to 0 as `t` tends to 1.
pub fn star_kl_to_projector(top_mass: f64) -> f64 {
    let t = top_mass;
    2.0 * (1.0 - t) * (1.0 / t).ln() + (2.0 * t - 1.0) * ((2.0 * t - 1.0) / (t * t)).ln()
}

/// The k-block partition minimising the KL divergence of its Gibbs kernel
/// from the stationary projector: the `k - 1` smallest-mass states become
/// singletons and the rest form one block. Ties are broken by state index so
/// the result is deterministic.
pub fn optimal_partition_for_k(pi: &Distribution, k: usize) -> Result<OrbitPartition> {
    let n = pi.n();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "block count {k} out of range [1, {n}]"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        pi.get(a)
            .partial_cmp(&pi.get(b))
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut orbits: Vec<Vec<usize>> = order[..k - 1].iter().map(|&x| vec![x]).collect();
    let mut tail: Vec<usize> = order[k - 1..].to_vec();
    tail.sort_unstable();
    orbits.push(tail);
    OrbitPartition::new(n, orbits)
}

/// Residuals of the four structural conditions under which the Gibbs sandwich
/// of `P` over a singletons-plus-tail partition equals the stationary
/// projector exactly.
#[derive(Debug, Clone, Copy)]
pub struct ExactSamplerVerdict {
    /// `P(x, y) = pi(y)` on singleton rows and columns.
    pub singleton_rows: f64,
    /// Each singleton row puts exactly the tail mass on the tail block.
    pub tail_row_mass: f64,
    /// pi-weighted tail columns aggregate to `pi(tail) pi(y)`.
    pub tail_column_mass: f64,
    /// The pi-weighted mass staying inside the tail is `pi(tail)^2`.
    pub tail_block_mass: f64,
    pub passes: bool,
}

impl ExactSamplerVerdict {
    pub fn max_residual(&self) -> f64 {
        self.singleton_rows
            .max(self.tail_row_mass)
            .max(self.tail_column_mass)
            .max(self.tail_block_mass)
    }
}

fn split_singletons_tail(part: &OrbitPartition) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut non_singletons = part.orbits().iter().filter(|o| o.len() > 1);
    let tail = match (non_singletons.next(), non_singletons.next()) {
        (Some(t), None) => t.clone(),
        (None, None) => return Err(Error::WrongPartitionShape),
        _ => return Err(Error::WrongPartitionShape),
    };
    let singles: Vec<usize> = part
        .orbits()
        .iter()
        .filter(|o| o.len() == 1)
        .map(|o| o[0])
        .collect();
    Ok((singles, tail))
}

/// Checks the four exactness conditions; `passes` means every residual is at
/// most 1e-10, equivalently the Gibbs sandwich of `P` equals the projector.
pub fn exact_sampler_check(p: &Kernel, part: &OrbitPartition) -> Result<ExactSamplerVerdict> {
    if part.n() != p.n() {
        return Err(Error::DimensionMismatch(format!(
            "partition over {} states, kernel over {}",
            part.n(),
            p.n()
        )));
    }
    let (singles, tail) = split_singletons_tail(part)?;
    let pi = p.reference();
    let tail_mass = pi.mass(&tail);

    let mut r1 = 0.0f64;
    for &x in &singles {
        for &y in &singles {
            r1 = r1.max((p.entry(x, y) - pi.get(y)).abs());
        }
    }
    let mut r2 = 0.0f64;
    for &x in &singles {
        let s: f64 = tail.iter().map(|&w| p.entry(x, w)).sum();
        r2 = r2.max((s - tail_mass).abs());
    }
    let mut r3 = 0.0f64;
    for &y in &singles {
        let s: f64 = tail.iter().map(|&z| pi.get(z) * p.entry(z, y)).sum();
        r3 = r3.max((s - tail_mass * pi.get(y)).abs());
    }
    let mut block = 0.0;
    for &z in &tail {
        for &w in &tail {
            block += pi.get(z) * p.entry(z, w);
        }
    }
    let r4 = (block - tail_mass * tail_mass).abs();

    let passes = r1 <= 1e-10 && r2 <= 1e-10 && r3 <= 1e-10 && r4 <= 1e-10;
    Ok(ExactSamplerVerdict {
        singleton_rows: r1,
        tail_row_mass: r2,
        tail_column_mass: r3,
        tail_block_mass: r4,
        passes,
    })
}

/// Builds a kernel satisfying the four exactness conditions from free tail
/// rows: singleton rows get `P(x, y) = pi(y)` on singleton columns and the
/// given free entries on tail columns (each row summing to the tail mass);
/// the tail rows are then forced:
/// `P(z, y) = (pi(y) - sum_singles pi(x) P(x, y)) / pi(tail)` on tail columns
/// and `P(z, y) = pi(y)` on singleton columns.
pub fn construct_exact_sampler(
    part: &OrbitPartition,
    pi: &Distribution,
    free_block: &[Vec<f64>],
) -> Result<Kernel> {
    if part.n() != pi.n() {
        return Err(Error::DimensionMismatch(format!(
            "partition over {} states, distribution over {}",
            part.n(),
            pi.n()
        )));
    }
    let (singles, tail) = split_singletons_tail(part)?;
    let tail_mass = pi.mass(&tail);
    if free_block.len() != singles.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} free rows for {} singleton states",
            free_block.len(),
            singles.len()
        )));
    }
    for (r, row) in free_block.iter().enumerate() {
        if row.len() != tail.len() {
            return Err(Error::DimensionMismatch(format!(
                "free row {r} has {} entries, tail has {}",
                row.len(),
                tail.len()
            )));
        }
        if let Some(&v) = row.iter().find(|&&v| v < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "free row {r} has a negative entry {v}"
            )));
        }
        let sum: f64 = row.iter().sum();
        if (sum - tail_mass).abs() > 1e-12 {
            return Err(Error::FreeRowSum {
                row: r,
                got: sum,
                want: tail_mass,
            });
        }
    }
    let n = pi.n();
    let mut matrix = DMatrix::zeros(n, n);
    for (r, &x) in singles.iter().enumerate() {
        for &y in &singles {
            matrix[(x, y)] = pi.get(y);
        }
        for (c, &y) in tail.iter().enumerate() {
            matrix[(x, y)] = free_block[r][c];
        }
    }
    // Tail columns are forced by stationarity of the singleton rows.
    let mut induced = vec![0.0f64; tail.len()];
    for (c, &y) in tail.iter().enumerate() {
        let pushed: f64 = singles
            .iter()
            .enumerate()
            .map(|(r, &x)| pi.get(x) * free_block[r][c])
            .sum();
        let v = (pi.get(y) - pushed) / tail_mass;
        if v < -1e-12 {
            return Err(Error::NegativeInducedEntry(v));
        }
        induced[c] = v.max(0.0);
    }
    for &z in &tail {
        for &y in &singles {
            matrix[(z, y)] = pi.get(y);
        }
        for (c, &y) in tail.iter().enumerate() {
            matrix[(z, y)] = induced[c];
        }
    }
    Kernel::validated(matrix, pi.clone())
}
