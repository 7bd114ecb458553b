use nalgebra::DMatrix;

use crate::dist::Distribution;
use crate::error::{Error, Result};
use crate::linalg;
use crate::partition::OrbitPartition;
use crate::tol::Tolerances;

/// Validation state of the three structural kernel properties. `None` means
/// the property has not been checked.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct KernelFlags {
    pub row_stochastic: Option<bool>,
    pub stationary: Option<bool>,
    pub reversible: Option<bool>,
}

/// The three canonical orbit-kernel constructions over a partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrbitKernelKind {
    Gibbs,
    MetropolisHastings,
    Barker,
}

/// A dense row-stochastic transition matrix annotated with its reference
/// distribution and cached validation flags.
#[derive(Debug, Clone)]
pub struct Kernel {
    matrix: DMatrix<f64>,
    reference: Distribution,
    flags: KernelFlags,
}

impl Kernel {
    /// Validates `matrix` against `pi`: checks row-stochasticity (an error if
    /// violated) and records whether the kernel is stationary and reversible.
    pub fn validated(matrix: DMatrix<f64>, pi: Distribution) -> Result<Self> {
        Self::validated_with(matrix, pi, &Tolerances::default())
    }

    pub fn validated_with(matrix: DMatrix<f64>, pi: Distribution, tol: &Tolerances) -> Result<Self> {
        let n = pi.n();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{}, distribution has {} states",
                matrix.nrows(),
                matrix.ncols(),
                n
            )));
        }
        for x in 0..n {
            let mut row_sum = 0.0;
            for y in 0..n {
                let v = matrix[(x, y)];
                if !v.is_finite() || v < -tol.entry || v > 1.0 + tol.entry {
                    return Err(Error::NonStochastic(format!("entry ({x}, {y}) = {v}")));
                }
                row_sum += v;
            }
            if (row_sum - 1.0).abs() > tol.row_sum {
                return Err(Error::NonStochastic(format!("row {x} sums to {row_sum}")));
            }
        }
        let stationary = stationarity_residual(&matrix, &pi) <= tol.stationarity;
        let reversible = reversibility_residual(&matrix, &pi) <= tol.reversibility;
        Ok(Self {
            matrix,
            reference: pi,
            flags: KernelFlags {
                row_stochastic: Some(true),
                stationary: Some(stationary),
                reversible: Some(reversible),
            },
        })
    }

    /// Wraps a matrix that is stochastic, stationary and reversible by
    /// construction. Checked in debug builds.
    pub(crate) fn from_construction(matrix: DMatrix<f64>, pi: Distribution) -> Self {
        debug_assert!(stationarity_residual(&matrix, &pi) <= 1e-9);
        debug_assert!(reversibility_residual(&matrix, &pi) <= 1e-9);
        Self {
            matrix,
            reference: pi,
            flags: KernelFlags {
                row_stochastic: Some(true),
                stationary: Some(true),
                reversible: Some(true),
            },
        }
    }

    pub(crate) fn with_flags(matrix: DMatrix<f64>, pi: Distribution, flags: KernelFlags) -> Self {
        Self {
            matrix,
            reference: pi,
            flags,
        }
    }

    /// The identity kernel; fixes every distribution.
    pub fn identity(pi: Distribution) -> Self {
        let n = pi.n();
        Self::from_construction(DMatrix::identity(n, n), pi)
    }

    /// The rank-one projector onto stationarity: every row equals `pi`.
    pub fn stationary_projector(pi: Distribution) -> Self {
        let n = pi.n();
        let matrix = DMatrix::from_fn(n, n, |_, y| pi.get(y));
        Self::from_construction(matrix, pi)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.reference.n()
    }

    #[inline]
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    #[inline]
    pub fn reference(&self) -> &Distribution {
        &self.reference
    }

    #[inline]
    pub fn flags(&self) -> KernelFlags {
        self.flags
    }

    #[inline]
    pub fn entry(&self, x: usize, y: usize) -> f64 {
        self.matrix[(x, y)]
    }

    /// Matrix product `self * other`. Stationarity survives products;
    /// reversibility generally does not, so it is left unchecked.
    pub fn multiply(&self, other: &Kernel) -> Result<Kernel> {
        check_same_space(&[self, other])?;
        let matrix = &self.matrix * &other.matrix;
        let stationary = both_true(self.flags.stationary, other.flags.stationary);
        Ok(Kernel::with_flags(
            matrix,
            self.reference.clone(),
            KernelFlags {
                row_stochastic: Some(true),
                stationary,
                reversible: None,
            },
        ))
    }

    /// `self^t` by binary exponentiation; `t = 0` gives the identity.
    pub fn power(&self, t: u64) -> Kernel {
        Kernel::with_flags(
            linalg::matrix_power(&self.matrix, t),
            self.reference.clone(),
            KernelFlags {
                row_stochastic: Some(true),
                stationary: self.flags.stationary,
                reversible: if t == 0 { Some(true) } else { self.flags.reversible },
            },
        )
    }

    pub fn max_diff(&self, other: &Kernel) -> f64 {
        linalg::max_abs_diff(&self.matrix, &other.matrix)
    }

    pub fn stationarity_residual(&self) -> f64 {
        stationarity_residual(&self.matrix, &self.reference)
    }

    pub fn reversibility_residual(&self) -> f64 {
        reversibility_residual(&self.matrix, &self.reference)
    }
}

fn both_true(a: Option<bool>, b: Option<bool>) -> Option<bool> {
    match (a, b) {
        (Some(true), Some(true)) => Some(true),
        _ => None,
    }
}

pub(crate) fn check_same_space(kernels: &[&Kernel]) -> Result<()> {
    let first = kernels[0];
    for k in &kernels[1..] {
        if k.n() != first.n() {
            return Err(Error::DimensionMismatch(format!(
                "kernels act on {} and {} states",
                first.n(),
                k.n()
            )));
        }
        if k.reference().max_diff(first.reference()) > 1e-12 {
            return Err(Error::DimensionMismatch(
                "kernels have different reference distributions".into(),
            ));
        }
    }
    Ok(())
}

pub(crate) fn stationarity_residual(matrix: &DMatrix<f64>, pi: &Distribution) -> f64 {
    let n = pi.n();
    let mut worst = 0.0f64;
    for y in 0..n {
        let mut acc = 0.0;
        for x in 0..n {
            acc += pi.get(x) * matrix[(x, y)];
        }
        worst = worst.max((acc - pi.get(y)).abs());
    }
    worst
}

pub(crate) fn reversibility_residual(matrix: &DMatrix<f64>, pi: &Distribution) -> f64 {
    let n = pi.n();
    let mut worst = 0.0f64;
    for x in 0..n {
        for y in (x + 1)..n {
            worst = worst.max((pi.get(x) * matrix[(x, y)] - pi.get(y) * matrix[(y, x)]).abs());
        }
    }
    worst
}

/// Builds the Gibbs, Metropolis-Hastings or Barker orbit kernel for a
/// partition. All three are stationary and reversible for `pi` and act only
/// within orbits.
///
/// * Gibbs: `G(x, y) = pi(y) / pi(O(x))` for `y` in the orbit of `x`.
/// * Metropolis-Hastings: uniform proposal on the rest of the orbit with
///   acceptance `min(1, pi(y)/pi(x))`; the diagonal absorbs the remainder.
/// * Barker: same proposal with acceptance `pi(y) / (pi(x) + pi(y))`.
///
/// Singleton orbits contribute an identity row. On orbits of size at most 2
/// the Barker kernel coincides with the Gibbs kernel.
pub fn build_orbit_kernel(
    kind: OrbitKernelKind,
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
    let n = pi.n();
    let mut matrix = DMatrix::zeros(n, n);
    for orbit in part.orbits() {
        let m = orbit.len();
        if m == 1 {
            matrix[(orbit[0], orbit[0])] = 1.0;
            continue;
        }
        match kind {
            OrbitKernelKind::Gibbs => {
                let mass = pi.mass(orbit);
                for &x in orbit {
                    for &y in orbit {
                        matrix[(x, y)] = pi.get(y) / mass;
                    }
                }
            }
            OrbitKernelKind::MetropolisHastings | OrbitKernelKind::Barker => {
                let denom = (m - 1) as f64;
                for &x in orbit {
                    let mut off_sum = 0.0;
                    for &y in orbit {
                        if y == x {
                            continue;
                        }
                        let accept = match kind {
                            OrbitKernelKind::MetropolisHastings => (pi.get(y) / pi.get(x)).min(1.0),
                            _ => pi.get(y) / (pi.get(x) + pi.get(y)),
                        };
                        let v = accept / denom;
                        matrix[(x, y)] = v;
                        off_sum += v;
                    }
                    let diag = 1.0 - off_sum;
                    if diag < 0.0 {
                        // Guard against float drift only; a real negative
                        // diagonal means the construction is wrong.
                        if diag < -1e-12 {
                            return Err(Error::NonStochastic(format!(
                                "orbit kernel row {x} has diagonal {diag}"
                            )));
                        }
                        matrix[(x, x)] = 0.0;
                    } else {
                        matrix[(x, x)] = diag;
                    }
                }
            }
        }
    }
    Ok(Kernel::from_construction(matrix, pi.clone()))
}

/// Multiplicative sandwich `Q1 * P * Q2`. With `Q1 = Q2` an orbit kernel this
/// refreshes within orbits before and after the base move.
pub fn sandwich(q1: &Kernel, p: &Kernel, q2: &Kernel) -> Result<Kernel> {
    check_same_space(&[q1, p, q2])?;
    let matrix = &(q1.matrix() * p.matrix()) * q2.matrix();
    let stationary = match (q1.flags().stationary, p.flags().stationary, q2.flags().stationary) {
        (Some(true), Some(true), Some(true)) => Some(true),
        _ => None,
    };
    // (QPQ)* = Q*P*Q* = QPQ when all three are reversible.
    let reversible = match (
        q1.flags().reversible,
        p.flags().reversible,
        q2.flags().reversible,
        q1.max_diff(q2) <= 1e-15,
    ) {
        (Some(true), Some(true), Some(true), true) => Some(true),
        _ => None,
    };
    Ok(Kernel::with_flags(
        matrix,
        p.reference().clone(),
        KernelFlags {
            row_stochastic: Some(true),
            stationary,
            reversible,
        },
    ))
}

/// Closed-form `G P G` over a partition, block by block:
/// `GPG(x, y) = pi(y) / (pi(O(x)) pi(O(y))) * sum_{z in O(x), w in O(y)} pi(z) P(z, w)`.
///
/// This is the independent route against which the matrix-product path
/// `sandwich(G, P, G)` is cross-checked.
pub fn gibbs_sandwich_closed_form(p: &Kernel, part: &OrbitPartition) -> Result<Kernel> {
    if part.n() != p.n() {
        return Err(Error::DimensionMismatch(format!(
            "partition over {} states, kernel over {}",
            part.n(),
            p.n()
        )));
    }
    let pi = p.reference();
    let k = part.k();
    let masses = part.orbit_masses(pi);
    // Block sums S(i, j) = sum_{z in O_i, w in O_j} pi(z) P(z, w).
    let mut block: DMatrix<f64> = DMatrix::zeros(k, k);
    for (i, oi) in part.orbits().iter().enumerate() {
        for &z in oi {
            for (j, oj) in part.orbits().iter().enumerate() {
                let mut acc = 0.0;
                for &w in oj {
                    acc += p.entry(z, w);
                }
                block[(i, j)] += pi.get(z) * acc;
            }
        }
    }
    let n = p.n();
    let mut matrix = DMatrix::zeros(n, n);
    for x in 0..n {
        let i = part.orbit_of(x);
        for y in 0..n {
            let j = part.orbit_of(y);
            matrix[(x, y)] = pi.get(y) * block[(i, j)] / (masses[i] * masses[j]);
        }
    }
    let flags = KernelFlags {
        row_stochastic: Some(true),
        stationary: p.flags().stationary,
        reversible: p.flags().reversible,
    };
    Ok(Kernel::with_flags(matrix, pi.clone(), flags))
}

/// Convex mixture `alpha * P + (1 - alpha) * Q`. Stationarity is preserved.
pub fn additive_mixture(alpha: f64, p: &Kernel, q: &Kernel) -> Result<Kernel> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    check_same_space(&[p, q])?;
    let matrix = p.matrix() * alpha + q.matrix() * (1.0 - alpha);
    Ok(Kernel::with_flags(
        matrix,
        p.reference().clone(),
        KernelFlags {
            row_stochastic: Some(true),
            stationary: both_true(p.flags().stationary, q.flags().stationary),
            reversible: both_true(p.flags().reversible, q.flags().reversible),
        },
    ))
}

/// Lazified kernel `(I + P) / 2`; shifts the spectrum into `[0, 1]`.
pub fn lazify(p: &Kernel) -> Kernel {
    additive_mixture(0.5, p, &Kernel::identity(p.reference().clone()))
        .expect("identity shares the space")
}

/// Max-norm distance between the `t`-th power of an orbit kernel and the
/// Gibbs kernel on the same partition.
///
/// The powers converge to the Gibbs kernel blockwise unless some orbit block
/// of the Metropolis-Hastings kernel is a deterministic 2-cycle (an orbit of
/// two states with equal mass), in which case the powers alternate forever.
pub fn power_distance_to_gibbs(
    kind: OrbitKernelKind,
    part: &OrbitPartition,
    pi: &Distribution,
    t: u64,
) -> Result<f64> {
    if t == 0 {
        return Err(Error::InvalidArgument("power must be at least 1".into()));
    }
    let q = build_orbit_kernel(kind, part, pi)?;
    let g = build_orbit_kernel(OrbitKernelKind::Gibbs, part, pi)?;
    Ok(q.power(t).max_diff(&g))
}

/// True when some orbit block of the Metropolis-Hastings kernel is a
/// deterministic 2-cycle: an orbit of two states with equal mass (within
/// the algebra tolerance).
pub fn has_deterministic_two_cycle(part: &OrbitPartition, pi: &Distribution) -> bool {
    part.orbits()
        .iter()
        .any(|o| o.len() == 2 && (pi.get(o[0]) - pi.get(o[1])).abs() <= 1e-12)
}
