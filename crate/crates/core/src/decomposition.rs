//! Projection chains, restriction chains, the orbit escape probability gamma
//! and the decomposition lower bound on the right spectral gap.

use nalgebra::DMatrix;

use crate::dist::Distribution;
use crate::error::{Error, Result};
use crate::kernel::{Kernel, KernelFlags};
use crate::partition::OrbitPartition;
use crate::spectral;
use crate::tol::Tolerances;

/// The k-state chain on orbit indices obtained by aggregating `P` with
/// pi-weights; stationary for the orbit-mass distribution.
#[derive(Debug, Clone)]
pub struct ProjectionChain {
    pub matrix: DMatrix<f64>,
    pub pibar: Distribution,
}

impl ProjectionChain {
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

/// `P` restricted to one orbit, with all out-of-orbit mass folded into the
/// diagonal; stationary for pi renormalised on the orbit.
#[derive(Debug, Clone)]
pub struct RestrictionChain {
    pub orbit_index: usize,
    pub matrix: DMatrix<f64>,
    pub pi_i: Distribution,
}

impl RestrictionChain {
    pub fn as_kernel(&self) -> Kernel {
        Kernel::with_flags(
            self.matrix.clone(),
            self.pi_i.clone(),
            KernelFlags {
                row_stochastic: Some(true),
                stationary: Some(true),
                reversible: None,
            },
        )
    }
}

/// `Pbar(i, j) = (1 / pi(O_i)) sum_{x in O_i, y in O_j} pi(x) P(x, y)`.
pub fn projection_chain(p: &Kernel, part: &OrbitPartition) -> Result<ProjectionChain> {
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
    let mut matrix = DMatrix::zeros(k, k);
    for (i, oi) in part.orbits().iter().enumerate() {
        for &x in oi {
            let weight = pi.get(x) / masses[i];
            for (j, oj) in part.orbits().iter().enumerate() {
                let mut acc = 0.0;
                for &y in oj {
                    acc += p.entry(x, y);
                }
                matrix[(i, j)] += weight * acc;
            }
        }
    }
    let pibar = part.orbit_distribution(pi);
    debug_assert!(
        p.flags().stationary != Some(true)
            || crate::kernel::stationarity_residual(&matrix, &pibar) <= 1e-9
    );
    Ok(ProjectionChain { matrix, pibar })
}

/// Off-diagonal entries are copied from `P` within the orbit; the diagonal
/// absorbs everything that leaves it.
pub fn restriction_chain(p: &Kernel, part: &OrbitPartition, i: usize) -> Result<RestrictionChain> {
    if i >= part.k() {
        return Err(Error::InvalidArgument(format!(
            "orbit index {i} out of range (k = {})",
            part.k()
        )));
    }
    let orbit = part.orbit_states(i);
    let m = orbit.len();
    let mut matrix = DMatrix::zeros(m, m);
    for (a, &x) in orbit.iter().enumerate() {
        let mut off = 0.0;
        for (b, &y) in orbit.iter().enumerate() {
            if a != b {
                matrix[(a, b)] = p.entry(x, y);
                off += p.entry(x, y);
            }
        }
        matrix[(a, a)] = 1.0 - off;
    }
    let pi_i = p.reference().restrict(orbit)?;
    debug_assert!(
        p.flags().reversible != Some(true)
            || crate::kernel::stationarity_residual(&matrix, &pi_i) <= 1e-9
    );
    Ok(RestrictionChain {
        orbit_index: i,
        matrix,
        pi_i,
    })
}

/// Worst one-step escape probability from any orbit:
/// `gamma(P) = max_i max_{x in O_i} sum_{y not in O_i} P(x, y)`.
pub fn gamma(p: &Kernel, part: &OrbitPartition) -> f64 {
    let n = p.n();
    let mut worst = 0.0f64;
    for x in 0..n {
        let i = part.orbit_of(x);
        let mut escape = 0.0;
        for y in 0..n {
            if part.orbit_of(y) != i {
                escape += p.entry(x, y);
            }
        }
        worst = worst.max(escape);
    }
    worst
}

/// Right spectral gap of the projection chain. A single-orbit partition
/// aggregates to the trivial one-state chain, which is already mixed: its
/// gap is 1, matching the one-state convention of the spectral summary.
fn projection_right_gap(p: &Kernel, part: &OrbitPartition) -> Result<f64> {
    let chain = projection_chain(p, part)?;
    Ok(spectral::spectrum_reversible(&chain.as_kernel())?.right_gap)
}

/// Decomposition lower bound on the right spectral gap of a reversible `P`:
/// `min( gap(Pbar)/3, gap(Pbar) * min_i gap(P_i) / (3 gamma + gap(Pbar)) )`.
///
/// Exposed and tested as a lower bound. Singleton-orbit restrictions are
/// trivially mixed and contribute gap 1.
pub fn jerrum_gap_bound(p: &Kernel, part: &OrbitPartition) -> Result<f64> {
    let resid = p.reversibility_residual();
    if resid > Tolerances::default().reversibility {
        return Err(Error::NotReversible(resid));
    }
    let lambda_bar = projection_right_gap(p, part)?;
    let mut lambda_min = f64::INFINITY;
    for i in 0..part.k() {
        let gap = if part.orbit_states(i).len() == 1 {
            1.0
        } else {
            let chain = restriction_chain(p, part, i)?;
            spectral::spectrum_reversible(&chain.as_kernel())?.right_gap
        };
        lambda_min = lambda_min.min(gap);
    }
    let g = gamma(p, part);
    let first = lambda_bar / 3.0;
    let denom = 3.0 * g + lambda_bar;
    let second = if denom > 0.0 {
        lambda_bar * lambda_min / denom
    } else {
        // gamma = 0 and a trivial projection chain: the bound degenerates to 0.
        f64::INFINITY
    };
    Ok(first.min(second))
}

/// Closed-form spectrum `(1, 1 - abar_i)` of the restriction of the Gibbs
/// sandwich to orbit `i`, where `abar_i` is the pi-average within-orbit mass
/// retention `sum_{x in O_i} pi(x)/pi(O_i) * sum_{y in O_i} P(x, y)`.
pub fn gpg_restriction_spectrum(
    p: &Kernel,
    part: &OrbitPartition,
    i: usize,
) -> Result<(f64, f64)> {
    if i >= part.k() {
        return Err(Error::InvalidArgument(format!(
            "orbit index {i} out of range (k = {})",
            part.k()
        )));
    }
    let pi = p.reference();
    let orbit = part.orbit_states(i);
    let mass = pi.mass(orbit);
    let mut abar = 0.0;
    for &x in orbit {
        let mut stay = 0.0;
        for &y in orbit {
            stay += p.entry(x, y);
        }
        abar += pi.get(x) / mass * stay;
    }
    Ok((1.0, 1.0 - abar))
}
