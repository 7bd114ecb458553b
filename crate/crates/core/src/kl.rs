//! KL divergence between kernels, the Gibbs-invariant set, the exact
//! Pythagorean split and data-processing monotonicity.
//!
//! All divergences use the natural logarithm.

use nalgebra::DMatrix;

use crate::decomposition::projection_chain;
use crate::error::{Error, Result};
use crate::kernel::{build_orbit_kernel, gibbs_sandwich_closed_form, Kernel, OrbitKernelKind};
use crate::partition::OrbitPartition;
use crate::tol::Tolerances;

/// Witness that a kernel lies in the Gibbs-invariant set: within each orbit
/// block `(i, j)` all rows are equal and the columns are proportional to pi,
/// so the kernel is determined by a k-by-k coefficient matrix `c`.
#[derive(Debug, Clone)]
pub struct InvariantSetCertificate {
    /// Row-stochastic block coefficients; `sum_i pibar_i c_ij = pibar_j`.
    pub c: DMatrix<f64>,
    /// Largest entrywise deviation from the block structure.
    pub residual: f64,
}

/// Outcome of the invariant-set structure check.
#[derive(Debug, Clone)]
pub enum Membership {
    Member(InvariantSetCertificate),
    NotMember { residual: f64 },
}

impl Membership {
    pub fn is_member(&self) -> bool {
        matches!(self, Membership::Member(_))
    }

    pub fn residual(&self) -> f64 {
        match self {
            Membership::Member(cert) => cert.residual,
            Membership::NotMember { residual } => *residual,
        }
    }
}

/// `D(P || Q) = sum_{x,y} pi(x) P(x,y) ln(P(x,y) / Q(x,y))` with the
/// convention `0 ln(0/a) = 0`. Entries below the support threshold count as
/// structural zeros; a positive `P` entry over a zero `Q` entry is an error.
pub fn kl_divergence(p: &Kernel, q: &Kernel) -> Result<f64> {
    kl_divergence_with(p, q, &Tolerances::default())
}

pub fn kl_divergence_with(p: &Kernel, q: &Kernel, tol: &Tolerances) -> Result<f64> {
    crate::kernel::check_same_space(&[p, q])?;
    let pi = p.reference();
    let n = p.n();
    let mut sum = 0.0;
    for x in 0..n {
        for y in 0..n {
            let pv = p.entry(x, y);
            if pv <= tol.support {
                continue;
            }
            let qv = q.entry(x, y);
            if qv <= tol.support {
                return Err(Error::SupportViolation(x, y));
            }
            sum += pi.get(x) * pv * (pv / qv).ln();
        }
    }
    Ok(sum)
}

/// Checks the block structure `Q(x, y) = c_ij pi(y) / pi(O_j)` and extracts
/// the coefficients. The candidate `c` is the projection chain of `Q`; the
/// residual is the largest deviation of `Q` from the reconstructed kernel.
pub fn invariant_set_membership(q: &Kernel, part: &OrbitPartition) -> Result<Membership> {
    invariant_set_membership_with(q, part, &Tolerances::default())
}

pub fn invariant_set_membership_with(
    q: &Kernel,
    part: &OrbitPartition,
    tol: &Tolerances,
) -> Result<Membership> {
    if part.n() != q.n() {
        return Err(Error::DimensionMismatch(format!(
            "partition over {} states, kernel over {}",
            part.n(),
            q.n()
        )));
    }
    let pi = q.reference();
    let chain = projection_chain(q, part)?;
    let masses = part.orbit_masses(pi);
    let mut residual = 0.0f64;
    for x in 0..q.n() {
        let i = part.orbit_of(x);
        for y in 0..q.n() {
            let j = part.orbit_of(y);
            let reconstructed = chain.matrix[(i, j)] * pi.get(y) / masses[j];
            residual = residual.max((q.entry(x, y) - reconstructed).abs());
        }
    }
    if residual <= tol.membership {
        Ok(Membership::Member(InvariantSetCertificate {
            c: chain.matrix,
            residual,
        }))
    } else {
        Ok(Membership::NotMember { residual })
    }
}

/// The KL-closest point of the invariant set to `P`: exactly the Gibbs
/// sandwich, computed here by the closed-form block formula.
pub fn information_projection(p: &Kernel, part: &OrbitPartition) -> Result<Kernel> {
    gibbs_sandwich_closed_form(p, part)
}

/// `D(P || Q) - D(P || GPG) - D(GPG || Q)` for `Q` in the invariant set.
/// Vanishes identically; exposed so the identity can be asserted at tolerance.
pub fn pythagorean_residual(p: &Kernel, q: &Kernel, part: &OrbitPartition) -> Result<f64> {
    match invariant_set_membership(q, part)? {
        Membership::NotMember { residual } => Err(Error::QNotInvariant(residual)),
        Membership::Member(_) => {
            let gpg = information_projection(p, part)?;
            Ok(kl_divergence(p, q)? - kl_divergence(p, &gpg)? - kl_divergence(&gpg, q)?)
        }
    }
}

/// Which side the orbit kernel multiplies the base kernel on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DpiSide {
    /// `M P`
    Left,
    /// `P M`
    Right,
}

/// One-sided contraction gap `D(P || Q) - D(PM || Q)` (or `MP`, `PB`, `BP`)
/// for `Q` in the invariant set. Non-negative: composing with an orbit kernel
/// can only move `P` closer to the invariant set in KL.
pub fn dpi_gap(
    p: &Kernel,
    q: &Kernel,
    side: DpiSide,
    kind: OrbitKernelKind,
    part: &OrbitPartition,
) -> Result<f64> {
    match invariant_set_membership(q, part)? {
        Membership::NotMember { residual } => Err(Error::QNotInvariant(residual)),
        Membership::Member(_) => {
            let orbit_kernel = build_orbit_kernel(kind, part, p.reference())?;
            let composed = match side {
                DpiSide::Left => orbit_kernel.multiply(p)?,
                DpiSide::Right => p.multiply(&orbit_kernel)?,
            };
            Ok(kl_divergence(p, q)? - kl_divergence(&composed, q)?)
        }
    }
}
