//! Spectra of reversible kernels, the Metropolis-orbit contraction constant
//! theta, and asymptotic variance.

use nalgebra::{DMatrix, DVector};

use crate::dist::Distribution;
use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::linalg;
use crate::partition::OrbitPartition;
use crate::tol::Tolerances;

/// Sorted spectrum of a reversible kernel together with the derived gaps.
///
/// `slem` is the second-largest eigenvalue in modulus, `right_gap = 1 -
/// lambda_2` and `abs_gap = 1 - slem`. The two gaps differ once negative
/// eigenvalues dominate, so both are always reported.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSummary {
    /// Eigenvalues in non-increasing order; the first is 1.
    pub eigenvalues: Vec<f64>,
    pub slem: f64,
    pub right_gap: f64,
    pub abs_gap: f64,
}

impl SpectralSummary {
    /// Second-largest eigenvalue; 0 for a single-state chain.
    pub fn lambda_2(&self) -> f64 {
        self.eigenvalues.get(1).copied().unwrap_or(0.0)
    }

    pub fn lambda_min(&self) -> f64 {
        *self.eigenvalues.last().unwrap()
    }
}

/// Eigenvalues of `P` via the symmetric eigenproblem for
/// `D^{1/2} P D^{-1/2}`. Errors unless `P` is reversible for its reference
/// distribution.
pub fn spectrum_reversible(p: &Kernel) -> Result<SpectralSummary> {
    spectrum_reversible_with(p, &Tolerances::default())
}

pub fn spectrum_reversible_with(p: &Kernel, tol: &Tolerances) -> Result<SpectralSummary> {
    let resid = p.reversibility_residual();
    if resid > tol.reversibility {
        return Err(Error::NotReversible(resid));
    }
    let pi = p.reference();
    if p.n() == 1 {
        // A one-state chain has no non-trivial spectrum: slem 0, both gaps 1.
        return Ok(SpectralSummary {
            eigenvalues: vec![1.0],
            slem: 0.0,
            right_gap: 1.0,
            abs_gap: 1.0,
        });
    }
    let eigenvalues = linalg::symmetrized_eigenvalues(p.matrix(), pi);
    debug_assert!((eigenvalues[0] - 1.0).abs() <= 1e-8);
    debug_assert!(eigenvalues
        .iter()
        .all(|l| (-1.0 - 1e-10..=1.0 + 1e-10).contains(l)));
    let slem = eigenvalues[1].abs().max(eigenvalues.last().unwrap().abs());
    Ok(SpectralSummary {
        right_gap: 1.0 - eigenvalues[1],
        abs_gap: 1.0 - slem,
        slem,
        eigenvalues,
    })
}

/// SLEM of a reversible kernel, `max(|lambda_2|, |lambda_n|)`.
pub fn slem(p: &Kernel) -> Result<f64> {
    Ok(spectrum_reversible(p)?.slem)
}

/// Which branch of the closed-form maximum produced theta.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThetaBranch {
    /// `|1 - pi(O_i) / ((m_i - 1) pi(x_1))|`, from the largest mass in the orbit.
    Top,
    /// `pi(x_m) / ((m_i - 1) pi(x_{m-1}))`, from the two smallest masses.
    Bottom,
}

/// The contraction constant of the Metropolis-Hastings orbit kernel on the
/// orthocomplement of orbit-constant functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaConstant {
    pub theta: f64,
    pub achieving_orbit: usize,
    pub achieving_branch: ThetaBranch,
}

/// Closed-form theta for the Metropolis-Hastings orbit kernel: the maximum
/// over non-singleton orbits of the two extreme block eigenvalue magnitudes,
/// with orbit masses sorted non-increasing.
///
/// `theta = 1` exactly when some orbit is a deterministic 2-cycle; it governs
/// how fast `M^t` approximates the Gibbs kernel.
pub fn theta_mh(part: &OrbitPartition, pi: &Distribution) -> Result<ThetaConstant> {
    if part.n() != pi.n() {
        return Err(Error::DimensionMismatch(format!(
            "partition over {} states, distribution over {}",
            part.n(),
            pi.n()
        )));
    }
    let mut best: Option<ThetaConstant> = None;
    for (i, orbit) in part.orbits().iter().enumerate() {
        let m = orbit.len();
        if m <= 1 {
            continue;
        }
        let mut w: Vec<f64> = orbit.iter().map(|&x| pi.get(x)).collect();
        w.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let mass: f64 = w.iter().sum();
        let denom = (m - 1) as f64;
        let top = (1.0 - mass / (denom * w[0])).abs();
        let bottom = w[m - 1] / (w[m - 2] * denom);
        for (value, branch) in [(top, ThetaBranch::Top), (bottom, ThetaBranch::Bottom)] {
            if best.is_none_or(|b| value > b.theta) {
                best = Some(ThetaConstant {
                    theta: value,
                    achieving_orbit: i,
                    achieving_branch: branch,
                });
            }
        }
    }
    best.ok_or(Error::AllSingletons)
}

/// Eigensolver route for theta: build the Metropolis-Hastings orbit kernel,
/// project out the orbit-constant subspace explicitly and take the SLEM of
/// what remains. The closed form above must agree with this to 1e-10.
pub fn theta_mh_eigensolver(part: &OrbitPartition, pi: &Distribution) -> Result<f64> {
    if !part.has_non_singleton() {
        return Err(Error::AllSingletons);
    }
    let m = crate::kernel::build_orbit_kernel(
        crate::kernel::OrbitKernelKind::MetropolisHastings,
        part,
        pi,
    )?;
    let n = pi.n();
    let sym = {
        let s = crate::linalg::pi_similarity(m.matrix(), pi);
        (&s + s.transpose()) * 0.5
    };
    // Orbit indicators have disjoint supports, so after the similarity map
    // the vectors D^{1/2} 1_{O_i} are already orthogonal.
    let mut proj = DMatrix::identity(n, n);
    for orbit in part.orbits() {
        let mass = pi.mass(orbit);
        let mut v = DVector::zeros(n);
        for &x in orbit {
            v[x] = pi.get(x).sqrt() / mass.sqrt();
        }
        proj -= &v * v.transpose();
    }
    let restricted = &proj * &sym * &proj;
    let eig = restricted.symmetric_eigenvalues();
    Ok(eig.iter().fold(0.0f64, |acc, &l| acc.max(l.abs())))
}

/// Eigenvalues of the uniform-proposal Metropolised independence sampler on a
/// single orbit, from the orbit masses sorted non-increasing.
///
/// Returns `[1, lambda_2, ..., lambda_m]` where for `j >= 2`
/// `lambda_j = 1 - (j-2)/m - (sum_{l >= j-1} p_l) / (m p_{j-1})`
/// with `p` the masses normalised within the orbit. The Metropolis-Hastings
/// orbit block is the affine image `M = (m C - I) / (m - 1)` of this chain
/// `C`, which is how `theta_mh` reduces to the two extreme eigenvalues.
pub fn mh_independence_spectrum(orbit_masses: &[f64]) -> Result<Vec<f64>> {
    let m = orbit_masses.len();
    if m == 0 {
        return Err(Error::InvalidArgument("empty orbit".into()));
    }
    if let Some(&w) = orbit_masses.iter().find(|&&w| w <= 0.0 || w.is_nan()) {
        return Err(Error::InvalidArgument(format!(
            "orbit masses must be positive, found {w}"
        )));
    }
    if orbit_masses.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::NotSorted("orbit masses must be non-increasing"));
    }
    let total: f64 = orbit_masses.iter().sum();
    let p: Vec<f64> = orbit_masses.iter().map(|w| w / total).collect();
    let mf = m as f64;
    let mut tail: Vec<f64> = vec![0.0; m + 1];
    for l in (0..m).rev() {
        tail[l] = tail[l + 1] + p[l];
    }
    let mut eigs = Vec::with_capacity(m);
    eigs.push(1.0);
    for j in 2..=m {
        let lam = 1.0 - (j as f64 - 2.0) / mf - tail[j - 2] / (mf * p[j - 2]);
        eigs.push(lam);
    }
    Ok(eigs)
}

/// Dense matrix of the uniform-proposal Metropolised independence sampler
/// used to cross-check [`mh_independence_spectrum`].
pub fn mh_independence_kernel(orbit_masses: &[f64]) -> Result<Kernel> {
    let m = orbit_masses.len();
    let pi = Distribution::from_weights(orbit_masses)?;
    let mut matrix = DMatrix::zeros(m, m);
    for x in 0..m {
        let mut off = 0.0;
        for y in 0..m {
            if y == x {
                continue;
            }
            let v = (pi.get(y) / pi.get(x)).min(1.0) / m as f64;
            matrix[(x, y)] = v;
            off += v;
        }
        matrix[(x, x)] = 1.0 - off;
    }
    Kernel::validated(matrix, pi)
}

/// Upper bound `rho(P) (2 theta^k + theta^{2k})` on how much the SLEM of
/// `M^k P M^k` can exceed the SLEM of `G P G`.
pub fn slem_power_bound(rho_p: f64, theta: f64, k: u32) -> f64 {
    let tk = theta.powi(k as i32);
    rho_p * (2.0 * tk + tk * tk)
}

/// Smallest suggested power `t` such that `M^t P M^t` approximates `G P G`
/// within `eps` in every eigenvalue:
/// `ceil(max(ln(4 rho / eps) / ln(1/theta), ln(2 rho / eps) / (2 ln(1/theta))))`,
/// clamped below at 0.
pub fn approximation_time(eps: f64, theta: f64, rho_p: f64) -> Result<u64> {
    if eps <= 0.0 || eps.is_nan() {
        return Err(Error::InvalidArgument(format!("eps = {eps} must be positive")));
    }
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::ThetaDegenerate(theta));
    }
    if rho_p <= 0.0 {
        return Ok(0);
    }
    let log_inv_theta = (1.0 / theta).ln();
    let a = (4.0 * rho_p / eps).ln() / log_inv_theta;
    let b = (2.0 * rho_p / eps).ln() / (2.0 * log_inv_theta);
    Ok(a.max(b).max(0.0).ceil() as u64)
}

fn check_centered(f: &[f64], pi: &Distribution) -> Result<()> {
    let mean = pi.mean(f);
    if mean.abs() > 1e-10 {
        return Err(Error::NotCentered(mean.abs()));
    }
    Ok(())
}

/// Solves `(I - P + Pi) h = f`; for centered `f` on an ergodic chain this is
/// the fundamental-matrix image `Z(P) f`.
fn fundamental_solve(p: &Kernel, f: &[f64]) -> Result<DVector<f64>> {
    let n = p.n();
    let pi = p.reference();
    let mut a = DMatrix::identity(n, n) - p.matrix();
    for x in 0..n {
        for y in 0..n {
            a[(x, y)] += pi.get(y);
        }
    }
    a.lu()
        .solve(&DVector::from_column_slice(f))
        .ok_or(Error::SingularFundamentalMatrix)
}

/// Asymptotic variance `v(f, P) = 2 <f, Z(P) f> - <f, f>` of the ergodic
/// average of a centered `f`, via a dense solve with the fundamental matrix
/// `Z(P) = (I - (P - Pi))^{-1}`.
pub fn asymptotic_variance(f: &[f64], p: &Kernel) -> Result<f64> {
    let pi = p.reference();
    if f.len() != p.n() {
        return Err(Error::DimensionMismatch(format!(
            "f has {} entries, kernel has {} states",
            f.len(),
            p.n()
        )));
    }
    check_centered(f, pi)?;
    let zf = fundamental_solve(p, f)?;
    Ok(2.0 * pi.inner(f, zf.as_slice()) - pi.norm_sq(f))
}

/// The variational route to the same quantity for reversible `P`:
/// `sup_h 4<f,h> - 2<(I-P)h, h> - <f,f>`, maximised exactly by solving the
/// first-order condition `(I - P) h = f` on the centered subspace.
pub fn asymptotic_variance_variational(f: &[f64], p: &Kernel) -> Result<f64> {
    let pi = p.reference();
    if f.len() != p.n() {
        return Err(Error::DimensionMismatch(format!(
            "f has {} entries, kernel has {} states",
            f.len(),
            p.n()
        )));
    }
    let resid = p.reversibility_residual();
    if resid > Tolerances::default().reversibility {
        return Err(Error::NotReversible(resid));
    }
    check_centered(f, pi)?;
    let h = fundamental_solve(p, f)?;
    let imp_h = {
        let mut v = h.clone();
        v -= p.matrix() * &h;
        v
    };
    Ok(4.0 * pi.inner(f, h.as_slice()) - 2.0 * pi.inner(imp_h.as_slice(), h.as_slice())
        - pi.norm_sq(f))
}

/// Worst-case asymptotic variance `(1 + lambda_2) / (1 - lambda_2)` over unit
/// centered functions.
pub fn worst_case_variance(p: &Kernel) -> Result<f64> {
    let lambda_2 = spectrum_reversible(p)?.lambda_2();
    if lambda_2 >= 1.0 - 1e-12 {
        return Err(Error::DegenerateGap(lambda_2));
    }
    Ok((1.0 + lambda_2) / (1.0 - lambda_2))
}
