//! Total-variation distances and a goodness-of-fit test for sampled
//! transition rows.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::dist::Distribution;
use crate::kernel::Kernel;
use crate::par;

/// `|| mu - nu ||_TV = (1/2) sum |mu(x) - nu(x)|`.
pub fn tv_distance(mu: &[f64], nu: &[f64]) -> f64 {
    debug_assert_eq!(mu.len(), nu.len());
    0.5 * mu
        .iter()
        .zip(nu)
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
}

/// Worst-case total-variation distance of a transition matrix from `pi`:
/// `max_x || P(x, .) - pi ||_TV`. Rows are scanned in parallel when the
/// `parallel` feature is on.
pub fn worst_row_tv(p: &nalgebra::DMatrix<f64>, pi: &Distribution) -> f64 {
    let n = pi.n();
    par::max_f64(n, |x| {
        let mut acc = 0.0;
        for y in 0..n {
            acc += (p[(x, y)] - pi.get(y)).abs();
        }
        0.5 * acc
    })
}

/// Sequential twin of [`worst_row_tv`] for benchmarking.
pub fn worst_row_tv_seq(p: &nalgebra::DMatrix<f64>, pi: &Distribution) -> f64 {
    let n = pi.n();
    par::max_f64_seq(n, |x| {
        let mut acc = 0.0;
        for y in 0..n {
            acc += (p[(x, y)] - pi.get(y)).abs();
        }
        0.5 * acc
    })
}

/// Worst-case TV distance of `P^t` from its reference distribution.
pub fn worst_tv_at_power(p: &Kernel, t: u64) -> f64 {
    let pt = crate::linalg::matrix_power(p.matrix(), t);
    worst_row_tv(&pt, p.reference())
}

/// Result of the chi-squared goodness-of-fit test.
#[derive(Debug, Clone, Copy)]
pub struct ChiSquareOutcome {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson chi-squared test of observed counts against expected cell
/// probabilities. Cells whose expected count falls below `min_expected` are
/// pooled into one residual cell; zero-probability cells must be unobserved
/// and are dropped.
pub fn chi_square_gof(observed: &[u64], expected: &[f64], min_expected: f64) -> ChiSquareOutcome {
    assert_eq!(observed.len(), expected.len());
    let total: u64 = observed.iter().sum();
    let total_f = total as f64;
    let mut terms: Vec<(f64, f64)> = Vec::new(); // (observed, expected) counts
    let mut pooled_obs = 0.0;
    let mut pooled_exp = 0.0;
    for (&o, &p) in observed.iter().zip(expected) {
        let e = p * total_f;
        if p <= 0.0 {
            assert_eq!(o, 0, "observed mass in a zero-probability cell");
            continue;
        }
        if e < min_expected {
            pooled_obs += o as f64;
            pooled_exp += e;
        } else {
            terms.push((o as f64, e));
        }
    }
    if pooled_exp > 0.0 {
        terms.push((pooled_obs, pooled_exp));
    }
    let statistic: f64 = terms.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = terms.len().saturating_sub(1).max(1);
    let dist = ChiSquared::new(dof as f64).expect("positive dof");
    ChiSquareOutcome {
        statistic,
        dof,
        p_value: 1.0 - dist.cdf(statistic),
    }
}
