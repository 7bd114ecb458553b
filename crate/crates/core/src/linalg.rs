//! Dense helpers on the pi-weighted space: similarity transforms, spectra,
//! operator norms and matrix powers.

use nalgebra::DMatrix;

use crate::dist::Distribution;

/// `D^{1/2} A D^{-1/2}` with `D = diag(pi)`. For a pi-reversible `A` this is
/// symmetric up to round-off.
pub(crate) fn pi_similarity(a: &DMatrix<f64>, pi: &Distribution) -> DMatrix<f64> {
    let n = pi.n();
    let mut out = a.clone();
    for x in 0..n {
        let sx = pi.get(x).sqrt();
        for y in 0..n {
            out[(x, y)] *= sx / pi.get(y).sqrt();
        }
    }
    out
}

/// Eigenvalues of the pi-symmetrised matrix, sorted non-increasing. The
/// asymmetric round-off is averaged away before calling the symmetric solver.
pub(crate) fn symmetrized_eigenvalues(a: &DMatrix<f64>, pi: &Distribution) -> Vec<f64> {
    let s = pi_similarity(a, pi);
    let sym = (&s + s.transpose()) * 0.5;
    let mut eig: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(|a, b| b.partial_cmp(a).unwrap());
    eig
}

/// Operator norm of `A` on `l^2(pi)`, i.e. the largest singular value of the
/// pi-similarity transform. No symmetry is assumed.
pub fn pi_operator_norm(a: &DMatrix<f64>, pi: &Distribution) -> f64 {
    let s = pi_similarity(a, pi);
    let sv = s.svd(false, false).singular_values;
    sv.iter().copied().fold(0.0, f64::max)
}

/// `A^e` by binary exponentiation.
pub fn matrix_power(a: &DMatrix<f64>, mut e: u64) -> DMatrix<f64> {
    let n = a.nrows();
    let mut result = DMatrix::identity(n, n);
    let mut base = a.clone();
    while e > 0 {
        if e & 1 == 1 {
            result = &result * &base;
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    result
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
