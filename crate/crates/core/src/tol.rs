/// Numerical tolerances shared across the crate.
///
/// All validation routines take these from one record so that experiments can
/// tighten or relax every check in a single place. The defaults follow the
/// crate-wide convention: 1e-10 for stochasticity, stationarity and detailed
/// balance, 1e-12 for exact algebraic identities, 1e-8 for invariant-set
/// membership verdicts and 1e-15 to separate structural zeros from round-off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Entries of a stochastic matrix may undershoot 0 or overshoot 1 by this much.
    pub entry: f64,
    /// Row sums of a stochastic matrix must be 1 within this bound.
    pub row_sum: f64,
    /// `pi P = pi` componentwise.
    pub stationarity: f64,
    /// `pi(x) P(x,y) = pi(y) P(y,x)` for all pairs.
    pub reversibility: f64,
    /// Exact algebraic identities (idempotence, closed forms, products).
    pub algebra: f64,
    /// Verdict threshold for invariant-set membership residuals.
    pub membership: f64,
    /// Below this an entry counts as a structural zero in KL sums.
    pub support: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            entry: 1e-12,
            row_sum: 1e-10,
            stationarity: 1e-10,
            reversibility: 1e-10,
            algebra: 1e-12,
            membership: 1e-8,
            support: 1e-15,
        }
    }
}
