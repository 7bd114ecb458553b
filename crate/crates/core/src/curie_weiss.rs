//! The mean-field Curie-Weiss case study: magnetisation orbits, the
//! star-lifted sampler with its streaming simulation, single-site Glauber
//! dynamics and exact worst-case mixing times.
//!
//! Configurations of `d` spins are encoded as integers (bit `j` set means
//! spin `j` is `+1`) for dense work, while the streaming sampler works on
//! spin vectors and never materialises the state space.

use nalgebra::DMatrix;
use rand::Rng;

use crate::dist::Distribution;
use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::partition::OrbitPartition;
use crate::stats;

/// Largest spin count for which a dense `2^d x 2^d` kernel is still
/// reasonable.
pub const MAX_DENSE_SPINS: u32 = 14;

/// Hard cap for exact mixing-time searches.
pub const MIXING_TIME_CAP: u64 = 1_000_000;

/// The mean-field model: `d` spins at inverse temperature `beta`, energy
/// `-(d/2) m(x)^2` where `m(x)` is the mean spin; no external field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CwModel {
    pub d: u32,
    pub beta: f64,
}

impl CwModel {
    pub fn new(d: u32, beta: f64) -> Result<Self> {
        if d == 0 || !d.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "spin count {d} must be even and positive"
            )));
        }
        if beta < 0.0 || beta.is_nan() {
            return Err(Error::InvalidArgument(format!(
                "inverse temperature {beta} must be non-negative"
            )));
        }
        Ok(Self { d, beta })
    }

    fn check_dense(&self) -> Result<()> {
        if self.d > MAX_DENSE_SPINS {
            return Err(Error::TooLarge(format!(
                "d = {} exceeds the dense limit {MAX_DENSE_SPINS}",
                self.d
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn n(&self) -> usize {
        1usize << self.d
    }

    /// Half the magnetisation numerator: `i` such that `|m(x)| = 2i/d`.
    /// Orbit `i` collects all states with that absolute magnetisation, so
    /// orbit indices run from 0 (zero magnetisation) to `d/2` (the two
    /// ground states).
    #[inline]
    pub fn orbit_index(&self, state: usize) -> usize {
        let up = (state as u64).count_ones() as i64;
        ((2 * up - self.d as i64).unsigned_abs() / 2) as usize
    }

    /// Unnormalised Boltzmann weight `exp(2 i^2 beta / d)` of a state in
    /// orbit `i`.
    fn state_weight(&self, i: usize) -> f64 {
        (2.0 * (i * i) as f64 * self.beta / self.d as f64).exp()
    }

    /// Number of orbits, `d/2 + 1`.
    pub fn orbit_count(&self) -> usize {
        (self.d / 2 + 1) as usize
    }
}

/// Threshold `max((d + 1)/4, 1)`: at or above this inverse temperature the
/// orbit masses are non-decreasing in the magnetisation index.
pub fn beta_star(d: u32) -> f64 {
    ((d as f64 + 1.0) / 4.0).max(1.0)
}

fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Number of states in orbit `i`: `binom(d, d/2 - i)`, doubled for `i > 0`
/// because both signs of the magnetisation occur.
pub fn cw_orbit_size(d: u32, i: usize) -> f64 {
    let c = binomial(d as u64, (d / 2) as u64 - i as u64);
    if i == 0 {
        c
    } else {
        2.0 * c
    }
}

/// The displayed proportional weight `2 binom(d, d/2 - i) exp(2 i^2 beta/d)`
/// with the sign-doubling factor applied uniformly. At `i = 0` this
/// double-counts the zero-magnetisation orbit (those states have no distinct
/// sign pair); the exact masses below use the true orbit sizes instead.
pub fn cw_orbit_weight_displayed(d: u32, beta: f64, i: usize) -> f64 {
    2.0 * binomial(d as u64, (d / 2) as u64 - i as u64)
        * (2.0 * (i * i) as f64 * beta / d as f64).exp()
}

/// Exact orbit masses from the true orbit sizes, normalised.
pub fn cw_orbit_masses(model: &CwModel) -> Vec<f64> {
    let weights: Vec<f64> = (0..model.orbit_count())
        .map(|i| cw_orbit_size(model.d, i) * model.state_weight(i))
        .collect();
    let z: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / z).collect()
}

/// The Gibbs distribution over all `2^d` spin configurations.
pub fn cw_distribution(model: &CwModel) -> Result<Distribution> {
    model.check_dense()?;
    let n = model.n();
    // exp(2 i^2 beta / d) can overflow for extreme beta; normalise in a
    // shifted exponent.
    let max_i = model.d as usize / 2;
    let shift = 2.0 * (max_i * max_i) as f64 * model.beta / model.d as f64;
    let weights: Vec<f64> = (0..n)
        .map(|x| {
            let i = model.orbit_index(x);
            (2.0 * (i * i) as f64 * model.beta / model.d as f64 - shift).exp()
        })
        .collect();
    Distribution::from_weights(&weights)
}

/// Partition of the `2^d` states by absolute magnetisation.
pub fn cw_orbit_partition(model: &CwModel) -> Result<OrbitPartition> {
    model.check_dense()?;
    let labels: Vec<usize> = (0..model.n()).map(|x| model.orbit_index(x)).collect();
    // Orbits ordered by index i = 0 .. d/2.
    let mut orbits: Vec<Vec<usize>> = vec![Vec::new(); model.orbit_count()];
    for (x, &i) in labels.iter().enumerate() {
        orbits[i].push(x);
    }
    OrbitPartition::new(model.n(), orbits)
}

/// Merges the high-magnetisation orbits `kcut ..= d/2` into one tail block,
/// keeping orbits `0 .. kcut` as they are. Lifted to the state space.
pub fn merged_tail_partition(model: &CwModel, kcut: usize) -> Result<OrbitPartition> {
    model.check_dense()?;
    let half = model.d as usize / 2;
    if kcut == 0 || kcut > half {
        return Err(Error::InvalidArgument(format!(
            "kcut = {kcut} out of range [1, {half}]"
        )));
    }
    let mut blocks: Vec<Vec<usize>> = vec![Vec::new(); kcut + 1];
    for x in 0..model.n() {
        let i = model.orbit_index(x);
        blocks[i.min(kcut)].push(x);
    }
    OrbitPartition::new(model.n(), blocks)
}

/// Mass of the merged tail block and its excess `delta` over 1/2.
pub fn tail_mass_and_delta(model: &CwModel, kcut: usize) -> (f64, f64) {
    let masses = cw_orbit_masses(model);
    let tail: f64 = masses[kcut..].iter().sum();
    (tail, tail - 0.5)
}

/// Smallest `kcut` whose tail mass exceeds `1/2 + min_delta`, if any.
pub fn auto_kcut(model: &CwModel, min_delta: f64) -> Option<usize> {
    let half = model.d as usize / 2;
    (1..=half).find(|&kcut| tail_mass_and_delta(model, kcut).1 > min_delta)
}

/// Dense star-lifted kernel over the merged-tail partition: transitions from
/// outside the tail always enter it, transitions from inside stay with
/// probability `2 - 1/pi(tail)` and otherwise exit proportionally to mass.
/// Stationary and reversible, with SLEM `1/pi(tail) - 1`.
pub fn cw_star_kernel(model: &CwModel, kcut: usize) -> Result<Kernel> {
    model.check_dense()?;
    let (tail_mass, delta) = tail_mass_and_delta(model, kcut);
    if delta <= 0.0 {
        return Err(Error::MassNotDominant(tail_mass));
    }
    let pi = cw_distribution(model)?;
    let n = model.n();
    let in_tail: Vec<bool> = (0..n).map(|x| model.orbit_index(x) >= kcut).collect();
    let stay = (2.0 * tail_mass - 1.0) / (tail_mass * tail_mass);
    let mut matrix = DMatrix::zeros(n, n);
    for x in 0..n {
        for y in 0..n {
            matrix[(x, y)] = if in_tail[x] != in_tail[y] {
                pi.get(y) / tail_mass
            } else if in_tail[x] {
                pi.get(y) * stay
            } else {
                0.0
            };
        }
    }
    Ok(Kernel::from_construction(matrix, pi))
}

/// Streaming simulator of the star kernel. Holds the per-orbit cumulative
/// masses so a step costs `O(d)` regardless of the `2^d` state count.
#[derive(Debug, Clone)]
pub struct CwStarSampler {
    model: CwModel,
    kcut: usize,
    /// Probability of staying in the tail when already inside.
    stay_prob: f64,
    /// Cumulative orbit masses within the tail, normalised.
    tail_cumulative: Vec<(usize, f64)>,
    /// Cumulative orbit masses outside the tail, normalised.
    head_cumulative: Vec<(usize, f64)>,
}

impl CwStarSampler {
    pub fn new(model: CwModel, kcut: usize) -> Result<Self> {
        let half = model.d as usize / 2;
        if kcut == 0 || kcut > half {
            return Err(Error::InvalidArgument(format!(
                "kcut = {kcut} out of range [1, {half}]"
            )));
        }
        let masses = cw_orbit_masses(&model);
        let tail_mass: f64 = masses[kcut..].iter().sum();
        if tail_mass <= 0.5 {
            return Err(Error::MassNotDominant(tail_mass));
        }
        let cumulative = |range: std::ops::Range<usize>, total: f64| {
            let mut acc = 0.0;
            range
                .map(|i| {
                    acc += masses[i] / total;
                    (i, acc)
                })
                .collect::<Vec<_>>()
        };
        Ok(Self {
            stay_prob: 2.0 - 1.0 / tail_mass,
            tail_cumulative: cumulative(kcut..half + 1, tail_mass),
            head_cumulative: cumulative(0..kcut, 1.0 - tail_mass),
            model,
            kcut,
        })
    }

    pub fn model(&self) -> &CwModel {
        &self.model
    }

    fn draw_orbit(table: &[(usize, f64)], rng: &mut impl Rng) -> usize {
        let u: f64 = rng.random();
        for &(i, acc) in table {
            if u < acc {
                return i;
            }
        }
        table.last().expect("table is non-empty").0
    }

    /// Uniform state of orbit `i`: place `d/2 + i` up-spins by a partial
    /// Fisher-Yates pass, then flip the global sign with probability 1/2
    /// when the magnetisation is non-zero.
    fn draw_uniform_in_orbit(&self, i: usize, rng: &mut impl Rng) -> Vec<i8> {
        let d = self.model.d as usize;
        let ups = d / 2 + i;
        let mut slots: Vec<usize> = (0..d).collect();
        for t in 0..ups {
            let j = rng.random_range(t..d);
            slots.swap(t, j);
        }
        let mut spins = vec![-1i8; d];
        for &s in &slots[..ups] {
            spins[s] = 1;
        }
        if i > 0 && rng.random::<bool>() {
            for s in spins.iter_mut() {
                *s = -*s;
            }
        }
        spins
    }

    /// One transition from `state`, distributed exactly as the dense star
    /// kernel row of `state`.
    pub fn step(&self, state: &[i8], rng: &mut impl Rng) -> Vec<i8> {
        let i = spin_orbit_index(state);
        let in_tail = i >= self.kcut;
        if !in_tail || rng.random::<f64>() < self.stay_prob {
            let orbit = Self::draw_orbit(&self.tail_cumulative, rng);
            self.draw_uniform_in_orbit(orbit, rng)
        } else {
            let orbit = Self::draw_orbit(&self.head_cumulative, rng);
            self.draw_uniform_in_orbit(orbit, rng)
        }
    }
}

/// One streaming transition of the star sampler; convenience wrapper that
/// builds the cumulative tables on the fly.
pub fn cw_star_step(
    state: &[i8],
    model: &CwModel,
    kcut: usize,
    rng: &mut impl Rng,
) -> Result<Vec<i8>> {
    Ok(CwStarSampler::new(*model, kcut)?.step(state, rng))
}

/// Magnetisation orbit index of a spin vector.
pub fn spin_orbit_index(spins: &[i8]) -> usize {
    let sum: i64 = spins.iter().map(|&s| s as i64).sum();
    (sum.unsigned_abs() / 2) as usize
}

/// Integer encoding of a spin vector (bit `j` set when spin `j` is up).
pub fn spins_to_state(spins: &[i8]) -> usize {
    spins
        .iter()
        .enumerate()
        .fold(0usize, |acc, (j, &s)| if s > 0 { acc | (1 << j) } else { acc })
}

/// Spin vector of an integer-encoded state.
pub fn state_to_spins(state: usize, d: u32) -> Vec<i8> {
    (0..d as usize)
        .map(|j| if state & (1 << j) != 0 { 1 } else { -1 })
        .collect()
}

/// Empirical one-step transition counts of the streaming sampler from a
/// fixed start state, split into per-stream chunks so the tally is identical
/// however many threads run.
pub fn empirical_transition_counts(
    model: &CwModel,
    kcut: usize,
    from: &[i8],
    samples: u64,
    seed: u64,
) -> Result<Vec<u64>> {
    model.check_dense()?;
    let sampler = CwStarSampler::new(*model, kcut)?;
    let n = model.n();
    const CHUNK: u64 = 1 << 16;
    let chunks = samples.div_ceil(CHUNK);
    let partial = crate::par::map_indexed(chunks as usize, |c| {
        let mut rng = crate::random::seeded_rng(seed, c as u64);
        let todo = CHUNK.min(samples - c as u64 * CHUNK);
        let mut counts = vec![0u64; n];
        for _ in 0..todo {
            let next = sampler.step(from, &mut rng);
            counts[spins_to_state(&next)] += 1;
        }
        counts
    });
    let mut total = vec![0u64; n];
    for counts in partial {
        for (t, c) in total.iter_mut().zip(counts) {
            *t += c;
        }
    }
    Ok(total)
}

/// Single-site dynamics: pick one of the `d` coordinates uniformly, flip it,
/// and accept with the Metropolis ratio. Reversible for the Gibbs
/// distribution.
pub fn glauber_kernel(model: &CwModel) -> Result<Kernel> {
    model.check_dense()?;
    let pi = cw_distribution(model)?;
    let n = model.n();
    let d = model.d as usize;
    let mut matrix = DMatrix::zeros(n, n);
    for x in 0..n {
        let mut off = 0.0;
        for j in 0..d {
            let y = x ^ (1 << j);
            let accept = (pi.get(y) / pi.get(x)).min(1.0);
            let v = accept / d as f64;
            matrix[(x, y)] = v;
            off += v;
        }
        matrix[(x, x)] = 1.0 - off;
    }
    Ok(Kernel::from_construction(matrix, pi))
}

/// Exact worst-case total-variation mixing time: the smallest `t` with
/// `max_x || P^t(x, .) - pi ||_TV < eps`.
///
/// The worst-case distance is non-increasing in `t`, so the search brackets
/// by repeated squaring and then bisects, rebuilding `P^t` from its binary
/// digits. Gives up past [`MIXING_TIME_CAP`].
pub fn mixing_time_exact(p: &Kernel, eps: f64) -> Result<u64> {
    if p.n() > 4096 {
        return Err(Error::TooLarge(format!(
            "{} states is beyond the dense mixing-time limit",
            p.n()
        )));
    }
    if eps <= 0.0 || eps.is_nan() {
        return Err(Error::InvalidArgument(format!("eps = {eps} must be positive")));
    }
    let pi = p.reference();
    let mut t = 1u64;
    let mut power = p.matrix().clone();
    while stats::worst_row_tv(&power, pi) >= eps {
        t *= 2;
        if t > MIXING_TIME_CAP {
            return Err(Error::NoConvergence(MIXING_TIME_CAP));
        }
        power = &power * &power;
    }
    if t == 1 {
        return Ok(1);
    }
    // Invariant: d(lo) >= eps > d(hi).
    let (mut lo, mut hi) = (t / 2, t);
    while lo + 1 < hi {
        let mid = lo + (hi - lo) / 2;
        let pm = crate::linalg::matrix_power(p.matrix(), mid);
        if stats::worst_row_tv(&pm, pi) < eps {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Upper bound `(1 / (2 delta)) (d beta / 2 + d ln 2 - ln eps)` on the star
/// kernel's mixing time, with `delta` the tail-mass excess over 1/2.
pub fn star_mixing_bound(model: &CwModel, delta: f64, eps: f64) -> f64 {
    let d = model.d as f64;
    (d * model.beta / 2.0 + d * std::f64::consts::LN_2 - eps.ln()) / (2.0 * delta)
}

/// Claimed lower bound `(e^{beta d} / 4^d - 1) ln(1 / (2 eps))` on the
/// Glauber mixing time.
pub fn glauber_mixing_lower_bound(model: &CwModel, eps: f64) -> f64 {
    let d = model.d as f64;
    ((model.beta * d).exp() / 4.0f64.powf(d) - 1.0) * (1.0 / (2.0 * eps)).ln()
}

/// Upper bound `2^d exp(d beta / 2)` on the partition function.
pub fn partition_function_bound(model: &CwModel) -> f64 {
    let d = model.d as f64;
    2.0f64.powf(d) * (d * model.beta / 2.0).exp()
}

/// Exact partition function (sum of unnormalised Boltzmann weights).
pub fn partition_function(model: &CwModel) -> f64 {
    (0..model.orbit_count())
        .map(|i| cw_orbit_size(model.d, i) * model.state_weight(i))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral;

    #[test]
    fn model_validation() {
        assert!(CwModel::new(3, 1.0).is_err());
        assert!(CwModel::new(0, 1.0).is_err());
        assert!(CwModel::new(4, -0.5).is_err());
        assert!(CwModel::new(16, 1.0).unwrap().check_dense().is_err());
    }

    #[test]
    fn distribution_flat_at_zero_temperature() {
        let model = CwModel::new(2, 0.0).unwrap();
        let pi = cw_distribution(&model).unwrap();
        for x in 0..4 {
            assert!((pi.get(x) - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn distribution_d2_beta1() {
        // States (++, +-, -+, --) have weights (e, 1, 1, e).
        let model = CwModel::new(2, 1.0).unwrap();
        let pi = cw_distribution(&model).unwrap();
        let e = std::f64::consts::E;
        let z = 2.0 * e + 2.0;
        assert!((pi.get(0b11) - e / z).abs() < 1e-14);
        assert!((pi.get(0b01) - 1.0 / z).abs() < 1e-14);
        assert!((pi.get(0b10) - 1.0 / z).abs() < 1e-14);
        assert!((pi.get(0b00) - e / z).abs() < 1e-14);
    }

    #[test]
    fn distribution_constant_on_orbits() {
        let model = CwModel::new(4, 1.7).unwrap();
        let pi = cw_distribution(&model).unwrap();
        let part = cw_orbit_partition(&model).unwrap();
        for orbit in part.orbits() {
            let p0 = pi.get(orbit[0]);
            for &x in orbit {
                assert!((pi.get(x) - p0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn orbit_sizes_d4() {
        assert_eq!(cw_orbit_size(4, 0), 6.0);
        assert_eq!(cw_orbit_size(4, 1), 8.0);
        assert_eq!(cw_orbit_size(4, 2), 2.0);
    }

    #[test]
    fn displayed_weights_d4_at_beta_star() {
        // The uniformly-doubled display evaluates to (12, 8e^0.625, 2e^2.5).
        let beta = beta_star(4);
        assert!((beta - 1.25).abs() < 1e-15);
        let w0 = cw_orbit_weight_displayed(4, beta, 0);
        let w1 = cw_orbit_weight_displayed(4, beta, 1);
        let w2 = cw_orbit_weight_displayed(4, beta, 2);
        assert!((w0 - 12.0).abs() < 1e-12);
        assert!((w1 - 8.0 * 0.625f64.exp()).abs() < 1e-12);
        assert!((w2 - 2.0 * 2.5f64.exp()).abs() < 1e-12);
        assert!(w0 < w1 && w1 < w2);
    }

    #[test]
    fn exact_masses_match_state_aggregation() {
        for (d, beta) in [(2, 0.0), (4, 1.25), (6, 2.0), (8, 2.25)] {
            let model = CwModel::new(d, beta).unwrap();
            let masses = cw_orbit_masses(&model);
            let pi = cw_distribution(&model).unwrap();
            let part = cw_orbit_partition(&model).unwrap();
            let aggregated = part.orbit_masses(&pi);
            for (a, b) in masses.iter().zip(&aggregated) {
                assert!((a - b).abs() < 1e-12, "d={d} beta={beta}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn masses_d2_beta0() {
        let model = CwModel::new(2, 0.0).unwrap();
        let masses = cw_orbit_masses(&model);
        assert!((masses[0] - 0.5).abs() < 1e-15);
        assert!((masses[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn mass_ratio_formula_above_index_zero() {
        // For i >= 1 the sizes double on both sides and the displayed ratio
        // is exact; at i = 0 the exact ratio is twice the displayed one.
        for (d, beta) in [(6u32, 1.75), (8, 2.25), (8, 3.0)] {
            let model = CwModel::new(d, beta).unwrap();
            let masses = cw_orbit_masses(&model);
            let half = d as usize / 2;
            for i in 1..half {
                let lhs = masses[i + 1] / masses[i];
                let rhs = ((d as f64 / 2.0 - i as f64) / (d as f64 / 2.0 + i as f64 + 1.0))
                    * (2.0 * beta * (2 * i + 1) as f64 / d as f64).exp();
                assert!((lhs - rhs).abs() < 1e-12, "d={d} i={i}: {lhs} vs {rhs}");
            }
            let doubled = masses[1] / masses[0];
            let displayed =
                (d as f64 / 2.0) / (d as f64 / 2.0 + 1.0) * (2.0 * beta / d as f64).exp();
            assert!((doubled - 2.0 * displayed).abs() < 1e-12);
        }
    }

    #[test]
    fn masses_monotone_at_beta_star() {
        for d in [2u32, 4, 6, 8] {
            let model = CwModel::new(d, beta_star(d)).unwrap();
            let masses = cw_orbit_masses(&model);
            for w in masses.windows(2) {
                assert!(w[1] >= w[0] - 1e-15, "d={d}: {masses:?}");
            }
        }
    }

    #[test]
    fn partition_function_bound_holds() {
        for (d, beta) in [(4u32, 1.25), (8, 2.25)] {
            let model = CwModel::new(d, beta).unwrap();
            assert!(partition_function(&model) <= partition_function_bound(&model));
        }
    }

    #[test]
    fn merged_tail_partition_shapes() {
        let model = CwModel::new(4, 1.25).unwrap();
        // kcut = d/2 keeps the original orbits.
        let full = merged_tail_partition(&model, 2).unwrap();
        let original = cw_orbit_partition(&model).unwrap();
        assert_eq!(full.orbits(), original.orbits());
        let merged = merged_tail_partition(&model, 1).unwrap();
        assert_eq!(merged.k(), 2);
        assert_eq!(merged.orbit_states(0).len(), 6);
        assert_eq!(merged.orbit_states(1).len(), 10);
    }

    #[test]
    fn tail_mass_grows_with_beta() {
        let lo = tail_mass_and_delta(&CwModel::new(8, 2.25).unwrap(), 2).0;
        let hi = tail_mass_and_delta(&CwModel::new(8, 6.0).unwrap(), 2).0;
        assert!(hi > lo);
        assert!(hi > 0.99);
    }

    #[test]
    fn star_kernel_valid_and_spectrum() {
        let model = CwModel::new(4, 3.0).unwrap();
        let star = cw_star_kernel(&model, 1).unwrap();
        assert!(star.stationarity_residual() < 1e-12);
        assert!(star.reversibility_residual() < 1e-12);
        let spec = spectral::spectrum_reversible(&star).unwrap();
        let (tail, _) = tail_mass_and_delta(&model, 1);
        let expect_slem = 1.0 / tail - 1.0;
        assert!((spec.slem - expect_slem).abs() < 1e-10);
        // All other non-trivial eigenvalues vanish.
        for lam in &spec.eigenvalues[1..spec.eigenvalues.len() - 1] {
            assert!(lam.abs() < 1e-10);
        }
    }

    #[test]
    fn star_one_step_worst_tv_is_one_minus_tail_mass() {
        // From outside the tail the row is pi restricted to the tail, so its
        // TV distance to pi is exactly 1 - pi(tail); inside rows are closer.
        let model = CwModel::new(2, 2.0).unwrap();
        let star = cw_star_kernel(&model, 1).unwrap();
        let (tail, _) = tail_mass_and_delta(&model, 1);
        let worst = stats::worst_tv_at_power(&star, 1);
        assert!((worst - (1.0 - tail)).abs() < 1e-12, "{worst} vs {}", 1.0 - tail);
        // Here 1 - tail < 0.25, so a single step already mixes.
        assert_eq!(mixing_time_exact(&star, 0.25).unwrap(), 1);
    }

    #[test]
    fn star_kernel_matches_lifted_star_chain() {
        // Piecewise construction versus lifting the orbit-space star chain
        // through the merged-tail partition.
        for (d, beta, kcut) in [(4u32, 2.0, 1usize), (8, 2.25, 2)] {
            let model = CwModel::new(d, beta).unwrap();
            let direct = cw_star_kernel(&model, kcut).unwrap();
            let part = merged_tail_partition(&model, kcut).unwrap();
            let pi = cw_distribution(&model).unwrap();
            let pibar = part.orbit_distribution(&pi);
            let star = crate::design::star_orbit_sampler(&pibar).unwrap();
            let lifted = crate::design::lift_orbit_sampler(&star, &part, &pi).unwrap();
            assert!(direct.max_diff(&lifted) < 1e-12, "d={d} kcut={kcut}");
        }
    }

    #[test]
    fn star_kernel_needs_dominant_tail() {
        let model = CwModel::new(8, 0.1).unwrap();
        assert!(matches!(
            cw_star_kernel(&model, 4),
            Err(Error::MassNotDominant(_))
        ));
    }

    #[test]
    fn auto_kcut_picks_smallest() {
        let model = CwModel::new(8, 2.25).unwrap();
        assert_eq!(auto_kcut(&model, 0.05), Some(1));
    }

    #[test]
    fn star_step_deterministic_and_lands_in_tail() {
        let model = CwModel::new(2, 2.0).unwrap();
        let from = state_to_spins(0b01, 2);
        let mut a = crate::random::seeded_rng(9, 0);
        let mut b = crate::random::seeded_rng(9, 0);
        let s1 = cw_star_step(&from, &model, 1, &mut a).unwrap();
        let s2 = cw_star_step(&from, &model, 1, &mut b).unwrap();
        assert_eq!(s1, s2);

        let model8 = CwModel::new(8, 2.25).unwrap();
        let sampler = CwStarSampler::new(model8, 1).unwrap();
        let start = state_to_spins(0b00001111, 8); // zero magnetisation, outside the tail
        let mut rng = crate::random::seeded_rng(1, 0);
        for _ in 0..5000 {
            let next = sampler.step(&start, &mut rng);
            assert!(spin_orbit_index(&next) >= 1, "transitions must enter the tail");
        }
    }

    #[test]
    fn star_step_matches_dense_row() {
        let model = CwModel::new(4, 2.0).unwrap();
        let kcut = 1;
        let star = cw_star_kernel(&model, kcut).unwrap();
        let from_state = 0b0011usize; // m = 0
        let from = state_to_spins(from_state, 4);
        let samples = 200_000u64;
        let counts = empirical_transition_counts(&model, kcut, &from, samples, 42).unwrap();
        let expected: Vec<f64> = (0..16).map(|y| star.entry(from_state, y)).collect();
        let out = stats::chi_square_gof(&counts, &expected, 5.0);
        assert!(out.p_value > 0.001, "chi2 = {}, p = {}", out.statistic, out.p_value);
        // Every empirical frequency sits within three standard errors of the
        // dense row entry.
        for (y, &p) in expected.iter().enumerate() {
            if p <= 0.0 {
                assert_eq!(counts[y], 0);
                continue;
            }
            let freq = counts[y] as f64 / samples as f64;
            let se = (p * (1.0 - p) / samples as f64).sqrt();
            assert!(
                (freq - p).abs() <= 3.0 * se,
                "state {y}: freq {freq}, expected {p}, se {se}"
            );
        }
    }

    #[test]
    fn spin_state_round_trip() {
        for state in 0..16usize {
            assert_eq!(spins_to_state(&state_to_spins(state, 4)), state);
        }
    }

    #[test]
    fn glauber_d2_flat_target() {
        let model = CwModel::new(2, 0.0).unwrap();
        let g = glauber_kernel(&model).unwrap();
        for x in 0..4usize {
            for j in 0..2 {
                assert!((g.entry(x, x ^ (1 << j)) - 0.5).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn glauber_reversible_d4() {
        let model = CwModel::new(4, 2.0).unwrap();
        let g = glauber_kernel(&model).unwrap();
        assert!(g.reversibility_residual() < 1e-14);
        assert!(g.stationarity_residual() < 1e-14);
    }

    #[test]
    fn mixing_time_of_projector_is_one() {
        let pi = Distribution::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let proj = Kernel::stationary_projector(pi);
        assert_eq!(mixing_time_exact(&proj, 0.25).unwrap(), 1);
    }

    #[test]
    fn mixing_time_smallest_t() {
        let model = CwModel::new(4, 2.0).unwrap();
        let g = glauber_kernel(&model).unwrap();
        let eps = 0.25;
        let t = mixing_time_exact(&g, eps).unwrap();
        assert!(t >= 2);
        assert!(stats::worst_tv_at_power(&g, t) < eps);
        assert!(stats::worst_tv_at_power(&g, t - 1) >= eps);
    }

    #[test]
    fn mixing_time_detects_non_convergence() {
        let pi = Distribution::uniform(2);
        let id = Kernel::identity(pi);
        assert!(matches!(
            mixing_time_exact(&id, 0.25),
            Err(Error::NoConvergence(_))
        ));
    }
}
