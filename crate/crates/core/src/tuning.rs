//! Heuristics that learn a useful orbit partition from sampler trajectories:
//! periodic adaptation during the run, and a high-temperature exploration
//! phase that freezes a partition before the real run starts.

use rand::Rng;

use crate::dist::Distribution;
use crate::error::{Error, Result};
use crate::kernel::{build_orbit_kernel, sandwich, Kernel, OrbitKernelKind};
use crate::partition::OrbitPartition;

/// How visited states are ranked when the merged orbit is rebuilt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GroupBy {
    /// Merge the `k` visited states with the smallest energy.
    #[default]
    SmallestEnergy,
    /// Merge the `k` visited states with the largest visit count.
    LargestEmpiricalMass,
}

/// Configuration for the adaptive and exploratory tuners.
#[derive(Debug, Clone, Copy)]
pub struct TuneConfig {
    /// Target size of the single merged orbit.
    pub k: usize,
    /// Steps between partition rebuilds.
    pub block_len: usize,
    pub total_steps: usize,
    /// Inverse temperature of the exploration chain.
    pub beta_explore: f64,
    /// Inverse temperature of the target distribution.
    pub beta_target: f64,
    pub seed: u64,
    pub group_by: GroupBy,
}

impl TuneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        if self.block_len == 0 {
            return Err(Error::InvalidArgument("block_len must be at least 1".into()));
        }
        Ok(())
    }
}

impl Default for TuneConfig {
    fn default() -> Self {
        Self {
            k: 2,
            block_len: 50,
            total_steps: 5000,
            beta_explore: 0.2,
            beta_target: 3.0,
            seed: 0,
            group_by: GroupBy::SmallestEnergy,
        }
    }
}

/// A partition learned from a trajectory: one merged orbit of low-energy (or
/// high-frequency) visited states, all other states singletons, together
/// with the evidence it was built from.
#[derive(Debug, Clone)]
pub struct LearnedAction {
    pub partition: OrbitPartition,
    /// Visit counts per state at the time the partition was built.
    pub visit_counts: Vec<u64>,
    /// First-visit times used to break ties.
    pub first_visit: Vec<Option<usize>>,
    /// Energy of every state.
    pub energies: Vec<f64>,
}

fn ranked_visited(
    visit_counts: &[u64],
    first_visit: &[Option<usize>],
    energies: &[f64],
    group_by: GroupBy,
) -> Vec<usize> {
    let mut visited: Vec<usize> = (0..visit_counts.len())
        .filter(|&x| visit_counts[x] > 0)
        .collect();
    match group_by {
        GroupBy::SmallestEnergy => visited.sort_by(|&a, &b| {
            energies[a]
                .partial_cmp(&energies[b])
                .unwrap()
                .then(first_visit[a].cmp(&first_visit[b]))
                .then(a.cmp(&b))
        }),
        GroupBy::LargestEmpiricalMass => visited.sort_by(|&a, &b| {
            visit_counts[b]
                .cmp(&visit_counts[a])
                .then(first_visit[a].cmp(&first_visit[b]))
                .then(a.cmp(&b))
        }),
    }
    visited
}

fn build_learned_partition(
    n: usize,
    k: usize,
    visit_counts: &[u64],
    first_visit: &[Option<usize>],
    energies: &[f64],
    group_by: GroupBy,
) -> OrbitPartition {
    let ranked = ranked_visited(visit_counts, first_visit, energies, group_by);
    let merged: Vec<usize> = ranked.iter().take(k).copied().collect();
    let mut orbits: Vec<Vec<usize>> = Vec::new();
    if !merged.is_empty() {
        orbits.push(merged.clone());
    }
    for x in 0..n {
        if !merged.contains(&x) {
            orbits.push(vec![x]);
        }
    }
    OrbitPartition::new(n, orbits).expect("merged block plus singletons covers the space")
}

fn sample_row(p: &Kernel, x: usize, rng: &mut impl Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for y in 0..p.n() {
        acc += p.entry(x, y);
        if u < acc {
            return y;
        }
    }
    p.n() - 1
}

/// Orbit Gibbs refresh: redraw the state within its orbit proportionally to
/// the reference mass.
fn gibbs_draw(
    pi: &Distribution,
    part: &OrbitPartition,
    state: usize,
    rng: &mut impl Rng,
) -> usize {
    let orbit = part.orbit_states(part.orbit_of(state));
    if orbit.len() == 1 {
        return state;
    }
    let u: f64 = rng.random_range(0.0..pi.mass(orbit));
    let mut acc = 0.0;
    for &y in orbit {
        acc += pi.get(y);
        if u < acc {
            return y;
        }
    }
    *orbit.last().unwrap()
}

/// One step of `G P G` simulated in three stages (orbit refresh, base move,
/// orbit refresh) without materialising the sandwich.
fn sandwich_step(p: &Kernel, part: &OrbitPartition, x: usize, rng: &mut impl Rng) -> usize {
    let pi = p.reference();
    let y1 = gibbs_draw(pi, part, x, rng);
    let y2 = sample_row(p, y1, rng);
    gibbs_draw(pi, part, y2, rng)
}

/// Runs the base sampler in blocks, rebuilding the partition after every
/// block from the states visited so far: the `k` best-ranked visited states
/// merge into one orbit, every other state stays a singleton. Returns the
/// sequence of learned partitions and the full trajectory.
///
/// Only the per-block kernel `G_t P G_t` carries a guarantee (its SLEM is
/// never worse than the base sampler's); nothing is claimed about the
/// ergodicity of the adaptive process as a whole.
pub fn adaptive_tune(
    p: &Kernel,
    energies: &[f64],
    cfg: &TuneConfig,
) -> Result<(Vec<LearnedAction>, Vec<usize>)> {
    cfg.validate()?;
    let n = p.n();
    if energies.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} energies for {} states",
            energies.len(),
            n
        )));
    }
    let mut rng = crate::random::seeded_rng(cfg.seed, 0);
    let mut part = OrbitPartition::singletons(n);
    let mut visit_counts = vec![0u64; n];
    let mut first_visit: Vec<Option<usize>> = vec![None; n];
    let mut trajectory = Vec::with_capacity(cfg.total_steps + 1);
    let mut actions = Vec::new();

    let mut x = sample_row(&Kernel::stationary_projector(p.reference().clone()), 0, &mut rng);
    visit_counts[x] += 1;
    first_visit[x] = Some(0);
    trajectory.push(x);

    let mut step = 0;
    while step < cfg.total_steps {
        let block_end = (step + cfg.block_len).min(cfg.total_steps);
        while step < block_end {
            x = sandwich_step(p, &part, x, &mut rng);
            step += 1;
            visit_counts[x] += 1;
            if first_visit[x].is_none() {
                first_visit[x] = Some(step);
            }
            trajectory.push(x);
        }
        part = build_learned_partition(
            n,
            cfg.k,
            &visit_counts,
            &first_visit,
            energies,
            cfg.group_by,
        );
        actions.push(LearnedAction {
            partition: part.clone(),
            visit_counts: visit_counts.clone(),
            first_visit: first_visit.clone(),
            energies: energies.to_vec(),
        });
    }
    Ok((actions, trajectory))
}

/// Uniform-proposal Metropolis kernel for the Gibbs distribution
/// `pi_beta(x) proportional to exp(-beta F(x))`.
pub fn metropolis_for_energy(energies: &[f64], beta: f64) -> Result<Kernel> {
    let n = energies.len();
    if n == 0 {
        return Err(Error::InvalidArgument("no states".into()));
    }
    let weights: Vec<f64> = {
        let min = energies.iter().cloned().fold(f64::INFINITY, f64::min);
        energies.iter().map(|&f| (-(beta) * (f - min)).exp()).collect()
    };
    let pi = Distribution::from_weights(&weights)?;
    let mut matrix = nalgebra::DMatrix::zeros(n, n);
    let prop = 1.0 / (n as f64 - 1.0);
    for x in 0..n {
        let mut off = 0.0;
        for y in 0..n {
            if y == x {
                continue;
            }
            let v = prop * (pi.get(y) / pi.get(x)).min(1.0);
            matrix[(x, y)] = v;
            off += v;
        }
        matrix[(x, x)] = 1.0 - off;
    }
    Ok(Kernel::from_construction(matrix, pi))
}

/// Learns a partition with a flat exploration chain and freezes it for the
/// cold target: runs uniform-proposal Metropolis at `beta_explore` for
/// `total_steps`, merges the `k` best-ranked visited states, and returns the
/// learned action together with the sandwich `G P G` of the Metropolis
/// sampler at `beta_target`.
pub fn exploratory_learn(
    energies: &[f64],
    cfg: &TuneConfig,
) -> Result<(LearnedAction, Kernel)> {
    cfg.validate()?;
    if cfg.beta_explore >= cfg.beta_target {
        return Err(Error::InvalidArgument(format!(
            "exploration temperature must be hotter: beta_explore {} >= beta_target {}",
            cfg.beta_explore, cfg.beta_target
        )));
    }
    let n = energies.len();
    let explorer = metropolis_for_energy(energies, cfg.beta_explore)?;
    let mut rng = crate::random::seeded_rng(cfg.seed, 1);
    let mut visit_counts = vec![0u64; n];
    let mut first_visit: Vec<Option<usize>> = vec![None; n];
    let mut x = rng.random_range(0..n);
    visit_counts[x] += 1;
    first_visit[x] = Some(0);
    for step in 1..=cfg.total_steps {
        x = sample_row(&explorer, x, &mut rng);
        visit_counts[x] += 1;
        if first_visit[x].is_none() {
            first_visit[x] = Some(step);
        }
    }
    let partition = build_learned_partition(
        n,
        cfg.k,
        &visit_counts,
        &first_visit,
        energies,
        cfg.group_by,
    );
    let action = LearnedAction {
        partition: partition.clone(),
        visit_counts,
        first_visit,
        energies: energies.to_vec(),
    };
    let target = metropolis_for_energy(energies, cfg.beta_target)?;
    let g = build_orbit_kernel(OrbitKernelKind::Gibbs, &partition, target.reference())?;
    let gpg = sandwich(&g, &target, &g)?;
    Ok((action, gpg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral;

    fn three_state_energies() -> (Kernel, Vec<f64>) {
        let (_, _, p) = crate::examples::three_state_projection_example();
        // F = -log pi makes small energy mean large mass.
        let energies = p.reference().probs().iter().map(|&q| -q.ln()).collect();
        (p, energies)
    }

    #[test]
    fn k1_merges_nothing_interesting() {
        let (p, energies) = three_state_energies();
        let cfg = TuneConfig {
            k: 1,
            block_len: 25,
            total_steps: 200,
            seed: 3,
            ..TuneConfig::default()
        };
        let (actions, trajectory) = adaptive_tune(&p, &energies, &cfg).unwrap();
        assert_eq!(trajectory.len(), 201);
        let last = actions.last().unwrap();
        // A single-state merge means every orbit is a singleton.
        assert!(last.partition.orbits().iter().all(|o| o.len() == 1));
    }

    #[test]
    fn adaptive_merges_largest_mass_states() {
        let (p, energies) = three_state_energies();
        let cfg = TuneConfig {
            k: 2,
            block_len: 50,
            total_steps: 2000,
            seed: 7,
            ..TuneConfig::default()
        };
        let (actions, _) = adaptive_tune(&p, &energies, &cfg).unwrap();
        let last = actions.last().unwrap();
        // State 2 has the largest mass (0.4), hence the smallest energy; it
        // must sit in the merged orbit once everything has been visited.
        let merged = last
            .partition
            .orbits()
            .iter()
            .find(|o| o.len() == 2)
            .expect("one merged orbit of size 2");
        assert!(merged.contains(&2), "merged orbit {merged:?}");
        assert!(last.visit_counts.iter().all(|&c| c > 0));
        // Each learned partition keeps the per-block guarantee.
        for action in &actions {
            let g = build_orbit_kernel(
                OrbitKernelKind::Gibbs,
                &action.partition,
                p.reference(),
            )
            .unwrap();
            let gpg = sandwich(&g, &p, &g).unwrap();
            let rho_gpg = spectral::spectrum_reversible(&gpg).unwrap().slem;
            let rho_p = spectral::spectrum_reversible(&p).unwrap().slem;
            assert!(rho_gpg <= rho_p + 1e-10);
        }
    }

    #[test]
    fn adaptive_is_reproducible() {
        let (p, energies) = three_state_energies();
        let cfg = TuneConfig {
            k: 2,
            block_len: 10,
            total_steps: 100,
            seed: 11,
            ..TuneConfig::default()
        };
        let (_, t1) = adaptive_tune(&p, &energies, &cfg).unwrap();
        let (_, t2) = adaptive_tune(&p, &energies, &cfg).unwrap();
        assert_eq!(t1, t2);
    }

    #[test]
    fn exploratory_improves_cold_slem() {
        // Curie-Weiss d = 4 energies on the 16 states.
        let model = crate::curie_weiss::CwModel::new(4, 1.0).unwrap();
        let energies: Vec<f64> = (0..16)
            .map(|x| {
                let i = model.orbit_index(x);
                -2.0 * (i * i) as f64 / 4.0
            })
            .collect();
        let cfg = TuneConfig {
            k: 2,
            block_len: 50,
            total_steps: 4000,
            beta_explore: 0.2,
            beta_target: 3.0,
            seed: 5,
            group_by: GroupBy::SmallestEnergy,
        };
        let (action, gpg) = exploratory_learn(&energies, &cfg).unwrap();
        // The two ground states (all-up, all-down) minimise the energy.
        let merged = action
            .partition
            .orbits()
            .iter()
            .find(|o| o.len() == 2)
            .expect("merged orbit");
        assert_eq!(merged, &vec![0b0000usize, 0b1111]);
        let target = metropolis_for_energy(&energies, cfg.beta_target).unwrap();
        let rho_gpg = spectral::spectrum_reversible(&gpg).unwrap().slem;
        let rho_p = spectral::spectrum_reversible(&target).unwrap().slem;
        assert!(rho_gpg <= rho_p + 1e-10, "{rho_gpg} vs {rho_p}");
    }

    #[test]
    fn exploratory_requires_hotter_exploration() {
        let cfg = TuneConfig {
            beta_explore: 2.0,
            beta_target: 1.0,
            ..TuneConfig::default()
        };
        assert!(exploratory_learn(&[0.0, 1.0, 2.0], &cfg).is_err());
    }

    #[test]
    fn adaptive_on_spin_model_finds_the_ground_states() {
        // Sixteen spin states with the mean-field energy at beta = 2: the two
        // fully aligned states minimise the energy and end up merged.
        let model = crate::curie_weiss::CwModel::new(4, 2.0).unwrap();
        let energies: Vec<f64> = (0..16)
            .map(|x| {
                let i = model.orbit_index(x);
                -2.0 * (i * i) as f64 / 4.0
            })
            .collect();
        let p = metropolis_for_energy(&energies, 2.0).unwrap();
        let cfg = TuneConfig {
            k: 2,
            block_len: 50,
            total_steps: 6000,
            seed: 17,
            ..TuneConfig::default()
        };
        let (actions, _) = adaptive_tune(&p, &energies, &cfg).unwrap();
        let merged = actions
            .last()
            .unwrap()
            .partition
            .orbits()
            .iter()
            .find(|o| o.len() == 2)
            .expect("merged orbit")
            .clone();
        assert_eq!(merged, vec![0b0000usize, 0b1111]);
    }

    #[test]
    fn two_learned_partitions_respect_the_alternating_rate_bound() {
        let (p, energies) = three_state_energies();
        let pi = p.reference().clone();
        let mut partitions = Vec::new();
        for seed in [21u64, 22] {
            let cfg = TuneConfig {
                k: 2,
                block_len: 40,
                total_steps: 1200,
                seed,
                ..TuneConfig::default()
            };
            let (actions, _) = adaptive_tune(&p, &energies, &cfg).unwrap();
            partitions.push(actions.last().unwrap().partition.clone());
        }
        let refs: Vec<&crate::OrbitPartition> = partitions.iter().collect();
        let g1 = build_orbit_kernel(OrbitKernelKind::Gibbs, refs[0], &pi).unwrap();
        let g2 = build_orbit_kernel(OrbitKernelKind::Gibbs, refs[1], &pi).unwrap();
        let lazy = crate::kernel::lazify(&p);
        let rho_p = spectral::spectrum_reversible(&lazy).unwrap().slem;
        let c = crate::altproj::generalized_cosine(&refs, &pi).unwrap();
        let (_, ginf) = crate::altproj::limiting_projection(&refs, &pi).unwrap();
        let kinf = sandwich(&ginf, &lazy, &ginf).unwrap();
        let rho_inf = spectral::spectrum_reversible(&kinf).unwrap().slem;
        let forward = g1.multiply(&g2).unwrap();
        let backward = g2.multiply(&g1).unwrap();
        let kn = forward.multiply(&lazy).unwrap().multiply(&backward).unwrap();
        let rho_n = spectral::spectrum_reversible(&kn).unwrap().slem;
        assert!(rho_n - rho_inf <= 2.0 * c * rho_p + 1e-9);
    }

    #[test]
    fn frequency_ranking_flag() {
        let (p, energies) = three_state_energies();
        let cfg = TuneConfig {
            k: 2,
            block_len: 50,
            total_steps: 3000,
            seed: 13,
            group_by: GroupBy::LargestEmpiricalMass,
            ..TuneConfig::default()
        };
        let (actions, _) = adaptive_tune(&p, &energies, &cfg).unwrap();
        let last = actions.last().unwrap();
        let merged = last
            .partition
            .orbits()
            .iter()
            .find(|o| o.len() == 2)
            .expect("merged orbit");
        // The highest-mass state dominates the visit counts as well.
        assert!(merged.contains(&2));
    }
}
