use crate::dist::Distribution;
use crate::error::{Error, Result};

/// A partition of the states `0..n` into non-empty orbits.
///
/// An orbit partition is the only trace of a group action this crate keeps:
/// every orbit kernel depends on the group through its orbits alone.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrbitPartition {
    orbits: Vec<Vec<usize>>,
    state_to_orbit: Vec<usize>,
}

impl OrbitPartition {
    /// Builds a partition from orbit blocks. Blocks must be non-empty,
    /// pairwise disjoint and cover `0..n` exactly. States within a block are
    /// stored in ascending order; the block order is preserved.
    pub fn new(n: usize, orbits: Vec<Vec<usize>>) -> Result<Self> {
        if orbits.is_empty() {
            return Err(Error::InvalidArgument("partition has no orbits".into()));
        }
        let mut state_to_orbit = vec![usize::MAX; n];
        let mut sorted = Vec::with_capacity(orbits.len());
        for (i, mut orbit) in orbits.into_iter().enumerate() {
            if orbit.is_empty() {
                return Err(Error::InvalidArgument(format!("orbit {i} is empty")));
            }
            orbit.sort_unstable();
            for &x in &orbit {
                if x >= n {
                    return Err(Error::InvalidArgument(format!(
                        "state {x} out of range for n = {n}"
                    )));
                }
                if state_to_orbit[x] != usize::MAX {
                    return Err(Error::InvalidArgument(format!(
                        "state {x} appears in more than one orbit"
                    )));
                }
                state_to_orbit[x] = i;
            }
            sorted.push(orbit);
        }
        if let Some(x) = state_to_orbit.iter().position(|&o| o == usize::MAX) {
            return Err(Error::InvalidArgument(format!(
                "state {x} is not covered by any orbit"
            )));
        }
        Ok(Self {
            orbits: sorted,
            state_to_orbit,
        })
    }

    /// One singleton orbit per state.
    pub fn singletons(n: usize) -> Self {
        Self {
            orbits: (0..n).map(|x| vec![x]).collect(),
            state_to_orbit: (0..n).collect(),
        }
    }

    /// A single orbit containing the whole space.
    pub fn single_orbit(n: usize) -> Self {
        Self {
            orbits: vec![(0..n).collect()],
            state_to_orbit: vec![0; n],
        }
    }

    /// Builds a partition from per-state labels; blocks are ordered by their
    /// smallest member.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut reps: Vec<usize> = Vec::new();
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for (x, &l) in labels.iter().enumerate() {
            match reps.iter().position(|&r| r == l) {
                Some(i) => blocks[i].push(x),
                None => {
                    reps.push(l);
                    blocks.push(vec![x]);
                }
            }
        }
        Self::new(labels.len(), blocks).expect("labels induce a valid partition")
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.state_to_orbit.len()
    }

    /// Number of orbits.
    #[inline]
    pub fn k(&self) -> usize {
        self.orbits.len()
    }

    #[inline]
    pub fn orbits(&self) -> &[Vec<usize>] {
        &self.orbits
    }

    #[inline]
    pub fn orbit_of(&self, x: usize) -> usize {
        self.state_to_orbit[x]
    }

    #[inline]
    pub fn orbit_states(&self, i: usize) -> &[usize] {
        &self.orbits[i]
    }

    pub fn has_non_singleton(&self) -> bool {
        self.orbits.iter().any(|o| o.len() > 1)
    }

    /// `pi`-mass of every orbit, in orbit order.
    pub fn orbit_masses(&self, pi: &Distribution) -> Vec<f64> {
        self.orbits.iter().map(|o| pi.mass(o)).collect()
    }

    /// Orbit masses as a distribution on the orbit space.
    pub fn orbit_distribution(&self, pi: &Distribution) -> Distribution {
        Distribution::from_weights(&self.orbit_masses(pi)).expect("orbit masses are positive")
    }

    /// Coarsest partition refined by every input: states are merged whenever
    /// some input partition puts them in one orbit. Classes are labelled by
    /// their smallest member.
    pub fn join(n: usize, parts: &[&OrbitPartition]) -> Result<Self> {
        let mut ds = DisjointSet::new(n);
        for part in parts {
            if part.n() != n {
                return Err(Error::DimensionMismatch(format!(
                    "partition over {} states, expected {n}",
                    part.n()
                )));
            }
            for orbit in part.orbits() {
                for &x in &orbit[1..] {
                    ds.union(orbit[0], x);
                }
            }
        }
        Self::new(n, ds.classes())
    }
}

/// Disjoint-set forest with union by size and path compression.
#[derive(Debug, Clone)]
pub struct DisjointSet {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSet {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }

    /// Classes ordered by smallest member, members ascending.
    pub fn classes(&mut self) -> Vec<Vec<usize>> {
        let n = self.parent.len();
        let mut by_root: Vec<Vec<usize>> = vec![Vec::new(); n];
        for x in 0..n {
            let r = self.find(x);
            by_root[r].push(x);
        }
        let mut classes: Vec<Vec<usize>> = by_root.into_iter().filter(|c| !c.is_empty()).collect();
        classes.sort_by_key(|c| c[0]);
        classes
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_overlap_and_gap() {
        assert!(OrbitPartition::new(3, vec![vec![0, 1], vec![1, 2]]).is_err());
        assert!(OrbitPartition::new(3, vec![vec![0, 1]]).is_err());
        assert!(OrbitPartition::new(3, vec![vec![0, 1], vec![2], vec![]]).is_err());
    }

    #[test]
    fn join_is_transitive_closure() {
        let a = OrbitPartition::new(4, vec![vec![0, 1], vec![2], vec![3]]).unwrap();
        let b = OrbitPartition::new(4, vec![vec![1, 2], vec![0], vec![3]]).unwrap();
        let j = OrbitPartition::join(4, &[&a, &b]).unwrap();
        assert_eq!(j.orbits(), &[vec![0, 1, 2], vec![3]]);
    }

    #[test]
    fn from_labels_orders_by_smallest_member() {
        let p = OrbitPartition::from_labels(&[7, 3, 7, 1]);
        assert_eq!(p.orbits(), &[vec![0, 2], vec![1], vec![3]]);
    }
}
