//! Two-qubit system parameters, Bohr spectrum and cluster partition.
//!
//! Basis ordering is fixed everywhere: Φ₁=|++⟩, Φ₂=|+−⟩, Φ₃=|−+⟩, Φ₄=|−−⟩.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for deciding that two Bohr energies coincide.
pub const ENERGY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSystem", into = "RawSystem")]
pub struct SystemParams {
    b1: f64,
    b2: f64,
    beta: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct RawSystem {
    b1: f64,
    b2: f64,
    beta: f64,
}

impl TryFrom<RawSystem> for SystemParams {
    type Error = Error;

    fn try_from(r: RawSystem) -> Result<Self> {
        SystemParams::new(r.b1, r.b2, r.beta)
    }
}

impl From<SystemParams> for RawSystem {
    fn from(s: SystemParams) -> Self {
        RawSystem {
            b1: s.b1,
            b2: s.b2,
            beta: s.beta,
        }
    }
}

impl SystemParams {
    pub fn new(b1: f64, b2: f64, beta: f64) -> Result<Self> {
        if !(b1 > 0.0) || !b1.is_finite() {
            return Err(Error::invalid("b1", format!("must be positive, got {b1}")));
        }
        if !(b2 > b1) || !b2.is_finite() {
            return Err(Error::invalid(
                "b2",
                format!("need 0 < b1 < b2, got b1 = {b1}, b2 = {b2}"),
            ));
        }
        if (b2 - 2.0 * b1).abs() <= ENERGY_TOL {
            return Err(Error::invalid(
                "b2",
                format!("b2 = 2 b1 makes Bohr frequencies degenerate (b1 = {b1})"),
            ));
        }
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::invalid("beta", format!("must be positive, got {beta}")));
        }
        Ok(SystemParams { b1, b2, beta })
    }

    pub fn b1(&self) -> f64 {
        self.b1
    }

    pub fn b2(&self) -> f64 {
        self.b2
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `e_j = e^{2βB_j}`
    pub fn gibbs_factors(&self) -> (f64, f64) {
        ((2.0 * self.beta * self.b1).exp(), (2.0 * self.beta * self.b2).exp())
    }

    /// Equilibrium populations `e^{-βE_m}/Z`.
    pub fn gibbs_weights(&self) -> [f64; 4] {
        let e = hamiltonian_eigenvalues(self);
        // shift by the ground energy so nothing overflows at large β
        let e_min = e[3];
        let w = e.map(|em| (-self.beta * (em - e_min)).exp());
        let z: f64 = w.iter().sum();
        w.map(|x| x / z)
    }

    /// `Z = Tr e^{-βH_S}`
    pub fn partition_function(&self) -> f64 {
        hamiltonian_eigenvalues(self)
            .iter()
            .map(|&em| (-self.beta * em).exp())
            .sum()
    }
}

/// `(B₁+B₂, B₁−B₂, −B₁+B₂, −B₁−B₂)`
pub fn hamiltonian_eigenvalues(sys: &SystemParams) -> [f64; 4] {
    let (b1, b2) = (sys.b1, sys.b2);
    [b1 + b2, b1 - b2, -b1 + b2, -b1 - b2]
}

/// Bohr frequency with its multiplicity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BohrLevel {
    pub e: f64,
    pub multiplicity: usize,
}

/// Full spectrum of `L_S = H_S ⊗ 1 − 1 ⊗ H_S`, ascending.
pub fn liouville_spectrum(sys: &SystemParams) -> Vec<BohrLevel> {
    cluster_partition(&hamiltonian_eigenvalues(sys))
        .clusters
        .iter()
        .map(|c| BohrLevel {
            e: c.e,
            multiplicity: c.pairs.len(),
        })
        .collect()
}

/// Index pairs `(k, l)`, 1-based, sharing `E_k − E_l = e`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cluster {
    pub e: f64,
    pub pairs: Vec<(usize, usize)>,
}

impl Cluster {
    pub fn multiplicity(&self) -> usize {
        self.pairs.len()
    }

    pub fn contains(&self, m: usize, n: usize) -> bool {
        self.pairs.contains(&(m, n))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterPartition {
    /// Sorted by ascending `e`.
    pub clusters: Vec<Cluster>,
}

impl ClusterPartition {
    /// Clusters on or above the diagonal, each with pairs restricted to
    /// `k ≤ l`, sorted by ascending `|e|`.
    pub fn upper(&self) -> Vec<Cluster> {
        let mut out: Vec<Cluster> = self
            .clusters
            .iter()
            .filter_map(|c| {
                let pairs: Vec<_> = c.pairs.iter().copied().filter(|&(k, l)| k <= l).collect();
                (!pairs.is_empty()).then_some(Cluster { e: c.e, pairs })
            })
            .collect();
        out.sort_by(|a, b| a.e.abs().total_cmp(&b.e.abs()));
        out
    }

    pub fn cluster_of(&self, m: usize, n: usize) -> Option<&Cluster> {
        self.clusters.iter().find(|c| c.contains(m, n))
    }
}

/// Group every index pair by its Bohr energy `E_k − E_l`.
pub fn cluster_partition(energies: &[f64]) -> ClusterPartition {
    let n = energies.len();
    let mut diffs: Vec<(f64, (usize, usize))> = Vec::with_capacity(n * n);
    for k in 0..n {
        for l in 0..n {
            diffs.push((energies[k] - energies[l], (k + 1, l + 1)));
        }
    }
    diffs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut clusters: Vec<Cluster> = Vec::new();
    for (e, pair) in diffs {
        match clusters.last_mut() {
            Some(c) if (e - c.e).abs() <= ENERGY_TOL => c.pairs.push(pair),
            _ => clusters.push(Cluster { e, pairs: vec![pair] }),
        }
    }
    for c in &mut clusters {
        c.pairs.sort();
        // report the zero cluster as exactly 0
        if c.e.abs() <= ENERGY_TOL {
            c.e = 0.0;
        }
    }
    ClusterPartition { clusters }
}
