//! MCMC samplers over graphs (and precision matrices).
//!
//! | kind     | state        | time       |
//! |----------|--------------|------------|
//! | `ss-o`   | `(G, K)`     | discrete   |
//! | `rj`     | `(G, K)`     | discrete   |
//! | `bd`     | `(G, K)`     | continuous |
//! | `g-plrj` | `G`          | discrete   |
//! | `g-plbd` | `G`          | continuous |

mod bd;
pub mod exhaustive;
mod fenwick;
mod mpl;
mod plbd;
mod plrj;
mod rj;
mod ss;
#[cfg(test)]
mod testutil;
mod trace;

pub use bd::{birth_death_rates, joint_birth_death_rates, joint_log_ratio, run_bd, BdOptions, BdStrategy, BirthDeathRates};
pub use mpl::{mpl_log_score, MplHyper, MplScorer, NodeScore};
pub use plbd::run_plbd;
pub use plrj::run_plrj;
pub use rj::{run_rj, RjOptions, RjStrategy};
pub use ss::run_ss;
pub use trace::{SamplerTrace, Snapshot, Step};

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{pair_count, Edge, Graph};

/// The five algorithms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SamplerKind {
    SsO,
    Rj,
    Bd,
    Plrj,
    Plbd,
}

impl SamplerKind {
    pub const ALL: [SamplerKind; 5] = [Self::SsO, Self::Rj, Self::Bd, Self::Plrj, Self::Plbd];

    pub fn name(&self) -> &'static str {
        match self {
            Self::SsO => "ss-o",
            Self::Rj => "rj",
            Self::Bd => "bd",
            Self::Plrj => "g-plrj",
            Self::Plbd => "g-plbd",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name.trim().to_ascii_lowercase())
    }

    /// Continuous-time chains record waiting-time weights.
    pub fn weighted(&self) -> bool {
        matches!(self, Self::Bd | Self::Plbd)
    }

    /// Chains on graphs alone, which never touch precision matrices.
    pub fn graph_space(&self) -> bool {
        matches!(self, Self::Plrj | Self::Plbd)
    }
}

impl std::fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Geometric wall-clock schedule: a snapshot at `first_seconds`, then each
/// time the elapsed time passes the previous mark times `growth`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnapshotSchedule {
    pub first_seconds: f64,
    pub growth: f64,
}

impl Default for SnapshotSchedule {
    fn default() -> Self {
        Self { first_seconds: 0.005, growth: 1.25 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SamplerConfig {
    pub iterations: usize,
    pub seed: u64,
    /// Starting graph; empty when `None`.
    pub initial_graph: Option<Graph>,
    pub snapshots: SnapshotSchedule,
    /// States excluded from the running accumulator and snapshots.
    pub burn_in: usize,
    /// Optional wall-clock cap; the chain stops early once exceeded.
    pub max_seconds: Option<f64>,
    /// Keep per-state toggles (needed for replay and trace export).
    pub record_states: bool,
}

impl SamplerConfig {
    pub fn new(iterations: usize, seed: u64) -> Self {
        Self {
            iterations,
            seed,
            initial_graph: None,
            snapshots: SnapshotSchedule::default(),
            burn_in: 0,
            max_seconds: None,
            record_states: true,
        }
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidParameter("iterations must be at least 1".into()));
        }
        if !(self.snapshots.first_seconds > 0.0 && self.snapshots.growth > 1.0) {
            return Err(Error::InvalidParameter("snapshot schedule must be positive and growing".into()));
        }
        if let Some(g) = &self.initial_graph {
            if g.p() != p {
                return Err(Error::DimensionMismatch { expected: p, found: g.p() });
            }
        }
        if p < 2 {
            return Err(Error::InvalidParameter("samplers need at least two nodes".into()));
        }
        Ok(())
    }

    pub(crate) fn start_graph(&self, p: usize) -> Graph {
        self.initial_graph.clone().unwrap_or_else(|| Graph::new(p))
    }

    pub(crate) fn out_of_time(&self, elapsed: f64) -> bool {
        self.max_seconds.is_some_and(|m| elapsed > m)
    }
}

/// Default iteration budgets for the graph-space chains by dimension.
pub fn default_iterations(p: usize) -> usize {
    if p <= 10 {
        5_000
    } else if p <= 100 {
        100_000
    } else {
        10_000_000
    }
}

/// Toggles one pair chosen uniformly. The kernel is symmetric, so the
/// forward-minus-backward log proposal ratio is 0.
pub fn propose_edge_perturbation<R: Rng + ?Sized>(g: &Graph, rng: &mut R) -> Result<(Graph, Edge, f64)> {
    let p = g.p();
    if p < 2 {
        return Err(Error::InvalidParameter("proposals need at least two nodes".into()));
    }
    let e = Edge::from_index(rng.random_range(0..pair_count(p)), p);
    let mut next = g.clone();
    next.toggle(e);
    Ok((next, e, 0.0))
}

pub(crate) fn uniform_pair<R: Rng + ?Sized>(p: usize, rng: &mut R) -> Edge {
    Edge::from_index(rng.random_range(0..pair_count(p)), p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn names_roundtrip() {
        for k in SamplerKind::ALL {
            assert_eq!(SamplerKind::from_name(k.name()), Some(k));
        }
        assert_eq!(SamplerKind::from_name("G-PLBD"), Some(SamplerKind::Plbd));
        assert_eq!(SamplerKind::from_name("mystery"), None);
    }

    #[test]
    fn proposal_two_nodes_always_toggles() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let g = Graph::new(2);
        for _ in 0..10 {
            let (h, e, lq) = propose_edge_perturbation(&g, &mut rng).unwrap();
            assert_eq!(h, Graph::complete(2));
            assert_eq!(e, Edge::new(0, 1).unwrap());
            assert_eq!(lq, 0.0);
        }
    }

    #[test]
    fn proposal_is_uniform_over_pairs() {
        let p = 6;
        let m = pair_count(p);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = Graph::new(p);
        let mut counts = vec![0usize; m];
        let draws = 100_000;
        for _ in 0..draws {
            let (h, e, lq) = propose_edge_perturbation(&g, &mut rng).unwrap();
            assert_eq!(lq, 0.0);
            assert_eq!(h.edge_count(), 1);
            counts[e.index(p)] += 1;
        }
        let expect = draws as f64 / m as f64;
        let sd = (draws as f64 * (1.0 / m as f64) * (1.0 - 1.0 / m as f64)).sqrt();
        for c in counts {
            assert!((c as f64 - expect).abs() < 3.5 * sd, "{c} vs {expect}");
        }
    }
}
