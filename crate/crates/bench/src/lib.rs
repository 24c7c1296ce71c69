//! Shared fixtures for the criterion benches.

use vote_diffuse::{
    InitialProfile, PairDistribution, PairSourceSpec, SimulationConfig, SubjectPolicy,
};

/// A mid-sized gossip configuration reused across benches.
pub fn gossip_config(agents: usize, candidates: usize, steps: u64) -> SimulationConfig {
    SimulationConfig {
        agents,
        candidates,
        initial: InitialProfile::Uniform { seed: 1 },
        pairs: PairSourceSpec::Distribution(
            PairDistribution::uniform_complete(agents).expect("agents >= 2"),
        ),
        subjects: SubjectPolicy::Full,
        max_steps: steps,
        seed: 7,
        snapshot_every: steps,
        convergence_tol: 1e-300,
        convergence_window: u64::MAX,
    }
}
