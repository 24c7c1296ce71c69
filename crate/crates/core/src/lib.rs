//! Pairwise opinion-averaging dynamics over selectable candidate subsets.
//!
//! A society of `m` agents scores `n` candidates. At each discrete step a
//! pair of agents meets, picks a subject set of candidates, and both move
//! their scores on those candidates to the midpoint of their current
//! scores. The crate provides the update primitives, pair and subject
//! processes (gossip, top-k selective, binomial, bounded-confidence),
//! a deterministic simulation engine with replayable traces, and post-hoc
//! analyses: discussion graphs, per-component consensus checks, and top-k'
//! ranking certificates.

pub mod analysis;
pub mod engine;
pub mod error;
pub mod graph;
pub mod pairs;
pub mod profile;
pub mod subjects;
pub mod trace_io;

pub use analysis::{
    conservation_audit, consensus_report, discussion_graph, spread_series, spread_series_csv,
    topk_certificate, verify_component_consensus, ConsensusReport, DiscussionGraph,
    TopKCertificate,
};
pub use engine::{
    has_converged, replay, run, run_with_source, InitialProfile, PairSourceSpec, PolicySummary,
    SimulationConfig, StepRecord, StopReason, Trace,
};
pub use error::{Error, Result};
pub use graph::{connected_components, AgentGraph, UnionFind};
pub use pairs::{
    next_scripted, sample_iid, ConnectivityGraph, IidPairs, PairDistribution, PairSchedule,
    PairSource, ScheduledPairs,
};
pub use profile::{
    apply_step, borda_ranking, column_average, mixing_matrix, top_k_set, AggregateProfile,
    OpinionProfile, PairEvent, SubjectSet,
};
pub use subjects::{
    binomial_subjects, full_subjects, hk_subjects, parse_scripted, topk_subjects, SubjectPolicy,
};
