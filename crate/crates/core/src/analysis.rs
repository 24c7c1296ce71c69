//! Post-hoc verification on recorded traces: discussion graphs, consensus
//! classes, component-consensus checks, and top-k' ranking certificates.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::engine::{PolicySummary, Trace};
use crate::error::{Error, Result};
use crate::graph::{connected_components, AgentGraph};
use crate::profile::{borda_ranking, column_average, top_k_set, OpinionProfile, PairEvent};

/// Per-candidate co-discussion counts: how often each pair was activated
/// with the candidate among the subjects.
#[derive(Clone, Debug)]
pub struct DiscussionGraph {
    pub candidate: usize,
    pub counts: BTreeMap<PairEvent, u64>,
}

pub fn discussion_counts(trace: &Trace, candidate: usize) -> DiscussionGraph {
    let mut counts: BTreeMap<PairEvent, u64> = BTreeMap::new();
    for ev in &trace.events {
        if ev.subjects.contains(candidate) {
            *counts.entry(ev.pair).or_default() += 1;
        }
    }
    DiscussionGraph { candidate, counts }
}

/// Finite-horizon discussion graph: an edge where the pair co-discussed the
/// candidate at least `min_count` times. The count threshold stands in for
/// "infinitely often" on a finite trace.
pub fn discussion_graph(trace: &Trace, candidate: usize, min_count: u64) -> AgentGraph {
    let counts = discussion_counts(trace, candidate);
    AgentGraph::with_edges(
        trace.agents,
        counts.counts.into_iter().filter(|&(_, c)| c >= min_count).map(|(p, _)| p),
    )
}

/// One consensus class: a set of agents sharing (within tolerance) a common
/// final value on one candidate.
#[derive(Clone, Debug, PartialEq)]
pub struct ConsensusClass {
    pub agents: Vec<usize>,
    /// Mean of the members' final scores.
    pub value: f64,
    pub spread: f64,
}

/// Per-candidate partition of the agent set into consensus classes.
#[derive(Clone, Debug)]
pub struct ConsensusReport {
    pub tol: f64,
    /// `classes[j]` partitions the agents for candidate `j`, classes sorted
    /// by their smallest member.
    pub classes: Vec<Vec<ConsensusClass>>,
}

impl ConsensusReport {
    /// True when candidate `j` has a single class covering the society.
    pub fn is_consensual(&self, candidate: usize) -> bool {
        self.classes[candidate].len() == 1
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("candidate,class,agents,value,spread\n");
        for (j, classes) in self.classes.iter().enumerate() {
            for (c, class) in classes.iter().enumerate() {
                let agents: Vec<String> =
                    class.agents.iter().map(|a| (a + 1).to_string()).collect();
                let _ = writeln!(
                    out,
                    "{},{},{},{:e},{:e}",
                    j + 1,
                    c + 1,
                    agents.join(" "),
                    class.value,
                    class.spread
                );
            }
        }
        out
    }
}

/// Clusters agents per candidate by single-linkage on the final scores:
/// two agents land in the same class when a chain of pairwise gaps of at
/// most `tol` connects them. The relation is transitively closed, so a
/// large `tol` can chain distinct limits into one class.
pub fn consensus_report(final_profile: &OpinionProfile, tol: f64) -> ConsensusReport {
    let m = final_profile.agents();
    let n = final_profile.candidates();
    let mut classes = Vec::with_capacity(n);
    for j in 0..n {
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| {
            final_profile
                .get(a, j)
                .partial_cmp(&final_profile.get(b, j))
                .expect("scores are finite")
                .then(a.cmp(&b))
        });
        // single linkage on a line: break where adjacent sorted values gap
        // by more than tol
        let mut groups: Vec<Vec<usize>> = vec![vec![order[0]]];
        for w in order.windows(2) {
            let gap = final_profile.get(w[1], j) - final_profile.get(w[0], j);
            if gap > tol {
                groups.push(Vec::new());
            }
            groups.last_mut().expect("non-empty").push(w[1]);
        }
        let mut cands: Vec<ConsensusClass> = groups
            .into_iter()
            .map(|mut agents| {
                agents.sort_unstable();
                let values: Vec<f64> = agents.iter().map(|&i| final_profile.get(i, j)).collect();
                let value = values.iter().sum::<f64>() / values.len() as f64;
                let spread = values.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
                    - values.iter().fold(f64::INFINITY, |a, &b| a.min(b));
                ConsensusClass { agents, value, spread }
            })
            .collect();
        cands.sort_by_key(|c| c.agents[0]);
        classes.push(cands);
    }
    ConsensusReport { tol, classes }
}

/// One (candidate, discussion-graph component) check.
#[derive(Clone, Debug)]
pub struct ComponentCheck {
    pub candidate: usize,
    pub agents: Vec<usize>,
    pub spread: f64,
    pub value: f64,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct ComponentConsensusReport {
    pub tol: f64,
    pub min_count: u64,
    pub checks: Vec<ComponentCheck>,
}

impl ComponentConsensusReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ComponentCheck> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("candidate,component,agents,spread,value,pass\n");
        let mut comp_idx = BTreeMap::new();
        for check in &self.checks {
            let idx = comp_idx.entry(check.candidate).or_insert(0usize);
            *idx += 1;
            let agents: Vec<String> = check.agents.iter().map(|a| (a + 1).to_string()).collect();
            let _ = writeln!(
                out,
                "{},{},{},{:e},{:e},{}",
                check.candidate + 1,
                idx,
                agents.join(" "),
                check.spread,
                check.value,
                if check.pass { "pass" } else { "fail" }
            );
        }
        out
    }
}

/// Checks the inclusion direction of the component-consensus claim: agents
/// in the same component of the (count-thresholded) discussion graph must
/// share a final value within `tol`. The converse is not asserted.
pub fn verify_component_consensus(
    trace: &Trace,
    tol: f64,
    min_count: u64,
) -> ComponentConsensusReport {
    let mut checks = Vec::new();
    for j in 0..trace.candidates {
        let graph = discussion_graph(trace, j, min_count);
        for component in connected_components(&graph) {
            let values: Vec<f64> =
                component.iter().map(|&i| trace.final_profile.get(i, j)).collect();
            let hi = values.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            let lo = values.iter().fold(f64::INFINITY, |a, &b| a.min(b));
            let spread = hi - lo;
            checks.push(ComponentCheck {
                candidate: j,
                agents: component,
                spread,
                value: values.iter().sum::<f64>() / values.len() as f64,
                pass: spread <= tol,
            });
        }
    }
    ComponentConsensusReport { tol, min_count, checks }
}

/// Maximum per-column drift of the society mean between the initial and
/// final profiles. Exactly zero in exact arithmetic.
pub fn conservation_audit(trace: &Trace) -> f64 {
    let before = column_average(&trace.initial);
    let after = column_average(&trace.final_profile);
    before
        .averages()
        .iter()
        .zip(after.averages())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// Certificate for consensus on a prefix of the initial aggregate ranking
/// under the top-k selective policy.
#[derive(Clone, Debug)]
pub struct TopKCertificate {
    /// False when the trace's pair graph is not connected at `min_count`;
    /// the guarantee is conditioned on connectivity, so the certificate
    /// does not apply.
    pub applicable: bool,
    /// The policy's k.
    pub k: usize,
    /// Largest depth of the initial aggregate ranking on which the whole
    /// society holds a common final value. Zero signals insufficient
    /// convergence at this horizon, not a violated guarantee.
    pub k_prime: usize,
    /// Minimum common final value over the society-wide consensual
    /// candidates; the finite-horizon proxy for the class threshold.
    pub alpha_hat: Option<f64>,
    /// Candidates with a single consensus class covering the society.
    pub consensual_candidates: Vec<usize>,
    /// Borda ordering of the initial aggregate profile.
    pub aggregate_ranking: Vec<usize>,
    pub diagnostic: Option<String>,
}

/// Certifies consensus on the top aggregate candidates of a trace produced
/// under the top-k subject policy.
pub fn topk_certificate(trace: &Trace, tol: f64, min_count: u64) -> Result<TopKCertificate> {
    let PolicySummary::TopK { k } = trace.policy else {
        return Err(Error::PolicyMismatch(format!(
            "top-k certificate needs a top_k trace, got {:?}",
            trace.policy
        )));
    };

    let xbar0 = column_average(&trace.initial);
    let aggregate_ranking = borda_ranking(&xbar0);
    let n = trace.candidates;

    let pair_graph = trace.pair_graph(min_count);
    if !pair_graph.is_connected() {
        return Ok(TopKCertificate {
            applicable: false,
            k,
            k_prime: 0,
            alpha_hat: None,
            consensual_candidates: Vec::new(),
            aggregate_ranking,
            diagnostic: Some(format!(
                "pair graph not connected at min_count={min_count}; guarantee does not apply"
            )),
        });
    }

    let report = consensus_report(&trace.final_profile, tol);
    let consensual: Vec<usize> = (0..n).filter(|&j| report.is_consensual(j)).collect();

    let mut k_prime = 0;
    for depth in 1..=n {
        let top = top_k_set(xbar0.averages(), depth).expect("depth in range");
        if top.members().iter().all(|&j| report.is_consensual(j)) {
            k_prime = depth;
        } else {
            break;
        }
    }

    let alpha_hat = consensual
        .iter()
        .map(|&j| report.classes[j][0].value)
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.min(v))));

    let diagnostic = (k_prime == 0).then(|| {
        format!(
            "top aggregate candidate {} lacks society-wide consensus at tol={tol:e} \
             (finite-horizon failure, not a theorem violation)",
            aggregate_ranking[0] + 1
        )
    });

    Ok(TopKCertificate {
        applicable: true,
        k,
        k_prime,
        alpha_hat,
        consensual_candidates: consensual,
        aggregate_ranking,
        diagnostic,
    })
}

/// Per-column spread at every recorded profile (initial, snapshots, final),
/// as `(step, candidate, spread)` rows for plotting.
pub fn spread_series(trace: &Trace) -> Vec<(u64, usize, f64)> {
    let mut rows = Vec::new();
    let mut emit = |step: u64, profile: &OpinionProfile| {
        for j in 0..profile.candidates() {
            let col = profile.column(j);
            let hi = col.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            let lo = col.iter().fold(f64::INFINITY, |a, &b| a.min(b));
            rows.push((step, j, hi - lo));
        }
    };
    emit(0, &trace.initial);
    for (&step, profile) in &trace.snapshots {
        emit(step, profile);
    }
    if !trace.snapshots.contains_key(&trace.stopped_at) && trace.stopped_at > 0 {
        emit(trace.stopped_at, &trace.final_profile);
    }
    rows.sort_by_key(|&(step, j, _)| (step, j));
    rows
}

pub fn spread_series_csv(trace: &Trace) -> String {
    let mut out = String::from("step,candidate,spread\n");
    for (step, j, spread) in spread_series(trace) {
        let _ = writeln!(out, "{step},{},{spread:e}", j + 1);
    }
    out
}
