//! Communicating pair processes: i.i.d. gossip draws, deterministic
//! schedules, and a callback hook for state-dependent sources.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::AgentGraph;
use crate::profile::{OpinionProfile, PairEvent};

/// Per-step pair probabilities: a symmetric `m x m` matrix with zero
/// diagonal whose entries sum to 1.
#[derive(Clone, Debug, PartialEq)]
pub struct PairDistribution {
    agents: usize,
    weights: Vec<f64>,
}

impl PairDistribution {
    pub fn new(agents: usize, weights: Vec<f64>) -> Result<Self> {
        if agents < 2 {
            return Err(Error::Parameter("need at least 2 agents".into()));
        }
        if weights.len() != agents * agents {
            return Err(Error::Dimension(format!(
                "expected {}x{} weight matrix",
                agents, agents
            )));
        }
        let mut total = 0.0;
        for i in 0..agents {
            for j in 0..agents {
                let w = weights[i * agents + j];
                if !(w >= 0.0) || !w.is_finite() {
                    return Err(Error::Parameter(format!("weight[{i}][{j}] must be non-negative")));
                }
                if i == j && w != 0.0 {
                    return Err(Error::Parameter("diagonal weights must be zero".into()));
                }
                if weights[i * agents + j] != weights[j * agents + i] {
                    return Err(Error::Parameter("weights must be symmetric".into()));
                }
                total += w;
            }
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Parameter(format!("weights must sum to 1, got {total}")));
        }
        Ok(Self { agents, weights })
    }

    /// Rescales a symmetric non-negative weight matrix so its entries sum
    /// to 1.
    pub fn normalized(agents: usize, raw: Vec<f64>) -> Result<Self> {
        let total: f64 = raw.iter().sum();
        if total <= 0.0 || !total.is_finite() {
            return Err(Error::Parameter("weights must have positive finite sum".into()));
        }
        let weights = raw.iter().map(|w| w / total).collect();
        // Renormalization can leave the sum a few ulps off 1; new() tolerates
        // 1e-12 so this is fine for any sane matrix size.
        Self::new(agents, weights)
    }

    /// Uniform distribution over all pairs of the complete graph `K_m`.
    pub fn uniform_complete(agents: usize) -> Result<Self> {
        if agents < 2 {
            return Err(Error::Parameter("need at least 2 agents".into()));
        }
        let pairs = agents * (agents - 1);
        let w = 1.0 / pairs as f64;
        let mut weights = vec![w; agents * agents];
        for i in 0..agents {
            weights[i * agents + i] = 0.0;
        }
        PairDistribution::normalized(agents, weights)
    }

    /// All mass on a single pair.
    pub fn point_mass(agents: usize, pair: PairEvent) -> Result<Self> {
        if pair.high() >= agents {
            return Err(Error::Dimension(format!("pair {pair:?} out of range for {agents} agents")));
        }
        let mut weights = vec![0.0; agents * agents];
        weights[pair.low() * agents + pair.high()] = 0.5;
        weights[pair.high() * agents + pair.low()] = 0.5;
        Self::new(agents, weights)
    }

    pub fn agents(&self) -> usize {
        self.agents
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.agents + j]
    }

    /// Unordered pairs with positive probability, with the probability mass
    /// of each (both matrix entries combined).
    pub fn support(&self) -> Vec<(PairEvent, f64)> {
        let mut out = Vec::new();
        for a in 0..self.agents {
            for b in a + 1..self.agents {
                let p = self.weight(a, b) + self.weight(b, a);
                if p > 0.0 {
                    out.push((PairEvent::new(a, b).expect("a < b"), p));
                }
            }
        }
        out
    }

    /// Support graph of the distribution. For an i.i.d. source this is the
    /// graph of pairs that communicate infinitely often almost surely.
    pub fn connectivity_graph(&self) -> ConnectivityGraph {
        let graph = AgentGraph::with_edges(self.agents, self.support().into_iter().map(|(p, _)| p));
        ConnectivityGraph { graph, asymptotic: true }
    }
}

/// Draws one pair, pair `{a,b}` with probability `weight[a][b]+weight[b][a]`.
pub fn sample_iid(dist: &PairDistribution, rng: &mut ChaCha8Rng) -> PairEvent {
    let support = dist.support();
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (pair, p) in &support {
        acc += p;
        if u < acc {
            return *pair;
        }
    }
    // u landed in the rounding slack past the last cumulative bound
    support.last().expect("distribution sums to 1").0
}

/// Schedule variant: replay a finite list once, or cycle it forever.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairSchedule {
    events: Vec<PairEvent>,
    cyclic: bool,
}

impl PairSchedule {
    pub fn finite(events: Vec<PairEvent>) -> Result<Self> {
        if events.is_empty() {
            return Err(Error::Parameter("schedule must have at least one event".into()));
        }
        Ok(Self { events, cyclic: false })
    }

    pub fn cyclic(events: Vec<PairEvent>) -> Result<Self> {
        if events.is_empty() {
            return Err(Error::Parameter("cyclic schedule must have period >= 1".into()));
        }
        Ok(Self { events, cyclic: true })
    }

    /// Cyclic ring sweep in index order: `{1,2}, {2,3}, ..., {m-1,m}, {m,1}`
    /// (0-based internally). For `m = 3` this visits all three pairs; for
    /// larger societies it is a connected cycle, not the complete graph.
    pub fn round_robin(agents: usize) -> Result<Self> {
        if agents < 2 {
            return Err(Error::Parameter("need at least 2 agents".into()));
        }
        let mut events: Vec<PairEvent> =
            (0..agents - 1).map(|i| PairEvent::new(i, i + 1).expect("distinct")).collect();
        if agents > 2 {
            events.push(PairEvent::new(agents - 1, 0).expect("distinct"));
        }
        Self::cyclic(events)
    }

    pub fn is_cyclic(&self) -> bool {
        self.cyclic
    }

    pub fn events(&self) -> &[PairEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Largest agent index mentioned, plus one.
    pub fn min_agents(&self) -> usize {
        self.events.iter().map(|e| e.high() + 1).max().unwrap_or(0)
    }

    /// Parses the plain-text schedule format: one pair per line, "i j",
    /// 1-based, with an optional leading "cyclic" header line. Blank lines
    /// and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cyclic = false;
        let mut events = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if events.is_empty() && line == "cyclic" {
                cyclic = true;
                continue;
            }
            let mut parts = line.split_whitespace();
            let parse_agent = |tok: Option<&str>| -> Result<usize> {
                let tok = tok.ok_or_else(|| {
                    Error::Parameter(format!("line {}: expected \"i j\"", lineno + 1))
                })?;
                let idx: usize = tok.parse().map_err(|_| {
                    Error::Parameter(format!("line {}: bad agent index {tok:?}", lineno + 1))
                })?;
                if idx == 0 {
                    return Err(Error::Parameter(format!(
                        "line {}: agent indices are 1-based",
                        lineno + 1
                    )));
                }
                Ok(idx - 1)
            };
            let a = parse_agent(parts.next())?;
            let b = parse_agent(parts.next())?;
            if parts.next().is_some() {
                return Err(Error::Parameter(format!("line {}: trailing tokens", lineno + 1)));
            }
            events.push(PairEvent::new(a, b)?);
        }
        if cyclic {
            Self::cyclic(events)
        } else {
            Self::finite(events)
        }
    }

    /// Pair-occurrence graph of the schedule. For a cyclic schedule every
    /// pair in the cycle recurs forever; for a finite schedule "infinitely
    /// often" is not meaningful and the flag is false.
    pub fn connectivity_graph(&self) -> ConnectivityGraph {
        let agents = self.min_agents();
        let graph = AgentGraph::with_edges(agents, self.events.iter().copied());
        ConnectivityGraph { graph, asymptotic: self.cyclic }
    }
}

/// Event at step `t`: `events[t mod period]` for cyclic schedules, the exact
/// entry for finite ones.
pub fn next_scripted(schedule: &PairSchedule, t: u64) -> Result<PairEvent> {
    if schedule.cyclic {
        Ok(schedule.events[(t % schedule.events.len() as u64) as usize])
    } else if (t as usize) < schedule.events.len() {
        Ok(schedule.events[t as usize])
    } else {
        Err(Error::ScheduleExhausted(t))
    }
}

/// Pair-connectivity graph of a source, with a flag telling whether the
/// edge set is an exact "infinitely often" object (i.i.d. support, cyclic
/// schedule) or a finite-horizon occurrence record.
#[derive(Clone, Debug)]
pub struct ConnectivityGraph {
    pub graph: AgentGraph,
    pub asymptotic: bool,
}

/// A stateful source of communicating pairs. One source per simulation run.
///
/// The current profile is passed so state-adapted sources can condition on
/// it; the built-in sources ignore it.
pub trait PairSource {
    fn next_pair(&mut self, t: u64, profile: &OpinionProfile) -> Result<PairEvent>;
}

/// I.i.d. draws from a fixed distribution, with a precomputed cumulative
/// table.
pub struct IidPairs {
    support: Vec<(PairEvent, f64)>,
    cumulative: Vec<f64>,
    rng: ChaCha8Rng,
}

impl IidPairs {
    pub fn new(dist: &PairDistribution, rng: ChaCha8Rng) -> Result<Self> {
        let support = dist.support();
        if support.is_empty() {
            return Err(Error::Parameter("distribution has empty support".into()));
        }
        let mut acc = 0.0;
        let cumulative = support
            .iter()
            .map(|(_, p)| {
                acc += p;
                acc
            })
            .collect();
        Ok(Self { support, cumulative, rng })
    }
}

impl PairSource for IidPairs {
    fn next_pair(&mut self, _t: u64, _profile: &OpinionProfile) -> Result<PairEvent> {
        let u: f64 = self.rng.random();
        let idx = self.cumulative.partition_point(|&c| c <= u).min(self.support.len() - 1);
        Ok(self.support[idx].0)
    }
}

/// Replays a schedule.
pub struct ScheduledPairs {
    schedule: PairSchedule,
}

impl ScheduledPairs {
    pub fn new(schedule: PairSchedule) -> Self {
        Self { schedule }
    }
}

impl PairSource for ScheduledPairs {
    fn next_pair(&mut self, t: u64, _profile: &OpinionProfile) -> Result<PairEvent> {
        next_scripted(&self.schedule, t)
    }
}

/// Callback hook for adapted pair processes: any closure of `(t, X(t))` is a
/// source. The connectivity graph of such a source must be supplied by the
/// caller when analysis needs it.
impl<F> PairSource for F
where
    F: FnMut(u64, &OpinionProfile) -> Result<PairEvent>,
{
    fn next_pair(&mut self, t: u64, profile: &OpinionProfile) -> Result<PairEvent> {
        self(t, profile)
    }
}
