//! The step loop: draw a pair, select subjects, average, record.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::pairs::{IidPairs, PairDistribution, PairSchedule, PairSource, ScheduledPairs};
use crate::profile::{apply_step, OpinionProfile, PairEvent, SubjectSet};
use crate::subjects::SubjectPolicy;

/// How `X(0)` is produced. Generators are seeded separately from the
/// dynamics seed so the same initial profile can be reused across policies.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialProfile {
    Matrix(OpinionProfile),
    /// Entries i.i.d. uniform on `[0,1)`.
    Uniform { seed: u64 },
    /// Entries i.i.d. standard gaussian.
    Gaussian { seed: u64 },
}

impl InitialProfile {
    pub fn materialize(&self, agents: usize, candidates: usize) -> Result<OpinionProfile> {
        match self {
            InitialProfile::Matrix(x) => {
                if x.agents() != agents || x.candidates() != candidates {
                    return Err(Error::Config(format!(
                        "initial profile is {}x{}, config says {}x{}",
                        x.agents(),
                        x.candidates(),
                        agents,
                        candidates
                    )));
                }
                Ok(x.clone())
            }
            InitialProfile::Uniform { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let scores = (0..agents * candidates).map(|_| rng.random::<f64>()).collect();
                OpinionProfile::new(agents, candidates, scores)
            }
            InitialProfile::Gaussian { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let scores = (0..agents * candidates)
                    .map(|_| StandardNormal.sample(&mut rng))
                    .collect();
                OpinionProfile::new(agents, candidates, scores)
            }
        }
    }
}

/// Serializable pair sources. Callback sources go through
/// [`run_with_source`] instead.
#[derive(Clone, Debug, PartialEq)]
pub enum PairSourceSpec {
    Distribution(PairDistribution),
    Schedule(PairSchedule),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationConfig {
    pub agents: usize,
    pub candidates: usize,
    pub initial: InitialProfile,
    pub pairs: PairSourceSpec,
    pub subjects: SubjectPolicy,
    pub max_steps: u64,
    pub seed: u64,
    pub snapshot_every: u64,
    pub convergence_tol: f64,
    pub convergence_window: u64,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.agents < 2 {
            return Err(Error::Config("m must be at least 2".into()));
        }
        if self.candidates < 1 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        if self.max_steps < 1 {
            return Err(Error::Config("max_steps must be at least 1".into()));
        }
        if self.snapshot_every < 1 {
            return Err(Error::Config("snapshot_every must be at least 1".into()));
        }
        if !(self.convergence_tol > 0.0) {
            return Err(Error::Config("convergence_tol must be positive".into()));
        }
        if self.convergence_window < 1 {
            return Err(Error::Config("convergence_window must be at least 1".into()));
        }
        self.subjects.validate(self.candidates).map_err(|e| Error::Config(e.to_string()))?;
        match &self.pairs {
            PairSourceSpec::Distribution(d) => {
                if d.agents() != self.agents {
                    return Err(Error::Config(format!(
                        "pair distribution is over {} agents, config says {}",
                        d.agents(),
                        self.agents
                    )));
                }
            }
            PairSourceSpec::Schedule(s) => {
                if s.min_agents() > self.agents {
                    return Err(Error::Config(format!(
                        "schedule mentions agent {}, config has only {}",
                        s.min_agents(),
                        self.agents
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Compact echo of the subject policy kind, carried in traces so analyses
/// can check which regime produced them.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PolicySummary {
    Full,
    TopK { k: usize },
    Binomial { p: f64 },
    Hk { eps: f64 },
    Scripted,
}

impl From<&SubjectPolicy> for PolicySummary {
    fn from(policy: &SubjectPolicy) -> Self {
        match policy {
            SubjectPolicy::Full => PolicySummary::Full,
            SubjectPolicy::TopK { k } => PolicySummary::TopK { k: *k },
            SubjectPolicy::Binomial { p } => PolicySummary::Binomial { p: *p },
            SubjectPolicy::Hk { eps } => PolicySummary::Hk { eps: *eps },
            SubjectPolicy::Scripted(_) => PolicySummary::Scripted,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxSteps,
    ScheduleExhausted,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub t: u64,
    pub pair: PairEvent,
    pub subjects: SubjectSet,
}

/// Record of one run: the config echo needed for replay, the dense event
/// log, periodic snapshots, and the final profile.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub agents: usize,
    pub candidates: usize,
    pub seed: u64,
    pub max_steps: u64,
    pub snapshot_every: u64,
    pub convergence_tol: f64,
    pub convergence_window: u64,
    pub policy: PolicySummary,
    pub initial: OpinionProfile,
    pub events: Vec<StepRecord>,
    pub snapshots: BTreeMap<u64, OpinionProfile>,
    pub final_profile: OpinionProfile,
    pub stopped_at: u64,
    pub stop_reason: StopReason,
}

impl Trace {
    /// Graph of pairs that communicated at least `min_count` times.
    pub fn pair_graph(&self, min_count: u64) -> crate::graph::AgentGraph {
        let mut counts: BTreeMap<PairEvent, u64> = BTreeMap::new();
        for ev in &self.events {
            *counts.entry(ev.pair).or_default() += 1;
        }
        crate::graph::AgentGraph::with_edges(
            self.agents,
            counts.into_iter().filter(|&(_, c)| c >= min_count).map(|(p, _)| p),
        )
    }

    /// Re-applies the event log, handing each post-step profile to the
    /// visitor. Returns the profile after the last event.
    pub fn replay_with(
        &self,
        mut visit: impl FnMut(&StepRecord, &OpinionProfile),
    ) -> Result<OpinionProfile> {
        let mut x = self.initial.clone();
        for ev in &self.events {
            x.apply_step_mut(ev.pair, &ev.subjects)
                .map_err(|e| Error::CorruptTrace(format!("event at t={}: {e}", ev.t)))?;
            visit(ev, &x);
        }
        Ok(x)
    }
}

/// Re-applies all recorded events to the recorded initial profile. The
/// result must equal `final_profile` bit-for-bit for traces produced by
/// [`run`].
pub fn replay(trace: &Trace) -> Result<OpinionProfile> {
    trace.replay_with(|_, _| {})
}

/// Finite-horizon convergence proxy: the newest profile's per-column spread
/// within every component is at most `tol`, and the profile moved by at
/// most `tol` in max-norm across the supplied history window. Without a
/// partition the whole agent set is one component.
pub fn has_converged(
    history: &[OpinionProfile],
    tol: f64,
    components: Option<&[Vec<usize>]>,
) -> bool {
    let Some(last) = history.last() else { return false };
    let whole: Vec<Vec<usize>>;
    let components = match components {
        Some(c) => c,
        None => {
            whole = vec![(0..last.agents()).collect()];
            &whole
        }
    };
    for j in 0..last.candidates() {
        for component in components {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for &i in component {
                let v = last.get(i, j);
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if !component.is_empty() && hi - lo > tol {
                return false;
            }
        }
    }
    for earlier in &history[..history.len() - 1] {
        let moved = earlier
            .scores()
            .iter()
            .zip(last.scores())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0_f64, f64::max);
        if moved > tol {
            return false;
        }
    }
    true
}

/// Runs a configured simulation. Fully determined by the config (including
/// its seeds).
pub fn run(config: &SimulationConfig) -> Result<Trace> {
    config.validate()?;
    match &config.pairs {
        PairSourceSpec::Distribution(d) => {
            let mut source = IidPairs::new(d, dynamics_rng(config.seed, PAIR_STREAM))?;
            run_with_source(config, &mut source)
        }
        PairSourceSpec::Schedule(s) => {
            let mut source = ScheduledPairs::new(s.clone());
            run_with_source(config, &mut source)
        }
    }
}

// Distinct ChaCha streams keep pair draws and subject draws decoupled, so
// swapping one process does not perturb the other.
const PAIR_STREAM: u64 = 1;
const SUBJECT_STREAM: u64 = 2;

fn dynamics_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Runs the step loop against a caller-supplied pair source. This is the
/// hook for state-adapted pair processes; `config.pairs` is ignored.
pub fn run_with_source(
    config: &SimulationConfig,
    source: &mut dyn PairSource,
) -> Result<Trace> {
    config.validate()?;
    let initial = config.initial.materialize(config.agents, config.candidates)?;
    let mut subject_rng = dynamics_rng(config.seed, SUBJECT_STREAM);

    let m = config.agents;
    let mut x = initial.clone();
    let mut events: Vec<StepRecord> = Vec::new();
    let mut snapshots = BTreeMap::new();

    let mut quiet_steps: u64 = 0;
    let mut stop_reason = StopReason::MaxSteps;
    let mut stopped_at = config.max_steps;

    for t in 0..config.max_steps {
        let pair = match source.next_pair(t, &x) {
            Ok(p) => p,
            Err(Error::ScheduleExhausted(_)) => {
                stop_reason = StopReason::ScheduleExhausted;
                stopped_at = t;
                break;
            }
            Err(e) => return Err(e),
        };
        if pair.high() >= m {
            return Err(Error::Dimension(format!("pair {pair:?} out of range for {m} agents")));
        }
        let subjects = match config.subjects.select(t, &x, pair, &mut subject_rng) {
            Ok(s) => s,
            Err(Error::ScheduleExhausted(_)) => {
                stop_reason = StopReason::ScheduleExhausted;
                stopped_at = t;
                break;
            }
            Err(e) => return Err(e),
        };

        let (a, b) = (pair.low(), pair.high());
        let mut step_delta = 0.0_f64;
        for &j in subjects.members() {
            let va = x.get(a, j);
            let vb = x.get(b, j);
            let mid = (va + vb) / 2.0;
            step_delta = step_delta.max((mid - va).abs()).max((mid - vb).abs());
            x.set(a, j, mid);
            x.set(b, j, mid);
        }

        events.push(StepRecord { t, pair, subjects });
        if (t + 1) % config.snapshot_every == 0 {
            snapshots.insert(t + 1, x.clone());
        }

        // Quiescence-only stopping: a global spread condition would never
        // fire under top-k or bounded-confidence selection, where lasting
        // cross-agent disagreement is legitimate. Component-aware spread
        // checks live in `has_converged` and the analysis module.
        if step_delta <= config.convergence_tol {
            quiet_steps += 1;
        } else {
            quiet_steps = 0;
        }
        if quiet_steps >= config.convergence_window {
            stop_reason = StopReason::Converged;
            stopped_at = t + 1;
            break;
        }
    }

    Ok(Trace {
        agents: m,
        candidates: config.candidates,
        seed: config.seed,
        max_steps: config.max_steps,
        snapshot_every: config.snapshot_every,
        convergence_tol: config.convergence_tol,
        convergence_window: config.convergence_window,
        policy: PolicySummary::from(&config.subjects),
        initial,
        events,
        snapshots,
        final_profile: x,
        stopped_at,
        stop_reason,
    })
}

/// Reference single-step used by replay-oriented tests; the engine's
/// in-place loop must agree with folding this.
pub fn step_once(
    profile: &OpinionProfile,
    pair: PairEvent,
    subjects: &SubjectSet,
) -> Result<OpinionProfile> {
    apply_step(profile, pair, subjects)
}
