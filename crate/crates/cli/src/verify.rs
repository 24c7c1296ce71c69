//! Seed-sweep verification suites.

use std::sync::Mutex;

use vote_diffuse::{
    column_average, conservation_audit, run, topk_certificate, verify_component_consensus,
    Error, InitialProfile, OpinionProfile, PairDistribution, PairEvent, PairSchedule,
    PairSourceSpec, Result, SimulationConfig, StopReason, SubjectPolicy,
};

pub const SUITES: &[&str] =
    &["conservation", "gossip-consensus", "topk", "hk-freeze", "disconnected"];

pub struct SuiteOutcome {
    pub suite: String,
    /// (seed, failure description); empty on success.
    pub failures: Vec<(u64, String)>,
    /// Worst observed figure of merit, suite-specific (drift or spread).
    pub worst: f64,
    pub seeds: usize,
}

impl SuiteOutcome {
    pub fn pass(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Runs one named suite over `seeds` seeds, fanned out across worker
/// threads. `VOTE_DIFFUSE_THREADS` caps the parallelism.
pub fn run_suite(suite: &str, seeds: u64) -> Result<SuiteOutcome> {
    let check: fn(u64) -> std::result::Result<f64, String> = match suite {
        "conservation" => conservation_seed,
        "gossip-consensus" => gossip_consensus_seed,
        "topk" => topk_seed,
        "hk-freeze" => hk_freeze_seed,
        "disconnected" => disconnected_seed,
        other => {
            return Err(Error::Parameter(format!(
                "unknown suite {other:?}; expected one of {}",
                SUITES.join(", ")
            )))
        }
    };
    if seeds == 0 {
        return Err(Error::Parameter("seed count must be positive".into()));
    }

    let threads = thread_cap(seeds as usize);
    let next = std::sync::atomic::AtomicU64::new(0);
    let results: Mutex<Vec<(u64, std::result::Result<f64, String>)>> = Mutex::new(Vec::new());
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let seed = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if seed >= seeds {
                    break;
                }
                let outcome = check(seed);
                results.lock().expect("no panics hold the lock").push((seed, outcome));
            });
        }
    });

    let mut results = results.into_inner().expect("threads joined");
    results.sort_by_key(|&(seed, _)| seed);
    let mut failures = Vec::new();
    let mut worst = 0.0_f64;
    for (seed, outcome) in results {
        match outcome {
            Ok(figure) => worst = worst.max(figure),
            Err(msg) => failures.push((seed, msg)),
        }
    }
    Ok(SuiteOutcome { suite: suite.to_string(), failures, worst, seeds: seeds as usize })
}

fn thread_cap(jobs: usize) -> usize {
    let available = std::thread::available_parallelism().map_or(1, |n| n.get());
    let cap = std::env::var("VOTE_DIFFUSE_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or(available);
    cap.min(jobs).max(1)
}

/// m=20, n=10, 10^6 steps of uniform gossip: per-column mean drift.
fn conservation_seed(seed: u64) -> std::result::Result<f64, String> {
    let config = SimulationConfig {
        agents: 20,
        candidates: 10,
        initial: InitialProfile::Uniform { seed: seed.wrapping_add(1000) },
        pairs: PairSourceSpec::Distribution(
            PairDistribution::uniform_complete(20).expect("20 agents"),
        ),
        subjects: SubjectPolicy::Binomial { p: 0.5 },
        max_steps: 1_000_000,
        seed,
        snapshot_every: 1_000_000,
        convergence_tol: 1e-300,
        convergence_window: u64::MAX,
    };
    let trace = run(&config).map_err(|e| e.to_string())?;
    let drift = conservation_audit(&trace);
    if drift <= 1e-10 {
        Ok(drift)
    } else {
        Err(format!("mean drift {drift:e} exceeds 1e-10"))
    }
}

/// m=10 uniform full-subject gossip: final spread and limit value.
fn gossip_consensus_seed(seed: u64) -> std::result::Result<f64, String> {
    let m = 10;
    let config = SimulationConfig {
        agents: m,
        candidates: 2,
        initial: InitialProfile::Gaussian { seed: seed.wrapping_add(2000) },
        pairs: PairSourceSpec::Distribution(
            PairDistribution::uniform_complete(m).expect("agents"),
        ),
        subjects: SubjectPolicy::Full,
        max_steps: 100_000 * m as u64,
        seed,
        snapshot_every: 100_000,
        convergence_tol: 1e-10,
        convergence_window: 1_000,
    };
    let trace = run(&config).map_err(|e| e.to_string())?;
    let means = column_average(&trace.initial);
    let mut worst = 0.0_f64;
    for j in 0..trace.candidates {
        let col = trace.final_profile.column(j);
        let hi = col.iter().fold(f64::MIN, |a, &b| a.max(b));
        let lo = col.iter().fold(f64::MAX, |a, &b| a.min(b));
        if hi - lo > 1e-8 {
            return Err(format!("column {} spread {:e} exceeds 1e-8", j + 1, hi - lo));
        }
        let err = col
            .iter()
            .map(|v| (v - means.averages()[j]).abs())
            .fold(0.0_f64, f64::max);
        if err > 1e-8 {
            return Err(format!("column {} limit misses initial mean by {err:e}", j + 1));
        }
        worst = worst.max(hi - lo).max(err);
    }
    Ok(worst)
}

/// m=5, n=4, k=2 top-k selective gossip run to quiescence: certificate
/// depth and top-candidate limit value.
fn topk_seed(seed: u64) -> std::result::Result<f64, String> {
    let config = SimulationConfig {
        agents: 5,
        candidates: 4,
        initial: InitialProfile::Gaussian { seed: seed.wrapping_add(3000) },
        pairs: PairSourceSpec::Distribution(
            PairDistribution::uniform_complete(5).expect("agents"),
        ),
        subjects: SubjectPolicy::TopK { k: 2 },
        max_steps: 2_000_000,
        seed,
        snapshot_every: 1_000_000,
        convergence_tol: 1e-12,
        convergence_window: 10_000,
    };
    let trace = run(&config).map_err(|e| e.to_string())?;
    if trace.stop_reason != StopReason::Converged {
        return Err(format!("run did not reach quiescence ({:?})", trace.stop_reason));
    }
    let cert = topk_certificate(&trace, 1e-8, 10).map_err(|e| e.to_string())?;
    if !cert.applicable {
        return Err("pair graph not connected".into());
    }
    if cert.k_prime < 1 {
        return Err(cert.diagnostic.unwrap_or_else(|| "k' = 0".into()));
    }
    let top = cert.aggregate_ranking[0];
    let expected = column_average(&trace.initial).averages()[top];
    let err = (0..trace.agents)
        .map(|i| (trace.final_profile.get(i, top) - expected).abs())
        .fold(0.0_f64, f64::max);
    if err > 1e-8 {
        return Err(format!("top candidate limit misses initial mean by {err:e}"));
    }
    Ok(err)
}

/// m=2, eps=0.5, X(0)=[[0],[1]]: the profile must never move.
fn hk_freeze_seed(seed: u64) -> std::result::Result<f64, String> {
    let config = SimulationConfig {
        agents: 2,
        candidates: 1,
        initial: InitialProfile::Matrix(
            OpinionProfile::from_rows(&[vec![0.0], vec![1.0]]).expect("2x1"),
        ),
        pairs: PairSourceSpec::Distribution(
            PairDistribution::uniform_complete(2).expect("agents"),
        ),
        subjects: SubjectPolicy::Hk { eps: 0.5 },
        max_steps: 10_000,
        seed,
        snapshot_every: 10_000,
        convergence_tol: 1e-300,
        convergence_window: u64::MAX,
    };
    let trace = run(&config).map_err(|e| e.to_string())?;
    if trace.events.iter().any(|ev| !ev.subjects.is_empty()) {
        return Err("a step had a non-empty subject set".into());
    }
    if trace.final_profile != trace.initial {
        return Err("profile moved".into());
    }
    let frozen = trace
        .replay_with(|ev, x| {
            assert_eq!(x, &trace.initial, "profile moved at t={}", ev.t);
        })
        .map_err(|e| e.to_string())?;
    if frozen != trace.initial {
        return Err("replay moved the profile".into());
    }
    Ok(0.0)
}

/// The cyclic two-block schedule used by the disconnected suite: all
/// intra-block pairs of `{1..5}` and `{6..10}`, never a cross edge.
pub fn two_block_schedule() -> PairSchedule {
    let mut events = Vec::new();
    for block in [0usize, 5] {
        for a in block..block + 5 {
            for b in a + 1..block + 5 {
                events.push(PairEvent::new(a, b).expect("distinct"));
            }
        }
    }
    PairSchedule::cyclic(events).expect("non-empty")
}

/// Two isolated 5-agent blocks under full gossip: per-block consensus on
/// the block's initial mean.
fn disconnected_seed(seed: u64) -> std::result::Result<f64, String> {
    let config = SimulationConfig {
        agents: 10,
        candidates: 2,
        initial: InitialProfile::Uniform { seed: seed.wrapping_add(4000) },
        pairs: PairSourceSpec::Schedule(two_block_schedule()),
        subjects: SubjectPolicy::Full,
        max_steps: 500_000,
        seed,
        snapshot_every: 100_000,
        convergence_tol: 1e-300,
        convergence_window: u64::MAX,
    };
    let trace = run(&config).map_err(|e| e.to_string())?;
    let report = verify_component_consensus(&trace, 1e-8, 10);
    if !report.pass() {
        let failing: Vec<String> = report
            .failures()
            .map(|c| format!("candidate {} component {:?} spread {:e}", c.candidate + 1, c.agents, c.spread))
            .collect();
        return Err(failing.join("; "));
    }
    let mut worst = 0.0_f64;
    for (block, agents) in [(0, 0..5), (1, 5..10)] {
        for j in 0..trace.candidates {
            let block_mean = agents
                .clone()
                .map(|i| trace.initial.get(i, j))
                .sum::<f64>()
                / 5.0;
            let err = agents
                .clone()
                .map(|i| (trace.final_profile.get(i, j) - block_mean).abs())
                .fold(0.0_f64, f64::max);
            if err > 1e-8 {
                return Err(format!(
                    "block {} candidate {} misses its initial mean by {err:e}",
                    block + 1,
                    j + 1
                ));
            }
            worst = worst.max(err);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_suite_is_an_error() {
        assert!(run_suite("nope", 1).is_err());
    }

    #[test]
    fn hk_freeze_suite_passes() {
        let outcome = run_suite("hk-freeze", 3).unwrap();
        assert!(outcome.pass());
        assert_eq!(outcome.worst, 0.0);
    }

    #[test]
    fn two_block_schedule_has_no_cross_edges() {
        let sched = two_block_schedule();
        assert_eq!(sched.len(), 20);
        for e in sched.events() {
            assert_eq!(e.low() / 5, e.high() / 5, "cross-block edge {e:?}");
        }
    }
}
