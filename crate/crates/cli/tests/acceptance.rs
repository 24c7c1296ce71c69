//! Acceptance suite: one test per release criterion. Each test prints a
//! single `criterion N (...): PASS` line (visible with `--nocapture`);
//! a failed assertion is the corresponding FAIL.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vote_diffuse::{
    apply_step, column_average, conservation_audit, mixing_matrix, replay, run,
    topk_certificate, verify_component_consensus, InitialProfile, OpinionProfile, PairDistribution,
    PairEvent, PairSchedule, PairSourceSpec, SimulationConfig, StopReason, SubjectPolicy,
    SubjectSet, Trace,
};
use vote_diffuse_cli::verify::two_block_schedule;

fn pair(a: usize, b: usize) -> PairEvent {
    PairEvent::new(a, b).unwrap()
}

fn max_abs_diff(a: &OpinionProfile, b: &OpinionProfile) -> f64 {
    a.scores()
        .iter()
        .zip(b.scores())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0_f64, f64::max)
}

/// Criterion 1: Per-column means drift at most 1e-10 over 10^6 steps (m=20, n=10),
/// in under five seconds.
#[test]
fn criterion_1_conservation() {
    let config = SimulationConfig {
        agents: 20,
        candidates: 10,
        initial: InitialProfile::Uniform { seed: 100 },
        pairs: PairSourceSpec::Distribution(PairDistribution::uniform_complete(20).unwrap()),
        subjects: SubjectPolicy::Binomial { p: 0.5 },
        max_steps: 1_000_000,
        seed: 1,
        snapshot_every: 100_000,
        convergence_tol: 1e-300,
        convergence_window: u64::MAX,
    };
    let start = Instant::now();
    let trace = run(&config).unwrap();
    let elapsed = start.elapsed();
    assert_eq!(trace.events.len(), 1_000_000);
    let drift = conservation_audit(&trace);
    assert!(drift <= 1e-10, "mean drift {drift:e} exceeds 1e-10");
    assert!(elapsed.as_secs_f64() < 5.0, "10^6 steps took {elapsed:?}");
    println!("criterion 1 (conservation): PASS (drift {drift:e}, {elapsed:?})");
}

/// Criterion 2: 10^4 randomized mixing-matrix checks: rows/columns sum to exactly 1,
/// entries non-negative, diagonal at least 1/2; matrix-column update agrees
/// with the scalar update to 1e-15.
#[test]
fn criterion_2_doubly_stochastic() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..10_000 {
        let m = rng.random_range(2..=8);
        let n = rng.random_range(1..=6);
        let a = rng.random_range(0..m);
        let b = (a + rng.random_range(1..m)) % m;
        let p = pair(a.min(b), a.max(b));
        let subjects = SubjectSet::new((0..n).filter(|_| rng.random::<bool>()));
        let j = rng.random_range(0..n);

        let w = mixing_matrix(p, &subjects, j, m).unwrap();
        for i in 0..m {
            let row: f64 = w[i].iter().sum();
            let col: f64 = (0..m).map(|l| w[l][i]).sum();
            assert_eq!(row, 1.0, "row {i} sums to {row}");
            assert_eq!(col, 1.0, "col {i} sums to {col}");
            assert!(w[i][i] >= 0.5, "diagonal {i} is {}", w[i][i]);
            assert!(w[i].iter().all(|&e| e >= 0.0), "negative entry in row {i}");
        }

        let scores: Vec<f64> = (0..m * n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let x = OpinionProfile::new(m, n, scores).unwrap();
        let y = apply_step(&x, p, &subjects).unwrap();
        let col = x.column(j);
        for i in 0..m {
            let via_matrix: f64 = (0..m).map(|l| w[i][l] * col[l]).sum();
            let err = (via_matrix - y.get(i, j)).abs();
            assert!(err <= 1e-15, "matrix/scalar disagreement {err:e} at agent {i}");
        }
    }
    println!("criterion 2 (doubly stochastic mixing): PASS (10^4 checks)");
}

/// Criterion 3: Full-subject uniform gossip reaches consensus on the initial column
/// means: m in {4, 10}, 10 seeds, spread and mean error at most 1e-8
/// within 10^5 * m steps.
#[test]
fn criterion_3_gossip_consensus() {
    for m in [4usize, 10] {
        for seed in 0..10u64 {
            let config = SimulationConfig {
                agents: m,
                candidates: 3,
                initial: InitialProfile::Gaussian { seed: seed.wrapping_add(300) },
                pairs: PairSourceSpec::Distribution(
                    PairDistribution::uniform_complete(m).unwrap(),
                ),
                subjects: SubjectPolicy::Full,
                max_steps: 100_000 * m as u64,
                seed,
                snapshot_every: 100_000,
                convergence_tol: 1e-10,
                convergence_window: 1_000,
            };
            let trace = run(&config).unwrap();
            let means = column_average(&trace.initial);
            for j in 0..3 {
                let col = trace.final_profile.column(j);
                let hi = col.iter().cloned().fold(f64::MIN, f64::max);
                let lo = col.iter().cloned().fold(f64::MAX, f64::min);
                assert!(
                    hi - lo <= 1e-8,
                    "m={m} seed={seed} column {j}: spread {:e}",
                    hi - lo
                );
                let err = col
                    .iter()
                    .map(|v| (v - means.averages()[j]).abs())
                    .fold(0.0_f64, f64::max);
                assert!(err <= 1e-8, "m={m} seed={seed} column {j}: mean error {err:e}");
            }
        }
    }
    println!("criterion 3 (gossip consensus): PASS (m in {{4,10}}, 10 seeds each)");
}

/// Criterion 4: Two isolated 5-agent blocks under full gossip: component-wise
/// consensus holds, and each block's value matches an independent
/// single-block run (and hence the block's initial mean) within 1e-8.
#[test]
fn criterion_4_component_consensus() {
    let config = SimulationConfig {
        agents: 10,
        candidates: 2,
        initial: InitialProfile::Uniform { seed: 400 },
        pairs: PairSourceSpec::Schedule(two_block_schedule()),
        subjects: SubjectPolicy::Full,
        max_steps: 500_000,
        seed: 4,
        snapshot_every: 100_000,
        convergence_tol: 1e-300,
        convergence_window: u64::MAX,
    };
    let trace = run(&config).unwrap();
    let report = verify_component_consensus(&trace, 1e-8, 10);
    assert!(report.pass(), "component consensus failed");

    // oracle: rerun each block alone on its own cyclic intra-block schedule
    for (block, base) in [(0usize, 0usize), (1, 5)] {
        let rows: Vec<Vec<f64>> =
            (base..base + 5).map(|i| trace.initial.row(i).to_vec()).collect();
        let mut events = Vec::new();
        for a in 0..5 {
            for b in a + 1..5 {
                events.push(pair(a, b));
            }
        }
        let oracle = run(&SimulationConfig {
            agents: 5,
            candidates: 2,
            initial: InitialProfile::Matrix(OpinionProfile::from_rows(&rows).unwrap()),
            pairs: PairSourceSpec::Schedule(PairSchedule::cyclic(events).unwrap()),
            subjects: SubjectPolicy::Full,
            max_steps: 100_000,
            seed: 0,
            snapshot_every: 100_000,
            convergence_tol: 1e-300,
            convergence_window: u64::MAX,
        })
        .unwrap();
        for j in 0..2 {
            let expected = oracle.final_profile.get(0, j);
            for i in base..base + 5 {
                let err = (trace.final_profile.get(i, j) - expected).abs();
                assert!(
                    err <= 1e-8,
                    "block {block} candidate {j}: differs from oracle by {err:e}"
                );
            }
        }
    }
    println!("criterion 4 (component consensus): PASS (two-block oracle agreement)");
}

/// Criterion 5: Top-k selective gossip (m=5, n=4, k=2), 20 seeds run to quiescence:
/// the certificate yields k' >= 1 and the top aggregate candidate's common
/// value equals its initial mean within 1e-8.
#[test]
fn criterion_5_topk_certification() {
    for seed in 0..20u64 {
        let config = SimulationConfig {
            agents: 5,
            candidates: 4,
            initial: InitialProfile::Gaussian { seed: seed.wrapping_add(3000) },
            pairs: PairSourceSpec::Distribution(PairDistribution::uniform_complete(5).unwrap()),
            subjects: SubjectPolicy::TopK { k: 2 },
            max_steps: 2_000_000,
            seed,
            snapshot_every: 1_000_000,
            convergence_tol: 1e-12,
            convergence_window: 10_000,
        };
        let trace = run(&config).unwrap();
        assert_eq!(
            trace.stop_reason,
            StopReason::Converged,
            "seed {seed} did not reach quiescence"
        );

        // the guarantee presumes distinct initial column means
        let means = column_average(&trace.initial).averages().to_vec();
        for a in 0..4 {
            for b in a + 1..4 {
                assert_ne!(means[a], means[b], "seed {seed}: tied column means");
            }
        }

        let cert = topk_certificate(&trace, 1e-8, 10).unwrap();
        assert!(cert.applicable, "seed {seed}: pair graph not connected");
        assert!(cert.k_prime >= 1, "seed {seed}: k' = 0 ({:?})", cert.diagnostic);
        let top = cert.aggregate_ranking[0];
        for i in 0..5 {
            let err = (trace.final_profile.get(i, top) - means[top]).abs();
            assert!(err <= 1e-8, "seed {seed} agent {i}: top value off by {err:e}");
        }
    }
    println!("criterion 5 (top-k' certification): PASS (20 seeds)");
}

/// Criterion 6: Convergence across all four subject policies and three pair sources
/// (12 combinations, m=8, n=5, 10^6 steps): either the profile moves at
/// most 1e-6 in max-norm over the final 10^4 steps, or the per-column
/// envelope is exactly monotone throughout.
#[test]
fn criterion_6_convergence_universality() {
    let policies: Vec<(&str, SubjectPolicy)> = vec![
        ("full", SubjectPolicy::Full),
        ("top_k", SubjectPolicy::TopK { k: 2 }),
        ("binomial", SubjectPolicy::Binomial { p: 0.4 }),
        ("hk", SubjectPolicy::Hk { eps: 0.3 }),
    ];
    // adversarial: a fixed skewed cycle that hammers {1,2} and only
    // occasionally touches the rest of the ring
    let adversarial = PairSchedule::cyclic(vec![
        pair(0, 1),
        pair(0, 1),
        pair(0, 1),
        pair(1, 2),
        pair(0, 1),
        pair(2, 3),
        pair(0, 1),
        pair(3, 4),
        pair(4, 5),
        pair(0, 1),
        pair(5, 6),
        pair(6, 7),
        pair(0, 7),
    ])
    .unwrap();
    let sources: Vec<(&str, PairSourceSpec)> = vec![
        (
            "iid",
            PairSourceSpec::Distribution(PairDistribution::uniform_complete(8).unwrap()),
        ),
        ("round_robin", PairSourceSpec::Schedule(PairSchedule::round_robin(8).unwrap())),
        ("adversarial", PairSourceSpec::Schedule(adversarial)),
    ];

    for (pname, policy) in &policies {
        for (sname, source) in &sources {
            let config = SimulationConfig {
                agents: 8,
                candidates: 5,
                initial: InitialProfile::Gaussian { seed: 600 },
                pairs: source.clone(),
                subjects: policy.clone(),
                max_steps: 1_000_000,
                seed: 6,
                snapshot_every: 1_000_000,
                convergence_tol: 1e-300,
                convergence_window: u64::MAX,
            };
            let trace = run(&config).unwrap();
            assert_eq!(trace.events.len(), 1_000_000, "{pname}/{sname}: truncated run");

            let (quiesce, monotone) = tail_and_envelope(&trace, 10_000);
            assert!(
                quiesce <= 1e-6 || monotone,
                "{pname}/{sname}: tail movement {quiesce:e} and envelope not monotone"
            );
        }
    }
    println!("criterion 6 (convergence universality): PASS (12 combinations)");
}

/// Returns the max-norm profile movement over the last `tail` events and
/// whether the per-column envelope was monotone (max non-increasing, min
/// non-decreasing) at every step.
fn tail_and_envelope(trace: &Trace, tail: usize) -> (f64, bool) {
    let n = trace.candidates;
    let mut hi = vec![f64::NEG_INFINITY; n];
    let mut lo = vec![f64::INFINITY; n];
    for j in 0..n {
        for &v in trace.initial.column(j).iter() {
            hi[j] = hi[j].max(v);
            lo[j] = lo[j].min(v);
        }
    }
    let mut monotone = true;
    let mut at_tail: Option<OpinionProfile> = None;
    let tail_index = trace.events.len().saturating_sub(tail);
    let mut step = 0usize;
    let last = trace
        .replay_with(|_, x| {
            for j in 0..n {
                let col = x.column(j);
                let new_hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let new_lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
                if new_hi > hi[j] || new_lo < lo[j] {
                    monotone = false;
                }
                hi[j] = new_hi;
                lo[j] = new_lo;
            }
            step += 1;
            if step == tail_index {
                at_tail = Some(x.clone());
            }
        })
        .unwrap();
    let reference = at_tail.unwrap_or_else(|| trace.initial.clone());
    (max_abs_diff(&last, &reference), monotone)
}

/// Criterion 7: Bounded-confidence freeze: m=2, X(0)=[[0],[1]], eps=0.5 leaves the
/// profile bit-identical for 10^4 steps.
#[test]
fn criterion_7_hk_freeze() {
    let initial = OpinionProfile::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
    let config = SimulationConfig {
        agents: 2,
        candidates: 1,
        initial: InitialProfile::Matrix(initial.clone()),
        pairs: PairSourceSpec::Distribution(PairDistribution::uniform_complete(2).unwrap()),
        subjects: SubjectPolicy::Hk { eps: 0.5 },
        max_steps: 10_000,
        seed: 7,
        snapshot_every: 10_000,
        convergence_tol: 1e-300,
        convergence_window: u64::MAX,
    };
    let trace = run(&config).unwrap();
    assert_eq!(trace.events.len(), 10_000);
    assert!(trace.events.iter().all(|ev| ev.subjects.is_empty()));
    trace
        .replay_with(|ev, x| assert_eq!(x, &initial, "profile moved at t={}", ev.t))
        .unwrap();
    assert_eq!(trace.final_profile, initial);
    assert_eq!(replay(&trace).unwrap(), initial);
    println!("criterion 7 (hk freeze): PASS (bit-identical over 10^4 steps)");
}

/// Criterion 8: Identical (config, seed) gives byte-identical trace files across two
/// CLI invocations.
#[test]
fn criterion_8_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("run.toml");
    std::fs::write(
        &config_path,
        r#"
m = 6
n = 3
seed = 11
max_steps = 5000
snapshot_every = 1000

[init]
kind = "gaussian"

[pairs]
kind = "uniform"

[subjects]
kind = "binomial"
p = 0.7
"#,
    )
    .unwrap();

    let mut outputs = Vec::new();
    for name in ["a.trace", "b.trace"] {
        let out = dir.path().join(name);
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_vote-diffuse"))
            .args(["simulate", "--config"])
            .arg(&config_path)
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success(), "simulate exited with {status}");
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert!(!outputs[0].is_empty());
    assert_eq!(outputs[0], outputs[1], "trace files differ between invocations");
    println!("criterion 8 (determinism): PASS (byte-identical traces)");
}
