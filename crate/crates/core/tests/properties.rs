//! Property tests for the structural invariants of the averaging dynamics.

use proptest::prelude::*;

use vote_diffuse::{
    apply_step, borda_ranking, column_average, mixing_matrix, top_k_set, AggregateProfile,
    OpinionProfile, PairEvent, SubjectSet,
};

fn score() -> impl Strategy<Value = f64> {
    -100.0..100.0f64
}

#[derive(Debug, Clone)]
struct StepCase {
    profile: OpinionProfile,
    pair: PairEvent,
    subjects: SubjectSet,
}

fn step_case() -> impl Strategy<Value = StepCase> {
    (2usize..8, 1usize..6)
        .prop_flat_map(|(m, n)| {
            (
                proptest::collection::vec(score(), m * n),
                (0..m, 0..m - 1),
                proptest::collection::vec(any::<bool>(), n),
                Just((m, n)),
            )
        })
        .prop_map(|(scores, (a, b_raw), mask, (m, n))| {
            let b = if b_raw >= a { b_raw + 1 } else { b_raw };
            StepCase {
                profile: OpinionProfile::new(m, n, scores).unwrap(),
                pair: PairEvent::new(a, b).unwrap(),
                subjects: SubjectSet::new((0..n).filter(|&j| mask[j])),
            }
        })
}

proptest! {
    #[test]
    fn conservation_per_step(case in step_case()) {
        let before = column_average(&case.profile);
        let after = column_average(&apply_step(&case.profile, case.pair, &case.subjects).unwrap());
        for (u, v) in before.averages().iter().zip(after.averages()) {
            prop_assert!((u - v).abs() <= 1e-12, "column mean moved from {u} to {v}");
        }
    }

    #[test]
    fn monotone_envelope_per_step(case in step_case()) {
        let next = apply_step(&case.profile, case.pair, &case.subjects).unwrap();
        for j in 0..case.profile.candidates() {
            let col_max = |x: &OpinionProfile| x.column(j).into_iter().fold(f64::MIN, f64::max);
            let col_min = |x: &OpinionProfile| x.column(j).into_iter().fold(f64::MAX, f64::min);
            prop_assert!(col_max(&next) <= col_max(&case.profile));
            prop_assert!(col_min(&next) >= col_min(&case.profile));
        }
    }

    #[test]
    fn mixing_matrix_is_doubly_stochastic(case in step_case(), j_raw in 0usize..6) {
        let m = case.profile.agents();
        let j = j_raw % case.profile.candidates();
        let w = mixing_matrix(case.pair, &case.subjects, j, m).unwrap();
        for row in &w {
            prop_assert_eq!(row.iter().sum::<f64>(), 1.0);
            prop_assert!(row.iter().all(|&x| x >= 0.0));
        }
        for col in 0..m {
            prop_assert_eq!((0..m).map(|row| w[row][col]).sum::<f64>(), 1.0);
        }
        for i in 0..m {
            prop_assert!(w[i][i] >= 0.5);
        }
    }

    #[test]
    fn matrix_and_scalar_updates_agree(case in step_case(), j_raw in 0usize..6) {
        let m = case.profile.agents();
        let j = j_raw % case.profile.candidates();
        let next = apply_step(&case.profile, case.pair, &case.subjects).unwrap();
        let w = mixing_matrix(case.pair, &case.subjects, j, m).unwrap();
        let col = case.profile.column(j);
        for i in 0..m {
            let matrix_value: f64 = (0..m).map(|l| w[i][l] * col[l]).sum();
            prop_assert!(
                (matrix_value - next.get(i, j)).abs() <= 1e-15,
                "row {i}: matrix route {matrix_value} vs scalar route {}",
                next.get(i, j)
            );
        }
    }

    #[test]
    fn top_k_threshold_set_properties(
        values in proptest::collection::vec(score(), 1..8),
        k_raw in 0usize..8,
    ) {
        let n = values.len();
        let k = 1 + k_raw % n;
        let set = top_k_set(&values, k).unwrap();
        prop_assert!(set.len() >= k);
        let member_min = set
            .members()
            .iter()
            .map(|&j| values[j])
            .fold(f64::INFINITY, f64::min);
        for j in 0..n {
            if !set.contains(j) {
                prop_assert!(values[j] < member_min);
            }
        }
    }

    #[test]
    fn borda_is_a_sorting_permutation(values in proptest::collection::vec(score(), 1..8)) {
        let m = 2;
        let rows: Vec<Vec<f64>> = (0..m).map(|_| values.clone()).collect();
        let agg: AggregateProfile = column_average(&OpinionProfile::from_rows(&rows).unwrap());
        let order = borda_ranking(&agg);
        let mut seen = vec![false; values.len()];
        for &j in &order {
            prop_assert!(!seen[j]);
            seen[j] = true;
        }
        for w in order.windows(2) {
            prop_assert!(agg.averages()[w[0]] >= agg.averages()[w[1]]);
        }
    }
}
