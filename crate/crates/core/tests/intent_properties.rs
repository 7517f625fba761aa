use nalgebra::Rotation2;
use predplan_core::field::GridGeometry;
use predplan_core::intent::{
    averaged_relative_orientation, intent_posterior, FrequencyGrid, Goal, GoalSet, IntentConfig, TrackHistory, TrackSample,
};
use predplan_core::Vec2;
use proptest::prelude::*;

fn track_strategy() -> impl Strategy<Value = Vec<(f64, f64)>> {
    // a wandering walk: random heading increments at roughly walking speed
    (proptest::collection::vec((-0.6f64..0.6, 0.05f64..0.2), 3..25), -3.0f64..3.0).prop_map(|(steps, h0)| {
        let mut heading = h0;
        let mut p = Vec2::new(0.5, -0.3);
        let mut out = vec![(p.x, p.y)];
        for (dh, len) in steps {
            heading += dh;
            p += Vec2::new(heading.cos(), heading.sin()) * len;
            out.push((p.x, p.y));
        }
        out
    })
}

fn goals_strategy() -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
    proptest::collection::vec((-8.0f64..8.0, -8.0f64..8.0, 1.0f64..50.0), 2..6)
}

fn history(points: &[(f64, f64)], transform: impl Fn(Vec2) -> Vec2) -> TrackHistory {
    TrackHistory::new(
        points
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| {
                let p = transform(Vec2::new(x, y));
                TrackSample::new(i as f64 * 0.1, p.x, p.y)
            })
            .collect(),
    )
    .unwrap()
}

fn goal_set(goals: &[(f64, f64, f64)], transform: impl Fn(Vec2) -> Vec2) -> GoalSet {
    GoalSet::new(goals.iter().map(|&(x, y, n)| Goal { position: transform(Vec2::new(x, y)), count: n }).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn posterior_is_a_positive_distribution(track in track_strategy(), goals in goals_strategy(), lambda in 0.1f64..5.0) {
        let config = IntentConfig { lambda, ..IntentConfig::default() };
        let post = intent_posterior(&history(&track, |p| p), &goal_set(&goals, |p| p), &config).unwrap();
        let sum: f64 = post.probabilities.iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-9);
        prop_assert!(post.probabilities.iter().all(|&p| p > 0.0));
        prop_assert!(post.orientations.iter().all(|&d| (0.0..=std::f64::consts::PI).contains(&d)));
    }

    #[test]
    fn rigid_motion_leaves_posterior_unchanged(
        track in track_strategy(),
        goals in goals_strategy(),
        angle in -3.1f64..3.1,
        shift in (-20.0f64..20.0, -20.0f64..20.0),
    ) {
        let rot = Rotation2::new(angle);
        let t = Vec2::new(shift.0, shift.1);
        let moved = |p: Vec2| rot * p + t;
        let config = IntentConfig::default();
        let a = intent_posterior(&history(&track, |p| p), &goal_set(&goals, |p| p), &config).unwrap();
        let b = intent_posterior(&history(&track, moved), &goal_set(&goals, moved), &config).unwrap();
        for (x, y) in a.probabilities.iter().zip(&b.probabilities) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn uniform_prior_map_minimizes_orientation(track in track_strategy(), goals in goals_strategy()) {
        let positions: Vec<Vec2> = goals.iter().map(|&(x, y, _)| Vec2::new(x, y)).collect();
        let set = GoalSet::uniform(&positions);
        let h = history(&track, |p| p);
        let config = IntentConfig::default();
        let post = intent_posterior(&h, &set, &config).unwrap();
        let best = positions
            .iter()
            .map(|g| averaged_relative_orientation(&h, *g, &config).unwrap())
            .fold(f64::INFINITY, f64::min);
        prop_assert!((post.orientations[post.map_index] - best).abs() < 1e-12);
    }

    #[test]
    fn scaling_counts_keeps_priors(goals in goals_strategy(), scale in 0.01f64..100.0) {
        let a = goal_set(&goals, |p| p).priors();
        let scaled: Vec<_> = goals.iter().map(|&(x, y, n)| (x, y, n * scale)).collect();
        let b = goal_set(&scaled, |p| p).priors();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn goal_counts_sum_to_counted_visits(track in track_strategy()) {
        // everything is slow: 0.1 m per 1 s sample
        let slow = TrackHistory::new(
            track.iter().enumerate().map(|(i, &(x, y))| TrackSample::new(i as f64, x * 0.5, y * 0.5)).collect(),
        )
        .unwrap();
        let geometry = GridGeometry::new(Vec2::new(-10.0, -10.0), 0.5, 41, 41).unwrap();
        let mut grid = FrequencyGrid::new(geometry, 0.3);
        grid.update(&slow);
        let total: u64 = grid.counts().iter().sum();
        let extracted: f64 = grid.extract_goals().goals().iter().map(|g| g.count).sum();
        prop_assert!(extracted <= total as f64);
    }
}
