use std::path::{Path, PathBuf};

use predplan_core::Vec2;
use predplan_sim::scenario::{HumanSpec, RobotSpec, ScenarioSpec, WaypointSpec};
use predplan_sim::{run_closed_loop, Scenario, SimConfig, SimMode};

fn scenarios_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn scenario(name: &str) -> Scenario {
    Scenario::load(&scenarios_dir().join(name)).unwrap()
}

#[test]
fn empty_room_reaches_goal_with_wall_clearance() {
    let sc = scenario("empty_room.toml");
    for mode in [SimMode::None, SimMode::Cvm, SimMode::Proposed] {
        let log = run_closed_loop(&sc, mode, &SimConfig::default()).unwrap();
        assert!(log.summary.reached_goal);
        assert!(log.summary.min_env_distance >= sc.spec.robot.radius, "{:?}", log.summary);
        let last = log.ticks.last().unwrap().robot.position;
        assert!((last - sc.robot_goal()).norm() <= 0.1);
    }
}

#[test]
fn ticks_are_monotone_and_complete() {
    let sc = scenario("change_of_places.toml");
    let log = run_closed_loop(&sc, SimMode::Proposed, &SimConfig::default()).unwrap();
    for pair in log.ticks.windows(2) {
        assert!(pair[1].time > pair[0].time);
    }
    assert!(log.ticks.iter().all(|t| t.humans.len() == 1 && t.min_distance.is_finite()));
    let decisions = log.ticks.iter().filter(|t| t.decision.is_some()).count();
    assert_eq!(decisions, log.cycles.len());
}

#[test]
fn prediction_widens_the_gap_in_change_of_places() {
    let sc = scenario("change_of_places.toml");
    let none = run_closed_loop(&sc, SimMode::None, &SimConfig::default()).unwrap();
    let ours = run_closed_loop(&sc, SimMode::Proposed, &SimConfig::default()).unwrap();
    assert!(ours.summary.min_distance > none.summary.min_distance);
    assert_eq!(ours.summary.invalid_adoptions, 0);
}

#[test]
fn proposed_keeps_more_room_than_cvm_around_the_pillar() {
    let sc = scenario("change_of_places_pillar.toml");
    let cvm = run_closed_loop(&sc, SimMode::Cvm, &SimConfig::default()).unwrap();
    let ours = run_closed_loop(&sc, SimMode::Proposed, &SimConfig::default()).unwrap();
    assert!(ours.summary.min_distance > cvm.summary.min_distance);
}

#[test]
fn seeded_runs_are_byte_identical() {
    let mut spec = scenario("change_of_places.toml").spec;
    spec.perception_noise = 0.05;
    let sc = Scenario::resolve(spec, &scenarios_dir()).unwrap();
    let a = run_closed_loop(&sc, SimMode::Proposed, &SimConfig::default()).unwrap();
    let b = run_closed_loop(&sc, SimMode::Proposed, &SimConfig::default()).unwrap();
    assert_eq!(a.ticks_csv(), b.ticks_csv());
    assert_eq!(a.cycles_csv(), b.cycles_csv());
    assert_eq!(a.predictions_csv(), b.predictions_csv());
    assert_eq!(a.summary_csv(), b.summary_csv());
}

#[test]
fn bundled_scenarios_round_trip() {
    for entry in std::fs::read_dir(scenarios_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let spec = ScenarioSpec::from_toml(&std::fs::read_to_string(&path).unwrap()).unwrap();
            assert_eq!(ScenarioSpec::from_toml(&spec.to_toml()).unwrap(), spec, "{}", path.display());
            Scenario::load(&path).unwrap();
        }
    }
}

#[test]
fn save_then_load_is_identical() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(scenarios_dir().join("room.map"), dir.path().join("room.map")).unwrap();
    let spec = ScenarioSpec {
        name: "saved".into(),
        map: "room.map".into(),
        goals: None,
        seed: 9,
        duration: 12.5,
        tick: 0.1,
        perception_noise: 0.02,
        robot: RobotSpec { start: [1.0, 1.0], goal: [5.0, 5.0], radius: 0.3, speed: 0.7 },
        humans: vec![HumanSpec {
            start: [8.0, 2.0],
            speed: 1.2,
            radius: 0.25,
            start_time: 1.5,
            waypoints: vec![WaypointSpec { position: [8.0, 6.0], dwell: 3.0 }, WaypointSpec { position: [2.0, 6.0], dwell: 0.0 }],
            track: None,
        }],
    };
    let path = dir.path().join("saved.toml");
    spec.save(&path).unwrap();
    let loaded = Scenario::load(&path).unwrap();
    assert_eq!(loaded.spec, spec);
    spec.save(&path).unwrap();
    let again = std::fs::read_to_string(&path).unwrap();
    assert_eq!(again, spec.to_toml());
    assert_eq!(loaded.humans[0].position_at(0.0), Vec2::new(8.0, 2.0));
}
