//! Scenario files: a TOML document naming the map, optional goal file, the
//! robot task and a list of scripted or replayed humans.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use predplan_core::field::{compute_edt, DistanceField, OccupancyGrid};
use predplan_core::intent::{GoalSet, TrackHistory};
use predplan_core::Vec2;
use serde::{Deserialize, Serialize};

use crate::error::{read, write, SimError, SimResult};
use crate::human::{ScriptedHuman, Waypoint};

fn default_duration() -> f64 {
    30.0
}
fn default_tick() -> f64 {
    0.1
}
fn default_robot_radius() -> f64 {
    0.3
}
fn default_robot_speed() -> f64 {
    0.6
}
fn default_human_speed() -> f64 {
    1.0
}
fn default_human_radius() -> f64 {
    0.25
}
fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotSpec {
    pub start: [f64; 2],
    pub goal: [f64; 2],
    #[serde(default = "default_robot_radius")]
    pub radius: f64,
    #[serde(default = "default_robot_speed")]
    pub speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaypointSpec {
    pub position: [f64; 2],
    #[serde(default, skip_serializing_if = "is_zero")]
    pub dwell: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HumanSpec {
    pub start: [f64; 2],
    #[serde(default = "default_human_speed")]
    pub speed: f64,
    #[serde(default = "default_human_radius")]
    pub radius: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub start_time: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub waypoints: Vec<WaypointSpec>,
    /// Track CSV replayed instead of the waypoint script.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub track: Option<PathBuf>,
}

/// On-disk form. Relative paths resolve against the scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    pub map: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goals: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_duration")]
    pub duration: f64,
    #[serde(default = "default_tick")]
    pub tick: f64,
    /// Standard deviation of zero-mean noise on perceived human positions.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub perception_noise: f64,
    pub robot: RobotSpec,
    #[serde(default, skip_serializing_if = "Vec::is_empty", rename = "human")]
    pub humans: Vec<HumanSpec>,
}

impl ScenarioSpec {
    pub fn from_toml(text: &str) -> SimResult<Self> {
        let de = toml::Deserializer::parse(text).map_err(|e| SimError::Schema(e.to_string()))?;
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            SimError::Schema(format!("{path}: {}", e.into_inner().message().trim()))
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario fields are always representable")
    }

    pub fn save(&self, path: &Path) -> SimResult<()> {
        write(path, &self.to_toml())
    }
}

fn point(p: [f64; 2]) -> Vec2 {
    Vec2::new(p[0], p[1])
}

/// A scenario with its map, goals and human scripts resolved.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub spec: ScenarioSpec,
    pub env: Arc<DistanceField>,
    pub goals: Option<GoalSet>,
    pub humans: Vec<ScriptedHuman>,
}

impl Scenario {
    pub fn load(path: &Path) -> SimResult<Self> {
        let spec = ScenarioSpec::from_toml(&read(path)?)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::resolve(spec, base)
    }

    pub fn resolve(spec: ScenarioSpec, base: &Path) -> SimResult<Self> {
        let grid = OccupancyGrid::from_text(&read(&base.join(&spec.map))?)?;
        let env = Arc::new(compute_edt(&grid));
        let goals = match &spec.goals {
            Some(p) => Some(GoalSet::from_text(&read(&base.join(p))?)?),
            None => None,
        };
        Self::with_env(spec, env, goals, base)
    }

    /// Resolves against an already computed environment field.
    pub fn with_env(spec: ScenarioSpec, env: Arc<DistanceField>, goals: Option<GoalSet>, base: &Path) -> SimResult<Self> {
        for (name, v) in [("duration", spec.duration), ("tick", spec.tick), ("robot.radius", spec.robot.radius), ("robot.speed", spec.robot.speed)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SimError::Schema(format!("{name}: must be positive")));
            }
        }
        if !(spec.perception_noise >= 0.0) {
            return Err(SimError::Schema("perception_noise: must be non-negative".into()));
        }
        for (what, p) in [("robot start", spec.robot.start), ("robot goal", spec.robot.goal)] {
            let s = env.sample(point(p));
            if !s.in_bounds || s.distance <= spec.robot.radius {
                return Err(SimError::Blocked { what: what.into(), x: p[0], y: p[1] });
            }
        }
        let mut humans = Vec::with_capacity(spec.humans.len());
        for (k, h) in spec.humans.iter().enumerate() {
            let label = format!("human[{k}]");
            if !(h.speed > 0.0) {
                return Err(SimError::Schema(format!("{label}.speed: must be positive")));
            }
            if !(h.radius > 0.0) {
                return Err(SimError::Schema(format!("{label}.radius: must be positive")));
            }
            let s = env.sample(point(h.start));
            if !s.in_bounds || s.distance <= h.radius {
                return Err(SimError::Blocked { what: format!("{label} start"), x: h.start[0], y: h.start[1] });
            }
            let human = match &h.track {
                Some(p) => {
                    let track = TrackHistory::from_csv(&read(&base.join(p))?)?;
                    ScriptedHuman::replay(&track, h.radius)?
                }
                None => {
                    let waypoints: Vec<Waypoint> = h
                        .waypoints
                        .iter()
                        .map(|w| Waypoint { position: point(w.position), dwell: w.dwell })
                        .collect();
                    ScriptedHuman::plan(&env, point(h.start), h.start_time, h.speed, h.radius, &waypoints, &label)?
                }
            };
            humans.push(human);
        }
        Ok(Self { spec, env, goals, humans })
    }

    pub fn robot_start(&self) -> Vec2 {
        point(self.spec.robot.start)
    }

    pub fn robot_goal(&self) -> Vec2 {
        point(self.spec.robot.goal)
    }
}
