//! Receding-horizon robot navigation among scripted humans.

use std::fmt::Write as _;
use std::str::FromStr;
use std::sync::Arc;

use predplan_core::field::{composite_min, disc_field, CompositeSequence, PrimitiveField};
use predplan_core::gp::CVState;
use predplan_core::intent::{GoalSet, TrackHistory, TrackSample};
use predplan_core::planner::{plan_cycle, step_execution, write_cycle_log, CycleRecord, PlanState, PlannerConfig, ReplanDecision};
use predplan_core::predict::{cvm_predict, predict_trajectory, PositionAt, PredictionConfig};
use predplan_core::Vec2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{SimError, SimResult};
use crate::scenario::Scenario;

/// How the planner anticipates humans.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimMode {
    /// Current positions held for the whole horizon.
    None,
    Cvm,
    Proposed,
}

impl SimMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            SimMode::None => "none",
            SimMode::Cvm => "cvm",
            SimMode::Proposed => "proposed",
        }
    }
}

impl FromStr for SimMode {
    type Err = SimError;

    fn from_str(s: &str) -> SimResult<Self> {
        match s {
            "none" => Ok(SimMode::None),
            "cvm" => Ok(SimMode::Cvm),
            "proposed" => Ok(SimMode::Proposed),
            other => Err(SimError::Invalid(format!("unknown mode {other:?}; expected none, cvm or proposed"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub planner: PlannerConfig,
    pub prediction: PredictionConfig,
    /// Seconds of observed track handed to the predictors.
    pub history: f64,
    /// Distance to the goal at which the task counts as done.
    pub goal_tolerance: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { planner: PlannerConfig::default(), prediction: PredictionConfig::default(), history: 2.0, goal_tolerance: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TickRecord {
    pub time: f64,
    pub robot: CVState,
    pub humans: Vec<Vec2>,
    /// Smallest center distance from the robot to any human.
    pub min_distance: f64,
    pub decision: Option<ReplanDecision>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionPoint {
    pub time: f64,
    pub human: usize,
    pub step: usize,
    pub position: Vec2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimSummary {
    pub min_distance: f64,
    /// Smallest distance from the robot center to a static obstacle.
    pub min_env_distance: f64,
    pub collision: bool,
    pub reached_goal: bool,
    pub arrival_time: Option<f64>,
    /// Adopted plans whose clearance against their own sequence was not
    /// positive at adoption.
    pub invalid_adoptions: usize,
    pub cycles: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimLog {
    pub mode: SimMode,
    pub ticks: Vec<TickRecord>,
    pub cycles: Vec<CycleRecord>,
    pub predictions: Vec<PredictionPoint>,
    pub summary: SimSummary,
}

fn primitives(scenario: &Scenario, config: &PlannerConfig) -> SimResult<Vec<Arc<PrimitiveField>>> {
    // one window per distinct radius
    let reach = config.epsilon + config.robot_radius + config.dt * config.nominal_speed;
    let mut by_radius: Vec<(f64, Arc<PrimitiveField>)> = Vec::new();
    let mut out = Vec::with_capacity(scenario.humans.len());
    for h in &scenario.humans {
        let prim = match by_radius.iter().find(|(r, _)| *r == h.radius) {
            Some((_, p)) => p.clone(),
            None => {
                let p = Arc::new(disc_field(h.radius, reach, scenario.env.geometry())?);
                by_radius.push((h.radius, p.clone()));
                p
            }
        };
        out.push(prim);
    }
    Ok(out)
}

fn sequence(
    scenario: &Scenario,
    prims: &[Arc<PrimitiveField>],
    tracks: &[Vec<Vec2>],
    config: &PlannerConfig,
    now: f64,
) -> SimResult<CompositeSequence> {
    let mut fields = Vec::with_capacity(config.n);
    for i in 0..config.n {
        let overlays: Vec<(&PrimitiveField, Vec2)> = prims
            .iter()
            .zip(tracks)
            .filter_map(|(p, t)| t.get(i).or_else(|| t.last()).map(|&pos| (p.as_ref(), pos)))
            .collect();
        fields.push(Arc::new(composite_min(&scenario.env, &overlays)?));
    }
    Ok(CompositeSequence::new(fields, config.dt, now)?)
}

fn predict_human(
    mode: SimMode,
    history: &TrackHistory,
    goals: &GoalSet,
    scenario: &Scenario,
    robot: Vec2,
    config: &SimConfig,
    now: f64,
) -> SimResult<Vec<Vec2>> {
    let n = config.planner.n;
    let dt = config.planner.dt;
    let last = history.last().expect("history always holds the current sample").position;
    let at = |p: &dyn Fn(f64) -> Vec2| (0..n).map(|i| p(now + i as f64 * dt)).collect();
    Ok(match mode {
        SimMode::None => vec![last],
        _ if history.len() < 2 => vec![last],
        SimMode::Cvm => {
            let pred = cvm_predict(history, n as f64 * dt, dt)?;
            at(&|t| pred.position_at(t))
        }
        SimMode::Proposed => {
            let pred = predict_trajectory(history, goals, &scenario.env, Some(robot), &config.prediction)?;
            at(&|t| pred.position_at(t))
        }
    })
}

/// Runs the scenario to its duration or until the robot finishes.
pub fn run_closed_loop(scenario: &Scenario, mode: SimMode, config: &SimConfig) -> SimResult<SimLog> {
    let spec = &scenario.spec;
    let mut planner = config.planner.clone();
    planner.robot_radius = spec.robot.radius;
    planner.nominal_speed = spec.robot.speed;
    planner.validate()?;
    let config = SimConfig { planner: planner.clone(), ..config.clone() };

    let ratio = planner.dt / spec.tick;
    let per_cycle = ratio.round() as usize;
    if per_cycle == 0 || (ratio - per_cycle as f64).abs() > 1e-9 {
        return Err(SimError::Invalid(format!("planner step {} is not a multiple of tick {}", planner.dt, spec.tick)));
    }
    let ticks = (spec.duration / spec.tick).round() as usize;
    let empty = GoalSet::default();
    let goals = scenario.goals.as_ref().unwrap_or(&empty);
    let prims = primitives(scenario, &planner)?;
    let noise = Normal::new(0.0, spec.perception_noise.max(0.0)).map_err(|e| SimError::Invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let goal = CVState::stationary(scenario.robot_goal());
    let keep = (config.history / spec.tick).round() as usize + 1;

    let mut robot = CVState::stationary(scenario.robot_start());
    let mut histories: Vec<Vec<TrackSample>> = vec![Vec::new(); scenario.humans.len()];
    let mut plan: Option<PlanState> = None;
    let mut log = SimLog {
        mode,
        ticks: Vec::with_capacity(ticks + 1),
        cycles: Vec::new(),
        predictions: Vec::new(),
        summary: SimSummary {
            min_distance: f64::INFINITY,
            min_env_distance: f64::INFINITY,
            collision: false,
            reached_goal: false,
            arrival_time: None,
            invalid_adoptions: 0,
            cycles: 0,
        },
    };

    for k in 0..=ticks {
        let now = k as f64 * spec.tick;
        let truth: Vec<Vec2> = scenario.humans.iter().map(|h| h.position_at(now)).collect();
        for (hist, p) in histories.iter_mut().zip(&truth) {
            let seen = if spec.perception_noise > 0.0 {
                p + Vec2::new(noise.sample(&mut rng), noise.sample(&mut rng))
            } else {
                *p
            };
            hist.push(TrackSample::new(now, seen.x, seen.y));
            if hist.len() > keep {
                hist.remove(0);
            }
        }

        let mut decision = None;
        if k % per_cycle == 0 {
            let stepped = plan.take().map(|p| step_execution(p, now, &planner));
            if let Some(p) = &stepped {
                robot = p.state_at(now, planner.qc);
            }
            match stepped {
                Some(p) if p.terminal => plan = Some(p),
                previous => {
                    let mut tracks = Vec::with_capacity(histories.len());
                    for (h, samples) in histories.iter().enumerate() {
                        let history = TrackHistory::new(samples.clone())?;
                        let track = predict_human(mode, &history, goals, scenario, robot.position, &config, now)?;
                        for (step, &position) in track.iter().enumerate() {
                            log.predictions.push(PredictionPoint { time: now, human: h, step, position });
                        }
                        tracks.push(track);
                    }
                    let seq = sequence(scenario, &prims, &tracks, &planner, now)?;
                    let (next, record) = plan_cycle(previous, robot, goal, now, seq, &planner)?;
                    if record.decision == ReplanDecision::AdoptReoptimized && !(record.min_clearance > 0.0) {
                        log.summary.invalid_adoptions += 1;
                    }
                    decision = Some(record.decision);
                    log.cycles.push(record);
                    plan = Some(next);
                }
            }
        } else if let Some(p) = &plan {
            robot = p.state_at(now, planner.qc);
        }

        let min_distance = truth.iter().map(|h| (h - robot.position).norm()).fold(f64::INFINITY, f64::min);
        for (h, p) in scenario.humans.iter().zip(&truth) {
            if (p - robot.position).norm() < spec.robot.radius + h.radius {
                log.summary.collision = true;
            }
        }
        log.summary.min_distance = log.summary.min_distance.min(min_distance);
        log.summary.min_env_distance = log.summary.min_env_distance.min(scenario.env.sample(robot.position).distance);
        log.ticks.push(TickRecord { time: now, robot, humans: truth, min_distance, decision });

        if (robot.position - goal.position).norm() <= config.goal_tolerance {
            log.summary.reached_goal = true;
            log.summary.arrival_time = Some(now);
            break;
        }
    }
    log.summary.cycles = log.cycles.len();
    Ok(log)
}

impl SimLog {
    pub fn ticks_csv(&self) -> String {
        let humans = self.ticks.first().map_or(0, |t| t.humans.len());
        let mut out = String::from("time,robot_x,robot_y,robot_vx,robot_vy");
        for h in 0..humans {
            let _ = write!(out, ",human{h}_x,human{h}_y");
        }
        out.push_str(",min_distance,decision\n");
        for t in &self.ticks {
            let r = &t.robot;
            let _ = write!(out, "{:.3},{:.6},{:.6},{:.6},{:.6}", t.time, r.position.x, r.position.y, r.velocity.x, r.velocity.y);
            for p in &t.humans {
                let _ = write!(out, ",{:.6},{:.6}", p.x, p.y);
            }
            let md = if t.min_distance.is_finite() { format!("{:.6}", t.min_distance) } else { String::new() };
            let _ = writeln!(out, ",{md},{}", t.decision.map_or("", |d| d.as_str()));
        }
        out
    }

    pub fn cycles_csv(&self) -> String {
        let mut buf = Vec::new();
        write_cycle_log(&self.cycles, &mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn predictions_csv(&self) -> String {
        let mut out = String::from("time,human,step,x,y\n");
        for p in &self.predictions {
            let _ = writeln!(out, "{:.3},{},{},{:.6},{:.6}", p.time, p.human, p.step, p.position.x, p.position.y);
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let s = &self.summary;
        let md = if s.min_distance.is_finite() { format!("{:.6}", s.min_distance) } else { String::new() };
        let arrival = s.arrival_time.map_or(String::new(), |t| format!("{t:.3}"));
        format!(
            "mode,min_distance,min_env_distance,collision,reached_goal,arrival_time,cycles,invalid_adoptions\n{},{md},{:.6},{},{},{arrival},{},{}\n",
            self.mode.as_str(),
            s.min_env_distance,
            s.collision,
            s.reached_goal,
            s.cycles,
            s.invalid_adoptions
        )
    }
}
