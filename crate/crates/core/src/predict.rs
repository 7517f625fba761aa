//! Human trajectory prediction: goal-directed GP factor-graph optimization,
//! constant/linear velocity baselines and displacement metrics.

use std::sync::Arc;

use crate::factor::{isotropic, lm_optimize, Factor, FactorGraph, LMConfig};
use crate::field::DistanceField;
use crate::gp::{straight_line_init, CVState, GPTrajectory};
use crate::intent::{intent_posterior, GoalSet, IntentConfig, IntentPosterior, TrackHistory, TrackSample};
use crate::{Error, Result, Vec2};

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionConfig {
    pub qc: f64,
    /// Nominal spacing between support states, s.
    pub dt: f64,
    pub sigma_obs: f64,
    pub epsilon: f64,
    pub sigma_robot: f64,
    pub epsilon_robot: f64,
    pub intent: IntentConfig,
    /// MAP goal probability below which the goal prior is dropped.
    pub p_min: f64,
    pub horizons: Vec<f64>,
    pub sigma_start: f64,
    pub sigma_goal: f64,
    pub use_intent: bool,
    pub use_robot_factor: bool,
    pub lm: LMConfig,
}

impl Default for PredictionConfig {
    fn default() -> Self {
        Self {
            qc: 0.2,
            dt: 0.5,
            sigma_obs: 0.1,
            epsilon: 0.4,
            sigma_robot: 0.1,
            epsilon_robot: 0.8,
            intent: IntentConfig::default(),
            p_min: 0.4,
            horizons: vec![1.6, 3.2, 4.8, 8.0],
            sigma_start: 1e-3,
            sigma_goal: 1e-2,
            use_intent: true,
            use_robot_factor: true,
            lm: LMConfig::default(),
        }
    }
}

impl PredictionConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.qc, self.dt, self.sigma_obs, self.epsilon, self.sigma_robot, self.epsilon_robot, self.sigma_start, self.sigma_goal];
        if positive.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidParameter("prediction parameters must be positive and finite".into()));
        }
        if !(0.0..1.0).contains(&self.p_min) {
            return Err(Error::InvalidParameter(format!("p_min {} outside [0, 1)", self.p_min)));
        }
        if self.horizons.is_empty()
            || self.horizons[0] <= 0.0
            || self.horizons.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::InvalidParameter("horizons must be positive and ascending".into()));
        }
        self.intent.validate()?;
        self.lm.validate()
    }

    pub fn max_horizon(&self) -> f64 {
        *self.horizons.last().expect("validated non-empty")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictionMode {
    Proposed,
    ProposedNoGoal,
    Stationary,
    Cvm,
    Lvm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Interpolation {
    /// GP posterior mean between supports with this `Q_c`.
    Gp(f64),
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UsedGoal {
    pub index: usize,
    pub position: Vec2,
    pub probability: f64,
}

/// Anything that yields a predicted position at an absolute time.
pub trait PositionAt {
    fn position_at(&self, t: f64) -> Vec2;
}

#[derive(Debug, Clone)]
pub struct PredictionResult {
    pub trajectory: GPTrajectory,
    pub mode: PredictionMode,
    pub interpolation: Interpolation,
    pub used_goal: Option<UsedGoal>,
    /// Estimated walking time to the goal, s.
    pub duration: Option<f64>,
    /// Absolute time after which the prediction rests at the goal.
    pub arrival_time: Option<f64>,
    pub posterior: Option<IntentPosterior>,
    pub lm_iterations: usize,
    pub final_cost: f64,
}

impl PositionAt for PredictionResult {
    fn position_at(&self, t: f64) -> Vec2 {
        if let (Some(arrival), Some(goal)) = (self.arrival_time, self.used_goal) {
            if t >= arrival {
                return goal.position;
            }
        }
        match self.interpolation {
            Interpolation::Gp(qc) => self.trajectory.state_at(t, qc).position,
            Interpolation::Linear => self.trajectory.linear_position_at(t),
        }
    }
}

impl PositionAt for GPTrajectory {
    fn position_at(&self, t: f64) -> Vec2 {
        self.linear_position_at(t)
    }
}

fn baseline(start: CVState, t0: f64, horizon: f64, dt: f64, mode: PredictionMode) -> Result<PredictionResult> {
    if !(horizon > 0.0) || !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("horizon {horizon} and dt {dt} must be positive")));
    }
    let steps = ((horizon / dt) - 1e-9).ceil().max(1.0) as usize;
    let states = (0..=steps)
        .map(|i| CVState::new(start.position + start.velocity * (i as f64 * dt), start.velocity))
        .collect();
    Ok(PredictionResult {
        trajectory: GPTrajectory::new(states, t0, dt)?,
        mode,
        interpolation: Interpolation::Linear,
        used_goal: None,
        duration: None,
        arrival_time: None,
        posterior: None,
        lm_iterations: 0,
        final_cost: 0.0,
    })
}

fn last_sample(history: &TrackHistory) -> Result<TrackSample> {
    history.last().copied().ok_or_else(|| Error::InvalidTrack("empty history".into()))
}

/// Propagates the last instantaneous velocity.
pub fn cvm_predict(history: &TrackHistory, horizon: f64, dt: f64) -> Result<PredictionResult> {
    let last = last_sample(history)?;
    let velocity = history.last_velocity().unwrap_or_else(Vec2::zeros);
    baseline(CVState::new(last.position, velocity), last.t, horizon, dt, PredictionMode::Cvm)
}

/// Propagates the average velocity over the whole given history.
pub fn lvm_predict(history: &TrackHistory, horizon: f64, dt: f64) -> Result<PredictionResult> {
    let last = last_sample(history)?;
    let first = history.samples()[0];
    let span = last.t - first.t;
    let velocity = if span > 0.0 { (last.position - first.position) / span } else { Vec2::zeros() };
    baseline(CVState::new(last.position, velocity), last.t, horizon, dt, PredictionMode::Lvm)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeToGoal {
    Duration(f64),
    /// Walking speed below the visit threshold.
    Stationary,
}

pub fn estimate_time_to_goal(position: Vec2, goal: Vec2, speed: f64, v_thres: f64) -> Result<TimeToGoal> {
    if !(speed >= 0.0) {
        return Err(Error::InvalidParameter(format!("speed {speed} must be non-negative")));
    }
    if speed < v_thres {
        return Ok(TimeToGoal::Stationary);
    }
    Ok(TimeToGoal::Duration((goal - position).norm() / speed))
}

/// Predicts the person's trajectory up to the largest configured horizon.
pub fn predict_trajectory(
    history: &TrackHistory,
    goals: &GoalSet,
    env_field: &Arc<DistanceField>,
    robot: Option<Vec2>,
    config: &PredictionConfig,
) -> Result<PredictionResult> {
    config.validate()?;
    let last = last_sample(history)?;
    let t0 = last.t;
    let horizon = config.max_horizon();
    let speed = history.mean_speed(config.intent.window).unwrap_or(0.0);
    if history.len() < 2 || speed < config.intent.v_thres {
        return baseline(CVState::stationary(last.position), t0, horizon, config.dt, PredictionMode::Stationary);
    }
    let current = CVState::new(last.position, history.last_velocity().unwrap_or_else(Vec2::zeros));

    let posterior = if config.use_intent && !goals.is_empty() {
        Some(intent_posterior(history, goals, &config.intent)?)
    } else {
        None
    };
    let chosen = posterior.as_ref().filter(|p| p.map_probability >= config.p_min).map(|p| UsedGoal {
        index: p.map_index,
        position: goals.goals()[p.map_index].position,
        probability: p.map_probability,
    });

    let robot = robot.filter(|_| config.use_robot_factor);
    let field = Arc::clone(env_field);
    let add_collision = |graph: &mut FactorGraph, range: std::ops::Range<usize>| {
        for i in range {
            graph.add(Factor::obstacle(i, field.clone(), config.epsilon, config.sigma_obs));
            if let Some(r) = robot {
                graph.add(Factor::robot(i, r, config.epsilon_robot, config.sigma_robot));
            }
        }
    };

    let mut result = match chosen {
        Some(goal) => {
            let duration = match estimate_time_to_goal(current.position, goal.position, speed, config.intent.v_thres)? {
                TimeToGoal::Duration(d) => d,
                TimeToGoal::Stationary => unreachable!("speed checked above"),
            };
            if duration <= 1e-9 {
                let mut r = baseline(CVState::stationary(goal.position), t0, horizon, config.dt, PredictionMode::Proposed)?;
                r.used_goal = Some(goal);
                r.duration = Some(0.0);
                r.arrival_time = Some(t0);
                r.posterior = posterior;
                return Ok(r);
            }
            // supports evenly split the walk so the last lands on arrival
            let n = ((duration / config.dt) - 1e-9).ceil().max(1.0) as usize;
            let spacing = duration / n as f64;
            let mut graph = FactorGraph::new(n + 1);
            graph.add(Factor::start_prior(0, current, &isotropic(config.sigma_start))?);
            graph.add(Factor::goal_position_prior(n, goal.position, config.sigma_goal)?);
            for i in 0..n {
                graph.add(Factor::gp(i, spacing, config.qc)?);
            }
            add_collision(&mut graph, 1..n);
            let init = straight_line_init(&current, goal.position, n, spacing, t0)?;
            let opt = lm_optimize(&graph, &init, &config.lm)?;
            let final_cost = opt.final_cost();
            let mut states = opt.trajectory.into_states();
            let mut end = t0 + n as f64 * spacing;
            while end < t0 + horizon {
                states.push(CVState::stationary(goal.position));
                end += spacing;
            }
            PredictionResult {
                trajectory: GPTrajectory::new(states, t0, spacing)?,
                mode: PredictionMode::Proposed,
                interpolation: Interpolation::Gp(config.qc),
                used_goal: Some(goal),
                duration: Some(duration),
                arrival_time: Some(t0 + duration),
                posterior: None,
                lm_iterations: opt.iterations,
                final_cost,
            }
        }
        None => {
            let n = ((horizon / config.dt) - 1e-9).ceil().max(1.0) as usize;
            let mut graph = FactorGraph::new(n + 1);
            graph.add(Factor::start_prior(0, current, &isotropic(config.sigma_start))?);
            for i in 0..n {
                graph.add(Factor::gp(i, config.dt, config.qc)?);
            }
            add_collision(&mut graph, 1..n + 1);
            let states = (0..=n)
                .map(|i| CVState::new(current.position + current.velocity * (i as f64 * config.dt), current.velocity))
                .collect();
            let init = GPTrajectory::new(states, t0, config.dt)?;
            let opt = lm_optimize(&graph, &init, &config.lm)?;
            PredictionResult {
                final_cost: opt.final_cost(),
                lm_iterations: opt.iterations,
                trajectory: opt.trajectory,
                mode: PredictionMode::ProposedNoGoal,
                interpolation: Interpolation::Gp(config.qc),
                used_goal: None,
                duration: None,
                arrival_time: None,
                posterior: None,
            }
        }
    };
    result.posterior = posterior;
    Ok(result)
}

fn displacements<'a>(pred: &'a (impl PositionAt + ?Sized), truth: &'a [TrackSample]) -> Result<impl Iterator<Item = f64> + 'a> {
    if truth.is_empty() {
        return Err(Error::EmptyTruth);
    }
    Ok(truth.iter().map(move |s| (pred.position_at(s.t) - s.position).norm()))
}

/// Average displacement error at the truth timestamps.
pub fn ade(pred: &(impl PositionAt + ?Sized), truth: &[TrackSample]) -> Result<f64> {
    let n = truth.len() as f64;
    Ok(displacements(pred, truth)?.sum::<f64>() / n)
}

/// Displacement at the final truth timestamp.
pub fn fde(pred: &(impl PositionAt + ?Sized), truth: &[TrackSample]) -> Result<f64> {
    Ok(displacements(pred, truth)?.last().expect("non-empty truth"))
}
