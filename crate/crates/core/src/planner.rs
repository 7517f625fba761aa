//! Receding-horizon planning for a planar disc robot over a time-indexed
//! sequence of composite distance fields.

use std::io::Write;

use crate::factor::{isotropic, lm_optimize, Factor, FactorGraph, LMConfig};
use crate::field::CompositeSequence;
use crate::gp::{straight_line_init, CVState, GPTrajectory};
use crate::{Error, Result, Vec2};

#[derive(Debug, Clone, PartialEq)]
pub struct PlannerConfig {
    pub dt: f64,
    /// Number of time-indexed composite fields.
    pub n: usize,
    pub robot_radius: f64,
    /// Obstacle hinge margin beyond the robot radius.
    pub epsilon: f64,
    pub sigma_obs: f64,
    pub qc: f64,
    /// Minimum relative cost improvement for swapping a valid plan.
    pub rho: f64,
    pub nominal_speed: f64,
    pub sigma_start: f64,
    pub sigma_goal: f64,
    pub lm: LMConfig,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            dt: 0.5,
            n: 20,
            robot_radius: 0.3,
            epsilon: 0.4,
            sigma_obs: 0.1,
            qc: 0.2,
            rho: 0.1,
            nominal_speed: 0.6,
            sigma_start: 1e-3,
            sigma_goal: 1e-3,
            lm: LMConfig::default(),
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.dt, self.robot_radius, self.epsilon, self.sigma_obs, self.qc, self.nominal_speed, self.sigma_start, self.sigma_goal];
        if positive.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidParameter("planner parameters must be positive and finite".into()));
        }
        if self.n == 0 {
            return Err(Error::InvalidParameter("need at least one composite field".into()));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::InvalidParameter(format!("rho {} outside (0, 1)", self.rho)));
        }
        self.lm.validate()
    }

    /// Support index at which a walk of `time_to_goal` arrives.
    pub fn arrival_intervals(&self, time_to_goal: f64) -> usize {
        (time_to_goal / self.dt - 1e-9).ceil().max(1.0) as usize
    }

    /// Plan length for a given arrival, never below `n` so every composite
    /// field is consumed.
    pub fn horizon_intervals(&self, arrival: usize) -> usize {
        arrival.max(self.n)
    }
}

/// Graph with the goal prior at support `arrival`, spanning
/// `max(arrival, n)` intervals. Supports past the arrival are held at the goal
/// by the GP prior alone. The obstacle factor at support `i` reads field
/// `min(i, n − 1)` of `seq`.
pub fn build_plan_graph(
    start: &CVState,
    goal: &CVState,
    seq: &CompositeSequence,
    arrival: usize,
    config: &PlannerConfig,
) -> Result<FactorGraph> {
    if arrival == 0 {
        return Err(Error::HorizonTooShort);
    }
    let intervals = config.horizon_intervals(arrival);
    let mut graph = FactorGraph::new(intervals + 1);
    graph.add(Factor::start_prior(0, *start, &isotropic(config.sigma_start))?);
    graph.add(Factor::goal_prior(arrival, *goal, &isotropic(config.sigma_goal))?);
    for i in 0..intervals {
        graph.add(Factor::gp(i, config.dt, config.qc)?);
    }
    let margin = config.epsilon + config.robot_radius;
    for i in 0..=intervals {
        graph.add(Factor::obstacle(i, seq.for_index(i).clone(), margin, config.sigma_obs));
    }
    Ok(graph)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Validity {
    pub valid: bool,
    pub first_violation: Option<usize>,
    /// Smallest field distance minus robot radius over the checked supports.
    pub min_clearance: f64,
}

/// Checks supports `from..` against the field matching each support's time.
pub fn check_validity(traj: &GPTrajectory, from: usize, seq: &CompositeSequence, config: &PlannerConfig) -> Validity {
    let mut out = Validity { valid: true, first_violation: None, min_clearance: f64::INFINITY };
    for (i, s) in traj.states().iter().enumerate().skip(from) {
        let sample = seq.for_time(traj.time_of(i)).sample(s.position);
        let distance = if sample.in_bounds { sample.distance } else { 0.0 };
        let clearance = distance - config.robot_radius;
        out.min_clearance = out.min_clearance.min(clearance);
        if clearance <= 0.0 && out.valid {
            out.valid = false;
            out.first_violation = Some(i);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReplanDecision {
    Keep,
    AdoptReoptimized,
    ReinitStraightLine,
}

impl ReplanDecision {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Keep => "keep",
            Self::AdoptReoptimized => "adopt",
            Self::ReinitStraightLine => "reinit",
        }
    }
}

pub fn replan_decision(
    current_cost: f64,
    current_valid: bool,
    reoptimized_cost: f64,
    reoptimized_valid: bool,
    rho: f64,
) -> ReplanDecision {
    if !current_valid {
        return if reoptimized_valid { ReplanDecision::AdoptReoptimized } else { ReplanDecision::ReinitStraightLine };
    }
    let improvement = if current_cost > 0.0 { (current_cost - reoptimized_cost) / current_cost } else { 0.0 };
    if reoptimized_valid && improvement > rho {
        ReplanDecision::AdoptReoptimized
    } else {
        ReplanDecision::Keep
    }
}

#[derive(Debug, Clone)]
pub struct PlanState {
    pub trajectory: GPTrajectory,
    pub cost: f64,
    /// Index of the latest support the robot has reached.
    pub execution_index: usize,
    pub sequence: CompositeSequence,
    pub goal: CVState,
    /// Support index at which the plan reaches the goal.
    pub arrival_index: usize,
    pub time_to_goal: f64,
    /// Set once the goal is less than one step away; the plan then runs out
    /// without further replanning.
    pub terminal: bool,
}

impl PlanState {
    /// Robot state commanded at time `t`.
    pub fn state_at(&self, t: f64, qc: f64) -> CVState {
        self.trajectory.state_at(t, qc)
    }
}

fn remaining_length(traj: &GPTrajectory, from: usize, to: usize, position: Vec2) -> f64 {
    let mut last = position;
    let mut total = 0.0;
    let to = to.min(traj.intervals());
    for s in traj.states().get(from..=to).unwrap_or(&[]) {
        total += (s.position - last).norm();
        last = s.position;
    }
    total
}

/// Advances the execution index to `now` and refreshes the time-to-goal.
pub fn step_execution(mut state: PlanState, now: f64, config: &PlannerConfig) -> PlanState {
    let traj = &state.trajectory;
    let steps = ((now - traj.t0()) / traj.dt() + 1e-9).floor().max(0.0) as usize;
    state.execution_index = steps.min(traj.intervals());
    let position = traj.state_at(now, config.qc).position;
    let remaining = remaining_length(traj, state.execution_index + 1, state.arrival_index, position);
    state.time_to_goal = remaining / config.nominal_speed;
    if state.time_to_goal <= config.dt {
        state.terminal = true;
    }
    state
}

fn pad_to(states: &mut Vec<CVState>, intervals: usize, goal: &CVState) {
    states.truncate(intervals + 1);
    while states.len() < intervals + 1 {
        states.push(*goal);
    }
}

/// Straight-line initialization to the goal, optimized.
fn plan_from_scratch(
    current: &CVState,
    goal: &CVState,
    now: f64,
    seq: &CompositeSequence,
    config: &PlannerConfig,
) -> Result<(GPTrajectory, f64, usize)> {
    let ttg = (goal.position - current.position).norm() / config.nominal_speed;
    let arrival = config.arrival_intervals(ttg);
    let graph = build_plan_graph(current, goal, seq, arrival, config)?;
    let mut states = straight_line_init(current, goal.position, arrival, config.dt, now)?.into_states();
    states[0] = *current;
    pad_to(&mut states, config.horizon_intervals(arrival), goal);
    let init = GPTrajectory::new(states, now, config.dt)?;
    let result = lm_optimize(&graph, &init, &config.lm)?;
    let cost = result.final_cost();
    Ok((result.trajectory, cost, arrival))
}

/// Current plan shifted to start at `now`, keeping its arrival time unless
/// the time-to-goal estimate disagrees by more than a few steps, in which case
/// the walk is retimed. Padded with goal supports to the planning horizon.
fn shifted_plan(state: &PlanState, current: &CVState, now: f64, config: &PlannerConfig) -> Result<(GPTrajectory, usize)> {
    let exec = state.execution_index;
    let mut states: Vec<CVState> = state.trajectory.states()[exec..].to_vec();
    states[0] = *current;
    let mut arrival = state.arrival_index.saturating_sub(exec).max(1);
    let span = arrival.max(states.len() - 1);
    pad_to(&mut states, span, &state.goal);
    let needed = config.arrival_intervals(state.time_to_goal);
    if arrival.abs_diff(needed) > (needed / 10).max(2) {
        states = retime(&states[..=arrival], needed, config.dt);
        arrival = needed;
    }
    pad_to(&mut states, config.horizon_intervals(arrival), &state.goal);
    Ok((GPTrajectory::new(states, now, config.dt)?, arrival))
}

/// Piecewise-linear resampling of support positions onto `intervals + 1`
/// supports spanning the same path; velocities by central differences.
fn retime(states: &[CVState], intervals: usize, dt: f64) -> Vec<CVState> {
    let last = (states.len() - 1) as f64;
    let positions: Vec<Vec2> = (0..=intervals)
        .map(|k| {
            let s = last * k as f64 / intervals as f64;
            let i = (s.floor() as usize).min(states.len() - 2);
            let f = s - i as f64;
            states[i].position * (1.0 - f) + states[i + 1].position * f
        })
        .collect();
    (0..=intervals)
        .map(|k| {
            let velocity = if k == 0 {
                states[0].velocity
            } else if k == intervals {
                states[states.len() - 1].velocity
            } else {
                (positions[k + 1] - positions[k - 1]) / (2.0 * dt)
            };
            CVState::new(positions[k], velocity)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleRecord {
    pub time: f64,
    pub cost: f64,
    pub decision: ReplanDecision,
    pub min_clearance: f64,
}

pub fn write_cycle_log<W: Write>(records: &[CycleRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "time,cost,decision,min_clearance")?;
    for r in records {
        writeln!(out, "{:.3},{:.9e},{},{:.6}", r.time, r.cost, r.decision.as_str(), r.min_clearance)?;
    }
    Ok(())
}

/// One planning cycle at time `now` with a composite sequence starting at
/// `now`. Without a previous plan the robot plans from a straight line.
pub fn plan_cycle(
    previous: Option<PlanState>,
    current: CVState,
    goal: CVState,
    now: f64,
    seq: CompositeSequence,
    config: &PlannerConfig,
) -> Result<(PlanState, CycleRecord)> {
    config.validate()?;
    let (trajectory, cost, arrival, decision) = match &previous {
        None => {
            let (t, c, a) = plan_from_scratch(&current, &goal, now, &seq, config)?;
            (t, c, a, ReplanDecision::ReinitStraightLine)
        }
        Some(prev) => {
            let (warm, arrival) = shifted_plan(prev, &current, now, config)?;
            let graph = build_plan_graph(&current, &goal, &seq, arrival, config)?;
            let current_cost = graph.total_cost(warm.states());
            let current_valid = check_validity(&warm, 1, &seq, config).valid;
            let reopt = lm_optimize(&graph, &warm, &config.lm)?;
            let reopt_valid = check_validity(&reopt.trajectory, 1, &seq, config).valid;
            match replan_decision(current_cost, current_valid, reopt.final_cost(), reopt_valid, config.rho) {
                ReplanDecision::Keep => (warm, current_cost, arrival, ReplanDecision::Keep),
                ReplanDecision::AdoptReoptimized => {
                    let c = reopt.final_cost();
                    (reopt.trajectory, c, arrival, ReplanDecision::AdoptReoptimized)
                }
                ReplanDecision::ReinitStraightLine => {
                    let (t, c, a) = plan_from_scratch(&current, &goal, now, &seq, config)?;
                    (t, c, a, ReplanDecision::ReinitStraightLine)
                }
            }
        }
    };
    // the start prior is soft; pin the executed state exactly
    let mut trajectory = trajectory;
    trajectory.states_mut()[0] = current;
    let validity = check_validity(&trajectory, 1, &seq, config);
    let ttg = remaining_length(&trajectory, 1, arrival, current.position) / config.nominal_speed;
    let state = PlanState {
        trajectory,
        cost,
        execution_index: 0,
        sequence: seq,
        goal,
        arrival_index: arrival,
        time_to_goal: ttg,
        terminal: false,
    };
    let record = CycleRecord { time: now, cost, decision, min_clearance: validity.min_clearance };
    Ok((state, record))
}
