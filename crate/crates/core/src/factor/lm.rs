use std::io::Write;

use crate::gp::{CVState, GPTrajectory};
use crate::{Error, Result};

use super::FactorGraph;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LMConfig {
    pub initial_damping: f64,
    pub max_iterations: usize,
    pub relative_tolerance: f64,
    pub damping_up: f64,
    pub damping_down: f64,
    /// Damping above this means no descent step exists at useful scale.
    pub max_damping: f64,
}

impl Default for LMConfig {
    fn default() -> Self {
        Self {
            initial_damping: 0.01,
            max_iterations: 100,
            relative_tolerance: 1e-6,
            damping_up: 10.0,
            damping_down: 0.1,
            max_damping: 1e10,
        }
    }
}

impl LMConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.initial_damping,
            self.relative_tolerance,
            self.damping_up,
            self.damping_down,
            self.max_damping,
        ]
        .iter()
        .all(|v| *v > 0.0 && v.is_finite());
        if !positive || self.max_iterations == 0 {
            return Err(Error::InvalidParameter(format!("LM settings must be positive: {self:?}")));
        }
        if self.damping_up <= 1.0 || self.damping_down >= 1.0 {
            return Err(Error::InvalidParameter("damping must grow on rejection and shrink on acceptance".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Relative cost decrease fell below tolerance.
    Converged,
    ZeroCost,
    MaxIterations,
    DampingOverflow,
}

#[derive(Debug, Clone)]
pub struct LMResult {
    pub trajectory: GPTrajectory,
    /// Initial cost followed by the cost after each accepted step.
    pub cost_trace: Vec<f64>,
    pub iterations: usize,
    pub termination: Termination,
}

impl LMResult {
    pub fn final_cost(&self) -> f64 {
        *self.cost_trace.last().expect("trace holds the initial cost")
    }

    pub fn write_cost_trace<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "iteration,cost")?;
        for (i, c) in self.cost_trace.iter().enumerate() {
            writeln!(out, "{i},{c:.12e}")?;
        }
        Ok(())
    }
}

fn apply(states: &[CVState], delta: &[nalgebra::Vector4<f64>]) -> Vec<CVState> {
    states
        .iter()
        .zip(delta)
        .map(|(s, d)| CVState::from_vector(&(s.to_vector() + d)))
        .collect()
}

pub fn lm_optimize(graph: &FactorGraph, init: &GPTrajectory, config: &LMConfig) -> Result<LMResult> {
    config.validate()?;
    graph.validate()?;
    if init.states().len() != graph.variables() {
        return Err(Error::InvalidGraph(format!(
            "trajectory has {} supports, graph expects {}",
            init.states().len(),
            graph.variables()
        )));
    }
    let mut states = init.states().to_vec();
    let mut cost = graph.total_cost(&states);
    if !cost.is_finite() || !states.iter().all(CVState::is_finite) {
        return Err(Error::InvalidInitialization);
    }
    let mut trace = vec![cost];
    let mut damping = config.initial_damping;
    let mut iterations = 0;
    let mut termination = Termination::MaxIterations;

    if cost == 0.0 {
        termination = Termination::ZeroCost;
    } else {
        'outer: while iterations < config.max_iterations {
            iterations += 1;
            let system = graph.linearize(&states);
            loop {
                if let Some(delta) = system.solve(damping) {
                    let candidate = apply(&states, &delta);
                    let candidate_cost = graph.total_cost(&candidate);
                    if candidate_cost.is_finite() && candidate_cost < cost {
                        let decrease = (cost - candidate_cost) / cost;
                        states = candidate;
                        cost = candidate_cost;
                        trace.push(cost);
                        damping *= config.damping_down;
                        if cost == 0.0 {
                            termination = Termination::ZeroCost;
                            break 'outer;
                        }
                        if decrease < config.relative_tolerance {
                            termination = Termination::Converged;
                            break 'outer;
                        }
                        break;
                    }
                }
                damping *= config.damping_up;
                if damping > config.max_damping {
                    termination = Termination::DampingOverflow;
                    break 'outer;
                }
            }
        }
    }

    Ok(LMResult {
        trajectory: GPTrajectory::new(states, init.t0(), init.dt())?,
        cost_trace: trace,
        iterations,
        termination,
    })
}
