//! Factor graphs over GP support states.
//!
//! Every factor reports a *whitened* residual `e` (so its cost is `½‖e‖²`)
//! together with Jacobian blocks for the one or two support states it touches.
//! Residuals are padded to four rows with zeros, which leaves `JᵀJ` and `Jᵀe`
//! unchanged and keeps all blocks fixed-size.

mod lm;
mod normal;

use std::sync::Arc;

use nalgebra::{Matrix4, Vector4};

use crate::field::DistanceField;
use crate::gp::{cv_process_noise_inverse, cv_transition, CVState, StateVector};
use crate::{Error, Result, Vec2};

pub use lm::{lm_optimize, LMConfig, LMResult, Termination};
pub use normal::NormalEquations;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorKind {
    StartPrior,
    GoalPrior,
    Gp,
    Obstacle,
    Robot,
}

#[derive(Debug, Clone)]
pub enum Factor {
    /// `½‖W·(x − target)‖²`; `WᵀW` is the information matrix.
    Prior { kind: FactorKind, index: usize, target: StateVector, sqrt_info: Matrix4<f64> },
    /// Constant-velocity prior between supports `index` and `index + 1`.
    Gp { index: usize, phi: Matrix4<f64>, sqrt_info: Matrix4<f64> },
    /// Hinge on the field clearance of the support's position.
    Obstacle { index: usize, field: Arc<DistanceField>, epsilon: f64, sigma: f64 },
    /// Hinge on the distance between the support's position and a robot.
    Robot { index: usize, robot: Vec2, epsilon: f64, sigma: f64 },
}

/// Upper-triangular `W` with `WᵀW = Σ⁻¹`.
fn sqrt_information(covariance: &Matrix4<f64>) -> Result<Matrix4<f64>> {
    let info = covariance
        .try_inverse()
        .ok_or_else(|| Error::InvalidParameter("covariance is singular".into()))?;
    let chol = info
        .cholesky()
        .ok_or_else(|| Error::InvalidParameter("covariance is not positive definite".into()))?;
    Ok(chol.l().transpose())
}

pub fn isotropic(sigma: f64) -> Matrix4<f64> {
    Matrix4::identity() * sigma * sigma
}

impl Factor {
    pub fn start_prior(index: usize, target: CVState, covariance: &Matrix4<f64>) -> Result<Self> {
        Ok(Self::Prior {
            kind: FactorKind::StartPrior,
            index,
            target: target.to_vector(),
            sqrt_info: sqrt_information(covariance)?,
        })
    }

    pub fn goal_prior(index: usize, target: CVState, covariance: &Matrix4<f64>) -> Result<Self> {
        Ok(Self::Prior {
            kind: FactorKind::GoalPrior,
            index,
            target: target.to_vector(),
            sqrt_info: sqrt_information(covariance)?,
        })
    }

    /// Goal prior on position only; the final velocity is left free.
    pub fn goal_position_prior(index: usize, position: Vec2, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::InvalidParameter(format!("goal sigma {sigma} must be positive")));
        }
        let mut sqrt_info = Matrix4::zeros();
        sqrt_info[(0, 0)] = 1.0 / sigma;
        sqrt_info[(1, 1)] = 1.0 / sigma;
        Ok(Self::Prior {
            kind: FactorKind::GoalPrior,
            index,
            target: StateVector::new(position.x, position.y, 0.0, 0.0),
            sqrt_info,
        })
    }

    pub fn gp(index: usize, dt: f64, qc: f64) -> Result<Self> {
        let info = cv_process_noise_inverse(dt, qc);
        let chol = info
            .cholesky()
            .ok_or_else(|| Error::InvalidParameter(format!("GP prior with dt {dt}, Q_c {qc} is degenerate")))?;
        Ok(Self::Gp { index, phi: cv_transition(dt), sqrt_info: chol.l().transpose() })
    }

    pub fn obstacle(index: usize, field: Arc<DistanceField>, epsilon: f64, sigma: f64) -> Self {
        Self::Obstacle { index, field, epsilon, sigma }
    }

    pub fn robot(index: usize, robot: Vec2, epsilon: f64, sigma: f64) -> Self {
        Self::Robot { index, robot, epsilon, sigma }
    }

    pub fn kind(&self) -> FactorKind {
        match self {
            Self::Prior { kind, .. } => *kind,
            Self::Gp { .. } => FactorKind::Gp,
            Self::Obstacle { .. } => FactorKind::Obstacle,
            Self::Robot { .. } => FactorKind::Robot,
        }
    }

    /// Support indices this factor reads.
    pub fn indices(&self) -> (usize, Option<usize>) {
        match self {
            Self::Prior { index, .. } | Self::Obstacle { index, .. } | Self::Robot { index, .. } => (*index, None),
            Self::Gp { index, .. } => (*index, Some(index + 1)),
        }
    }

    /// Whitened residual and its Jacobian blocks w.r.t. the touched states.
    pub fn linearize(&self, states: &[CVState]) -> Linearized {
        match self {
            Self::Prior { index, target, sqrt_info, .. } => {
                let r = states[*index].to_vector() - target;
                Linearized { error: sqrt_info * r, first: (*index, *sqrt_info), second: None }
            }
            Self::Gp { index, phi, sqrt_info } => {
                let r = states[index + 1].to_vector() - phi * states[*index].to_vector();
                Linearized {
                    error: sqrt_info * r,
                    first: (*index, -(sqrt_info * phi)),
                    second: Some((index + 1, *sqrt_info)),
                }
            }
            Self::Obstacle { index, field, epsilon, sigma } => {
                let hinge = obstacle_factor_error(&states[*index], field, *epsilon, *sigma);
                hinge_linearized(*index, &hinge, *sigma)
            }
            Self::Robot { index, robot, epsilon, sigma } => {
                let hinge = robot_factor_error(&states[*index], *robot, *epsilon, *sigma);
                hinge_linearized(*index, &hinge, *sigma)
            }
        }
    }

    pub fn cost(&self, states: &[CVState]) -> f64 {
        match self {
            Self::Obstacle { index, field, epsilon, sigma } => {
                obstacle_factor_error(&states[*index], field, *epsilon, *sigma).cost
            }
            Self::Robot { index, robot, epsilon, sigma } => robot_factor_error(&states[*index], *robot, *epsilon, *sigma).cost,
            _ => 0.5 * self.linearize(states).error.norm_squared(),
        }
    }
}

fn hinge_linearized(index: usize, hinge: &HingeError, sigma: f64) -> Linearized {
    let mut jac = Matrix4::zeros();
    jac[(0, 0)] = hinge.jacobian.x / sigma;
    jac[(0, 1)] = hinge.jacobian.y / sigma;
    Linearized { error: Vector4::new(hinge.hinge / sigma, 0.0, 0.0, 0.0), first: (index, jac), second: None }
}

/// Whitened residual of one factor with Jacobian blocks `(index, ∂e/∂x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linearized {
    pub error: Vector4<f64>,
    pub first: (usize, Matrix4<f64>),
    pub second: Option<(usize, Matrix4<f64>)>,
}

/// Residual `x − target` and cost `½·rᵀΣ⁻¹r`.
pub fn prior_factor_error(x: &CVState, target: &CVState, covariance: &Matrix4<f64>) -> Result<(StateVector, f64)> {
    let r = x.to_vector() - target.to_vector();
    let info = covariance
        .try_inverse()
        .ok_or_else(|| Error::InvalidParameter("covariance is singular".into()))?;
    Ok((r, 0.5 * (r.transpose() * info * r)[(0, 0)]))
}

/// Hinge residual with cost `½·h²/σ²` and `∂h/∂position`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HingeError {
    pub hinge: f64,
    pub cost: f64,
    pub jacobian: Vec2,
    /// False when the obstacle field was sampled outside its bounds.
    pub in_bounds: bool,
}

/// `h = ε − d` while the field clearance `d ≤ ε`, else 0. Samples outside the
/// field count as `d = 0`.
pub fn obstacle_factor_error(state: &CVState, field: &DistanceField, epsilon: f64, sigma: f64) -> HingeError {
    let s = field.sample(state.position);
    if !s.in_bounds {
        return HingeError { hinge: epsilon, cost: 0.5 * (epsilon / sigma).powi(2), jacobian: Vec2::zeros(), in_bounds: false };
    }
    if s.distance > epsilon {
        return HingeError { hinge: 0.0, cost: 0.0, jacobian: Vec2::zeros(), in_bounds: true };
    }
    let h = epsilon - s.distance;
    HingeError { hinge: h, cost: 0.5 * (h / sigma).powi(2), jacobian: -s.gradient, in_bounds: true }
}

/// `h = ε_r − ‖p − x_r‖` within `ε_r` of the robot, else 0. At the robot's
/// exact position the distance gradient is taken along +x.
pub fn robot_factor_error(state: &CVState, robot: Vec2, epsilon: f64, sigma: f64) -> HingeError {
    let offset = state.position - robot;
    let dist = offset.norm();
    if dist > epsilon {
        return HingeError { hinge: 0.0, cost: 0.0, jacobian: Vec2::zeros(), in_bounds: true };
    }
    let direction = if dist > 0.0 { offset / dist } else { Vec2::new(1.0, 0.0) };
    let h = epsilon - dist;
    HingeError { hinge: h, cost: 0.5 * (h / sigma).powi(2), jacobian: -direction, in_bounds: true }
}

#[derive(Debug, Clone, Default)]
pub struct FactorGraph {
    factors: Vec<Factor>,
    variables: usize,
}

impl FactorGraph {
    pub fn new(variables: usize) -> Self {
        Self { factors: Vec::new(), variables }
    }

    pub fn add(&mut self, factor: Factor) -> &mut Self {
        self.factors.push(factor);
        self
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn variables(&self) -> usize {
        self.variables
    }

    pub fn count(&self, kind: FactorKind) -> usize {
        self.factors.iter().filter(|f| f.kind() == kind).count()
    }

    /// Checks index bounds, a single start prior, and that every support is
    /// touched by some factor.
    pub fn validate(&self) -> Result<()> {
        let starts = self.count(FactorKind::StartPrior);
        if starts != 1 {
            return Err(Error::InvalidGraph(format!("expected exactly one start prior, found {starts}")));
        }
        let mut touched = vec![false; self.variables];
        for f in &self.factors {
            let (a, b) = f.indices();
            for i in std::iter::once(a).chain(b) {
                if i >= self.variables {
                    return Err(Error::InvalidGraph(format!(
                        "factor {:?} references support {i} of {}",
                        f.kind(),
                        self.variables
                    )));
                }
                touched[i] = true;
            }
        }
        if let Some(i) = touched.iter().position(|t| !t) {
            return Err(Error::InvalidGraph(format!("support {i} is not connected to any factor")));
        }
        Ok(())
    }

    pub fn total_cost(&self, states: &[CVState]) -> f64 {
        self.factors.iter().map(|f| f.cost(states)).sum()
    }

    /// Gauss–Newton normal equations `JᵀJ`, `Jᵀe` at `states`.
    pub fn linearize(&self, states: &[CVState]) -> NormalEquations {
        let mut ne = NormalEquations::zeros(self.variables);
        for f in &self.factors {
            ne.accumulate(&f.linearize(states));
        }
        ne
    }
}
