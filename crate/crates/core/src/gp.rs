//! Constant-velocity Gaussian-process prior (white noise on acceleration).
//!
//! States stack position and velocity as `[px, py, vx, vy]`. Between two
//! support states the prior is Markov, so the trajectory prior factorises into
//! pairwise terms `½·rᵀQ⁻¹r` with `r = x₁ − Φ·x₀`.

use nalgebra::{Matrix4, Vector4};

use crate::{Error, Result, Vec2};

pub type StateVector = Vector4<f64>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CVState {
    pub position: Vec2,
    pub velocity: Vec2,
}

impl CVState {
    pub fn new(position: Vec2, velocity: Vec2) -> Self {
        Self { position, velocity }
    }

    pub fn stationary(position: Vec2) -> Self {
        Self { position, velocity: Vec2::zeros() }
    }

    pub fn to_vector(&self) -> StateVector {
        StateVector::new(self.position.x, self.position.y, self.velocity.x, self.velocity.y)
    }

    pub fn from_vector(v: &StateVector) -> Self {
        Self { position: Vec2::new(v[0], v[1]), velocity: Vec2::new(v[2], v[3]) }
    }

    pub fn is_finite(&self) -> bool {
        self.to_vector().iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GPConfig {
    /// Power-spectral density of the acceleration noise, per axis.
    pub qc: f64,
    /// Support spacing in seconds.
    pub dt: f64,
}

impl GPConfig {
    pub fn new(qc: f64, dt: f64) -> Result<Self> {
        if !(qc > 0.0) || !qc.is_finite() {
            return Err(Error::InvalidParameter(format!("Q_c {qc} must be positive")));
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidParameter(format!("dt {dt} must be positive")));
        }
        Ok(Self { qc, dt })
    }
}

/// `[[I, dt·I], [0, I]]`.
pub fn cv_transition(dt: f64) -> Matrix4<f64> {
    let mut phi = Matrix4::identity();
    phi[(0, 2)] = dt;
    phi[(1, 3)] = dt;
    phi
}

fn blocks(a: f64, b: f64, c: f64) -> Matrix4<f64> {
    Matrix4::new(
        a, 0.0, b, 0.0, //
        0.0, a, 0.0, b, //
        b, 0.0, c, 0.0, //
        0.0, b, 0.0, c,
    )
}

/// Process noise accumulated over `dt`:
/// `Q_c·[[dt³/3·I, dt²/2·I], [dt²/2·I, dt·I]]`.
pub fn cv_process_noise(dt: f64, qc: f64) -> Matrix4<f64> {
    blocks(qc * dt.powi(3) / 3.0, qc * dt.powi(2) / 2.0, qc * dt)
}

/// Closed-form inverse of [`cv_process_noise`].
pub fn cv_process_noise_inverse(dt: f64, qc: f64) -> Matrix4<f64> {
    blocks(12.0 / (qc * dt.powi(3)), -6.0 / (qc * dt.powi(2)), 4.0 / (qc * dt))
}

/// `x_next − Φ(dt)·x`.
pub fn gp_prior_residual(x: &CVState, x_next: &CVState, dt: f64) -> StateVector {
    x_next.to_vector() - cv_transition(dt) * x.to_vector()
}

/// `½·rᵀQ⁻¹r` for one support pair.
pub fn gp_prior_cost(x: &CVState, x_next: &CVState, config: &GPConfig) -> f64 {
    let r = gp_prior_residual(x, x_next, config.dt);
    0.5 * (r.transpose() * cv_process_noise_inverse(config.dt, config.qc) * r)[(0, 0)]
}

/// Posterior mean of the GP at `tau ∈ [0, dt]` after `x`, given the two
/// neighbouring support states: `Λ·x + Ψ·x_next` with
/// `Ψ = Q(τ)Φ(dt−τ)ᵀQ(dt)⁻¹` and `Λ = Φ(τ) − Ψ·Φ(dt)`.
pub fn gp_interpolate(x: &CVState, x_next: &CVState, tau: f64, config: &GPConfig) -> Result<CVState> {
    let dt = config.dt;
    if !(-1e-12..=dt + 1e-12).contains(&tau) {
        return Err(Error::InterpolationOutOfRange { tau, dt });
    }
    let tau = tau.clamp(0.0, dt);
    if tau == 0.0 {
        return Ok(*x);
    }
    if tau == dt {
        return Ok(*x_next);
    }
    let psi = cv_process_noise(tau, config.qc)
        * cv_transition(dt - tau).transpose()
        * cv_process_noise_inverse(dt, config.qc);
    let lambda = cv_transition(tau) - psi * cv_transition(dt);
    Ok(CVState::from_vector(&(lambda * x.to_vector() + psi * x_next.to_vector())))
}

/// Support states at `t0 + i·dt`, `i = 0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct GPTrajectory {
    states: Vec<CVState>,
    t0: f64,
    dt: f64,
}

impl GPTrajectory {
    pub fn new(states: Vec<CVState>, t0: f64, dt: f64) -> Result<Self> {
        if states.len() < 2 {
            return Err(Error::InvalidParameter("a trajectory needs at least two support states".into()));
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidParameter(format!("dt {dt} must be positive")));
        }
        Ok(Self { states, t0, dt })
    }

    pub fn states(&self) -> &[CVState] {
        &self.states
    }

    pub fn states_mut(&mut self) -> &mut [CVState] {
        &mut self.states
    }

    pub fn into_states(self) -> Vec<CVState> {
        self.states
    }

    /// Number of intervals `N` (one fewer than the support count).
    pub fn intervals(&self) -> usize {
        self.states.len() - 1
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn time_of(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn end_time(&self) -> f64 {
        self.time_of(self.intervals())
    }

    pub fn first(&self) -> &CVState {
        &self.states[0]
    }

    pub fn last(&self) -> &CVState {
        &self.states[self.states.len() - 1]
    }

    /// GP-interpolated state at time `t`, clamped to the trajectory span.
    pub fn state_at(&self, t: f64, qc: f64) -> CVState {
        if t <= self.t0 {
            return self.states[0];
        }
        if t >= self.end_time() {
            return *self.last();
        }
        let s = (t - self.t0) / self.dt;
        let nearest = s.round() as usize;
        if t == self.time_of(nearest) {
            return self.states[nearest];
        }
        let i = (s.floor() as usize).min(self.intervals() - 1);
        let tau = (t - self.time_of(i)).clamp(0.0, self.dt);
        let config = GPConfig { qc, dt: self.dt };
        gp_interpolate(&self.states[i], &self.states[i + 1], tau, &config).expect("tau clamped into [0, dt]")
    }

    /// Piecewise-linear position between supports, clamped to the span.
    pub fn linear_position_at(&self, t: f64) -> Vec2 {
        if t <= self.t0 {
            return self.states[0].position;
        }
        if t >= self.end_time() {
            return self.last().position;
        }
        let s = (t - self.t0) / self.dt;
        let i = (s.floor() as usize).min(self.intervals() - 1);
        let f = s - i as f64;
        self.states[i].position * (1.0 - f) + self.states[i + 1].position * f
    }

    /// Sum of pairwise GP prior costs.
    pub fn prior_cost(&self, qc: f64) -> f64 {
        let config = GPConfig { qc, dt: self.dt };
        self.states.windows(2).map(|w| gp_prior_cost(&w[0], &w[1], &config)).sum()
    }
}

/// `N + 1` states evenly spaced from `start` to `goal` at constant velocity
/// `(goal − start)/(N·dt)`. The start state's own velocity is not used.
pub fn straight_line_init(start: &CVState, goal: Vec2, intervals: usize, dt: f64, t0: f64) -> Result<GPTrajectory> {
    if intervals == 0 {
        return Err(Error::HorizonTooShort);
    }
    let delta = goal - start.position;
    let velocity = delta / (intervals as f64 * dt);
    let states = (0..=intervals)
        .map(|i| CVState::new(start.position + delta * (i as f64 / intervals as f64), velocity))
        .collect();
    GPTrajectory::new(states, t0, dt)
}
