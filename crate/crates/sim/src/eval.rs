//! Sliding-window prediction benchmark over recorded tracks.

use std::fmt::Write as _;
use std::str::FromStr;
use std::sync::Arc;

use predplan_core::field::DistanceField;
use predplan_core::intent::{GoalSet, TrackHistory, TrackSample};
use predplan_core::predict::{ade, cvm_predict, fde, lvm_predict, predict_trajectory, PositionAt, PredictionConfig};
use predplan_core::Vec2;

use crate::error::{SimError, SimResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Method {
    Cvm,
    Lvm,
    Proposed,
    ProposedNoIntent,
    ProposedNoRobot,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Cvm, Method::Lvm, Method::Proposed, Method::ProposedNoIntent, Method::ProposedNoRobot];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Cvm => "cvm",
            Method::Lvm => "lvm",
            Method::Proposed => "proposed",
            Method::ProposedNoIntent => "proposed_no_intent",
            Method::ProposedNoRobot => "proposed_no_robot",
        }
    }
}

impl FromStr for Method {
    type Err = SimError;

    fn from_str(s: &str) -> SimResult<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| SimError::Invalid(format!("unknown method {s:?}")))
    }
}

#[derive(Debug, Clone)]
pub struct EvalConfig {
    pub prediction: PredictionConfig,
    /// Observed seconds before each prediction time.
    pub observation: f64,
    /// Seconds between successive prediction times.
    pub stride: f64,
    pub methods: Vec<Method>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { prediction: PredictionConfig::default(), observation: 2.0, stride: 1.0, methods: Method::ALL.to_vec() }
    }
}

/// Mean and standard error of one method at one horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HorizonStats {
    pub method: Method,
    pub horizon: f64,
    pub ade_mean: f64,
    pub ade_stderr: f64,
    pub fde_mean: f64,
    pub fde_stderr: f64,
    pub windows: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub rows: Vec<HorizonStats>,
    /// Indices of tracks too short for a single window.
    pub skipped: Vec<usize>,
}

impl EvalReport {
    pub fn get(&self, method: Method, horizon: f64) -> Option<&HorizonStats> {
        self.rows.iter().find(|r| r.method == method && (r.horizon - horizon).abs() < 1e-9)
    }

    pub fn ade_csv(&self) -> String {
        let mut out = String::from("method,horizon,ade_mean,ade_stderr\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{:.6},{:.6}", r.method.as_str(), r.horizon, r.ade_mean, r.ade_stderr);
        }
        out
    }

    pub fn fde_csv(&self) -> String {
        let mut out = String::from("method,horizon,fde_mean,fde_stderr\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{:.6},{:.6}", r.method.as_str(), r.horizon, r.fde_mean, r.fde_stderr);
        }
        out
    }
}

fn mean_stderr(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn predict(
    method: Method,
    observed: &TrackHistory,
    goals: &GoalSet,
    env: &Arc<DistanceField>,
    robot: Option<Vec2>,
    config: &PredictionConfig,
) -> SimResult<Box<dyn PositionAt>> {
    let horizon = config.max_horizon();
    Ok(match method {
        Method::Cvm => Box::new(cvm_predict(observed, horizon, config.dt)?),
        Method::Lvm => Box::new(lvm_predict(observed, horizon, config.dt)?),
        Method::Proposed => Box::new(predict_trajectory(observed, goals, env, robot, config)?),
        Method::ProposedNoIntent => {
            let c = PredictionConfig { use_intent: false, ..config.clone() };
            Box::new(predict_trajectory(observed, goals, env, robot, &c)?)
        }
        Method::ProposedNoRobot => {
            let c = PredictionConfig { use_robot_factor: false, ..config.clone() };
            Box::new(predict_trajectory(observed, goals, env, robot, &c)?)
        }
    })
}

/// Prediction times for one track: every `stride` seconds once `observation`
/// seconds have been seen, while the longest horizon still has ground truth.
pub fn window_times(track: &TrackHistory, observation: f64, stride: f64, max_horizon: f64) -> Vec<f64> {
    let (Some(first), Some(last)) = (track.samples().first(), track.last()) else { return Vec::new() };
    let mut out = Vec::new();
    let mut k = 0usize;
    loop {
        let t = first.t + observation + k as f64 * stride;
        if t + max_horizon > last.t + 1e-9 {
            break;
        }
        out.push(t);
        k += 1;
    }
    out
}

/// Evaluates every configured method on every window of every track.
/// `robot`, when given, supplies the robot position at each prediction time.
pub fn run_prediction_eval(
    tracks: &[TrackHistory],
    env: &Arc<DistanceField>,
    goals: &GoalSet,
    robot: Option<&dyn Fn(f64) -> Vec2>,
    config: &EvalConfig,
) -> SimResult<EvalReport> {
    config.prediction.validate()?;
    if !(config.observation > 0.0) || !(config.stride > 0.0) {
        return Err(SimError::Invalid("observation and stride must be positive".into()));
    }
    let horizons = &config.prediction.horizons;
    let max_horizon = config.prediction.max_horizon();
    let cells = config.methods.len() * horizons.len();
    let mut ades: Vec<Vec<f64>> = vec![Vec::new(); cells];
    let mut fdes: Vec<Vec<f64>> = vec![Vec::new(); cells];
    let mut skipped = Vec::new();

    for (ti, track) in tracks.iter().enumerate() {
        let times = window_times(track, config.observation, config.stride, max_horizon);
        if times.is_empty() {
            skipped.push(ti);
            continue;
        }
        for &t in &times {
            let observed = TrackHistory::new(
                track.samples().iter().filter(|s| s.t >= t - config.observation - 1e-9 && s.t <= t + 1e-9).copied().collect(),
            )?;
            let robot_at = robot.map(|r| r(t));
            for (mi, &method) in config.methods.iter().enumerate() {
                let pred = predict(method, &observed, goals, env, robot_at, &config.prediction)?;
                for (hi, &h) in horizons.iter().enumerate() {
                    let truth: Vec<TrackSample> =
                        track.samples().iter().filter(|s| s.t > t + 1e-9 && s.t <= t + h + 1e-9).copied().collect();
                    if truth.is_empty() {
                        continue;
                    }
                    let cell = mi * horizons.len() + hi;
                    ades[cell].push(ade(pred.as_ref(), &truth)?);
                    fdes[cell].push(fde(pred.as_ref(), &truth)?);
                }
            }
        }
    }

    let mut rows = Vec::with_capacity(cells);
    for (mi, &method) in config.methods.iter().enumerate() {
        for (hi, &horizon) in horizons.iter().enumerate() {
            let cell = mi * horizons.len() + hi;
            let (ade_mean, ade_stderr) = mean_stderr(&ades[cell]);
            let (fde_mean, fde_stderr) = mean_stderr(&fdes[cell]);
            rows.push(HorizonStats { method, horizon, ade_mean, ade_stderr, fde_mean, fde_stderr, windows: ades[cell].len() });
        }
    }
    Ok(EvalReport { rows, skipped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use predplan_core::field::{compute_edt, GridGeometry, OccupancyGrid};

    fn open() -> Arc<DistanceField> {
        let g = GridGeometry::new(Vec2::new(-5.0, -5.0), 0.2, 150, 100).unwrap();
        Arc::new(compute_edt(&OccupancyGrid::new(g)))
    }

    fn line(v: Vec2, seconds: f64) -> TrackHistory {
        let n = (seconds / 0.1).round() as usize;
        TrackHistory::new((0..=n).map(|k| {
            let t = k as f64 * 0.1;
            TrackSample::new(t, v.x * t, v.y * t)
        }).collect()).unwrap()
    }

    #[test]
    fn exact_cv_tracks_give_near_zero_error_for_all_methods() {
        let tracks = [line(Vec2::new(1.0, 0.2), 12.0), line(Vec2::new(0.8, -0.4), 11.0)];
        let report = run_prediction_eval(&tracks, &open(), &GoalSet::default(), None, &EvalConfig::default()).unwrap();
        assert_eq!(report.rows.len(), 20);
        for r in &report.rows {
            assert!(r.windows > 0);
            assert!(r.ade_mean < 1e-3, "{r:?}");
        }
    }

    #[test]
    fn short_tracks_are_skipped() {
        let tracks = [line(Vec2::new(1.0, 0.0), 5.0), line(Vec2::new(1.0, 0.0), 11.0)];
        let report = run_prediction_eval(&tracks, &open(), &GoalSet::default(), None, &EvalConfig::default()).unwrap();
        assert_eq!(report.skipped, vec![0]);
    }

    #[test]
    fn csv_headers_and_stderr() {
        let (m, s) = mean_stderr(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - (1.0f64 / 3.0).sqrt()).abs() < 1e-12);
        let report = EvalReport { rows: Vec::new(), skipped: Vec::new() };
        assert_eq!(report.ade_csv(), "method,horizon,ade_mean,ade_stderr\n");
        assert_eq!(report.fde_csv(), "method,horizon,fde_mean,fde_stderr\n");
    }

    #[test]
    fn windows_stop_before_truth_runs_out() {
        let t = line(Vec2::new(1.0, 0.0), 12.0);
        assert_eq!(window_times(&t, 2.0, 1.0, 8.0), vec![2.0, 3.0, 4.0]);
    }
}
