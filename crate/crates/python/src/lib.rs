//! Python bindings: distance fields, prediction, single-shot planning and
//! closed-loop scenarios.

use std::path::PathBuf;
use std::sync::Arc;

use predplan_core::factor::lm_optimize;
use predplan_core::field::{composite_min, compute_edt, disc_field, CompositeSequence, GridGeometry, OccupancyGrid};
use predplan_core::gp::{straight_line_init, CVState, GPTrajectory};
use predplan_core::intent::{GoalSet, TrackHistory, TrackSample};
use predplan_core::planner::{build_plan_graph, PlannerConfig};
use predplan_core::predict::{cvm_predict, predict_trajectory, PositionAt, PredictionConfig};
use predplan_core::Vec2;
use predplan_sim::{run_closed_loop, Scenario, SimConfig, SimMode};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn v(p: (f64, f64)) -> Vec2 {
    Vec2::new(p.0, p.1)
}

/// Euclidean distance field on a regular grid.
#[pyclass(name = "DistanceField", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyDistanceField {
    inner: Arc<predplan_core::field::DistanceField>,
}

#[pymethods]
impl PyDistanceField {
    /// Exact EDT of rows of occupancy flags; row 0 is the bottom row.
    #[new]
    #[pyo3(signature = (occupied, cell_size, origin = (0.0, 0.0)))]
    fn new(occupied: Vec<Vec<bool>>, cell_size: f64, origin: (f64, f64)) -> PyResult<Self> {
        let height = occupied.len();
        let width = occupied.first().map_or(0, Vec::len);
        if occupied.iter().any(|r| r.len() != width) {
            return Err(PyValueError::new_err("rows must all have the same length"));
        }
        let g = GridGeometry::new(v(origin), cell_size, width, height).map_err(value_err)?;
        let grid = OccupancyGrid::from_cells(g, occupied.into_iter().flatten().collect()).map_err(value_err)?;
        Ok(Self { inner: Arc::new(compute_edt(&grid)) })
    }

    /// Parses the map text format and transforms it.
    #[staticmethod]
    fn from_map(text: &str) -> PyResult<Self> {
        let grid = OccupancyGrid::from_text(text).map_err(value_err)?;
        Ok(Self { inner: Arc::new(compute_edt(&grid)) })
    }

    /// `(distance, (dx, dy), in_bounds)` by bilinear interpolation.
    fn sample(&self, x: f64, y: f64) -> (f64, (f64, f64), bool) {
        let s = self.inner.sample(Vec2::new(x, y));
        (s.distance, (s.gradient.x, s.gradient.y), s.in_bounds)
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        let g = self.inner.geometry();
        (g.height(), g.width())
    }

    #[getter]
    fn cell_size(&self) -> f64 {
        self.inner.geometry().cell_size()
    }

    /// Row-major values, row 0 first.
    fn values(&self) -> Vec<Vec<f64>> {
        self.inner.values().chunks(self.inner.geometry().width()).map(<[f64]>::to_vec).collect()
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }

    /// Pointwise minimum with disc overlays of `radius` at `centers`.
    #[pyo3(signature = (centers, radius, reach = 1.2))]
    fn with_discs(&self, centers: Vec<(f64, f64)>, radius: f64, reach: f64) -> PyResult<Self> {
        let prim = disc_field(radius, reach, self.inner.geometry()).map_err(value_err)?;
        let overlays: Vec<_> = centers.into_iter().map(|c| (&prim, v(c))).collect();
        Ok(Self { inner: Arc::new(composite_min(&self.inner, &overlays).map_err(value_err)?) })
    }
}

/// Outcome of one prediction.
#[pyclass(name = "Prediction", frozen, get_all)]
pub struct PyPrediction {
    mode: String,
    times: Vec<f64>,
    positions: Vec<(f64, f64)>,
    goal: Option<(f64, f64)>,
    posterior: Option<Vec<f64>>,
}

fn history(track: Vec<(f64, f64, f64)>) -> PyResult<TrackHistory> {
    TrackHistory::new(track.into_iter().map(|(t, x, y)| TrackSample::new(t, x, y)).collect()).map_err(value_err)
}

fn sampled(pred: &impl PositionAt, t0: f64, horizon: f64, dt: f64) -> (Vec<f64>, Vec<(f64, f64)>) {
    let steps = (horizon / dt).round() as usize;
    let times: Vec<f64> = (0..=steps).map(|k| t0 + k as f64 * dt).collect();
    let positions = times.iter().map(|&t| pred.position_at(t)).map(|p| (p.x, p.y)).collect();
    (times, positions)
}

/// Goal-directed prediction of a `(t, x, y)` track; `goals` holds `(x, y, count)`.
#[pyfunction]
#[pyo3(signature = (track, goals, field, robot = None, use_intent = true))]
fn predict(
    track: Vec<(f64, f64, f64)>,
    goals: Vec<(f64, f64, f64)>,
    field: &PyDistanceField,
    robot: Option<(f64, f64)>,
    use_intent: bool,
) -> PyResult<PyPrediction> {
    let h = history(track)?;
    let mut set = GoalSet::default();
    for (x, y, n) in goals {
        set.add_goal(Vec2::new(x, y), n).map_err(value_err)?;
    }
    let config = PredictionConfig { use_intent, ..PredictionConfig::default() };
    let p = predict_trajectory(&h, &set, &field.inner, robot.map(v), &config).map_err(value_err)?;
    let t0 = h.last().map_or(0.0, |s| s.t);
    let (times, positions) = sampled(&p, t0, config.max_horizon(), config.dt);
    Ok(PyPrediction {
        mode: format!("{:?}", p.mode),
        times,
        positions,
        goal: p.used_goal.map(|g| (g.position.x, g.position.y)),
        posterior: p.posterior.map(|q| q.probabilities),
    })
}

/// Constant-velocity extrapolation of a `(t, x, y)` track.
#[pyfunction]
#[pyo3(signature = (track, horizon = 8.0, dt = 0.5))]
fn predict_cvm(track: Vec<(f64, f64, f64)>, horizon: f64, dt: f64) -> PyResult<Vec<(f64, f64)>> {
    let h = history(track)?;
    let p = cvm_predict(&h, horizon, dt).map_err(value_err)?;
    Ok(p.trajectory.states().iter().map(|s| (s.position.x, s.position.y)).collect())
}

/// Plans from `start` to `goal` through a static field. Returns the support
/// positions and the accepted-iteration cost trace.
#[pyfunction]
fn plan(field: &PyDistanceField, start: (f64, f64), goal: (f64, f64)) -> PyResult<(Vec<(f64, f64)>, Vec<f64>)> {
    let config = PlannerConfig::default();
    let (start, goal) = (CVState::stationary(v(start)), CVState::stationary(v(goal)));
    let seq = CompositeSequence::replicated(field.inner.clone(), config.n, config.dt, 0.0).map_err(value_err)?;
    let arrival = config.arrival_intervals((goal.position - start.position).norm() / config.nominal_speed);
    let graph = build_plan_graph(&start, &goal, &seq, arrival, &config).map_err(value_err)?;
    let mut states = straight_line_init(&start, goal.position, arrival, config.dt, 0.0).map_err(value_err)?.into_states();
    states.resize(graph.variables(), goal);
    let init = GPTrajectory::new(states, 0.0, config.dt).map_err(value_err)?;
    let result = lm_optimize(&graph, &init, &config.lm).map_err(value_err)?;
    let positions = result.trajectory.states().iter().map(|s| (s.position.x, s.position.y)).collect();
    Ok((positions, result.cost_trace))
}

/// A loaded scenario file.
#[pyclass(name = "Scenario")]
pub struct PyScenario {
    inner: Scenario,
}

#[pymethods]
impl PyScenario {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Scenario::load(&path).map(|inner| Self { inner }).map_err(|e| PyIOError::new_err(e.to_string()))
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.spec.name.clone()
    }

    /// Runs in closed loop with mode `none`, `cvm` or `proposed`. Returns
    /// `(min_distance, collision, reached_goal, ticks_csv)`.
    #[pyo3(signature = (mode = "proposed"))]
    fn run(&self, mode: &str) -> PyResult<(f64, bool, bool, String)> {
        let mode: SimMode = mode.parse().map_err(value_err)?;
        let log = run_closed_loop(&self.inner, mode, &SimConfig::default()).map_err(value_err)?;
        Ok((log.summary.min_distance, log.summary.collision, log.summary.reached_goal, log.ticks_csv()))
    }
}

#[pymodule]
fn predplan(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDistanceField>()?;
    m.add_class::<PyPrediction>()?;
    m.add_class::<PyScenario>()?;
    m.add_function(wrap_pyfunction!(predict, m)?)?;
    m.add_function(wrap_pyfunction!(predict_cvm, m)?)?;
    m.add_function(wrap_pyfunction!(plan, m)?)?;
    Ok(())
}
