//! Scripted pedestrians: shortest grid paths between waypoints, walked at
//! constant speed with dwell periods.

use pathfinding::prelude::astar;
use predplan_core::field::DistanceField;
use predplan_core::intent::TrackHistory;
use predplan_core::Vec2;

use crate::error::{SimError, SimResult};

/// Extra clearance kept beyond the walker's radius when planning paths.
pub const PATH_MARGIN: f64 = 0.1;

const STRAIGHT: u64 = 1000;
const DIAGONAL: u64 = 1414;

fn free(env: &DistanceField, cell: (i64, i64), clearance: f64) -> bool {
    env.geometry()
        .checked_cell(cell.0, cell.1)
        .is_some_and(|(ix, iy)| env.get(ix, iy) > clearance)
}

fn visible(env: &DistanceField, a: Vec2, b: Vec2, clearance: f64) -> bool {
    let step = env.geometry().cell_size() / 4.0;
    let n = ((b - a).norm() / step).ceil().max(1.0) as usize;
    (0..=n).all(|k| {
        let s = env.sample(a + (b - a) * (k as f64 / n as f64));
        s.in_bounds && s.distance > clearance
    })
}

/// 8-connected A* over cells with clearance above `clearance`, smoothed by
/// greedy line-of-sight shortcuts. Endpoints are kept exactly.
pub fn shortest_path(env: &DistanceField, from: Vec2, to: Vec2, clearance: f64, what: &str) -> SimResult<Vec<Vec2>> {
    let g = env.geometry();
    let start = g.nearest_cell(from);
    let goal = g.nearest_cell(to);
    for (p, c, label) in [(from, start, "start"), (to, goal, "target")] {
        if !free(env, c, clearance) {
            return Err(SimError::Blocked { what: format!("{what} {label}"), x: p.x, y: p.y });
        }
    }
    let octile = |c: &(i64, i64)| {
        let (dx, dy) = ((c.0 - goal.0).unsigned_abs(), (c.1 - goal.1).unsigned_abs());
        let (lo, hi) = (dx.min(dy), dx.max(dy));
        DIAGONAL * lo + STRAIGHT * (hi - lo)
    };
    let successors = |c: &(i64, i64)| {
        let c = *c;
        let mut out = Vec::with_capacity(8);
        for dx in -1..=1i64 {
            for dy in -1..=1i64 {
                if (dx, dy) == (0, 0) {
                    continue;
                }
                let next = (c.0 + dx, c.1 + dy);
                if !free(env, next, clearance) {
                    continue;
                }
                if dx != 0 && dy != 0 {
                    // no corner cutting
                    if !free(env, (c.0 + dx, c.1), clearance) || !free(env, (c.0, c.1 + dy), clearance) {
                        continue;
                    }
                    out.push((next, DIAGONAL));
                } else {
                    out.push((next, STRAIGHT));
                }
            }
        }
        out
    };
    let (cells, _) = astar(&start, successors, octile, |c| *c == goal).ok_or_else(|| SimError::Unreachable {
        what: what.to_string(),
        fx: from.x,
        fy: from.y,
        tx: to.x,
        ty: to.y,
    })?;
    let mut raw: Vec<Vec2> = cells
        .iter()
        .map(|&(ix, iy)| g.cell_center(ix as usize, iy as usize))
        .collect();
    raw[0] = from;
    let last = raw.len() - 1;
    raw[last] = to;
    if raw.len() == 1 {
        raw.push(to);
    }

    let mut smooth = vec![raw[0]];
    let mut i = 0;
    while i < raw.len() - 1 {
        let mut j = raw.len() - 1;
        while j > i + 1 && !visible(env, raw[i], raw[j], clearance) {
            j -= 1;
        }
        smooth.push(raw[j]);
        i = j;
    }
    Ok(smooth)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Segment {
    t0: f64,
    t1: f64,
    from: Vec2,
    to: Vec2,
}

/// A precomputed piecewise-linear walk.
#[derive(Debug, Clone, PartialEq)]
pub struct ScriptedHuman {
    pub radius: f64,
    start: Vec2,
    segments: Vec<Segment>,
    time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waypoint {
    pub position: Vec2,
    pub dwell: f64,
}

impl ScriptedHuman {
    /// Waits until `start_time`, then walks to each waypoint in turn at
    /// `speed`, dwelling there for the waypoint's interval.
    pub fn plan(
        env: &DistanceField,
        start: Vec2,
        start_time: f64,
        speed: f64,
        radius: f64,
        waypoints: &[Waypoint],
        label: &str,
    ) -> SimResult<Self> {
        if !(speed > 0.0) {
            return Err(SimError::Invalid(format!("{label}: speed must be positive")));
        }
        let clearance = radius + PATH_MARGIN;
        let mut segments = Vec::new();
        let mut t = start_time.max(0.0);
        let mut here = start;
        if waypoints.is_empty() && env.sample(start).distance <= radius {
            return Err(SimError::Blocked { what: format!("{label} start"), x: start.x, y: start.y });
        }
        for (k, w) in waypoints.iter().enumerate() {
            let path = shortest_path(env, here, w.position, clearance, &format!("{label} waypoint {k}"))?;
            for pair in path.windows(2) {
                let len = (pair[1] - pair[0]).norm();
                if len == 0.0 {
                    continue;
                }
                let dt = len / speed;
                segments.push(Segment { t0: t, t1: t + dt, from: pair[0], to: pair[1] });
                t += dt;
            }
            if w.dwell > 0.0 {
                segments.push(Segment { t0: t, t1: t + w.dwell, from: w.position, to: w.position });
                t += w.dwell;
            }
            here = w.position;
        }
        Ok(Self { radius, start, segments, time: 0.0 })
    }

    /// Replays a recorded track by linear interpolation.
    pub fn replay(track: &TrackHistory, radius: f64) -> SimResult<Self> {
        let samples = track.samples();
        let first = samples.first().ok_or_else(|| SimError::Invalid("empty replay track".into()))?;
        let segments = samples
            .windows(2)
            .map(|w| Segment { t0: w[0].t, t1: w[1].t, from: w[0].position, to: w[1].position })
            .collect();
        Ok(Self { radius, start: first.position, segments, time: 0.0 })
    }

    pub fn position_at(&self, t: f64) -> Vec2 {
        let Some(first) = self.segments.first() else { return self.start };
        if t <= first.t0 {
            return first.from;
        }
        let k = self.segments.partition_point(|s| s.t1 < t);
        match self.segments.get(k) {
            Some(s) if s.t1 > s.t0 => s.from + (s.to - s.from) * ((t - s.t0) / (s.t1 - s.t0)).clamp(0.0, 1.0),
            Some(s) => s.to,
            None => self.segments.last().expect("non-empty").to,
        }
    }

    pub fn finish_time(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.t1)
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Advances the walker's clock by `dt` and returns its new position.
    pub fn step(&mut self, dt: f64) -> Vec2 {
        self.time += dt;
        self.position_at(self.time)
    }

    /// Ideal track sampled every `dt` over `[0, until]`.
    pub fn sample_track(&self, dt: f64, until: f64) -> TrackHistory {
        let n = (until / dt).round() as usize;
        let samples = (0..=n)
            .map(|k| {
                let t = k as f64 * dt;
                let p = self.position_at(t);
                predplan_core::intent::TrackSample::new(t, p.x, p.y)
            })
            .collect();
        TrackHistory::new(samples).expect("increasing sample times")
    }
}
