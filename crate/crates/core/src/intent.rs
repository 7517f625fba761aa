//! Goal discovery from dwell statistics and Bayesian goal recognition.
//!
//! Candidate goals come from a coarse *frequency grid* counting slow-moving
//! visits. Given a goal set, the posterior over the intended goal combines a
//! visitation prior with a softmax likelihood over how far the agent's recent
//! headings point away from each goal.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::field::GridGeometry;
use crate::{Error, Result, Vec2};

/// Wraps an angle to `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    if w <= -PI {
        w += 2.0 * PI;
    }
    w
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackSample {
    pub t: f64,
    pub position: Vec2,
}

impl TrackSample {
    pub fn new(t: f64, x: f64, y: f64) -> Self {
        Self { t, position: Vec2::new(x, y) }
    }
}

/// Time-ordered past positions of one agent.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrackHistory {
    samples: Vec<TrackSample>,
}

impl TrackHistory {
    pub fn new(samples: Vec<TrackSample>) -> Result<Self> {
        let mut h = Self { samples: Vec::with_capacity(samples.len()) };
        for s in samples {
            h.push(s)?;
        }
        Ok(h)
    }

    pub fn push(&mut self, sample: TrackSample) -> Result<()> {
        if !sample.t.is_finite() || !sample.position.x.is_finite() || !sample.position.y.is_finite() {
            return Err(Error::InvalidTrack(format!("non-finite sample {sample:?}")));
        }
        if let Some(last) = self.samples.last() {
            if sample.t <= last.t {
                return Err(Error::InvalidTrack(format!(
                    "timestamps must increase strictly ({} after {})",
                    sample.t, last.t
                )));
            }
        }
        self.samples.push(sample);
        Ok(())
    }

    pub fn samples(&self) -> &[TrackSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn last(&self) -> Option<&TrackSample> {
        self.samples.last()
    }

    /// History truncated to samples with `t <= until`.
    pub fn until(&self, until: f64) -> TrackHistory {
        let end = self.samples.partition_point(|s| s.t <= until);
        TrackHistory { samples: self.samples[..end].to_vec() }
    }

    /// Velocity between the last two samples.
    pub fn last_velocity(&self) -> Option<Vec2> {
        let [.., a, b] = self.samples.as_slice() else { return None };
        Some((b.position - a.position) / (b.t - a.t))
    }

    /// Path length over elapsed time across the last `window` samples.
    pub fn mean_speed(&self, window: usize) -> Option<f64> {
        let start = self.samples.len().saturating_sub(window.max(2));
        let w = &self.samples[start..];
        if w.len() < 2 {
            return None;
        }
        let length: f64 = w.windows(2).map(|p| (p[1].position - p[0].position).norm()).sum();
        Some(length / (w[w.len() - 1].t - w[0].t))
    }

    /// Parses `t,x,y` CSV; a non-numeric first line is treated as a header.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut samples = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            let parsed: Option<Vec<f64>> = cols.iter().map(|c| c.parse().ok()).collect();
            match parsed {
                Some(v) if v.len() == 3 => samples.push(TrackSample::new(v[0], v[1], v[2])),
                None if i == 0 => continue,
                _ => return Err(Error::Parse { line: i + 1, msg: format!("expected t,x,y but found {line:?}") }),
            }
        }
        Self::new(samples)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x,y\n");
        for s in &self.samples {
            let _ = writeln!(out, "{:.6},{:.6},{:.6}", s.t, s.position.x, s.position.y);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntentConfig {
    /// Softmax sensitivity.
    pub lambda: f64,
    /// Number of recent samples whose relative orientations are averaged.
    pub window: usize,
    /// Speed below which a sample counts as a dwell visit (m/s).
    pub v_thres: f64,
}

impl Default for IntentConfig {
    fn default() -> Self {
        Self { lambda: 1.0, window: 10, v_thres: 0.3 }
    }
}

impl IntentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) {
            return Err(Error::InvalidParameter(format!("lambda {} must be positive", self.lambda)));
        }
        if self.window < 2 {
            return Err(Error::InvalidParameter(format!("window {} must be at least 2", self.window)));
        }
        if !(self.v_thres > 0.0) {
            return Err(Error::InvalidParameter(format!("v_thres {} must be positive", self.v_thres)));
        }
        Ok(())
    }
}

/// Coarse grid of slow-moving visitation counts.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    geometry: GridGeometry,
    counts: Vec<u64>,
    v_thres: f64,
}

impl FrequencyGrid {
    pub fn new(geometry: GridGeometry, v_thres: f64) -> Self {
        Self { counts: vec![0; geometry.len()], geometry, v_thres }
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count(&self, ix: usize, iy: usize) -> u64 {
        self.counts[self.geometry.index(ix, iy)]
    }

    pub fn v_thres(&self) -> f64 {
        self.v_thres
    }

    /// For each consecutive sample pair slower than `v_thres`, counts a visit
    /// to the cell holding the later sample. Feed each track once.
    pub fn update(&mut self, history: &TrackHistory) {
        for pair in history.samples().windows(2) {
            let speed = (pair[1].position - pair[0].position).norm() / (pair[1].t - pair[0].t);
            if speed < self.v_thres {
                if let Some((ix, iy)) = self.geometry.world_to_cell(pair[1].position) {
                    let i = self.geometry.index(ix, iy);
                    self.counts[i] += 1;
                }
            }
        }
    }

    /// Cells visited more than half as often as the busiest cell, merged into
    /// 8-connected clusters. Each cluster becomes one goal at the
    /// count-weighted mean of its cell centers. Empty when nothing was counted.
    pub fn extract_goals(&self) -> GoalSet {
        let n_max = self.counts.iter().copied().max().unwrap_or(0);
        if n_max == 0 {
            return GoalSet::default();
        }
        let selected: Vec<bool> = self.counts.iter().map(|&n| 2 * n > n_max).collect();
        let (w, h) = (self.geometry.width() as i64, self.geometry.height() as i64);
        let mut seen = vec![false; self.counts.len()];
        let mut goals = Vec::new();
        let mut stack = Vec::new();
        for start in 0..self.counts.len() {
            if !selected[start] || seen[start] {
                continue;
            }
            seen[start] = true;
            stack.push(start);
            let mut total = 0u64;
            let mut weighted = Vec2::zeros();
            while let Some(i) = stack.pop() {
                let (ix, iy) = self.geometry.coords(i);
                let n = self.counts[i];
                total += n;
                weighted += self.geometry.cell_center(ix, iy) * n as f64;
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        let (nx, ny) = (ix as i64 + dx, iy as i64 + dy);
                        if nx < 0 || ny < 0 || nx >= w || ny >= h {
                            continue;
                        }
                        let j = self.geometry.index(nx as usize, ny as usize);
                        if selected[j] && !seen[j] {
                            seen[j] = true;
                            stack.push(j);
                        }
                    }
                }
            }
            goals.push(Goal { position: weighted / total as f64, count: total as f64 });
        }
        GoalSet { goals }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Goal {
    pub position: Vec2,
    /// Visitation count; may be a pseudo-count for injected goals.
    pub count: f64,
}

/// Candidate goals with priors proportional to their visitation counts.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GoalSet {
    goals: Vec<Goal>,
}

impl GoalSet {
    pub fn new(goals: Vec<Goal>) -> Result<Self> {
        let mut set = Self::default();
        for g in goals {
            set.add_goal(g.position, g.count)?;
        }
        Ok(set)
    }

    /// Goals with equal counts, i.e. a uniform prior.
    pub fn uniform(positions: &[Vec2]) -> Self {
        Self { goals: positions.iter().map(|&position| Goal { position, count: 1.0 }).collect() }
    }

    /// Adds a goal (e.g. from semantic knowledge) carrying `count` visits.
    pub fn add_goal(&mut self, position: Vec2, count: f64) -> Result<()> {
        if !(count > 0.0) || !count.is_finite() {
            return Err(Error::InvalidGoalSet(format!("goal count {count} must be positive")));
        }
        if !position.x.is_finite() || !position.y.is_finite() {
            return Err(Error::InvalidGoalSet("goal position must be finite".into()));
        }
        self.goals.push(Goal { position, count });
        Ok(())
    }

    pub fn goals(&self) -> &[Goal] {
        &self.goals
    }

    pub fn len(&self) -> usize {
        self.goals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.goals.is_empty()
    }

    pub fn priors(&self) -> Vec<f64> {
        let total: f64 = self.goals.iter().map(|g| g.count).sum();
        self.goals.iter().map(|g| g.count / total).collect()
    }

    /// One `x y N_k` line per goal.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut set = Self::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let v: Vec<f64> = line
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Parse { line: i + 1, msg: format!("expected `x y N_k`, found {line:?}") })?;
            if v.len() != 3 {
                return Err(Error::Parse { line: i + 1, msg: format!("expected 3 fields, found {}", v.len()) });
            }
            set.add_goal(Vec2::new(v[0], v[1]), v[2]).map_err(|e| Error::Parse { line: i + 1, msg: e.to_string() })?;
        }
        Ok(set)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for g in &self.goals {
            let _ = writeln!(out, "{} {} {}", g.position.x, g.position.y, g.count);
        }
        out
    }
}

/// Per-sample headings: `atan2` of each displacement, carrying the previous
/// heading across zero displacements. Entry 0 is always `None`.
fn headings(samples: &[TrackSample]) -> Vec<Option<f64>> {
    let mut out = Vec::with_capacity(samples.len());
    let mut current = None;
    out.push(None);
    for pair in samples.windows(2) {
        let d = pair[1].position - pair[0].position;
        if d.x != 0.0 || d.y != 0.0 {
            current = Some(wrap_angle(d.y.atan2(d.x)));
        }
        out.push(current);
    }
    out
}

/// Heading of the most recent nonzero displacement, in `(-π, π]`.
pub fn estimate_heading(history: &TrackHistory) -> Result<f64> {
    headings(history.samples()).last().copied().flatten().ok_or(Error::HeadingUndefined)
}

/// Mean absolute relative orientation between the agent's heading and the
/// direction to `goal`, over the last `config.window` samples. In `[0, π]`:
/// 0 means walking straight at the goal, π directly away from it.
pub fn averaged_relative_orientation(history: &TrackHistory, goal: Vec2, config: &IntentConfig) -> Result<f64> {
    let samples = history.samples();
    let hs = headings(samples);
    let start = samples.len().saturating_sub(config.window);
    relative_orientation_over(&samples[start..], &hs[start..], goal)
}

fn relative_orientation_over(samples: &[TrackSample], hs: &[Option<f64>], goal: Vec2) -> Result<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for (s, h) in samples.iter().zip(hs) {
        let Some(heading) = h else { continue };
        let to_goal = goal - s.position;
        let bearing = to_goal.y.atan2(to_goal.x);
        sum += wrap_angle(bearing - heading).abs();
        n += 1;
    }
    if n == 0 {
        return Err(Error::HeadingUndefined);
    }
    Ok(sum / n as f64)
}

/// Softmax of `-λ·δθ̄`, so that goals straight ahead are most likely.
pub fn goal_likelihood(orientations: &[f64], lambda: f64) -> Vec<f64> {
    let best = orientations.iter().copied().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = orientations.iter().map(|&d| (-lambda * (d - best)).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntentPosterior {
    pub probabilities: Vec<f64>,
    pub map_index: usize,
    pub map_probability: f64,
    /// Averaged relative orientation per goal; empty when not informative.
    pub orientations: Vec<f64>,
    /// False when the history gave no heading and the posterior is the prior.
    pub informative: bool,
}

pub fn intent_posterior(history: &TrackHistory, goals: &GoalSet, config: &IntentConfig) -> Result<IntentPosterior> {
    if goals.is_empty() {
        return Err(Error::EmptyGoalSet);
    }
    let prior = goals.priors();
    let samples = history.samples();
    let hs = headings(samples);
    let start = samples.len().saturating_sub(config.window);
    let orientations: Result<Vec<f64>> = goals
        .goals()
        .iter()
        .map(|g| relative_orientation_over(&samples[start..], &hs[start..], g.position))
        .collect();

    let (probabilities, orientations, informative) = match orientations {
        Ok(o) => {
            let likelihood = goal_likelihood(&o, config.lambda);
            let unnorm: Vec<f64> = prior.iter().zip(&likelihood).map(|(p, l)| p * l).collect();
            let total: f64 = unnorm.iter().sum();
            (unnorm.into_iter().map(|u| u / total).collect::<Vec<_>>(), o, true)
        }
        Err(Error::HeadingUndefined) => (prior, Vec::new(), false),
        Err(e) => return Err(e),
    };
    let (map_index, map_probability) = argmax(&probabilities);
    Ok(IntentPosterior { probabilities, map_index, map_probability, orientations, informative })
}

/// First index of the maximum.
fn argmax(v: &[f64]) -> (usize, f64) {
    v.iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, p)| if p > best.1 { (i, p) } else { best })
}
