//! Synthetic track corpora for prediction evaluation and goal discovery.

use predplan_core::field::{compute_edt, DistanceField, GridGeometry, OccupancyGrid};
use predplan_core::intent::{FrequencyGrid, GoalSet, TrackHistory};
use predplan_core::Vec2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::SimResult;
use crate::human::{ScriptedHuman, Waypoint};

#[derive(Debug, Clone)]
pub struct Corpus {
    pub grid: OccupancyGrid,
    pub env: DistanceField,
    pub goals: GoalSet,
    pub tracks: Vec<TrackHistory>,
}

/// A 16 m by 10 m room with a pillar in the middle. Walkers start on the left
/// and head for one of three exits on the right, bending around the pillar.
pub fn curved_corpus(tracks: usize, seed: u64) -> SimResult<Corpus> {
    let g = GridGeometry::new(Vec2::zeros(), 0.1, 160, 100)?;
    let mut grid = OccupancyGrid::new(g);
    for ix in 0..160 {
        grid.set(ix, 0, true);
        grid.set(ix, 99, true);
    }
    for iy in 0..100 {
        grid.set(0, iy, true);
        grid.set(159, iy, true);
    }
    grid.rasterize_disc(Vec2::new(8.0, 5.0), 2.0);
    let env = compute_edt(&grid);
    let exits = [Vec2::new(14.5, 5.0), Vec2::new(14.0, 3.0), Vec2::new(14.0, 7.0)];
    let goals = GoalSet::uniform(&exits);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(tracks);
    for k in 0..tracks {
        let start = Vec2::new(rng.random_range(1.0..2.5), rng.random_range(3.5..6.5));
        let speed = rng.random_range(0.9..1.4);
        let exit = exits[k % exits.len()];
        let human = ScriptedHuman::plan(&env, start, 0.0, speed, 0.25, &[Waypoint { position: exit, dwell: 2.0 }], "walker")?;
        out.push(human.sample_track(0.1, human.finish_time()));
    }
    Ok(Corpus { grid, env, goals, tracks: out })
}

/// Discovers goals from slow visits counted on a coarse grid covering `area`.
pub fn discover_goals(tracks: &[TrackHistory], area: &GridGeometry, cell_size: f64, v_thres: f64) -> SimResult<GoalSet> {
    let (lo, hi) = area.bounds();
    let width = ((hi.x - lo.x) / cell_size).ceil().max(1.0) as usize;
    let height = ((hi.y - lo.y) / cell_size).ceil().max(1.0) as usize;
    let mut freq = FrequencyGrid::new(GridGeometry::new(lo, cell_size, width, height)?, v_thres);
    for t in tracks {
        freq.update(t);
    }
    Ok(freq.extract_goals())
}
