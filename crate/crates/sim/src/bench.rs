//! Timing of full distance-transform recomputation against composites.

use std::fmt::Write as _;
use std::time::Instant;

use predplan_core::field::{composite_min, compute_edt, disc_field, DistanceField, GridGeometry, OccupancyGrid};
use predplan_core::Vec2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{SimError, SimResult};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    pub n: usize,
    pub obstacles: usize,
    pub repetitions: usize,
    pub seed: u64,
    pub cell_size: f64,
    pub obstacle_radius: f64,
    /// Clearance represented by each overlay.
    pub reach: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self { sizes: vec![64, 128, 256], n: 20, obstacles: 2, repetitions: 5, seed: 0, cell_size: 0.1, obstacle_radius: 0.3, reach: 1.2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchRow {
    pub size: usize,
    pub full_ms: f64,
    pub composite_ms: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub n: usize,
    pub rows: Vec<BenchRow>,
    /// Per-repetition ratios, one list per size.
    pub ratios: Vec<Vec<f64>>,
}

impl BenchReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("size,full_ms,composite_ms,ratio\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{:.4},{:.4},{:.4}", r.size, r.full_ms, r.composite_ms, r.ratio);
        }
        out
    }
}

/// Walls around the border plus a few fixed blocks, and `n` seeded positions
/// per moving obstacle along a straight walk.
pub struct BenchScene {
    pub grid: OccupancyGrid,
    pub tracks: Vec<Vec<Vec2>>,
}

pub fn bench_scene(size: usize, config: &BenchConfig, rng: &mut ChaCha8Rng) -> SimResult<BenchScene> {
    let g = GridGeometry::new(Vec2::zeros(), config.cell_size, size, size)?;
    let mut grid = OccupancyGrid::new(g);
    for i in 0..size {
        grid.set(i, 0, true);
        grid.set(i, size - 1, true);
        grid.set(0, i, true);
        grid.set(size - 1, i, true);
    }
    for k in 1..4 {
        let c = size * k / 4;
        grid.rasterize_disc_at_cell(c as i64, (size / 3) as i64, 2.0 * config.cell_size);
    }
    let extent = size as f64 * config.cell_size;
    let tracks = (0..config.obstacles)
        .map(|_| {
            let start = Vec2::new(rng.random_range(0.2..0.8) * extent, rng.random_range(0.2..0.8) * extent);
            let heading: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let step = Vec2::new(heading.cos(), heading.sin()) * (0.5 * 1.2);
            (0..config.n).map(|i| start + step * i as f64).collect()
        })
        .collect();
    Ok(BenchScene { grid, tracks })
}

/// `n` fields with every obstacle rasterized and transformed from scratch.
pub fn full_recompute(scene: &BenchScene, radius: f64, n: usize) -> Vec<DistanceField> {
    (0..n)
        .map(|i| {
            let mut grid = scene.grid.clone();
            for t in &scene.tracks {
                grid.rasterize_disc(t[i], radius);
            }
            compute_edt(&grid)
        })
        .collect()
}

/// One environment transform plus `n` composite passes.
pub fn composite_recompute(scene: &BenchScene, radius: f64, reach: f64, n: usize) -> SimResult<Vec<DistanceField>> {
    let env = compute_edt(&scene.grid);
    let prim = disc_field(radius, reach, scene.grid.geometry())?;
    (0..n)
        .map(|i| {
            let overlays: Vec<_> = scene.tracks.iter().map(|t| (&prim, t[i])).collect();
            Ok(composite_min(&env, &overlays)?)
        })
        .collect()
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

pub fn bench_composite(config: &BenchConfig) -> SimResult<BenchReport> {
    if config.n == 0 || config.repetitions == 0 || config.sizes.iter().any(|&s| s < 8) {
        return Err(SimError::Invalid("bench needs n, repetitions >= 1 and sizes >= 8".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut rows = Vec::with_capacity(config.sizes.len());
    let mut ratios = Vec::with_capacity(config.sizes.len());
    for &size in &config.sizes {
        let scene = bench_scene(size, config, &mut rng)?;
        let (mut full, mut comp, mut ratio) = (Vec::new(), Vec::new(), Vec::new());
        for _ in 0..config.repetitions {
            let start = Instant::now();
            std::hint::black_box(full_recompute(&scene, config.obstacle_radius, config.n));
            let f = start.elapsed().as_secs_f64() * 1e3;
            let start = Instant::now();
            std::hint::black_box(composite_recompute(&scene, config.obstacle_radius, config.reach, config.n)?);
            let c = start.elapsed().as_secs_f64() * 1e3;
            full.push(f);
            comp.push(c);
            ratio.push(f / c);
        }
        let (full_ms, composite_ms) = (median(&mut full), median(&mut comp));
        rows.push(BenchRow { size, full_ms, composite_ms, ratio: full_ms / composite_ms });
        ratios.push(ratio);
    }
    Ok(BenchReport { n: config.n, rows, ratios })
}
