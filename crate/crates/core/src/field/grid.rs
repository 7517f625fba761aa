use std::fmt::Write as _;

use crate::{Error, Result, Vec2};

/// Placement of a regular planar grid in the world.
///
/// `origin` is the world position of the *center* of cell `(0, 0)`. Cells are
/// stored row-major with `ix` running along x and `iy` along y.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridGeometry {
    origin: Vec2,
    cell_size: f64,
    width: usize,
    height: usize,
}

impl GridGeometry {
    pub fn new(origin: Vec2, cell_size: f64, width: usize, height: usize) -> Result<Self> {
        if !(cell_size > 0.0) || !cell_size.is_finite() {
            return Err(Error::InvalidGeometry(format!("cell size {cell_size} must be positive")));
        }
        if width == 0 || height == 0 {
            return Err(Error::InvalidGeometry(format!("{width}x{height} grid is empty")));
        }
        if !origin.x.is_finite() || !origin.y.is_finite() {
            return Err(Error::InvalidGeometry("origin must be finite".into()));
        }
        Ok(Self { origin, cell_size, width, height })
    }

    pub fn origin(&self) -> Vec2 {
        self.origin
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        debug_assert!(ix < self.width && iy < self.height);
        iy * self.width + ix
    }

    #[inline]
    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index % self.width, index / self.width)
    }

    pub fn cell_center(&self, ix: usize, iy: usize) -> Vec2 {
        self.origin + Vec2::new(ix as f64, iy as f64) * self.cell_size
    }

    /// Nearest cell to `p`, which may lie outside the grid.
    pub fn nearest_cell(&self, p: Vec2) -> (i64, i64) {
        let g = (p - self.origin) / self.cell_size;
        (g.x.round() as i64, g.y.round() as i64)
    }

    /// Cell containing `p`, or `None` outside the grid.
    pub fn world_to_cell(&self, p: Vec2) -> Option<(usize, usize)> {
        let (ix, iy) = self.nearest_cell(p);
        self.checked_cell(ix, iy)
    }

    pub fn checked_cell(&self, ix: i64, iy: i64) -> Option<(usize, usize)> {
        (ix >= 0 && iy >= 0 && (ix as usize) < self.width && (iy as usize) < self.height)
            .then(|| (ix as usize, iy as usize))
    }

    /// Continuous grid coordinates of `p` (cell centers at integers).
    pub fn grid_coords(&self, p: Vec2) -> Vec2 {
        (p - self.origin) / self.cell_size
    }

    /// World extent covered by the cells, as (min corner, max corner).
    pub fn bounds(&self) -> (Vec2, Vec2) {
        let half = Vec2::repeat(0.5 * self.cell_size);
        let far = self.cell_center(self.width - 1, self.height - 1);
        (self.origin - half, far + half)
    }

    /// Grid diagonal in meters; distances saturate here when nothing is occupied.
    pub fn diagonal(&self) -> f64 {
        (self.width as f64).hypot(self.height as f64) * self.cell_size
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    geometry: GridGeometry,
    cells: Vec<bool>,
}

impl OccupancyGrid {
    pub fn new(geometry: GridGeometry) -> Self {
        Self { cells: vec![false; geometry.len()], geometry }
    }

    pub fn from_cells(geometry: GridGeometry, cells: Vec<bool>) -> Result<Self> {
        if cells.len() != geometry.len() {
            return Err(Error::InvalidGeometry(format!(
                "{} cells supplied for a {}x{} grid",
                cells.len(),
                geometry.width(),
                geometry.height()
            )));
        }
        Ok(Self { geometry, cells })
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    pub fn is_occupied(&self, ix: usize, iy: usize) -> bool {
        self.cells[self.geometry.index(ix, iy)]
    }

    pub fn set(&mut self, ix: usize, iy: usize, occupied: bool) {
        let i = self.geometry.index(ix, iy);
        self.cells[i] = occupied;
    }

    pub fn occupied_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    /// Marks every cell whose center lies within `radius` of the center of
    /// cell `(cx, cy)`. The center cell may lie outside the grid.
    pub fn rasterize_disc_at_cell(&mut self, cx: i64, cy: i64, radius: f64) {
        // Tolerance keeps radii that are whole multiples of the cell size inclusive.
        let r_cells = radius / self.geometry.cell_size() + 1e-9;
        let reach = r_cells.floor() as i64;
        let r2 = r_cells * r_cells;
        for dy in -reach..=reach {
            for dx in -reach..=reach {
                if ((dx * dx + dy * dy) as f64) > r2 {
                    continue;
                }
                if let Some((ix, iy)) = self.geometry.checked_cell(cx + dx, cy + dy) {
                    self.set(ix, iy, true);
                }
            }
        }
        if let Some((ix, iy)) = self.geometry.checked_cell(cx, cy) {
            self.set(ix, iy, true);
        }
    }

    /// Rasterizes a disc around the cell nearest to `center`.
    pub fn rasterize_disc(&mut self, center: Vec2, radius: f64) {
        let (cx, cy) = self.geometry.nearest_cell(center);
        self.rasterize_disc_at_cell(cx, cy, radius);
    }

    /// Parses the map text format: a `width height cell_size origin_x origin_y`
    /// header followed by `height` rows of `width` `0`/`1` characters. The
    /// first row is `iy = 0`.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or(Error::Parse { line: 1, msg: "missing header".into() })?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(Error::Parse {
                line: hline,
                msg: format!("expected 5 header fields, found {}", fields.len()),
            });
        }
        let bad = |what: &str| Error::Parse { line: hline, msg: format!("bad {what}") };
        let width: usize = fields[0].parse().map_err(|_| bad("width"))?;
        let height: usize = fields[1].parse().map_err(|_| bad("height"))?;
        let cell_size: f64 = fields[2].parse().map_err(|_| bad("cell_size"))?;
        let ox: f64 = fields[3].parse().map_err(|_| bad("origin_x"))?;
        let oy: f64 = fields[4].parse().map_err(|_| bad("origin_y"))?;
        let geometry = GridGeometry::new(Vec2::new(ox, oy), cell_size, width, height)?;

        let mut cells = Vec::with_capacity(geometry.len());
        let mut rows = 0;
        for (line, row) in lines {
            if rows == height {
                return Err(Error::Parse { line, msg: format!("more than {height} rows") });
            }
            if row.chars().count() != width {
                return Err(Error::Parse {
                    line,
                    msg: format!("row has {} cells, expected {width}", row.chars().count()),
                });
            }
            for c in row.chars() {
                cells.push(match c {
                    '0' => false,
                    '1' => true,
                    other => return Err(Error::Parse { line, msg: format!("unexpected character {other:?}") }),
                });
            }
            rows += 1;
        }
        if rows != height {
            return Err(Error::Parse { line: hline, msg: format!("expected {height} rows, found {rows}") });
        }
        Self::from_cells(geometry, cells)
    }

    pub fn to_text(&self) -> String {
        let g = &self.geometry;
        let mut out = format!(
            "{} {} {} {} {}\n",
            g.width(),
            g.height(),
            g.cell_size(),
            g.origin().x,
            g.origin().y
        );
        for row in self.cells.chunks(g.width()) {
            out.extend(row.iter().map(|&c| if c { '1' } else { '0' }));
            out.push('\n');
        }
        out
    }
}

/// Unsigned Euclidean clearance in meters for every cell of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceField {
    geometry: GridGeometry,
    values: Vec<f64>,
}

/// Result of sampling a field at a continuous position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub distance: f64,
    pub gradient: Vec2,
    pub in_bounds: bool,
}

impl DistanceField {
    pub fn from_values(geometry: GridGeometry, values: Vec<f64>) -> Result<Self> {
        if values.len() != geometry.len() {
            return Err(Error::InvalidGeometry(format!(
                "{} values supplied for {} cells",
                values.len(),
                geometry.len()
            )));
        }
        Ok(Self { geometry, values })
    }

    pub fn constant(geometry: GridGeometry, value: f64) -> Self {
        Self { values: vec![value; geometry.len()], geometry }
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[self.geometry.index(ix, iy)]
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Bilinear interpolation of cell-center values and its analytic gradient.
    ///
    /// Positions outside the span of cell centers are clamped onto it and
    /// flagged with `in_bounds = false`.
    pub fn sample(&self, p: Vec2) -> FieldSample {
        let g = self.geometry.grid_coords(p);
        let max_x = (self.geometry.width() - 1) as f64;
        let max_y = (self.geometry.height() - 1) as f64;
        let in_bounds = g.x >= 0.0 && g.y >= 0.0 && g.x <= max_x && g.y <= max_y && g.x.is_finite() && g.y.is_finite();
        let gx = g.x.clamp(0.0, max_x);
        let gy = g.y.clamp(0.0, max_y);

        let (x0, fx) = split_axis(gx, self.geometry.width());
        let (y0, fy) = split_axis(gy, self.geometry.height());
        let x1 = (x0 + 1).min(self.geometry.width() - 1);
        let y1 = (y0 + 1).min(self.geometry.height() - 1);

        let v00 = self.get(x0, y0);
        let v10 = self.get(x1, y0);
        let v01 = self.get(x0, y1);
        let v11 = self.get(x1, y1);

        let bottom = v00 + fx * (v10 - v00);
        let top = v01 + fx * (v11 - v01);
        let distance = bottom + fy * (top - bottom);

        let cs = self.geometry.cell_size();
        let mut gradient = Vec2::new(
            ((1.0 - fy) * (v10 - v00) + fy * (v11 - v01)) / cs,
            (top - bottom) / cs,
        );
        // The clamped interpolant is flat across the boundary it was clamped to.
        if g.x < 0.0 || g.x > max_x {
            gradient.x = 0.0;
        }
        if g.y < 0.0 || g.y > max_y {
            gradient.y = 0.0;
        }
        FieldSample { distance, gradient, in_bounds }
    }

    /// Row-major CSV export, one grid row per line, six decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.values.len() * 10);
        for row in self.values.chunks(self.geometry.width()) {
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{v:.6}");
            }
            out.push('\n');
        }
        out
    }
}

fn split_axis(g: f64, n: usize) -> (usize, f64) {
    if n == 1 {
        return (0, 0.0);
    }
    let i0 = (g.floor() as usize).min(n - 2);
    (i0, g - i0 as f64)
}
