use std::sync::Arc;

use super::edt::compute_edt;
use super::grid::{DistanceField, GridGeometry, OccupancyGrid};
use crate::{Error, Result, Vec2};

/// Precomputed distance field of a disc, centered in a square window.
///
/// The window's center cell sits at local world position `(0, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimitiveField {
    field: DistanceField,
    radius: f64,
    half_cells: usize,
}

impl PrimitiveField {
    pub fn field(&self) -> &DistanceField {
        &self.field
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn cell_size(&self) -> f64 {
        self.field.geometry().cell_size()
    }

    /// Number of cells from the window center to its edge.
    pub fn half_cells(&self) -> usize {
        self.half_cells
    }

    /// Clearance below which overlay values are guaranteed to match the
    /// distance to the disc anywhere in the plane: outside the window the disc
    /// is at least this far away.
    pub fn reach(&self) -> f64 {
        self.half_cells as f64 * self.cell_size() - self.radius
    }
}

/// Distance field of a disc of `radius` meters rasterized on cells of the
/// given geometry's size. The window spans `2·(radius + reach + 2·cell_size)`
/// so that hinge costs up to `reach` are fully represented.
pub fn disc_field(radius: f64, reach: f64, geometry: &GridGeometry) -> Result<PrimitiveField> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::InvalidParameter(format!("disc radius {radius} must be positive")));
    }
    if !(reach >= 0.0) || !reach.is_finite() {
        return Err(Error::InvalidParameter(format!("primitive reach {reach} must be non-negative")));
    }
    let cs = geometry.cell_size();
    let half_cells = ((radius + reach + 2.0 * cs) / cs).ceil() as usize;
    let side = 2 * half_cells + 1;
    let offset = -(half_cells as f64) * cs;
    let local = GridGeometry::new(Vec2::new(offset, offset), cs, side, side)?;
    let mut grid = OccupancyGrid::new(local);
    grid.rasterize_disc_at_cell(half_cells as i64, half_cells as i64, radius);
    Ok(PrimitiveField { field: compute_edt(&grid), radius, half_cells })
}

/// Pointwise minimum of `env` and every overlay translated to its position.
///
/// Overlay centers snap to the nearest environment cell; windows are clipped
/// at the grid border and cells outside every window keep `env` exactly.
pub fn composite_min(env: &DistanceField, overlays: &[(&PrimitiveField, Vec2)]) -> Result<DistanceField> {
    let mut out = env.clone();
    composite_into(&mut out, overlays)?;
    Ok(out)
}

fn composite_into(out: &mut DistanceField, overlays: &[(&PrimitiveField, Vec2)]) -> Result<()> {
    let geometry = *out.geometry();
    for &(primitive, position) in overlays {
        if (primitive.cell_size() - geometry.cell_size()).abs() > 1e-12 * geometry.cell_size() {
            return Err(Error::CellSizeMismatch { field: geometry.cell_size(), primitive: primitive.cell_size() });
        }
        let (cx, cy) = geometry.nearest_cell(position);
        let half = primitive.half_cells as i64;
        let side = primitive.field.geometry().width() as i64;
        let x_lo = (cx - half).max(0);
        let x_hi = (cx + half).min(geometry.width() as i64 - 1);
        let y_lo = (cy - half).max(0);
        let y_hi = (cy + half).min(geometry.height() as i64 - 1);
        if x_lo > x_hi || y_lo > y_hi {
            continue;
        }
        let window = primitive.field.values();
        let width = geometry.width();
        let values = out.values_mut();
        for iy in y_lo..=y_hi {
            let ly = iy - cy + half;
            let row = (iy as usize) * width;
            let wrow = (ly * side) as usize;
            for ix in x_lo..=x_hi {
                let lx = (ix - cx + half) as usize;
                let v = &mut values[row + ix as usize];
                *v = v.min(window[wrow + lx]);
            }
        }
    }
    Ok(())
}

/// `n` composite fields at times `t0 + i·dt`.
#[derive(Debug, Clone)]
pub struct CompositeSequence {
    fields: Vec<Arc<DistanceField>>,
    dt: f64,
    t0: f64,
}

impl CompositeSequence {
    pub fn new(fields: Vec<Arc<DistanceField>>, dt: f64, t0: f64) -> Result<Self> {
        if let Some(first) = fields.first() {
            if fields.iter().any(|f| f.geometry() != first.geometry()) {
                return Err(Error::InvalidGeometry("sequence entries must share one geometry".into()));
            }
        }
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter(format!("sequence dt {dt} must be positive")));
        }
        Ok(Self { fields, dt, t0 })
    }

    /// The same field at every one of `n` times.
    pub fn replicated(field: Arc<DistanceField>, n: usize, dt: f64, t0: f64) -> Result<Self> {
        Self::new(vec![field; n], dt, t0)
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn fields(&self) -> &[Arc<DistanceField>] {
        &self.fields
    }

    /// Field for time index `i`; indices past the end reuse the last entry.
    pub fn for_index(&self, i: usize) -> &Arc<DistanceField> {
        &self.fields[i.min(self.fields.len() - 1)]
    }

    /// Field whose time slot is nearest to `t`, clamped to the sequence.
    pub fn for_time(&self, t: f64) -> &Arc<DistanceField> {
        let k = ((t - self.t0) / self.dt).round().max(0.0) as usize;
        self.for_index(k)
    }
}

/// Entry `i` composites `primitive` at each obstacle's `i`-th predicted
/// position. Short predictions are padded with their final position.
pub fn build_composite_sequence(
    env: &DistanceField,
    predictions: &[Vec<Vec2>],
    primitive: &PrimitiveField,
    n: usize,
    dt: f64,
    t0: f64,
) -> Result<CompositeSequence> {
    let mut fields = Vec::with_capacity(n);
    let mut overlays = Vec::with_capacity(predictions.len());
    for i in 0..n {
        overlays.clear();
        overlays.extend(
            predictions
                .iter()
                .filter_map(|p| p.get(i).or_else(|| p.last()))
                .map(|&pos| (primitive, pos)),
        );
        fields.push(Arc::new(composite_min(env, &overlays)?));
    }
    CompositeSequence::new(fields, dt, t0)
}
