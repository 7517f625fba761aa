//! Occupancy grids, exact distance transforms and composite field sequences.

mod composite;
mod edt;
mod grid;

pub use composite::{build_composite_sequence, composite_min, disc_field, CompositeSequence, PrimitiveField};
pub use edt::{brute_force_edt, compute_edt};
pub use grid::{DistanceField, FieldSample, GridGeometry, OccupancyGrid};

/// Convenience wrapper: sample `field` at `p`.
pub fn sample_field(field: &DistanceField, p: crate::Vec2) -> FieldSample {
    field.sample(p)
}
