//! Brouwer degree at target points and integer degree fields on target grids.
//!
//! Two independent routes are provided: boundary-based (winding number in the
//! plane, solid angle in space) and simplicial, through an interior mesh of the
//! mollified extension.

mod field;
mod image;
mod simplicial;
mod solid_angle;
mod winding;

pub use field::{
    degree_field, degree_field_simplicial, parse_field_text, CrossCheck, DegreeField, FieldOptions, GridSpec,
};
pub use image::BoundaryImage;
pub use simplicial::{simplicial_degree, SimplicialMesh};
pub use solid_angle::{solid_angle_degree_3d, SolidAngleOptions};
pub use winding::{adaptive_winding, winding_degree_2d};

/// Largest admissible distance of the normalized angle sum from an integer.
pub const ROUNDING_LIMIT: f64 = 0.01;

pub(crate) fn round_degree(total: f64) -> crate::Result<i64> {
    let r = total.round();
    let residual = (total - r).abs();
    if residual >= ROUNDING_LIMIT {
        return Err(crate::Error::RoundingResidual { residual, limit: ROUNDING_LIMIT });
    }
    Ok(r as i64)
}
