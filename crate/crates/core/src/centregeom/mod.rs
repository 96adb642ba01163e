//! Continuous centreline geometry: smoothing, spline fit, arc length,
//! tangents and cross-sectional plane sampling.

mod plane;
mod smooth;
mod spline;

pub use plane::{plane_basis, sample_plane, PlaneImage, DEFAULT_HALF_EXTENT_MM, PLANE_PIXEL_MM};
pub use smooth::smooth_path;
pub use spline::{fit_spline, AirwaySpline, PARAM_STEP};
