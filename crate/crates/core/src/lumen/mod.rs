//! Cross-sectional lumen area from paired CT and mask planes.

mod ellipse;
mod fwhm;
mod profile;
mod rays;

pub use ellipse::{fit_ellipse, Ellipse};
pub use fwhm::{fwhm_boundary, FwhmHit};
pub use profile::{
    measure_profile, read_profiles_csv, write_profiles_csv, LumenProfile, MeasureConfig, Station,
};
pub use rays::{cast_rays, RayPair, RAY_STEP_MM};

/// Contrast (HU) below which a boundary is flagged as unreliable.
pub const LOW_CONTRAST_HU: f64 = 50.0;
