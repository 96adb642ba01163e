//! Airway tapering measurement on CT volumes.
//!
//! The crate measures the exponential tapering rate of tubular structures
//! from a segmentation and a set of distal endpoints, and provides the
//! simulation machinery (dose reduction, voxel-size changes) and statistics
//! used to quantify how reproducible that measurement is.
//!
//! Processing stages, in pipeline order:
//!
//! * [`volio`]: volumes, masks, MetaImage I/O, interpolation, morphology
//! * [`skeleton`]: trachea start, curve thinning, carina-to-distal paths
//! * [`centregeom`]: smoothing, spline fit, arc length, cross-section planes
//! * [`lumen`]: ray casting, FWHM boundary detection, ellipse fit
//! * [`taper`]: log-area regression and region exclusion
//!
//! Supporting modules: [`phantom`] builds synthetic tubes with analytic
//! ground truth, [`ctsim`] perturbs volumes, [`bench`] runs sweeps and
//! agreement statistics, and [`pipeline`] chains the stages together.

pub mod bench;
pub mod centregeom;
pub mod ctsim;
mod error;
pub mod lumen;
pub mod phantom;
pub mod pipeline;
pub mod skeleton;
pub mod taper;
pub mod volio;

pub use error::{Error, Result};

/// A 3-vector in millimetres (world coordinates).
pub type Vec3 = nalgebra::Vector3<f64>;

/// Integer voxel index `[i, j, k]` with `i` running fastest in memory.
pub type Voxel = [usize; 3];
