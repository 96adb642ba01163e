//! CT acquisition perturbations: reduced dose via noisy projections, and
//! coarser voxel grids.

mod dose;
mod fbp;
mod radon;
mod rescale;
mod tn;

pub use dose::{round_trip, simulate_dose, NoiseLevel};
pub use fbp::{fbp_slice, filter_sinogram};
pub use radon::{default_angles, detector_half_width, radon_slice, uniform_angles, Sinogram};
pub use rescale::{rescale_mask, rescale_volume, rescale_voxel, rescaled_len, snap_to_mask, PRESMOOTH_FRACTION};
pub use tn::{measure_tn, TN_EROSION, TN_SLICES};
