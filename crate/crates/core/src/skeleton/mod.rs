//! Centreline extraction: trachea start, curve thinning, and ordered
//! carina-to-distal paths.

mod paths;
mod start;
mod thinning;
pub mod topology;

use serde::{Deserialize, Serialize};

use crate::volio::BinaryMask;
use crate::Voxel;

pub use paths::{carina, extract_paths};
pub use start::{find_trachea_start, slice_maxima};
pub use thinning::{is_simple, thin_to_centreline};

/// A labelled endpoint of an airway of interest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistalPoint {
    pub id: String,
    pub voxel: Voxel,
}

/// Ordered voxel chain from the carina to one distal point.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AirwayPath {
    pub id: String,
    pub voxels: Vec<Voxel>,
}

/// One-voxel-wide skeleton together with its labelled endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct CentrelineTree {
    pub skeleton: BinaryMask,
    pub start: Voxel,
    pub distal: Vec<DistalPoint>,
}

impl CentrelineTree {
    /// Skeleton neighbours of `v` under 26-connectivity.
    pub fn neighbours(&self, v: Voxel) -> Vec<Voxel> {
        topology::object_neighbours(&self.skeleton, v)
    }

    pub fn degree(&self, v: Voxel) -> usize {
        self.neighbours(v).len()
    }

    /// Skeleton voxels with three or more neighbours.
    pub fn branch_voxels(&self) -> Vec<Voxel> {
        self.skeleton.voxels().filter(|&v| self.degree(v) >= 3).collect()
    }
}
