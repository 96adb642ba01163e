use crate::volio::{edt_2d, BinaryMask};
use crate::{Error, Result, Voxel};

/// Maximum in-slice distance to background for every axial slice.
pub fn slice_maxima(m: &BinaryMask) -> Vec<f64> {
    (0..m.dims()[2])
        .map(|k| edt_2d(m, k).map(|d| d.max()).unwrap_or(0.0))
        .collect()
}

/// Locate the centreline start on the trachea.
///
/// Starting from the first slice that contains mask, advance while the
/// slice's distance maximum keeps growing, then return the location of that
/// maximum. Ties go to the lexicographically smallest voxel.
pub fn find_trachea_start(m: &BinaryMask) -> Result<Voxel> {
    let nz = m.dims()[2];
    let plane = m.dims()[0] * m.dims()[1];
    let first = m
        .data()
        .chunks(plane.max(1))
        .position(|s| s.iter().any(|&b| b))
        .ok_or(Error::EmptyMask)?;
    let mut k = first;
    let mut here = edt_2d(m, k)?;
    loop {
        if k + 1 >= nz {
            return Err(Error::StartNotFound);
        }
        let next = edt_2d(m, k + 1)?;
        if here.max() >= next.max() {
            break;
        }
        k += 1;
        here = next;
    }
    let (_, [i, j]) = here.argmax();
    Ok([i, j, k])
}
