use crate::skeleton::AirwayPath;
use crate::volio::Volume;
use crate::{Error, Result, Vec3};

/// Convert a voxel path to millimetres and apply a five-point moving mean.
///
/// The window shrinks symmetrically near the ends, so the first and last
/// points are kept as they are.
pub fn smooth_path<T>(path: &AirwayPath, grid: &Volume<T>) -> Result<Vec<Vec3>> {
    let n = path.voxels.len();
    if n < 2 {
        return Err(Error::PathTooShort(n, 2));
    }
    let mm: Vec<Vec3> = path.voxels.iter().map(|&v| grid.voxel_to_mm(v)).collect();
    Ok((0..n)
        .map(|i| {
            let h = 2.min(i).min(n - 1 - i);
            let sum: Vec3 = mm[i - h..=i + h].iter().sum();
            sum / (2 * h + 1) as f64
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Volume<bool> {
        Volume::filled([20, 20, 20], [1.0, 1.0, 2.0], [0.0; 3], false).unwrap()
    }

    fn path(v: Vec<[usize; 3]>) -> AirwayPath {
        AirwayPath { id: "p".into(), voxels: v }
    }

    #[test]
    fn collinear_path_stays_collinear() {
        let p = path((0..8).map(|k| [3, 4, k]).collect());
        let s = smooth_path(&p, &grid()).unwrap();
        for (i, q) in s.iter().enumerate() {
            assert_eq!(q.x, 3.0);
            assert_eq!(q.y, 4.0);
            assert!((q.z - 2.0 * i as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn zig_is_reduced_fivefold() {
        let mut v: Vec<[usize; 3]> = (0..9).map(|k| [5, 5, k]).collect();
        v[4] = [6, 5, 4];
        let s = smooth_path(&path(v), &grid()).unwrap();
        assert!((s[4].x - 5.2).abs() < 1e-12);
    }

    #[test]
    fn short_paths() {
        let two = path(vec![[1, 1, 1], [2, 2, 2]]);
        let s = smooth_path(&two, &grid()).unwrap();
        assert_eq!(s[0], Vec3::new(1.0, 1.0, 2.0));
        assert_eq!(s[1], Vec3::new(2.0, 2.0, 4.0));
        assert!(matches!(smooth_path(&path(vec![[1, 1, 1]]), &grid()), Err(Error::PathTooShort(1, 2))));
    }
}
