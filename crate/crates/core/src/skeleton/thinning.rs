//! Directional sequential curve thinning.
//!
//! Six sub-iterations per pass (up, down, north, south, east, west). In each
//! one, border points facing that direction are collected, then deleted one
//! at a time if they are still simple, not anchors and not curve endpoints.
//! Spurs without an anchor are pruned afterwards.

use std::sync::OnceLock;

use super::topology::object_neighbours;
use super::{CentrelineTree, DistalPoint};
use crate::volio::{offset_voxel, BinaryMask};
use crate::{Error, Result, Voxel};

const CENTRE: usize = 13;

const DIRECTIONS: [[isize; 3]; 6] = [
    [0, 0, -1],
    [0, 0, 1],
    [0, -1, 0],
    [0, 1, 0],
    [-1, 0, 0],
    [1, 0, 0],
];

fn offset_of(p: usize) -> [isize; 3] {
    [(p % 3) as isize - 1, ((p / 3) % 3) as isize - 1, (p / 9) as isize - 1]
}

struct Adjacency {
    adj26: Vec<Vec<usize>>,
    adj6: Vec<Vec<usize>>,
    in_n18: [bool; 27],
}

fn adjacency() -> &'static Adjacency {
    static TABLE: OnceLock<Adjacency> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut adj26 = vec![Vec::new(); 27];
        let mut adj6 = vec![Vec::new(); 27];
        let mut in_n18 = [false; 27];
        for p in 0..27 {
            let a = offset_of(p);
            in_n18[p] = p != CENTRE && a.iter().map(|x| x.abs()).sum::<isize>() <= 2;
            for q in 0..27 {
                if p == q || p == CENTRE || q == CENTRE {
                    continue;
                }
                let b = offset_of(q);
                let d: Vec<isize> = (0..3).map(|i| (a[i] - b[i]).abs()).collect();
                if d.iter().all(|&x| x <= 1) {
                    adj26[p].push(q);
                    if d.iter().sum::<isize>() == 1 {
                        adj6[p].push(q);
                    }
                }
            }
        }
        Adjacency { adj26, adj6, in_n18 }
    })
}

fn components(members: u32, adj: &[Vec<usize>], seeds: u32) -> usize {
    let mut seen = 0u32;
    let mut count = 0;
    for p in 0..27 {
        let bit = 1u32 << p;
        if members & bit == 0 || seen & bit != 0 || seeds & bit == 0 {
            continue;
        }
        count += 1;
        let mut stack = vec![p];
        seen |= bit;
        while let Some(x) = stack.pop() {
            for &y in &adj[x] {
                let yb = 1u32 << y;
                if members & yb != 0 && seen & yb == 0 {
                    seen |= yb;
                    stack.push(y);
                }
            }
        }
    }
    count
}

/// Simple-point test for (26, 6) connectivity on a 3×3×3 neighbourhood.
///
/// Bit `p` of `neighbourhood` is set when position `p` (x fastest, centre at
/// 13) belongs to the object. The centre bit is ignored.
pub fn is_simple(neighbourhood: u32) -> bool {
    let t = adjacency();
    let object = neighbourhood & !(1 << CENTRE) & ((1 << 27) - 1);
    let all: u32 = (1 << 27) - 1;
    if components(object, &t.adj26, all) != 1 {
        return false;
    }
    let mut n18 = 0u32;
    for p in 0..27 {
        if t.in_n18[p] {
            n18 |= 1 << p;
        }
    }
    let background = n18 & !object;
    let faces: u32 = [4usize, 10, 12, 14, 16, 22].iter().map(|&p| 1u32 << p).sum();
    components(background, &t.adj6, faces) == 1
}

fn neighbourhood_bits(m: &BinaryMask, v: Voxel) -> u32 {
    let mut bits = 0u32;
    for p in 0..27 {
        if p == CENTRE {
            continue;
        }
        if let Some(q) = offset_voxel(v, offset_of(p), m.dims()) {
            if m.at(q) {
                bits |= 1 << p;
            }
        }
    }
    bits
}

fn deletable(m: &BinaryMask, v: Voxel, anchors: &[bool]) -> bool {
    if anchors[m.index(v)] {
        return false;
    }
    let bits = neighbourhood_bits(m, v);
    bits.count_ones() > 1 && is_simple(bits)
}

fn is_border(m: &BinaryMask, v: Voxel, d: [isize; 3]) -> bool {
    offset_voxel(v, d, m.dims()).is_none_or(|q| !m.at(q))
}

/// Thin `m` to a one-voxel-wide curve skeleton that keeps `start` and every
/// distal voxel, then prune unanchored spurs.
pub fn thin_to_centreline(m: &BinaryMask, start: Voxel, distal: &[DistalPoint]) -> Result<CentrelineTree> {
    let mut anchors = vec![false; m.len()];
    for v in std::iter::once(start).chain(distal.iter().map(|d| d.voxel)) {
        if !m.contains(v) || !m.at(v) {
            return Err(Error::AnchorOutsideMask(v));
        }
        anchors[m.index(v)] = true;
    }
    let mut sk = m.clone();
    let mut object: Vec<Voxel> = sk.voxels().collect();
    loop {
        let mut changed = false;
        for d in DIRECTIONS {
            let candidates: Vec<Voxel> = object
                .iter()
                .copied()
                .filter(|&v| is_border(&sk, v, d) && deletable(&sk, v, &anchors))
                .collect();
            for v in candidates {
                if deletable(&sk, v, &anchors) {
                    sk.set(v, false);
                    changed = true;
                }
            }
            object.retain(|&v| sk.at(v));
        }
        if !changed {
            break;
        }
    }
    prune(&mut sk, &anchors, &object);
    Ok(CentrelineTree {
        skeleton: sk,
        start,
        distal: distal.to_vec(),
    })
}

/// Repeatedly remove unanchored voxels with exactly one neighbour.
fn prune(sk: &mut BinaryMask, anchors: &[bool], object: &[Voxel]) {
    let mut tips: Vec<Voxel> = object
        .iter()
        .copied()
        .filter(|&v| sk.at(v) && !anchors[sk.index(v)] && object_neighbours(sk, v).len() == 1)
        .collect();
    while let Some(v) = tips.pop() {
        if !sk.at(v) || anchors[sk.index(v)] {
            continue;
        }
        let nb = object_neighbours(sk, v);
        if nb.len() != 1 {
            continue;
        }
        sk.set(v, false);
        let q = nb[0];
        if !anchors[sk.index(q)] && object_neighbours(sk, q).len() == 1 {
            tips.push(q);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skeleton::topology::count_components_26;
    use crate::volio::Volume;

    fn bits_of(points: &[[isize; 3]]) -> u32 {
        points
            .iter()
            .map(|o| 1u32 << ((o[0] + 1) + 3 * (o[1] + 1) + 9 * (o[2] + 1)) as u32)
            .sum()
    }

    #[test]
    fn simple_point_cases() {
        // Tip of a line: one neighbour, simple.
        assert!(is_simple(bits_of(&[[0, 0, -1]])));
        // Middle of a line: two components once the centre is removed.
        assert!(!is_simple(bits_of(&[[0, 0, -1], [0, 0, 1]])));
        // Isolated point.
        assert!(!is_simple(0));
        // Interior point: no background, so removal would create a cavity.
        assert!(!is_simple((1 << 27) - 1));
        // Corner of a solid cube.
        let corner: Vec<[isize; 3]> = (0..27)
            .map(offset_of)
            .filter(|o| o.iter().all(|&x| x >= 0) && *o != [0, 0, 0])
            .collect();
        assert!(is_simple(bits_of(&corner)));
        // Centre of a flat 3×3 plate: removal punches a tunnel.
        let plate: Vec<[isize; 3]> = (0..27).map(offset_of).filter(|o| o[2] == 0 && *o != [0, 0, 0]).collect();
        assert!(!is_simple(bits_of(&plate)));
    }

    #[test]
    fn single_voxel_mask_is_kept() {
        let mut m = Volume::filled([3, 3, 3], [1.0; 3], [0.0; 3], false).unwrap();
        m.set([1, 1, 1], true);
        let t = thin_to_centreline(&m, [1, 1, 1], &[]).unwrap();
        assert_eq!(t.skeleton, m);
    }

    #[test]
    fn anchor_outside_mask_is_rejected() {
        let m = Volume::filled([3, 3, 3], [1.0; 3], [0.0; 3], false).unwrap();
        assert!(matches!(thin_to_centreline(&m, [1, 1, 1], &[]), Err(Error::AnchorOutsideMask(_))));
    }

    #[test]
    fn box_thins_to_connected_curve() {
        let mut m = Volume::filled([9, 9, 20], [1.0; 3], [0.0; 3], false).unwrap();
        for k in 1..19 {
            for j in 2..7 {
                for i in 2..7 {
                    m.set([i, j, k], true);
                }
            }
        }
        let d = DistalPoint { id: "a".into(), voxel: [4, 4, 18] };
        let t = thin_to_centreline(&m, [4, 4, 1], &[d]).unwrap();
        assert_eq!(count_components_26(&t.skeleton), 1);
        assert!(t.skeleton.at([4, 4, 1]) && t.skeleton.at([4, 4, 18]));
        for v in t.skeleton.voxels() {
            assert!(m.at(v));
            assert!((v[0] as f64 - 4.0).abs() <= 1.0 && (v[1] as f64 - 4.0).abs() <= 1.0, "{v:?}");
            let deg = t.degree(v);
            assert!(deg <= 2, "{v:?} has degree {deg}");
        }
    }
}
