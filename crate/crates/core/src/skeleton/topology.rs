//! Small connectivity helpers on binary masks.

use std::collections::VecDeque;

use crate::volio::{offset_voxel, BinaryMask, NEIGHBOURS_26};
use crate::Voxel;

/// Set voxels among the 26 neighbours of `v`.
pub fn object_neighbours(m: &BinaryMask, v: Voxel) -> Vec<Voxel> {
    NEIGHBOURS_26
        .iter()
        .filter_map(|&d| offset_voxel(v, d, m.dims()))
        .filter(|&q| m.at(q))
        .collect()
}

/// Number of 26-connected components of the set voxels.
pub fn count_components_26(m: &BinaryMask) -> usize {
    let mut seen = vec![false; m.len()];
    let mut count = 0;
    let mut queue = VecDeque::new();
    for (idx, &set) in m.data().iter().enumerate() {
        if !set || seen[idx] {
            continue;
        }
        count += 1;
        seen[idx] = true;
        queue.push_back(m.voxel_of(idx));
        while let Some(v) = queue.pop_front() {
            for q in object_neighbours(m, v) {
                let qi = m.index(q);
                if !seen[qi] {
                    seen[qi] = true;
                    queue.push_back(q);
                }
            }
        }
    }
    count
}

/// Breadth-first parents over set voxels from `source`. Unreached voxels map
/// to `None`; the source maps to itself.
pub fn bfs_parents(m: &BinaryMask, source: Voxel) -> Vec<Option<Voxel>> {
    let mut parent = vec![None; m.len()];
    parent[m.index(source)] = Some(source);
    let mut queue = VecDeque::from([source]);
    while let Some(v) = queue.pop_front() {
        for q in object_neighbours(m, v) {
            let qi = m.index(q);
            if parent[qi].is_none() {
                parent[qi] = Some(v);
                queue.push_back(q);
            }
        }
    }
    parent
}
