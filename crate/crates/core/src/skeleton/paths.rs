use super::topology::bfs_parents;
use super::{AirwayPath, CentrelineTree};
use crate::{Error, Result, Voxel};

fn route(parents: &[Option<Voxel>], tree: &CentrelineTree, to: Voxel) -> Result<Vec<Voxel>> {
    let sk = &tree.skeleton;
    if !sk.contains(to) || !sk.at(to) {
        return Err(Error::Unreachable(to));
    }
    let mut out = vec![to];
    let mut v = to;
    while v != tree.start {
        v = parents[sk.index(v)].ok_or(Error::Unreachable(to))?;
        out.push(v);
    }
    out.reverse();
    Ok(out)
}

/// Carina-to-distal paths, one per distal point, in the order given.
///
/// Routes are breadth-first from the trachea start. The carina is the last
/// voxel shared by every route, i.e. the point where they first diverge;
/// with a single distal point it is the start itself. Skeleton branches that
/// lead to no distal point never appear in the output.
pub fn extract_paths(tree: &CentrelineTree) -> Result<Vec<AirwayPath>> {
    if !tree.skeleton.contains(tree.start) || !tree.skeleton.at(tree.start) {
        return Err(Error::AnchorOutsideMask(tree.start));
    }
    let parents = bfs_parents(&tree.skeleton, tree.start);
    let routes = tree
        .distal
        .iter()
        .map(|d| route(&parents, tree, d.voxel))
        .collect::<Result<Vec<_>>>()?;
    let shared = if routes.len() < 2 {
        1
    } else {
        let shortest = routes.iter().map(Vec::len).min().unwrap_or(1);
        (0..shortest)
            .take_while(|&i| routes.iter().all(|r| r[i] == routes[0][i]))
            .count()
    };
    Ok(tree
        .distal
        .iter()
        .zip(routes)
        .map(|(d, r)| AirwayPath {
            id: d.id.clone(),
            voxels: r[shared - 1..].to_vec(),
        })
        .collect())
}

/// Carina voxel of a tree, as used by [`extract_paths`].
pub fn carina(tree: &CentrelineTree) -> Result<Voxel> {
    let paths = extract_paths(tree)?;
    Ok(paths.first().map(|p| p.voxels[0]).unwrap_or(tree.start))
}
