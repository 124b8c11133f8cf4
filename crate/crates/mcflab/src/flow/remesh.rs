//! Isotropic remeshing: split long edges, collapse short ones, then one
//! tangential smoothing pass. Thresholds follow the usual 4/3 and 4/5
//! multiples of the target edge length.

use crate::mesh::ball::FaceGrid;
use crate::mesh::geometry::Geometry;
use crate::mesh::{TriMesh, Vec3};
use crate::Result;
use std::collections::HashMap;

pub fn isotropic_pass(mesh: &mut TriMesh, target: f64) -> Result<()> {
    let reference = mesh.clone();
    split_long_edges(mesh, 4.0 / 3.0 * target)?;
    collapse_short_edges(mesh, 4.0 / 5.0 * target)?;
    tangential_smooth(mesh, 0.5)?;
    // Snap the result back onto the pre-pass surface so the pass moves
    // vertices only within it.
    let grid = FaceGrid::new(&reference);
    for p in &mut mesh.positions {
        let (q, _) = grid.closest_point(*p);
        *p = q;
    }
    Ok(())
}

fn split_long_edges(mesh: &mut TriMesh, max_len: f64) -> Result<()> {
    let mut positions = mesh.positions.clone();
    let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
    for e in &mesh.edges {
        let [a, b] = e.verts;
        if (positions[a] - positions[b]).norm() > max_len {
            let key = (a.min(b), a.max(b));
            positions.push((positions[a] + positions[b]) / 2.0);
            midpoint.insert(key, positions.len() - 1);
        }
    }
    if midpoint.is_empty() {
        return Ok(());
    }
    let mut faces = Vec::with_capacity(mesh.faces.len() * 2);
    for f in &mesh.faces {
        let m: Vec<Option<usize>> = (0..3)
            .map(|k| {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                midpoint.get(&(a.min(b), a.max(b))).copied()
            })
            .collect();
        match m.iter().filter(|x| x.is_some()).count() {
            0 => faces.push(*f),
            1 => {
                let k = m.iter().position(|x| x.is_some()).unwrap();
                let mid = m[k].unwrap();
                let (a, b, c) = (f[k], f[(k + 1) % 3], f[(k + 2) % 3]);
                faces.push([a, mid, c]);
                faces.push([mid, b, c]);
            }
            2 => {
                let k = m.iter().position(|x| x.is_none()).unwrap();
                // Edges (k+1, k+2) are split; vertices renamed so that the
                // unsplit edge is (a, b).
                let (a, b, c) = (f[k], f[(k + 1) % 3], f[(k + 2) % 3]);
                let mbc = m[(k + 1) % 3].unwrap();
                let mca = m[(k + 2) % 3].unwrap();
                faces.push([a, b, mbc]);
                faces.push([a, mbc, mca]);
                faces.push([mca, mbc, c]);
            }
            _ => {
                let (a, b, c) = (f[0], f[1], f[2]);
                let mab = m[0].unwrap();
                let mbc = m[1].unwrap();
                let mca = m[2].unwrap();
                faces.push([a, mab, mca]);
                faces.push([mab, b, mbc]);
                faces.push([mca, mbc, c]);
                faces.push([mab, mbc, mca]);
            }
        }
    }
    *mesh = TriMesh::build(positions, faces)?;
    Ok(())
}

fn collapse_short_edges(mesh: &mut TriMesh, min_len: f64) -> Result<()> {
    let mut touched = vec![false; mesh.n_vertices()];
    let mut remap: Vec<usize> = (0..mesh.n_vertices()).collect();
    let mut positions = mesh.positions.clone();
    let mut any = false;
    for e in &mesh.edges {
        let [a, b] = e.verts;
        if touched[a] || touched[b] {
            continue;
        }
        if (positions[a] - positions[b]).norm() >= min_len {
            continue;
        }
        if e.faces[1].is_none() {
            continue; // keep boundary intact
        }
        // Link condition: common neighbours of a and b must be exactly the
        // two opposite vertices of the shared faces.
        let na: std::collections::HashSet<usize> =
            mesh.vertex_neighbors(a).iter().copied().collect();
        let common: Vec<usize> = mesh
            .vertex_neighbors(b)
            .iter()
            .copied()
            .filter(|v| na.contains(v))
            .collect();
        if common.len() != 2 {
            continue;
        }
        let mid = (positions[a] + positions[b]) / 2.0;
        positions[a] = mid;
        remap[b] = a;
        touched[a] = true;
        touched[b] = true;
        for &c in &common {
            touched[c] = true;
        }
        any = true;
    }
    if !any {
        return Ok(());
    }
    let mut faces = Vec::with_capacity(mesh.faces.len());
    for f in &mesh.faces {
        let g = [remap[f[0]], remap[f[1]], remap[f[2]]];
        if g[0] != g[1] && g[1] != g[2] && g[0] != g[2] {
            faces.push(g);
        }
    }
    // Compact unused vertices.
    let mut used = vec![usize::MAX; positions.len()];
    let mut new_positions = Vec::new();
    for f in &mut faces {
        for v in f.iter_mut() {
            if used[*v] == usize::MAX {
                used[*v] = new_positions.len();
                new_positions.push(positions[*v]);
            }
            *v = used[*v];
        }
    }
    *mesh = TriMesh::build(new_positions, faces)?;
    Ok(())
}

fn tangential_smooth(mesh: &mut TriMesh, lambda: f64) -> Result<()> {
    let geom = Geometry::new(mesh, false)?;
    let mut new_positions = mesh.positions.clone();
    for v in 0..mesh.n_vertices() {
        let nbrs = mesh.vertex_neighbors(v);
        if nbrs.is_empty() {
            continue;
        }
        let mut centroid = Vec3::zeros();
        for &u in nbrs {
            centroid += mesh.positions[u];
        }
        centroid /= nbrs.len() as f64;
        let d = centroid - mesh.positions[v];
        let n = geom.normals[v];
        let tangential = d - d.dot(&n) * n;
        new_positions[v] += lambda * tangential;
    }
    mesh.positions = new_positions;
    Ok(())
}
