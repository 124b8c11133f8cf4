//! Extrinsic-ball clipping: areas and connected components of a mesh
//! intersected with a Euclidean ball, plus point-to-mesh distance queries.

use super::{TriMesh, Vec3};
use crate::{Error, Result};

/// Closest point on a triangle to a query point.
pub fn closest_point_on_triangle(p: Vec3, a: Vec3, b: Vec3, c: Vec3) -> Vec3 {
    // Ericson, Real-Time Collision Detection.
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + v * ab;
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + w * ac;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + w * (c - b);
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

pub fn face_distance(mesh: &TriMesh, fi: usize, p: Vec3) -> f64 {
    let f = mesh.faces[fi];
    (closest_point_on_triangle(
        p,
        mesh.positions[f[0]],
        mesh.positions[f[1]],
        mesh.positions[f[2]],
    ) - p)
        .norm()
}

/// Uniform-grid face bucketing for distance queries against a mesh.
pub struct FaceGrid<'a> {
    mesh: &'a TriMesh,
    lo: Vec3,
    cell: f64,
    dims: [usize; 3],
    buckets: Vec<Vec<u32>>,
}

impl<'a> FaceGrid<'a> {
    pub fn new(mesh: &'a TriMesh) -> Self {
        let (lo, hi) = mesh.bounding_box();
        let extent = hi - lo;
        let target = (mesh.n_faces() as f64).cbrt().max(1.0);
        let cell = (extent.max() / target).max(1e-12) * 1.5 + 1e-12;
        let dims = [
            ((extent.x / cell).ceil() as usize + 1).max(1),
            ((extent.y / cell).ceil() as usize + 1).max(1),
            ((extent.z / cell).ceil() as usize + 1).max(1),
        ];
        let mut buckets = vec![Vec::new(); dims[0] * dims[1] * dims[2]];
        for fi in 0..mesh.n_faces() {
            let f = mesh.faces[fi];
            let mut flo = Vec3::repeat(f64::INFINITY);
            let mut fhi = Vec3::repeat(f64::NEG_INFINITY);
            for &v in &f {
                let p = mesh.positions[v];
                for k in 0..3 {
                    flo[k] = flo[k].min(p[k]);
                    fhi[k] = fhi[k].max(p[k]);
                }
            }
            let c0 = Self::clamp_cell(&lo, cell, &dims, flo);
            let c1 = Self::clamp_cell(&lo, cell, &dims, fhi);
            for x in c0[0]..=c1[0] {
                for y in c0[1]..=c1[1] {
                    for z in c0[2]..=c1[2] {
                        buckets[(z * dims[1] + y) * dims[0] + x].push(fi as u32);
                    }
                }
            }
        }
        Self {
            mesh,
            lo,
            cell,
            dims,
            buckets,
        }
    }

    fn clamp_cell(lo: &Vec3, cell: f64, dims: &[usize; 3], p: Vec3) -> [usize; 3] {
        let mut out = [0usize; 3];
        for k in 0..3 {
            let i = ((p[k] - lo[k]) / cell).floor();
            out[k] = (i.max(0.0) as usize).min(dims[k] - 1);
        }
        out
    }

    /// Distance from a point to the mesh surface (expanding ring search).
    pub fn distance(&self, p: Vec3) -> f64 {
        self.closest_point(p).1
    }

    /// Closest surface point and its distance (expanding ring search).
    pub fn closest_point(&self, p: Vec3) -> (Vec3, f64) {
        let c = Self::clamp_cell(&self.lo, self.cell, &self.dims, p);
        let mut best = f64::INFINITY;
        let mut best_point = p;
        let max_ring = self.dims.iter().max().unwrap() + 1;
        for ring in 0..max_ring {
            if best < (ring as f64 - 1.0).max(0.0) * self.cell {
                break;
            }
            let mut any = false;
            for x in c[0].saturating_sub(ring)..=(c[0] + ring).min(self.dims[0] - 1) {
                for y in c[1].saturating_sub(ring)..=(c[1] + ring).min(self.dims[1] - 1) {
                    for z in c[2].saturating_sub(ring)..=(c[2] + ring).min(self.dims[2] - 1) {
                        let on_shell = x == c[0].saturating_sub(ring)
                            || x == (c[0] + ring).min(self.dims[0] - 1)
                            || y == c[1].saturating_sub(ring)
                            || y == (c[1] + ring).min(self.dims[1] - 1)
                            || z == c[2].saturating_sub(ring)
                            || z == (c[2] + ring).min(self.dims[2] - 1);
                        if ring > 0 && !on_shell {
                            continue;
                        }
                        any = true;
                        for &fi in &self.buckets[(z * self.dims[1] + y) * self.dims[0] + x] {
                            let f = self.mesh.faces[fi as usize];
                            let q = closest_point_on_triangle(
                                p,
                                self.mesh.positions[f[0]],
                                self.mesh.positions[f[1]],
                                self.mesh.positions[f[2]],
                            );
                            let d = (q - p).norm();
                            if d < best {
                                best = d;
                                best_point = q;
                            }
                        }
                    }
                }
            }
            if !any {
                break;
            }
        }
        (best_point, best)
    }

    /// Whether any surface point lies within `r` of `p`.
    pub fn within(&self, p: Vec3, r: f64) -> bool {
        self.distance(p) < r
    }
}

fn tri_area(a: Vec3, b: Vec3, c: Vec3) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}

fn clip_area_recursive(a: Vec3, b: Vec3, c: Vec3, center: Vec3, r: f64, depth: usize) -> f64 {
    let ina = (a - center).norm() <= r;
    let inb = (b - center).norm() <= r;
    let inc = (c - center).norm() <= r;
    let area = tri_area(a, b, c);
    if ina && inb && inc {
        return area;
    }
    if !ina && !inb && !inc {
        // The triangle may still clip the ball without containing vertices.
        let cp = closest_point_on_triangle(center, a, b, c);
        if (cp - center).norm() >= r {
            return 0.0;
        }
    }
    if depth == 0 {
        // Leaf: credit by centroid membership.
        let g = (a + b + c) / 3.0;
        return if (g - center).norm() <= r { area } else { 0.0 };
    }
    let mab = (a + b) / 2.0;
    let mbc = (b + c) / 2.0;
    let mca = (c + a) / 2.0;
    clip_area_recursive(a, mab, mca, center, r, depth - 1)
        + clip_area_recursive(mab, b, mbc, center, r, depth - 1)
        + clip_area_recursive(mca, mbc, c, center, r, depth - 1)
        + clip_area_recursive(mab, mbc, mca, center, r, depth - 1)
}

/// Exact-to-tolerance area of the mesh clipped to the extrinsic ball
/// B_r(center). Boundary-crossing faces are subdivided barycentrically
/// until the leaf size resolves the circle to relative error about 1e-3.
pub fn area_in_ball(mesh: &TriMesh, center: Vec3, r: f64) -> f64 {
    assert!(r > 0.0, "ball radius must be positive");
    let mut total = 0.0;
    for fi in 0..mesh.n_faces() {
        let f = mesh.faces[fi];
        let (a, b, c) = (
            mesh.positions[f[0]],
            mesh.positions[f[1]],
            mesh.positions[f[2]],
        );
        // Cheap reject: bounding sphere of the face vs ball.
        let g = (a + b + c) / 3.0;
        let rad = (a - g).norm().max((b - g).norm()).max((c - g).norm());
        if (g - center).norm() > r + rad {
            continue;
        }
        let h = (a - b).norm().max((b - c).norm()).max((c - a).norm());
        // Leaf edge ~ max(5e-4 r, h/2^12).
        let depth = ((h / (5e-4 * r)).log2().ceil() as i64).clamp(1, 12) as usize;
        total += clip_area_recursive(a, b, c, center, r, depth);
    }
    total
}

/// Faces of the connected component of the clipped surface containing the
/// seed vertex. Faces are connected across an edge only when the shared
/// edge itself meets the ball, so components separated inside the ball stay
/// separate.
pub fn component_in_ball(
    mesh: &TriMesh,
    seed: usize,
    center: Vec3,
    r: f64,
) -> Result<Vec<usize>> {
    if (mesh.positions[seed] - center).norm() > r {
        return Err(Error::SeedOutsideBall(seed));
    }
    let face_in_ball = |fi: usize| face_distance(mesh, fi, center) < r;
    let edge_in_ball = |a: usize, b: usize| {
        let pa = mesh.positions[a];
        let pb = mesh.positions[b];
        // Closest point on segment to center.
        let d = pb - pa;
        let t = ((center - pa).dot(&d) / d.norm_squared()).clamp(0.0, 1.0);
        (pa + t * d - center).norm() < r
    };
    let mut visited = vec![false; mesh.n_faces()];
    let mut queue: std::collections::VecDeque<usize> = mesh
        .vertex_faces(seed)
        .iter()
        .copied()
        .filter(|&fi| face_in_ball(fi))
        .collect();
    for &fi in &queue {
        visited[fi] = true;
    }
    let mut out = Vec::new();
    while let Some(fi) = queue.pop_front() {
        out.push(fi);
        let f = mesh.faces[fi];
        for k in 0..3 {
            let a = f[k];
            let b = f[(k + 1) % 3];
            if !edge_in_ball(a, b) {
                continue;
            }
            let e = mesh.edges[mesh.edge_between(a, b).unwrap()];
            for of in e.faces.into_iter().flatten() {
                if !visited[of] && face_in_ball(of) {
                    visited[of] = true;
                    queue.push_back(of);
                }
            }
        }
    }
    out.sort_unstable();
    Ok(out)
}

/// Euler characteristic, boundary-loop count and derived genus of a face
/// subset, capping boundary components by disks. When the clip radius is
/// tangent to the subset boundary the loop count is ambiguous; callers
/// perturb r by 1e-6 relative and retry (see `genus_of_clip`).
pub fn subset_genus(mesh: &TriMesh, faces: &[usize]) -> (i64, usize, i64) {
    use std::collections::{HashMap, HashSet};
    let fset: HashSet<usize> = faces.iter().copied().collect();
    let mut verts: HashSet<usize> = HashSet::new();
    let mut edge_count: HashMap<(usize, usize), usize> = HashMap::new();
    for &fi in faces {
        let f = mesh.faces[fi];
        for k in 0..3 {
            verts.insert(f[k]);
            let a = f[k];
            let b = f[(k + 1) % 3];
            *edge_count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    let v = verts.len() as i64;
    let e = edge_count.len() as i64;
    let fno = faces.len() as i64;
    let chi = v - e + fno;
    // Boundary edges: used once by the subset.
    let boundary_edges: Vec<(usize, usize)> = edge_count
        .iter()
        .filter(|(_, &c)| c == 1)
        .map(|(&k, _)| k)
        .collect();
    // Count loops by walking boundary adjacency.
    let mut adj: HashMap<usize, Vec<usize>> = HashMap::new();
    for &(a, b) in &boundary_edges {
        adj.entry(a).or_default().push(b);
        adj.entry(b).or_default().push(a);
    }
    let mut seen: HashSet<(usize, usize)> = HashSet::new();
    let mut loops = 0usize;
    for &(a0, b0) in &boundary_edges {
        if seen.contains(&(a0, b0)) {
            continue;
        }
        loops += 1;
        let (mut prev, mut cur) = (a0, b0);
        seen.insert((a0, b0));
        loop {
            let next = adj[&cur]
                .iter()
                .copied()
                .find(|&n| n != prev && !seen.contains(&(n.min(cur), n.max(cur))))
                .or_else(|| adj[&cur].iter().copied().find(|&n| n != prev));
            match next {
                Some(n) => {
                    let key = (n.min(cur), n.max(cur));
                    if seen.contains(&key) {
                        break;
                    }
                    seen.insert(key);
                    prev = cur;
                    cur = n;
                    if cur == a0 {
                        break;
                    }
                }
                None => break,
            }
        }
    }
    let _ = fset;
    // chi of capped surface = chi + loops; genus = (2 - chi_capped)/2 per component.
    let genus = (2 - (chi + loops as i64)) / 2;
    (chi, loops, genus.max(0))
}
