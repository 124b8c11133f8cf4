//! Reference surfaces used by the lab and its test suites.

use super::{TriMesh, Vec3};
use std::collections::HashMap;

/// Regular tetrahedron inscribed in the unit sphere.
pub fn tetrahedron() -> TriMesh {
    let s = 1.0 / 3.0_f64.sqrt();
    let positions = vec![
        Vec3::new(s, s, s),
        Vec3::new(s, -s, -s),
        Vec3::new(-s, s, -s),
        Vec3::new(-s, -s, s),
    ];
    let faces = vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]];
    TriMesh::build(positions, faces).unwrap()
}

/// Icosphere: subdivided icosahedron projected to a sphere.
///
/// Level 0 has 12 vertices; each level quadruples the face count
/// (12, 42, 162, 642, 2562, 10242, ... vertices).
pub fn icosphere(level: usize, radius: f64, center: Vec3) -> TriMesh {
    let phi = (1.0 + 5.0_f64.sqrt()) / 2.0;
    let mut positions: Vec<Vec3> = vec![
        Vec3::new(-1.0, phi, 0.0),
        Vec3::new(1.0, phi, 0.0),
        Vec3::new(-1.0, -phi, 0.0),
        Vec3::new(1.0, -phi, 0.0),
        Vec3::new(0.0, -1.0, phi),
        Vec3::new(0.0, 1.0, phi),
        Vec3::new(0.0, -1.0, -phi),
        Vec3::new(0.0, 1.0, -phi),
        Vec3::new(phi, 0.0, -1.0),
        Vec3::new(phi, 0.0, 1.0),
        Vec3::new(-phi, 0.0, -1.0),
        Vec3::new(-phi, 0.0, 1.0),
    ]
    .into_iter()
    .map(|p| p.normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut new_faces = Vec::with_capacity(faces.len() * 4);
        for f in &faces {
            let mut mid = [0usize; 3];
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                mid[k] = *midpoint.entry(key).or_insert_with(|| {
                    positions.push(((positions[a] + positions[b]) / 2.0).normalize());
                    positions.len() - 1
                });
            }
            new_faces.push([f[0], mid[0], mid[2]]);
            new_faces.push([f[1], mid[1], mid[0]]);
            new_faces.push([f[2], mid[2], mid[1]]);
            new_faces.push([mid[0], mid[1], mid[2]]);
        }
        faces = new_faces;
    }
    let positions = positions.into_iter().map(|p| center + radius * p).collect();
    TriMesh::build(positions, faces).unwrap()
}

/// Square planar patch in the plane z = `z`, spanning [-half, half]^2 with
/// `n` cells per side (so (n+1)^2 vertices). Open surface with boundary.
pub fn plane_patch(n: usize, half: f64, z: f64) -> TriMesh {
    plane_patch_at(n, half, z, |x, y| Vec3::new(x, y, z))
}

/// Planar patch with a custom embedding of the (x, y) grid.
pub fn plane_patch_at<F: Fn(f64, f64) -> Vec3>(n: usize, half: f64, _z: f64, embed: F) -> TriMesh {
    let mut positions = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            let x = -half + 2.0 * half * i as f64 / n as f64;
            let y = -half + 2.0 * half * j as f64 / n as f64;
            positions.push(embed(x, y));
        }
    }
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    let mut faces = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            faces.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            faces.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    TriMesh::build(positions, faces).unwrap()
}

/// Indices of patch vertices at graph-distance at least `margin_cells`
/// from the boundary of a `plane_patch(n, ..)`.
pub fn plane_patch_interior(n: usize, margin_cells: usize) -> Vec<usize> {
    let mut out = Vec::new();
    for j in margin_cells..=(n - margin_cells) {
        for i in margin_cells..=(n - margin_cells) {
            out.push(j * (n + 1) + i);
        }
    }
    out
}

/// Axis-aligned cylinder of the given radius about the z-axis, spanning
/// z in [-half_len, half_len], closed with fan caps.
///
/// Returns the mesh; the tube vertices (away from the caps) are those with
/// |z| < half_len - eps, see [`cylinder_tube_vertices`].
pub fn capped_cylinder(radius: f64, half_len: f64, n_circ: usize, n_axial: usize) -> TriMesh {
    let mut positions = Vec::new();
    for j in 0..=n_axial {
        let z = -half_len + 2.0 * half_len * j as f64 / n_axial as f64;
        for i in 0..n_circ {
            let t = 2.0 * std::f64::consts::PI * i as f64 / n_circ as f64;
            positions.push(Vec3::new(radius * t.cos(), radius * t.sin(), z));
        }
    }
    let idx = |i: usize, j: usize| j * n_circ + i % n_circ;
    let mut faces = Vec::new();
    for j in 0..n_axial {
        for i in 0..n_circ {
            faces.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            faces.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    // Cap centers.
    let bottom = positions.len();
    positions.push(Vec3::new(0.0, 0.0, -half_len));
    let top = positions.len();
    positions.push(Vec3::new(0.0, 0.0, half_len));
    for i in 0..n_circ {
        faces.push([bottom, idx(i + 1, 0), idx(i, 0)]);
        faces.push([top, idx(i, n_axial), idx(i + 1, n_axial)]);
    }
    TriMesh::build(positions, faces).unwrap()
}

/// Vertices of a capped cylinder strictly inside |z| <= z_max.
pub fn cylinder_tube_vertices(mesh: &TriMesh, z_max: f64) -> Vec<usize> {
    (0..mesh.n_vertices())
        .filter(|&v| mesh.positions[v].z.abs() <= z_max)
        .collect()
}

/// Torus of revolution: major radius `big_r` about the z-axis, tube radius
/// `small_r`, with `nu` x `nv` quads split into triangles.
pub fn torus(big_r: f64, small_r: f64, nu: usize, nv: usize) -> TriMesh {
    let mut positions = Vec::with_capacity(nu * nv);
    for j in 0..nv {
        let v = 2.0 * std::f64::consts::PI * j as f64 / nv as f64;
        for i in 0..nu {
            let u = 2.0 * std::f64::consts::PI * i as f64 / nu as f64;
            let r = big_r + small_r * v.cos();
            positions.push(Vec3::new(r * u.cos(), r * u.sin(), small_r * v.sin()));
        }
    }
    let idx = |i: usize, j: usize| (j % nv) * nu + i % nu;
    let mut faces = Vec::new();
    for j in 0..nv {
        for i in 0..nu {
            faces.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            faces.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    TriMesh::build(positions, faces).unwrap()
}

/// Two parallel square patches at z = +gap/2 and z = -gap/2.
pub fn parallel_planes(n: usize, half: f64, gap: f64) -> TriMesh {
    let a = plane_patch(n, half, gap / 2.0);
    let b = plane_patch(n, half, -gap / 2.0);
    a.merged(&b).unwrap()
}

/// Two concentric icospheres of the given radii.
pub fn nested_spheres(level: usize, r_inner: f64, r_outer: f64) -> TriMesh {
    let a = icosphere(level, r_inner, Vec3::zeros());
    let b = icosphere(level, r_outer, Vec3::zeros());
    a.merged(&b).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn icosphere_counts_and_area() {
        let m = icosphere(4, 1.0, Vec3::zeros());
        assert_eq!(m.n_vertices(), 2562);
        assert_eq!(m.n_faces(), 5120);
        assert!(!m.has_boundary);
        // Inscribed polyhedron: area slightly below 4*pi.
        let a = m.total_area();
        assert!(a < 4.0 * std::f64::consts::PI);
        assert_relative_eq!(a, 4.0 * std::f64::consts::PI, max_relative = 2e-3);
    }

    #[test]
    fn plane_patch_is_flat_open_surface() {
        let m = plane_patch(8, 1.0, 0.25);
        assert!(m.has_boundary);
        assert_relative_eq!(m.total_area(), 4.0, max_relative = 1e-12);
        assert!(m.positions.iter().all(|p| (p.z - 0.25).abs() < 1e-15));
    }

    #[test]
    fn torus_characteristic_is_zero() {
        let m = torus(2.0, 0.5, 24, 12);
        assert_eq!(m.euler_characteristic(), 0);
        assert!(!m.has_boundary);
    }

    #[test]
    fn parallel_planes_have_two_components() {
        let m = parallel_planes(4, 1.0, 0.1);
        assert_eq!(m.n_components(), 2);
    }
}
