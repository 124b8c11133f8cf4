//! Triangulated-surface representation and the discrete geometric
//! operators consumed by the rest of the crate.

pub mod ball;
pub mod distance;
pub mod geometry;
pub mod io;
pub mod primitives;
pub mod reach;

pub use geometry::Geometry;

use crate::{Error, Result};
use nalgebra::Vector3;
use std::collections::HashMap;

pub type Vec3 = Vector3<f64>;

/// An undirected mesh edge with its (at most two) incident faces.
#[derive(Debug, Clone, Copy)]
pub struct Edge {
    pub verts: [usize; 2],
    pub faces: [Option<usize>; 2],
}

/// A triangle mesh with adjacency tables.
///
/// Faces are oriented index triples; a consistently oriented closed mesh
/// has every interior edge appearing once in each direction. Construction
/// validates manifoldness and repairs orientation when a consistent
/// orientation exists.
#[derive(Debug, Clone)]
pub struct TriMesh {
    pub positions: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
    pub edges: Vec<Edge>,
    /// Map from sorted vertex pair to edge index.
    edge_index: HashMap<(usize, usize), usize>,
    /// CSR vertex -> incident faces.
    v2f_offsets: Vec<usize>,
    v2f_data: Vec<usize>,
    /// CSR vertex -> neighbour vertices.
    v2v_offsets: Vec<usize>,
    v2v_data: Vec<usize>,
    pub has_boundary: bool,
}

impl TriMesh {
    /// Build a mesh from raw positions and faces, validating manifoldness
    /// and repairing orientation. Degenerate faces (area below 1e-14 times
    /// the mean face area) are dropped with a count returned through
    /// `degenerate_report`.
    pub fn build(positions: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        Self::build_with_report(positions, faces).map(|(m, _)| m)
    }

    pub fn build_with_report(
        positions: Vec<Vec3>,
        mut faces: Vec<[usize; 3]>,
    ) -> Result<(Self, usize)> {
        let nv = positions.len();
        for f in &faces {
            for &v in f {
                if v >= nv {
                    return Err(Error::Parse(format!("face index {v} out of range")));
                }
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::Parse("face with repeated vertex".into()));
            }
        }

        // Drop degenerate faces.
        let areas: Vec<f64> = faces
            .iter()
            .map(|f| {
                let a = positions[f[1]] - positions[f[0]];
                let b = positions[f[2]] - positions[f[0]];
                0.5 * a.cross(&b).norm()
            })
            .collect();
        let mean_area = areas.iter().sum::<f64>() / areas.len().max(1) as f64;
        let before = faces.len();
        let mut keep = Vec::with_capacity(faces.len());
        for (f, &a) in faces.iter().zip(&areas) {
            if a > 1e-14 * mean_area {
                keep.push(*f);
            }
        }
        let dropped = before - keep.len();
        faces = keep;

        let mut mesh = Self::assemble(positions, faces)?;
        mesh.orient()?;
        // Rebuild adjacency after orientation flips.
        let m = Self::assemble(mesh.positions, mesh.faces)?;
        Ok((m, dropped))
    }

    fn assemble(positions: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let nv = positions.len();
        let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges: Vec<Edge> = Vec::new();
        for (fi, f) in faces.iter().enumerate() {
            for k in 0..3 {
                let a = f[k];
                let b = f[(k + 1) % 3];
                let key = (a.min(b), a.max(b));
                let ei = *edge_index.entry(key).or_insert_with(|| {
                    edges.push(Edge {
                        verts: [key.0, key.1],
                        faces: [None, None],
                    });
                    edges.len() - 1
                });
                let e = &mut edges[ei];
                if e.faces[0].is_none() {
                    e.faces[0] = Some(fi);
                } else if e.faces[1].is_none() {
                    e.faces[1] = Some(fi);
                } else {
                    return Err(Error::NonManifold(format!(
                        "edge ({}, {}) has more than two incident faces",
                        key.0, key.1
                    )));
                }
            }
        }
        let has_boundary = edges.iter().any(|e| e.faces[1].is_none());

        // vertex -> faces CSR
        let mut v2f_offsets = vec![0usize; nv + 1];
        for f in &faces {
            for &v in f {
                v2f_offsets[v + 1] += 1;
            }
        }
        for i in 0..nv {
            v2f_offsets[i + 1] += v2f_offsets[i];
        }
        let mut v2f_data = vec![0usize; v2f_offsets[nv]];
        let mut cursor = v2f_offsets.clone();
        for (fi, f) in faces.iter().enumerate() {
            for &v in f {
                v2f_data[cursor[v]] = fi;
                cursor[v] += 1;
            }
        }

        // vertex -> vertex CSR from edges
        let mut v2v_offsets = vec![0usize; nv + 1];
        for e in &edges {
            v2v_offsets[e.verts[0] + 1] += 1;
            v2v_offsets[e.verts[1] + 1] += 1;
        }
        for i in 0..nv {
            v2v_offsets[i + 1] += v2v_offsets[i];
        }
        let mut v2v_data = vec![0usize; v2v_offsets[nv]];
        let mut cursor = v2v_offsets.clone();
        for e in &edges {
            let [a, b] = e.verts;
            v2v_data[cursor[a]] = b;
            cursor[a] += 1;
            v2v_data[cursor[b]] = a;
            cursor[b] += 1;
        }

        Ok(Self {
            positions,
            faces,
            edges,
            edge_index,
            v2f_offsets,
            v2f_data,
            v2v_offsets,
            v2v_data,
            has_boundary,
        })
    }

    /// Repair face orientation by breadth-first propagation. Fails with
    /// `NonOrientable` when no consistent orientation exists. Closed meshes
    /// are finally flipped, if needed, so that the total signed volume is
    /// positive (outward normals).
    fn orient(&mut self) -> Result<()> {
        let nf = self.faces.len();
        let mut visited = vec![false; nf];
        let mut flip = vec![false; nf];
        for start in 0..nf {
            if visited[start] {
                continue;
            }
            visited[start] = true;
            let mut queue = std::collections::VecDeque::from([start]);
            while let Some(fi) = queue.pop_front() {
                let f = self.oriented_face(fi, flip[fi]);
                for k in 0..3 {
                    let a = f[k];
                    let b = f[(k + 1) % 3];
                    let ei = self.edge_index[&(a.min(b), a.max(b))];
                    let e = self.edges[ei];
                    for of in e.faces.into_iter().flatten() {
                        if of == fi {
                            continue;
                        }
                        // Consistent orientation: neighbour must traverse (b, a).
                        let g = self.oriented_face(of, flip[of]);
                        let mut same_dir = false;
                        for j in 0..3 {
                            if g[j] == a && g[(j + 1) % 3] == b {
                                same_dir = true;
                            }
                        }
                        // In a consistent orientation the neighbour must
                        // traverse the shared edge in the opposite direction.
                        if !visited[of] {
                            visited[of] = true;
                            flip[of] = same_dir;
                            queue.push_back(of);
                        } else if same_dir {
                            return Err(Error::NonOrientable);
                        }
                    }
                }
            }
        }
        for (fi, &fl) in flip.iter().enumerate() {
            if fl {
                self.faces[fi].swap(1, 2);
            }
        }
        if !self.has_boundary {
            // One pass per connected component: flip so signed volume > 0.
            let comps = self.face_components();
            let ncomp = comps.iter().max().map(|&c| c + 1).unwrap_or(0);
            let mut vol = vec![0.0f64; ncomp];
            for (fi, f) in self.faces.iter().enumerate() {
                let (a, b, c) = (
                    self.positions[f[0]],
                    self.positions[f[1]],
                    self.positions[f[2]],
                );
                vol[comps[fi]] += a.dot(&b.cross(&c)) / 6.0;
            }
            for (fi, f) in self.faces.iter_mut().enumerate() {
                if vol[comps[fi]] < 0.0 {
                    f.swap(1, 2);
                }
            }
        }
        Ok(())
    }

    fn oriented_face(&self, fi: usize, flipped: bool) -> [usize; 3] {
        let f = self.faces[fi];
        if flipped {
            [f[0], f[2], f[1]]
        } else {
            f
        }
    }

    pub fn n_vertices(&self) -> usize {
        self.positions.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn vertex_faces(&self, v: usize) -> &[usize] {
        &self.v2f_data[self.v2f_offsets[v]..self.v2f_offsets[v + 1]]
    }

    pub fn vertex_neighbors(&self, v: usize) -> &[usize] {
        &self.v2v_data[self.v2v_offsets[v]..self.v2v_offsets[v + 1]]
    }

    pub fn edge_between(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_index.get(&(a.min(b), a.max(b))).copied()
    }

    pub fn face_area(&self, fi: usize) -> f64 {
        let f = self.faces[fi];
        let a = self.positions[f[1]] - self.positions[f[0]];
        let b = self.positions[f[2]] - self.positions[f[0]];
        0.5 * a.cross(&b).norm()
    }

    pub fn face_normal(&self, fi: usize) -> Vec3 {
        let f = self.faces[fi];
        let a = self.positions[f[1]] - self.positions[f[0]];
        let b = self.positions[f[2]] - self.positions[f[0]];
        let n = a.cross(&b);
        let l = n.norm();
        if l > 0.0 {
            n / l
        } else {
            Vec3::zeros()
        }
    }

    pub fn face_centroid(&self, fi: usize) -> Vec3 {
        let f = self.faces[fi];
        (self.positions[f[0]] + self.positions[f[1]] + self.positions[f[2]]) / 3.0
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_faces()).map(|f| self.face_area(f)).sum()
    }

    pub fn mean_edge_length(&self) -> f64 {
        let s: f64 = self
            .edges
            .iter()
            .map(|e| (self.positions[e.verts[0]] - self.positions[e.verts[1]]).norm())
            .sum();
        s / self.edges.len() as f64
    }

    pub fn min_edge_length(&self) -> f64 {
        self.edges
            .iter()
            .map(|e| (self.positions[e.verts[0]] - self.positions[e.verts[1]]).norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Connected components over faces (shared-edge adjacency); returns a
    /// component id per face.
    pub fn face_components(&self) -> Vec<usize> {
        let nf = self.n_faces();
        let mut comp = vec![usize::MAX; nf];
        let mut next = 0;
        for start in 0..nf {
            if comp[start] != usize::MAX {
                continue;
            }
            comp[start] = next;
            let mut queue = std::collections::VecDeque::from([start]);
            while let Some(fi) = queue.pop_front() {
                let f = self.faces[fi];
                for k in 0..3 {
                    let a = f[k];
                    let b = f[(k + 1) % 3];
                    let e = self.edges[self.edge_index[&(a.min(b), a.max(b))]];
                    for of in e.faces.into_iter().flatten() {
                        if comp[of] == usize::MAX {
                            comp[of] = next;
                            queue.push_back(of);
                        }
                    }
                }
            }
            next += 1;
        }
        comp
    }

    pub fn n_components(&self) -> usize {
        self.face_components().iter().max().map(|&c| c + 1).unwrap_or(0)
    }

    /// Euler characteristic V - E + F.
    pub fn euler_characteristic(&self) -> i64 {
        let used: std::collections::HashSet<usize> =
            self.faces.iter().flat_map(|f| f.iter().copied()).collect();
        used.len() as i64 - self.edges.len() as i64 + self.faces.len() as i64
    }

    /// Sum of angle defects; equals 2*pi*chi for a closed mesh.
    pub fn total_angle_defect(&self) -> f64 {
        let nv = self.n_vertices();
        let mut angle_sum = vec![0.0f64; nv];
        for f in &self.faces {
            for k in 0..3 {
                let p = self.positions[f[k]];
                let a = (self.positions[f[(k + 1) % 3]] - p).normalize();
                let b = (self.positions[f[(k + 2) % 3]] - p).normalize();
                angle_sum[f[k]] += a.dot(&b).clamp(-1.0, 1.0).acos();
            }
        }
        let mut defect = 0.0;
        for v in 0..nv {
            if !self.vertex_faces(v).is_empty() {
                defect += 2.0 * std::f64::consts::PI - angle_sum[v];
            }
        }
        defect
    }

    /// Axis-aligned bounding box.
    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for p in &self.positions {
            for k in 0..3 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }

    /// Merge another mesh into this one (disjoint vertex sets).
    pub fn merged(&self, other: &TriMesh) -> Result<TriMesh> {
        let mut positions = self.positions.clone();
        let off = positions.len();
        positions.extend(other.positions.iter().copied());
        let mut faces = self.faces.clone();
        faces.extend(other.faces.iter().map(|f| [f[0] + off, f[1] + off, f[2] + off]));
        TriMesh::build(positions, faces)
    }

    pub fn require_closed(&self) -> Result<()> {
        if self.has_boundary {
            Err(Error::NotClosed)
        } else {
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::primitives;
    use approx::assert_relative_eq;

    #[test]
    fn tetrahedron_is_closed_and_oriented() {
        let m = primitives::tetrahedron();
        assert_eq!(m.n_faces(), 4);
        assert!(!m.has_boundary);
        assert_eq!(m.euler_characteristic(), 2);
        // Outward orientation: signed volume positive.
        let vol: f64 = m
            .faces
            .iter()
            .map(|f| {
                m.positions[f[0]]
                    .dot(&m.positions[f[1]].cross(&m.positions[f[2]]))
                    / 6.0
            })
            .sum();
        assert!(vol > 0.0);
    }

    #[test]
    fn orientation_repair_flips_scrambled_faces() {
        let m0 = primitives::icosphere(2, 1.0, Vec3::zeros());
        let mut faces = m0.faces.clone();
        for (i, f) in faces.iter_mut().enumerate() {
            if i % 3 == 0 {
                f.swap(1, 2);
            }
        }
        let m = TriMesh::build(m0.positions.clone(), faces).unwrap();
        for fi in 0..m.n_faces() {
            let n = m.face_normal(fi);
            let c = m.face_centroid(fi);
            assert!(n.dot(&c) > 0.0, "face {fi} not outward");
        }
    }

    #[test]
    fn gauss_bonnet_on_closed_meshes() {
        for (mesh, chi) in [
            (primitives::icosphere(3, 1.0, Vec3::zeros()), 2.0),
            (primitives::torus(2.0, 0.7, 48, 24), 0.0),
            (primitives::capped_cylinder(2.0_f64.sqrt(), 4.0, 48, 32), 2.0),
        ] {
            let defect = mesh.total_angle_defect();
            assert_relative_eq!(
                defect,
                2.0 * std::f64::consts::PI * chi,
                epsilon = 1e-8,
                max_relative = 1e-8
            );
        }
    }

    #[test]
    fn non_manifold_edge_rejected() {
        let positions = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
            Vec3::new(1.0, 1.0, 1.0),
        ];
        let faces = vec![[0, 1, 2], [0, 1, 3], [0, 1, 4]];
        assert!(matches!(
            TriMesh::build(positions, faces),
            Err(Error::NonManifold(_))
        ));
    }

    #[test]
    fn moebius_strip_is_non_orientable() {
        // Triangulated Moebius band.
        let n = 12;
        let mut positions = Vec::new();
        for i in 0..n {
            let t = i as f64 / n as f64 * 2.0 * std::f64::consts::PI;
            let (c, s) = (t.cos(), t.sin());
            let (ch, sh) = ((t / 2.0).cos(), (t / 2.0).sin());
            for w in [-0.3, 0.3] {
                positions.push(Vec3::new(
                    (1.0 + w * ch) * c,
                    (1.0 + w * ch) * s,
                    w * sh,
                ));
            }
        }
        let mut faces = Vec::new();
        for i in 0..n {
            let (a0, a1) = (2 * i, 2 * i + 1);
            let (b0, b1) = if i + 1 < n {
                (2 * (i + 1), 2 * (i + 1) + 1)
            } else {
                (1, 0) // identify with a half twist
            };
            faces.push([a0, a1, b0]);
            faces.push([a1, b1, b0]);
        }
        assert!(matches!(
            TriMesh::build(positions, faces),
            Err(Error::NonOrientable)
        ));
    }
}
