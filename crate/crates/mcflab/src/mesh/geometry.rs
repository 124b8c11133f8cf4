//! Per-vertex differential geometry: normals, mixed Voronoi areas, cotangent
//! mean curvature, and quadric-fitted shape operators.
//!
//! Sign convention: outward unit normal, H > 0 for spheres (H is the sum of
//! the principal curvatures, H = 2/R on a radius-R sphere). The shape
//! operator S is the differential of the Gauss map, S = Id/R on spheres.

use super::{TriMesh, Vec3};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector, Matrix2, Vector2};

/// Frozen geometry cache for one mesh snapshot.
#[derive(Debug, Clone)]
pub struct Geometry {
    /// Area-weighted outward unit normals.
    pub normals: Vec<Vec3>,
    /// Mixed Voronoi vertex areas.
    pub vertex_areas: Vec<f64>,
    /// Mean curvature H = -<laplace(x), n>.
    pub mean_curvature: Vec<f64>,
    /// Mean curvature vector -H n = laplace(x).
    pub laplace_position: Vec<Vec3>,
    /// Squared norm of the second fundamental form (from the quadric fit),
    /// present when built with `with_shape`.
    pub a_norm_sq: Vec<f64>,
    /// Shape operator in the vertex tangent frame (e1, e2).
    pub shape: Vec<Matrix2<f64>>,
    /// Orthonormal tangent frames (e1, e2); the normal completes the triad.
    pub frames: Vec<(Vec3, Vec3)>,
    pub total_area: f64,
}

impl Geometry {
    /// Compute normals, areas and mean curvature. The quadric shape pass is
    /// optional because it dominates the cost on large meshes.
    pub fn new(mesh: &TriMesh, with_shape: bool) -> Result<Self> {
        let nv = mesh.n_vertices();
        for v in 0..nv {
            if mesh.vertex_faces(v).is_empty() {
                return Err(Error::IsolatedVertex(v));
            }
        }

        let mut normals = vec![Vec3::zeros(); nv];
        let mut vertex_areas = vec![0.0f64; nv];
        let mut lap = vec![Vec3::zeros(); nv];
        let mut wsum = vec![0.0f64; nv];

        let mut total_area = 0.0;
        for f in &mesh.faces {
            let p = [
                mesh.positions[f[0]],
                mesh.positions[f[1]],
                mesh.positions[f[2]],
            ];
            let cross = (p[1] - p[0]).cross(&(p[2] - p[0]));
            let area = 0.5 * cross.norm();
            total_area += area;
            for k in 0..3 {
                normals[f[k]] += cross; // area-weighted
            }
            // Mixed Voronoi area (Meyer et al.): cotangent sector areas for
            // non-obtuse triangles, area/2 at the obtuse corner otherwise.
            let mut cot = [0.0f64; 3];
            let mut obtuse = None;
            for k in 0..3 {
                let a = p[(k + 1) % 3] - p[k];
                let b = p[(k + 2) % 3] - p[k];
                let dot = a.dot(&b);
                let crs = a.cross(&b).norm().max(1e-300);
                cot[k] = dot / crs;
                if dot < 0.0 {
                    obtuse = Some(k);
                }
            }
            match obtuse {
                None => {
                    for k in 0..3 {
                        let l1 = (p[(k + 1) % 3] - p[k]).norm_squared();
                        let l2 = (p[(k + 2) % 3] - p[k]).norm_squared();
                        vertex_areas[f[k]] += (l2 * cot[(k + 1) % 3] + l1 * cot[(k + 2) % 3]) / 8.0;
                    }
                }
                Some(ko) => {
                    for k in 0..3 {
                        vertex_areas[f[k]] += if k == ko { area / 2.0 } else { area / 4.0 };
                    }
                }
            }
            // Cotangent Laplacian accumulation: for edge (i, j) opposite
            // vertex k the weight is cot(angle at k).
            for k in 0..3 {
                let (i, j) = (f[(k + 1) % 3], f[(k + 2) % 3]);
                let w = cot[k] / 2.0;
                lap[i] += w * (p[(k + 2) % 3] - p[(k + 1) % 3]);
                lap[j] += w * (p[(k + 1) % 3] - p[(k + 2) % 3]);
                wsum[i] += w;
                wsum[j] += w;
            }
        }

        let mut mean_curvature = vec![0.0f64; nv];
        let mut laplace_position = vec![Vec3::zeros(); nv];
        for v in 0..nv {
            let n = normals[v].norm();
            if n > 0.0 {
                normals[v] /= n;
            }
            let a = vertex_areas[v].max(1e-300);
            laplace_position[v] = lap[v] / a;
            // laplace(x) = -H n with outward n; boundary rows are meaningless.
            mean_curvature[v] = -laplace_position[v].dot(&normals[v]);
        }

        let mut frames = Vec::with_capacity(nv);
        for v in 0..nv {
            frames.push(tangent_frame(normals[v]));
        }

        let (a_norm_sq, shape) = if with_shape {
            shape_pass(mesh, &normals, &frames)
        } else {
            (vec![0.0; nv], vec![Matrix2::zeros(); nv])
        };

        Ok(Self {
            normals,
            vertex_areas,
            mean_curvature,
            laplace_position,
            a_norm_sq,
            shape,
            frames,
            total_area,
        })
    }

    pub fn max_abs_h(&self) -> f64 {
        self.mean_curvature.iter().fold(0.0f64, |m, &h| m.max(h.abs()))
    }

    pub fn max_abs_a(&self) -> f64 {
        self.a_norm_sq.iter().fold(0.0f64, |m, &a| m.max(a)).sqrt()
    }
}

/// Orthonormal tangent frame for a unit normal.
pub fn tangent_frame(n: Vec3) -> (Vec3, Vec3) {
    let h = if n.x.abs() < 0.9 {
        Vec3::new(1.0, 0.0, 0.0)
    } else {
        Vec3::new(0.0, 1.0, 0.0)
    };
    let e1 = (h - n * h.dot(&n)).normalize();
    let e2 = n.cross(&e1);
    (e1, e2)
}

/// Collect the 2-ring of a vertex (excluding the vertex itself).
pub fn two_ring(mesh: &TriMesh, v: usize) -> Vec<usize> {
    let mut seen = std::collections::HashSet::new();
    seen.insert(v);
    let mut out = Vec::new();
    for &u in mesh.vertex_neighbors(v) {
        if seen.insert(u) {
            out.push(u);
        }
    }
    let one_ring = out.clone();
    for u in one_ring {
        for &w in mesh.vertex_neighbors(u) {
            if seen.insert(w) {
                out.push(w);
            }
        }
    }
    out
}

/// Quadric fit of the local height over the tangent plane at every vertex.
/// Fits z = a x^2/2 + b x y + c y^2/2 + d x + e y over the 2-ring and reads
/// the shape operator S = -[[a, b], [b, c]] (so S = Id/R on spheres with
/// outward normals) and |A|^2 = a^2 + 2 b^2 + c^2.
fn shape_pass(
    mesh: &TriMesh,
    normals: &[Vec3],
    frames: &[(Vec3, Vec3)],
) -> (Vec<f64>, Vec<Matrix2<f64>>) {
    let nv = mesh.n_vertices();
    let mut a_sq = vec![0.0f64; nv];
    let mut shape = vec![Matrix2::zeros(); nv];
    for v in 0..nv {
        let ring = two_ring(mesh, v);
        if ring.len() < 5 {
            continue;
        }
        let p = mesh.positions[v];
        let n = normals[v];
        let (e1, e2) = frames[v];
        let mut ata = DMatrix::<f64>::zeros(5, 5);
        let mut atb = DVector::<f64>::zeros(5);
        for &q in &ring {
            let d = mesh.positions[q] - p;
            let x = d.dot(&e1);
            let y = d.dot(&e2);
            let z = d.dot(&n);
            let row = [0.5 * x * x, x * y, 0.5 * y * y, x, y];
            for i in 0..5 {
                for j in 0..5 {
                    ata[(i, j)] += row[i] * row[j];
                }
                atb[i] += row[i] * z;
            }
        }
        if let Some(sol) = ata.lu().solve(&atb) {
            let (a, b, c) = (sol[0], sol[1], sol[2]);
            shape[v] = Matrix2::new(-a, -b, -b, -c);
            a_sq[v] = a * a + 2.0 * b * b + c * c;
        }
    }
    (a_sq, shape)
}

/// Weighted least-squares fit of a scalar field over the 2-ring in tangent
/// coordinates; returns the tangent gradient and Hessian at the vertex.
pub fn fit_gradient_hessian(
    mesh: &TriMesh,
    geom: &Geometry,
    field: &[f64],
    v: usize,
) -> (Vector2<f64>, Matrix2<f64>) {
    let ring = two_ring(mesh, v);
    let p = mesh.positions[v];
    let (e1, e2) = geom.frames[v];
    let mut ata = DMatrix::<f64>::zeros(5, 5);
    let mut atb = DVector::<f64>::zeros(5);
    for &q in &ring {
        let d = mesh.positions[q] - p;
        let x = d.dot(&e1);
        let y = d.dot(&e2);
        let z = field[q] - field[v];
        let row = [0.5 * x * x, x * y, 0.5 * y * y, x, y];
        for i in 0..5 {
            for j in 0..5 {
                ata[(i, j)] += row[i] * row[j];
            }
            atb[i] += row[i] * z;
        }
    }
    match ata.lu().solve(&atb) {
        Some(sol) => (
            Vector2::new(sol[3], sol[4]),
            Matrix2::new(sol[0], sol[1], sol[1], sol[2]),
        ),
        None => (Vector2::zeros(), Matrix2::zeros()),
    }
}

/// Per-vertex tangent gradient of a scalar field (linear least squares over
/// the 1-ring).
pub fn vertex_gradient(mesh: &TriMesh, geom: &Geometry, field: &[f64], v: usize) -> Vector2<f64> {
    let p = mesh.positions[v];
    let (e1, e2) = geom.frames[v];
    let mut ata = Matrix2::zeros();
    let mut atb = Vector2::zeros();
    for &q in mesh.vertex_neighbors(v) {
        let d = mesh.positions[q] - p;
        let x = Vector2::new(d.dot(&e1), d.dot(&e2));
        let z = field[q] - field[v];
        ata += x * x.transpose();
        atb += x * z;
    }
    ata.try_inverse().map(|inv| inv * atb).unwrap_or_else(Vector2::zeros)
}

/// Cotangent stiffness matrix in CSR-like triplet form together with the
/// lumped (vertex-area) mass diagonal. The stiffness is positive
/// semidefinite with (L x)_i = sum_j w_ij (x_i - x_j).
pub struct CotanSystem {
    pub nv: usize,
    /// CSR offsets/columns/values of the stiffness matrix.
    pub offsets: Vec<usize>,
    pub columns: Vec<usize>,
    pub values: Vec<f64>,
    pub mass: Vec<f64>,
}

impl CotanSystem {
    pub fn new(mesh: &TriMesh, geom: &Geometry) -> Self {
        let nv = mesh.n_vertices();
        // Edge weights.
        let mut w = vec![0.0f64; mesh.edges.len()];
        for f in &mesh.faces {
            let p = [
                mesh.positions[f[0]],
                mesh.positions[f[1]],
                mesh.positions[f[2]],
            ];
            for k in 0..3 {
                let a = p[(k + 1) % 3] - p[k];
                let b = p[(k + 2) % 3] - p[k];
                let cot = a.dot(&b) / a.cross(&b).norm().max(1e-300);
                let (i, j) = (f[(k + 1) % 3], f[(k + 2) % 3]);
                let e = mesh.edge_between(i, j).unwrap();
                w[e] += cot / 2.0;
            }
        }
        // CSR with diagonal first per row.
        let mut offsets = vec![0usize; nv + 1];
        for v in 0..nv {
            offsets[v + 1] = offsets[v] + 1 + mesh.vertex_neighbors(v).len();
        }
        let nnz = offsets[nv];
        let mut columns = vec![0usize; nnz];
        let mut values = vec![0.0f64; nnz];
        for v in 0..nv {
            let start = offsets[v];
            columns[start] = v;
            let mut diag = 0.0;
            for (k, &u) in mesh.vertex_neighbors(v).iter().enumerate() {
                let e = mesh.edge_between(v, u).unwrap();
                columns[start + 1 + k] = u;
                values[start + 1 + k] = -w[e];
                diag += w[e];
            }
            values[start] = diag;
        }
        Self {
            nv,
            offsets,
            columns,
            values,
            mass: geom.vertex_areas.clone(),
        }
    }

    /// y = (M + dt L) x
    pub fn apply_shifted(&self, dt: f64, x: &[f64], y: &mut [f64]) {
        for v in 0..self.nv {
            let mut acc = 0.0;
            for k in self.offsets[v]..self.offsets[v + 1] {
                acc += self.values[k] * x[self.columns[k]];
            }
            y[v] = self.mass[v] * x[v] + dt * acc;
        }
    }

    /// Conjugate-gradient solve of (M + dt L) x = b.
    pub fn solve_shifted(&self, dt: f64, b: &[f64], x0: &[f64]) -> Result<Vec<f64>> {
        let n = self.nv;
        let mut x = x0.to_vec();
        let mut ax = vec![0.0; n];
        self.apply_shifted(dt, &x, &mut ax);
        let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let mut p = r.clone();
        let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
        let mut rs: f64 = r.iter().map(|v| v * v).sum();
        let tol = 1e-12 * bnorm;
        let max_iter = 40 + 4 * (n as f64).sqrt() as usize;
        for _ in 0..max_iter {
            if rs.sqrt() <= tol {
                return Ok(x);
            }
            self.apply_shifted(dt, &p, &mut ax);
            let pap: f64 = p.iter().zip(&ax).map(|(p, a)| p * a).sum();
            if pap <= 0.0 {
                return Err(Error::SolverNonConvergence("matrix not SPD".into()));
            }
            let alpha = rs / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ax[i];
            }
            let rs_new: f64 = r.iter().map(|v| v * v).sum();
            let beta = rs_new / rs;
            rs = rs_new;
            for i in 0..n {
                p[i] = r[i] + beta * p[i];
            }
        }
        if rs.sqrt() <= 1e-8 * bnorm {
            Ok(x)
        } else {
            Err(Error::SolverNonConvergence(format!(
                "CG residual {:.3e} after {} iterations",
                rs.sqrt() / bnorm,
                max_iter
            )))
        }
    }
}
