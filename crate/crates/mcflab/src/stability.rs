//! The Gaussian-weighted stability quadratic form on shrinkers, its
//! Rayleigh-quotient minimiser, logarithmic cutoff functions near singular
//! points, and instability witnesses.
//!
//! The form is assembled in its first-order (integrated-by-parts) shape
//! Q(phi) = Int (|grad phi|^2 - (1/2 + |A|^2) phi^2) e^{-|x|^2/4},
//! with piecewise-linear gradients and centroid weights.

use crate::mesh::distance::DistanceGraph;
use crate::mesh::geometry::Geometry;
use crate::mesh::{TriMesh, Vec3};
use crate::{Error, Result};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct QuadraticFormReport {
    pub schema_version: u32,
    pub q_value: f64,
    pub weighted_norm_sq: f64,
    pub rayleigh: f64,
    pub cutoff_delta: Option<f64>,
    pub cutoff_rho: Option<f64>,
    pub cutoff_energy: Option<f64>,
}

fn face_gradient(mesh: &TriMesh, fi: usize, phi: &[f64]) -> Vec3 {
    let f = mesh.faces[fi];
    let (a, b, c) = (
        mesh.positions[f[0]],
        mesh.positions[f[1]],
        mesh.positions[f[2]],
    );
    let n = (b - a).cross(&(c - a));
    let area2 = n.norm();
    if area2 < 1e-300 {
        return Vec3::zeros();
    }
    let nu = n / area2;
    // grad phi = sum_i phi_i (n x e_i^opp) / (2A)
    let ga = nu.cross(&(c - b));
    let gb = nu.cross(&(a - c));
    let gc = nu.cross(&(b - a));
    (phi[f[0]] * ga + phi[f[1]] * gb + phi[f[2]] * gc) / area2
}

/// Q(phi) over faces; phi must vanish (within 1e-12) outside B_R(0).
pub fn quadratic_form(
    mesh: &TriMesh,
    geom: &Geometry,
    phi: &[f64],
    support_radius: f64,
) -> Result<f64> {
    for v in 0..mesh.n_vertices() {
        if mesh.positions[v].norm() > support_radius && phi[v].abs() > 1e-12 {
            return Err(Error::SupportViolation(v));
        }
    }
    Ok(quadratic_form_unchecked(mesh, geom, phi))
}

pub fn quadratic_form_unchecked(mesh: &TriMesh, geom: &Geometry, phi: &[f64]) -> f64 {
    let mut q = 0.0;
    for fi in 0..mesh.n_faces() {
        let f = mesh.faces[fi];
        let area = mesh.face_area(fi);
        let centroid = mesh.face_centroid(fi);
        let weight = (-centroid.norm_squared() / 4.0).exp();
        let grad = face_gradient(mesh, fi, phi);
        let phi_c = (phi[f[0]] + phi[f[1]] + phi[f[2]]) / 3.0;
        let a_sq = (geom.a_norm_sq[f[0]] + geom.a_norm_sq[f[1]] + geom.a_norm_sq[f[2]]) / 3.0;
        q += (grad.norm_squared() - (0.5 + a_sq) * phi_c * phi_c) * weight * area;
    }
    q
}

/// Gaussian-weighted L2 norm squared (centroid rule, consistent with Q).
pub fn weighted_norm_sq(mesh: &TriMesh, phi: &[f64]) -> f64 {
    let mut m = 0.0;
    for fi in 0..mesh.n_faces() {
        let f = mesh.faces[fi];
        let area = mesh.face_area(fi);
        let centroid = mesh.face_centroid(fi);
        let weight = (-centroid.norm_squared() / 4.0).exp();
        let phi_c = (phi[f[0]] + phi[f[1]] + phi[f[2]]) / 3.0;
        m += phi_c * phi_c * weight * area;
    }
    m
}

struct Csr {
    offsets: Vec<usize>,
    columns: Vec<usize>,
    values: Vec<f64>,
}

impl Csr {
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..x.len() {
            let mut acc = 0.0;
            for k in self.offsets[i]..self.offsets[i + 1] {
                acc += self.values[k] * x[self.columns[k]];
            }
            y[i] = acc;
        }
    }
}

fn assemble_pencil(
    mesh: &TriMesh,
    geom: &Geometry,
    inside: &[usize],
) -> (Csr, Vec<f64>) {
    // Map mesh vertex -> reduced index.
    let nv = mesh.n_vertices();
    let mut reduced = vec![usize::MAX; nv];
    for (k, &v) in inside.iter().enumerate() {
        reduced[v] = k;
    }
    let n = inside.len();
    let mut coo: std::collections::HashMap<(usize, usize), f64> =
        std::collections::HashMap::new();
    let mut mass = vec![0.0f64; n];
    for fi in 0..mesh.n_faces() {
        let f = mesh.faces[fi];
        let area = mesh.face_area(fi);
        let centroid = mesh.face_centroid(fi);
        let weight = (-centroid.norm_squared() / 4.0).exp();
        let a_sq = (geom.a_norm_sq[f[0]] + geom.a_norm_sq[f[1]] + geom.a_norm_sq[f[2]]) / 3.0;
        // Gradient basis vectors.
        let (a, b, c) = (
            mesh.positions[f[0]],
            mesh.positions[f[1]],
            mesh.positions[f[2]],
        );
        let nvec = (b - a).cross(&(c - a));
        let area2 = nvec.norm().max(1e-300);
        let nu = nvec / area2;
        let g = [
            nu.cross(&(c - b)) / area2,
            nu.cross(&(a - c)) / area2,
            nu.cross(&(b - a)) / area2,
        ];
        for i in 0..3 {
            let vi = f[i];
            if reduced[vi] == usize::MAX {
                continue;
            }
            for j in 0..3 {
                let vj = f[j];
                if reduced[vj] == usize::MAX {
                    continue;
                }
                // Stiffness minus potential (centroid rule: phi_c^2 couples
                // all pairs with coefficient 1/9).
                let k_entry = g[i].dot(&g[j]) * weight * area;
                let p_entry = (0.5 + a_sq) * weight * area / 9.0;
                *coo.entry((reduced[vi], reduced[vj])).or_insert(0.0) += k_entry - p_entry;
            }
            // Gaussian lumped mass.
            mass[reduced[vi]] += weight * area / 3.0;
        }
    }
    // COO -> CSR.
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for ((i, j), v) in coo {
        rows[i].push((j, v));
    }
    let mut offsets = vec![0usize; n + 1];
    for (i, r) in rows.iter_mut().enumerate() {
        r.sort_by_key(|e| e.0);
        offsets[i + 1] = offsets[i] + r.len();
    }
    let nnz = offsets[n];
    let mut columns = vec![0usize; nnz];
    let mut values = vec![0.0f64; nnz];
    for (i, r) in rows.iter().enumerate() {
        for (k, &(j, v)) in r.iter().enumerate() {
            columns[offsets[i] + k] = j;
            values[offsets[i] + k] = v;
        }
    }
    (
        Csr {
            offsets,
            columns,
            values,
        },
        mass,
    )
}

/// Minimise Q(phi) / ||phi||^2_gauss over fields vanishing outside B_R by
/// shifted inverse power iteration on the pencil (A, M), tolerance 1e-8 on
/// the quotient. Returns (lambda_min, phi on all vertices).
pub fn min_rayleigh(
    mesh: &TriMesh,
    geom: &Geometry,
    support_radius: f64,
) -> Result<(f64, Vec<f64>)> {
    let inside: Vec<usize> = (0..mesh.n_vertices())
        .filter(|&v| mesh.positions[v].norm() <= support_radius)
        .collect();
    if inside.is_empty() {
        return Err(Error::InvalidParameter(
            "mesh does not meet the support ball".into(),
        ));
    }
    let (a, m) = assemble_pencil(mesh, geom, &inside);
    let n = inside.len();
    // Shift just below the spectrum (lambda >= -max(1/2 + |A|^2) up to
    // quadrature slack): a close shift makes the inverse iteration
    // contract fast. Retries push the shift down when CG reports loss of
    // positivity.
    let max_pot = (0..mesh.n_vertices())
        .map(|v| 0.5 + geom.a_norm_sq[v])
        .fold(0.0f64, f64::max);
    let mut sigma = -1.15 * max_pot - 0.05;

    'shift: for _attempt in 0..4 {
        let apply = |x: &[f64], y: &mut [f64]| {
            a.apply(x, y);
            for i in 0..n {
                y[i] -= sigma * m[i] * x[i];
            }
        };
        let solve = |b: &[f64], x0: &[f64]| -> Result<Vec<f64>> {
            let mut x = x0.to_vec();
            let mut ax = vec![0.0; n];
            apply(&x, &mut ax);
            let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
            let mut p = r.clone();
            let bn = b.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
            let mut rs: f64 = r.iter().map(|v| v * v).sum();
            for _ in 0..(200 + 6 * (n as f64).sqrt() as usize) {
                if rs.sqrt() <= 1e-11 * bn {
                    break;
                }
                apply(&p, &mut ax);
                let pap: f64 = p.iter().zip(&ax).map(|(p, a)| p * a).sum();
                if pap <= 0.0 {
                    return Err(Error::SolverNonConvergence(
                        "shifted operator lost positivity".into(),
                    ));
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
            Ok(x)
        };

        let mut x: Vec<f64> = (0..n)
            .map(|i| 1.0 + 0.01 * ((i * 2654435761) % 97) as f64 / 97.0)
            .collect();
        let mut lambda_prev = f64::INFINITY;
        let max_iters = 200;
        for _it in 0..max_iters {
            let norm: f64 = x
                .iter()
                .enumerate()
                .map(|(i, &v)| v * v * m[i])
                .sum::<f64>()
                .sqrt();
            for v in x.iter_mut() {
                *v /= norm.max(1e-300);
            }
            let b: Vec<f64> = x.iter().enumerate().map(|(i, &v)| m[i] * v).collect();
            x = match solve(&b, &x) {
                Ok(x) => x,
                Err(_) => {
                    sigma = 2.0 * sigma - 1.0;
                    continue 'shift;
                }
            };
            let mut ax = vec![0.0; n];
            a.apply(&x, &mut ax);
            let num: f64 = x.iter().zip(&ax).map(|(x, a)| x * a).sum();
            let den: f64 = x.iter().enumerate().map(|(i, &v)| v * v * m[i]).sum();
            let lambda = num / den;
            if (lambda - lambda_prev).abs() <= 1e-8 * (1.0 + lambda.abs()) {
                let mut full = vec![0.0; mesh.n_vertices()];
                let den_sqrt = den.sqrt();
                for (k, &v) in inside.iter().enumerate() {
                    full[v] = x[k] / den_sqrt;
                }
                return Ok((lambda, full));
            }
            lambda_prev = lambda;
        }
        return Err(Error::IterationStagnation(max_iters));
    }
    Err(Error::SolverNonConvergence(
        "no admissible spectral shift found".into(),
    ))
}

/// The log-taper profile: 1 for |s| >= rho, log(rho)/log(s) below.
pub fn eta_profile(s: f64, rho: f64) -> f64 {
    if s >= rho {
        1.0
    } else if s <= 0.0 {
        0.0
    } else {
        rho.ln() / s.ln()
    }
}

fn eta_profile_deriv(s: f64, rho: f64) -> f64 {
    if s >= rho || s <= 0.0 {
        0.0
    } else {
        -rho.ln() / (s * s.ln() * s.ln())
    }
}

/// Smooth step from 0 on (0, delta/2] to 1 on [delta, inf), slope bounded
/// by 3/delta.
pub fn beta_profile(s: f64, delta: f64) -> f64 {
    if s <= delta / 2.0 {
        0.0
    } else if s >= delta {
        1.0
    } else {
        let u = (s - delta / 2.0) / (delta / 2.0);
        u * u * (3.0 - 2.0 * u)
    }
}

fn beta_profile_deriv(s: f64, delta: f64) -> f64 {
    if s <= delta / 2.0 || s >= delta {
        0.0
    } else {
        let u = (s - delta / 2.0) / (delta / 2.0);
        6.0 * u * (1.0 - u) * (2.0 / delta)
    }
}

/// Per-vertex cutoff field f_{delta,rho} = prod_k eta(r_k) beta(r_k) using
/// intrinsic distances to the curve points, and its Gaussian energy on the
/// mesh quadrature. Distances to off-vertex curve points add the offset to
/// the nearest vertex.
pub fn log_cutoff(
    mesh: &TriMesh,
    geom: &Geometry,
    curve_points: &[Vec3],
    delta: f64,
    rho: f64,
) -> Result<(Vec<f64>, f64)> {
    if !(0.0 < delta && delta < rho && rho < 1.0) {
        return Err(Error::InvalidParameter(
            "need 0 < delta < rho < 1".into(),
        ));
    }
    let graph = DistanceGraph::new(mesh);
    let mut f = vec![1.0f64; mesh.n_vertices()];
    for xi in curve_points {
        // Nearest vertex and base offset.
        let (v0, off) = (0..mesh.n_vertices())
            .map(|v| (v, (mesh.positions[v] - xi).norm()))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        let field = graph.field(v0);
        for v in 0..mesh.n_vertices() {
            let r = if v == v0 { off } else { field[v] + off };
            f[v] *= eta_profile(r, rho) * beta_profile(r, delta);
        }
    }
    let mut energy = 0.0;
    for fi in 0..mesh.n_faces() {
        let area = mesh.face_area(fi);
        let centroid = mesh.face_centroid(fi);
        let weight = (-centroid.norm_squared() / 4.0).exp();
        let grad = face_gradient(mesh, fi, &f);
        energy += grad.norm_squared() * weight * area;
    }
    let _ = geom;
    Ok((f, energy))
}

/// Closed-form cutoff energy on the flat plane with one singular point at
/// the origin: Int |d/dr (eta beta)|^2 e^{-r^2/4} 2 pi r dr, integrated in
/// log-radius so arbitrarily small delta stays resolvable.
pub fn plane_cutoff_energy(delta: f64, rho: f64) -> f64 {
    let g2 = |r: f64| -> f64 {
        let d = eta_profile_deriv(r, rho) * beta_profile(r, delta)
            + eta_profile(r, rho) * beta_profile_deriv(r, delta);
        d * d * (-r * r / 4.0).exp() * 2.0 * std::f64::consts::PI * r
    };
    // In log space: integral of g2(e^l) e^l dl over [ln(delta/2), ln(rho)].
    let lo = (delta / 2.0).ln();
    let hi = rho.ln();
    let n = 40_000;
    let h = (hi - lo) / n as f64;
    let mut total = 0.0;
    for k in 0..n {
        let l0 = lo + k as f64 * h;
        let l1 = l0 + h;
        let lm = 0.5 * (l0 + l1);
        let fl = |l: f64| {
            let r = l.exp();
            g2(r) * r
        };
        total += h / 6.0 * (fl(l0) + 4.0 * fl(lm) + fl(l1));
    }
    total
}

/// Paper-shaped upper-bound model for the cutoff energy,
/// C (1/|log rho| + |log rho|^2 / |log delta|); `fit_cutoff_constant`
/// returns the smallest C covering a (delta, rho) battery.
pub fn cutoff_bound_shape(delta: f64, rho: f64) -> f64 {
    let lr = rho.ln().abs();
    let ld = delta.ln().abs();
    1.0 / lr + lr * lr / ld
}

pub fn fit_cutoff_constant(pairs: &[(f64, f64)]) -> f64 {
    pairs
        .iter()
        .map(|&(d, r)| plane_cutoff_energy(d, r) / cutoff_bound_shape(d, r))
        .fold(0.0f64, f64::max)
}

/// Witness of instability: the constant function tapered at radius R (the
/// log profile), falling back to the Rayleigh minimiser. Returns the field
/// and its Q value (< -1e-6).
pub fn instability_witness(
    mesh: &TriMesh,
    geom: &Geometry,
    support_radius: f64,
) -> Result<(Vec<f64>, f64)> {
    let taper = |r: f64| -> f64 {
        if r <= support_radius / 2.0 {
            1.0
        } else if r >= support_radius {
            0.0
        } else {
            (support_radius / r).ln() / 2.0_f64.ln()
        }
    };
    let phi: Vec<f64> = mesh.positions.iter().map(|p| taper(p.norm())).collect();
    let q = quadratic_form(mesh, geom, &phi, support_radius)?;
    if q < -1e-6 {
        return Ok((phi, q));
    }
    let (lambda, phi_min) = min_rayleigh(mesh, geom, support_radius)?;
    let q = quadratic_form_unchecked(mesh, geom, &phi_min);
    if q < -1e-6 {
        Ok((phi_min, q))
    } else {
        Err(Error::GraphTest(format!(
            "no instability witness found up to R = {support_radius} (lambda_min = {lambda:.3e})"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::primitives;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn constant_on_radius_two_sphere() {
        // Q(1) = -(1/2 + 1/2) e^{-1} 16 pi = -16 pi / e within 1%.
        let m = primitives::icosphere(5, 2.0, Vec3::zeros());
        let g = Geometry::new(&m, true).unwrap();
        let phi = vec![1.0; m.n_vertices()];
        let q = quadratic_form(&m, &g, &phi, 10.0).unwrap();
        let expect = -16.0 * PI / std::f64::consts::E;
        assert_relative_eq!(q, expect, max_relative = 0.01);
    }

    #[test]
    fn zero_field_gives_zero() {
        let m = primitives::icosphere(2, 1.0, Vec3::zeros());
        let g = Geometry::new(&m, true).unwrap();
        let phi = vec![0.0; m.n_vertices()];
        assert_eq!(quadratic_form(&m, &g, &phi, 1.5).unwrap(), 0.0);
    }

    #[test]
    fn support_violation_detected() {
        let m = primitives::icosphere(2, 2.0, Vec3::zeros());
        let g = Geometry::new(&m, true).unwrap();
        let phi = vec![1.0; m.n_vertices()];
        assert!(matches!(
            quadratic_form(&m, &g, &phi, 1.0),
            Err(Error::SupportViolation(_))
        ));
    }

    #[test]
    fn gradient_dominated_bump_is_positive_on_plane() {
        // A thin bump on the plane: |grad phi|^2 beats phi^2/2.
        let m = primitives::plane_patch(64, 2.0, 0.0);
        let g = Geometry::new(&m, true).unwrap();
        let phi: Vec<f64> = m
            .positions
            .iter()
            .map(|p| (1.0 - p.norm() / 0.15).max(0.0))
            .collect();
        let q = quadratic_form(&m, &g, &phi, 1.0).unwrap();
        assert!(q > 0.0, "Q = {q}");
    }

    #[test]
    fn form_is_symmetric_bilinear() {
        // Parallelogram law: Q(a+b) + Q(a-b) = 2Q(a) + 2Q(b).
        let m = primitives::icosphere(3, 2.0, Vec3::zeros());
        let g = Geometry::new(&m, true).unwrap();
        let a: Vec<f64> = m.positions.iter().map(|p| (p.x * 0.7).sin()).collect();
        let b: Vec<f64> = m.positions.iter().map(|p| p.z * 0.3 + 0.1).collect();
        let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let diff: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        let q = |v: &[f64]| quadratic_form_unchecked(&m, &g, v);
        let lhs = q(&sum) + q(&diff);
        let rhs = 2.0 * q(&a) + 2.0 * q(&b);
        assert_relative_eq!(lhs, rhs, max_relative = 1e-10);
    }

    #[test]
    fn scaling_is_quadratic() {
        let m = primitives::icosphere(3, 2.0, Vec3::zeros());
        let g = Geometry::new(&m, true).unwrap();
        let a: Vec<f64> = m.positions.iter().map(|p| (p.y).cos()).collect();
        let ca: Vec<f64> = a.iter().map(|x| 3.0 * x).collect();
        let q1 = quadratic_form_unchecked(&m, &g, &a);
        let q9 = quadratic_form_unchecked(&m, &g, &ca);
        assert_relative_eq!(q9, 9.0 * q1, max_relative = 1e-12);
    }

    #[test]
    fn rayleigh_minimum_on_sphere_is_minus_one() {
        // Constants give quotient -1 on the radius-2 shrinker sphere; the
        // minimiser can only go lower, and the discrete gap is small.
        let m = primitives::icosphere(4, 2.0, Vec3::zeros());
        let g = Geometry::new(&m, true).unwrap();
        let phi = vec![1.0; m.n_vertices()];
        let quotient_const =
            quadratic_form_unchecked(&m, &g, &phi) / weighted_norm_sq(&m, &phi);
        let (lambda, _) = min_rayleigh(&m, &g, 10.0).unwrap();
        assert!(lambda <= quotient_const + 1e-8);
        assert_relative_eq!(lambda, -1.0, max_relative = 0.02);
    }

    #[test]
    fn rayleigh_on_plane_reaches_minus_half() {
        // Wide support: the quotient tends to -1/2 (|A|^2 = 0).
        let m = primitives::plane_patch(96, 8.0, 0.0);
        let g = Geometry::new(&m, true).unwrap();
        let (lambda, _) = min_rayleigh(&m, &g, 8.0).unwrap();
        assert!(lambda <= -0.45, "lambda = {lambda}");
        assert!(lambda >= -0.55, "lambda = {lambda}");
    }

    #[test]
    fn tiny_support_is_positive() {
        // Dirichlet gap on a small disk dominates the 1/2 term.
        let m = primitives::plane_patch(64, 0.15, 0.0);
        let g = Geometry::new(&m, true).unwrap();
        let (lambda, _) = min_rayleigh(&m, &g, 0.1).unwrap();
        assert!(lambda > 0.0, "lambda = {lambda}");
    }

    #[test]
    fn rayleigh_invariant_under_rotation_and_scaling_of_phi() {
        let m = primitives::icosphere(3, 2.0, Vec3::zeros());
        let g = Geometry::new(&m, true).unwrap();
        let (l1, phi) = min_rayleigh(&m, &g, 6.0).unwrap();
        // Quotient of the scaled minimiser equals lambda.
        let scaled: Vec<f64> = phi.iter().map(|x| 5.0 * x).collect();
        let q = quadratic_form_unchecked(&m, &g, &scaled) / weighted_norm_sq(&m, &scaled);
        assert_relative_eq!(q, l1, max_relative = 1e-6);
        // Rigid rotation of the mesh about the origin.
        let rot = nalgebra::Rotation3::from_axis_angle(&Vec3::y_axis(), 0.9);
        let mut m2 = m.clone();
        for p in &mut m2.positions {
            *p = rot * *p;
        }
        let m2 = TriMesh::build(m2.positions.clone(), m2.faces.clone()).unwrap();
        let g2 = Geometry::new(&m2, true).unwrap();
        let (l2, _) = min_rayleigh(&m2, &g2, 6.0).unwrap();
        assert_relative_eq!(l1, l2, max_relative = 1e-6);
    }

    #[test]
    fn cutoff_plateau_and_core() {
        // f = 1 when every r_k >= rho; f = 0 when some r_k <= delta/2.
        let m = primitives::plane_patch(48, 1.0, 0.0);
        let g = Geometry::new(&m, true).unwrap();
        let xi = vec![Vec3::new(0.0, 0.0, 0.0)];
        let (f, energy) = log_cutoff(&m, &g, &xi, 0.05, 0.3).unwrap();
        for v in 0..m.n_vertices() {
            let r = m.positions[v].norm();
            if r >= 0.31 {
                assert_relative_eq!(f[v], 1.0, epsilon = 1e-9);
            }
            if r <= 0.024 {
                assert_eq!(f[v], 0.0);
            }
        }
        assert!(energy > 0.0);
    }

    #[test]
    fn plane_energy_decreases_in_delta_and_double_limit() {
        // Fixed rho: energy(delta) is nonincreasing over the tested decade.
        let rho = 0.1;
        let es: Vec<f64> = [1e-3, 1e-6, 1e-9, 1e-12]
            .iter()
            .map(|&d| plane_cutoff_energy(d, rho))
            .collect();
        for w in es.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-9), "{es:?}");
        }
        // Double limit: after delta -> 0 the residual energy behaves like
        // (2 pi / 3) / |log rho|, which vanishes as rho -> 0.
        for rho in [0.1f64, 0.01, 1e-3] {
            let tail = plane_cutoff_energy(rho.powi(30).max(1e-290), rho);
            let model = 2.0 * PI / 3.0 / rho.ln().abs();
            assert_relative_eq!(tail, model, max_relative = 0.2);
        }
    }

    #[test]
    fn paper_bound_holds_with_fitted_constant() {
        let battery: Vec<(f64, f64)> = vec![
            (1e-3, 0.1),
            (1e-6, 0.1),
            (1e-9, 0.1),
            (1e-4, 0.05),
            (1e-8, 0.02),
        ];
        let c = fit_cutoff_constant(&battery);
        assert!(c.is_finite() && c > 0.0);
        for &(d, r) in &battery {
            assert!(plane_cutoff_energy(d, r) <= c * cutoff_bound_shape(d, r) * (1.0 + 1e-9));
        }
    }

    #[test]
    fn mesh_energy_matches_plane_quadrature() {
        // Sanity: mesh-based cutoff energy tracks the closed-form value at
        // mesh-resolvable delta.
        let m = primitives::plane_patch(192, 1.2, 0.0);
        let g = Geometry::new(&m, true).unwrap();
        let (delta, rho) = (0.08, 0.4);
        let (_, e_mesh) = log_cutoff(&m, &g, &[Vec3::zeros()], delta, rho).unwrap();
        let e_exact = plane_cutoff_energy(delta, rho);
        assert_relative_eq!(e_mesh, e_exact, max_relative = 0.15);
    }

    #[test]
    fn witnesses_on_all_suite_shrinkers() {
        // Radius-2 sphere: cutoff constant, Q ~ -16 pi / e.
        let sphere = primitives::icosphere(4, 2.0, Vec3::zeros());
        let gs = Geometry::new(&sphere, true).unwrap();
        let (_, q) = instability_witness(&sphere, &gs, 8.0).unwrap();
        assert!(q < -1e-6);
        assert_relative_eq!(q, -16.0 * PI / std::f64::consts::E, max_relative = 0.02);

        // Capped cylinder: constant on the tube drives Q negative.
        let cyl = primitives::capped_cylinder(2.0_f64.sqrt(), 6.0, 64, 48);
        let gc = Geometry::new(&cyl, true).unwrap();
        let (_, q) = instability_witness(&cyl, &gc, 8.0).unwrap();
        assert!(q < -1e-6, "cylinder witness Q = {q}");

        // Plane at R = 8: wide bump realizes a negative quotient.
        let plane = primitives::plane_patch(96, 8.5, 0.0);
        let gp = Geometry::new(&plane, true).unwrap();
        let (_, q) = instability_witness(&plane, &gp, 8.0).unwrap();
        assert!(q < -1e-6, "plane witness Q = {q}");
    }

    #[test]
    fn delta_aborts_when_order_is_wrong() {
        let m = primitives::plane_patch(16, 1.0, 0.0);
        let g = Geometry::new(&m, true).unwrap();
        assert!(log_cutoff(&m, &g, &[Vec3::zeros()], 0.3, 0.1).is_err());
    }
}
