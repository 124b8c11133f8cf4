//! Geometry of normal graphs over a reference surface: the area-element
//! quantities (w, nu, eta) of the offset map x + u(x) n(x), the mean
//! curvature of the graph, the linearized-flow residual, and the
//! slanted-projection bound check.
//!
//! The offset operator is B(p, s) = Id + s S(p) with S the shape operator
//! of the reference (S = Id/R on spheres with outward normals), so that a
//! positive constant offset of a sphere grows its area element.

use crate::mesh::geometry::{fit_gradient_hessian, vertex_gradient, CotanSystem, Geometry};
use crate::mesh::reach::ray_triangle;
use crate::mesh::TriMesh;
use crate::{Error, Result};
use nalgebra::{Matrix2, Vector2};
use rand::Rng;

/// Pointwise graph quantities at (p, s, y):
/// w = sqrt(1 + |B^{-1} y|^2), nu = w det B,
/// eta = (<p, n> + s - <p, B^{-1} y>) / w.
#[derive(Debug, Clone, Copy)]
pub struct GraphQuantities {
    pub w: f64,
    pub nu: f64,
    pub eta: f64,
}

fn offset_operator(shape: Matrix2<f64>, s: f64) -> Matrix2<f64> {
    Matrix2::identity() + s * shape
}

/// Evaluate (w, nu, eta) per vertex for the height field `u`, using the
/// quadric-fitted shape operator and tangent gradients.
pub fn graph_quantities(
    mesh: &TriMesh,
    geom: &Geometry,
    u: &[f64],
) -> Result<Vec<GraphQuantities>> {
    let mut out = Vec::with_capacity(mesh.n_vertices());
    for v in 0..mesh.n_vertices() {
        let s = u[v];
        let shape = geom.shape[v];
        let b = offset_operator(shape, s);
        let det = b.determinant();
        if det.abs() < 1e-12 {
            return Err(Error::OffsetSingular(v));
        }
        let j = b.try_inverse().ok_or(Error::OffsetSingular(v))?;
        let y = vertex_gradient(mesh, geom, u, v);
        let jy = j * y;
        let w = (1.0 + jy.norm_squared()).sqrt();
        let nu = w * det;
        let p = mesh.positions[v];
        let (e1, e2) = geom.frames[v];
        let jy3 = jy.x * e1 + jy.y * e2;
        let eta = (p.dot(&geom.normals[v]) + s - p.dot(&jy3)) / w;
        out.push(GraphQuantities { w, nu, eta });
    }
    Ok(out)
}

/// Mean curvature of the graph surface {x + u(x) n(x)} evaluated from the
/// closed-form derivatives of nu at (p, u(p), grad u(p)):
/// H_u = (w/nu) (d_s nu - d_pa d_ya nu - (d_s d_ya nu) u_a
///               - (d_yb d_ya nu) u_ab).
pub fn mean_curvature_of_graph(mesh: &TriMesh, geom: &Geometry, u: &[f64]) -> Result<Vec<f64>> {
    let nv = mesh.n_vertices();
    // First pass: per-vertex gradient/hessian of u, plus the field
    // G_a = d_{ya} nu (needed for the mixed p-derivative term).
    let mut grads = Vec::with_capacity(nv);
    let mut hessians = Vec::with_capacity(nv);
    for v in 0..nv {
        let (gr, hs) = fit_gradient_hessian(mesh, geom, u, v);
        grads.push(gr);
        hessians.push(hs);
    }
    let mut g_field = vec![[0.0f64; 2]; nv];
    for v in 0..nv {
        let s = u[v];
        let shape = geom.shape[v];
        let b = offset_operator(shape, s);
        let j = b.try_inverse().ok_or(Error::OffsetSingular(v))?;
        let det = b.determinant();
        let m = j.transpose() * j;
        let y = grads[v];
        let my = m * y;
        let w = (1.0 + (j * y).norm_squared()).sqrt();
        // d_{ya} nu = (M y)_a / w * det B
        g_field[v] = [my.x / w * det, my.y / w * det];
    }

    let mut out = Vec::with_capacity(nv);
    for v in 0..nv {
        let s = u[v];
        let y = grads[v];
        let q = hessians[v];
        let shape = geom.shape[v];
        let b = offset_operator(shape, s);
        let det = b.determinant();
        if det.abs() < 1e-12 || b.norm() / det.abs().min(1.0) > 1e6 {
            return Err(Error::OffsetSingular(v));
        }
        let j = b.try_inverse().ok_or(Error::OffsetSingular(v))?;
        let m = j.transpose() * j;
        let jy = j * y;
        let w = (1.0 + jy.norm_squared()).sqrt();
        let nu = w * det;

        let tr_s = shape.trace();
        let det_s = shape.determinant();
        let dets_ds = tr_s + 2.0 * s * det_s; // d/ds det(I + sS)
        let dj_ds = -j * shape * j;
        let dm_ds = dj_ds.transpose() * j + j.transpose() * dj_ds;
        let my = m * y;
        let dw_ds = 0.5 * (y.dot(&(dm_ds * y))) / w;

        // First derivatives of nu.
        let dnu_ds = dw_ds * det + w * dets_ds;

        // Mixed s-y derivatives of w and nu.
        let dmy_ds = dm_ds * y;
        let mut ds_dya_nu = Vector2::zeros();
        for a in 0..2 {
            let dya_w = my[a] / w;
            let ds_dya_w = dmy_ds[a] / w - my[a] * dw_ds / (w * w);
            ds_dya_nu[a] = ds_dya_w * det + dya_w * dets_ds;
        }

        // Second y-derivatives of nu.
        let mut dyy_nu = Matrix2::zeros();
        for a in 0..2 {
            for bb in 0..2 {
                let dyy_w = m[(a, bb)] / w - my[a] * my[bb] / (w * w * w);
                dyy_nu[(a, bb)] = dyy_w * det;
            }
        }

        // Mixed p-y term: surface divergence of the field G_a = d_{ya} nu,
        // with the chain-rule parts in s and y removed so only the genuine
        // p-dependence (through the shape operator) remains.
        let mut dpa_dya_nu = 0.0;
        for a in 0..2 {
            let comp: Vec<f64> = (0..nv).map(|k| g_field[k][a]).collect();
            let grad_total = vertex_gradient(mesh, geom, &comp, v);
            // total d/dp_a G_a = partial_p + (d_s G_a) u_a + (d_yb G_a) u_ab
            let ds_ga = ds_dya_nu[a];
            let mut chain = ds_ga * y[a];
            for bb in 0..2 {
                chain += dyy_nu[(a, bb)] * q[(a, bb)];
            }
            dpa_dya_nu += grad_total[a] - chain;
        }

        let mut h = dnu_ds - dpa_dya_nu;
        for a in 0..2 {
            h -= ds_dya_nu[a] * y[a];
        }
        for a in 0..2 {
            for bb in 0..2 {
                h -= dyy_nu[(a, bb)] * q[(a, bb)];
            }
        }
        out.push(w / nu * h);
    }
    Ok(out)
}

/// Residual of the linearized flow equation for a height-difference trace:
/// r = d_t u - (Lap_0 u - <x, grad u>/2 + |A|^2 u + u/2), with d_t by
/// central differences. Returns (||r||_L2, ||u||_L2, ratio) aggregated over
/// the interior sample times and mask vertices.
pub fn linearized_residual(
    reference: &TriMesh,
    geom: &Geometry,
    traces: &[Vec<f64>],
    dt: f64,
    mask: &[usize],
) -> Result<(f64, f64, f64)> {
    if traces.len() < 3 {
        return Err(Error::InvalidParameter(
            "need at least three time samples".into(),
        ));
    }
    let system = CotanSystem::new(reference, geom);
    let nv = reference.n_vertices();
    let mut r2 = 0.0;
    let mut u2 = 0.0;
    let mut count = 0usize;
    for k in 1..traces.len() - 1 {
        let u = &traces[k];
        // Lap u = -(L u) / M with the positive-semidefinite stiffness.
        let mut lu = vec![0.0f64; nv];
        for v in 0..nv {
            let mut acc = 0.0;
            for idx in system.offsets[v]..system.offsets[v + 1] {
                acc += system.values[idx] * u[system.columns[idx]];
            }
            lu[v] = -acc / system.mass[v].max(1e-300);
        }
        for &v in mask {
            let du_dt = (traces[k + 1][v] - traces[k - 1][v]) / (2.0 * dt);
            let grad = vertex_gradient(reference, geom, u, v);
            let (e1, e2) = geom.frames[v];
            let grad3 = grad.x * e1 + grad.y * e2;
            let x = reference.positions[v];
            let rhs = lu[v] - 0.5 * x.dot(&grad3)
                + geom.a_norm_sq[v] * u[v]
                + 0.5 * u[v];
            let r = du_dt - rhs;
            r2 += r * r;
            u2 += u[v] * u[v];
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::InvalidParameter("empty mask".into()));
    }
    let rn = (r2 / count as f64).sqrt();
    let un = (u2 / count as f64).sqrt();
    Ok((rn, un, rn / un.max(1e-300)))
}

/// Evolve a height field over a plane-patch reference under the rescaled
/// flow written as a graph equation,
/// d_t w = (Lap w (1 + |grad w|^2) - grad w^T Hess w grad w)/W^2
///         + (w - <x, grad w>)/2,
/// with the outer margin pinned to the exponential far-field solution
/// w0 * e^{t/2}. Returns the sampled trace (every `sample_every` steps).
pub fn evolve_graph_rmcf_plane(
    reference: &TriMesh,
    geom: &Geometry,
    w0: &[f64],
    interior: &[usize],
    far_field: f64,
    dt: f64,
    steps: usize,
    sample_every: usize,
) -> Vec<Vec<f64>> {
    let nv = reference.n_vertices();
    let is_interior = {
        let mut v = vec![false; nv];
        for &k in interior {
            v[k] = true;
        }
        v
    };
    let mut w = w0.to_vec();
    let mut samples = vec![w.clone()];
    for step in 1..=steps {
        let t = step as f64 * dt;
        let mut new_w = w.clone();
        for v in 0..nv {
            if !is_interior[v] {
                new_w[v] = far_field * (t / 2.0).exp() + (w0[v] - far_field) * (t / 2.0).exp();
                continue;
            }
            let (grad, hess) = fit_gradient_hessian(reference, geom, &w, v);
            let lap = hess.trace();
            let w2 = 1.0 + grad.norm_squared();
            let ghg = grad.dot(&(hess * grad));
            let (e1, e2) = geom.frames[v];
            let grad3 = grad.x * e1 + grad.y * e2;
            let x = reference.positions[v];
            let rate = (lap * w2 - ghg) / w2 + 0.5 * (w[v] - x.dot(&grad3));
            new_w[v] = w[v] + dt * rate;
        }
        w = new_w;
        if step % sample_every == 0 {
            samples.push(w.clone());
        }
    }
    samples
}

/// Monte-Carlo check of the slanted-line projection bound |GQ| <= 2 |BQ|:
/// for random base points and angles theta <= theta_max, intersect the line
/// from Q at angle theta with the top sheet and report the largest ratio.
pub fn projection_bound_check<R: Rng>(
    reference: &TriMesh,
    geom: &Geometry,
    u1: &[f64],
    u2: &[f64],
    mask: &[usize],
    sample_count: usize,
    theta_max: f64,
    c1_budget: f64,
    rng: &mut R,
) -> Result<f64> {
    // C^1 norm precondition.
    let mut c1 = 0.0f64;
    for &v in mask {
        let g1 = vertex_gradient(reference, geom, u1, v).norm();
        let g2 = vertex_gradient(reference, geom, u2, v).norm();
        c1 = c1.max(u1[v].abs() + g1).max(u2[v].abs() + g2);
    }
    if c1 > c1_budget {
        return Err(Error::CurvaturePrecondition(format!(
            "C1 norm {c1:.3e} exceeds budget {c1_budget:.3e}"
        )));
    }
    // Offset top-sheet mesh.
    let mut sheet1 = reference.clone();
    for v in 0..reference.n_vertices() {
        sheet1.positions[v] += u1[v] * geom.normals[v];
    }
    let mut worst: f64 = 0.0;
    let mut found = 0usize;
    for _ in 0..sample_count {
        let v = mask[rng.gen_range(0..mask.len())];
        let p = reference.positions[v];
        let n = geom.normals[v];
        let (e1, e2) = geom.frames[v];
        let theta = rng.gen_range(0.0..theta_max);
        let phi = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
        let tau = phi.cos() * e1 + phi.sin() * e2;
        let dir = theta.cos() * n + theta.sin() * tau;
        let g = p + u1[v] * n;
        let q = p + u2[v] * n;
        // Nearest slanted-line intersection with the top sheet.
        let mut best: Option<f64> = None;
        for f in &sheet1.faces {
            if let Some(t) = ray_triangle(
                q,
                dir,
                sheet1.positions[f[0]],
                sheet1.positions[f[1]],
                sheet1.positions[f[2]],
                1e6,
            ) {
                if t.abs() > 1e-14 {
                    best = Some(match best {
                        Some(b) if b.abs() <= t.abs() => b,
                        _ => t,
                    });
                }
            }
        }
        let Some(t) = best else { continue };
        found += 1;
        let gq = (g - q).norm();
        let bq = t.abs() * dir.norm();
        if bq > 1e-14 {
            worst = worst.max(gq / bq);
        }
    }
    if found == 0 {
        return Err(Error::GraphTest(
            "no slanted-line intersections found within the chart".into(),
        ));
    }
    Ok(worst)
}
