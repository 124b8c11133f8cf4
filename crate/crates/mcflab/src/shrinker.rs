//! Gaussian-weighted scalar functionals of a surface: F-functional,
//! entropy, self-shrinker residuals, Gaussian density along a flow, the
//! local Gauss-Bonnet energy bound, and entropy-gap flatness
//! classification.

use crate::mesh::ball::{area_in_ball, subset_genus};
use crate::mesh::geometry::Geometry;
use crate::mesh::{TriMesh, Vec3};
use crate::{Error, Result};
use serde::Serialize;

/// Entropy of the round 2-sphere shrinker, 4/e.
pub const SPHERE_ENTROPY: f64 = 4.0 / std::f64::consts::E;

/// Entropy of the 2-d cylinder shrinker, sqrt(2 pi / e).
pub fn cylinder_entropy() -> f64 {
    (2.0 * std::f64::consts::PI / std::f64::consts::E).sqrt()
}

fn gaussian_weight(x: Vec3, x0: Vec3, t0: f64) -> f64 {
    (-(x - x0).norm_squared() / (4.0 * t0)).exp()
}

/// F_{x0,t0}(Sigma) = (4 pi t0)^{-1} Integral e^{-|x-x0|^2/(4 t0)} dmu.
///
/// One-point centroid quadrature, with barycentric refinement of faces
/// whose diameter exceeds sqrt(t0)/4.
pub fn f_functional(mesh: &TriMesh, x0: Vec3, t0: f64) -> f64 {
    f_functional_masked(mesh, x0, t0, None)
}

/// F restricted to a face subset (used to evaluate tube regions of capped
/// model surfaces).
pub fn f_functional_masked(
    mesh: &TriMesh,
    x0: Vec3,
    t0: f64,
    faces: Option<&[usize]>,
) -> f64 {
    assert!(t0 > 0.0);
    let limit = t0.sqrt() / 4.0;
    let norm = 1.0 / (4.0 * std::f64::consts::PI * t0);
    let mut total = 0.0;
    let all: Vec<usize>;
    let face_ids: &[usize] = match faces {
        Some(f) => f,
        None => {
            all = (0..mesh.n_faces()).collect();
            &all
        }
    };
    for &fi in face_ids {
        let f = mesh.faces[fi];
        let (a, b, c) = (
            mesh.positions[f[0]],
            mesh.positions[f[1]],
            mesh.positions[f[2]],
        );
        total += face_quad(a, b, c, x0, t0, limit, 8);
    }
    norm * total
}

fn face_quad(a: Vec3, b: Vec3, c: Vec3, x0: Vec3, t0: f64, limit: f64, depth: usize) -> f64 {
    let diam = (a - b).norm().max((b - c).norm()).max((c - a).norm());
    let area = 0.5 * (b - a).cross(&(c - a)).norm();
    if diam <= limit || depth == 0 {
        let g = (a + b + c) / 3.0;
        return area * gaussian_weight(g, x0, t0);
    }
    let mab = (a + b) / 2.0;
    let mbc = (b + c) / 2.0;
    let mca = (c + a) / 2.0;
    face_quad(a, mab, mca, x0, t0, limit, depth - 1)
        + face_quad(mab, b, mbc, x0, t0, limit, depth - 1)
        + face_quad(mca, mbc, c, x0, t0, limit, depth - 1)
        + face_quad(mab, mbc, mca, x0, t0, limit, depth - 1)
}

/// Entropy estimate: coarse grid search over centers in the bounding box
/// and log-spaced scales, followed by local grid-halving refinement.
/// Returns (lambda, argmax center, argmax scale).
pub fn entropy_estimate(mesh: &TriMesh, grid: usize) -> (f64, Vec3, f64) {
    entropy_estimate_masked(mesh, grid, None)
}

pub fn entropy_estimate_masked(
    mesh: &TriMesh,
    grid: usize,
    faces: Option<&[usize]>,
) -> (f64, Vec3, f64) {
    let (lo, hi) = match faces {
        None => mesh.bounding_box(),
        Some(ids) => {
            let mut lo = Vec3::repeat(f64::INFINITY);
            let mut hi = Vec3::repeat(f64::NEG_INFINITY);
            for &fi in ids {
                for &v in &mesh.faces[fi] {
                    let p = mesh.positions[v];
                    for k in 0..3 {
                        lo[k] = lo[k].min(p[k]);
                        hi[k] = hi[k].max(p[k]);
                    }
                }
            }
            (lo, hi)
        }
    };
    let f_at = |x0: Vec3, t0: f64| f_functional_masked(mesh, x0, t0, faces);
    let center = (lo + hi) / 2.0;
    // Geometric-mean extent; elongated surfaces otherwise push the scale
    // window past the Gaussian width that realizes the supremum.
    let mut diam = 1.0;
    let mut n_ext = 0;
    for k in 0..3 {
        let e = hi[k] - lo[k];
        if e > 1e-9 {
            diam *= e;
            n_ext += 1;
        }
    }
    let diam = if n_ext > 0 {
        diam.powf(1.0 / n_ext as f64)
    } else {
        1.0
    };
    // Canonical shrinker probes: unit scale at the origin and the centroid.
    let mut best = (f64::NEG_INFINITY, Vec3::zeros(), 1.0);
    for (x0, t0) in [(Vec3::zeros(), 1.0), (center, 1.0)] {
        let f = f_at(x0, t0);
        if f > best.0 {
            best = (f, x0, t0);
        }
    }
    let n = grid.max(3);
    let t_lo = 3e-3 * diam * diam;
    let t_hi = 1e2 * diam * diam;
    let n_t = 13;
    for it in 0..n_t {
        let t0 = t_lo * (t_hi / t_lo).powf(it as f64 / (n_t - 1) as f64);
        for iz in 0..n {
            for iy in 0..n {
                for ix in 0..n {
                    let frac = |k: usize| (k as f64 + 0.5) / n as f64 - 0.5;
                    let x0 = center
                        + Vec3::new(
                            frac(ix) * (hi - lo).x.max(1e-9),
                            frac(iy) * (hi - lo).y.max(1e-9),
                            frac(iz) * (hi - lo).z.max(1e-9),
                        );
                    let f = f_at(x0, t0);
                    if f > best.0 {
                        best = (f, x0, t0);
                    }
                }
            }
        }
    }
    // Three rounds of halving refinement around the argmax, in x0 and t0.
    let mut step = Vec3::new(
        (hi - lo).x.max(1e-9) / n as f64,
        (hi - lo).y.max(1e-9) / n as f64,
        (hi - lo).z.max(1e-9) / n as f64,
    );
    let mut t_fac = (t_hi / t_lo).powf(1.0 / (n_t - 1) as f64);
    for _ in 0..5 {
        step /= 2.0;
        t_fac = t_fac.sqrt();
        let (f0, x0, t0) = best;
        let mut local_best = (f0, x0, t0);
        for dt in [-1.0, 0.0, 1.0] {
            let t = t0 * t_fac.powf(dt);
            for dz in [-1.0f64, 0.0, 1.0] {
                for dy in [-1.0f64, 0.0, 1.0] {
                    for dx in [-1.0f64, 0.0, 1.0] {
                        let x = x0 + Vec3::new(dx * step.x, dy * step.y, dz * step.z);
                        let f = f_at(x, t);
                        if f > local_best.0 {
                            local_best = (f, x, t);
                        }
                    }
                }
            }
        }
        best = local_best;
    }
    best
}

/// Per-vertex self-shrinker residual H - <x, n>/(2 (T - t)); `None` means
/// the unit normalization H - <x, n>/2. Returns (L2, sup) norms with the
/// L2 weighted by vertex areas, restricted to `mask` when given.
pub fn shrinker_residual_masked(
    mesh: &TriMesh,
    geom: &Geometry,
    t_minus_t: Option<f64>,
    mask: Option<&[usize]>,
) -> (f64, f64) {
    let scale = match t_minus_t {
        Some(dt) => {
            assert!(dt > 0.0);
            1.0 / (2.0 * dt)
        }
        None => 0.5,
    };
    let all: Vec<usize>;
    let verts: &[usize] = match mask {
        Some(m) => m,
        None => {
            all = (0..mesh.n_vertices()).collect();
            &all
        }
    };
    let mut l2 = 0.0;
    let mut area = 0.0;
    let mut sup = 0.0f64;
    for &v in verts {
        let r = geom.mean_curvature[v] - scale * mesh.positions[v].dot(&geom.normals[v]);
        l2 += r * r * geom.vertex_areas[v];
        area += geom.vertex_areas[v];
        sup = sup.max(r.abs());
    }
    ((l2 / area.max(1e-300)).sqrt(), sup)
}

pub fn shrinker_residual_with(
    mesh: &TriMesh,
    geom: &Geometry,
    t_minus_t: Option<f64>,
) -> (f64, f64) {
    shrinker_residual_masked(mesh, geom, t_minus_t, None)
}

pub fn shrinker_residual(mesh: &TriMesh, t_minus_t: Option<f64>) -> Result<(f64, f64)> {
    let geom = Geometry::new(mesh, false)?;
    Ok(shrinker_residual_with(mesh, &geom, t_minus_t))
}

/// Gaussian densities Integral Phi_{(x0,T)} dmu_t for a family of mesh
/// checkpoints at times t < T, with an extrapolation of the last three
/// samples toward t -> T.
pub fn gaussian_density(
    checkpoints: &[(f64, TriMesh)],
    x0: Vec3,
    t_ext: f64,
) -> Result<(Vec<(f64, f64)>, f64)> {
    if checkpoints.iter().any(|(t, _)| *t >= t_ext) {
        return Err(Error::InvalidParameter(
            "all checkpoint times must precede T".into(),
        ));
    }
    let mut curve = Vec::with_capacity(checkpoints.len());
    for (t, mesh) in checkpoints {
        let tau = t_ext - t;
        curve.push((*t, f_functional(mesh, x0, tau)));
    }
    let n = curve.len();
    let limit = match n {
        0 => 0.0,
        1 => curve[0].1,
        2 => {
            let (t1, v1) = curve[0];
            let (t2, v2) = curve[1];
            let (tau1, tau2) = (t_ext - t1, t_ext - t2);
            (v2 * tau1 - v1 * tau2) / (tau1 - tau2)
        }
        _ => {
            // Quadratic model in tau = T - t through the last three
            // samples; the extrapolant is the value at tau = 0.
            let (t0, v0) = curve[n - 3];
            let (t1, v1) = curve[n - 2];
            let (t2, v2) = curve[n - 1];
            let (tau0, tau1, tau2) = (t_ext - t0, t_ext - t1, t_ext - t2);
            v0 * tau1 * tau2 / ((tau0 - tau1) * (tau0 - tau2))
                + v1 * tau0 * tau2 / ((tau1 - tau0) * (tau1 - tau2))
                + v2 * tau0 * tau1 / ((tau2 - tau0) * (tau2 - tau1))
        }
    };
    Ok((curve, limit))
}

/// Slack (RHS - LHS) of the local Gauss-Bonnet energy bound
/// (1-eps) Int_{B_1(p)} |A|^2 <= Int_{B_R(p)} |H|^2 + 8 pi e +
/// 24 pi R^2 / (eps (R-1)^2) * sup area ratio, with the genus e of the
/// clipped surface and the ratio sup sampled at 16 log-spaced radii.
pub fn ilmanen_bound_check(
    mesh: &TriMesh,
    geom: &Geometry,
    p: Vec3,
    big_r: f64,
    eps: f64,
    genus_override: Option<i64>,
) -> f64 {
    assert!(big_r > 1.0);
    assert!(eps > 0.0 && eps < 1.0);
    let lhs: f64 = (1.0 - eps)
        * (0..mesh.n_vertices())
            .filter(|&v| (mesh.positions[v] - p).norm() <= 1.0)
            .map(|v| geom.a_norm_sq[v] * geom.vertex_areas[v])
            .sum::<f64>();
    let h2: f64 = (0..mesh.n_vertices())
        .filter(|&v| (mesh.positions[v] - p).norm() <= big_r)
        .map(|v| {
            let h = geom.mean_curvature[v];
            h * h * geom.vertex_areas[v]
        })
        .sum();
    let genus = genus_override.unwrap_or_else(|| {
        let faces: Vec<usize> = (0..mesh.n_faces())
            .filter(|&fi| {
                let f = mesh.faces[fi];
                f.iter().all(|&v| (mesh.positions[v] - p).norm() <= big_r)
            })
            .collect();
        let (_, _, g) = subset_genus(mesh, &faces);
        g
    });
    let mut sup_ratio = 0.0f64;
    for k in 0..16 {
        let r = big_r.powf(k as f64 / 15.0);
        let ratio = area_in_ball(mesh, p, r) / (std::f64::consts::PI * r * r);
        sup_ratio = sup_ratio.max(ratio);
    }
    let rhs = h2
        + 8.0 * std::f64::consts::PI * genus as f64
        + 24.0 * std::f64::consts::PI * big_r * big_r / (eps * (big_r - 1.0) * (big_r - 1.0))
            * sup_ratio;
    rhs - lhs
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShrinkerClass {
    PlaneLike,
    SphereLike,
    CylinderLike,
    Other,
}

/// Model-shrinker classification from sup|H|, entropy and residual size.
///
/// plane-like: sup|H| <= delta and entropy < 1 + eps_entropy;
/// sphere-like / cylinder-like: entropy within 1% of 4/e resp.
/// sqrt(2 pi / e) with small residual; other: none of the above.
pub fn classify_flat(
    mesh: &TriMesh,
    geom: &Geometry,
    delta: f64,
    eps_entropy: f64,
    residual_threshold: f64,
    mask: Option<&[usize]>,
) -> Result<ShrinkerClass> {
    let (_, res_sup) = shrinker_residual_masked(mesh, geom, None, mask);
    if res_sup > residual_threshold {
        return Err(Error::NotAShrinker(res_sup, residual_threshold));
    }
    // The vertex mask carries over to a face mask for the entropy search,
    // so cap regions of model tubes stay out of the functional.
    let face_mask: Option<Vec<usize>> = mask.map(|verts| {
        let vset: std::collections::HashSet<usize> = verts.iter().copied().collect();
        (0..mesh.n_faces())
            .filter(|&fi| mesh.faces[fi].iter().all(|v| vset.contains(v)))
            .collect()
    });
    let (lambda, _, _) = entropy_estimate_masked(mesh, 5, face_mask.as_deref());
    let all: Vec<usize>;
    let verts: &[usize] = match mask {
        Some(m) => m,
        None => {
            all = (0..mesh.n_vertices()).collect();
            &all
        }
    };
    let sup_h = verts
        .iter()
        .map(|&v| geom.mean_curvature[v].abs())
        .fold(0.0f64, f64::max);
    if sup_h <= delta && lambda < 1.0 + eps_entropy {
        return Ok(ShrinkerClass::PlaneLike);
    }
    if (lambda - SPHERE_ENTROPY).abs() <= 0.01 * SPHERE_ENTROPY {
        return Ok(ShrinkerClass::SphereLike);
    }
    if (lambda - cylinder_entropy()).abs() <= 0.01 * cylinder_entropy() {
        return Ok(ShrinkerClass::CylinderLike);
    }
    Ok(ShrinkerClass::Other)
}

/// JSON-facing report of the shrinker analytics of one surface.
#[derive(Debug, Clone, Serialize)]
pub struct ShrinkerReport {
    pub schema_version: u32,
    pub f: f64,
    pub entropy: f64,
    pub entropy_argmax: [f64; 4],
    pub res_l2: f64,
    pub res_sup: f64,
    pub density_curve: Vec<(f64, f64)>,
    pub ilmanen_slack: f64,
    pub class: String,
}

pub fn shrinker_report(mesh: &TriMesh) -> Result<ShrinkerReport> {
    let geom = Geometry::new(mesh, true)?;
    let f = f_functional(mesh, Vec3::zeros(), 1.0);
    let (entropy, x0, t0) = entropy_estimate(mesh, 5);
    let (res_l2, res_sup) = shrinker_residual_with(mesh, &geom, None);
    let slack = ilmanen_bound_check(mesh, &geom, Vec3::zeros(), 2.0, 0.5, None);
    let class = match classify_flat(mesh, &geom, 0.05, 0.1, 0.2, None) {
        Ok(c) => format!("{c:?}"),
        Err(_) => "not-a-shrinker".to_string(),
    };
    Ok(ShrinkerReport {
        schema_version: 1,
        f,
        entropy,
        entropy_argmax: [x0.x, x0.y, x0.z, t0],
        res_l2,
        res_sup,
        density_curve: Vec::new(),
        ilmanen_slack: slack,
        class,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::primitives;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn f_of_plane_is_one() {
        let m = primitives::plane_patch(96, 6.0, 0.0);
        let f = f_functional(&m, Vec3::zeros(), 1.0);
        assert_relative_eq!(f, 1.0, max_relative = 5e-3);
    }

    #[test]
    fn f_of_radius_two_sphere_is_four_over_e() {
        let m = primitives::icosphere(5, 2.0, Vec3::zeros());
        let f = f_functional(&m, Vec3::zeros(), 1.0);
        assert_relative_eq!(f, SPHERE_ENTROPY, max_relative = 5e-3);
    }

    #[test]
    fn f_far_from_surface_vanishes() {
        let m = primitives::icosphere(3, 1.0, Vec3::zeros());
        let f = f_functional(&m, Vec3::new(50.0, 0.0, 0.0), 1.0);
        assert!(f < 1e-12);
    }

    #[test]
    fn f_invariant_under_joint_rotation() {
        let m = primitives::icosphere(3, 1.5, Vec3::new(0.4, 0.0, 0.2));
        let x0 = Vec3::new(0.3, -0.2, 0.5);
        let f0 = f_functional(&m, x0, 0.7);
        let ang: f64 = 0.83;
        let rot = nalgebra::Rotation3::from_axis_angle(&Vec3::z_axis(), ang);
        let mut m2 = m.clone();
        for p in &mut m2.positions {
            *p = rot * *p;
        }
        let f1 = f_functional(&m2, rot * x0, 0.7);
        assert_relative_eq!(f0, f1, max_relative = 1e-10);
    }

    #[test]
    fn entropy_of_radius_two_sphere() {
        let m = primitives::icosphere(4, 2.0, Vec3::zeros());
        let (lambda, x0, t0) = entropy_estimate(&m, 5);
        assert_relative_eq!(lambda, SPHERE_ENTROPY, max_relative = 0.01);
        assert!(x0.norm() < 0.3, "argmax center {x0:?}");
        assert!((t0 - 1.0).abs() < 0.6, "argmax scale {t0}");
        assert!(lambda >= f_functional(&m, Vec3::zeros(), 1.0) - 1e-12);
    }

    #[test]
    fn entropy_of_plane_is_one() {
        let m = primitives::plane_patch(96, 6.0, 0.0);
        let (lambda, _, _) = entropy_estimate(&m, 5);
        assert_relative_eq!(lambda, 1.0, max_relative = 0.01);
    }

    #[test]
    fn entropy_tracks_translation() {
        let m = primitives::icosphere(4, 2.0, Vec3::new(5.0, 0.0, 0.0));
        let (lambda, x0, _) = entropy_estimate(&m, 5);
        assert_relative_eq!(lambda, SPHERE_ENTROPY, max_relative = 0.01);
        assert!((x0 - Vec3::new(5.0, 0.0, 0.0)).norm() < 0.3);
    }

    #[test]
    fn residuals_of_model_surfaces() {
        // Radius-2 sphere: residual bounded by the combined discretization
        // error of H and of the normal tilt, and far below 2% of 1.
        let m = primitives::icosphere(5, 2.0, Vec3::zeros());
        let g = Geometry::new(&m, false).unwrap();
        let tol_h = g
            .mean_curvature
            .iter()
            .map(|h| (h - 1.0).abs())
            .fold(0.0f64, f64::max);
        let tol_n = (0..m.n_vertices())
            .map(|v| (0.5 * m.positions[v].dot(&g.normals[v]) - 1.0).abs())
            .fold(0.0f64, f64::max);
        let (_, sup) = shrinker_residual_with(&m, &g, None);
        assert!(
            sup <= 3.0 * (tol_h + tol_n).max(1e-6),
            "sup {sup} tol {}",
            tol_h + tol_n
        );
        assert!(sup <= 0.02, "sup {sup} exceeds 2% of 1");

        let m1 = primitives::icosphere(5, 1.0, Vec3::zeros());
        let g1 = Geometry::new(&m1, false).unwrap();
        let (_, sup1) = shrinker_residual_with(&m1, &g1, None);
        assert_relative_eq!(sup1, 1.5, max_relative = 0.02);
    }

    #[test]
    fn plane_residual_vanishes() {
        let m = primitives::plane_patch(24, 1.0, 0.0);
        let g = Geometry::new(&m, false).unwrap();
        let interior = primitives::plane_patch_interior(24, 1);
        let (_, sup) = shrinker_residual_masked(&m, &g, None, Some(&interior));
        assert!(sup < 1e-8);
    }

    #[test]
    fn generalized_residual_normalization() {
        // A radius-1 sphere solves H = <x, n>/(2 (T - t)) at T - t = 1/4.
        let m = primitives::icosphere(4, 1.0, Vec3::zeros());
        let g = Geometry::new(&m, false).unwrap();
        let (_, sup) = shrinker_residual_with(&m, &g, Some(0.25));
        assert!(sup < 0.05, "sup {sup}");
    }

    #[test]
    fn ilmanen_slack_nonnegative_on_suite() {
        let plane = primitives::plane_patch(48, 3.0, 0.0);
        let gp = Geometry::new(&plane, true).unwrap();
        assert!(ilmanen_bound_check(&plane, &gp, Vec3::zeros(), 2.0, 0.5, Some(0)) > 0.0);

        let sphere = primitives::icosphere(4, 1.0, Vec3::zeros());
        let gs = Geometry::new(&sphere, true).unwrap();
        let slack = ilmanen_bound_check(&sphere, &gs, Vec3::zeros(), 2.0, 0.5, None);
        assert!(slack >= 0.0);
        let lhs: f64 = 0.5
            * (0..sphere.n_vertices())
                .map(|v| gs.a_norm_sq[v] * gs.vertex_areas[v])
                .sum::<f64>();
        assert_relative_eq!(lhs, 4.0 * PI, max_relative = 0.03);

        let torus = primitives::torus(2.0, 0.7, 64, 32);
        let gt = Geometry::new(&torus, true).unwrap();
        let slack_t = ilmanen_bound_check(&torus, &gt, Vec3::zeros(), 4.0, 0.5, None);
        assert!(slack_t >= 0.0);
    }

    #[test]
    fn classification_of_models() {
        let plane = primitives::plane_patch(96, 6.0, 0.0);
        let gp = Geometry::new(&plane, false).unwrap();
        let interior = primitives::plane_patch_interior(96, 1);
        let class = classify_flat(&plane, &gp, 0.05, 0.1, 0.2, Some(&interior)).unwrap();
        assert_eq!(class, ShrinkerClass::PlaneLike);

        let sphere = primitives::icosphere(4, 2.0, Vec3::zeros());
        let gs = Geometry::new(&sphere, false).unwrap();
        let class = classify_flat(&sphere, &gs, 0.05, 0.1, 0.2, None).unwrap();
        assert_eq!(class, ShrinkerClass::SphereLike);

        let cyl = primitives::capped_cylinder(2.0_f64.sqrt(), 6.0, 96, 64);
        let gc = Geometry::new(&cyl, false).unwrap();
        let tube = primitives::cylinder_tube_vertices(&cyl, 4.0);
        let class = classify_flat(&cyl, &gc, 0.05, 0.1, 0.2, Some(&tube)).unwrap();
        assert_eq!(class, ShrinkerClass::CylinderLike);
    }

    #[test]
    fn non_shrinker_is_rejected() {
        let m = primitives::icosphere(3, 1.0, Vec3::zeros()); // residual 1.5
        let g = Geometry::new(&m, false).unwrap();
        assert!(matches!(
            classify_flat(&m, &g, 0.05, 0.1, 0.2, None),
            Err(Error::NotAShrinker(..))
        ));
    }

    #[test]
    fn plane_classification_invariant_under_density_and_rotation() {
        for n in [64usize, 128] {
            let m = primitives::plane_patch_at(n, 6.0, 0.0, |x, y| {
                let c = 3.0_f64.sqrt() / 2.0;
                let s = 0.5;
                Vec3::new(c * x - s * y, s * x + c * y, 0.0)
            });
            let g = Geometry::new(&m, false).unwrap();
            let interior = primitives::plane_patch_interior(n, 1);
            let class = classify_flat(&m, &g, 0.05, 0.1, 0.2, Some(&interior)).unwrap();
            assert_eq!(class, ShrinkerClass::PlaneLike);
        }
    }

    #[test]
    fn density_of_static_plane_is_one() {
        let m = primitives::plane_patch(96, 6.0, 0.0);
        let checkpoints: Vec<(f64, TriMesh)> =
            [0.0, 0.2, 0.4].iter().map(|&t| (t, m.clone())).collect();
        let (curve, limit) = gaussian_density(&checkpoints, Vec3::zeros(), 1.0).unwrap();
        for (_, v) in &curve {
            assert_relative_eq!(*v, 1.0, max_relative = 0.01);
        }
        assert_relative_eq!(limit, 1.0, max_relative = 0.01);
    }

    #[test]
    fn density_far_from_flow_vanishes() {
        let m = primitives::icosphere(3, 1.0, Vec3::zeros());
        let checkpoints: Vec<(f64, TriMesh)> =
            [0.0, 0.05].iter().map(|&t| (t, m.clone())).collect();
        let (_, limit) =
            gaussian_density(&checkpoints, Vec3::new(100.0, 0.0, 0.0), 0.2).unwrap();
        assert!(limit.abs() < 1e-12);
    }
}
