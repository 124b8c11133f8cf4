//! Heat kernels on model surfaces (plane, flat torus, unit sphere), their
//! short-time parametrix expansions, singular potentials along Lipschitz
//! curves, capacity functionals and singular-measure recovery.

pub mod cutoffs;
pub mod functionals;
pub mod parametrix;
pub mod potential;

use crate::mesh::{TriMesh, Vec3};
use crate::{Error, Result};

/// The surfaces carrying the kernel machinery. Spectral evaluation is
/// exact on the sphere and the torus; the plane kernel is closed form.
/// Mesh surfaces only support the k = 0 parametrix with user-supplied
/// harmonic-radius parameters.
#[derive(Clone)]
pub enum SurfaceModel {
    Plane,
    Torus { lx: f64, ly: f64 },
    UnitSphere,
    Mesh { mesh: std::sync::Arc<TriMesh>, rho0: f64, xi0: f64 },
}

impl std::fmt::Debug for SurfaceModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Plane => write!(f, "Plane"),
            Self::Torus { lx, ly } => write!(f, "Torus({lx}, {ly})"),
            Self::UnitSphere => write!(f, "UnitSphere"),
            Self::Mesh { rho0, xi0, .. } => write!(f, "Mesh(rho0={rho0}, xi0={xi0})"),
        }
    }
}

pub const SPHERE_MAX_TRUNCATION: usize = 256;

impl SurfaceModel {
    /// Geodesic distance between points. Plane/torus points live in the
    /// xy-plane; sphere points are unit vectors.
    pub fn distance(&self, x: Vec3, y: Vec3) -> f64 {
        match self {
            Self::Plane => (x - y).norm(),
            Self::Torus { lx, ly } => {
                let mut dx = (x.x - y.x).rem_euclid(*lx);
                if dx > lx / 2.0 {
                    dx = lx - dx;
                }
                let mut dy = (x.y - y.y).rem_euclid(*ly);
                if dy > ly / 2.0 {
                    dy = ly - dy;
                }
                (dx * dx + dy * dy).sqrt()
            }
            Self::UnitSphere => x.normalize().dot(&y.normalize()).clamp(-1.0, 1.0).acos(),
            Self::Mesh { .. } => (x - y).norm(),
        }
    }

    /// Validity radius for the parametrix (rho_0 / 2).
    pub fn parametrix_radius(&self) -> f64 {
        match self {
            Self::Plane | Self::Torus { .. } => f64::INFINITY,
            Self::UnitSphere => 1.0,
            Self::Mesh { rho0, .. } => rho0 / 2.0,
        }
    }

    /// Area element factor at geodesic radius r around a point (polar
    /// coordinates): r on flat models, sin r on the unit sphere.
    pub fn polar_jacobian(&self, r: f64) -> f64 {
        match self {
            Self::UnitSphere => r.sin(),
            _ => r,
        }
    }

    /// Move from `base` by geodesic polar offset (r, theta) in a fixed
    /// orthonormal tangent frame. Exact on flat models; on the sphere the
    /// exponential map from the base point.
    pub fn polar_point(&self, base: Vec3, r: f64, theta: f64) -> Vec3 {
        match self {
            Self::Plane | Self::Torus { .. } | Self::Mesh { .. } => {
                base + Vec3::new(r * theta.cos(), r * theta.sin(), 0.0)
            }
            Self::UnitSphere => {
                let n = base.normalize();
                let h = if n.x.abs() < 0.9 {
                    Vec3::new(1.0, 0.0, 0.0)
                } else {
                    Vec3::new(0.0, 1.0, 0.0)
                };
                let e1 = (h - n * h.dot(&n)).normalize();
                let e2 = n.cross(&e1);
                let dir = theta.cos() * e1 + theta.sin() * e2;
                (n * r.cos() + dir * r.sin()).normalize()
            }
        }
    }
}

/// Legendre polynomial values P_l(x) for l = 0..=lmax (recurrence).
pub fn legendre_all(x: f64, lmax: usize) -> Vec<f64> {
    let mut p = Vec::with_capacity(lmax + 1);
    p.push(1.0);
    if lmax == 0 {
        return p;
    }
    p.push(x);
    for l in 1..lmax {
        let next = ((2 * l + 1) as f64 * x * p[l] - l as f64 * p[l - 1]) / (l + 1) as f64;
        p.push(next);
    }
    p
}

/// Gauss-Legendre nodes and weights on [-1, 1] (Newton on P_n).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Chebyshev initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let p = legendre_all(x, n);
            let dp = n as f64 * (x * p[n] - p[n - 1]) / (x * x - 1.0);
            let dx = p[n] / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let p = legendre_all(x, n);
        let dp = n as f64 * (x * p[n] - p[n - 1]) / (x * x - 1.0);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// 1-d circle heat kernel of circumference `l` as a function of coordinate
/// difference, by images for small t and by Fourier modes for large t.
fn circle_kernel(dx: f64, t: f64, l: f64) -> f64 {
    let images_m = ((4.0 * t * 40.0).sqrt() / l).ceil() as i64 + 2;
    let modes_k = ((40.0 / t).sqrt() * l / (2.0 * std::f64::consts::PI)).ceil() as i64 + 2;
    if images_m <= modes_k {
        let mut s = 0.0;
        for m in -images_m..=images_m {
            let d = dx + m as f64 * l;
            s += (-d * d / (4.0 * t)).exp();
        }
        s / (4.0 * std::f64::consts::PI * t).sqrt()
    } else {
        let mut s = 1.0;
        for k in 1..=modes_k {
            let w = 2.0 * std::f64::consts::PI * k as f64 / l;
            s += 2.0 * (-w * w * t).exp() * (w * dx).cos();
        }
        s / l
    }
}

fn circle_kernel_deriv(dx: f64, t: f64, l: f64) -> f64 {
    let images_m = ((4.0 * t * 40.0).sqrt() / l).ceil() as i64 + 2;
    let modes_k = ((40.0 / t).sqrt() * l / (2.0 * std::f64::consts::PI)).ceil() as i64 + 2;
    if images_m <= modes_k {
        let mut s = 0.0;
        for m in -images_m..=images_m {
            let d = dx + m as f64 * l;
            s += (-d / (2.0 * t)) * (-d * d / (4.0 * t)).exp();
        }
        s / (4.0 * std::f64::consts::PI * t).sqrt()
    } else {
        let mut s = 0.0;
        for k in 1..=modes_k {
            let w = 2.0 * std::f64::consts::PI * k as f64 / l;
            s += -2.0 * w * (-w * w * t).exp() * (w * dx).sin();
        }
        s / l
    }
}

/// Exact (to truncation error below 1e-12) heat kernel on the model.
pub fn spectral_kernel(model: &SurfaceModel, x: Vec3, y: Vec3, t: f64) -> Result<f64> {
    if t <= 0.0 {
        return Err(Error::InvalidParameter("t must be positive".into()));
    }
    match model {
        SurfaceModel::Plane => {
            let d2 = (x - y).norm_squared();
            Ok((-d2 / (4.0 * t)).exp() / (4.0 * std::f64::consts::PI * t))
        }
        SurfaceModel::Torus { lx, ly } => {
            Ok(circle_kernel(x.x - y.x, t, *lx) * circle_kernel(x.y - y.y, t, *ly))
        }
        SurfaceModel::UnitSphere => {
            // Truncation with tail bound (2L+3) e^{-L(L+1)t} < 1e-14.
            let mut lmax = None;
            for l in 8..=SPHERE_MAX_TRUNCATION {
                let tail = (2 * l + 3) as f64 * (-(l as f64) * (l as f64 + 1.0) * t).exp();
                if tail < 1e-14 {
                    lmax = Some(l);
                    break;
                }
            }
            let lmax = lmax.ok_or(Error::TruncationTooSmall(t))?;
            let cosd = x.normalize().dot(&y.normalize()).clamp(-1.0, 1.0);
            let p = legendre_all(cosd, lmax);
            let mut s = 0.0;
            for l in 0..=lmax {
                s += (2 * l + 1) as f64 / (4.0 * std::f64::consts::PI)
                    * (-(l as f64) * (l as f64 + 1.0) * t).exp()
                    * p[l];
            }
            Ok(s)
        }
        SurfaceModel::Mesh { .. } => Err(Error::InvalidParameter(
            "spectral kernel is not defined for mesh models".into(),
        )),
    }
}

/// Magnitude of the spatial kernel gradient |grad_x p|(x, y, t).
pub fn spectral_kernel_grad(model: &SurfaceModel, x: Vec3, y: Vec3, t: f64) -> Result<f64> {
    match model {
        SurfaceModel::Plane => {
            let d = (x - y).norm();
            let p = spectral_kernel(model, x, y, t)?;
            Ok(p * d / (2.0 * t))
        }
        SurfaceModel::Torus { lx, ly } => {
            let px = circle_kernel(x.x - y.x, t, *lx);
            let py = circle_kernel(x.y - y.y, t, *ly);
            let gx = circle_kernel_deriv(x.x - y.x, t, *lx) * py;
            let gy = circle_kernel_deriv(x.y - y.y, t, *ly) * px;
            Ok((gx * gx + gy * gy).sqrt())
        }
        SurfaceModel::UnitSphere => {
            let mut lmax = None;
            for l in 8..=SPHERE_MAX_TRUNCATION {
                let tail =
                    ((l + 1) * (2 * l + 3)) as f64 * (-(l as f64) * (l as f64 + 1.0) * t).exp();
                if tail < 1e-14 {
                    lmax = Some(l);
                    break;
                }
            }
            let lmax = lmax.ok_or(Error::TruncationTooSmall(t))?;
            let cosd = x.normalize().dot(&y.normalize()).clamp(-1.0, 1.0);
            let d = cosd.acos();
            let p = legendre_all(cosd, lmax);
            // dP_l/d(theta) = -sin(theta) P_l'(cos theta);
            // P_l'(x) = l (x P_l - P_{l-1}) / (x^2 - 1).
            let sin_d = d.sin();
            let mut s = 0.0;
            for l in 1..=lmax {
                let dpl = if sin_d.abs() < 1e-12 {
                    0.0
                } else {
                    l as f64 * (cosd * p[l] - p[l - 1]) / (cosd * cosd - 1.0)
                };
                s += (2 * l + 1) as f64 / (4.0 * std::f64::consts::PI)
                    * (-(l as f64) * (l as f64 + 1.0) * t).exp()
                    * (-sin_d)
                    * dpl;
            }
            Ok(s.abs())
        }
        SurfaceModel::Mesh { .. } => Err(Error::InvalidParameter(
            "spectral kernel is not defined for mesh models".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn torus_kernel_equilibrates_to_inverse_area() {
        let model = SurfaceModel::Torus { lx: 2.0, ly: 3.0 };
        let p = spectral_kernel(&model, Vec3::new(0.3, 0.4, 0.0), Vec3::zeros(), 50.0).unwrap();
        assert_relative_eq!(p, 1.0 / 6.0, max_relative = 1e-12);
    }

    #[test]
    fn sphere_kernel_is_stochastically_complete() {
        // Integral over the sphere of p(x, ., t) = 1; Gauss-Legendre in
        // cos(theta) integrates the truncated Legendre series exactly.
        let model = SurfaceModel::UnitSphere;
        let x = Vec3::new(0.0, 0.0, 1.0);
        let (nodes, weights) = gauss_legendre(128);
        for t in [0.05, 0.2, 1.0] {
            let mut total = 0.0;
            for (&u, &w) in nodes.iter().zip(&weights) {
                let theta = u.clamp(-1.0, 1.0).acos();
                let y = Vec3::new(theta.sin(), 0.0, theta.cos());
                let p = spectral_kernel(&model, x, y, t).unwrap();
                total += p * w * 2.0 * PI;
            }
            assert_relative_eq!(total, 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn sphere_kernel_symmetry() {
        let model = SurfaceModel::UnitSphere;
        let x = Vec3::new(0.3, -0.2, 0.93).normalize();
        let y = Vec3::new(-0.5, 0.1, 0.86).normalize();
        let a = spectral_kernel(&model, x, y, 0.07).unwrap();
        let b = spectral_kernel(&model, y, x, 0.07).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sphere_semigroup_property() {
        // p(x, y, s + t) = Int p(x, z, s) p(z, y, t) dz within 1e-6.
        let model = SurfaceModel::UnitSphere;
        let x = Vec3::new(0.0, 0.0, 1.0);
        let y = Vec3::new(0.6, 0.0, 0.8).normalize();
        let (s, t) = (0.08, 0.06);
        let direct = spectral_kernel(&model, x, y, s + t).unwrap();
        // The integrand is a trigonometric polynomial of bounded degree:
        // Gauss-Legendre in cos(theta) plus a uniform phi-grid is exact.
        let (nodes, weights) = gauss_legendre(128);
        let n_ph = 300;
        let mut conv = 0.0;
        for (&u, &w) in nodes.iter().zip(&weights) {
            let theta = u.clamp(-1.0, 1.0).acos();
            for j in 0..n_ph {
                let phi = 2.0 * PI * j as f64 / n_ph as f64;
                let z = Vec3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos());
                conv += spectral_kernel(&model, x, z, s).unwrap()
                    * spectral_kernel(&model, z, y, t).unwrap()
                    * w;
            }
        }
        conv *= 2.0 * PI / n_ph as f64;
        assert_relative_eq!(direct, conv, max_relative = 1e-6);
    }

    #[test]
    fn too_small_t_is_rejected_on_sphere() {
        let model = SurfaceModel::UnitSphere;
        let x = Vec3::new(0.0, 0.0, 1.0);
        assert!(matches!(
            spectral_kernel(&model, x, x, 1e-5),
            Err(Error::TruncationTooSmall(_))
        ));
    }

    #[test]
    fn torus_min_image_distance() {
        let model = SurfaceModel::Torus { lx: 2.0, ly: 2.0 };
        let d = model.distance(Vec3::new(1.9, 0.0, 0.0), Vec3::new(0.0, 0.0, 0.0));
        assert_relative_eq!(d, 0.1, epsilon = 1e-12);
    }

    #[test]
    fn plane_grad_matches_finite_difference() {
        let model = SurfaceModel::Plane;
        let x = Vec3::new(0.35, 0.1, 0.0);
        let y = Vec3::zeros();
        let t = 0.07;
        let g = spectral_kernel_grad(&model, x, y, t).unwrap();
        let h = 1e-6;
        let px = spectral_kernel(&model, x + Vec3::new(h, 0.0, 0.0), y, t).unwrap();
        let mx = spectral_kernel(&model, x - Vec3::new(h, 0.0, 0.0), y, t).unwrap();
        let py = spectral_kernel(&model, x + Vec3::new(0.0, h, 0.0), y, t).unwrap();
        let my = spectral_kernel(&model, x - Vec3::new(0.0, h, 0.0), y, t).unwrap();
        let fd = (((px - mx) / (2.0 * h)).powi(2) + ((py - my) / (2.0 * h)).powi(2)).sqrt();
        assert_relative_eq!(g, fd, max_relative = 1e-6);
    }
}
