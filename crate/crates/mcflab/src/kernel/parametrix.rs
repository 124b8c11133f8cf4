//! Short-time heat-kernel parametrix (4 pi t)^{-1} e^{-d^2/4t}
//! (u_0 + u_1 t) on the model surfaces, with the transport-equation
//! coefficient u_1 integrated along the geodesic.

use super::SurfaceModel;
use crate::mesh::Vec3;
use crate::{Error, Result};

/// 16-point Gauss-Legendre nodes/weights on [0, 1].
const GL16: [(f64, f64); 16] = [
    (0.005299532504175031, 0.013576229705877047),
    (0.0277124884633837, 0.031126761969323946),
    (0.06718439880608412, 0.04757925584124639),
    (0.12229779582249845, 0.06231448562776694),
    (0.19106187779867811, 0.07479799440828837),
    (0.27099161117138632, 0.08457825969750127),
    (0.35919822461037054, 0.09130170752246179),
    (0.45249374508118123, 0.09472530522753425),
    (0.54750625491881877, 0.09472530522753425),
    (0.64080177538962946, 0.09130170752246179),
    (0.72900838882861368, 0.08457825969750127),
    (0.80893812220132189, 0.07479799440828837),
    (0.87770220417750155, 0.06231448562776694),
    (0.93281560119391588, 0.04757925584124639),
    (0.97228751153661629, 0.031126761969323946),
    (0.99470046749582497, 0.013576229705877047),
];

/// u_0 on the unit sphere: (d / sin d)^{1/2}; 1 on flat models.
pub fn u0(model: &SurfaceModel, d: f64) -> f64 {
    match model {
        SurfaceModel::UnitSphere => {
            if d < 1e-8 {
                1.0 + d * d / 12.0
            } else {
                (d / d.sin()).sqrt()
            }
        }
        _ => 1.0,
    }
}

/// Laplacian of u_0 along the geodesic on the unit sphere,
/// G(s) = F''(s) + cot(s) F'(s) with F = (s / sin s)^{1/2}; G(0) = 1/3.
fn sphere_laplace_u0(s: f64) -> f64 {
    if s < 1e-4 {
        // Series: F = 1 + s^2/12 + ...; G -> 1/3 with O(s^2) correction.
        return 1.0 / 3.0 + s * s / 15.0;
    }
    let f = (s / s.sin()).sqrt();
    let a = 1.0 / s - s.cos() / s.sin(); // (ln F)' * 2
    let fp = f * a / 2.0;
    let ap = -1.0 / (s * s) + 1.0 / (s.sin() * s.sin());
    let fpp = fp * a / 2.0 + f * ap / 2.0;
    fpp + s.cos() / s.sin() * fp
}

/// u_1 by the transport recursion
/// u_1(d) = d^{-1/2} J^{-1/2} Int_0^d s^{-1/2} J^{1/2} (Lap u_0)(s) ds,
/// with J = sin s on the sphere; zero on flat models (the parametrix is
/// exact there).
pub fn u1(model: &SurfaceModel, d: f64) -> f64 {
    match model {
        SurfaceModel::UnitSphere => {
            if d < 1e-10 {
                return 1.0 / 3.0;
            }
            let mut integral = 0.0;
            for (node, weight) in GL16 {
                let s = d * node;
                let integrand = if s < 1e-12 {
                    sphere_laplace_u0(0.0)
                } else {
                    (s.sin() / s).sqrt() * sphere_laplace_u0(s)
                };
                integral += weight * integrand;
            }
            integral *= d; // ds = d * dnode
            integral / (d * d.sin()).sqrt()
        }
        _ => 0.0,
    }
}

/// Truncated parametrix of order k at (x, y, t). Returns
/// (value, u0, budget shape t^k for the two-dimensional remainder bound).
pub fn parametrix_eval(
    model: &SurfaceModel,
    x: Vec3,
    y: Vec3,
    t: f64,
    k: usize,
) -> Result<(f64, f64, f64)> {
    if !(0.0 < t && t <= 1.0) {
        return Err(Error::InvalidParameter("t must lie in (0, 1]".into()));
    }
    if k > 1 {
        return Err(Error::InvalidParameter(
            "parametrix order k must be 0 or 1".into(),
        ));
    }
    let d = model.distance(x, y);
    let limit = model.parametrix_radius();
    if d >= limit {
        return Err(Error::ParametrixRange { d, limit });
    }
    let p0 = (-(d * d) / (4.0 * t)).exp() / (4.0 * std::f64::consts::PI * t);
    let a0 = u0(model, d);
    let mut series = a0;
    if k >= 1 {
        series += u1(model, d) * t;
    }
    Ok((p0 * series, a0, t.powi(k as i32)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::spectral_kernel;
    use approx::assert_relative_eq;

    #[test]
    fn diagonal_value_is_euclidean_leading_order() {
        // x = y: value = (4 pi t)^{-1} u0(x,x) with u0(x,x) = 1 (k = 0).
        let model = SurfaceModel::UnitSphere;
        let x = Vec3::new(0.0, 0.0, 1.0);
        let (p, a0, _) = parametrix_eval(&model, x, x, 0.02, 0).unwrap();
        assert_eq!(a0, 1.0);
        assert_relative_eq!(p, 1.0 / (4.0 * std::f64::consts::PI * 0.02), epsilon = 1e-12);
    }

    #[test]
    fn plane_parametrix_is_exact() {
        let model = SurfaceModel::Plane;
        let x = Vec3::new(0.4, -0.3, 0.0);
        let y = Vec3::zeros();
        for t in [0.01, 0.1, 0.7] {
            let (p, _, _) = parametrix_eval(&model, x, y, t, 0).unwrap();
            let exact = spectral_kernel(&model, x, y, t).unwrap();
            assert_relative_eq!(p, exact, epsilon = 1e-15);
        }
    }

    #[test]
    fn sphere_u0_closed_form() {
        let model = SurfaceModel::UnitSphere;
        for d in [0.1, 0.3, 0.5, 1.0] {
            assert_relative_eq!(u0(&model, d), (d / d.sin()).sqrt(), epsilon = 1e-12);
        }
    }

    #[test]
    fn sphere_u1_limit_is_one_third() {
        // The on-diagonal first heat coefficient of the unit sphere is
        // K/3 = 1/3 (scalar curvature over six).
        let model = SurfaceModel::UnitSphere;
        assert_relative_eq!(u1(&model, 1e-6), 1.0 / 3.0, max_relative = 1e-4);
        assert_relative_eq!(u1(&model, 0.05), 1.0 / 3.0, max_relative = 2e-3);
    }

    #[test]
    fn order_one_halves_error_with_t() {
        // Remainder O(t^{k+1-m/2}) = O(t) for k = 1, m = 2: sup error over
        // d <= 0.5 scales by about one half when t halves.
        let model = SurfaceModel::UnitSphere;
        let x = Vec3::new(0.0, 0.0, 1.0);
        let sup_err = |t: f64| -> f64 {
            let mut worst = 0.0f64;
            for i in 0..=50 {
                let d = 0.5 * i as f64 / 50.0;
                let y = Vec3::new(d.sin(), 0.0, d.cos());
                let (p, _, _) = parametrix_eval(&model, x, y, t, 1).unwrap();
                let exact = spectral_kernel(&model, x, y, t).unwrap();
                worst = worst.max((p - exact).abs());
            }
            worst
        };
        let e1 = sup_err(0.04);
        let e2 = sup_err(0.02);
        let e3 = sup_err(0.01);
        assert!(
            (0.35..=0.7).contains(&(e2 / e1)),
            "ratio {} outside [0.35, 0.7]",
            e2 / e1
        );
        assert!(
            (0.35..=0.7).contains(&(e3 / e2)),
            "ratio {} outside [0.35, 0.7]",
            e3 / e2
        );
    }

    #[test]
    fn distance_beyond_validity_radius_errors() {
        let model = SurfaceModel::UnitSphere;
        let x = Vec3::new(0.0, 0.0, 1.0);
        let y = Vec3::new(0.0, 0.0, -1.0);
        assert!(matches!(
            parametrix_eval(&model, x, y, 0.1, 0),
            Err(Error::ParametrixRange { .. })
        ));
    }
}
