//! Parabolic rescaling of surfaces and the MCF <-> RMCF time change.

use crate::mesh::{TriMesh, Vec3};
use crate::{Error, Result};

/// Tangent-flow rescaling x -> c (x - x0). The caller supplies the matched
/// rescaled time t' = c^2 (t - T).
pub fn tangent_rescale(mesh: &TriMesh, x0: Vec3, c: f64) -> TriMesh {
    assert!(c > 0.0);
    let mut out = mesh.clone();
    for p in &mut out.positions {
        *p = c * (*p - x0);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReparametrizeDirection {
    McfToRmcf,
    RmcfToMcf,
}

/// Match times between the MCF parametrization s (with s = 1 - e^{-t}
/// relative to t_ref) and the RMCF parametrization t; the paired scaling
/// factor sqrt(1 - s) (or its inverse) is returned alongside.
pub fn time_reparametrize(
    t: f64,
    direction: ReparametrizeDirection,
    t_ref: f64,
) -> Result<(f64, f64)> {
    match direction {
        ReparametrizeDirection::RmcfToMcf => {
            let s = 1.0 - (-(t - t_ref)).exp();
            Ok((s, (1.0 - s).sqrt()))
        }
        ReparametrizeDirection::McfToRmcf => {
            let s = t;
            if s >= 1.0 {
                return Err(Error::InvalidParameter(format!(
                    "s = {s} is outside the MCF window [0, 1)"
                )));
            }
            let tt = t_ref - (1.0 - s).ln();
            Ok((tt, 1.0 / (1.0 - s).sqrt()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::primitives;
    use approx::assert_relative_eq;

    #[test]
    fn identity_rescale() {
        let m = primitives::tetrahedron();
        let r = tangent_rescale(&m, Vec3::zeros(), 1.0);
        for (a, b) in m.positions.iter().zip(&r.positions) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn translation_only() {
        let m = primitives::tetrahedron();
        let r = tangent_rescale(&m, Vec3::new(1.0, 0.0, 0.0), 1.0);
        for (a, b) in m.positions.iter().zip(&r.positions) {
            assert_relative_eq!((a - Vec3::new(1.0, 0.0, 0.0) - b).norm(), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn shrinking_sphere_rescales_to_radius_two() {
        // Sphere at MCF time t with R(t) = sqrt(1 - 4t) and T = 1/4:
        // scaling by 1/sqrt(T - t) yields radius R/sqrt(T - t) = 2.
        let t = 0.2;
        let r_t = (1.0_f64 - 4.0 * t).sqrt();
        let m = primitives::icosphere(3, r_t, Vec3::zeros());
        let c = 1.0 / (0.25_f64 - t).sqrt();
        let r = tangent_rescale(&m, Vec3::zeros(), c);
        for p in &r.positions {
            assert_relative_eq!(p.norm(), 2.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn rescale_composed_with_inverse_is_identity() {
        let m = primitives::icosphere(2, 1.3, Vec3::new(0.2, -0.4, 0.9));
        let x0 = Vec3::new(0.5, 0.5, -0.25);
        let c = 3.7;
        let fwd = tangent_rescale(&m, x0, c);
        let back = tangent_rescale(&fwd, -c * x0, 1.0 / c);
        for (a, b) in m.positions.iter().zip(&back.positions) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn time_match_examples() {
        let (s, f) = time_reparametrize(0.0, ReparametrizeDirection::RmcfToMcf, 0.0).unwrap();
        assert_eq!(s, 0.0);
        assert_eq!(f, 1.0);

        let (s, f) = time_reparametrize(2.0_f64.ln(), ReparametrizeDirection::RmcfToMcf, 0.0)
            .unwrap();
        assert_relative_eq!(s, 0.5, epsilon = 1e-15);
        assert_relative_eq!(f, 0.5_f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn round_trip_is_identity() {
        for t in [0.1, 0.5, 2.0, 5.0] {
            let (s, _) = time_reparametrize(t, ReparametrizeDirection::RmcfToMcf, 0.0).unwrap();
            let (t2, _) = time_reparametrize(s, ReparametrizeDirection::McfToRmcf, 0.0).unwrap();
            assert_relative_eq!(t2, t, epsilon = 1e-14);
        }
    }

    #[test]
    fn s_at_least_one_is_error() {
        assert!(time_reparametrize(1.0, ReparametrizeDirection::McfToRmcf, 0.0).is_err());
    }
}
