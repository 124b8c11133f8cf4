//! Singular potentials U(x, t) = Int p(x, xi(s), t - s) dnu(s) along
//! Lipschitz curves, their logarithmic near-field profile, and the
//! backward-heat functions v and V = e^{-2v} built from them.

use super::{spectral_kernel, spectral_kernel_grad, SurfaceModel};
use crate::mesh::Vec3;
use crate::{Error, Result};

/// A sampled sigma-Lipschitz curve on the surface.
#[derive(Debug, Clone)]
pub struct SingularCurve {
    pub times: Vec<f64>,
    pub points: Vec<Vec3>,
    pub lipschitz: f64,
}

impl SingularCurve {
    /// Validates the pairwise Lipschitz bound on adjacent samples.
    pub fn new(times: Vec<f64>, points: Vec<Vec3>, model: &SurfaceModel) -> Result<Self> {
        if times.len() != points.len() || times.len() < 2 {
            return Err(Error::InvalidParameter(
                "curve needs matching times and points (at least two)".into(),
            ));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("curve times must increase".into()));
        }
        let mut sigma = 0.0f64;
        for k in 0..times.len() - 1 {
            let d = model.distance(points[k], points[k + 1]);
            sigma = sigma.max(d / (times[k + 1] - times[k]));
        }
        Ok(Self {
            times,
            points,
            lipschitz: sigma,
        })
    }

    pub fn static_at(point: Vec3, t0: f64, t1: f64) -> Self {
        Self {
            times: vec![t0, t1],
            points: vec![point, point],
            lipschitz: 0.0,
        }
    }

    pub fn t_start(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Linear interpolation between samples (clamped at the ends); the
    /// Lipschitz constant survives linear interpolation.
    pub fn position(&self, t: f64) -> Vec3 {
        if t <= self.times[0] {
            return self.points[0];
        }
        if t >= *self.times.last().unwrap() {
            return *self.points.last().unwrap();
        }
        let k = match self
            .times
            .binary_search_by(|probe| probe.partial_cmp(&t).unwrap())
        {
            Ok(k) => return self.points[k],
            Err(k) => k - 1,
        };
        let alpha = (t - self.times[k]) / (self.times[k + 1] - self.times[k]);
        self.points[k] * (1.0 - alpha) + self.points[k + 1] * alpha
    }

    /// The time-reversed curve over the same window.
    pub fn reversed(&self) -> Self {
        let t0 = self.t_start();
        let t1 = self.t_end();
        let times: Vec<f64> = self.times.iter().map(|&t| t0 + t1 - t).rev().collect();
        let points: Vec<Vec3> = self.points.iter().rev().copied().collect();
        Self {
            times,
            points,
            lipschitz: self.lipschitz,
        }
    }
}

/// Piecewise-constant nonnegative density on a time grid.
#[derive(Debug, Clone)]
pub struct MeasureSamples {
    pub times: Vec<f64>,
    pub densities: Vec<f64>,
}

impl MeasureSamples {
    pub fn new(times: Vec<f64>, densities: Vec<f64>) -> Result<Self> {
        if densities.iter().any(|&d| d < 0.0) {
            return Err(Error::InvalidParameter(
                "measure densities must be nonnegative".into(),
            ));
        }
        Ok(Self { times, densities })
    }

    pub fn lebesgue(t0: f64, t1: f64) -> Self {
        Self {
            times: vec![t0, t1],
            densities: vec![1.0, 1.0],
        }
    }

    pub fn zero(t0: f64, t1: f64) -> Self {
        Self {
            times: vec![t0, t1],
            densities: vec![0.0, 0.0],
        }
    }

    pub fn density(&self, t: f64) -> f64 {
        if self.times.is_empty() {
            return 0.0;
        }
        if t <= self.times[0] {
            return self.densities[0];
        }
        for k in 0..self.times.len() - 1 {
            if t < self.times[k + 1] {
                return self.densities[k];
            }
        }
        *self.densities.last().unwrap()
    }
}


/// Underflow-safe Euclidean distance (hypot chain); coordinate squares of
/// deep-field points would otherwise flush to zero.
fn stable_dist(a: Vec3, b: Vec3) -> f64 {
    (a.x - b.x).hypot(a.y - b.y).hypot(a.z - b.z)
}

/// Exponential integral E1(z) = Int_z^inf e^-u/u du: series below 1,
/// continued fraction (modified Lentz) above.
pub fn exp_integral_e1(z: f64) -> f64 {
    const EULER_GAMMA: f64 = 0.5772156649015329;
    assert!(z > 0.0 || z == 0.0);
    if z == 0.0 {
        return f64::INFINITY;
    }
    if z <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..40 {
            term *= -z / k as f64;
            sum -= term / k as f64;
            if term.abs() < 1e-18 {
                break;
            }
        }
        -EULER_GAMMA - z.ln() + sum
    } else if z > 700.0 {
        0.0
    } else {
        // E1(z) = e^{-z} / (z + 1/(1 + 1/(z + 2/(1 + 2/(z + ...))))).
        let tiny = 1e-300;
        let mut b = z + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..200 {
            let a = -(i as f64) * (i as f64);
            b += 2.0;
            d = 1.0 / (a * d + b);
            c = b + a / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-15 {
                break;
            }
        }
        h * (-z).exp()
    }
}

/// The potential built from a curve and a measure on a model surface.
/// A static plane curve with constant density takes a closed-form
/// exponential-integral path; everything else uses adaptive quadrature.
#[derive(Debug, Clone)]
pub struct Potential {
    pub model: SurfaceModel,
    pub curve: SingularCurve,
    pub measure: MeasureSamples,
    /// Geometric-subdivision depth toward the s = t endpoint; 40 resolves
    /// field radii down to about 1e-5, deeper evaluations raise it.
    pub max_levels: usize,
    closed_form: Option<(Vec3, f64)>,
}

impl Potential {
    pub fn new(model: SurfaceModel, curve: SingularCurve, measure: MeasureSamples) -> Self {
        let static_point = curve
            .points
            .windows(2)
            .all(|w| (w[0] - w[1]).norm() == 0.0)
            .then(|| curve.points[0]);
        let uniform_density = measure
            .densities
            .windows(2)
            .all(|w| w[0] == w[1])
            .then(|| measure.densities[0]);
        let closed_form = match (&model, static_point, uniform_density) {
            (SurfaceModel::Plane, Some(p), Some(d)) => Some((p, d)),
            _ => None,
        };
        Self {
            model,
            curve,
            measure,
            max_levels: 40,
            closed_form,
        }
    }

    fn levels_for(&self, r: f64, window: f64) -> usize {
        // The kernel peak sits at tau ~ r^2/4; subdivide until the deepest
        // cell is well below it.
        let r = r.max(1e-300);
        let needed = (window / (r * r) * 1e3).log2().ceil();
        let needed = if needed.is_finite() { needed.max(4.0) as usize } else { 4 };
        needed.max(self.max_levels)
    }

    /// U(x, t): closed form on the static plane, otherwise adaptive
    /// quadrature in s with geometric refinement near s = t. Returns
    /// +infinity exactly on the curve.
    pub fn eval(&self, x: Vec3, t: f64) -> Result<f64> {
        if let Some((p, dens)) = self.closed_form {
            let t_lo = self.curve.t_start();
            let t_hi = self.curve.t_end();
            if t <= t_lo || dens == 0.0 {
                return Ok(0.0);
            }
            let r = stable_dist(x, p);
            if r == 0.0 {
                return Ok(f64::INFINITY);
            }
            // E1 of z = r^2/(4 dt); build z from logs and use the small-z
            // asymptote directly when r^2 would underflow.
            let e1_of = |dt: f64| -> f64 {
                let ln_z = 2.0 * r.ln() - (4.0 * dt).ln();
                if ln_z < -600.0 {
                    const EULER_GAMMA: f64 = 0.5772156649015329;
                    -EULER_GAMMA - ln_z
                } else {
                    exp_integral_e1(ln_z.exp())
                }
            };
            let mut u = e1_of(t - t_lo);
            if t > t_hi {
                u -= e1_of(t - t_hi);
            }
            return Ok(dens * u / (4.0 * std::f64::consts::PI));
        }
        self.integrate(x, t, false)
    }

    /// |grad_x U|(x, t) by the same quadrature against |grad p|. The bound
    /// direction is radial to leading order near the curve.
    pub fn grad_norm(&self, x: Vec3, t: f64) -> Result<f64> {
        self.grad_norm_scaled(x, t, 1.0)
    }

    /// scale * |grad U|(x, t), computed without forming 1/r so that deep
    /// evaluations (r far below machine-square-root scales) stay finite
    /// when the caller supplies scale = r.
    pub fn grad_norm_scaled(&self, x: Vec3, t: f64, scale: f64) -> Result<f64> {
        if let Some((p, dens)) = self.closed_form {
            let t_lo = self.curve.t_start();
            let t_hi = self.curve.t_end();
            if t <= t_lo || dens == 0.0 {
                return Ok(0.0);
            }
            let r = stable_dist(x, p);
            if r == 0.0 {
                return Ok(f64::INFINITY);
            }
            // z = r^2/(4 dt) from logs: immune to r^2 underflow.
            let ln_r = r.ln();
            let z1 = (2.0 * ln_r - (4.0 * (t - t_lo)).ln()).exp();
            let mut g = (-z1).exp();
            if t > t_hi {
                let z2 = (2.0 * ln_r - (4.0 * (t - t_hi)).ln()).exp();
                g -= (-z2).exp();
            }
            let ratio = (scale.ln() - ln_r).exp();
            return Ok(dens * g.abs() * ratio / (2.0 * std::f64::consts::PI));
        }
        Ok(scale * self.integrate(x, t, true)?)
    }

    fn integrate(&self, x: Vec3, t: f64, grad: bool) -> Result<f64> {
        let t_lo = self.curve.t_start();
        if t <= t_lo {
            return Ok(0.0);
        }
        let r_now = self.model.distance(x, self.curve.position(t));
        if r_now == 0.0 {
            return Ok(f64::INFINITY);
        }
        let window = t - t_lo;
        let levels = self.levels_for(r_now, window);
        // tau = t - s over (0, window], geometric cells toward tau = 0.
        let mut total = 0.0;
        let mut hi = window;
        let mut last_cell = 0.0;
        for level in 0..levels {
            let lo = if level + 1 == levels { 0.0 } else { hi / 2.0 };
            let cell = self.cell_quad(x, t, lo.max(hi * 1e-18), hi, grad)?;
            total += cell;
            last_cell = cell;
            hi /= 2.0;
            if hi < 1e-300 {
                break;
            }
        }
        // Tail bound: the deepest cell must no longer matter.
        if last_cell.abs() > 1e-6 * total.abs().max(1e-300) && total.is_finite() {
            return Err(Error::QuadratureNonConvergence(format!(
                "deepest cell still contributes {last_cell:.3e} of {total:.3e} at r = {r_now:.3e}"
            )));
        }
        Ok(total)
    }

    fn cell_quad(&self, x: Vec3, t: f64, lo: f64, hi: f64, grad: bool) -> Result<f64> {
        // Composite Simpson with 4 panels per geometric cell; the
        // integrand varies by a bounded factor within one octave.
        let n = 4;
        let h = (hi - lo) / n as f64;
        if h <= 0.0 {
            return Ok(0.0);
        }
        let f = |tau: f64| -> Result<f64> {
            let s = t - tau;
            let xi = self.curve.position(s);
            let w = self.measure.density(s);
            if w == 0.0 {
                return Ok(0.0);
            }
            let v = if grad {
                spectral_kernel_grad(&self.model, x, xi, tau)?
            } else {
                spectral_kernel(&self.model, x, xi, tau)?
            };
            Ok(v * w)
        };
        let mut acc = 0.0;
        for k in 0..n {
            let a = lo + k as f64 * h;
            let b = a + h;
            let m = 0.5 * (a + b);
            acc += h / 6.0 * (f(a)? + 4.0 * f(m)? + f(b)?);
        }
        Ok(acc)
    }
}

/// The backward log-profile function v(x, t) = k U(x, Tlo + Thi - t)
/// along the reversed curve with Lebesgue measure, scaled so the sandwich
/// gamma log(1/r) <= v <= log(1/r) holds on a validation annulus.
#[derive(Debug, Clone)]
pub struct BackwardV {
    pub potential: Potential,
    pub t_lo: f64,
    pub t_hi: f64,
    pub scale: f64,
    pub gamma: f64,
    pub valid_r: (f64, f64),
}

impl BackwardV {
    pub fn eval(&self, x: Vec3, t: f64) -> Result<f64> {
        Ok(self.scale * self.potential.eval(x, self.t_lo + self.t_hi - t)?)
    }

    pub fn grad_norm(&self, x: Vec3, t: f64) -> Result<f64> {
        Ok(self.scale * self.potential.grad_norm(x, self.t_lo + self.t_hi - t)?)
    }

    /// Gradient direction on flat models: radially away from the curve to
    /// the quadrature accuracy, so the vector is -grad r * |grad v|.
    pub fn grad_vector(&self, x: Vec3, t: f64) -> Result<Vec3> {
        let xi = self.potential.curve.reversed().position(self.t_lo + self.t_hi - t);
        let d = x - xi;
        let n = d.norm();
        if n < 1e-300 {
            return Ok(Vec3::zeros());
        }
        // v decreases away from the curve.
        Ok(-(d / n) * self.grad_norm(x, t)?)
    }

    /// scale * grad v as a vector, stable for very small curve distances.
    pub fn grad_vector_scaled(&self, x: Vec3, t: f64, scale: f64) -> Result<Vec3> {
        let xi = self.potential.curve.reversed().position(self.t_lo + self.t_hi - t);
        let d = x - xi;
        let n = stable_dist(x, xi);
        if n == 0.0 {
            return Ok(Vec3::zeros());
        }
        let mag = self.scale
            * self
                .potential
                .grad_norm_scaled(x, self.t_lo + self.t_hi - t, scale)?;
        Ok(-(d / n) * mag)
    }

    pub fn v_field(&self, x: Vec3, t: f64) -> f64 {
        self.eval(x, t).unwrap_or(f64::INFINITY)
    }

    pub fn capital_v(&self, x: Vec3, t: f64) -> Result<f64> {
        Ok((-2.0 * self.eval(x, t)?).exp())
    }
}

/// Radial lookup table of a potential-like field around a moving center:
/// exact evaluations on a log-radial grid at fixed time nodes, linear
/// interpolation in log r between them. The profile is sampled in the
/// direction perpendicular to the local curve motion, which symmetrizes
/// the O(sigma r) anisotropy of a moving source.
pub struct RadialTable {
    pub t_nodes: Vec<f64>,
    pub centers: Vec<Vec3>,
    pub r_lo: f64,
    pub r_hi: f64,
    pub n_r: usize,
    values: Vec<f64>,
}

impl RadialTable {
    pub fn build<F: Fn(Vec3, f64) -> Result<f64>>(
        f: F,
        center_at: impl Fn(f64) -> Vec3,
        t_nodes: &[f64],
        r_lo: f64,
        r_hi: f64,
        n_r: usize,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(t_nodes.len() * n_r);
        let mut centers = Vec::with_capacity(t_nodes.len());
        let lr = (r_hi / r_lo).ln();
        for &t in t_nodes {
            let c = center_at(t);
            centers.push(c);
            // Perpendicular to the motion direction when it exists.
            let dt = 1e-4;
            let motion = center_at(t + dt) - center_at(t - dt);
            let dir = if motion.norm() > 1e-12 {
                Vec3::new(-motion.y, motion.x, 0.0).normalize()
            } else {
                Vec3::new(1.0, 0.0, 0.0)
            };
            for k in 0..n_r {
                let r = r_lo * (lr * k as f64 / (n_r - 1) as f64).exp();
                values.push(f(c + r * dir, t)?);
            }
        }
        Ok(Self {
            t_nodes: t_nodes.to_vec(),
            centers,
            r_lo,
            r_hi,
            n_r,
            values,
        })
    }

    /// Interpolated value at (x, t); t must be one of the build nodes.
    pub fn eval(&self, x: Vec3, t: f64) -> f64 {
        let it = self
            .t_nodes
            .iter()
            .position(|&tn| (tn - t).abs() < 1e-12)
            .expect("RadialTable queried off its time nodes");
        let r = (x - self.centers[it]).norm().clamp(self.r_lo, self.r_hi);
        let lr = (self.r_hi / self.r_lo).ln();
        let s = (r / self.r_lo).ln() / lr * (self.n_r - 1) as f64;
        let k = (s.floor() as usize).min(self.n_r - 2);
        let frac = s - k as f64;
        let base = it * self.n_r;
        self.values[base + k] * (1.0 - frac) + self.values[base + k + 1] * frac
    }
}

/// Build v for a curve over [t_lo, t_hi]: the scale is calibrated on the
/// validation annulus so that v/log(1/r) lands in [gamma, 1]; failure
/// reports the admissible radius range.
pub fn backward_v(
    model: &SurfaceModel,
    curve: &SingularCurve,
    gamma: f64,
    valid_r: (f64, f64),
) -> Result<BackwardV> {
    if !(0.5 < gamma && gamma < 1.0) {
        return Err(Error::InvalidParameter("gamma must lie in (1/2, 1)".into()));
    }
    let t_lo = curve.t_start();
    let t_hi = curve.t_end();
    let reversed = curve.reversed();
    let potential = Potential::new(
        model.clone(),
        reversed,
        MeasureSamples::lebesgue(t_lo, t_hi),
    );
    // Sample the ratio U / log(1/r) on the annulus at a few times/angles.
    let mut ratio_min = f64::INFINITY;
    let mut ratio_max = f64::NEG_INFINITY;
    let times = [
        t_lo + 0.25 * (t_hi - t_lo),
        t_lo + 0.5 * (t_hi - t_lo),
        t_lo + 0.75 * (t_hi - t_lo),
    ];
    for &t in &times {
        let back_t = t_lo + t_hi - t;
        let xi = potential.curve.position(back_t);
        for k in 0..5 {
            let r = valid_r.0 * (valid_r.1 / valid_r.0).powf(k as f64 / 4.0);
            for theta in [0.0, 2.1, 4.2] {
                let x = model.polar_point(xi, r, theta);
                let u = potential.eval(x, back_t)?;
                let ratio = u / (1.0 / r).ln();
                ratio_min = ratio_min.min(ratio);
                ratio_max = ratio_max.max(ratio);
            }
        }
    }
    let scale = 1.0 / ratio_max;
    if scale * ratio_min < gamma {
        return Err(Error::SandwichFailed(valid_r.0, valid_r.1));
    }
    Ok(BackwardV {
        potential,
        t_lo,
        t_hi,
        scale,
        gamma,
        valid_r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn e1(z: f64) -> f64 {
        // Exponential integral E1 for small arguments via the series
        // E1(z) = -gamma - ln z + sum (-1)^{k+1} z^k / (k k!).
        const EULER_GAMMA: f64 = 0.5772156649015329;
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..30 {
            term *= -z / k as f64;
            sum -= term / k as f64;
        }
        -EULER_GAMMA - z.ln() + sum
    }

    #[test]
    fn static_plane_potential_matches_exponential_integral() {
        // U = (1/4pi) E1(r^2 / (4 Delta)) for the static curve with
        // Lebesgue measure on the plane.
        let model = SurfaceModel::Plane;
        let curve = SingularCurve::static_at(Vec3::zeros(), 0.0, 2.0);
        let pot = Potential::new(model, curve, MeasureSamples::lebesgue(0.0, 2.0));
        for (r, t) in [(1e-2, 1.0), (1e-3, 1.0), (0.1, 0.5), (1e-4, 2.0)] {
            let x = Vec3::new(r, 0.0, 0.0);
            let u = pot.eval(x, t).unwrap();
            let exact = e1(r * r / (4.0 * t)) / (4.0 * std::f64::consts::PI);
            assert_relative_eq!(u, exact, max_relative = 1e-6);
        }
    }

    #[test]
    fn log_profile_ratio() {
        // U * 2 pi / log(1/r) -> 1 as r -> 0 (window 0.5 keeps the additive
        // constant inside 3% at r = 1e-3).
        let model = SurfaceModel::Plane;
        let curve = SingularCurve::static_at(Vec3::zeros(), 0.0, 1.0);
        let pot = Potential::new(model, curve, MeasureSamples::lebesgue(0.0, 1.0));
        let r = 1e-3;
        let u = pot.eval(Vec3::new(r, 0.0, 0.0), 0.5).unwrap();
        let ratio = u * 2.0 * std::f64::consts::PI / (1.0 / r).ln();
        assert!((ratio - 1.0).abs() <= 0.03, "ratio {ratio}");
        // At unit window the E1 constant shifts the ratio to about 1.0585.
        let u1 = pot.eval(Vec3::new(r, 0.0, 0.0), 1.0).unwrap();
        let ratio1 = u1 * 2.0 * std::f64::consts::PI / (1.0 / r).ln();
        let expect = e1(r * r / 4.0) / (2.0 * (1.0 / r).ln());
        assert_relative_eq!(ratio1, expect, max_relative = 1e-6);
    }

    #[test]
    fn far_field_is_gaussian_small() {
        let model = SurfaceModel::Plane;
        let curve = SingularCurve::static_at(Vec3::zeros(), 0.0, 1.0);
        let pot = Potential::new(model, curve, MeasureSamples::lebesgue(0.0, 1.0));
        let u = pot.eval(Vec3::new(10.0, 0.0, 0.0), 0.1).unwrap();
        // Bound e^{-r^2/4t} t/(4 pi t): astronomically small here.
        assert!(u <= (-100.0f64 / 0.4).exp() / (4.0 * std::f64::consts::PI) + 1e-300);
    }

    #[test]
    fn zero_measure_gives_zero() {
        let model = SurfaceModel::Plane;
        let curve = SingularCurve::static_at(Vec3::zeros(), 0.0, 1.0);
        let pot = Potential::new(model, curve, MeasureSamples::zero(0.0, 1.0));
        assert_eq!(pot.eval(Vec3::new(0.1, 0.0, 0.0), 0.9).unwrap(), 0.0);
    }

    #[test]
    fn on_curve_value_is_infinite() {
        let model = SurfaceModel::Plane;
        let curve = SingularCurve::static_at(Vec3::zeros(), 0.0, 1.0);
        let pot = Potential::new(model, curve, MeasureSamples::lebesgue(0.0, 1.0));
        assert!(pot.eval(Vec3::zeros(), 0.5).unwrap().is_infinite());
    }

    #[test]
    fn monotone_in_measure() {
        let model = SurfaceModel::Plane;
        let curve = SingularCurve::static_at(Vec3::zeros(), 0.0, 1.0);
        let pot1 = Potential::new(
            model.clone(),
            curve.clone(),
            MeasureSamples::new(vec![0.0, 1.0], vec![1.0, 1.0]).unwrap(),
        );
        let pot2 = Potential::new(
            model,
            curve,
            MeasureSamples::new(vec![0.0, 1.0], vec![2.0, 2.0]).unwrap(),
        );
        for r in [1e-1, 1e-2, 1e-3] {
            let x = Vec3::new(r, 0.0, 0.0);
            assert!(pot2.eval(x, 0.8).unwrap() >= pot1.eval(x, 0.8).unwrap());
        }
    }

    #[test]
    fn lipschitz_constant_validated() {
        let model = SurfaceModel::Plane;
        let c = SingularCurve::new(
            vec![0.0, 1.0, 2.0],
            vec![
                Vec3::zeros(),
                Vec3::new(0.5, 0.0, 0.0),
                Vec3::new(0.5, 0.3, 0.0),
            ],
            &model,
        )
        .unwrap();
        assert_relative_eq!(c.lipschitz, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn backward_v_sandwich_on_plane() {
        let model = SurfaceModel::Plane;
        let curve = SingularCurve::static_at(Vec3::zeros(), 0.0, 2.0);
        let v = backward_v(&model, &curve, 0.75, (1e-4, 1e-2)).unwrap();
        for r in [1e-4, 1e-3, 1e-2] {
            let x = Vec3::new(r, 0.0, 0.0);
            let val = v.eval(x, 1.0).unwrap();
            let l = (1.0 / r).ln();
            assert!(0.75 * l <= val && val <= l, "v = {val} at r = {r}");
            // V = e^{-2v}: r^2 <= V <= r^{2 gamma}.
            let cap = v.capital_v(x, 1.0).unwrap();
            assert!(r.powi(2) <= cap && cap <= r.powf(1.5), "V = {cap}");
        }
    }

    #[test]
    fn backward_v_solves_backward_heat_equation() {
        // Interior finite-difference stencil of d_t v + Lap v on the plane.
        let model = SurfaceModel::Plane;
        let curve = SingularCurve::static_at(Vec3::zeros(), 0.0, 2.0);
        let v = backward_v(&model, &curve, 0.75, (1e-4, 1e-2)).unwrap();
        let h = 1e-3;
        let dt = 1e-4;
        let x = Vec3::new(0.05, 0.02, 0.0);
        let t = 1.0;
        let vc = v.eval(x, t).unwrap();
        let vxp = v.eval(x + Vec3::new(h, 0.0, 0.0), t).unwrap();
        let vxm = v.eval(x - Vec3::new(h, 0.0, 0.0), t).unwrap();
        let vyp = v.eval(x + Vec3::new(0.0, h, 0.0), t).unwrap();
        let vym = v.eval(x - Vec3::new(0.0, h, 0.0), t).unwrap();
        let lap = (vxp + vxm + vyp + vym - 4.0 * vc) / (h * h);
        let vt = (v.eval(x, t + dt).unwrap() - v.eval(x, t - dt).unwrap()) / (2.0 * dt);
        let scale = v.grad_norm(x, t).unwrap() / 0.05; // ~ |v|/r^2 magnitude
        assert!(
            (vt + lap).abs() <= 1e-3 * scale.max(1.0),
            "backward heat residual {}",
            vt + lap
        );
    }

    #[test]
    fn aggressive_gamma_fails_sandwich() {
        // On a coarse annulus far from the curve the profile is not yet
        // logarithmic; a gamma close to 1 cannot be calibrated.
        let model = SurfaceModel::Plane;
        let curve = SingularCurve::static_at(Vec3::zeros(), 0.0, 0.2);
        let r = backward_v(&model, &curve, 0.99, (1e-2, 0.5));
        assert!(matches!(r, Err(Error::SandwichFailed(..))));
    }
}
