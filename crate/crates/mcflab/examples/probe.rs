use mcflab::kernel::potential::{backward_v, SingularCurve};
use mcflab::kernel::functionals::measure_recovery;
use mcflab::kernel::SurfaceModel;
use mcflab::mesh::Vec3;

fn smooth_plateau(t: f64, a: f64, b: f64, taper: f64) -> f64 {
    if t <= a - taper || t >= b + taper { 0.0 }
    else if t >= a && t <= b { 1.0 }
    else if t < a { let u = (t - (a - taper)) / taper; u * u * (3.0 - 2.0 * u) }
    else { let u = ((b + taper) - t) / taper; u * u * (3.0 - 2.0 * u) }
}

fn main() {
    let model = SurfaceModel::Plane;
    let curve = SingularCurve::static_at(Vec3::zeros(), 0.0, 2.0);
    let v = backward_v(&model, &curve, 0.75, (1e-4, 1e-2)).unwrap();
    println!("scale k = {}", v.scale);
    let u = |_x: Vec3, _t: f64| 1.0;
    let psi = |t: f64| smooth_plateau(t, 0.8, 1.2, 0.02);
    for levels in [[60.0, 80.0, 100.0], [120.0, 160.0, 200.0], [240.0, 320.0, 400.0]] {
        let rec = measure_recovery(&model, &[&v], u, psi, levels, 0.05, 0.7, 1.3).unwrap();
        println!("L = {levels:?}: samples {:?} -> {}", rec.samples, rec.value);
        for (i, &l) in levels.iter().enumerate() {
            println!("   a*L = {}", rec.samples[i] * l);
        }
    }
}
