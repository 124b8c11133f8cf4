//! Voxel decomposition of a ball into high-curvature, thick and thin parts
//! relative to a surface, the thin-measure time series f(t, eps), and the
//! doubling time-slice selector.

use crate::mesh::geometry::Geometry;
use crate::mesh::{TriMesh, Vec3};
use crate::{Error, Result};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VoxelLabel {
    Outside,
    High,
    Thick,
    Thin,
    NearSurface,
}

/// Voxel labeling of B_R(0); measures are voxel counts times voxel volume.
#[derive(Debug, Clone)]
pub struct BallDecomposition {
    pub eps: f64,
    pub radius: f64,
    pub resolution: usize,
    pub labels: Vec<VoxelLabel>,
    /// High-curvature vertex set S (indices into the mesh).
    pub high_curvature_vertices: Vec<usize>,
    pub measure_high: f64,
    pub measure_thick: f64,
    pub measure_thin: f64,
    pub measure_near_surface: f64,
    /// Count of voxels whose cell straddles the sphere |x| = R.
    pub boundary_voxels: usize,
    pub voxel_volume: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecompositionSummary {
    pub schema_version: u32,
    pub eps: f64,
    pub radius: f64,
    pub resolution: usize,
    pub measure_high: f64,
    pub measure_thick: f64,
    pub measure_thin: f64,
    pub measure_near_surface: f64,
    pub ball_volume: f64,
    pub partition_gap: f64,
    pub n_high_curvature_vertices: usize,
}

impl BallDecomposition {
    pub fn summary(&self) -> DecompositionSummary {
        let ball =
            4.0 / 3.0 * std::f64::consts::PI * self.radius * self.radius * self.radius;
        let covered = self.measure_high
            + self.measure_thick
            + self.measure_thin
            + self.measure_near_surface;
        DecompositionSummary {
            schema_version: 1,
            eps: self.eps,
            radius: self.radius,
            resolution: self.resolution,
            measure_high: self.measure_high,
            measure_thick: self.measure_thick,
            measure_thin: self.measure_thin,
            measure_near_surface: self.measure_near_surface,
            ball_volume: ball,
            partition_gap: (covered - ball).abs(),
            n_high_curvature_vertices: self.high_curvature_vertices.len(),
        }
    }

    /// Run-length encoded grid (label byte, count) over the z-major scan.
    pub fn to_rle(&self) -> Vec<(u8, u32)> {
        let code = |l: VoxelLabel| match l {
            VoxelLabel::Outside => 0u8,
            VoxelLabel::High => 1,
            VoxelLabel::Thick => 2,
            VoxelLabel::Thin => 3,
            VoxelLabel::NearSurface => 4,
        };
        let mut out: Vec<(u8, u32)> = Vec::new();
        for &l in &self.labels {
            let c = code(l);
            match out.last_mut() {
                Some((lc, n)) if *lc == c => *n += 1,
                _ => out.push((c, 1)),
            }
        }
        out
    }
}

/// Squared Euclidean distance transform of a boolean grid (cell units),
/// by the separable lower-envelope method, one axis at a time.
fn distance_transform_sq(seed: &[bool], n: usize) -> Vec<f64> {
    let inf = 1e18;
    let mut d: Vec<f64> = seed.iter().map(|&s| if s { 0.0 } else { inf }).collect();
    let mut f = vec![0.0f64; n];
    let mut dt = vec![0.0f64; n];
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];
    let mut pass = |d: &mut Vec<f64>, stride: usize, offset: usize| {
        for i in 0..n {
            f[i] = d[offset + i * stride];
        }
        // 1-d squared-distance lower envelope (Felzenszwalb-Huttenlocher).
        let mut k = 0usize;
        v[0] = 0;
        z[0] = -inf;
        z[1] = inf;
        for q in 1..n {
            let mut s;
            loop {
                let p = v[k];
                s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64))
                    / (2.0 * q as f64 - 2.0 * p as f64);
                if s <= z[k] {
                    if k == 0 {
                        break;
                    }
                    k -= 1;
                } else {
                    break;
                }
            }
            k += 1;
            v[k] = q;
            z[k] = s;
            z[k + 1] = inf;
        }
        let mut k = 0usize;
        for q in 0..n {
            while z[k + 1] < q as f64 {
                k += 1;
            }
            let p = v[k];
            dt[q] = (q as f64 - p as f64) * (q as f64 - p as f64) + f[p];
        }
        for i in 0..n {
            d[offset + i * stride] = dt[i];
        }
    };
    // x-axis rows, then y, then z.
    for iz in 0..n {
        for iy in 0..n {
            pass(&mut d, 1, (iz * n + iy) * n);
        }
    }
    for iz in 0..n {
        for ix in 0..n {
            pass(&mut d, n, iz * n * n + ix);
        }
    }
    for iy in 0..n {
        for ix in 0..n {
            pass(&mut d, n * n, iy * n + ix);
        }
    }
    d
}

/// Exact triangle/axis-aligned-box overlap (separating axes).
fn tri_box_overlap(center: Vec3, half: f64, a: Vec3, b: Vec3, c: Vec3) -> bool {
    let v0 = a - center;
    let v1 = b - center;
    let v2 = c - center;
    for k in 0..3 {
        let lo = v0[k].min(v1[k]).min(v2[k]);
        let hi = v0[k].max(v1[k]).max(v2[k]);
        if lo > half || hi < -half {
            return false;
        }
    }
    let e0 = v1 - v0;
    let e1 = v2 - v1;
    let n = e0.cross(&e1);
    let d = n.dot(&v0);
    let r = half * (n.x.abs() + n.y.abs() + n.z.abs());
    if d.abs() > r {
        return false;
    }
    let e2 = v0 - v2;
    for e in [e0, e1, e2] {
        for k in 0..3 {
            let mut axis = Vec3::zeros();
            axis[k] = 1.0;
            let ax = e.cross(&axis);
            if ax.norm_squared() < 1e-30 {
                continue;
            }
            let p0 = ax.dot(&v0);
            let p1 = ax.dot(&v1);
            let p2 = ax.dot(&v2);
            let lo = p0.min(p1).min(p2);
            let hi = p0.max(p1).max(p2);
            let r = half * (ax.x.abs() + ax.y.abs() + ax.z.abs());
            if lo > r || hi < -r {
                return false;
            }
        }
    }
    true
}

/// Decompose B_R(0) relative to the surface:
/// S = vertices with |A| > 1/eps inside the ball,
/// H = points within eps/2 of S,
/// TK = flood fill from voxels whose (eps - voxel diagonal)-ball avoids
///      H and the surface, through voxels avoiding both,
/// TN = the remainder. Voxels cut by the surface form a separate
/// near-surface band so the measures close to the ball volume.
pub fn decompose(
    mesh: &TriMesh,
    geom: &Geometry,
    eps: f64,
    radius: f64,
    resolution: usize,
) -> Result<BallDecomposition> {
    if eps <= 0.0 || radius <= 0.0 {
        return Err(Error::InvalidParameter("eps and R must be positive".into()));
    }
    if resolution < 32 {
        return Err(Error::InvalidParameter(
            "voxel resolution must be at least 32".into(),
        ));
    }
    let n = resolution;
    let cell = 2.0 * radius / n as f64;
    let diag = cell * 3.0_f64.sqrt();
    if eps < 2.0 * diag {
        return Err(Error::VoxelResolution {
            eps,
            diag2: 2.0 * diag,
        });
    }

    // High-curvature vertex set.
    let mut s_points: Vec<Vec3> = Vec::new();
    let mut s_ids: Vec<usize> = Vec::new();
    for v in 0..mesh.n_vertices() {
        if mesh.positions[v].norm() < radius && geom.a_norm_sq[v].sqrt() > 1.0 / eps {
            s_points.push(mesh.positions[v]);
            s_ids.push(v);
        }
    }

    let center_of = |ix: usize, iy: usize, iz: usize| {
        Vec3::new(
            -radius + cell * (ix as f64 + 0.5),
            -radius + cell * (iy as f64 + 0.5),
            -radius + cell * (iz as f64 + 0.5),
        )
    };
    let index_of = |ix: usize, iy: usize, iz: usize| (iz * n + iy) * n + ix;

    // Near-surface band: voxels actually cut by a face.
    let mut near = vec![false; n * n * n];
    for f in &mesh.faces {
        let (a, b, c) = (
            mesh.positions[f[0]],
            mesh.positions[f[1]],
            mesh.positions[f[2]],
        );
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for p in [a, b, c] {
            for k in 0..3 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let cell_range = |v: f64| ((v + radius) / cell).floor() as i64;
        let (x0, x1) = (cell_range(lo.x).max(0), cell_range(hi.x).min(n as i64 - 1));
        let (y0, y1) = (cell_range(lo.y).max(0), cell_range(hi.y).min(n as i64 - 1));
        let (z0, z1) = (cell_range(lo.z).max(0), cell_range(hi.z).min(n as i64 - 1));
        for iz in z0..=z1 {
            for iy in y0..=y1 {
                for ix in x0..=x1 {
                    let idx = index_of(ix as usize, iy as usize, iz as usize);
                    if !near[idx]
                        && tri_box_overlap(
                            center_of(ix as usize, iy as usize, iz as usize),
                            cell / 2.0,
                            a,
                            b,
                            c,
                        )
                    {
                        near[idx] = true;
                    }
                }
            }
        }
    }

    // Distance-to-S threshold test via bucketing of S points.
    let mut s_buckets: std::collections::HashMap<(i64, i64, i64), Vec<usize>> =
        std::collections::HashMap::new();
    let bucket_size = (eps / 2.0).max(cell);
    for (k, p) in s_points.iter().enumerate() {
        let key = (
            (p.x / bucket_size).floor() as i64,
            (p.y / bucket_size).floor() as i64,
            (p.z / bucket_size).floor() as i64,
        );
        s_buckets.entry(key).or_default().push(k);
    }
    let near_s = |p: Vec3, r: f64| -> bool {
        if s_points.is_empty() {
            return false;
        }
        let reach = (r / bucket_size).ceil() as i64;
        let kx = (p.x / bucket_size).floor() as i64;
        let ky = (p.y / bucket_size).floor() as i64;
        let kz = (p.z / bucket_size).floor() as i64;
        for dz in -reach..=reach {
            for dy in -reach..=reach {
                for dx in -reach..=reach {
                    if let Some(ids) = s_buckets.get(&(kx + dx, ky + dy, kz + dz)) {
                        for &k in ids {
                            if (s_points[k] - p).norm() < r {
                                return true;
                            }
                        }
                    }
                }
            }
        }
        false
    };

    // Distance (in cells) to the nearest surface-cut voxel center; the
    // conservative surface clearance is that distance minus half a
    // diagonal.
    let band_dist_sq = distance_transform_sq(&near, n);

    let mut labels = vec![VoxelLabel::Outside; n * n * n];
    let mut boundary_voxels = 0usize;
    let eps_inner = eps - diag;
    let mut seeds: Vec<usize> = Vec::new();
    for iz in 0..n {
        for iy in 0..n {
            for ix in 0..n {
                let idx = index_of(ix, iy, iz);
                let p = center_of(ix, iy, iz);
                let d_origin = p.norm();
                if (d_origin - radius).abs() <= diag / 2.0 {
                    boundary_voxels += 1;
                }
                if d_origin >= radius {
                    continue;
                }
                if near[idx] {
                    labels[idx] = VoxelLabel::NearSurface;
                    continue;
                }
                if near_s(p, eps / 2.0) {
                    labels[idx] = VoxelLabel::High;
                    continue;
                }
                labels[idx] = VoxelLabel::Thin; // provisional; flood to TK
                let surface_clearance = band_dist_sq[idx].sqrt() * cell - diag / 2.0;
                let clearance_ok = !near_s(p, eps / 2.0 + eps_inner)
                    && surface_clearance >= eps_inner;
                if clearance_ok {
                    seeds.push(idx);
                }
            }
        }
    }

    // Flood fill of TK through 6-connectivity, never crossing the
    // near-surface band or H.
    let mut queue: std::collections::VecDeque<usize> = Default::default();
    for &s in &seeds {
        if labels[s] == VoxelLabel::Thin {
            labels[s] = VoxelLabel::Thick;
            queue.push_back(s);
        }
    }
    while let Some(idx) = queue.pop_front() {
        let iz = idx / (n * n);
        let iy = (idx / n) % n;
        let ix = idx % n;
        let mut neighbors = Vec::with_capacity(6);
        if ix > 0 {
            neighbors.push(idx - 1);
        }
        if ix + 1 < n {
            neighbors.push(idx + 1);
        }
        if iy > 0 {
            neighbors.push(idx - n);
        }
        if iy + 1 < n {
            neighbors.push(idx + n);
        }
        if iz > 0 {
            neighbors.push(idx - n * n);
        }
        if iz + 1 < n {
            neighbors.push(idx + n * n);
        }
        for nb in neighbors {
            if labels[nb] == VoxelLabel::Thin {
                labels[nb] = VoxelLabel::Thick;
                queue.push_back(nb);
            }
        }
    }

    let vol = cell * cell * cell;
    let count = |l: VoxelLabel| labels.iter().filter(|&&x| x == l).count() as f64 * vol;
    Ok(BallDecomposition {
        eps,
        radius,
        resolution,
        measure_high: count(VoxelLabel::High),
        measure_thick: count(VoxelLabel::Thick),
        measure_thin: count(VoxelLabel::Thin),
        measure_near_surface: count(VoxelLabel::NearSurface),
        labels,
        high_curvature_vertices: s_ids,
        boundary_voxels,
        voxel_volume: vol,
    })
}

/// f(t, eps) = inf over the window [t - tau, t] of the sampled thin
/// measures (piecewise-constant interpolation).
pub fn f_of_t(samples: &[(f64, f64)], t: f64, tau: f64) -> Result<f64> {
    let lo = t - tau;
    if samples.is_empty()
        || samples.first().unwrap().0 > lo + 1e-12
        || samples.last().unwrap().0 < t - 1e-12
    {
        return Err(Error::WindowNotCovered(lo, t));
    }
    let mut inf = f64::INFINITY;
    for (i, &(s, v)) in samples.iter().enumerate() {
        let next = samples.get(i + 1).map(|x| x.0).unwrap_or(f64::INFINITY);
        if next >= lo && s <= t {
            inf = inf.min(v);
        }
    }
    Ok(inf)
}

/// Result of the doubling time-slice search.
#[derive(Debug, Clone)]
pub struct SelectedTimes {
    pub times: Vec<f64>,
    pub exhausted: bool,
}

/// The doubling selector: scan [s, s+l]; if some sampled time has
/// f > 2 f(s), jump there and rescan; emit s when the window sup is at
/// most 2 f(s); restart at s + l + 1. Returns `count` selected times, or
/// fewer (flagged) when the horizon is exhausted.
pub fn select_times<F: Fn(f64) -> f64>(
    f: F,
    sample_times: &[f64],
    t0: f64,
    l: f64,
    count: usize,
) -> Result<SelectedTimes> {
    let horizon = match sample_times.last() {
        Some(&t) => t,
        None => return Err(Error::NoPositiveStart),
    };
    let mut start = None;
    for &t in sample_times {
        if t > t0 + l && f(t) > 0.0 {
            start = Some(t);
            break;
        }
    }
    let mut s = match start {
        Some(s) => s,
        None => return Err(Error::NoPositiveStart),
    };
    let window = |s: f64| -> Option<f64> {
        // First sampled time in [s, s + l] exceeding 2 f(s), if any.
        let fs = f(s);
        for &t in sample_times {
            if t >= s && t <= s + l && f(t) > 2.0 * fs {
                return Some(t);
            }
        }
        None
    };
    let mut times = Vec::with_capacity(count);
    let mut exhausted = false;
    'outer: while times.len() < count {
        loop {
            if s > horizon {
                exhausted = true;
                break 'outer;
            }
            match window(s) {
                None => break,
                Some(t) => s = t,
            }
        }
        times.push(s);
        let mut next = None;
        for &t in sample_times {
            if t >= s + l + 1.0 && f(t) > 0.0 {
                next = Some(t);
                break;
            }
        }
        match next {
            Some(t) => s = t,
            None => {
                exhausted = times.len() < count;
                break;
            }
        }
    }
    Ok(SelectedTimes { times, exhausted })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::primitives;
    use std::f64::consts::PI;

    #[test]
    fn plane_has_no_thin_part() {
        // One sheet through the ball: both sides are thick.
        let m = primitives::plane_patch(64, 1.5, 0.0);
        let g = Geometry::new(&m, true).unwrap();
        let d = decompose(&m, &g, 0.1, 1.0, 64).unwrap();
        assert!(d.high_curvature_vertices.is_empty());
        let cell = 2.0 / 64.0;
        let slab = 2.0 * cell * PI;
        assert!(
            d.measure_thin <= slab,
            "thin measure {} above {}",
            d.measure_thin,
            slab
        );
        assert!(d.measure_thick > 2.0);
    }

    #[test]
    fn slab_between_parallel_planes_is_thin() {
        // Separation 0.05 below eps = 0.2: the slab is thin, volume
        // d * pi R^2 within 10%.
        let r = 0.5;
        let d_gap = 0.05;
        let m = primitives::parallel_planes(128, 0.8, d_gap);
        let g = Geometry::new(&m, true).unwrap();
        let dec = decompose(&m, &g, 0.2, r, 320).unwrap();
        let expect = d_gap * PI * r * r;
        assert!(
            (dec.measure_thin - expect).abs() <= 0.10 * expect,
            "thin {} vs {}",
            dec.measure_thin,
            expect
        );
    }

    #[test]
    fn tiny_sphere_is_high_curvature() {
        let m = primitives::icosphere(2, 0.01, Vec3::zeros());
        let g = Geometry::new(&m, true).unwrap();
        let d = decompose(&m, &g, 0.1, 1.0, 64).unwrap();
        assert_eq!(d.high_curvature_vertices.len(), m.n_vertices());
        let n = 64;
        let idx = (n / 2 * n + n / 2) * n + n / 2;
        assert_eq!(d.labels[idx], VoxelLabel::High);
        assert!(d.measure_high > 0.0);
    }

    #[test]
    fn partition_closes_to_ball_volume() {
        let m = primitives::icosphere(3, 0.6, Vec3::zeros());
        let g = Geometry::new(&m, true).unwrap();
        let d = decompose(&m, &g, 0.15, 1.0, 64).unwrap();
        let s = d.summary();
        let tol = d.voxel_volume * d.boundary_voxels as f64;
        assert!(
            s.partition_gap <= tol,
            "gap {} vs boundary tolerance {}",
            s.partition_gap,
            tol
        );
    }

    #[test]
    fn enlarging_s_never_shrinks_h() {
        let mut m0 = primitives::icosphere(3, 0.6, Vec3::zeros());
        for p in &mut m0.positions {
            p.z *= 0.5;
        }
        let m = TriMesh::build(m0.positions.clone(), m0.faces.clone()).unwrap();
        let g = Geometry::new(&m, true).unwrap();
        let mut g_low = g.clone();
        for a in &mut g_low.a_norm_sq {
            *a *= 4.0; // |A| doubled: more vertices pass the 1/eps bar
        }
        let d_small_s = decompose(&m, &g, 0.12, 1.0, 64).unwrap();
        let d_large_s = decompose(&m, &g_low, 0.12, 1.0, 64).unwrap();
        assert!(
            d_large_s.high_curvature_vertices.len() >= d_small_s.high_curvature_vertices.len()
        );
        assert!(d_large_s.measure_high >= d_small_s.measure_high);
    }

    #[test]
    fn coarse_resolution_rejected() {
        let m = primitives::icosphere(2, 0.5, Vec3::zeros());
        let g = Geometry::new(&m, true).unwrap();
        assert!(matches!(
            decompose(&m, &g, 0.05, 1.0, 32),
            Err(Error::VoxelResolution { .. })
        ));
    }

    #[test]
    fn thin_slab_error_halves_with_resolution() {
        let r = 0.5;
        let d_gap = 0.06;
        let m = primitives::parallel_planes(96, 0.8, d_gap);
        let g = Geometry::new(&m, true).unwrap();
        let expect = d_gap * PI * r * r;
        let e1 = {
            let d = decompose(&m, &g, 0.2, r, 80).unwrap();
            (d.measure_thin - expect).abs() / expect
        };
        let e2 = {
            let d = decompose(&m, &g, 0.2, r, 160).unwrap();
            (d.measure_thin - expect).abs() / expect
        };
        assert!(e2 <= 0.6 * e1 + 0.01, "errors did not halve: {e1} -> {e2}");
    }

    #[test]
    fn f_of_t_window_infimum() {
        let samples: Vec<(f64, f64)> = (0..=10).map(|k| (k as f64 * 0.1, 3.0)).collect();
        assert_eq!(f_of_t(&samples, 1.0, 0.5).unwrap(), 3.0);

        let ramp: Vec<(f64, f64)> =
            (0..=10).map(|k| (k as f64 * 0.1, k as f64 * 0.1)).collect();
        let v = f_of_t(&ramp, 1.0, 0.5).unwrap();
        assert!((v - 0.5).abs() < 1e-12);

        assert!(f_of_t(&ramp, 1.0, 2.0).is_err());

        let noisy = vec![(0.0, 5.0), (0.5, 4.0), (1.0, 4.5), (1.5, 3.0)];
        assert_eq!(f_of_t(&noisy, 1.5, 1.0).unwrap(), 3.0);
    }

    #[test]
    fn selector_on_decaying_f() {
        let samples: Vec<f64> = (0..=2000).map(|k| k as f64 * 0.05).collect();
        let sel = select_times(|t| (-t).exp(), &samples, 0.0, 1.0, 5).unwrap();
        assert_eq!(sel.times.len(), 5);
        assert!(!sel.exhausted);
        assert!((sel.times[0] - 1.05).abs() < 1e-12);
        for w in sel.times.windows(2) {
            assert!(w[1] > w[0] + 1.0);
        }
    }

    #[test]
    fn selector_jumps_past_spike() {
        let f = |t: f64| {
            let base = (-0.1 * t).exp();
            if (t - 1.5).abs() < 0.051 {
                3.0 * base
            } else {
                base
            }
        };
        let samples: Vec<f64> = (0..=4000).map(|k| k as f64 * 0.05).collect();
        let sel = select_times(f, &samples, 0.0, 1.0, 3).unwrap();
        assert!(sel.times[0] >= 1.5, "selector did not jump: {:?}", sel.times);
        for &ti in &sel.times {
            let fi = f(ti);
            for &t in &samples {
                if t >= ti && t <= ti + 1.0 {
                    assert!(f(t) <= 2.0 * fi + 1e-12);
                }
            }
        }
    }

    #[test]
    fn selector_needs_positive_start() {
        let samples: Vec<f64> = (0..=100).map(|k| k as f64 * 0.1).collect();
        assert!(matches!(
            select_times(|_| 0.0, &samples, 0.0, 1.0, 2),
            Err(Error::NoPositiveStart)
        ));
    }

    #[test]
    fn selector_partial_result_flagged() {
        let samples: Vec<f64> = (0..=40).map(|k| k as f64 * 0.1).collect();
        let sel = select_times(|t| (-t).exp(), &samples, 0.0, 1.0, 10).unwrap();
        assert!(sel.exhausted);
        assert!(sel.times.len() < 10);
    }
}
