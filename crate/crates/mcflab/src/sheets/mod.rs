//! Multiplicity and sheet analysis over a reference shrinker: sheet
//! decomposition by normal raycasting, height-difference fields, and the
//! local area-ratio multiplicity.

pub mod graphs;

use crate::mesh::ball::area_in_ball;
use crate::mesh::geometry::Geometry;
use crate::mesh::reach::ray_triangle;
use crate::mesh::{TriMesh, Vec3};
use crate::{Error, Result};
use serde::Serialize;

/// Sheets of a target surface written as graphs over a reference mesh.
#[derive(Debug, Clone)]
pub struct SheetBundle {
    /// Reference vertex ids forming the domain mask Omega_{eps,R}.
    pub mask: Vec<usize>,
    /// Per-sheet heights, outer index = sheet (ascending normal offset),
    /// inner index aligned with `mask`.
    pub heights: Vec<Vec<f64>>,
    pub sheet_count: usize,
    /// Vertices dropped because the normal ray grazed the target.
    pub dropped: Vec<usize>,
    pub singular_points: Vec<Vec3>,
    pub eps: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SheetBundleJson {
    pub schema_version: u32,
    pub mask: Vec<usize>,
    pub heights: Vec<Vec<f64>>,
    pub sheet_count: usize,
    pub singular_points: Vec<[f64; 3]>,
    pub eps: f64,
    pub radius: f64,
}

impl SheetBundle {
    pub fn to_json(&self) -> SheetBundleJson {
        SheetBundleJson {
            schema_version: 1,
            mask: self.mask.clone(),
            heights: self.heights.clone(),
            sheet_count: self.sheet_count,
            singular_points: self.singular_points.iter().map(|p| [p.x, p.y, p.z]).collect(),
            eps: self.eps,
            radius: self.radius,
        }
    }
}

/// Intersect the reference normal line at each mask vertex with the target
/// and sort the hits into sheets. Sheet labeling must be consistent across
/// the mask (hit counts agree between flood-fill neighbours); a mismatch is
/// an error naming the offending vertex.
pub fn decompose_sheets(
    target: &TriMesh,
    reference: &TriMesh,
    geom: &Geometry,
    eps: f64,
    radius: f64,
    singular_points: &[Vec3],
    band: f64,
) -> Result<SheetBundle> {
    // Domain mask: inside B_R, away from the singular set.
    let mut in_mask = vec![false; reference.n_vertices()];
    for v in 0..reference.n_vertices() {
        let p = reference.positions[v];
        if p.norm() > radius {
            continue;
        }
        if singular_points.iter().any(|s| (p - s).norm() < eps) {
            continue;
        }
        in_mask[v] = true;
    }

    // Raycast each mask vertex.
    let mut hits: Vec<Option<Vec<f64>>> = vec![None; reference.n_vertices()];
    let mut dropped = Vec::new();
    for v in 0..reference.n_vertices() {
        if !in_mask[v] {
            continue;
        }
        let origin = reference.positions[v];
        let dir = geom.normals[v];
        let mut ts: Vec<f64> = Vec::new();
        let mut grazed = false;
        for f in &target.faces {
            let (a, b, c) = (
                target.positions[f[0]],
                target.positions[f[1]],
                target.positions[f[2]],
            );
            if let Some(t) = ray_triangle(origin, dir, a, b, c, band) {
                let nf = (b - a).cross(&(c - a));
                let denom = nf.norm().max(1e-300);
                if dir.dot(&nf).abs() / denom < 1e-6 {
                    grazed = true;
                    break;
                }
                ts.push(t);
            }
        }
        if grazed {
            in_mask[v] = false;
            dropped.push(v);
            continue;
        }
        ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ts.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * band.max(1.0));
        if ts.is_empty() {
            // No target over this vertex: treat as outside the graph domain.
            in_mask[v] = false;
            dropped.push(v);
            continue;
        }
        hits[v] = Some(ts);
    }

    // Consistency flood fill over the mask.
    let mask: Vec<usize> = (0..reference.n_vertices()).filter(|&v| in_mask[v]).collect();
    if mask.is_empty() {
        return Err(Error::GraphTest("empty sheet mask".into()));
    }
    let m = hits[mask[0]].as_ref().unwrap().len();
    let mut seen = vec![false; reference.n_vertices()];
    let mut queue = std::collections::VecDeque::from([mask[0]]);
    seen[mask[0]] = true;
    while let Some(v) = queue.pop_front() {
        for &u in reference.vertex_neighbors(v) {
            if in_mask[u] && !seen[u] {
                let found = hits[u].as_ref().unwrap().len();
                if found != m {
                    return Err(Error::SheetCount {
                        vertex: u,
                        expected: m,
                        found,
                    });
                }
                seen[u] = true;
                queue.push_back(u);
            }
        }
    }
    // Disconnected mask islands must agree too.
    for &v in &mask {
        let found = hits[v].as_ref().unwrap().len();
        if found != m {
            return Err(Error::SheetCount {
                vertex: v,
                expected: m,
                found,
            });
        }
    }

    let mut heights = vec![vec![0.0f64; mask.len()]; m];
    for (k, &v) in mask.iter().enumerate() {
        let ts = hits[v].as_ref().unwrap();
        for (sheet, &t) in ts.iter().enumerate() {
            heights[sheet][k] = t;
        }
    }
    Ok(SheetBundle {
        mask,
        heights,
        sheet_count: m,
        dropped,
        singular_points: singular_points.to_vec(),
        eps,
        radius,
    })
}

/// Height difference u = top - bottom and the normalized field
/// w = u / u(normalize_at), with w(normalize_at) = 1 exactly.
pub fn height_difference(
    bundle: &SheetBundle,
    normalize_at: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if bundle.sheet_count < 2 {
        return Err(Error::TooFewSheets(bundle.sheet_count));
    }
    let top = &bundle.heights[bundle.sheet_count - 1];
    let bottom = &bundle.heights[0];
    let u: Vec<f64> = top.iter().zip(bottom).map(|(a, b)| a - b).collect();
    let k = bundle
        .mask
        .iter()
        .position(|&v| v == normalize_at)
        .ok_or_else(|| Error::InvalidParameter("normalization vertex not in mask".into()))?;
    let u0 = u[k];
    if u0 <= 0.0 {
        return Err(Error::InvalidParameter(
            "normalization height must be positive".into(),
        ));
    }
    let w: Vec<f64> = u.iter().map(|x| x / u0).collect();
    Ok((u, w))
}

/// Local area-ratio multiplicity at a point: Theta(r) from the finest mesh
/// of a convergent family, m = nearest integer at the smallest radius,
/// plus the confidence |Theta - m|.
pub fn multiplicity_at(
    family: &[TriMesh],
    x: Vec3,
    radii: &[f64],
) -> Result<(i64, Vec<(f64, f64)>, f64)> {
    let finest = family.last().ok_or_else(|| {
        Error::InvalidParameter("empty mesh family".into())
    })?;
    let mut thetas = Vec::with_capacity(radii.len());
    for &r in radii {
        let theta = area_in_ball(finest, x, r) / (std::f64::consts::PI * r * r);
        thetas.push((r, theta));
    }
    let theta_min = thetas
        .iter()
        .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
        .unwrap()
        .1;
    let nearest = theta_min.round() as i64;
    let gap = (theta_min - nearest as f64).abs();
    if gap > 0.25 {
        return Err(Error::MultiplicityIllDefined { nearest, gap });
    }
    Ok((nearest, thetas, gap))
}
