//! Extinction-time and type-I-constant estimation from a trace.
//!
//! Under a type-I blowup max|H| ~ Lambda / sqrt(T - t), so 1/max|H|^2 is
//! linear in t; a least-squares line through the blowup tail yields both
//! the extinction estimate T_hat and Lambda_hat.

use super::trace::FlowTrace;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct ExtinctionFit {
    pub t_hat: f64,
    pub lambda_hat: f64,
    /// RMS residual of the linear fit of 1/max|H|^2 against t.
    pub residual: f64,
}

/// Fit the last 30% of the samples (at least 10).
pub fn estimate_extinction(trace: &FlowTrace) -> Result<ExtinctionFit> {
    let recs = &trace.records;
    if recs.len() < 10 {
        return Err(Error::NoBlowup(format!(
            "only {} samples, need at least 10",
            recs.len()
        )));
    }
    let start = (recs.len() as f64 * 0.7) as usize;
    let tail = &recs[start..];
    // The tail must show increasing max|H| (10-sample trend).
    let inc = tail.windows(2).filter(|w| w[1].max_abs_h > w[0].max_abs_h).count();
    if inc * 2 < tail.len().saturating_sub(1) {
        return Err(Error::NoBlowup(
            "max|H| tail is not increasing".into(),
        ));
    }
    let n = tail.len() as f64;
    let xs: Vec<f64> = tail.iter().map(|r| r.t).collect();
    let ys: Vec<f64> = tail
        .iter()
        .map(|r| 1.0 / (r.max_abs_h * r.max_abs_h))
        .collect();
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return Err(Error::NoBlowup("degenerate time samples".into()));
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    if slope >= 0.0 {
        return Err(Error::NoBlowup(format!(
            "1/max|H|^2 is not decreasing (slope {slope:.3e})"
        )));
    }
    let t_hat = -intercept / slope;
    let lambda_hat = (-1.0 / slope).sqrt();
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let e = y - (intercept + slope * x);
            e * e
        })
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(ExtinctionFit {
        t_hat,
        lambda_hat,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use super::super::trace::TraceRecord;
    use approx::assert_relative_eq;

    fn synthetic_sphere_trace(t_ext: f64, n: usize) -> FlowTrace {
        // max|H| = 2 / R(t) with R = sqrt(R0^2 - 4t), R0^2 = 4 T.
        let mut tr = FlowTrace::new();
        for k in 0..n {
            let t = t_ext * 0.95 * k as f64 / (n - 1) as f64;
            let r = (4.0 * t_ext - 4.0 * t).sqrt();
            tr.push(TraceRecord {
                t,
                max_abs_h: 2.0 / r,
                max_abs_a: 2.0_f64.sqrt() / r,
                area: 4.0 * std::f64::consts::PI * r * r,
                f: 0.0,
                type_i: 0.0,
                res_l2: 0.0,
                res_sup: 0.0,
                n_vertices: 0,
            });
        }
        tr
    }

    #[test]
    fn exact_sphere_trace_recovers_t_and_lambda() {
        let tr = synthetic_sphere_trace(0.25, 200);
        let fit = estimate_extinction(&tr).unwrap();
        assert_relative_eq!(fit.t_hat, 0.25, epsilon = 1e-6);
        assert_relative_eq!(fit.lambda_hat, 1.0, epsilon = 1e-6);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn constant_h_trace_is_no_blowup() {
        let mut tr = FlowTrace::new();
        for k in 0..30 {
            tr.push(TraceRecord {
                t: k as f64 * 0.01,
                max_abs_h: 1.0,
                max_abs_a: 1.0,
                area: 1.0,
                f: 0.0,
                type_i: 0.0,
                res_l2: 0.0,
                res_sup: 0.0,
                n_vertices: 0,
            });
        }
        assert!(matches!(
            estimate_extinction(&tr),
            Err(Error::NoBlowup(_))
        ));
    }
}
