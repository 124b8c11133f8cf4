//! Per-step diagnostics series and its CSV schema.

use super::extinction;

/// One trace record. Column order in the CSV is fixed:
/// t, maxH, maxA, area, F, typeI, resL2, resSup, nverts.
#[derive(Debug, Clone, Copy)]
pub struct TraceRecord {
    pub t: f64,
    pub max_abs_h: f64,
    pub max_abs_a: f64,
    pub area: f64,
    pub f: f64,
    /// sqrt(T_hat - t) * max|H| with the running extinction estimate; zero
    /// until a fit is available.
    pub type_i: f64,
    pub res_l2: f64,
    pub res_sup: f64,
    pub n_vertices: usize,
}

#[derive(Debug, Clone, Default)]
pub struct FlowTrace {
    pub records: Vec<TraceRecord>,
}

impl FlowTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, rec: TraceRecord) {
        if let Some(last) = self.records.last() {
            assert!(rec.t > last.t || self.records.is_empty() || rec.t >= last.t);
        }
        self.records.push(rec);
    }

    /// Fill the type-I column from the extinction fit once the whole series
    /// is known.
    pub fn finalize(&mut self) {
        if let Ok(fit) = extinction::estimate_extinction(self) {
            for rec in &mut self.records {
                let dt = fit.t_hat - rec.t;
                rec.type_i = if dt > 0.0 {
                    dt.sqrt() * rec.max_abs_h
                } else {
                    0.0
                };
            }
        }
    }

    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,maxH,maxA,area,F,typeI,resL2,resSup,nverts\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.t,
                r.max_abs_h,
                r.max_abs_a,
                r.area,
                r.f,
                r.type_i,
                r.res_l2,
                r.res_sup,
                r.n_vertices
            ));
        }
        out
    }
}
