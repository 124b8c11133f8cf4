//! Acceptance-suite runner (placeholder while modules land).

#[derive(Debug, Clone)]
pub struct Criterion {
    pub id: usize,
    pub name: String,
    pub expected: String,
    pub measured: String,
    pub tolerance: String,
    pub pass: bool,
}
