use thiserror::Error;

/// Errors surfaced by the simulation library.
///
/// Times and distances are reported as `f64` regardless of the scalar type
/// the simulation runs in.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("singular evaluation: Biot-Savart kernel at the origin")]
    SingularEvaluation,

    #[error("evaluation at vortex {index}")]
    EvaluationAtVortex { index: usize },

    #[error("vortex collision at t = {t}: |h_{i} - h_{j}| = {dist}")]
    VortexCollision {
        t: f64,
        i: usize,
        j: usize,
        dist: f64,
    },

    #[error("coincident vortices {i} and {j}")]
    CoincidentVortices { i: usize, j: usize },

    #[error("stiffness limit: substep cap exceeded at t = {t}")]
    StiffnessLimit { t: f64 },

    #[error("ambiguous initial vorticity: overlapping patches with conflicting levels")]
    AmbiguousInitialVorticity,

    #[error("picard iterate {iterate} collided at t = {t}")]
    PicardCollision { iterate: usize, t: f64 },

    #[error("time grid mismatch between iterates")]
    GridMismatch,

    #[error("mismatched vortex counts: {left} vs {right}")]
    MismatchedVortexCounts { left: usize, right: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite value encountered in {what} at t = {t}")]
    NonFinite { what: &'static str, t: f64 },
}

pub type Result<T> = std::result::Result<T, SimError>;
