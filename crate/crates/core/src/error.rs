use thiserror::Error;

/// Errors surfaced by the numerical kernels.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Adaptive quadrature hit the recursion limit before reaching the
    /// requested tolerance; carries the offending subinterval.
    #[error("quadrature did not converge on [{a}, {b}] (estimate {estimate}, error {error})")]
    QuadratureNonConvergence {
        a: f64,
        b: f64,
        estimate: f64,
        error: f64,
    },

    /// A model evaluation produced NaN or infinity.
    #[error("non-finite evaluation of {what} at s = {s}")]
    NonFiniteEvaluation { what: &'static str, s: f64 },

    /// A model evaluation left its admissible domain (e.g. psi = 0 where
    /// a quotient by psi is required).
    #[error("domain error: {0}")]
    Domain(String),

    /// Fields or states defined on different meshes were combined.
    #[error("mesh mismatch: {0}")]
    MeshMismatch(String),

    /// Initial-data profile too narrow for the mesh.
    #[error("eta = {eta} is not resolvable on the mesh (requires eta > {min_eta}); refine the mesh")]
    UnresolvableEta { eta: f64, min_eta: f64 },

    /// The eta search hit the mesh-resolution bound before reaching the
    /// requested energy level.
    #[error(
        "resolution bound reached: smallest resolvable eta = {eta_min} has F = {f_at_min}, \
         above the target {f_target}"
    )]
    ResolutionBound {
        eta_min: f64,
        f_at_min: f64,
        f_target: f64,
    },

    /// Precondition violation of an operation.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A state stopped being finite mid-run; carries the first bad cell.
    #[error("non-finite state detected in {field} at cell {cell} (t = {t})")]
    BlowupSuspected {
        field: &'static str,
        cell: usize,
        t: f64,
    },

    /// Configuration file or argument errors, with field paths.
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
