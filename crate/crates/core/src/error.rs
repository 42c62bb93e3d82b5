use thiserror::Error;

/// Error type shared by every module of the toolkit.
#[derive(Error, Debug)]
pub enum GsError {
    #[error("parse error at {path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("mesh topology error: {0}")]
    Topology(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("point outside the computational domain")]
    OutsideDomain,

    #[error("singular or degenerate element: {0}")]
    SingularElement(String),

    #[error("factorization failure: {0}")]
    Factorization(String),

    #[error("plasma domain is empty")]
    EmptyPlasma,

    #[error("flux field has no interior maximum")]
    NoInteriorMaximum,

    #[error("degenerate flux normalization: psi_axis == psi_b")]
    DegenerateFlux,

    #[error("open contour at level {level}: level line exits the domain")]
    OpenContour { level: f64 },

    #[error("unphysical profile: {0}")]
    UnphysicalProfile(String),

    #[error("ill-posed least-squares problem: {0}")]
    IllPosed(String),

    #[error("measurement geometry error: {0}")]
    Measurement(String),

    #[error("pitch-angle response denominator vanishes at point {index}")]
    MseDenominator { index: usize },

    #[error("iteration diverged after {iterations} iterations (residual grew 3 times in a row)")]
    Divergence { iterations: usize },

    #[error("no convergence after {iterations} iterations (last relative change {last_change:.3e})")]
    NonConvergence { iterations: usize, last_change: f64 },

    #[error("results differ beyond tolerance: {0}")]
    Mismatch(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, GsError>;

impl GsError {
    /// Process exit code bucket for the CLI: 2 config, 3 numeric, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            GsError::Config(_) => 2,
            GsError::Io(_) | GsError::Parse { .. } => 4,
            _ => 3,
        }
    }
}
