use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("parse error at byte {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("non-finite value {value} at (t = {t}, x = {x})")]
    Eval { t: f64, x: f64, value: f64 },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("diffusion must be positive, found {value} at node ({j}, {k})")]
    NonElliptic { j: usize, k: usize, value: f64 },

    #[error("linear solve failed: {0}")]
    SingularSolve(String),

    #[error("solution exceeded the a-priori bound {bound} (value {value} at t = {t})")]
    Blowup { bound: f64, value: f64, t: f64 },

    #[error("no convergence after {iterations} iterations (last change {last_change:e})")]
    NoConvergence { iterations: usize, last_change: f64 },

    #[error("principal eigenvalue {lambda} is not positive: no spreading regime")]
    NotMonostable { lambda: f64 },

    #[error("lambda(mu)/mu has no interior minimum on [{lo}, {hi}] (slopes {slope_lo:e}, {slope_hi:e})")]
    NoInteriorMinimum {
        lo: f64,
        hi: f64,
        slope_lo: f64,
        slope_hi: f64,
    },

    #[error("Neumann series is not contractive (ratio {ratio}); D1 fails")]
    D1Violated { ratio: f64 },

    #[error("coupling vanishes identically; the second eigenfunction component is zero")]
    DegenerateCoupling,

    #[error("shift c*omega = {shift} exceeds a quarter of the half-width {half_width}")]
    ShiftOutOfRange { shift: f64, half_width: f64 },

    #[error("classification is not monotone in c: {0}")]
    InconsistentClassification(String),

    #[error("front reached x = {position} within the boundary buffer at t = {t}")]
    DomainTooSmall { position: f64, t: f64 },

    #[error("no threshold crossing in the state")]
    NoCrossing,

    #[error("only {count} points remain for the regression (need {needed})")]
    TooFewPoints { count: usize, needed: usize },

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    /// Short machine-readable name used in reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "ParseError",
            Error::Eval { .. } => "EvalError",
            Error::Invalid(_) => "InvalidInput",
            Error::NonElliptic { .. } => "NonEllipticError",
            Error::SingularSolve(_) => "SingularSolve",
            Error::Blowup { .. } => "BlowupError",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::NotMonostable { .. } => "NotMonostable",
            Error::NoInteriorMinimum { .. } => "NoInteriorMinimum",
            Error::D1Violated { .. } => "D1Violated",
            Error::DegenerateCoupling => "DegenerateCoupling",
            Error::ShiftOutOfRange { .. } => "ShiftOutOfRange",
            Error::InconsistentClassification(_) => "InconsistentClassification",
            Error::DomainTooSmall { .. } => "DomainTooSmall",
            Error::NoCrossing => "NoCrossing",
            Error::TooFewPoints { .. } => "TooFewPoints",
            Error::Io(_) => "IoError",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
