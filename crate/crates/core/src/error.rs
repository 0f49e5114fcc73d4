use thiserror::Error;

/// Failure modes of the solvers, diagnostics and harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("nu = {nu} is not positive; the model constants are undefined")]
    NuNonpositive { nu: f64 },
    #[error("nu_t = {nu_t} is not positive; the decoupled evolution is ill-posed")]
    NutNonpositive { nu_t: f64 },
    #[error("non-vanishing depth condition violated (min h1 = {h1_min}, min h2 = {h2_min})")]
    H1Violated { h1_min: f64, h2_min: f64 },
    #[error("ellipticity condition violated (min q1 = {q1_min}, min q2 = {q2_min})")]
    H2Violated { q1_min: f64, q2_min: f64 },
    #[error("elliptic solve did not converge in {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("Helmholtz symbol 1 + c k^2 vanishes or is negative (c = {c}, k = {k})")]
    SingularSymbol { c: f64, k: f64 },
    #[error("condition {condition} lost at t = {t}")]
    ConditionLost { t: f64, condition: String },
    #[error("X^s norm {norm:e} exceeded ceiling {ceiling:e} at t = {t}")]
    Blowup { t: f64, norm: f64, ceiling: f64 },
    #[error("state has zero norm")]
    ZeroState,
    #[error("degenerate data: {0}")]
    Degenerate(String),
    #[error("trajectories are incompatible: {0}")]
    Mismatch(String),
    #[error("invalid config{}: {message}", location(*.line, .key))]
    ConfigInvalid {
        line: Option<usize>,
        key: Option<String>,
        message: String,
    },
    #[error("parameters outside the Camassa-Holm regime: {0}")]
    RegimeViolation(String),
    #[error("i/o error: {0}")]
    Io(String),
}

fn location(line: Option<usize>, key: &Option<String>) -> String {
    match (line, key) {
        (Some(l), Some(k)) => format!(" (line {l}, key `{k}`)"),
        (Some(l), None) => format!(" (line {l})"),
        (None, Some(k)) => format!(" (key `{k}`)"),
        (None, None) => String::new(),
    }
}

impl Error {
    pub(crate) fn config(line: Option<usize>, key: Option<&str>, message: impl Into<String>) -> Self {
        Error::ConfigInvalid {
            line,
            key: key.map(str::to_owned),
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
