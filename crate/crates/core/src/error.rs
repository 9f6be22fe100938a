use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("equilibrium is not an index-1 saddle")]
    NotASaddle,

    #[error("symmetry {kind} does not apply to a {dof}-DoF system")]
    Symmetry { kind: &'static str, dof: usize },

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("step budget of {0} steps exhausted")]
    StepBudget(usize),

    #[error("no event crossing before t = {0}")]
    NoEvent(f64),

    #[error("differential correction did not converge in {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("differential correction denominator vanished ({0:e})")]
    SingularCorrection(f64),

    #[error("family fold: no energy bracket for {target} within {steps} continuation steps")]
    FamilyFold { target: f64, steps: usize },

    #[error("monodromy spectrum is not hyperbolic")]
    NotHyperbolic,

    #[error("slice has no on-shell nodes at e = {0}")]
    EmptySlice(f64),

    #[error("grid node ({i}, {j}): {source}")]
    GridNode {
        i: usize,
        j: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("no slice crossings found")]
    NoCrossings,

    #[error("malformed grid file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Whether the error stems from bad input rather than a numerical breakdown.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Dimension { .. }
                | Error::InvalidParameter(_)
                | Error::NotASaddle
                | Error::Symmetry { .. }
                | Error::EmptySlice(_)
        )
    }
}
