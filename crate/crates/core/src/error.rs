use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A loss, context, or toy specification violates its invariants.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// An input lies outside the domain of the operation (zero-norm vectors,
    /// angles outside `[0, pi]`, mismatched dimensions).
    #[error("domain error: {0}")]
    Domain(String),

    /// The piecewise SphereFace similarity has no derivative at its breakpoints.
    #[error("similarity is not differentiable at theta = {theta} (breakpoint k*pi/m)")]
    NonDifferentiable { theta: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    Diverged { epoch: usize, loss: f64 },
}
