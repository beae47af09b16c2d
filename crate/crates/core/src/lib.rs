//! Exponential angular-margin softmax loss (ExpFace) alongside SphereFace,
//! CosFace and ArcFace, with tools for analysing their similarity curves,
//! gradient curves, transition angles and decision-boundary margins, plus a
//! toy noisy-label training simulator.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod gradient;
pub mod margin;
pub mod noise;
pub mod root;

pub use error::{Error, Result};
pub use gradient::{backward, d_loss, d_similarity, finite_diff_check, scalar_loss, TransitionContext};
pub use margin::{angle_between, batch_loss, similarity, Angle, BatchInput, Family, LossSpec};
