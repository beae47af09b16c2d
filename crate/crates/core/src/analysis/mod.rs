//! Analytical views of the margin families: transition angles, similarity and
//! gradient curves, extrema structure, and the decision-boundary margin field.

mod boundary;
mod extrema;
mod sweep;
mod transition;

pub use boundary::{boundary_margin, boundary_margin_closed_form, margin_field, MarginFieldPoint};
pub use extrema::{analyze_extrema, ExtremaReport, PLATEAU_TOLERANCE};
pub use sweep::{sweep_gradient, sweep_similarity, CurveSample, GradientCurve};
pub use transition::{transition_angle, transition_angle_by_bisection};

use std::f64::consts::PI;

use crate::margin::{Family, LossSpec};

/// Upper end of the interval `[0, hi]` on which `T` is monotone decreasing.
pub fn decreasing_branch_end(spec: &LossSpec) -> f64 {
    match spec.family() {
        Family::ArcFace => PI - spec.margin(),
        Family::ExpFaceNaive => PI.powf(1.0 / spec.margin()).min(PI),
        _ => PI,
    }
}
