//! Angular displacement of the binary decision boundary.
//!
//! For two classes, a sample at angle `theta_pos` to its own center and
//! `theta_neg` to the other is on the decision boundary when
//! `T(theta_pos) = cos(theta_neg)`. Without a margin the boundary is the
//! diagonal `theta_pos = theta_neg`; the margin at a diagonal point is how
//! far the boundary has moved away from it.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::margin::{similarity_at, Angle, Family, LossSpec};
use crate::root::bisect;

use super::decreasing_branch_end;

/// Bisection tolerance for the boundary solve.
pub const BOUNDARY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginFieldPoint {
    pub theta_neg: Angle,
    /// Positive-center angle on the boundary; `0` when `pinned`.
    pub theta_pos_boundary: Angle,
    pub angular_margin: f64,
    /// `cos(theta_neg) > T(0)`: no positive angle reaches the boundary.
    pub pinned: bool,
}

/// Margin of the decision boundary at the diagonal point `(theta_neg, theta_neg)`.
///
/// Normally the displacement is measured along the positive axis,
/// `theta_neg - theta_pos` with `T(theta_pos) = cos(theta_neg)`. When even
/// `theta_pos = 0` cannot reach the boundary, the point is `pinned` and the
/// displacement is measured along the negative axis instead:
/// `arccos(T(theta_neg)) - theta_neg`. If that also saturates the margin is
/// `theta_neg` itself.
///
/// Returns `None` when `cos(theta_neg)` lies below the range of `T` on its
/// decreasing branch (no boundary on that side).
pub fn boundary_margin(spec: &LossSpec, theta_neg: Angle) -> Option<MarginFieldPoint> {
    let tn = theta_neg.radians();
    let target = tn.cos();
    if target > similarity_at(spec, 0.0) {
        let level = similarity_at(spec, tn);
        let angular_margin = if level >= -1.0 { level.acos() - tn } else { tn };
        return Some(MarginFieldPoint {
            theta_neg,
            theta_pos_boundary: Angle::ZERO,
            angular_margin,
            pinned: true,
        });
    }
    let hi = decreasing_branch_end(spec);
    if target < similarity_at(spec, hi) {
        return None;
    }
    let theta_pos = bisect(|t| similarity_at(spec, t) - target, 0.0, hi, BOUNDARY_TOLERANCE).ok()?;
    Some(MarginFieldPoint {
        theta_neg,
        theta_pos_boundary: Angle::saturating(theta_pos),
        angular_margin: tn - theta_pos,
        pinned: false,
    })
}

/// Closed-form boundary angle `theta_pos` for the families that have one.
/// `None` for pinned or unreachable points and for Plain/naive ExpFace.
pub fn boundary_margin_closed_form(spec: &LossSpec, theta_neg: Angle) -> Option<f64> {
    let tn = theta_neg.radians();
    let m = spec.margin();
    match spec.family() {
        Family::SphereFace => Some(tn / m),
        Family::CosFace => {
            let arg = tn.cos() + m;
            (arg <= 1.0).then(|| arg.acos())
        }
        Family::ArcFace => (tn >= m).then_some(tn - m),
        Family::ExpFace => Some(PI * (tn / PI).powf(1.0 / m)),
        Family::Plain => Some(tn),
        Family::ExpFaceNaive => None,
    }
}

/// [`boundary_margin`] on `grid_size` equally spaced interior angles
/// `pi k / (grid_size + 1)`. Unreachable points are omitted.
pub fn margin_field(spec: &LossSpec, grid_size: usize) -> Result<Vec<MarginFieldPoint>> {
    if grid_size < 2 {
        return Err(Error::Precondition(format!("grid_size must be >= 2, got {grid_size}")));
    }
    Ok((1..=grid_size)
        .filter_map(|k| {
            let t = Angle::saturating(PI * k as f64 / (grid_size + 1) as f64);
            boundary_margin(spec, t)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    fn at(spec: &LossSpec, t: f64) -> MarginFieldPoint {
        boundary_margin(spec, Angle::new(t).unwrap()).unwrap()
    }

    #[test]
    fn arcface_margin_is_constant() {
        let spec = LossSpec::new(Family::ArcFace, 0.5, 64.0).unwrap();
        assert_abs_diff_eq!(at(&spec, 1.0).angular_margin, 0.5, epsilon = 1e-9);
        // below m the boundary is pinned and measured along the other axis
        let p = at(&spec, 0.3);
        assert!(p.pinned);
        assert_abs_diff_eq!(p.angular_margin, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn sphereface_margin_is_linear() {
        let spec = LossSpec::new(Family::SphereFace, 1.7, 32.0).unwrap();
        // 1 - 1/1.7
        assert_abs_diff_eq!(at(&spec, 1.0).angular_margin, 0.411_764_705_882_352_9, epsilon = 1e-9);
    }

    #[test]
    fn cosface_reference_values() {
        let spec = LossSpec::new(Family::CosFace, 0.4, 64.0).unwrap();
        // pi/2 - arccos(0.4) and pi - arccos(-0.6), 40-digit oracle
        assert_abs_diff_eq!(at(&spec, FRAC_PI_2).angular_margin, 0.411_516_846_067_488, epsilon = 1e-9);
        assert_abs_diff_eq!(at(&spec, PI).angular_margin, 0.927_295_218_001_612_2, epsilon = 1e-9);
    }

    #[test]
    fn expface_margin_vanishes_at_both_ends() {
        let spec = LossSpec::new(Family::ExpFace, 0.7, 64.0).unwrap();
        assert!(at(&spec, 1e-6).angular_margin.abs() < 1e-5);
        assert!(at(&spec, PI - 1e-6).angular_margin.abs() < 1e-5);
        assert!(at(&spec, FRAC_PI_2).angular_margin > 0.1);
    }

    #[test]
    fn closed_forms_agree_with_bisection() {
        let specs = [
            LossSpec::new(Family::SphereFace, 1.7, 32.0).unwrap(),
            LossSpec::new(Family::CosFace, 0.4, 64.0).unwrap(),
            LossSpec::new(Family::ArcFace, 0.5, 64.0).unwrap(),
            LossSpec::new(Family::ExpFace, 0.7, 64.0).unwrap(),
            LossSpec::new(Family::ExpFace, 3.0, 64.0).unwrap(),
        ];
        for spec in &specs {
            for p in margin_field(spec, 200).unwrap() {
                if p.pinned {
                    continue;
                }
                let closed = boundary_margin_closed_form(spec, p.theta_neg).unwrap();
                assert_abs_diff_eq!(p.theta_pos_boundary.radians(), closed, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn naive_expface_boundary_can_be_unreachable() {
        let spec = LossSpec::new(Family::ExpFaceNaive, 0.7, 64.0).unwrap();
        // T(pi) = cos(pi^0.7) > -1
        assert!(boundary_margin(&spec, Angle::new(PI - 0.01).unwrap()).is_none());
        assert!(margin_field(&spec, 100).unwrap().len() < 100);
    }
}
