use std::f64::consts::PI;

use crate::gradient::TransitionContext;
use crate::margin::{similarity_at, Angle, Family, LossSpec};
use crate::root::bisect;

use super::decreasing_branch_end;

/// Angle at which the positive-class probability of the single-sample loss
/// equals 1/2, i.e. the solution of `T(theta) = cos b + ln(C - 1) / s`.
///
/// Uses the closed-form inverse of each family. `None` means the level is
/// not attained on `[0, pi]`, e.g. CosFace with `m >= 1` under the default
/// context, where the gradient never switches off.
pub fn transition_angle(spec: &LossSpec, ctx: &TransitionContext) -> Option<Angle> {
    let y = ctx.transition_level();
    let m = spec.margin();
    let in_range = |v: f64| (-1.0..=1.0).contains(&v);
    let theta = match spec.family() {
        Family::Plain => in_range(y).then(|| y.acos()),
        Family::CosFace => in_range(y + m).then(|| (y + m).acos()),
        Family::ArcFace => in_range(y).then(|| y.acos() - m).filter(|t| *t >= 0.0),
        Family::ExpFace => in_range(y).then(|| PI * (y.acos() / PI).powf(1.0 / m)),
        Family::ExpFaceNaive => in_range(y)
            .then(|| y.acos().powf(1.0 / m))
            .filter(|t| *t <= PI),
        Family::SphereFace => {
            if y > 1.0 {
                None
            } else {
                // branch k spans T values [-1 - 2k, 1 - 2k]
                let k = ((1.0 - y) / 2.0).floor();
                let phase = (y + 2.0 * k).clamp(-1.0, 1.0).acos();
                Some((k * PI + phase) / m).filter(|t| *t <= PI)
            }
        }
    }?;
    Some(Angle::saturating(theta))
}

/// Same quantity as [`transition_angle`], solved by bisection on the
/// decreasing branch of `T` to full double precision.
pub fn transition_angle_by_bisection(spec: &LossSpec, ctx: &TransitionContext) -> Option<Angle> {
    let y = ctx.transition_level();
    let hi = decreasing_branch_end(spec);
    if y > similarity_at(spec, 0.0) || y < similarity_at(spec, hi) {
        return None;
    }
    bisect(|t| similarity_at(spec, t) - y, 0.0, hi, 0.0)
        .ok()
        .map(Angle::saturating)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    fn ctx() -> TransitionContext {
        TransitionContext::default()
    }

    #[test]
    fn plain_default_is_slightly_below_right_angle() {
        let t = transition_angle(&LossSpec::plain(64.0).unwrap(), &ctx()).unwrap().radians();
        // arccos(ln(10572) / 64), 40-digit oracle
        assert_abs_diff_eq!(t, 1.425_505_001_365_100_3, epsilon = 1e-12);
        assert!(t < FRAC_PI_2);
    }

    #[test]
    fn frozen_closed_forms() {
        let cases = [
            (Family::CosFace, 0.4, 0.994_668_758_011_008_5),
            (Family::ArcFace, 0.5, 0.925_505_001_365_100_3),
            (Family::ExpFace, 0.7, 1.015_993_944_221_246_6),
            (Family::ExpFace, 0.85, 1.239_959_127_810_342),
            (Family::SphereFace, 1.7, 0.838_532_353_744_176_7),
        ];
        for (family, m, expected) in cases {
            let spec = LossSpec::new(family, m, 64.0).unwrap();
            let closed = transition_angle(&spec, &ctx()).unwrap().radians();
            let bis = transition_angle_by_bisection(&spec, &ctx()).unwrap().radians();
            assert_abs_diff_eq!(closed, expected, epsilon = 1e-12);
            assert_abs_diff_eq!(bis, expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn saturated_cosface_has_no_transition() {
        for m in [1.0, 1.2, 1.5] {
            let spec = LossSpec::new(Family::CosFace, m, 64.0).unwrap();
            assert!(transition_angle(&spec, &ctx()).is_none());
            assert!(transition_angle_by_bisection(&spec, &ctx()).is_none());
        }
    }

    #[test]
    fn identity_margin_reproduces_plain() {
        let plain = transition_angle(&LossSpec::plain(64.0).unwrap(), &ctx()).unwrap();
        let exp = transition_angle(&LossSpec::new(Family::ExpFace, 1.0, 64.0).unwrap(), &ctx()).unwrap();
        assert!((plain.radians() - exp.radians()).abs() <= 1e-12);
    }
}
