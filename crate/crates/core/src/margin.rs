//! Margin-embedded similarity functions and the batch margin-softmax loss.
//!
//! Every margin family replaces the positive-class similarity `cos(theta)` by
//! a penalized similarity `T(theta)`:
//!
//! | family        | `T(theta)`                                  |
//! |---------------|---------------------------------------------|
//! | Plain         | `cos(theta)`                                |
//! | SphereFace    | `(-1)^k cos(m theta) - 2k`, `k = floor(m theta / pi)` |
//! | CosFace       | `cos(theta) - m`                            |
//! | ArcFace       | `cos(theta + m)`                            |
//! | ExpFaceNaive  | `cos(theta^m)`                              |
//! | ExpFace       | `cos(pi (theta / pi)^m)`                    |
//!
//! The batch loss normalizes features and class centers, scales every logit
//! by `s`, and averages the softmax cross-entropy over the batch. Biases are
//! identically zero.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Angles fed into a margin function inside the loss are kept in
/// `[ANGLE_EPS, pi - ANGLE_EPS]`; the ExpFace derivative diverges at 0 for `m < 1`.
pub const ANGLE_EPS: f64 = 1e-7;

/// How far outside `[0, pi]` an angle may be before construction fails.
pub const ANGLE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Plain,
    SphereFace,
    CosFace,
    ArcFace,
    ExpFaceNaive,
    ExpFace,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::Plain,
        Family::SphereFace,
        Family::CosFace,
        Family::ArcFace,
        Family::ExpFaceNaive,
        Family::ExpFace,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Plain => "plain",
            Family::SphereFace => "sphereface",
            Family::CosFace => "cosface",
            Family::ArcFace => "arcface",
            Family::ExpFaceNaive => "expface-naive",
            Family::ExpFace => "expface",
        }
    }

    /// Margin and scale used for the full-scale face-recognition runs.
    pub fn default_margin_and_scale(self) -> (f64, f64) {
        match self {
            Family::Plain => (0.0, 64.0),
            Family::SphereFace => (1.7, 32.0),
            Family::CosFace => (0.4, 64.0),
            Family::ArcFace => (0.5, 64.0),
            Family::ExpFaceNaive | Family::ExpFace => (0.7, 64.0),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        Family::ALL
            .into_iter()
            .find(|f| f.name() == key)
            .ok_or_else(|| Error::Config(format!("unknown loss family '{s}'")))
    }
}

/// Which margin family, its margin and the logit scale `s`.
///
/// Constructed only through [`LossSpec::new`], so every value in circulation
/// satisfies the family's margin range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossSpec {
    family: Family,
    margin: f64,
    scale: f64,
}

impl LossSpec {
    pub fn new(family: Family, margin: f64, scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::Config(format!("scale must be finite and > 0, got {scale}")));
        }
        let ok = match family {
            Family::Plain => true,
            Family::SphereFace => margin.is_finite() && margin >= 1.0,
            Family::CosFace => margin.is_finite() && margin >= 0.0,
            Family::ArcFace => (0.0..PI).contains(&margin),
            Family::ExpFaceNaive | Family::ExpFace => (0.3..=10.0).contains(&margin),
        };
        if !ok {
            let range = match family {
                Family::SphereFace => "[1, inf)",
                Family::CosFace => "[0, inf)",
                Family::ArcFace => "[0, pi)",
                _ => "[0.3, 10]",
            };
            return Err(Error::Config(format!(
                "{family} margin must lie in {range}, got {margin}"
            )));
        }
        Ok(Self { family, margin, scale })
    }

    /// The family's customary margin and scale.
    pub fn with_defaults(family: Family) -> Self {
        let (margin, scale) = family.default_margin_and_scale();
        Self { family, margin, scale }
    }

    pub fn plain(scale: f64) -> Result<Self> {
        Self::new(Family::Plain, 0.0, scale)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Same family and margin, different scale.
    pub fn with_scale(&self, scale: f64) -> Result<Self> {
        Self::new(self.family, self.margin, scale)
    }

    /// True when the margin pushes `T` at or below `cos` everywhere.
    pub fn is_penalizing(&self) -> bool {
        match self.family {
            Family::Plain | Family::ExpFaceNaive => false,
            Family::SphereFace => self.margin > 1.0,
            Family::CosFace | Family::ArcFace => self.margin > 0.0,
            Family::ExpFace => self.margin < 1.0,
        }
    }

    /// Breakpoints `k pi / m` of the SphereFace piecewise form inside `(0, pi)`.
    pub fn breakpoints(&self) -> Vec<f64> {
        if self.family != Family::SphereFace {
            return Vec::new();
        }
        (1..)
            .map(|k| k as f64 * PI / self.margin)
            .take_while(|&b| b < PI)
            .collect()
    }
}

/// An angle in radians, always within `[0, pi]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Angle(f64);

impl Angle {
    pub const ZERO: Angle = Angle(0.0);
    pub const RIGHT: Angle = Angle(std::f64::consts::FRAC_PI_2);
    pub const STRAIGHT: Angle = Angle(PI);

    /// Values within `ANGLE_TOLERANCE` of `[0, pi]` are clamped onto it.
    pub fn new(radians: f64) -> Result<Self> {
        if !(-ANGLE_TOLERANCE..=PI + ANGLE_TOLERANCE).contains(&radians) {
            return Err(Error::Domain(format!("angle {radians} lies outside [0, pi]")));
        }
        Ok(Angle(radians.clamp(0.0, PI)))
    }

    /// Clamps any finite value onto `[0, pi]`.
    pub fn saturating(radians: f64) -> Self {
        Angle(radians.clamp(0.0, PI))
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    /// The angle pulled into `[ANGLE_EPS, pi - ANGLE_EPS]`.
    pub fn interior(self) -> f64 {
        self.0.clamp(ANGLE_EPS, PI - ANGLE_EPS)
    }
}

impl From<Angle> for f64 {
    fn from(a: Angle) -> f64 {
        a.0
    }
}

/// `T(theta)` for the given margin family.
pub fn similarity(spec: &LossSpec, theta: Angle) -> f64 {
    similarity_at(spec, theta.0)
}

/// `T` at a raw angle assumed to lie in `[0, pi]`.
pub(crate) fn similarity_at(spec: &LossSpec, theta: f64) -> f64 {
    let m = spec.margin;
    match spec.family {
        Family::Plain => theta.cos(),
        Family::SphereFace => {
            let k = (m * theta / PI).floor();
            let sign = if k as i64 % 2 == 0 { 1.0 } else { -1.0 };
            sign * (m * theta).cos() - 2.0 * k
        }
        Family::CosFace => theta.cos() - m,
        Family::ArcFace => (theta + m).cos(),
        Family::ExpFaceNaive => theta.powf(m).cos(),
        Family::ExpFace => (PI * (theta / PI).powf(m)).cos(),
    }
}

/// Angle between two vectors after unit normalization.
pub fn angle_between(u: &[f64], v: &[f64]) -> Result<Angle> {
    if u.len() != v.len() {
        return Err(Error::Domain(format!(
            "vector lengths differ: {} vs {}",
            u.len(),
            v.len()
        )));
    }
    let nu = norm(u);
    let nv = norm(v);
    if !(nu > 0.0 && nv > 0.0) {
        return Err(Error::Domain("angle_between: zero-norm input".into()));
    }
    let cos = (dot(u, v) / (nu * nv)).clamp(-1.0, 1.0);
    Ok(Angle(cos.acos()))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Features `x_i`, class centers `W_j` and labels `y_i` for one batch.
///
/// Centers are stored one per row (`centers[j]` is `W_j`).
#[derive(Debug, Clone, PartialEq)]
pub struct BatchInput {
    features: Vec<Vec<f64>>,
    centers: Vec<Vec<f64>>,
    labels: Vec<usize>,
}

impl BatchInput {
    pub fn new(features: Vec<Vec<f64>>, centers: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::Domain("batch needs at least one feature row".into()));
        }
        if centers.len() < 2 {
            return Err(Error::Domain(format!(
                "need at least 2 class centers, got {}",
                centers.len()
            )));
        }
        let d = features[0].len();
        if d < 2 {
            return Err(Error::Domain(format!("feature dimension must be >= 2, got {d}")));
        }
        if labels.len() != features.len() {
            return Err(Error::Domain(format!(
                "{} labels for {} feature rows",
                labels.len(),
                features.len()
            )));
        }
        for (i, x) in features.iter().enumerate() {
            if x.len() != d {
                return Err(Error::Domain(format!("feature row {i} has dimension {}, expected {d}", x.len())));
            }
            let n = norm(x);
            if !(n > 0.0 && n.is_finite()) {
                return Err(Error::Domain(format!("feature row {i} has zero or non-finite norm")));
            }
        }
        for (j, w) in centers.iter().enumerate() {
            if w.len() != d {
                return Err(Error::Domain(format!("center column {j} has dimension {}, expected {d}", w.len())));
            }
            let n = norm(w);
            if !(n > 0.0 && n.is_finite()) {
                return Err(Error::Domain(format!("center column {j} has zero or non-finite norm")));
            }
        }
        if let Some((i, &y)) = labels.iter().enumerate().find(|(_, &y)| y >= centers.len()) {
            return Err(Error::Domain(format!(
                "label {y} of row {i} is out of range for {} classes",
                centers.len()
            )));
        }
        Ok(Self { features, centers, labels })
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn dim(&self) -> usize {
        self.features[0].len()
    }

    pub fn class_count(&self) -> usize {
        self.centers.len()
    }

    /// `cos(theta_ji)` for every center `j`, with the dot product clamped to `[-1, 1]`.
    pub(crate) fn cosines(&self, i: usize, unit_centers: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>, f64) {
        let x = &self.features[i];
        let n = norm(x);
        let unit: Vec<f64> = x.iter().map(|v| v / n).collect();
        let cos = unit_centers
            .iter()
            .map(|w| dot(&unit, w).clamp(-1.0, 1.0))
            .collect();
        (cos, unit, n)
    }

    pub(crate) fn unit_centers(&self) -> (Vec<Vec<f64>>, Vec<f64>) {
        let norms: Vec<f64> = self.centers.iter().map(|w| norm(w)).collect();
        let units = self
            .centers
            .iter()
            .zip(&norms)
            .map(|(w, n)| w.iter().map(|v| v / n).collect())
            .collect();
        (units, norms)
    }
}

/// Scaled logits of one sample: `s T(theta_y)` at the label, `s cos(theta_j)` elsewhere.
pub(crate) fn sample_logits(spec: &LossSpec, cosines: &[f64], label: usize) -> Vec<f64> {
    let s = spec.scale;
    cosines
        .iter()
        .enumerate()
        .map(|(j, &c)| {
            if j == label {
                let theta = c.acos().clamp(ANGLE_EPS, PI - ANGLE_EPS);
                s * similarity_at(spec, theta)
            } else {
                s * c
            }
        })
        .collect()
}

/// `ln(sum_j exp(z_j))` with max subtraction.
pub fn log_sum_exp(logits: &[f64]) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln()
}

/// `-ln softmax(logits)[target]`, max-shifted; uses `ln_1p` when the target
/// holds the largest logit so tiny losses keep their precision.
pub fn cross_entropy(logits: &[f64], target: usize) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let rest: f64 = logits
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != target)
        .map(|(_, z)| (z - max).exp())
        .sum();
    let own = logits[target];
    if own == max {
        rest.ln_1p()
    } else {
        (max - own) + ((own - max).exp() + rest).ln()
    }
}

/// Mean margin-softmax cross-entropy over the batch.
pub fn batch_loss(input: &BatchInput, spec: &LossSpec) -> f64 {
    let (units, _) = input.unit_centers();
    let total: f64 = (0..input.features.len())
        .map(|i| {
            let (cos, _, _) = input.cosines(i, &units);
            let y = input.labels[i];
            cross_entropy(&sample_logits(spec, &cos, y), y)
        })
        .sum();
    total / input.features.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    fn spec(family: Family, m: f64) -> LossSpec {
        LossSpec::new(family, m, 64.0).unwrap()
    }

    #[test]
    fn margin_ranges_are_enforced() {
        assert!(LossSpec::new(Family::SphereFace, 0.9, 32.0).is_err());
        assert!(LossSpec::new(Family::CosFace, -0.1, 64.0).is_err());
        assert!(LossSpec::new(Family::ArcFace, PI, 64.0).is_err());
        assert!(LossSpec::new(Family::ExpFace, 0.29, 64.0).is_err());
        assert!(LossSpec::new(Family::ExpFace, 10.01, 64.0).is_err());
        assert!(LossSpec::new(Family::ExpFace, 10.0, 64.0).is_ok());
        assert!(LossSpec::new(Family::Plain, -5.0, 64.0).is_ok());
        assert!(LossSpec::new(Family::CosFace, 0.4, 0.0).is_err());
        assert!(LossSpec::new(Family::CosFace, f64::NAN, 64.0).is_err());
    }

    #[test]
    fn family_names_parse_back() {
        for f in Family::ALL {
            assert_eq!(f.name().parse::<Family>().unwrap(), f);
        }
        assert_eq!("ExpFace_Naive".parse::<Family>().unwrap(), Family::ExpFaceNaive);
        assert!("sphere".parse::<Family>().is_err());
    }

    #[test]
    fn angle_construction_clamps_within_tolerance() {
        assert_eq!(Angle::new(-5e-10).unwrap().radians(), 0.0);
        assert_eq!(Angle::new(PI + 5e-10).unwrap().radians(), PI);
        assert!(Angle::new(-2e-9).is_err());
        assert!(Angle::new(PI + 2e-9).is_err());
        assert!(Angle::new(f64::NAN).is_err());
    }

    #[test]
    fn cosface_shifts_down() {
        let t = similarity(&spec(Family::CosFace, 0.4), Angle::new(PI / 3.0).unwrap());
        assert_abs_diff_eq!(t, 0.1, epsilon = 1e-15);
    }

    #[test]
    fn expface_known_values() {
        let s = spec(Family::ExpFace, 0.7);
        // cos(pi * 0.5^0.7), evaluated at 40 digits
        let t = similarity(&s, Angle::RIGHT);
        assert_abs_diff_eq!(t, -0.355_155_863_613_013_4, epsilon = 1e-14);
        for m in [0.3, 0.5, 0.7, 1.0, 2.0, 5.0, 10.0] {
            let s = spec(Family::ExpFace, m);
            assert_eq!(similarity(&s, Angle::ZERO), 1.0);
            assert_abs_diff_eq!(similarity(&s, Angle::STRAIGHT), -1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn sphereface_second_branch() {
        let s = LossSpec::new(Family::SphereFace, 1.7, 32.0).unwrap();
        let t = similarity(&s, Angle::new(2.0).unwrap());
        // -cos(3.4) - 2 at 40 digits
        assert_abs_diff_eq!(t, -1.033_201_807_420_539, epsilon = 1e-14);
    }

    #[test]
    fn sphereface_is_continuous_at_breakpoints() {
        for m in [1.5, 1.7, 2.0, 2.3, 3.0, 4.5] {
            let s = LossSpec::new(Family::SphereFace, m, 32.0).unwrap();
            for b in s.breakpoints() {
                let left = similarity_at(&s, b - 1e-12);
                let right = similarity_at(&s, b + 1e-12);
                assert!((left - right).abs() < 1e-9, "m={m} b={b}: {left} vs {right}");
            }
        }
    }

    #[test]
    fn angle_between_basics() {
        let u = [0.3, -1.2, 2.0];
        let neg: Vec<f64> = u.iter().map(|v| -v).collect();
        assert_eq!(angle_between(&u, &u).unwrap().radians(), 0.0);
        assert_abs_diff_eq!(angle_between(&u, &neg).unwrap().radians(), PI, epsilon = 1e-15);
        assert_abs_diff_eq!(
            angle_between(&[1.0, 0.0], &[0.0, 1.0]).unwrap().radians(),
            FRAC_PI_2,
            epsilon = 1e-15
        );
        assert!(angle_between(&[0.0, 0.0], &[1.0, 0.0]).is_err());
        assert!(angle_between(&[1.0, 0.0, 0.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn batch_input_names_offending_rows() {
        let err = BatchInput::new(
            vec![vec![1.0, 0.0], vec![0.0, 0.0]],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![0, 1],
        )
        .unwrap_err();
        assert!(err.to_string().contains("feature row 1"), "{err}");
        let err = BatchInput::new(
            vec![vec![1.0, 0.0]],
            vec![vec![1.0, 0.0], vec![0.0, 0.0]],
            vec![0],
        )
        .unwrap_err();
        assert!(err.to_string().contains("center column 1"), "{err}");
        assert!(BatchInput::new(vec![vec![1.0, 0.0]], vec![vec![1.0, 0.0]], vec![0]).is_err());
        assert!(BatchInput::new(vec![vec![1.0]], vec![vec![1.0], vec![2.0]], vec![0]).is_err());
        assert!(BatchInput::new(vec![vec![1.0, 0.0]], vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![2]).is_err());
    }

    #[test]
    fn antipodal_two_class_loss() {
        let input = BatchInput::new(
            vec![vec![0.6, 0.8]],
            vec![vec![0.6, 0.8], vec![-0.6, -0.8]],
            vec![0],
        )
        .unwrap();
        let loss = batch_loss(&input, &LossSpec::plain(64.0).unwrap());
        let expected = (-128.0f64).exp().ln_1p();
        assert!((loss - expected).abs() <= 1e-9 * expected, "{loss} vs {expected}");
    }

    #[test]
    fn symmetric_logits_give_ln2() {
        let input = BatchInput::new(
            vec![vec![1.0, 1.0]],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![1],
        )
        .unwrap();
        let loss = batch_loss(&input, &LossSpec::plain(64.0).unwrap());
        assert_abs_diff_eq!(loss, std::f64::consts::LN_2, epsilon = 1e-12);
    }

    #[test]
    fn large_scale_stays_finite() {
        let input = BatchInput::new(
            vec![vec![1.0, 0.0, 0.0]],
            vec![vec![-1.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]],
            vec![0],
        )
        .unwrap();
        let loss = batch_loss(&input, &LossSpec::new(Family::CosFace, 0.4, 512.0).unwrap());
        assert!(loss.is_finite());
        assert_abs_diff_eq!(loss, 512.0 * 2.4, epsilon = 1e-6);
    }
}
