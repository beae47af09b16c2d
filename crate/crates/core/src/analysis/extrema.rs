use crate::error::{Error, Result};
use crate::margin::Angle;

use super::CurveSample;

/// Differences smaller than this are treated as flat.
pub const PLATEAU_TOLERANCE: f64 = 1e-12;

/// Peak/trough structure of a sampled curve.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExtremaReport {
    pub maxima: Vec<Angle>,
    pub minima: Vec<Angle>,
    /// Maximal runs of samples with negative value, as `(first, last)` angles.
    pub negative_intervals: Vec<(Angle, Angle)>,
    /// Maximal runs of strictly decreasing consecutive samples.
    pub monotone_decreasing_intervals: Vec<(Angle, Angle)>,
}

fn step_sign(d: f64) -> i8 {
    if d > PLATEAU_TOLERANCE {
        1
    } else if d < -PLATEAU_TOLERANCE {
        -1
    } else {
        0
    }
}

fn midpoint(a: Angle, b: Angle) -> Angle {
    Angle::saturating(0.5 * (a.radians() + b.radians()))
}

/// Locates local extrema by sign changes of the discrete first difference.
/// A flat run between a rise and a fall counts once, at the run's midpoint.
pub fn analyze_extrema(samples: &[CurveSample]) -> Result<ExtremaReport> {
    if samples.len() < 3 {
        return Err(Error::Precondition(format!(
            "need at least 3 samples, got {}",
            samples.len()
        )));
    }
    if let Some(w) = samples.windows(2).find(|w| w[1].theta <= w[0].theta) {
        return Err(Error::Precondition(format!(
            "samples not sorted by theta: {} then {}",
            w[0].theta.radians(),
            w[1].theta.radians()
        )));
    }

    let mut report = ExtremaReport::default();

    // vertex index where the last non-flat step ended, and its sign
    let mut last: Option<(i8, usize)> = None;
    let mut dec_start: Option<usize> = None;
    for (j, w) in samples.windows(2).enumerate() {
        let s = step_sign(w[1].value - w[0].value);
        if s == -1 {
            dec_start.get_or_insert(j);
        } else if let Some(start) = dec_start.take() {
            report
                .monotone_decreasing_intervals
                .push((samples[start].theta, samples[j].theta));
        }
        if s == 0 {
            continue;
        }
        if let Some((prev, end)) = last {
            let at = midpoint(samples[end].theta, samples[j].theta);
            match (prev, s) {
                (1, -1) => report.maxima.push(at),
                (-1, 1) => report.minima.push(at),
                _ => {}
            }
        }
        last = Some((s, j + 1));
    }
    if let Some(start) = dec_start {
        report
            .monotone_decreasing_intervals
            .push((samples[start].theta, samples[samples.len() - 1].theta));
    }

    let mut neg_start: Option<usize> = None;
    for (i, s) in samples.iter().enumerate() {
        if s.value < 0.0 {
            neg_start.get_or_insert(i);
        } else if let Some(start) = neg_start.take() {
            report.negative_intervals.push((samples[start].theta, samples[i - 1].theta));
        }
    }
    if let Some(start) = neg_start {
        report
            .negative_intervals
            .push((samples[start].theta, samples[samples.len() - 1].theta));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn sampled<F: Fn(f64) -> f64>(f: F, n: usize) -> Vec<CurveSample> {
        (1..=n)
            .map(|i| {
                let t = PI * i as f64 / (n + 1) as f64;
                CurveSample { theta: Angle::saturating(t), value: f(t) }
            })
            .collect()
    }

    #[test]
    fn sine_has_one_maximum() {
        let r = analyze_extrema(&sampled(f64::sin, 101)).unwrap();
        assert_eq!(r.maxima.len(), 1);
        assert!((r.maxima[0].radians() - FRAC_PI_2).abs() < 1e-12);
        assert!(r.minima.is_empty());
        assert!(r.negative_intervals.is_empty());
        assert_eq!(r.monotone_decreasing_intervals.len(), 1);
    }

    #[test]
    fn negative_sine_is_negative_everywhere() {
        let s = sampled(|t| -t.sin(), 100);
        let r = analyze_extrema(&s).unwrap();
        assert_eq!(r.minima.len(), 1);
        assert!(r.maxima.is_empty());
        assert_eq!(r.negative_intervals, vec![(s[0].theta, s[99].theta)]);
    }

    #[test]
    fn plateau_counts_once_at_its_midpoint() {
        let vals = [0.0, 1.0, 2.0, 2.0, 2.0, 2.0, 1.0, 0.0];
        let s: Vec<CurveSample> = vals
            .iter()
            .enumerate()
            .map(|(i, &v)| CurveSample { theta: Angle::saturating(0.1 * (i + 1) as f64), value: v })
            .collect();
        let r = analyze_extrema(&s).unwrap();
        assert_eq!(r.maxima.len(), 1);
        assert!((r.maxima[0].radians() - 0.45).abs() < 1e-12);
        // a rise that merely flattens is not an extremum
        let s2: Vec<CurveSample> = [0.0, 1.0, 1.0, 2.0]
            .iter()
            .enumerate()
            .map(|(i, &v)| CurveSample { theta: Angle::saturating(0.1 * (i + 1) as f64), value: v })
            .collect();
        assert!(analyze_extrema(&s2).unwrap().maxima.is_empty());
    }

    #[test]
    fn unsorted_input_is_rejected() {
        let mut s = sampled(f64::sin, 10);
        s.swap(2, 3);
        assert!(matches!(analyze_extrema(&s), Err(Error::Precondition(_))));
        assert!(analyze_extrema(&s[..2]).is_err());
    }
}
