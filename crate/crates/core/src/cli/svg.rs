use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const PAD: f64 = 50.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

pub struct Series<'a> {
    pub name: &'a str,
    pub points: Vec<(f64, f64)>,
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-300 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// Single-panel SVG 1.1 line chart with one polyline per series.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series<'_>]) -> String {
    let all = || series.iter().flat_map(|s| s.points.iter());
    let (x0, x1) = bounds(all().map(|p| p.0));
    let (y0, y1) = bounds(all().map(|p| p.1));
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * PAD);
    let sy = |y: f64| HEIGHT - PAD - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * PAD);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(title));
    let _ = writeln!(
        out,
        r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * PAD,
        HEIGHT - 2.0 * PAD
    );
    if y0 < 0.0 && y1 > 0.0 {
        let z = sy(0.0);
        let _ = writeln!(out, r##"<line x1="{PAD}" y1="{z:.2}" x2="{}" y2="{z:.2}" stroke="#999" stroke-dasharray="4 3"/>"##, WIDTH - PAD);
    }
    let _ = writeln!(out, r#"<text x="{PAD}" y="{}" font-size="10">{x0:.4}</text>"#, HEIGHT - PAD + 14.0);
    let _ = writeln!(out, r#"<text x="{}" y="{}" font-size="10" text-anchor="end">{x1:.4}</text>"#, WIDTH - PAD, HEIGHT - PAD + 14.0);
    let _ = writeln!(out, r#"<text x="{}" y="{}" font-size="10" text-anchor="end">{y0:.4}</text>"#, PAD - 4.0, HEIGHT - PAD);
    let _ = writeln!(out, r#"<text x="{}" y="{}" font-size="10" text-anchor="end">{y1:.4}</text>"#, PAD - 4.0, PAD + 10.0);
    let _ = writeln!(out, r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">{}</text>"#, WIDTH / 2.0, HEIGHT - 12.0, escape(x_label));
    let _ = writeln!(
        out,
        r#"<text x="14" y="{}" font-size="12" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(out, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-size="11" fill="{color}">{}</text>"#,
            PAD + 8.0,
            PAD + 16.0 + 14.0 * i as f64,
            escape(s.name)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_polyline_per_series() {
        let svg = line_chart(
            "t",
            "x",
            "y",
            &[
                Series { name: "a", points: vec![(0.0, 1.0), (1.0, -1.0)] },
                Series { name: "b<c", points: vec![(0.0, 0.0), (1.0, f64::NAN)] },
            ],
        );
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("b&lt;c"));
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn flat_series_does_not_divide_by_zero() {
        let svg = line_chart("t", "x", "y", &[Series { name: "a", points: vec![(0.0, 2.0), (1.0, 2.0)] }]);
        assert!(!svg.contains("NaN"));
    }
}
