//! Minimal SVG line plots.

use std::fmt::Write as _;

use lock_core::metrics::MetricSeries;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 48.0;
const COLORS: [&str; 6] = ["#444444", "#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// One polyline per series on shared axes, with a legend.
pub fn line_plot(title: &str, series: &[MetricSeries]) -> String {
    let points = series.iter().flat_map(|s| s.points());
    let (mut t0, mut t1, mut v0, mut v1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for (t, v) in points {
        t0 = t0.min(t as f64);
        t1 = t1.max(t as f64);
        v0 = v0.min(v);
        v1 = v1.max(v);
    }
    if t0 > t1 {
        (t0, t1, v0, v1) = (0.0, 1.0, 0.0, 1.0);
    }
    if t1 == t0 {
        t1 = t0 + 1.0;
    }
    if v1 == v0 {
        v1 = v0 + 1.0;
    }
    let x = |t: f64| MARGIN + (t - t0) / (t1 - t0) * (WIDTH - 2.0 * MARGIN);
    let y = |v: f64| HEIGHT - MARGIN - (v - v0) / (v1 - v0) * (HEIGHT - 2.0 * MARGIN);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="20" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let _ = writeln!(
        out,
        r#"<path d="M{m} {top} V{bottom} H{right}" stroke="black" fill="none"/>"#,
        m = MARGIN,
        top = MARGIN,
        bottom = HEIGHT - MARGIN,
        right = WIDTH - MARGIN
    );
    for (value, anchor_y) in [(v0, HEIGHT - MARGIN), (v1, MARGIN)] {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{anchor_y}" font-family="sans-serif" font-size="10" text-anchor="end">{value:.3}</text>"#,
            MARGIN - 4.0
        );
    }
    for (label, anchor_x, anchor) in [(t0, MARGIN, "start"), (t1, WIDTH - MARGIN, "end")] {
        let _ = writeln!(
            out,
            r#"<text x="{anchor_x}" y="{}" font-family="sans-serif" font-size="10" text-anchor="{anchor}">{label}</text>"#,
            HEIGHT - MARGIN + 14.0
        );
    }
    for (k, s) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let pts: Vec<String> = s.points().map(|(t, v)| format!("{:.2},{:.2}", x(t as f64), y(v))).collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" stroke="{color}" stroke-width="1.5" fill="none"/>"#,
            pts.join(" ")
        );
        let ly = MARGIN + 14.0 * k as f64;
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{ly}" font-family="sans-serif" font-size="11" fill="{color}" text-anchor="end">{}</text>"#,
            WIDTH - MARGIN,
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plot_lists_every_series() {
        let a = MetricSeries::new("kf", 0, vec![1.0, 2.0, 3.0]).unwrap();
        let b = MetricSeries::new("a<b", 0, vec![2.0, 2.0, 2.0]).unwrap();
        let svg = line_plot("rmse", &[a, b]);
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("a&lt;b"));
        assert!(line_plot("empty", &[]).ends_with("</svg>\n"));
    }
}
