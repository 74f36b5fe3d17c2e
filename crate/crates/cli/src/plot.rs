//! Minimal SVG line charts.

use std::fmt::Write as _;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 56.0;
const MAX_POINTS: usize = 2000;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

pub struct Series {
    pub label: String,
    pub values: Vec<f64>,
}

/// Line chart of several series over a shared `x`. With `log_y`, values are
/// plotted as `log10` and nonpositive values are dropped.
pub fn line_chart(title: &str, x: &[f64], series: &[Series], log_y: bool) -> String {
    let stride = x.len().div_ceil(MAX_POINTS).max(1);
    let ys = |v: f64| if log_y { (v > 0.0).then(|| v.log10()) } else { Some(v) };
    let finite = series.iter().flat_map(|s| s.values.iter().filter_map(|&v| ys(v))).filter(|v| v.is_finite());
    let (y_lo, y_hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let (y_lo, y_hi) = if y_lo.is_finite() { pad(y_lo, y_hi) } else { (0.0, 1.0) };
    let (x_lo, x_hi) = pad(x.first().copied().unwrap_or(0.0), x.last().copied().unwrap_or(1.0));
    let px = |v: f64| MARGIN + (v - x_lo) / (x_hi - x_lo) * (WIDTH - 2.0 * MARGIN);
    let py = |v: f64| HEIGHT - MARGIN - (v - y_lo) / (y_hi - y_lo) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, WIDTH / 2.0, escape(title));
    let _ = writeln!(
        svg,
        r##"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="#444"/>"##,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    for k in 0..=4 {
        let fx = x_lo + (x_hi - x_lo) * k as f64 / 4.0;
        let fy = y_lo + (y_hi - y_lo) * k as f64 / 4.0;
        let label = if log_y { format!("1e{fy:.1}") } else { format!("{fy:.3}") };
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{fx:.2}</text>"#, px(fx), HEIGHT - MARGIN + 18.0);
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{label}</text>"#, MARGIN - 6.0, py(fy) + 4.0);
    }
    for (n, s) in series.iter().enumerate() {
        let color = COLORS[n % COLORS.len()];
        let mut points = String::new();
        for k in (0..x.len().min(s.values.len())).step_by(stride) {
            if let Some(v) = ys(s.values[k]).filter(|v| v.is_finite()) {
                let _ = write!(points, "{:.2},{:.2} ", px(x[k]), py(v));
            }
        }
        let _ = writeln!(svg, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, points.trim_end());
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" fill="{color}">{}</text>"#,
            WIDTH - MARGIN + 4.0,
            MARGIN + 14.0 * (n as f64 + 1.0),
            escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn pad(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
