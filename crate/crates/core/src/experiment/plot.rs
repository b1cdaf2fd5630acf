//! Single-series SVG of accuracy discrepancy against the swept value.

use std::fmt::Write;

use super::sweep::SweepRow;

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;

/// Plots `gamma ± 2 se` over `value`. Rows with a non-finite swept value
/// are skipped. The x axis is logarithmic when the positive grid spans more
/// than a factor of 20. A dashed line marks the first high-accuracy row.
pub fn render_svg(rows: &[SweepRow], x_label: &str) -> String {
    let pts: Vec<&SweepRow> = rows.iter().filter(|r| r.value.is_finite()).collect();
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    if pts.is_empty() {
        svg.push_str("</svg>\n");
        return svg;
    }

    let xs: Vec<f64> = pts.iter().map(|r| r.value).collect();
    let (xmin, xmax) = min_max(xs.iter().copied());
    let log_x = xmin > 0.0 && xmax / xmin > 20.0;
    let tx = |v: f64| if log_x { v.log10() } else { v };
    let (x0, x1) = pad(tx(xmin), tx(xmax));
    let (y0, y1) = pad(
        min_max(pts.iter().map(|r| r.gamma - 2.0 * r.gamma_se))
            .0
            .min(0.0),
        min_max(pts.iter().map(|r| r.gamma + 2.0 * r.gamma_se)).1,
    );
    let px = |v: f64| LEFT + (tx(v) - x0) / (x1 - x0) * (W - LEFT - RIGHT);
    let py = |v: f64| H - BOTTOM - (v - y0) / (y1 - y0) * (H - TOP - BOTTOM);

    // axes
    let _ = writeln!(
        svg,
        r#"<path d="M{LEFT} {TOP} V{} H{}" fill="none" stroke="black"/>"#,
        H - BOTTOM,
        W - RIGHT
    );
    for i in 0..=4 {
        let v = y0 + (y1 - y0) * i as f64 / 4.0;
        let y = py(v);
        let _ = writeln!(
            svg,
            r#"<line x1="{}" y1="{y:.1}" x2="{LEFT}" y2="{y:.1}" stroke="black"/><text x="{}" y="{:.1}" text-anchor="end">{v:.3}</text>"#,
            LEFT - 4.0,
            LEFT - 6.0,
            y + 4.0
        );
    }
    for &v in &xs {
        let x = px(v);
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.1}" y1="{}" x2="{x:.1}" y2="{}" stroke="black"/><text x="{x:.1}" y="{}" text-anchor="middle">{}</text>"#,
            H - BOTTOM,
            H - BOTTOM + 4.0,
            H - BOTTOM + 18.0,
            short(v)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">{x_label}</text>"#,
        (LEFT + W - RIGHT) / 2.0,
        H - 10.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">gamma</text>"#,
        H / 2.0,
        H / 2.0
    );
    if y0 < 0.0 && y1 > 0.0 {
        let _ = writeln!(
            svg,
            r##"<line x1="{LEFT}" y1="{0:.1}" x2="{1}" y2="{0:.1}" stroke="#bbb"/>"##,
            py(0.0),
            W - RIGHT
        );
    }

    if let Some(r) = pts.iter().find(|r| r.high_accuracy) {
        let x = px(r.value);
        let _ = writeln!(
            svg,
            r##"<line x1="{x:.1}" y1="{TOP}" x2="{x:.1}" y2="{}" stroke="#888" stroke-dasharray="5,4"/>"##,
            H - BOTTOM
        );
    }

    for r in &pts {
        let x = px(r.value);
        let _ = writeln!(
            svg,
            r##"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="#1f77b4"/>"##,
            py(r.gamma - 2.0 * r.gamma_se),
            py(r.gamma + 2.0 * r.gamma_se)
        );
    }
    let path: Vec<String> = pts
        .iter()
        .map(|r| format!("{:.1},{:.1}", px(r.value), py(r.gamma)))
        .collect();
    let _ = writeln!(
        svg,
        r##"<polyline points="{}" fill="none" stroke="#1f77b4" stroke-width="2"/>"##,
        path.join(" ")
    );
    for r in &pts {
        let _ = writeln!(
            svg,
            r##"<circle cx="{:.1}" cy="{:.1}" r="3" fill="#1f77b4"/>"##,
            px(r.value),
            py(r.gamma)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn min_max(it: impl Iterator<Item = f64>) -> (f64, f64) {
    it.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    })
}

fn pad(lo: f64, hi: f64) -> (f64, f64) {
    if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        let d = 0.05 * (hi - lo);
        (lo - d, hi + d)
    }
}

fn short(v: f64) -> String {
    let s = format!("{v:.4}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}
