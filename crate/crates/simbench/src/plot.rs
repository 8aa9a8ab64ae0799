//! SVG line charts of summary rows: mean relative error against `n` on a
//! log-x axis, with a mean ± stderr band per method.

use std::fmt::Write as _;

use crate::harness::SummaryRow;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

struct Series<'a> {
    method: &'a str,
    points: Vec<(f64, f64, f64)>,
}

fn series(rows: &[SummaryRow]) -> Vec<Series<'_>> {
    let mut out: Vec<Series<'_>> = Vec::new();
    for r in rows.iter().filter(|r| r.mean.is_finite() && r.n > 0) {
        let se = if r.stderr.is_finite() { r.stderr } else { 0.0 };
        match out.iter_mut().find(|s| s.method == r.method) {
            Some(s) => s.points.push((r.n as f64, r.mean, se)),
            None => out.push(Series {
                method: &r.method,
                points: vec![(r.n as f64, r.mean, se)],
            }),
        }
    }
    for s in &mut out {
        s.points.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    }
    out
}

/// Renders the chart; rows with a non-finite mean are skipped.
pub fn render_svg(title: &str, rows: &[SummaryRow]) -> String {
    let all = series(rows);
    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(svg, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(title)).unwrap();

    let pts = all.iter().flat_map(|s| s.points.iter());
    let (mut xlo, mut xhi, mut yhi) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    for &(n, m, se) in pts {
        xlo = xlo.min(n.log2());
        xhi = xhi.max(n.log2());
        yhi = yhi.max(m + se);
    }
    if all.is_empty() {
        writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">no data</text>"#, WIDTH / 2.0, HEIGHT / 2.0).unwrap();
        svg.push_str("</svg>\n");
        return svg;
    }
    if xhi <= xlo {
        xlo -= 1.0;
        xhi += 1.0;
    }
    if !(yhi > 0.0) {
        yhi = 1.0;
    }
    yhi *= 1.05;
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |n: f64| LEFT + (n.log2() - xlo) / (xhi - xlo) * pw;
    let sy = |v: f64| TOP + ph - (v.max(0.0) / yhi) * ph;

    writeln!(
        svg,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    )
    .unwrap();
    let mut k = xlo.ceil() as i64;
    while k as f64 <= xhi {
        let n = 2f64.powi(k as i32);
        let x = sx(n);
        writeln!(svg, r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="black"/>"#, TOP + ph, TOP + ph + 5.0).unwrap();
        writeln!(svg, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{n}</text>"#, TOP + ph + 18.0).unwrap();
        k += 1;
    }
    for t in 0..=5 {
        let v = yhi * t as f64 / 5.0;
        let y = sy(v);
        writeln!(svg, r#"<line x1="{}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/>"#, LEFT - 5.0).unwrap();
        writeln!(svg, r#"<text x="{}" y="{:.2}" text-anchor="end">{v:.3}</text>"#, LEFT - 8.0, y + 4.0).unwrap();
    }
    writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">n</text>"#, LEFT + pw / 2.0, HEIGHT - 10.0).unwrap();
    writeln!(
        svg,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">relative error to oracle</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    )
    .unwrap();

    for (i, s) in all.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let upper = s.points.iter().map(|&(n, m, se)| format!("{:.2},{:.2}", sx(n), sy(m + se)));
        let lower = s.points.iter().rev().map(|&(n, m, se)| format!("{:.2},{:.2}", sx(n), sy(m - se)));
        let band: Vec<String> = upper.chain(lower).collect();
        writeln!(svg, r#"<polygon points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#, band.join(" ")).unwrap();
        let line: Vec<String> = s.points.iter().map(|&(n, m, _)| format!("{:.2},{:.2}", sx(n), sy(m))).collect();
        writeln!(svg, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, line.join(" ")).unwrap();
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = WIDTH - RIGHT + 12.0;
        writeln!(svg, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, lx + 20.0).unwrap();
        writeln!(svg, r#"<text x="{}" y="{}">{}</text>"#, lx + 26.0, ly + 4.0, escape(s.method)).unwrap();
    }
    svg.push_str("</svg>\n");
    svg
}
