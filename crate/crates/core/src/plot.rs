//! Static SVG rendering of a trace: output voltage, inductor current, duty ratio,
//! and disturbances against their estimates.

use std::fmt::Write as _;

use crate::engine::TraceRecord;

const WIDTH: f64 = 900.0;
const PANEL_H: f64 = 180.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const GAP: f64 = 40.0;
const COLORS: [&str; 3] = ["#1f77b4", "#d62728", "#2ca02c"];
const MAX_POINTS: usize = 2000;

struct Series<'a> {
    label: &'a str,
    color: &'a str,
    dashed: bool,
    values: Vec<f64>,
}

/// Renders the trace as a four-panel SVG document.
pub fn render_svg(trace: &[TraceRecord], title: &str) -> String {
    let stride = (trace.len() / MAX_POINTS).max(1);
    let rows: Vec<&TraceRecord> = trace.iter().step_by(stride).collect();
    let t: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let col = |f: fn(&TraceRecord) -> f64| rows.iter().map(|r| f(r)).collect::<Vec<f64>>();

    let panels: Vec<(&str, Vec<Series>)> = vec![
        ("vc (V)", vec![series("vc", COLORS[0], false, col(|r| r.vc))]),
        ("i1 (A)", vec![series("i1", COLORS[0], false, col(|r| r.i1))]),
        ("mu", vec![series("mu", COLORS[0], false, col(|r| r.mu))]),
        (
            "d, d_hat",
            vec![
                series("d1", COLORS[0], false, col(|r| r.d1)),
                series("d1_hat", COLORS[0], true, col(|r| r.d1_hat)),
                series("d2", COLORS[1], false, col(|r| r.d2)),
                series("d2_hat", COLORS[1], true, col(|r| r.d2_hat)),
                series("d3", COLORS[2], false, col(|r| r.d3)),
                series("d3_hat", COLORS[2], true, col(|r| r.d3_hat)),
            ],
        ),
    ];

    let height = 40.0 + panels.len() as f64 * (PANEL_H + GAP);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{MARGIN_L}" y="20" font-size="14">{}</text>"#,
        escape(title)
    );
    for (i, (ylabel, series)) in panels.iter().enumerate() {
        let top = 40.0 + i as f64 * (PANEL_H + GAP);
        panel(&mut svg, top, ylabel, &t, series);
    }
    svg.push_str("</svg>\n");
    svg
}

fn series<'a>(label: &'a str, color: &'a str, dashed: bool, values: Vec<f64>) -> Series<'a> {
    Series {
        label,
        color,
        dashed,
        values,
    }
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (-1.0, 1.0);
    }
    if hi - lo < 1e-12 {
        let pad = lo.abs().max(1.0) * 0.05;
        return (lo - pad, hi + pad);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn panel(svg: &mut String, top: f64, ylabel: &str, t: &[f64], series: &[Series]) {
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let (t0, t1) = bounds(t.iter().copied());
    let (y0, y1) = bounds(series.iter().flat_map(|s| s.values.iter().copied()));
    let sx = |v: f64| MARGIN_L + (v - t0) / (t1 - t0) * plot_w;
    let sy = |v: f64| top + PANEL_H - (v - y0) / (y1 - y0) * PANEL_H;

    let _ = writeln!(
        svg,
        r##"<rect x="{MARGIN_L}" y="{top}" width="{plot_w}" height="{PANEL_H}" fill="none" stroke="#888"/>"##
    );
    for k in 0..=4 {
        let v = y0 + (y1 - y0) * k as f64 / 4.0;
        let y = sy(v);
        let _ = writeln!(
            svg,
            r##"<line x1="{MARGIN_L}" x2="{}" y1="{y:.2}" y2="{y:.2}" stroke="#eee"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"##,
            MARGIN_L + plot_w,
            MARGIN_L - 5.0,
            y + 4.0,
            tick(v)
        );
        let tv = t0 + (t1 - t0) * k as f64 / 4.0;
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            sx(tv),
            top + PANEL_H + 14.0,
            tick(tv)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="14" y="{:.2}" transform="rotate(-90 14 {:.2})" text-anchor="middle">{}</text>"#,
        top + PANEL_H / 2.0,
        top + PANEL_H / 2.0,
        escape(ylabel)
    );
    for (n, s) in series.iter().enumerate() {
        let mut d = String::new();
        for (k, (&tt, &v)) in t.iter().zip(&s.values).enumerate() {
            if !v.is_finite() {
                continue;
            }
            let _ = write!(d, "{}{:.2},{:.2} ", if k == 0 { 'M' } else { 'L' }, sx(tt), sy(v));
        }
        let dash = if s.dashed { r#" stroke-dasharray="5,3""# } else { "" };
        let _ = writeln!(
            svg,
            r#"<path d="{}" fill="none" stroke="{}" stroke-width="1.2"{dash}/>"#,
            d.trim_end(),
            s.color
        );
        if series.len() > 1 {
            let lx = MARGIN_L + plot_w - 60.0;
            let ly = top + 14.0 + 12.0 * n as f64;
            let _ = writeln!(
                svg,
                r#"<line x1="{:.2}" x2="{:.2}" y1="{ly:.2}" y2="{ly:.2}" stroke="{}"{dash}/><text x="{:.2}" y="{:.2}">{}</text>"#,
                lx - 22.0,
                lx - 4.0,
                s.color,
                lx,
                ly + 4.0,
                s.label
            );
        }
    }
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_four_panels() {
        let rec = |t: f64| TraceRecord {
            t,
            i1: 7.0,
            vc: 20.0 - t,
            i2: 1.0,
            xc: 0.0,
            mu: 0.7,
            mu_saturated_flag: 0,
            d1: 0.0,
            d2: 1.0,
            d3: 0.0,
            d1_hat: 0.0,
            d2_hat: 0.9,
            d3_hat: 0.0,
            hd: 0.0,
            condition12_ratio: 0.25,
        };
        let svg = render_svg(&[rec(0.0), rec(0.1), rec(0.2)], "a < b");
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<path").count(), 9);
        assert!(svg.contains("a &lt; b"));
    }
}
