//! Static SVG chart of a finished run: commanded vs actual angle on top,
//! tracking error below. No scripting, no external assets.

use std::fmt::Write as _;

use crate::simulator::TraceRecord;

const WIDTH: f64 = 900.0;
const PANEL_H: f64 = 260.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_V: f64 = 40.0;

struct Scale {
    min: f64,
    max: f64,
}

impl Scale {
    fn of(values: impl Iterator<Item = f64>) -> Self {
        let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            if v.is_finite() {
                min = min.min(v);
                max = max.max(v);
            }
        }
        if !min.is_finite() || !max.is_finite() {
            return Self { min: 0.0, max: 1.0 };
        }
        if max - min < 1e-12 {
            // Flat signal: pad so the line sits mid-panel.
            let pad = min.abs().max(1e-6) * 0.1;
            return Self {
                min: min - pad,
                max: max + pad,
            };
        }
        let pad = (max - min) * 0.05;
        Self {
            min: min - pad,
            max: max + pad,
        }
    }

    fn y(&self, v: f64, top: f64) -> f64 {
        top + (self.max - v) / (self.max - self.min) * (PANEL_H - 2.0 * MARGIN_V) + MARGIN_V
    }
}

fn x_of(t: f64, t0: f64, t1: f64) -> f64 {
    MARGIN_L + (t - t0) / (t1 - t0).max(1e-300) * (WIDTH - MARGIN_L - MARGIN_R)
}

fn polyline(
    out: &mut String,
    trace: &[TraceRecord],
    value: impl Fn(&TraceRecord) -> f64,
    scale: &Scale,
    top: f64,
    color: &str,
) {
    let t0 = trace[0].t;
    let t1 = trace[trace.len() - 1].t;
    // Cap the polyline at ~2000 points; charts do not need every sample.
    let stride = (trace.len() / 2000).max(1);
    let mut points = String::new();
    for (i, r) in trace.iter().enumerate() {
        if i % stride != 0 && i != trace.len() - 1 {
            continue;
        }
        let _ = write!(
            points,
            "{:.2},{:.2} ",
            x_of(r.t, t0, t1),
            scale.y(value(r), top)
        );
    }
    let _ = writeln!(
        out,
        r##"<polyline fill="none" stroke="{color}" stroke-width="1.4" points="{}"/>"##,
        points.trim_end()
    );
}

fn panel_frame(out: &mut String, top: f64, title: &str, scale: &Scale, t0: f64, t1: f64) {
    let x0 = MARGIN_L;
    let x1 = WIDTH - MARGIN_R;
    let y0 = top + MARGIN_V;
    let y1 = top + PANEL_H - MARGIN_V;
    let _ = writeln!(
        out,
        r##"<rect x="{x0}" y="{y0}" width="{}" height="{}" fill="none" stroke="#888" stroke-width="1"/>"##,
        x1 - x0,
        y1 - y0
    );
    let _ = writeln!(
        out,
        r##"<text x="{x0}" y="{}" font-family="monospace" font-size="14" fill="#222">{title}</text>"##,
        y0 - 10.0
    );
    for (v, label_y) in [(scale.max, y0 + 12.0), (scale.min, y1 - 2.0)] {
        let _ = writeln!(
            out,
            r##"<text x="{}" y="{label_y}" font-family="monospace" font-size="11" fill="#555" text-anchor="end">{v:.3e}</text>"##,
            x0 - 6.0
        );
    }
    for (t, anchor) in [(t0, "start"), (t1, "end")] {
        let _ = writeln!(
            out,
            r##"<text x="{}" y="{}" font-family="monospace" font-size="11" fill="#555" text-anchor="{anchor}">{t:.2}s</text>"##,
            x_of(t, t0, t1),
            y1 + 16.0
        );
    }
    // Zero line when the panel spans it.
    if scale.min < 0.0 && scale.max > 0.0 {
        let yz = scale.y(0.0, top);
        let _ = writeln!(
            out,
            r##"<line x1="{x0}" y1="{yz}" x2="{x1}" y2="{yz}" stroke="#bbb" stroke-width="0.7" stroke-dasharray="4 3"/>"##
        );
    }
}

/// Renders the two-panel tracking chart. Returns the SVG text.
pub fn render_chart(trace: &[TraceRecord]) -> String {
    assert!(!trace.is_empty(), "chart needs a non-empty trace");
    let t0 = trace[0].t;
    let t1 = trace[trace.len() - 1].t;
    let total_h = 2.0 * PANEL_H;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r##"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {total_h}" width="{WIDTH}" height="{total_h}">"##
    );
    let _ = writeln!(out, r##"<rect width="100%" height="100%" fill="white"/>"##);

    let angle_scale = Scale::of(trace.iter().flat_map(|r| [r.phi_d, r.phi]));
    panel_frame(
        &mut out,
        0.0,
        "joint angle: commanded (dashed) vs actual, rad",
        &angle_scale,
        t0,
        t1,
    );
    polyline(&mut out, trace, |r| r.phi, &angle_scale, 0.0, "#c0392b");
    // Commanded drawn second, dashed, so both stay visible when overlapping.
    {
        let before = out.len();
        polyline(&mut out, trace, |r| r.phi_d, &angle_scale, 0.0, "#2c3e50");
        let dashed = out[before..]
            .replace("stroke-width=\"1.4\"", "stroke-width=\"1.2\" stroke-dasharray=\"6 4\"");
        out.truncate(before);
        out.push_str(&dashed);
    }

    let err_scale = Scale::of(trace.iter().map(|r| r.e1));
    panel_frame(&mut out, PANEL_H, "tracking error e1, rad", &err_scale, t0, t1);
    polyline(&mut out, trace, |r| r.e1, &err_scale, PANEL_H, "#27618d");

    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_renders_wellformed_svg() {
        let trace: Vec<TraceRecord> = (0..=500)
            .map(|i| {
                let t = i as f64 * 0.01;
                TraceRecord {
                    t,
                    phi_d: 0.3 * t.sin(),
                    phi: 0.3 * t.sin() - 0.01 * (-t).exp(),
                    e1: 0.01 * (-t).exp(),
                    sigma: 0.0,
                    delta: 0.0,
                    delta_dot: 0.0,
                    u_x: 0.0,
                    u1: 0.0,
                    u_eq: 0.0,
                    tau_sea: 0.0,
                    tau_d: 0.0,
                }
            })
            .collect();
        let svg = render_chart(&trace);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 3);
        // Static output: no scripts, no external references.
        assert!(!svg.contains("<script"));
        assert!(!svg.contains("http://") || svg.contains("xmlns"));
        assert!(!svg.contains("href"));
    }

    #[test]
    fn flat_signal_does_not_collapse_scale() {
        let trace: Vec<TraceRecord> = (0..10)
            .map(|i| TraceRecord {
                t: i as f64,
                phi_d: 0.3,
                phi: 0.3,
                e1: 0.0,
                sigma: 0.0,
                delta: 0.0,
                delta_dot: 0.0,
                u_x: 0.0,
                u1: 0.0,
                u_eq: 0.0,
                tau_sea: 0.0,
                tau_d: 0.0,
            })
            .collect();
        let svg = render_chart(&trace);
        assert!(!svg.contains("NaN"));
        assert!(!svg.contains("inf"));
    }
}
