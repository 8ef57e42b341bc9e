//! Minimal SVG plots. Output depends only on the data, so plots are as
//! reproducible as the CSVs they mirror.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Line,
    Markers,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    /// One-sigma error bar per point.
    pub errors: Option<Vec<f64>>,
    pub style: Style,
}

impl Series {
    pub fn line(name: &str, points: Vec<(f64, f64)>) -> Self {
        Self {
            name: name.into(),
            points,
            errors: None,
            style: Style::Line,
        }
    }

    pub fn markers(name: &str, points: Vec<(f64, f64)>, errors: Option<Vec<f64>>) -> Self {
        Self {
            name: name.into(),
            points,
            errors,
            style: Style::Markers,
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Round step (1, 2 or 5 times a power of ten) giving about `n` ticks.
fn tick_step(span: f64, n: f64) -> f64 {
    let raw = span / n;
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0].into_iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag)
}

fn tick_label(v: f64, step: f64) -> String {
    if v.abs() >= 1e5 || (v != 0.0 && v.abs() < 1e-3) {
        format!("{v:.2e}")
    } else {
        let digits = (-step.log10().floor()).max(0.0) as usize;
        format!("{v:.digits$}")
    }
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, frame: &Frame, x_label: &str, y_label: &str) {
    let (x0, x1) = (frame.px(frame.x.0), frame.px(frame.x.1));
    let (y0, y1) = (frame.py(frame.y.0), frame.py(frame.y.1));
    let _ = writeln!(out, r#"<rect x="{x0:.1}" y="{y1:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#, x1 - x0, y0 - y1);
    let xs = tick_step(frame.x.1 - frame.x.0, 8.0);
    let mut t = (frame.x.0 / xs).ceil() * xs;
    while t <= frame.x.1 {
        let p = frame.px(t);
        let _ = writeln!(out, r#"<line x1="{p:.1}" y1="{y0:.1}" x2="{p:.1}" y2="{:.1}" stroke="black"/>"#, y0 + 5.0);
        let _ = writeln!(out, r#"<text x="{p:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, y0 + 18.0, tick_label(t, xs));
        t += xs;
    }
    let ys = tick_step(frame.y.1 - frame.y.0, 6.0);
    let mut t = (frame.y.0 / ys).ceil() * ys;
    while t <= frame.y.1 {
        let p = frame.py(t);
        let _ = writeln!(out, r#"<line x1="{:.1}" y1="{p:.1}" x2="{x0:.1}" y2="{p:.1}" stroke="black"/>"#, x0 - 5.0);
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, x0 - 8.0, p + 4.0, tick_label(t, ys));
        t += ys;
    }
    let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, HEIGHT - 15.0, escape(x_label));
    let _ = writeln!(
        out,
        r#"<text transform="translate(18 {:.1}) rotate(-90)" text-anchor="middle">{}</text>"#,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
}

pub fn line_plot(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let finite = |v: &f64| v.is_finite();
    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0)).filter(finite);
    let (xlo, xhi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |a, v| (a.0.min(v), a.1.max(v)));
    let mut ylo = f64::INFINITY;
    let mut yhi = f64::NEG_INFINITY;
    for s in series {
        for (k, &(_, y)) in s.points.iter().enumerate() {
            let e = s.errors.as_ref().map_or(0.0, |e| e[k]);
            if y.is_finite() && e.is_finite() {
                ylo = ylo.min(y - e);
                yhi = yhi.max(y + e);
            }
        }
    }
    let frame = Frame {
        x: padded(xlo, xhi),
        y: padded(ylo, yhi),
    };
    let mut out = String::new();
    header(&mut out, title);
    axes(&mut out, &frame, x_label, y_label);
    for (n, s) in series.iter().enumerate() {
        let color = PALETTE[n % PALETTE.len()];
        let visible: Vec<(usize, f64, f64)> = s
            .points
            .iter()
            .enumerate()
            .filter(|(_, p)| p.0.is_finite() && p.1.is_finite())
            .map(|(k, p)| (k, frame.px(p.0), frame.py(p.1)))
            .collect();
        match s.style {
            Style::Line => {
                let path: Vec<String> = visible.iter().map(|(_, x, y)| format!("{x:.1},{y:.1}")).collect();
                let _ = writeln!(out, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, path.join(" "));
            }
            Style::Markers => {
                for &(k, x, y) in &visible {
                    if let Some(e) = s.errors.as_ref().map(|e| e[k]).filter(|e| e.is_finite() && *e > 0.0) {
                        let (_, yv) = s.points[k];
                        let _ = writeln!(
                            out,
                            r#"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="{color}"/>"#,
                            frame.py(yv - e),
                            frame.py(yv + e)
                        );
                    }
                    let _ = writeln!(out, r#"<circle cx="{x:.1}" cy="{y:.1}" r="3" fill="{color}"/>"#);
                }
            }
        }
        let ly = TOP + 16.0 + 16.0 * n as f64;
        let lx = WIDTH - RIGHT - 170.0;
        let _ = writeln!(out, r#"<rect x="{lx:.1}" y="{:.1}" width="12" height="4" fill="{color}"/>"#, ly - 6.0);
        let _ = writeln!(out, r#"<text x="{:.1}" y="{ly:.1}">{}</text>"#, lx + 18.0, escape(&s.name));
    }
    out.push_str("</svg>\n");
    out
}

/// Grouped bars of a real 4x4 matrix: one group per row, one bar per column.
pub fn matrix_bars(title: &str, labels: [&str; 4], values: [[f64; 4]; 4]) -> String {
    let flat = values.iter().flatten();
    let lo = flat.clone().fold(0.0f64, |a, v| a.min(*v));
    let hi = flat.fold(0.0f64, |a, v| a.max(*v));
    let limit = lo.abs().max(hi).max(0.05);
    let frame = Frame {
        x: (0.0, 4.0),
        y: if lo < -1e-3 { (-limit * 1.1, limit * 1.1) } else { (0.0, limit * 1.1) },
    };
    let mut out = String::new();
    header(&mut out, title);
    let (x0, x1) = (frame.px(0.0), frame.px(4.0));
    let (y0, y1) = (frame.py(frame.y.0), frame.py(frame.y.1));
    let _ = writeln!(out, r#"<rect x="{x0:.1}" y="{y1:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#, x1 - x0, y0 - y1);
    let zero = frame.py(0.0);
    let _ = writeln!(out, r#"<line x1="{x0:.1}" y1="{zero:.1}" x2="{x1:.1}" y2="{zero:.1}" stroke="gray"/>"#);
    let ys = tick_step(frame.y.1 - frame.y.0, 6.0);
    let mut t = (frame.y.0 / ys).ceil() * ys;
    while t <= frame.y.1 + 1e-12 {
        let p = frame.py(t);
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, x0 - 8.0, p + 4.0, tick_label(t, ys));
        t += ys;
    }
    let bar = (x1 - x0) / 4.0 / 5.0;
    for (r, row) in values.iter().enumerate() {
        let group = frame.px(r as f64);
        for (c, &v) in row.iter().enumerate() {
            let x = group + bar * (0.5 + c as f64);
            let (top, h) = if v >= 0.0 { (frame.py(v), zero - frame.py(v)) } else { (zero, frame.py(v) - zero) };
            let _ = writeln!(
                out,
                r#"<rect x="{x:.1}" y="{top:.1}" width="{:.1}" height="{h:.1}" fill="{}"><title>{}{} {}</title></rect>"#,
                bar * 0.9,
                PALETTE[c],
                labels[r],
                labels[c],
                super::formats::fmt_f64(v)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            group + (x1 - x0) / 8.0,
            y0 + 18.0,
            labels[r]
        );
    }
    for (c, label) in labels.iter().enumerate() {
        let ly = TOP + 16.0 + 16.0 * c as f64;
        let lx = WIDTH - RIGHT - 80.0;
        let _ = writeln!(out, r#"<rect x="{lx:.1}" y="{:.1}" width="12" height="8" fill="{}"/>"#, ly - 8.0, PALETTE[c]);
        let _ = writeln!(out, r#"<text x="{:.1}" y="{ly:.1}">col {label}</text>"#, lx + 18.0);
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_are_round() {
        assert_eq!(tick_step(10.0, 5.0), 2.0);
        assert_eq!(tick_step(0.7, 6.0), 0.2);
        assert_eq!(tick_step(3000.0, 6.0), 500.0);
    }

    #[test]
    fn plots_are_well_formed_and_stable() {
        let s = Series::markers("car", vec![(0.0, 1.0), (1.0, f64::INFINITY), (2.0, 3.0)], Some(vec![0.1, 0.2, 0.3]));
        let a = line_plot("t <1>", "x", "y", &[s.clone(), Series::line("fit", vec![(0.0, 1.0), (2.0, 3.0)])]);
        assert!(a.starts_with("<svg") && a.ends_with("</svg>\n"));
        assert!(a.contains("t &lt;1&gt;"));
        assert!(!a.contains("NaN") && !a.contains("inf"));
        assert_eq!(a, line_plot("t <1>", "x", "y", &[s, Series::line("fit", vec![(0.0, 1.0), (2.0, 3.0)])]));
        let bars = matrix_bars("rho", ["HH", "HV", "VH", "VV"], [[0.0, 0.0, 0.0, 0.0], [0.0, 0.5, 0.5, 0.0], [0.0, 0.5, 0.5, 0.0], [0.0; 4]]);
        assert_eq!(bars.matches("<rect").count(), 1 + 1 + 16 + 4);
    }
}
