//! Static SVG line and correlogram charts.

use std::fmt::Write;

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 320.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 48.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        let span = if self.x_max > self.x_min { self.x_max - self.x_min } else { 1.0 };
        LEFT + (v - self.x_min) / span * (WIDTH - LEFT - RIGHT)
    }

    fn y(&self, v: f64) -> f64 {
        TOP + (self.y_max - v) / (self.y_max - self.y_min) * (HEIGHT - TOP - BOTTOM)
    }
}

fn open(out: &mut String, title: &str, x_label: &str, y_label: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(title));
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (LEFT + WIDTH - RIGHT) / 2.0,
        HEIGHT - 8.0,
        escape(x_label)
    );
    let cy = (TOP + HEIGHT - BOTTOM) / 2.0;
    let _ = writeln!(
        out,
        r#"<text x="14" y="{cy}" text-anchor="middle" transform="rotate(-90 14 {cy})">{}</text>"#,
        escape(y_label)
    );
}

fn axes(out: &mut String, f: &Frame) {
    let (x0, x1) = (LEFT, WIDTH - RIGHT);
    let (y0, y1) = (TOP, HEIGHT - BOTTOM);
    let _ = writeln!(out, r##"<rect x="{x0}" y="{y0}" width="{}" height="{}" fill="none" stroke="#444"/>"##, x1 - x0, y1 - y0);
    for i in 0..=4 {
        let v = f.y_min + (f.y_max - f.y_min) * i as f64 / 4.0;
        let y = f.y(v);
        let _ = writeln!(out, r##"<line x1="{}" y1="{y:.2}" x2="{x0}" y2="{y:.2}" stroke="#444"/>"##, x0 - 4.0);
        let _ = writeln!(out, r#"<text x="{}" y="{:.2}" text-anchor="end">{v:.2}</text>"#, x0 - 6.0, y + 4.0);
    }
}

/// Line chart of `values` against `labels` (one label per point; a handful are printed).
pub fn line_chart(title: &str, y_label: &str, labels: &[String], values: &[f64]) -> String {
    let mut out = String::new();
    open(&mut out, title, "date", y_label);
    let (mut lo, mut hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    if !lo.is_finite() || !hi.is_finite() {
        (lo, hi) = (-1.0, 1.0);
    }
    if hi - lo < 1e-12 {
        lo -= 1.0;
        hi += 1.0;
    }
    let pad = 0.05 * (hi - lo);
    let f = Frame { x_min: 0.0, x_max: values.len().saturating_sub(1) as f64, y_min: lo - pad, y_max: hi + pad };
    axes(&mut out, &f);
    let n = values.len();
    if n > 0 {
        for k in 0..6 {
            let i = k * (n - 1) / 5;
            let x = f.x(i as f64);
            let y = HEIGHT - BOTTOM;
            let _ = writeln!(out, r##"<line x1="{x:.2}" y1="{y}" x2="{x:.2}" y2="{}" stroke="#444"/>"##, y + 4.0);
            let label = labels.get(i).map(String::as_str).unwrap_or("");
            let _ = writeln!(out, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#, y + 16.0, escape(label));
        }
    }
    out.push_str(r##"<polyline fill="none" stroke="#1f4e8c" stroke-width="0.8" points=""##);
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{:.2},{:.2}", f.x(i as f64), f.y(*v));
    }
    out.push_str("\"/>\n</svg>\n");
    out
}

/// Correlogram for lags `1..=K` with the `+-band` significance lines dashed.
pub fn acf_chart(title: &str, correlations: &[f64], band: f64) -> String {
    let mut out = String::new();
    open(&mut out, title, "lag", "autocorrelation");
    let top = correlations.iter().fold(band, |m, r| m.max(r.abs())).min(1.0) * 1.2;
    let k = correlations.len();
    let f = Frame { x_min: 0.0, x_max: k as f64 + 1.0, y_min: -top, y_max: top };
    axes(&mut out, &f);
    for lag in 1..=k {
        if lag == 1 || lag % 5 == 0 {
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{}" text-anchor="middle">{lag}</text>"#,
                f.x(lag as f64),
                HEIGHT - BOTTOM + 16.0
            );
        }
    }
    let (x0, x1) = (LEFT, WIDTH - RIGHT);
    let _ = writeln!(out, r##"<line x1="{x0}" y1="{0:.2}" x2="{x1}" y2="{0:.2}" stroke="#444"/>"##, f.y(0.0));
    for b in [band, -band] {
        let _ = writeln!(
            out,
            r##"<line x1="{x0}" y1="{0:.2}" x2="{x1}" y2="{0:.2}" stroke="#c0392b" stroke-dasharray="5,4"/>"##,
            f.y(b)
        );
    }
    for (i, r) in correlations.iter().enumerate() {
        let x = f.x((i + 1) as f64);
        let _ = writeln!(
            out,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#1f4e8c" stroke-width="3"/>"##,
            f.y(0.0),
            f.y(*r)
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charts_are_well_formed() {
        let labels: Vec<String> = (0..10).map(|i| format!("d{i}")).collect();
        let s = line_chart("a < b & c", "%", &labels, &[1.0, 2.0, -1.0, 0.5, 0.0, 3.0, 2.0, 1.0, 0.0, 1.0]);
        assert!(s.starts_with("<svg") && s.ends_with("</svg>\n"));
        assert!(s.contains("a &lt; b &amp; c"));
        let s = acf_chart("acf", &[0.1, -0.05, 0.02], 0.059);
        assert_eq!(s.matches("stroke-dasharray").count(), 2);
        assert_eq!(s.matches(r#"stroke-width="3""#).count(), 3);
    }

    #[test]
    fn flat_series_does_not_divide_by_zero() {
        let s = line_chart("flat", "%", &["a".into(), "b".into()], &[1.0, 1.0]);
        assert!(!s.contains("NaN") && !s.contains("inf"));
    }
}
