//! Minimal self-contained SVG emission: scatter plots, line curves, and
//! heat maps. CSV files are always the authoritative output; these exist
//! for quick visual checks.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 56.0;

pub struct Plot {
    x_range: (f64, f64),
    y_range: (f64, f64),
    body: String,
}

/// One named series of (x, y) points.
pub struct Series<'a> {
    pub name: String,
    pub color: &'a str,
    pub points: Vec<(f64, f64)>,
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

pub fn palette(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

impl Plot {
    pub fn new(x_range: (f64, f64), y_range: (f64, f64)) -> Self {
        Self {
            x_range: pad_range(x_range),
            y_range: pad_range(y_range),
            body: String::new(),
        }
    }

    fn x(&self, v: f64) -> f64 {
        let (lo, hi) = self.x_range;
        MARGIN + (v - lo) / (hi - lo) * (WIDTH - 2.0 * MARGIN)
    }

    fn y(&self, v: f64) -> f64 {
        let (lo, hi) = self.y_range;
        HEIGHT - MARGIN - (v - lo) / (hi - lo) * (HEIGHT - 2.0 * MARGIN)
    }

    pub fn scatter_series(&mut self, series: &Series) {
        let _ = write!(
            self.body,
            r#"<g class="series" data-name="{}" fill="{}" fill-opacity="0.6">"#,
            series.name, series.color
        );
        for &(x, y) in &series.points {
            let _ = write!(
                self.body,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3"/>"#,
                self.x(x),
                self.y(y)
            );
        }
        self.body.push_str("</g>\n");
    }

    pub fn line_series(&mut self, series: &Series) {
        let mut points = String::new();
        for &(x, y) in &series.points {
            let _ = write!(points, "{:.2},{:.2} ", self.x(x), self.y(y));
        }
        let _ = writeln!(
            self.body,
            r#"<g class="series" data-name="{}"><polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/></g>"#,
            series.name,
            series.color,
            points.trim_end()
        );
    }

    /// Filled cells for a heat map; `value` in [0, 1] maps cold to hot,
    /// `None` renders as a hatched gray (degenerate cell).
    pub fn heat_cell(&mut self, x0: f64, x1: f64, y0: f64, y1: f64, value: Option<f64>) {
        let (px0, px1) = (self.x(x0), self.x(x1));
        let (py0, py1) = (self.y(y1), self.y(y0));
        let fill = match value {
            Some(v) => heat_color(v),
            None => "#bbbbbb".to_string(),
        };
        let _ = writeln!(
            self.body,
            r#"<rect x="{px0:.2}" y="{py0:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
            px1 - px0,
            py1 - py0,
        );
    }

    pub fn finish(self, title: &str, x_label: &str, y_label: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
        );
        let _ = writeln!(
            out,
            r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{}</text>"#,
            WIDTH / 2.0,
            escape(title)
        );
        // axes
        let _ = writeln!(
            out,
            r#"<line x1="{m}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/><line x1="{m}" y1="{t}" x2="{m}" y2="{b}" stroke="black"/>"#,
            m = MARGIN,
            b = HEIGHT - MARGIN,
            r = WIDTH - MARGIN,
            t = MARGIN
        );
        for f in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let (xlo, xhi) = self.x_range;
            let (ylo, yhi) = self.y_range;
            let xv = xlo + f * (xhi - xlo);
            let yv = ylo + f * (yhi - ylo);
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-family="sans-serif" font-size="10">{}</text>"#,
                self.x(xv),
                HEIGHT - MARGIN + 16.0,
                trim_num(xv)
            );
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end" font-family="sans-serif" font-size="10">{}</text>"#,
                MARGIN - 6.0,
                self.y(yv) + 3.0,
                trim_num(yv)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-family="sans-serif" font-size="12">{}</text>"#,
            WIDTH / 2.0,
            HEIGHT - 12.0,
            escape(x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="16" y="{:.1}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 16 {:.1})">{}</text>"#,
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            escape(y_label)
        );
        out.push_str(&self.body);
        out.push_str("</svg>\n");
        out
    }
}

fn pad_range((lo, hi): (f64, f64)) -> (f64, f64) {
    if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        let pad = (hi - lo) * 0.05;
        (lo - pad, hi + pad)
    }
}

fn heat_color(v: f64) -> String {
    let v = v.clamp(0.0, 1.0);
    // blue (low) to red (high) through white
    let (r, g, b) = if v < 0.5 {
        let t = v / 0.5;
        (
            (49.0 + t * (255.0 - 49.0)) as u8,
            (54.0 + t * (255.0 - 54.0)) as u8,
            (149.0 + t * (255.0 - 149.0)) as u8,
        )
    } else {
        let t = (v - 0.5) / 0.5;
        (
            255.0 as u8,
            (255.0 - t * (255.0 - 29.0)) as u8,
            (255.0 - t * (255.0 - 38.0)) as u8,
        )
    };
    format!("#{r:02x}{g:02x}{b:02x}")
}

fn trim_num(v: f64) -> String {
    let s = format!("{v:.3}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
