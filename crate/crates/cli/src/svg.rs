//! Minimal deterministic SVG plotting.
//!
//! The figure bundles need line plots, stem plots, point markers and a
//! unit-circle scatter — little enough that a plotting dependency is not worth
//! its weight.  Output is a self-contained SVG string: fixed canvas, computed
//! ticks, a small legend, and the raw data embedded as XML comments so a
//! reader can recover the numbers from the file itself.  All formatting is
//! deterministic (shortest round-trip floats for data, fixed precision for
//! pixel coordinates), so identical data yields identical bytes.

use num_complex::Complex64;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 62.0;
const MARGIN_RIGHT: f64 = 18.0;
const MARGIN_TOP: f64 = 34.0;
const MARGIN_BOTTOM: f64 = 46.0;

const PALETTE: [&str; 5] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];

/// How a series is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesKind {
    /// Connected polyline.
    Line,
    /// Vertical stems from y = 0 with a dot at the tip.
    Stems,
    /// Unconnected circular markers.
    Markers,
}

#[derive(Debug, Clone)]
struct Series {
    kind: SeriesKind,
    label: String,
    points: Vec<(f64, f64)>,
}

/// A single-panel 2-D plot.
#[derive(Debug, Clone)]
pub struct Plot {
    title: String,
    x_label: String,
    y_label: String,
    series: Vec<Series>,
    /// Forced axis ranges; computed from the data when absent.
    x_range: Option<(f64, f64)>,
    y_range: Option<(f64, f64)>,
}

impl Plot {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Plot {
            title: title.to_string(),
            x_label: x_label.to_string(),
            y_label: y_label.to_string(),
            series: Vec::new(),
            x_range: None,
            y_range: None,
        }
    }

    pub fn with_x_range(mut self, lo: f64, hi: f64) -> Self {
        self.x_range = Some((lo, hi));
        self
    }

    pub fn with_y_range(mut self, lo: f64, hi: f64) -> Self {
        self.y_range = Some((lo, hi));
        self
    }

    pub fn add(&mut self, kind: SeriesKind, label: &str, points: Vec<(f64, f64)>) {
        self.series.push(Series {
            kind,
            label: label.to_string(),
            points,
        });
    }

    fn data_range(&self, axis: usize) -> (f64, f64) {
        let forced = if axis == 0 { self.x_range } else { self.y_range };
        if let Some(r) = forced {
            return r;
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for s in &self.series {
            for &(x, y) in &s.points {
                let v = if axis == 0 { x } else { y };
                if v.is_finite() {
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
            // Stems are anchored at zero, so keep zero visible.
            if axis == 1 && s.kind == SeriesKind::Stems {
                lo = lo.min(0.0);
                hi = hi.max(0.0);
            }
        }
        if !lo.is_finite() || !hi.is_finite() {
            return (0.0, 1.0);
        }
        if lo == hi {
            return (lo - 0.5, hi + 0.5);
        }
        let pad = 0.04 * (hi - lo);
        (lo - pad, hi + pad)
    }

    /// Render to a standalone SVG document.
    pub fn render(&self) -> String {
        let (x_lo, x_hi) = self.data_range(0);
        let (y_lo, y_hi) = self.data_range(1);
        let px = |x: f64| MARGIN_LEFT + (x - x_lo) / (x_hi - x_lo) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT);
        let py = |y: f64| HEIGHT - MARGIN_BOTTOM - (y - y_lo) / (y_hi - y_lo) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM);

        let mut out = String::new();
        out.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
        ));
        out.push_str(&format!(
            "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
        ));
        out.push_str(&format!(
            "<text x=\"{:.2}\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">{}</text>\n",
            WIDTH / 2.0,
            escape(&self.title)
        ));

        // Axes frame.
        out.push_str(&format!(
            "<rect x=\"{MARGIN_LEFT}\" y=\"{MARGIN_TOP}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"black\"/>\n",
            WIDTH - MARGIN_LEFT - MARGIN_RIGHT,
            HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
        ));

        // Ticks and grid lines.
        for t in ticks(x_lo, x_hi) {
            let x = px(t);
            out.push_str(&format!(
                "<line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"#dddddd\"/>\n",
                MARGIN_TOP,
                HEIGHT - MARGIN_BOTTOM
            ));
            out.push_str(&format!(
                "<text x=\"{x:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
                HEIGHT - MARGIN_BOTTOM + 16.0,
                fmt_tick(t)
            ));
        }
        for t in ticks(y_lo, y_hi) {
            let y = py(t);
            out.push_str(&format!(
                "<line x1=\"{MARGIN_LEFT}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"#dddddd\"/>\n",
                WIDTH - MARGIN_RIGHT
            ));
            out.push_str(&format!(
                "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{}</text>\n",
                MARGIN_LEFT - 6.0,
                y + 4.0,
                fmt_tick(t)
            ));
        }

        // Axis labels.
        out.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
            (MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0,
            HEIGHT - 10.0,
            escape(&self.x_label)
        ));
        out.push_str(&format!(
            "<text x=\"14\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 {:.2})\">{}</text>\n",
            (MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) / 2.0,
            (MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) / 2.0,
            escape(&self.y_label)
        ));

        // Series.
        for (i, s) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            match s.kind {
                SeriesKind::Line => {
                    let pts: Vec<String> = s
                        .points
                        .iter()
                        .filter(|(x, y)| x.is_finite() && y.is_finite())
                        .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
                        .collect();
                    out.push_str(&format!(
                        "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
                        pts.join(" ")
                    ));
                }
                SeriesKind::Stems => {
                    let y0 = py(0.0f64.clamp(y_lo, y_hi));
                    for &(x, y) in &s.points {
                        if !(x.is_finite() && y.is_finite()) {
                            continue;
                        }
                        out.push_str(&format!(
                            "<line x1=\"{0:.2}\" y1=\"{y0:.2}\" x2=\"{0:.2}\" y2=\"{1:.2}\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
                            px(x),
                            py(y)
                        ));
                        out.push_str(&format!(
                            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>\n",
                            px(x),
                            py(y)
                        ));
                    }
                }
                SeriesKind::Markers => {
                    for &(x, y) in &s.points {
                        if !(x.is_finite() && y.is_finite()) {
                            continue;
                        }
                        out.push_str(&format!(
                            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
                            px(x),
                            py(y)
                        ));
                    }
                }
            }
            // Legend entry.
            let ly = MARGIN_TOP + 14.0 + 16.0 * i as f64;
            out.push_str(&format!(
                "<line x1=\"{:.2}\" y1=\"{ly:.2}\" x2=\"{:.2}\" y2=\"{ly:.2}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
                WIDTH - MARGIN_RIGHT - 130.0,
                WIDTH - MARGIN_RIGHT - 110.0
            ));
            out.push_str(&format!(
                "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
                WIDTH - MARGIN_RIGHT - 104.0,
                ly + 4.0,
                escape(&s.label)
            ));
        }

        // Embedded data: one comment block per series.
        for s in &self.series {
            let rows: Vec<String> = s
                .points
                .iter()
                .map(|&(x, y)| format!("{x},{y}"))
                .collect();
            out.push_str(&format!(
                "<!-- data series=\"{}\" x,y\n{}\n-->\n",
                escape(&s.label),
                rows.join("\n")
            ));
        }
        out.push_str("</svg>\n");
        out
    }
}

/// Square scatter of polynomial roots against the unit circle.
pub fn unit_circle_plot(title: &str, all_roots: &[Complex64], accepted: &[Complex64]) -> String {
    let mut extent = 1.25f64;
    for z in all_roots {
        if z.norm().is_finite() {
            extent = extent.max(z.norm() * 1.05);
        }
    }
    extent = extent.min(3.0); // far-out spurious roots would flatten the circle
    let size = 480.0;
    let half = size / 2.0;
    let scale = (half - 30.0) / extent;
    let px = |v: f64| half + v * scale;
    let py = |v: f64| half - v * scale;

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{size}\" height=\"{size}\" viewBox=\"0 0 {size} {size}\">\n"
    ));
    out.push_str(&format!(
        "<rect width=\"{size}\" height=\"{size}\" fill=\"white\"/>\n"
    ));
    out.push_str(&format!(
        "<text x=\"{half}\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">{}</text>\n",
        escape(title)
    ));
    // Axes through the origin plus the unit circle.
    out.push_str(&format!(
        "<line x1=\"{:.2}\" y1=\"{half}\" x2=\"{:.2}\" y2=\"{half}\" stroke=\"#bbbbbb\"/>\n",
        px(-extent),
        px(extent)
    ));
    out.push_str(&format!(
        "<line x1=\"{half}\" y1=\"{:.2}\" x2=\"{half}\" y2=\"{:.2}\" stroke=\"#bbbbbb\"/>\n",
        py(extent),
        py(-extent)
    ));
    out.push_str(&format!(
        "<circle cx=\"{half}\" cy=\"{half}\" r=\"{:.2}\" fill=\"none\" stroke=\"black\"/>\n",
        scale
    ));
    for z in all_roots {
        if !(z.re.is_finite() && z.im.is_finite()) {
            continue;
        }
        let (x, y) = (px(z.re.clamp(-extent, extent)), py(z.im.clamp(-extent, extent)));
        out.push_str(&format!(
            "<path d=\"M {x0:.2} {y0:.2} L {x1:.2} {y1:.2} M {x0:.2} {y1:.2} L {x1:.2} {y0:.2}\" stroke=\"{}\" stroke-width=\"1.5\"/>\n",
            PALETTE[0],
            x0 = x - 4.0,
            x1 = x + 4.0,
            y0 = y - 4.0,
            y1 = y + 4.0
        ));
    }
    for z in accepted {
        out.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"7\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\"/>\n",
            px(z.re),
            py(z.im),
            PALETTE[1]
        ));
    }
    let all: Vec<String> = all_roots.iter().map(|z| format!("{},{}", z.re, z.im)).collect();
    let acc: Vec<String> = accepted.iter().map(|z| format!("{},{}", z.re, z.im)).collect();
    out.push_str(&format!(
        "<!-- data series=\"roots\" re,im\n{}\n-->\n<!-- data series=\"accepted\" re,im\n{}\n-->\n",
        all.join("\n"),
        acc.join("\n")
    ));
    out.push_str("</svg>\n");
    out
}

/// Tick positions: a 1/2/5 ladder sized to give roughly six intervals.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let range = hi - lo;
    if !(range.is_finite() && range > 0.0) {
        return vec![lo];
    }
    let raw = range / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = if raw / mag >= 5.0 {
        10.0 * mag
    } else if raw / mag >= 2.0 {
        5.0 * mag
    } else if raw / mag >= 1.0 {
        2.0 * mag
    } else {
        mag
    };
    let mut out = Vec::new();
    let mut k = (lo / step).ceil() as i64;
    while (k as f64) * step <= hi + 1e-12 * range {
        out.push(k as f64 * step);
        k += 1;
    }
    out
}

/// Tick label: fixed precision with trailing zeros trimmed, so grid-aligned
/// values print cleanly instead of exposing binary rounding.
fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if v.abs() >= 1e5 || v.abs() < 1e-4 {
        return format!("{v:e}");
    }
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

/// Escape text for SVG content.
fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
