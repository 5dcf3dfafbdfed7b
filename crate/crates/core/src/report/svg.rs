use std::fmt::Write;

use super::{Panel, PanelData, ReportError, SpectrumReport};

const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 180.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 60.0;
/// Fraction of the data span added on each side of an axis.
const PAD: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SvgOptions {
    pub width: u32,
    pub height: u32,
    /// Plot iteration counts on a linear rather than log y axis.
    pub iterations_linear_y: bool,
}

impl Default for SvgOptions {
    fn default() -> Self {
        SvgOptions { width: 800, height: 500, iterations_linear_y: false }
    }
}

struct Axis {
    log: bool,
    /// Range in transformed (log10 when `log`) units.
    lo: f64,
    hi: f64,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Axis {
        let t: Vec<f64> = values.map(|v| if log { v.log10() } else { v }).collect();
        let min = t.iter().copied().fold(f64::INFINITY, f64::min);
        let max = t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = max - min;
        let pad = if span > 0.0 {
            PAD * span
        } else if log {
            0.5
        } else {
            (min.abs() * PAD).max(0.5)
        };
        Axis { log, lo: min - pad, hi: max + pad }
    }

    fn frac(&self, v: f64) -> f64 {
        let t = if self.log { v.log10() } else { v };
        (t - self.lo) / (self.hi - self.lo)
    }

    /// Tick positions in data units.
    fn ticks(&self) -> Vec<f64> {
        if self.log {
            let first = self.lo.ceil() as i32;
            let last = self.hi.floor() as i32;
            if last - first >= 1 {
                let step = ((last - first) / 8 + 1) as usize;
                return (first..=last).step_by(step).map(|k| 10f64.powi(k)).collect();
            }
            return nice_ticks(self.lo, self.hi).into_iter().map(|t| 10f64.powf(t)).collect();
        }
        nice_ticks(self.lo, self.hi)
    }
}

/// Multiples of a 1-2-5 step covering roughly five intervals of `[lo, hi]`.
fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].into_iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let mut out = Vec::new();
    let mut k = (lo / step).ceil();
    while k * step <= hi {
        // avoid printing -0
        out.push(if k == 0.0 { 0.0 } else { k * step });
        k += 1.0;
    }
    out
}

fn tick_label(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 {
        "0".into()
    } else if !(1e-3..1e5).contains(&a) {
        let s = format!("{v:.1e}");
        s.replace(".0e", "e")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// 64-bit FNV-1a. Stable across platforms and releases, unlike std's hasher.
fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Series colour derived from the label alone.
pub(crate) fn label_color(label: &str) -> String {
    let hue = (fnv1a(label) % 360) as f64;
    let (s, l) = (0.65, 0.42);
    let c = (1.0 - (2.0 * l - 1.0f64).abs()) * s;
    let hp = hue / 60.0;
    let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = l - c / 2.0;
    let to = |v: f64| ((v + m) * 255.0).round() as u8;
    format!("#{:02x}{:02x}{:02x}", to(r), to(g), to(b))
}

/// Renders one panel as a standalone SVG 1.1 document.
///
/// Output depends only on the report, panel and options.
pub fn render_svg(report: &SpectrumReport, panel: Panel, options: &SvgOptions) -> Result<String, ReportError> {
    let data = report.panel(panel, options.iterations_linear_y);
    if data.series.is_empty() {
        return Err(ReportError::EmptyPanel(panel));
    }
    Ok(draw(&data, options))
}

fn draw(data: &PanelData, opt: &SvgOptions) -> String {
    let (w, h) = (opt.width.max(400) as f64, opt.height.max(300) as f64);
    let plot_w = w - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = h - MARGIN_TOP - MARGIN_BOTTOM;
    let all = || data.series.iter().flat_map(|s| s.points.iter());
    let xa = Axis::fit(all().map(|p| p.0), data.x_log);
    let ya = Axis::fit(all().map(|p| p.1), data.y_log);
    let px = |x: f64| MARGIN_LEFT + xa.frac(x) * plot_w;
    let py = |y: f64| MARGIN_TOP + (1.0 - ya.frac(y)) * plot_h;

    let mut s = String::new();
    // fmt::Write on String cannot fail
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, "<title>{}</title>", data.panel);
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r##"<rect id="plot-area" x="{MARGIN_LEFT:.2}" y="{MARGIN_TOP:.2}" width="{plot_w:.2}" height="{plot_h:.2}" fill="none" stroke="#444"/>"##
    );

    let bottom = MARGIN_TOP + plot_h;
    let _ = writeln!(s, r##"<g class="x-ticks" stroke="#ccc">"##);
    for t in xa.ticks() {
        let x = px(t);
        let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{MARGIN_TOP:.2}" x2="{x:.2}" y2="{bottom:.2}"/>"#);
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r##"<g class="y-ticks" stroke="#ccc">"##);
    for t in ya.ticks() {
        let y = py(t);
        let right = MARGIN_LEFT + plot_w;
        let _ = writeln!(s, r#"<line x1="{MARGIN_LEFT:.2}" y1="{y:.2}" x2="{right:.2}" y2="{y:.2}"/>"#);
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r#"<g class="tick-labels">"#);
    for t in xa.ticks() {
        let _ =
            writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, px(t), bottom + 16.0, tick_label(t));
    }
    for t in ya.ticks() {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            MARGIN_LEFT - 6.0,
            py(t) + 4.0,
            tick_label(t)
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        h - 16.0,
        escape(&data.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0,
        escape(&data.y_label)
    );

    for series in &data.series {
        let color = label_color(&series.label);
        let label = escape(&series.label);
        let _ = writeln!(s, r#"<g class="series" data-label="{label}" stroke="{color}" fill="{color}">"#);
        if series.points.len() > 1 {
            let pts: Vec<String> = series.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
            let _ = writeln!(s, r#"<polyline fill="none" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
        }
        for &(x, y) in &series.points {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3.5"><title>{label}: x={x}, y={y}</title></circle>"#,
                px(x),
                py(y)
            );
        }
        let _ = writeln!(s, "</g>");
    }

    let mut legend: Vec<&str> = data.series.iter().map(|s| s.label.as_str()).collect();
    legend.sort_unstable();
    let lx = MARGIN_LEFT + plot_w + 16.0;
    let _ = writeln!(s, r#"<g class="legend">"#);
    for (i, label) in legend.iter().enumerate() {
        let y = MARGIN_TOP + 10.0 + 18.0 * i as f64;
        let _ = writeln!(s, r#"<rect x="{lx:.2}" y="{:.2}" width="10" height="10" fill="{}"/>"#, y - 9.0, label_color(label));
        let _ = writeln!(s, r#"<text x="{:.2}" y="{y:.2}">{}</text>"#, lx + 16.0, escape(label));
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    s
}
