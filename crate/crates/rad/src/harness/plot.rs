//! Dependency-free SVG line charts: one curve per run kind with a
//! min/max envelope across seeds.

use std::fmt::Write as _;

/// One named curve. Each point is `(x, Some((mean, lo, hi)))`, or `None`
/// where no value exists — gaps split the drawn line.
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, Option<(f64, f64, f64)>)>,
}

const WIDTH: f64 = 880.0;
const HEIGHT: f64 = 520.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 700.0;
const TOP: f64 = 46.0;
const BOTTOM: f64 = 470.0;

/// Color-blind-friendly palette; cycles if there are more series.
const PALETTE: [&str; 11] = [
    "#0072b2", "#d55e00", "#009e73", "#cc79a7", "#e69f00", "#56b4e9", "#f0e442", "#8b4513",
    "#666666", "#9467bd", "#17becf",
];

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

struct Scale {
    min: f64,
    max: f64,
    lo_px: f64,
    hi_px: f64,
}

impl Scale {
    fn to_px(&self, v: f64) -> f64 {
        if self.max == self.min {
            (self.lo_px + self.hi_px) / 2.0
        } else {
            self.lo_px + (v - self.min) / (self.max - self.min) * (self.hi_px - self.lo_px)
        }
    }

    fn ticks(&self, n: usize) -> Vec<f64> {
        (0..=n)
            .map(|i| self.min + (self.max - self.min) * i as f64 / n as f64)
            .collect()
    }
}

fn path_from(points: &[(f64, f64)]) -> String {
    let mut d = String::new();
    for (i, (x, y)) in points.iter().enumerate() {
        let cmd = if i == 0 { 'M' } else { 'L' };
        write!(d, "{cmd}{x:.2},{y:.2} ").expect("writing to String cannot fail");
    }
    d.trim_end().to_string()
}

/// Renders the chart as a standalone SVG document.
pub fn render_metric_svg(title: &str, x_label: &str, series: &[Series]) -> String {
    // Data ranges over every defined point and its envelope.
    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for s in series {
        for &(x, v) in &s.points {
            if let Some((mean, lo, hi)) = v {
                x_min = x_min.min(x);
                x_max = x_max.max(x);
                y_min = y_min.min(lo.min(mean));
                y_max = y_max.max(hi.max(mean));
            }
        }
    }
    if !x_min.is_finite() {
        x_min = 0.0;
        x_max = 1.0;
        y_min = 0.0;
        y_max = 1.0;
    }
    if y_max == y_min {
        y_min -= 0.05;
        y_max += 0.05;
    } else {
        let pad = (y_max - y_min) * 0.05;
        y_min -= pad;
        y_max += pad;
    }

    let xs = Scale { min: x_min, max: x_max, lo_px: LEFT, hi_px: RIGHT };
    let ys = Scale { min: y_min, max: y_max, lo_px: BOTTOM, hi_px: TOP };

    let mut svg = String::new();
    let _ = write!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">"#
    );
    let _ = write!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = write!(
        svg,
        r##"<text x="{:.0}" y="24" text-anchor="middle" font-size="17" fill="#222">{title}</text>"##,
        (LEFT + RIGHT) / 2.0
    );

    // Grid and tick labels.
    for &t in &ys.ticks(5) {
        let y = ys.to_px(t);
        let _ = write!(
            svg,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{RIGHT}" y2="{y:.2}" stroke="#ddd" stroke-width="1"/>"##
        );
        let _ = write!(
            svg,
            r##"<text x="{:.0}" y="{:.2}" text-anchor="end" font-size="12" fill="#444">{}</text>"##,
            LEFT - 8.0,
            y + 4.0,
            fmt_tick(t)
        );
    }
    let n_x_ticks = ((x_max - x_min).round() as usize).clamp(1, 10);
    for &t in &xs.ticks(n_x_ticks) {
        let x = xs.to_px(t);
        let _ = write!(
            svg,
            r##"<line x1="{x:.2}" y1="{BOTTOM}" x2="{x:.2}" y2="{:.2}" stroke="#444" stroke-width="1"/>"##,
            BOTTOM + 5.0
        );
        let _ = write!(
            svg,
            r##"<text x="{x:.2}" y="{:.2}" text-anchor="middle" font-size="12" fill="#444">{}</text>"##,
            BOTTOM + 20.0,
            fmt_tick(t)
        );
    }
    let _ = write!(
        svg,
        r##"<line x1="{LEFT}" y1="{BOTTOM}" x2="{RIGHT}" y2="{BOTTOM}" stroke="#444" stroke-width="1"/>"##
    );
    let _ = write!(
        svg,
        r##"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{BOTTOM}" stroke="#444" stroke-width="1"/>"##
    );
    let _ = write!(
        svg,
        r##"<text x="{:.0}" y="{:.0}" text-anchor="middle" font-size="13" fill="#222">{x_label}</text>"##,
        (LEFT + RIGHT) / 2.0,
        HEIGHT - 12.0
    );

    // Envelope bands first so every line draws on top of every band.
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        for segment in segments(&s.points) {
            if segment.len() < 2 {
                continue;
            }
            let mut outline: Vec<(f64, f64)> = segment
                .iter()
                .map(|&(x, (_, lo, _))| (xs.to_px(x), ys.to_px(lo)))
                .collect();
            outline.extend(
                segment.iter().rev().map(|&(x, (_, _, hi))| (xs.to_px(x), ys.to_px(hi))),
            );
            let _ = write!(
                svg,
                r#"<path d="{} Z" fill="{color}" fill-opacity="0.14" stroke="none"/>"#,
                path_from(&outline)
            );
        }
    }
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        for segment in segments(&s.points) {
            let px: Vec<(f64, f64)> = segment
                .iter()
                .map(|&(x, (mean, _, _))| (xs.to_px(x), ys.to_px(mean)))
                .collect();
            if px.len() == 1 {
                let _ = write!(
                    svg,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                    px[0].0, px[0].1
                );
            } else {
                let _ = write!(
                    svg,
                    r#"<path d="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
                    path_from(&px)
                );
            }
        }
    }

    // Legend beside the plot.
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let y = TOP + 14.0 + i as f64 * 20.0;
        let _ = write!(
            svg,
            r#"<line x1="{:.0}" y1="{y:.1}" x2="{:.0}" y2="{y:.1}" stroke="{color}" stroke-width="3"/>"#,
            RIGHT + 14.0,
            RIGHT + 38.0
        );
        let _ = write!(
            svg,
            r##"<text x="{:.0}" y="{:.1}" font-size="12" fill="#222">{}</text>"##,
            RIGHT + 44.0,
            y + 4.0,
            s.name
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Maximal runs of consecutive defined points.
fn segments(points: &[(f64, Option<(f64, f64, f64)>)]) -> Vec<Vec<(f64, (f64, f64, f64))>> {
    let mut out = Vec::new();
    let mut current = Vec::new();
    for &(x, v) in points {
        match v {
            Some(v) => current.push((x, v)),
            None => {
                if !current.is_empty() {
                    out.push(std::mem::take(&mut current));
                }
            }
        }
    }
    if !current.is_empty() {
        out.push(current);
    }
    out
}
