//! Hand-written SVG figures. Every figure is a pure function of its data, with fixed
//! number formatting, so reruns produce identical bytes.

use spellmap::mca::ModalityPoint;
use spellmap::profiles::{NeighborDistanceField, QualDistribution};
use spellmap::som::{GridTopology, SomMap};
use std::fmt::Write as _;

const PALETTE: [&str; 10] = [
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac",
];
const CELL: f64 = 48.0;
const MARGIN: f64 = 30.0;

pub fn class_color(class: usize) -> &'static str {
    PALETTE[(class.max(1) - 1) % PALETTE.len()]
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

struct Svg {
    body: String,
    width: f64,
    height: f64,
}

impl Svg {
    fn new(width: f64, height: f64) -> Self {
        Self {
            body: String::new(),
            width,
            height,
        }
    }

    fn text(&mut self, x: f64, y: f64, size: f64, anchor: &str, s: &str) {
        let _ = writeln!(
            self.body,
            r#"<text x="{x:.2}" y="{y:.2}" font-size="{size:.1}" text-anchor="{anchor}">{}</text>"#,
            esc(s)
        );
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str, extra: &str) {
        let _ = writeln!(self.body, r#"<rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}" fill="{fill}" {extra}/>"#);
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str) {
        let _ = writeln!(
            self.body,
            r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{stroke}" stroke-width="1"/>"#
        );
    }

    fn finish(self, title: &str) -> String {
        format!(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.0} {h:.0}\" font-family=\"sans-serif\">\n<title>{t}</title>\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{b}</svg>\n",
            w = self.width,
            h = self.height,
            t = esc(title),
            b = self.body
        )
    }
}

fn cell_origin(t: &GridTopology, u: usize) -> (f64, f64) {
    let (r, c) = t.coords(u);
    (MARGIN + c as f64 * CELL, MARGIN + r as f64 * CELL)
}

/// Each unit's code vector as a small line profile over a tint of its broad class.
pub fn codevector_grid(map: &SomMap, unit_labels: &[usize], names: &[&str]) -> String {
    let t = map.topology;
    let (lo, hi) = map
        .codes
        .as_slice()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let legend_h = 16.0 * names.len().div_ceil(5) as f64 + 10.0;
    let mut svg = Svg::new(2.0 * MARGIN + t.cols as f64 * CELL, 2.0 * MARGIN + t.rows as f64 * CELL + legend_h);
    for u in 0..map.units() {
        let (x, y) = cell_origin(&t, u);
        svg.rect(x, y, CELL, CELL, class_color(unit_labels[u]), r##"fill-opacity="0.25" stroke="#888" stroke-width="0.5""##);
        let code = map.code(u);
        let step = (CELL - 8.0) / (code.len().max(2) - 1) as f64;
        let mut pts = String::new();
        for (j, v) in code.iter().enumerate() {
            let px = x + 4.0 + j as f64 * step;
            let py = y + CELL - 4.0 - (v - lo) / span * (CELL - 8.0);
            let _ = write!(pts, "{px:.2},{py:.2} ");
        }
        let _ = writeln!(
            svg.body,
            r#"<polyline class="profile" points="{}" fill="none" stroke="black" stroke-width="1"/>"#,
            pts.trim_end()
        );
    }
    let base = 2.0 * MARGIN + t.rows as f64 * CELL - 10.0;
    for (j, n) in names.iter().enumerate() {
        let (row, col) = (j / 5, j % 5);
        svg.text(MARGIN + col as f64 * 90.0, base + 16.0 * row as f64 + 12.0, 11.0, "start", &format!("{}. {n}", j + 1));
    }
    svg.finish("Code-vector profiles (standardized, variables left to right)")
}

/// The grid colored by broad class, with the class number and record count of every unit.
pub fn class_grid(t: &GridTopology, unit_labels: &[usize], unit_counts: &[usize]) -> String {
    let mut svg = Svg::new(2.0 * MARGIN + t.cols as f64 * CELL, 2.0 * MARGIN + t.rows as f64 * CELL);
    for u in 0..t.units() {
        let (x, y) = cell_origin(t, u);
        let class = unit_labels[u];
        let _ = writeln!(
            svg.body,
            r#"<rect class="unit" data-class="{class}" x="{x:.2}" y="{y:.2}" width="{CELL:.2}" height="{CELL:.2}" fill="{}" stroke="white" stroke-width="1"/>"#,
            class_color(class)
        );
        svg.text(x + CELL / 2.0, y + CELL / 2.0 - 2.0, 13.0, "middle", &class.to_string());
        svg.text(x + CELL / 2.0, y + CELL / 2.0 + 13.0, 10.0, "middle", &format!("n={}", unit_counts[u]));
    }
    svg.finish("Broad classes on the map")
}

/// Every unit as an octagon whose vertex toward each neighbor is pulled in proportionally
/// to the code-vector distance to that neighbor, so wide gaps mark class boundaries.
pub fn distance_map(t: &GridTopology, field: &NeighborDistanceField, unit_labels: &[usize]) -> String {
    const DIRS: [(i64, i64); 8] = [(-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1)];
    let mut svg = Svg::new(2.0 * MARGIN + t.cols as f64 * CELL, 2.0 * MARGIN + t.rows as f64 * CELL);
    for u in 0..t.units() {
        let (x, y) = cell_origin(t, u);
        let (cx, cy) = (x + CELL / 2.0, y + CELL / 2.0);
        let (r, c) = t.coords(u);
        let mut pts = String::new();
        for (dr, dc) in DIRS {
            let (nr, nc) = (r as i64 + dr, c as i64 + dc);
            let inside = nr >= 0 && nc >= 0 && (nr as usize) < t.rows && (nc as usize) < t.cols;
            let pull = if inside && field.max_distance > 0.0 {
                let v = t.unit(nr as usize, nc as usize);
                0.9 * field.distance(u, v).unwrap_or(0.0) / field.max_distance
            } else {
                0.0
            };
            let px = cx + dc as f64 * CELL / 2.0 * (1.0 - pull);
            let py = cy + dr as f64 * CELL / 2.0 * (1.0 - pull);
            let _ = write!(pts, "{px:.2},{py:.2} ");
        }
        let _ = writeln!(
            svg.body,
            r#"<polygon class="unit" points="{}" fill="{}" stroke="black" stroke-width="0.5"/>"#,
            pts.trim_end(),
            class_color(unit_labels[u])
        );
    }
    svg.finish("Neighbor distances between code vectors")
}

/// Stacked bars of modality frequencies, one per class and one for the population.
pub fn qualitative_bars(dists: &[QualDistribution]) -> String {
    let variable = dists.first().map(|d| d.variable.clone()).unwrap_or_default();
    let modalities = dists.first().map(|d| d.modalities.clone()).unwrap_or_default();
    let (label_w, bar_w, bar_h) = (90.0, 420.0, 22.0);
    let legend_y = MARGIN + dists.len() as f64 * (bar_h + 8.0) + 10.0;
    let mut svg = Svg::new(2.0 * MARGIN + label_w + bar_w, legend_y + 20.0 * modalities.len() as f64 + MARGIN);
    for (i, d) in dists.iter().enumerate() {
        let y = MARGIN + i as f64 * (bar_h + 8.0);
        svg.text(MARGIN + label_w - 6.0, y + bar_h * 0.7, 12.0, "end", &d.scope.label());
        if d.empty {
            svg.rect(MARGIN + label_w, y, bar_w, bar_h, "none", r##"stroke="#999" stroke-dasharray="4 2""##);
            continue;
        }
        let mut x = MARGIN + label_w;
        for (m, f) in d.frequencies.iter().enumerate() {
            let w = f * bar_w;
            svg.rect(x, y, w, bar_h, PALETTE[m % PALETTE.len()], r#"stroke="white" stroke-width="0.5""#);
            if *f >= 0.08 {
                svg.text(x + w / 2.0, y + bar_h * 0.7, 10.0, "middle", &format!("{:.0}%", f * 100.0));
            }
            x += w;
        }
    }
    for (m, name) in modalities.iter().enumerate() {
        let y = legend_y + m as f64 * 20.0;
        svg.rect(MARGIN + label_w, y, 14.0, 14.0, PALETTE[m % PALETTE.len()], "");
        svg.text(MARGIN + label_w + 20.0, y + 11.0, 12.0, "start", name);
    }
    svg.finish(&format!("{variable} by broad class"))
}

/// Modality points on one factorial plane.
pub fn mca_plane(points: &[ModalityPoint], axes: (usize, usize), shares: (f64, f64)) -> String {
    let size = 560.0;
    let pad = 60.0;
    let bound = |f: fn(&ModalityPoint) -> f64| {
        let (lo, hi) = points.iter().map(f).fold((0.0f64, 0.0f64), |(a, b), v| (a.min(v), b.max(v)));
        let span = if hi > lo { hi - lo } else { 1.0 };
        (lo - 0.05 * span, hi + 0.05 * span)
    };
    let (x0, x1) = bound(|p| p.x);
    let (y0, y1) = bound(|p| p.y);
    let sx = |x: f64| pad + (x - x0) / (x1 - x0) * (size - 2.0 * pad);
    let sy = |y: f64| size - pad - (y - y0) / (y1 - y0) * (size - 2.0 * pad);
    let mut svg = Svg::new(size, size);
    svg.line(sx(x0), sy(0.0), sx(x1), sy(0.0), "#999");
    svg.line(sx(0.0), sy(y0), sx(0.0), sy(y1), "#999");
    svg.text(size - pad, sy(0.0) - 6.0, 12.0, "end", &format!("axis {} ({:.1}%)", axes.0, shares.0 * 100.0));
    svg.text(sx(0.0) + 6.0, pad - 10.0, 12.0, "start", &format!("axis {} ({:.1}%)", axes.1, shares.1 * 100.0));
    let vars: Vec<&str> = {
        let mut v: Vec<&str> = Vec::new();
        for p in points {
            if !v.contains(&p.variable.as_str()) {
                v.push(&p.variable);
            }
        }
        v
    };
    for p in points {
        let color = PALETTE[vars.iter().position(|v| *v == p.variable).unwrap_or(0) % PALETTE.len()];
        let (x, y) = (sx(p.x), sy(p.y));
        let _ = writeln!(
            svg.body,
            r#"<circle class="modality" cx="{x:.2}" cy="{y:.2}" r="3.5" fill="{color}"/>"#
        );
        svg.text(x + 5.0, y - 5.0, 10.0, "start", &format!("{}:{}", p.variable, p.modality));
    }
    svg.finish(&format!("Modalities on axes {} and {}", axes.0, axes.1))
}
