//! SVG picture of the normal form.

use std::collections::BTreeMap;
use std::fmt::Write;

use super::{FlatSurface, PieceKind, Side};

const SIZE: f64 = 640.0;
const MARGIN: f64 = 40.0;

/// Pieces are shaded by torus, glued edge pairs share a label and the slit is drawn in red.
pub fn render_svg(f: &FlatSurface) -> String {
    let polys: Vec<[(f64, f64); 4]> = f.pieces.iter().map(|p| p.corners().map(|c| c.to_f64())).collect();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in polys.iter().flatten() {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let scale = (SIZE - 2.0 * MARGIN) / (x1 - x0).max(y1 - y0).max(1e-12);
    let map = |(x, y): (f64, f64)| (MARGIN + (x - x0) * scale, SIZE - MARGIN - (y - y0) * scale);
    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#);
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (p, poly) in f.pieces.iter().zip(&polys) {
        let fill = if p.kind.in_t1() { "#cfe3f7" } else { "#f7e3c4" };
        let pts: Vec<String> = poly.iter().map(|&c| {
            let (x, y) = map(c);
            format!("{x:.2},{y:.2}")
        }).collect();
        let _ = writeln!(out, r#"<polygon points="{}" fill="{fill}" stroke="black" stroke-width="1"/>"#, pts.join(" "));
        let cx = poly.iter().map(|c| c.0).sum::<f64>() / 4.0;
        let cy = poly.iter().map(|c| c.1).sum::<f64>() / 4.0;
        let (x, y) = map((cx, cy));
        let _ = writeln!(out, r#"<text x="{x:.2}" y="{y:.2}" font-size="14" text-anchor="middle">{:?}</text>"#, p.kind);
    }
    let mut labels: BTreeMap<(usize, Side), usize> = BTreeMap::new();
    for (&a, &b) in &f.gluing {
        if !labels.contains_key(&a) {
            let n = labels.len() / 2 + 1;
            labels.insert(a, n);
            labels.insert(b, n);
        }
    }
    for (&(i, side), &n) in &labels {
        let c = polys[i];
        let (p, q) = match side {
            Side::Bottom => (c[0], c[1]),
            Side::Right => (c[1], c[2]),
            Side::Top => (c[3], c[2]),
            Side::Left => (c[0], c[3]),
        };
        let (mx, my) = map(((p.0 + q.0) / 2.0, (p.1 + q.1) / 2.0));
        let _ = writeln!(out, r##"<text x="{mx:.2}" y="{my:.2}" font-size="11" fill="#555">{n}</text>"##);
    }
    if let Some(r1) = f.piece_index(PieceKind::R1) {
        let c = polys[r1];
        let (ax, ay) = map(c[1]);
        let (bx, by) = map(c[2]);
        let _ = writeln!(out, r#"<line x1="{ax:.2}" y1="{ay:.2}" x2="{bx:.2}" y2="{by:.2}" stroke="red" stroke-width="3"/>"#);
    }
    out.push_str("</svg>\n");
    out
}
