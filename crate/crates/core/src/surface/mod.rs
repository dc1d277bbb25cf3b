//! The normal form of a split surface and an independent geometric oracle for the
//! twist machinery: exact straight-line tracing, saddle-connection search, first-return
//! rotation numbers, exchanged-area overlays and floating-point orbit statistics.
//!
//! Placement: `R1` has corners `−v1, 0, w, w − v1`; `R2` is glued to its right edge along
//! the slit; `C1` and `C2` hang below `R1` and `R2`. Each piece is a parallelogram
//! `origin + s·a + t·b` with `(s, t) ∈ [0, 1]²`, and every gluing identifies opposite
//! sides of two pieces with the same edge parameter.

mod geom;
mod overlay;
mod probe;
mod svg;
mod trace;

use std::collections::BTreeMap;

use serde::Serialize;

pub use geom::{convex_intersection, polygon_area};
pub use overlay::{exchange_overlay, OverlayReport};
pub use probe::{ergodicity_probe, write_csv, FloatSurface, OrbitStats, ProbeConfig, ProbeResult};
pub use svg::render_svg;
pub use trace::{
    first_return_rotation, saddle_connection_between, saddle_connection_exists, trace, twisted_slit_exists, Point, TraceEnd, TraceResult,
};

use crate::error::{Error, Result};
use crate::fieldgeom::{cross, QuadExt, Vec2};
use crate::splitting::{Splitting, Stratum};
use crate::twist::{frames, PartnerPair};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum PieceKind {
    R1,
    C1,
    R2,
    C2,
}

impl PieceKind {
    /// Part of the first torus.
    pub fn in_t1(self) -> bool {
        matches!(self, PieceKind::R1 | PieceKind::C1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Side {
    /// `t = 0`
    Bottom,
    /// `s = 1`
    Right,
    /// `t = 1`
    Top,
    /// `s = 0`
    Left,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Bottom => Side::Top,
            Side::Top => Side::Bottom,
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Piece {
    pub kind: PieceKind,
    pub origin: Vec2,
    pub a: Vec2,
    pub b: Vec2,
}

impl Piece {
    pub fn point(&self, s: &QuadExt, t: &QuadExt) -> Vec2 {
        &(&self.origin + &self.a.scale(s)) + &self.b.scale(t)
    }

    pub fn corners(&self) -> [Vec2; 4] {
        let o = &self.origin;
        [o.clone(), o + &self.a, &(o + &self.a) + &self.b, o + &self.b]
    }

    pub fn area(&self) -> QuadExt {
        cross(&self.a, &self.b)
    }

    /// Local velocity `(α, β)` with `h = α·a + β·b`.
    pub fn local(&self, h: &Vec2) -> (QuadExt, QuadExt) {
        let det = self.area();
        (cross(h, &self.b) / &det, cross(&self.a, h) / &det)
    }

    fn edge_vector(&self, side: Side) -> &Vec2 {
        match side {
            Side::Bottom | Side::Top => &self.a,
            Side::Left | Side::Right => &self.b,
        }
    }

    fn edge_start(&self, side: Side) -> Vec2 {
        match side {
            Side::Bottom | Side::Left => self.origin.clone(),
            Side::Top => &self.origin + &self.b,
            Side::Right => &self.origin + &self.a,
        }
    }
}

/// A corner `(piece, s ∈ {0,1}, t ∈ {0,1})`.
pub type Corner = (usize, u8, u8);

#[derive(Clone, Debug)]
pub struct FlatSurface {
    pub splitting: Splitting,
    pub pair: PartnerPair,
    pub pieces: Vec<Piece>,
    /// `(piece, side) ↦ (piece, side)`, symmetric.
    pub gluing: BTreeMap<(usize, Side), (usize, Side)>,
    /// Zero of each corner: `0` is the start of the slit, `1` its end (equal in H(2)).
    pub vertex_class: BTreeMap<Corner, usize>,
    pub n_zeros: usize,
}

impl FlatSurface {
    pub fn piece_index(&self, kind: PieceKind) -> Option<usize> {
        self.pieces.iter().position(|p| p.kind == kind)
    }

    pub fn flat_area(&self) -> QuadExt {
        self.pieces.iter().fold(QuadExt::zero(), |acc, p| acc + p.area())
    }

    /// Translation carrying edge `(i, side)` onto its partner; `None` if the edge is free.
    pub fn edge_translation(&self, i: usize, side: Side) -> Option<Vec2> {
        let &(j, side2) = self.gluing.get(&(i, side))?;
        Some(&self.pieces[j].edge_start(side2) - &self.pieces[i].edge_start(side))
    }

    /// Cone angles at the zeroes, as multiples of `π` (floating point sum of corner angles).
    pub fn cone_angles_over_pi(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_zeros];
        for (&(i, s, t), &cls) in &self.vertex_class {
            let p = &self.pieces[i];
            let (ax, ay) = p.a.to_f64();
            let (bx, by) = p.b.to_f64();
            let (u, v) = match (s, t) {
                (0, 0) => ((ax, ay), (bx, by)),
                (1, 0) => ((-ax, -ay), (bx, by)),
                (1, 1) => ((-ax, -ay), (-bx, -by)),
                _ => ((ax, ay), (-bx, -by)),
            };
            let ang = (u.0 * v.1 - u.1 * v.0).abs().atan2(u.0 * v.0 + u.1 * v.1);
            out[cls] += ang / std::f64::consts::PI;
        }
        out
    }

    /// Exact structural checks: flat area, translation gluings, disjoint pieces.
    pub fn check_invariants(&self) -> Result<()> {
        if self.flat_area() != self.splitting.total_area() {
            return Err(Error::InvalidResult("flat area differs from A1 + A2".into()));
        }
        for (&(i, side), &(j, side2)) in &self.gluing {
            if side2 != side.opposite() || self.pieces[i].edge_vector(side) != self.pieces[j].edge_vector(side2) {
                return Err(Error::InvalidResult(format!("gluing {i}:{side:?} -> {j}:{side2:?} is not a translation")));
            }
        }
        for i in 0..self.pieces.len() {
            for j in i + 1..self.pieces.len() {
                let a = geom::convex_intersection(&self.pieces[i].corners(), &self.pieces[j].corners());
                if !geom::polygon_area(&a).is_zero() {
                    return Err(Error::InvalidResult(format!("pieces {i} and {j} overlap")));
                }
            }
        }
        Ok(())
    }
}

/// Builds the normal form of `S` cut along the pair's cylinders.
pub fn build_normal_form(s: &Splitting, pair: &PartnerPair) -> Result<FlatSurface> {
    let pair = crate::twist::make_pair(s, &pair.v1, &pair.v2)?;
    let (f1, f2) = frames(s, &pair)?;
    let (v1, v2, w) = (&pair.v1, &pair.v2, &s.w);
    let mut pieces = vec![
        Piece { kind: PieceKind::R1, origin: -v1, a: v1.clone(), b: w.clone() },
        Piece { kind: PieceKind::C1, origin: &(-v1) - &f1.v0, a: v1.clone(), b: f1.v0.clone() },
        Piece { kind: PieceKind::R2, origin: Vec2::zero(), a: v2.clone(), b: w.clone() },
    ];
    let h2 = s.stratum == Stratum::H2;
    if !h2 {
        // choose the representative of v0 that keeps C2 to the right of the slit
        let v0 = if cross(&f2.v0, w).signum() > 0 { &f2.v0 - v2 } else { f2.v0.clone() };
        pieces.push(Piece { kind: PieceKind::C2, origin: -&v0, a: v2.clone(), b: v0 });
    }
    let (r1, c1, r2) = (0usize, 1usize, 2usize);
    let mut glue = vec![
        ((r1, Side::Right), (r2, Side::Left)),
        ((r2, Side::Right), (r1, Side::Left)),
        ((r1, Side::Top), (c1, Side::Bottom)),
        ((c1, Side::Top), (r1, Side::Bottom)),
        ((c1, Side::Left), (c1, Side::Right)),
    ];
    if h2 {
        glue.push(((r2, Side::Top), (r2, Side::Bottom)));
    } else {
        let c2 = 3usize;
        glue.push(((r2, Side::Top), (c2, Side::Bottom)));
        glue.push(((c2, Side::Top), (r2, Side::Bottom)));
        glue.push(((c2, Side::Left), (c2, Side::Right)));
    }
    let mut gluing = BTreeMap::new();
    for (x, y) in glue {
        gluing.insert(x, y);
        gluing.insert(y, x);
    }
    let (vertex_class, n_zeros) = classify_vertices(pieces.len(), &gluing, r1);
    let surf = FlatSurface { splitting: s.clone(), pair, pieces, gluing, vertex_class, n_zeros };
    surf.check_invariants()?;
    Ok(surf)
}

fn classify_vertices(n: usize, gluing: &BTreeMap<(usize, Side), (usize, Side)>, r1: usize) -> (BTreeMap<Corner, usize>, usize) {
    let corners: Vec<Corner> = (0..n).flat_map(|i| [(i, 0, 0), (i, 1, 0), (i, 1, 1), (i, 0, 1)]).collect();
    let idx = |c: &Corner| corners.iter().position(|x| x == c).expect("corner");
    let mut parent: Vec<usize> = (0..corners.len()).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    let ends = |side: Side| -> [(u8, u8); 2] {
        match side {
            Side::Bottom => [(0, 0), (1, 0)],
            Side::Top => [(0, 1), (1, 1)],
            Side::Left => [(0, 0), (0, 1)],
            Side::Right => [(1, 0), (1, 1)],
        }
    };
    for (&(i, si), &(j, sj)) in gluing {
        for (a, b) in ends(si).iter().zip(ends(sj).iter()) {
            let x = find(&mut parent, idx(&(i, a.0, a.1)));
            let y = find(&mut parent, idx(&(j, b.0, b.1)));
            parent[x] = y;
        }
    }
    // number classes so that the start of the slit (bottom-right of R1) comes first
    let mut label: BTreeMap<usize, usize> = BTreeMap::new();
    let start = find(&mut parent, idx(&(r1, 1, 0)));
    let end = find(&mut parent, idx(&(r1, 1, 1)));
    label.insert(start, 0);
    if end != start {
        label.insert(end, 1);
    }
    let mut out = BTreeMap::new();
    for c in &corners {
        let r = find(&mut parent, idx(c));
        let next = label.len();
        let l = *label.entry(r).or_insert(next);
        out.insert(*c, l);
    }
    (out, label.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::splitting::{demo_h2, prop_new};
    use crate::twist::make_pair;

    #[test]
    fn prop_new_normal_form() {
        let s = prop_new().splitting;
        let p = make_pair(&s, &Vec2::ints(1, 0), &Vec2::ints(3, -1)).unwrap();
        let f = build_normal_form(&s, &p).unwrap();
        assert_eq!(f.flat_area(), QuadExt::int(9));
        let areas: Vec<QuadExt> = f.pieces.iter().map(|p| p.area()).collect();
        assert_eq!(areas, vec![QuadExt::int(1), QuadExt::int(1), QuadExt::int(3), QuadExt::int(4)]);
        assert_eq!(f.n_zeros, 2);
        for a in f.cone_angles_over_pi() {
            assert!((a - 4.0).abs() < 1e-9, "{a}");
        }
    }

    #[test]
    fn h2_normal_form() {
        let e = demo_h2();
        let s = e.splitting;
        let p = make_pair(&s, e.v1.as_ref().unwrap(), e.v2.as_ref().unwrap()).unwrap();
        let f = build_normal_form(&s, &p).unwrap();
        assert_eq!(f.pieces.len(), 3);
        assert_eq!(f.gluing.get(&(2, Side::Top)), Some(&(2, Side::Bottom)));
        assert_eq!(f.n_zeros, 1);
        let a = f.cone_angles_over_pi();
        assert!((a[0] - 6.0).abs() < 1e-9, "{a:?}");
    }
}
