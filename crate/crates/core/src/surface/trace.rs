//! Exact straight-line flow on the normal form.

use serde::Serialize;

use super::{Corner, FlatSurface, PieceKind, Side};
use crate::error::{Error, Result};
use crate::fieldgeom::{cross, QuadExt, Vec2};
use crate::twist::twisted_w;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Point {
    pub piece: usize,
    pub s: QuadExt,
    pub t: QuadExt,
}

impl Point {
    pub fn new(piece: usize, s: QuadExt, t: QuadExt) -> Self {
        Point { piece, s, t }
    }

    fn corner(&self) -> Option<Corner> {
        let bit = |x: &QuadExt| {
            if x.is_zero() {
                Some(0u8)
            } else if *x == QuadExt::one() {
                Some(1)
            } else {
                None
            }
        };
        Some((self.piece, bit(&self.s)?, bit(&self.t)?))
    }
}

/// One straight piece of a trajectory inside a single parallelogram.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Segment {
    pub piece: usize,
    pub from: (QuadExt, QuadExt),
    pub to: (QuadExt, QuadExt),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TraceEnd {
    /// Budget used up away from any zero.
    Interior(Point),
    /// Ran into a zero after flowing for time `lambda`.
    Corner { corner: Corner, lambda: QuadExt },
    /// The stop rule fired on entering a piece.
    Crossing { point: Point, lambda: QuadExt },
    StepLimit,
}

#[derive(Clone, Debug)]
pub struct TraceResult {
    pub segments: Vec<Segment>,
    pub end: TraceEnd,
}

/// Flows from `start` along `h` for time `budget` (displacement `budget·h`), or until a
/// zero is met, or until `stop(piece, side)` holds on entering `piece` through `side`.
pub fn trace(
    f: &FlatSurface,
    start: &Point,
    h: &Vec2,
    budget: Option<&QuadExt>,
    max_pieces: usize,
    stop: impl Fn(usize, Side) -> bool,
) -> TraceResult {
    let local: Vec<(QuadExt, QuadExt)> = f.pieces.iter().map(|p| p.local(h)).collect();
    let mut p = start.clone();
    let mut used = QuadExt::zero();
    let mut segments = Vec::new();
    for _ in 0..max_pieces {
        let (al, be) = &local[p.piece];
        let ls = exit_time(&p.s, al);
        let lt = exit_time(&p.t, be);
        let lexit = match (&ls, &lt) {
            (Some(a), Some(b)) => a.clone().min(b.clone()),
            (Some(a), None) => a.clone(),
            (None, Some(b)) => b.clone(),
            (None, None) => return TraceResult { segments, end: TraceEnd::StepLimit },
        };
        if let Some(total) = budget {
            let rem = total - &used;
            if rem <= lexit {
                let q = advance(&p, al, be, &rem);
                push(&mut segments, &p, &q);
                let end = match q.corner() {
                    Some(c) if f.vertex_class.contains_key(&c) => TraceEnd::Corner { corner: c, lambda: total.clone() },
                    _ => TraceEnd::Interior(q),
                };
                return TraceResult { segments, end };
            }
        }
        let q = advance(&p, al, be, &lexit);
        push(&mut segments, &p, &q);
        used += &lexit;
        if let Some(c) = q.corner() {
            return TraceResult { segments, end: TraceEnd::Corner { corner: c, lambda: used } };
        }
        let side = if ls.as_ref() == Some(&lexit) {
            if al.signum() > 0 {
                Side::Right
            } else {
                Side::Left
            }
        } else if be.signum() > 0 {
            Side::Top
        } else {
            Side::Bottom
        };
        let &(j, side2) = f.gluing.get(&(p.piece, side)).expect("closed surface");
        let (s, t) = match side2 {
            Side::Left => (QuadExt::zero(), q.t),
            Side::Right => (QuadExt::one(), q.t),
            Side::Bottom => (q.s, QuadExt::zero()),
            Side::Top => (q.s, QuadExt::one()),
        };
        p = Point::new(j, s, t);
        if stop(j, side2) {
            return TraceResult { segments, end: TraceEnd::Crossing { point: p, lambda: used } };
        }
    }
    TraceResult { segments, end: TraceEnd::StepLimit }
}

fn exit_time(x: &QuadExt, v: &QuadExt) -> Option<QuadExt> {
    match v.signum() {
        1 => Some((QuadExt::one() - x) / v),
        -1 => Some(-(x / v)),
        _ => None,
    }
}

fn advance(p: &Point, al: &QuadExt, be: &QuadExt, l: &QuadExt) -> Point {
    Point::new(p.piece, &p.s + &(al * l), &p.t + &(be * l))
}

fn push(segs: &mut Vec<Segment>, p: &Point, q: &Point) {
    if p.s != q.s || p.t != q.t {
        segs.push(Segment { piece: p.piece, from: (p.s.clone(), p.t.clone()), to: (q.s.clone(), q.t.clone()) });
    }
}

/// Whether some saddle connection has holonomy exactly `h`.
pub fn saddle_connection_exists(f: &FlatSurface, h: &Vec2) -> bool {
    saddle_connection_between(f, h, None, None).is_some()
}

/// Searches for a saddle connection with holonomy `h`, optionally constrained to start at
/// zero `from` and end at zero `to` (`0` is the start of the slit). Returns the start point
/// and the number of pieces crossed.
pub fn saddle_connection_between(f: &FlatSurface, h: &Vec2, from: Option<usize>, to: Option<usize>) -> Option<(Point, usize)> {
    connection_within(f, h, from, to, |_| true)
}

/// Whether the `k`-fold twisted slit `β^k` is a saddle connection: a segment of holonomy
/// `w^k` from the start of the slit to its end that never leaves the annulus `R1 ∪ R2`.
/// Other saddle connections with the same holonomy (common on rational surfaces) do not
/// count.
pub fn twisted_slit_exists(f: &FlatSurface, k: i64) -> bool {
    let h = twisted_w(&f.splitting, &f.pair, k);
    connection_within(f, &h, Some(0), Some(1), |kind| matches!(kind, PieceKind::R1 | PieceKind::R2)).is_some()
}

fn connection_within(
    f: &FlatSurface,
    h: &Vec2,
    from: Option<usize>,
    to: Option<usize>,
    allowed: impl Fn(PieceKind) -> bool,
) -> Option<(Point, usize)> {
    if h.is_zero() {
        return None;
    }
    let one = QuadExt::one();
    let max_pieces = crossing_bound(f, h);
    for (i, piece) in f.pieces.iter().enumerate() {
        if !allowed(piece.kind) {
            continue;
        }
        let (al, be) = piece.local(h);
        for (s0, t0) in [(0u8, 0u8), (1, 0), (1, 1), (0, 1)] {
            let cls = f.vertex_class[&(i, s0, t0)];
            if from.is_some_and(|c| c != cls) {
                continue;
            }
            let inward = |bit: u8, v: &QuadExt| if bit == 0 { v.signum() >= 0 } else { v.signum() <= 0 };
            if !inward(s0, &al) || !inward(t0, &be) {
                continue;
            }
            let start = Point::new(i, QuadExt::int(s0 as i64), QuadExt::int(t0 as i64));
            let r = trace(f, &start, h, Some(&one), max_pieces, |j, _| !allowed(f.pieces[j].kind));
            if let TraceEnd::Corner { corner, lambda } = &r.end {
                if *lambda == one && to.is_none_or(|c| f.vertex_class[corner] == c) {
                    return Some((start, r.segments.len()));
                }
            }
        }
    }
    None
}

/// Generous bound on the number of pieces a segment of holonomy `h` can cross.
fn crossing_bound(f: &FlatSurface, h: &Vec2) -> usize {
    let (hx, hy) = h.to_f64();
    let hl = hx.hypot(hy);
    let mut min_width = f64::INFINITY;
    for p in &f.pieces {
        let area = p.area().to_f64().abs();
        for e in [&p.a, &p.b] {
            let (x, y) = e.to_f64();
            min_width = min_width.min(area / x.hypot(y));
        }
    }
    let n = 4.0 * (hl / min_width + 2.0) * f.pieces.len() as f64;
    n.min(1e7) as usize
}

/// Rotation number (in `[0, 1)`) of the first return of the flow along `w^k` to the base of
/// `R1`, measured in units of `v1`, found by following one orbit.
pub fn first_return_rotation(f: &FlatSurface, k: i64) -> Result<QuadExt> {
    let h = twisted_w(&f.splitting, &f.pair, k);
    let up = cross(&f.pair.v1, &h);
    if up.is_zero() {
        return Err(Error::SigmaZero);
    }
    let (h, sign) = if up.signum() > 0 { (h, 1) } else { (-h, -1) };
    let r1 = f.piece_index(PieceKind::R1).expect("R1");
    for (n, dd) in [(1, 2), (1, 3), (2, 3), (1, 5), (2, 7), (3, 11), (5, 13), (7, 17)] {
        let s0 = QuadExt::frac(n, dd);
        let start = Point::new(r1, s0.clone(), QuadExt::zero());
        let r = trace(f, &start, &h, None, 1_000_000, |j, side| j == r1 && side == Side::Bottom);
        if let TraceEnd::Crossing { point, .. } = r.end {
            let shift = if sign > 0 { &point.s - &s0 } else { &s0 - &point.s };
            return Ok(&shift - &QuadExt::from(shift.floor()));
        }
    }
    Err(Error::InvalidResult("every probe orbit hit a zero".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::splitting::prop_new;
    use crate::surface::build_normal_form;
    use crate::twist::{make_pair, slope_and_rotation};

    fn surf() -> FlatSurface {
        let s = prop_new().splitting;
        let p = make_pair(&s, &Vec2::ints(1, 0), &Vec2::ints(3, -1)).unwrap();
        build_normal_form(&s, &p).unwrap()
    }

    #[test]
    fn slit_and_twisted_slits_are_saddle_connections() {
        let f = surf();
        assert!(saddle_connection_between(&f, &Vec2::ints(0, 1), Some(0), Some(1)).is_some());
        assert!(saddle_connection_between(&f, &Vec2::ints(-4, 2), Some(0), Some(1)).is_some());
        assert!(saddle_connection_between(&f, &Vec2::ints(-8, 3), Some(0), Some(1)).is_some());
        assert!(!saddle_connection_exists(&f, &Vec2::new(QuadExt::sqrt(2), QuadExt::one())));
    }

    #[test]
    fn twisted_slits_match_the_twist_rule() {
        let f = surf();
        assert!(twisted_slit_exists(&f, -1));
        assert!(twisted_slit_exists(&f, -2));
        assert!(!twisted_slit_exists(&f, 1));
        assert!(!twisted_slit_exists(&f, -3));
    }

    #[test]
    fn orbit_rotation_matches_formula() {
        let f = surf();
        for k in [-1, -2] {
            let (_, rho) = slope_and_rotation(&f.splitting, &f.pair, k).unwrap();
            let frac = &rho - &QuadExt::from(rho.floor());
            assert_eq!(first_return_rotation(&f, k).unwrap(), frac, "k = {k}");
        }
    }
}
