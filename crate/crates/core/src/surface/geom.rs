//! Exact convex polygon clipping (Sutherland–Hodgman) and areas.

use crate::fieldgeom::{cross, QuadExt, Vec2};

/// Signed area (positive for counter-clockwise vertex order).
pub fn polygon_area(poly: &[Vec2]) -> QuadExt {
    let n = poly.len();
    let mut twice = QuadExt::zero();
    for i in 0..n {
        twice += &cross(&poly[i], &poly[(i + 1) % n]);
    }
    twice / QuadExt::int(2)
}

/// Intersection of two convex polygons; `clip` must be counter-clockwise.
pub fn convex_intersection(subject: &[Vec2], clip: &[Vec2]) -> Vec<Vec2> {
    let mut out: Vec<Vec2> = subject.to_vec();
    let n = clip.len();
    for i in 0..n {
        if out.is_empty() {
            break;
        }
        let a = &clip[i];
        let edge = &clip[(i + 1) % n] - a;
        let side = |p: &Vec2| cross(&edge, &(p - a));
        let input = std::mem::take(&mut out);
        let m = input.len();
        for j in 0..m {
            let p = &input[j];
            let q = &input[(j + 1) % m];
            let (sp, sq) = (side(p), side(q));
            let (p_in, q_in) = (sp.signum() >= 0, sq.signum() >= 0);
            if p_in {
                out.push(p.clone());
            }
            if p_in != q_in && sp.signum() != 0 && sq.signum() != 0 {
                let t = &sp / &(&sp - &sq);
                out.push(p + &(q - p).scale(&t));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sq(x0: i64, y0: i64, s: i64) -> Vec<Vec2> {
        vec![Vec2::ints(x0, y0), Vec2::ints(x0 + s, y0), Vec2::ints(x0 + s, y0 + s), Vec2::ints(x0, y0 + s)]
    }

    #[test]
    fn overlapping_squares() {
        let a = convex_intersection(&sq(0, 0, 2), &sq(1, 1, 2));
        assert_eq!(polygon_area(&a), QuadExt::int(1));
        let b = convex_intersection(&sq(0, 0, 1), &sq(1, 0, 1));
        assert!(polygon_area(&b).is_zero());
        let tri = vec![Vec2::ints(0, 0), Vec2::ints(2, 0), Vec2::ints(0, 2)];
        assert_eq!(polygon_area(&convex_intersection(&tri, &sq(0, 0, 1))), QuadExt::int(1));
    }
}
