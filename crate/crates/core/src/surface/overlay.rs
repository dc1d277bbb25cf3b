//! Area of the region exchanged between the tori by a twist, measured by laying the new
//! rectangle `R1'` over the strip covering the annulus `R1 ∪ R2`.

use serde::Serialize;

use super::geom::{convex_intersection, polygon_area};
use super::FlatSurface;
use crate::error::{Error, Result};
use crate::fieldgeom::{cross, QuadExt, Vec2};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OverlayReport {
    pub k: i64,
    /// `area(R1 Δ R1')`, exact.
    pub exchanged: QuadExt,
    /// `area(R1 ∩ R1')`.
    pub kept: QuadExt,
    /// Part of `R1'` that falls outside the annulus; zero for a genuine twist.
    pub outside: QuadExt,
}

/// Compares the surfaces before and after one twist along the same pair.
pub fn exchange_overlay(before: &FlatSurface, after: &FlatSurface) -> Result<OverlayReport> {
    let (v1, v2) = (&before.pair.v1, &before.pair.v2);
    if after.pair.v1 != *v1 || after.pair.v2 != *v2 {
        return Err(Error::Precondition("surfaces must share the twisting pair".into()));
    }
    let g = v1 + v2;
    let diff = &after.splitting.w - &before.splitting.w;
    let k = twist_multiple(&diff, &g)?;
    let w = &before.splitting.w;
    let wk = &after.splitting.w;
    // R1' in the strip: based on the bottom edge of R1, with sides v1 and w^k
    let base = -v1;
    let new_r1 = vec![base.clone(), Vec2::zero(), wk.clone(), &base + wk];
    let annulus_pieces = [(-v1, v1.clone(), w.clone()), (Vec2::zero(), v2.clone(), w.clone())];
    let span = k.unsigned_abs() as i64 + 2;
    let mut kept = QuadExt::zero();
    let mut covered = QuadExt::zero();
    for j in -span..=span {
        let shift = g.scale_i64(j);
        for (idx, (o, a, b)) in annulus_pieces.iter().enumerate() {
            let o = o + &shift;
            let quad = vec![o.clone(), &o + a, &(&o + a) + b, &o + b];
            let area = polygon_area(&convex_intersection(&new_r1, &quad));
            if idx == 0 {
                kept += &area;
            }
            covered += &area;
        }
    }
    let new_area = cross(v1, wk);
    let old_area = cross(v1, w);
    let outside = &new_area - &covered;
    let exchanged = &(&old_area + &new_area) - &kept.mul_int(&2.into());
    Ok(OverlayReport { k, exchanged, kept, outside })
}

fn twist_multiple(diff: &Vec2, g: &Vec2) -> Result<i64> {
    let bad = || Error::Precondition("surfaces are not related by a twist of this pair".into());
    if !cross(diff, g).is_zero() {
        return Err(bad());
    }
    let ratio = if !g.x.is_zero() { &diff.x / &g.x } else { &diff.y / &g.y };
    let k = ratio.as_integer().and_then(|k| k.to_i64()).ok_or_else(bad)?;
    if k == 0 {
        return Err(bad());
    }
    Ok(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::splitting::prop_new;
    use crate::surface::build_normal_form;
    use crate::twist::{apply_twist, make_pair};

    #[test]
    fn worked_example_overlay() {
        let s = prop_new().splitting;
        let p = make_pair(&s, &Vec2::ints(1, 0), &Vec2::ints(3, -1)).unwrap();
        let (t, _) = apply_twist(&s, &p, -1).unwrap();
        let f0 = build_normal_form(&s, &p).unwrap();
        let f1 = build_normal_form(&t, &p).unwrap();
        let r = exchange_overlay(&f0, &f1).unwrap();
        assert_eq!(r.k, -1);
        assert_eq!(r.kept, QuadExt::frac(1, 2));
        assert_eq!(r.exchanged, QuadExt::int(2));
        assert!(r.outside.is_zero());
    }
}
