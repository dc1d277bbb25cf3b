//! Exact arithmetic in `Q(√d)`, planar vectors, lattices and primitive-vector search.

mod approx;
mod lattice;
mod quad;
mod vec2;

pub use approx::{
    enumerate_small_cross, log2_abs, sci_from_log2, to_float, to_sci_string, Convergents, FloatApprox, QuadCf, SmallCrossStream,
};
pub use lattice::Lattice;
pub use quad::{square_free_part, QuadExt};
pub use vec2::{cross, Vec2};

/// Coordinates `(α, β)` of `v` in the basis of `l`.
pub fn coords_in_lattice(l: &Lattice, v: &Vec2) -> (QuadExt, QuadExt) {
    l.coords(v)
}

pub fn is_primitive(l: &Lattice, v: &Vec2) -> bool {
    l.is_primitive(v)
}

/// Tangent of the (unoriented, acute) angle between the lines spanned by `u` and `v`,
/// as the exact pair `(|cross|, |dot|)`.
pub fn tan_parts(u: &Vec2, v: &Vec2) -> (QuadExt, QuadExt) {
    (cross(u, v).abs(), u.dot(v).abs())
}

/// Exact test `angle(u, v) < eps` for lines, using `tan(angle) = |cross| / |dot|`.
pub fn line_angle_below(u: &Vec2, v: &Vec2, eps: &QuadExt) -> bool {
    let (c, d) = tan_parts(u, v);
    // tan is increasing on [0, π/2), and eps ≤ tan(eps)
    c < eps * &d
}
