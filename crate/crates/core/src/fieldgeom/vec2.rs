use std::fmt;
use std::ops::{Add, Neg, Sub};

use rug::Integer;

use super::QuadExt;

/// A planar vector with coordinates in `Q(√d)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Vec2 {
    pub x: QuadExt,
    pub y: QuadExt,
}

impl Vec2 {
    pub fn new(x: QuadExt, y: QuadExt) -> Self {
        Vec2 { x, y }
    }

    pub fn ints(x: i64, y: i64) -> Self {
        Vec2 { x: QuadExt::int(x), y: QuadExt::int(y) }
    }

    pub fn zero() -> Self {
        Vec2::ints(0, 0)
    }

    pub fn is_zero(&self) -> bool {
        self.x.is_zero() && self.y.is_zero()
    }

    pub fn scale(&self, c: &QuadExt) -> Vec2 {
        Vec2 { x: &self.x * c, y: &self.y * c }
    }

    pub fn scale_int(&self, k: &Integer) -> Vec2 {
        Vec2 { x: self.x.mul_int(k), y: self.y.mul_int(k) }
    }

    pub fn scale_i64(&self, k: i64) -> Vec2 {
        self.scale_int(&Integer::from(k))
    }

    pub fn dot(&self, o: &Vec2) -> QuadExt {
        &self.x * &o.x + &self.y * &o.y
    }

    pub fn len_sq(&self) -> QuadExt {
        self.dot(self)
    }

    /// Largest field tag among the coordinates.
    pub fn field(&self) -> u64 {
        let fx = if self.x.is_rational() { 0 } else { self.x.d() };
        let fy = if self.y.is_rational() { 0 } else { self.y.d() };
        fx.max(fy)
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (super::to_float(&self.x, 53).value, super::to_float(&self.y, 53).value)
    }
}

/// `x1·y2 − x2·y1`.
pub fn cross(v: &Vec2, w: &Vec2) -> QuadExt {
    &v.x * &w.y - &w.x * &v.y
}

impl Add for &Vec2 {
    type Output = Vec2;
    fn add(self, o: &Vec2) -> Vec2 {
        Vec2 { x: &self.x + &o.x, y: &self.y + &o.y }
    }
}

impl Sub for &Vec2 {
    type Output = Vec2;
    fn sub(self, o: &Vec2) -> Vec2 {
        Vec2 { x: &self.x - &o.x, y: &self.y - &o.y }
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        &self + &o
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        &self - &o
    }
}

impl Neg for &Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2 { x: -&self.x, y: -&self.y }
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        -&self
    }
}

impl fmt::Display for Vec2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}
