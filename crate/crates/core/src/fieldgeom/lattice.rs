use std::fmt;

use rug::Integer;

use super::{cross, QuadExt, Vec2};
use crate::error::{Error, Result};

/// A rank-2 lattice `Z·b1 + Z·b2` in the plane.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Lattice {
    pub b1: Vec2,
    pub b2: Vec2,
}

impl Lattice {
    pub fn new(b1: Vec2, b2: Vec2) -> Result<Self> {
        if cross(&b1, &b2).is_zero() {
            return Err(Error::Degenerate("lattice basis vectors are parallel".into()));
        }
        Ok(Lattice { b1, b2 })
    }

    /// The standard lattice `Z²`.
    pub fn z2() -> Self {
        Lattice { b1: Vec2::ints(1, 0), b2: Vec2::ints(0, 1) }
    }

    pub fn ints(b1: (i64, i64), b2: (i64, i64)) -> Self {
        Lattice::new(Vec2::ints(b1.0, b1.1), Vec2::ints(b2.0, b2.1)).expect("independent basis")
    }

    pub fn det(&self) -> QuadExt {
        cross(&self.b1, &self.b2)
    }

    /// Covolume `|cross(b1, b2)|`, the area of the torus `R²/L`.
    pub fn coarea(&self) -> QuadExt {
        self.det().abs()
    }

    pub fn vector(&self, m: &Integer, n: &Integer) -> Vec2 {
        &self.b1.scale_int(m) + &self.b2.scale_int(n)
    }

    /// Real coordinates `(α, β)` with `v = α·b1 + β·b2`.
    pub fn coords(&self, v: &Vec2) -> (QuadExt, QuadExt) {
        let det = self.det();
        (cross(v, &self.b2) / &det, cross(&self.b1, v) / &det)
    }

    /// Integer coordinates of `v` if it lies in the lattice.
    pub fn int_coords(&self, v: &Vec2) -> Option<(Integer, Integer)> {
        let (a, b) = self.coords(v);
        Some((a.as_integer()?.clone(), b.as_integer()?.clone()))
    }

    pub fn contains(&self, v: &Vec2) -> bool {
        self.int_coords(v).is_some()
    }

    /// `v` lies in the lattice and is not a proper multiple of a lattice vector.
    pub fn is_primitive(&self, v: &Vec2) -> bool {
        match self.int_coords(v) {
            Some((m, n)) => m.gcd(&n) == 1,
            None => false,
        }
    }

    /// The primitive lattice vector positively proportional to `v`, when one exists.
    pub fn primitive_along(&self, v: &Vec2) -> Option<Vec2> {
        if v.is_zero() {
            return None;
        }
        let (a, b) = self.coords(v);
        let (m, n) = if b.is_zero() {
            (Integer::from(a.signum()), Integer::new())
        } else if a.is_zero() {
            (Integer::new(), Integer::from(b.signum()))
        } else {
            let r = (&a / &b).as_rational()?.clone();
            let (num, den) = r.into_numer_denom();
            // (m, n) ∝ (num, den) with the sign of b
            if b.signum() > 0 {
                (num, den)
            } else {
                (-num, -den)
            }
        };
        Some(self.vector(&m, &n))
    }

    /// A basis `{v, u}` of the lattice with `cross(v, u) > 0`, given primitive `v`.
    pub fn complete_basis(&self, v: &Vec2) -> Result<Vec2> {
        let (m, n) = self
            .int_coords(v)
            .ok_or_else(|| Error::NotPrimitive(format!("{v} is not in the lattice")))?;
        let (g, s, t) = m.clone().extended_gcd(n.clone(), Integer::new());
        if g != 1 {
            return Err(Error::NotPrimitive(format!("{v} is not primitive")));
        }
        // s·m + t·n = 1, so u = −t·b1 + s·b2 has coordinate determinant 1
        let u = self.vector(&(-t), &s);
        let u = if cross(v, &u).signum() > 0 { u } else { -u };
        Ok(u)
    }

    /// Same point set, possibly with a different basis.
    pub fn same_lattice(&self, other: &Lattice) -> bool {
        self.coarea() == other.coarea() && self.contains(&other.b1) && self.contains(&other.b2)
    }

    /// Lagrange–Gauss reduced, positively oriented basis of the same lattice.
    pub fn reduced(&self) -> Lattice {
        let (mut b1, mut b2) = (self.b1.clone(), self.b2.clone());
        let mut n1 = b1.len_sq();
        let mut n2 = b2.len_sq();
        if n2 < n1 {
            std::mem::swap(&mut b1, &mut b2);
            std::mem::swap(&mut n1, &mut n2);
        }
        loop {
            let mu = (b1.dot(&b2) / &n1).round();
            if mu != 0 {
                b2 = &b2 - &b1.scale_int(&mu);
                n2 = b2.len_sq();
            }
            if n2 < n1 {
                std::mem::swap(&mut b1, &mut b2);
                std::mem::swap(&mut n1, &mut n2);
            } else {
                break;
            }
        }
        if cross(&b1, &b2).signum() < 0 {
            b2 = -b2;
        }
        Lattice { b1, b2 }
    }

    pub fn map(&self, f: impl Fn(&Vec2) -> Vec2) -> Lattice {
        Lattice { b1: f(&self.b1), b2: f(&self.b2) }
    }
}

impl fmt::Display for Lattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "⟨{}, {}⟩", self.b1, self.b2)
    }
}
