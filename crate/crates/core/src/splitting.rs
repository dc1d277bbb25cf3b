//! Splittings `(L1, L2, w)`: two flat tori glued along slits of holonomy `w`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fieldgeom::{cross, Lattice, QuadExt, Vec2};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Stratum {
    /// Two simple zeroes: both tori are genuine.
    H11,
    /// One double zero: the second torus is degenerate (a cylinder closed up along `w`).
    H2,
}

impl fmt::Display for Stratum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stratum::H11 => "H11",
            Stratum::H2 => "H2",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Splitting {
    pub l1: Lattice,
    pub l2: Lattice,
    pub w: Vec2,
    pub stratum: Stratum,
}

/// One named check of a validity report.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub checks: Vec<Check>,
}

impl ValidityReport {
    pub fn is_valid(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    fn push(&mut self, name: &str, pass: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.into(), pass, detail: detail.into() });
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }
}

impl fmt::Display for ValidityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "[{}] {}: {}", if c.pass { "ok" } else { "FAIL" }, c.name, c.detail)?;
        }
        Ok(())
    }
}

/// Basis completion of a primitive `v ∈ L` adapted to the slit, with the cylinder data.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CylinderFrame {
    /// The primitive vector, oriented so that `cross(v, w) > 0`.
    pub v: Vec2,
    /// Completion with `{v, u}` a positively oriented basis of `L`.
    pub u: Vec2,
    /// `u − w`: holonomy across the cylinder.
    pub v0: Vec2,
    /// `cross(v0, v)`; minus the height of the cylinder times `|v|`.
    pub theta: QuadExt,
}

/// When `w = c·v` for a primitive lattice vector `v`, returns `c`.
pub fn rational_multiple(l: &Lattice, w: &Vec2) -> Option<QuadExt> {
    let v = l.primitive_along(w)?;
    let c = if v.x.is_zero() { &w.y / &v.y } else { &w.x / &v.x };
    Some(c)
}

impl Splitting {
    pub fn new(l1: Lattice, l2: Lattice, w: Vec2, stratum: Stratum) -> Self {
        Splitting { l1, l2, w, stratum }
    }

    pub fn lattice(&self, side: u8) -> &Lattice {
        match side {
            1 => &self.l1,
            2 => &self.l2,
            _ => panic!("side must be 1 or 2"),
        }
    }

    pub fn area(&self, side: u8) -> QuadExt {
        self.lattice(side).coarea()
    }

    pub fn total_area(&self) -> QuadExt {
        self.area(1) + self.area(2)
    }

    /// Field tag of the data (0 when everything is rational).
    pub fn field(&self) -> u64 {
        [&self.l1.b1, &self.l1.b2, &self.l2.b1, &self.l2.b2, &self.w]
            .iter()
            .map(|v| v.field())
            .max()
            .unwrap_or(0)
    }

    /// Exact check of every structural invariant.
    pub fn validate(&self) -> ValidityReport {
        let mut r = ValidityReport::default();
        r.push("w_nonzero", !self.w.is_zero(), format!("w = {}", self.w));
        for side in [1u8, 2] {
            let a = self.area(side);
            r.push(&format!("area{side}_positive"), a.signum() > 0, format!("A{side} = {a}"));
        }
        if !r.is_valid() {
            return r;
        }
        let slit_ok = |l: &Lattice| match rational_multiple(l, &self.w) {
            Some(c) if c >= QuadExt::one() => (false, format!("w = {c}·v with v primitive: slit closes up")),
            Some(c) => (true, format!("w = {c}·v with v primitive, c < 1")),
            None => (true, "w is not parallel to a lattice vector".to_string()),
        };
        let (ok, det) = slit_ok(&self.l1);
        r.push("slit_embeds_in_T1", ok, det);
        match self.stratum {
            Stratum::H11 => {
                let (ok, det) = slit_ok(&self.l2);
                r.push("slit_embeds_in_T2", ok, det);
            }
            Stratum::H2 => {
                let p = self.l2.is_primitive(&self.w);
                r.push("w_primitive_in_L2", p, if p { "w is primitive in L2" } else { "w must be a primitive vector of L2" });
            }
        }
        r
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let r = self.validate();
        if r.is_valid() {
            Ok(())
        } else {
            let msg: Vec<String> = r.failures().iter().map(|c| format!("{}: {}", c.name, c.detail)).collect();
            Err(Error::InvalidSplitting(msg.join("; ")))
        }
    }

    /// `w` is a positive multiple of a vector of `L_side`.
    pub fn is_rational_in(&self, side: u8) -> bool {
        let (a, b) = self.lattice(side).coords(&self.w);
        if a.is_zero() || b.is_zero() {
            return true;
        }
        (&a / &b).is_rational()
    }

    pub fn is_irrational(&self) -> bool {
        !self.is_rational_in(1) || !self.is_rational_in(2)
    }

    /// Exchanges the two tori (only meaningful in H(1,1)).
    pub fn swapped(&self) -> Splitting {
        Splitting { l1: self.l2.clone(), l2: self.l1.clone(), w: self.w.clone(), stratum: self.stratum }
    }

    /// Applies the linear map with columns `(m11, m21)`, `(m12, m22)` to every vector.
    pub fn transformed(&self, m: &[QuadExt; 4]) -> Splitting {
        let f = |v: &Vec2| Vec2 { x: &m[0] * &v.x + &m[1] * &v.y, y: &m[2] * &v.x + &m[3] * &v.y };
        Splitting { l1: self.l1.map(f), l2: self.l2.map(f), w: f(&self.w), stratum: self.stratum }
    }

    /// Cylinder frame of a primitive `v ∈ L1`; see [`frame_on`].
    pub fn cylinder_frame(&self, v1: &Vec2) -> Result<CylinderFrame> {
        frame_on(&self.l1, &self.w, v1, false).map_err(|e| match e {
            Error::CrossTooLarge(_) => Error::CrossTooLarge(1),
            e => e,
        })
    }
}

/// Cylinder frame of a primitive `v ∈ l` relative to the slit `w`.
///
/// `v` is oriented so that `cross(v, w) > 0` and `u` is the completion with
/// `cross(v0, w) / cross(v, w) ∈ [0, 1)`. A zero-height cylinder is an error unless
/// `allow_degenerate` is set (the closed curve of an H(2) degenerate torus).
pub fn frame_on(l: &Lattice, w: &Vec2, v: &Vec2, allow_degenerate: bool) -> Result<CylinderFrame> {
    if !l.is_primitive(v) {
        return Err(Error::NotPrimitive(format!("{v} is not primitive in {l}")));
    }
    let c = cross(v, w);
    if c.is_zero() {
        return Err(Error::ParallelToW);
    }
    let v = if c.signum() > 0 { v.clone() } else { -v };
    let cvw = c.abs();
    let u = l.complete_basis(&v)?;
    let shift = (cross(&u, w) / &cvw).floor();
    let u = &u - &v.scale_int(&shift);
    let v0 = &u - w;
    let theta = cross(&v0, &v);
    match theta.signum() {
        s if s < 0 => {}
        0 if allow_degenerate => {}
        _ => return Err(Error::CrossTooLarge(0)),
    }
    Ok(CylinderFrame { v, u, v0, theta })
}

/// A splitting together with distinguished vectors used by the worked examples.
#[derive(Clone, Debug)]
pub struct Example {
    pub name: String,
    pub splitting: Splitting,
    pub v1: Option<Vec2>,
    pub v2: Option<Vec2>,
    pub v2p: Option<Vec2>,
}

fn q(s: &str) -> QuadExt {
    s.parse().expect("literal")
}

/// `L1 = Z × 2Z`, `L2 = ⟨(3,−1), (4,1)⟩`, `w = (0,1)`.
pub fn prop_new() -> Example {
    prop_new_with(QuadExt::int(0))
}

/// The same data with the second basis vector of `L1` stretched to `(0, 2 + δ)`.
pub fn prop_new_perturbed(delta: QuadExt) -> Example {
    let mut e = prop_new_with(delta);
    e.name = "prop-new-perturbed".into();
    e
}

fn prop_new_with(delta: QuadExt) -> Example {
    let l1 = Lattice::new(Vec2::ints(1, 0), Vec2::new(QuadExt::int(0), QuadExt::int(2) + delta)).expect("basis");
    let l2 = Lattice::ints((3, -1), (4, 1));
    Example {
        name: "prop-new".into(),
        splitting: Splitting::new(l1, l2, Vec2::ints(0, 1), Stratum::H11),
        v1: Some(Vec2::ints(1, 0)),
        v2: Some(Vec2::ints(3, -1)),
        v2p: Some(Vec2::ints(4, 1)),
    }
}

/// `(Z², Z², (0, α))`: the slit torus double cover.
pub fn slit_torus(alpha: QuadExt) -> Example {
    Example {
        name: "slit-torus".into(),
        splitting: Splitting::new(Lattice::z2(), Lattice::z2(), Vec2::new(QuadExt::int(0), alpha), Stratum::H11),
        v1: Some(Vec2::ints(1, 0)),
        v2: Some(Vec2::ints(1, 0)),
        v2p: None,
    }
}

/// `(Z², Z², (1, √2))`, irrational in both tori.
pub fn demo_irrational() -> Example {
    Example {
        name: "demo-irrational".into(),
        splitting: Splitting::new(Lattice::z2(), Lattice::z2(), Vec2::new(QuadExt::int(1), QuadExt::sqrt(2)), Stratum::H11),
        v1: Some(Vec2::ints(5, 7)),
        v2: Some(Vec2::ints(5, 7)),
        v2p: None,
    }
}

/// `(Z², ⟨(1,√2), (1,0)⟩, (1,√2))` in H(2), irrational in `L1`.
pub fn demo_h2() -> Example {
    let w = Vec2::new(QuadExt::int(1), QuadExt::sqrt(2));
    let l2 = Lattice::new(w.clone(), Vec2::ints(1, 0)).expect("basis");
    Example {
        name: "demo-h2".into(),
        splitting: Splitting::new(Lattice::z2(), l2, w, Stratum::H2),
        v1: Some(Vec2::ints(1, 1)),
        v2: Some(Vec2::ints(1, 0)),
        v2p: None,
    }
}

pub const EXAMPLE_NAMES: &[&str] = &["prop-new", "prop-new-perturbed", "slit-torus", "demo-irrational", "demo-h2"];

/// Builds a named example. `slit-torus` takes `α` (default `√2 − 1`) and
/// `prop-new-perturbed` takes `δ` (default `√2`).
pub fn build_example(name: &str, param: Option<&QuadExt>) -> Result<Example> {
    let ex = match name {
        "prop-new" => prop_new(),
        "prop-new-perturbed" => prop_new_perturbed(param.cloned().unwrap_or_else(|| QuadExt::sqrt(2))),
        "slit-torus" => slit_torus(param.cloned().unwrap_or_else(|| q("-1+√2"))),
        "demo-irrational" => demo_irrational(),
        "demo-h2" => demo_h2(),
        other => return Err(Error::UnknownExample(other.to_string())),
    };
    Ok(ex)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validate_examples() {
        assert!(demo_irrational().splitting.validate().is_valid());
        let closed = Splitting::new(Lattice::z2(), Lattice::z2(), Vec2::ints(1, 0), Stratum::H11);
        let r = closed.validate();
        assert!(!r.is_valid());
        assert!(!r.checks.iter().find(|c| c.name == "slit_embeds_in_T1").unwrap().pass);
        let h2 = Splitting::new(Lattice::z2(), Lattice::ints((0, 1), (1, 0)), Vec2::ints(0, 1), Stratum::H2);
        // the slit (0,1) closes up in T1 = Z², so only the L2 condition holds here
        let r = h2.validate();
        assert!(r.checks.iter().find(|c| c.name == "w_primitive_in_L2").unwrap().pass);
        assert!(demo_h2().splitting.validate().is_valid());
    }

    #[test]
    fn half_slit_is_fine() {
        let s = Splitting::new(Lattice::z2(), Lattice::z2(), Vec2::new(QuadExt::int(0), QuadExt::frac(1, 2)), Stratum::H11);
        assert!(s.validate().is_valid());
        let s = Splitting::new(Lattice::z2(), Lattice::z2(), Vec2::ints(2, 2), Stratum::H11);
        assert!(!s.validate().is_valid());
    }

    #[test]
    fn rationality() {
        let s = slit_torus(q("-1+√2")).splitting;
        assert!(s.is_rational_in(1) && s.is_rational_in(2) && !s.is_irrational());
        let s = demo_irrational().splitting;
        assert!(!s.is_rational_in(1) && s.is_irrational());
        let s = prop_new().splitting;
        assert!(s.is_rational_in(1) && s.is_rational_in(2));
    }

    #[test]
    fn frames() {
        let s = prop_new().splitting;
        let f = s.cylinder_frame(&Vec2::ints(1, 0)).unwrap();
        assert_eq!(f.u, Vec2::ints(0, 2));
        assert_eq!(f.v0, Vec2::ints(0, 1));
        assert_eq!(f.theta, QuadExt::int(-1));
        let f = s.cylinder_frame(&Vec2::ints(-1, 0)).unwrap();
        assert_eq!(f.v, Vec2::ints(1, 0));

        let s2 = Splitting::new(Lattice::z2(), Lattice::z2(), Vec2::new(QuadExt::int(0), QuadExt::frac(1, 2)), Stratum::H11);
        let f = s2.cylinder_frame(&Vec2::ints(1, 0)).unwrap();
        assert_eq!(f.u, Vec2::ints(0, 1));
        assert_eq!(f.v0, Vec2::new(QuadExt::int(0), QuadExt::frac(1, 2)));
        assert_eq!(f.theta, QuadExt::frac(-1, 2));

        assert_eq!(s.cylinder_frame(&Vec2::ints(0, 2)).unwrap_err(), Error::ParallelToW);
        assert_eq!(s.cylinder_frame(&Vec2::ints(2, 0)).unwrap_err(), Error::NotPrimitive(format!("{} is not primitive in {}", Vec2::ints(2, 0), s.l1)));
        let f = s.cylinder_frame(&Vec2::ints(1, 2)).unwrap();
        assert_eq!(f.theta, cross(&f.v0, &f.v));
        assert!(f.theta.signum() < 0);
    }

    #[test]
    fn frame_of_tall_lattice_vector() {
        // (0,2) is primitive in Z × 2Z even though it is not primitive in Z²
        let l1 = Lattice::ints((1, 0), (0, 2));
        let w = Vec2::new(QuadExt::frac(1, 2), QuadExt::frac(1, 3));
        let s = Splitting::new(l1.clone(), Lattice::z2(), w, Stratum::H11);
        let f = s.cylinder_frame(&Vec2::ints(0, 2)).unwrap();
        assert!(l1.is_primitive(&f.v));
        assert_eq!(f.v, Vec2::ints(0, -2));
        assert_eq!(cross(&f.v, &f.u), QuadExt::int(2));
        assert_eq!(f.u.y, QuadExt::int(0));
    }

    #[test]
    fn example_areas() {
        let s = prop_new().splitting;
        assert_eq!(s.area(1), QuadExt::int(2));
        assert_eq!(s.area(2), QuadExt::int(7));
        assert!(build_example("nope", None).is_err());
    }
}
