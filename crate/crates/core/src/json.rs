//! JSON forms. Integers travel as decimal strings so no precision is ever lost.
//!
//! * scalar: `{"a":["num","den"],"b":["num","den"],"d":D}` (a plain string such as
//!   `"1/2+3√5"` is also accepted on input)
//! * vector: `{"x":…,"y":…}`, lattice: `{"b1":…,"b2":…}`
//! * splitting: `{"stratum":"H11"|"H2","L1":…,"L2":…,"w":…,"d":D}`

use rug::{Integer, Rational};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::fieldgeom::{Lattice, QuadExt, Vec2};
use crate::splitting::{Splitting, Stratum};

/// Version of the on-disk formats.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct QuadRepr {
    a: [String; 2],
    b: [String; 2],
    d: u64,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum QuadIn {
    Obj(QuadRepr),
    Text(String),
}

fn rat_to_pair(q: &Rational) -> [String; 2] {
    [q.numer().to_string(), q.denom().to_string()]
}

fn pair_to_rat(p: &[String; 2]) -> std::result::Result<Rational, String> {
    let n: Integer = p[0].trim().parse().map_err(|_| format!("bad integer {:?}", p[0]))?;
    let d: Integer = p[1].trim().parse().map_err(|_| format!("bad integer {:?}", p[1]))?;
    if d == 0 {
        return Err("zero denominator".into());
    }
    Ok(Rational::from((n, d)))
}

impl Serialize for QuadExt {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        QuadRepr { a: rat_to_pair(self.a()), b: rat_to_pair(self.b()), d: self.d() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for QuadExt {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        match QuadIn::deserialize(de)? {
            QuadIn::Obj(r) => {
                let a = pair_to_rat(&r.a).map_err(D::Error::custom)?;
                let b = pair_to_rat(&r.b).map_err(D::Error::custom)?;
                if r.d == 0 && b != 0 {
                    return Err(D::Error::custom("b must be zero when d = 0"));
                }
                let (_, f) = crate::fieldgeom::square_free_part(r.d);
                if r.d > 1 && f != r.d {
                    return Err(D::Error::custom(format!("d = {} is not square-free", r.d)));
                }
                Ok(QuadExt::new(a, b, r.d))
            }
            QuadIn::Text(t) => t.parse().map_err(|e: Error| D::Error::custom(e.to_string())),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct VecRepr {
    x: QuadExt,
    y: QuadExt,
}

impl Serialize for Vec2 {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        VecRepr { x: self.x.clone(), y: self.y.clone() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Vec2 {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let r = VecRepr::deserialize(de)?;
        Ok(Vec2::new(r.x, r.y))
    }
}

#[derive(Serialize, Deserialize)]
struct LatticeRepr {
    b1: Vec2,
    b2: Vec2,
}

impl Serialize for Lattice {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        LatticeRepr { b1: self.b1.clone(), b2: self.b2.clone() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Lattice {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let r = LatticeRepr::deserialize(de)?;
        Lattice::new(r.b1, r.b2).map_err(|e| D::Error::custom(e.to_string()))
    }
}

#[derive(Serialize, Deserialize)]
struct SplittingRepr {
    stratum: Stratum,
    #[serde(rename = "L1")]
    l1: Lattice,
    #[serde(rename = "L2")]
    l2: Lattice,
    w: Vec2,
    d: u64,
}

impl Serialize for Splitting {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SplittingRepr {
            stratum: self.stratum,
            l1: self.l1.clone(),
            l2: self.l2.clone(),
            w: self.w.clone(),
            d: self.field(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Splitting {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let r = SplittingRepr::deserialize(de)?;
        let s = Splitting::new(r.l1, r.l2, r.w, r.stratum);
        let f = s.field();
        if f != 0 && f != r.d {
            return Err(D::Error::custom(format!("declared d = {} but data lives in Q(√{f})", r.d)));
        }
        Ok(s)
    }
}

/// Parses a splitting from any JSON document that carries the splitting fields
/// (extra fields such as certificates are ignored).
pub fn splitting_from_str(text: &str) -> Result<Splitting> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

pub fn to_value<T: Serialize>(x: &T) -> serde_json::Value {
    serde_json::to_value(x).expect("serialisable")
}
